#!/usr/bin/env python

import os
from setuptools import setup, find_packages

README = os.path.join(os.path.dirname(os.path.abspath(__file__)), "README.rst")

with open(README) as f:
    _LONG_DESCRIPTION= f.read()

setup(
    name='ipddp',
    version='0.1',
    description='Interior-point differential dynamic programming for constrained trajectory optimization',
    long_description=_LONG_DESCRIPTION,
    author='ipddp',
    license='Apache 2.0',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'Intended Audience :: Developers',
        'Operating System :: OS Independent',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Programming Language :: Python :: 3.5',
        'Programming Language :: Python :: 3.6'
    ],
    keywords='optimal-control DDP interior-point trajectory-optimization',
    packages=find_packages(exclude=['tests', 'utils']),
    install_requires=[
        'numpy >= 1.14.0',
        'scipy >= 1.0.0',
        'protobuf >= 3.1.0',
        'six >= 1.10.0',
        'tqdm >= 4.19.0'
    ],
    # reference_optima.json ships with the benchmarks package
    package_data={
        'ipddp.benchmarks': ['reference_optima.json'],
    },
    data_files=[],
    entry_points={
        'console_scripts': [
            'ipddp = ipddp._cli:main',
        ],
    },
)
