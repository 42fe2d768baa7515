"""Trace, summary and solution files. Every file is written atomically."""
from __future__ import print_function

import csv
import os
import tempfile

import numpy as np
import six
from google.protobuf import json_format
from google.protobuf import struct_pb2

TRACE_HEADER = ['iter', 'J', 'E_J', 'mu', 'F_inf', 'step', 'gamma_reg', 'min_eig']


def _format(value):
  if value is None:
    return ''
  return '%.17g' % (value)


def _atomic_write(path, write, mode='w'):
  directory = os.path.dirname(os.path.abspath(path))
  if not os.path.isdir(directory):
    os.makedirs(directory)
  fd, tmp = tempfile.mkstemp(dir=directory, prefix='.' + os.path.basename(path), suffix='.tmp')
  try:
    kwargs = {'newline': ''} if ('b' not in mode and six.PY3) else {}
    with os.fdopen(fd, mode, **kwargs) as f:
      write(f)
    os.replace(tmp, path)
  except BaseException:
    if os.path.exists(tmp):
      os.remove(tmp)
    raise


def trace_rows(trace):
  rows = []
  for rec in trace:
    rows.append([str(rec.iteration), _format(rec.J), _format(rec.E_J), _format(rec.mu),
                 _format(rec.F_inf), _format(rec.step), _format(rec.gamma_reg),
                 _format(rec.min_eig)])
  return rows


def write_trace(path, trace):
  def write(f):
    writer = csv.writer(f, lineterminator='\n')
    writer.writerow(TRACE_HEADER)
    writer.writerows(trace_rows(trace))
  _atomic_write(path, write)


def read_trace(path):
  """Rows of a trace file as dicts; empty fields become None."""
  rows = []
  with open(path) as f:
    reader = csv.reader(f)
    header = next(reader)
    if header != TRACE_HEADER:
      raise ValueError('%s is not a trace file (header %s)' % (path, ','.join(header)))
    for row in reader:
      rec = {}
      for key, value in zip(header, row):
        if value == '':
          rec[key] = None
        elif key == 'iter':
          rec[key] = int(value)
        else:
          rec[key] = float(value)
      rows.append(rec)
  return rows


def _plain(value):
  # Struct accepts only builtin scalars, lists and dicts
  if isinstance(value, dict):
    return dict((str(k), _plain(v)) for k, v in value.items())
  if isinstance(value, (list, tuple, np.ndarray)):
    return [_plain(v) for v in value]
  if isinstance(value, (bool, np.bool_)):
    return bool(value)
  if isinstance(value, (six.integer_types, float, np.integer, np.floating)):
    return float(value)
  return value


def to_json(document):
  struct = struct_pb2.Struct()
  struct.update(_plain(document))
  return json_format.MessageToJson(struct, indent=2, sort_keys=True)


def _restore(value):
  # Struct stores every number as a double
  if isinstance(value, dict):
    return dict((k, _restore(v)) for k, v in value.items())
  if isinstance(value, list):
    return [_restore(v) for v in value]
  if isinstance(value, float) and value.is_integer():
    return int(value)
  return value


def from_json(text):
  """Parse a document written by to_json. Integral numbers come back as int."""
  struct = struct_pb2.Struct()
  json_format.Parse(text, struct)
  return _restore(json_format.MessageToDict(struct))


def write_document(path, document):
  text = to_json(document)
  _atomic_write(path, lambda f: f.write(text + '\n'))


def read_document(path):
  with open(path) as f:
    return from_json(f.read())


def save_solution(path, solution, problem_id):
  w = solution.iterate
  arrays = {
    'x': w.x, 'u': w.u, 's': w.s,
    'mu': np.array(solution.mu),
    'variant': np.array(solution.variant),
    'problem': np.array(problem_id),
    'converged': np.array(solution.converged),
  }
  if w.y is not None:
    arrays['y'] = w.y
  if solution.multipliers is not None:
    arrays['lambda'] = solution.multipliers.lambdas
  _atomic_write(path, lambda f: np.savez(f, **arrays), mode='wb')


def load_solution(path):
  with np.load(path) as data:
    out = dict((key, data[key]) for key in data.files)
  for key in ('variant', 'problem'):
    out[key] = str(out[key])
  out['mu'] = float(out['mu'])
  out['converged'] = bool(out['converged'])
  return out
