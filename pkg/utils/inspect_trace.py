from __future__ import print_function

import sys

from ipddp._trace import read_trace


def inspect(trace_csv, output_txt_file):
    rows = read_trace(trace_csv)
    if len(rows) == 0:
        raise ValueError("Trace file {} has no iterations".format(trace_csv))

    mu_drops = [rows[i]['iter'] for i in range(1, len(rows)) if rows[i]['mu'] < rows[i - 1]['mu']]
    regularized = [r['iter'] for r in rows if r['gamma_reg'] > 0]
    last = rows[-1]

    with open(output_txt_file, 'w') as f:
        f.write("trace: {}\n".format(trace_csv))
        f.write("iterations: {}\n".format(len(rows)))
        f.write("final J: {:.10g}\n".format(last['J']))
        f.write("final E_J: {}\n".format('n/a' if last['E_J'] is None else '{:.3f}'.format(last['E_J'])))
        f.write("final mu: {:.3e}\n".format(last['mu']))
        f.write("final F_inf: {:.3e}\n".format(last['F_inf']))
        f.write("mu reductions at iterations: {}\n".format(", ".join(str(i) for i in mu_drops)))
        f.write("iterations with gamma_reg > 0: {}\n".format(len(regularized)))
        if len(regularized) > 0:
            f.write("last regularized iteration: {}\n".format(regularized[-1]))
        eigs = [r['min_eig'] for r in rows if r['min_eig'] is not None]
        if len(eigs) > 0:
            f.write("min eigenvalue of Qhat_uu: first {:.3e}, last {:.3e}\n".format(eigs[0], eigs[-1]))


if __name__ == "__main__":
    """
    Write a summary of an iteration trace to a text file.
    Summary includes the iteration count, final objective, residual and mu,
    the iterations where mu was reduced and the regularization usage.

    Arguments
    ----------
    - path to the trace .csv written by `ipddp solve` or `ipddp bench`
    - path to the output .txt file where the summary is written

    Usage
    ----------
    python inspect_trace.py pendulum_feasible-ipddp_trace.csv summary.txt

    """
    if len(sys.argv) != 3:
        raise ValueError("Script expects two arguments. " +
              "Usage: python inspect_trace.py /path/to/trace.csv /path/to/the/output/text/file.txt")
    inspect(sys.argv[1], sys.argv[2])
