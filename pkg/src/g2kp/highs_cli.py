"""Minimal stand-in for the ``highs`` command line program.

Accepts the subset of options used by the default command template and
writes a HiGHS solution file, so :class:`~g2kp.backend.CommandBackend` can be
exercised without a HiGHS binary on the path::

    python -m g2kp.highs_cli --model_file m.lp --solution_file m.sol
"""

from __future__ import annotations

import argparse
import sys


def main(argv=None) -> int:
    import highspy

    ap = argparse.ArgumentParser(prog="g2kp.highs_cli")
    ap.add_argument("--model_file", required=True)
    ap.add_argument("--solution_file", required=True)
    ap.add_argument("--time_limit", type=float, default=None)
    ap.add_argument("--random_seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--read_solution_file", default=None, help="'name value' warm start")
    ap.add_argument("--mip_rel_gap", type=float, default=1e-6)
    args = ap.parse_args(argv)

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if h.readModel(args.model_file) == highspy.HighsStatus.kError:
        print(f"cannot read {args.model_file}", file=sys.stderr)
        return 1
    if args.time_limit is not None:
        h.setOptionValue("time_limit", args.time_limit)
    if args.random_seed is not None:
        h.setOptionValue("random_seed", args.random_seed)
    if args.threads is not None:
        h.setOptionValue("threads", args.threads)
    h.setOptionValue("mip_rel_gap", args.mip_rel_gap)
    if args.read_solution_file:
        lp = h.getLp()
        index = {name: k for k, name in enumerate(lp.col_names_)}
        values = [0.0] * lp.num_col_
        with open(args.read_solution_file) as fh:
            for line in fh:
                parts = line.split()
                if len(parts) == 2 and parts[0] in index:
                    values[index[parts[0]]] = float(parts[1])
        sol = highspy.HighsSolution()
        sol.col_value = values
        sol.value_valid = True
        h.setSolution(sol)
    h.run()
    h.writeSolution(args.solution_file, 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
