"""Time the compiled kernels against the numpy fallback, plus the scaling runs.

    python3 benchmarks/bench_backends.py            # full sizes
    python3 benchmarks/bench_backends.py --quick    # a few seconds
"""
from __future__ import annotations

import argparse
import json

from sigdr import _backend
from sigdr.bench import backend_comparison, format_bench, scaling


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--quick", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-scaling", action="store_true", help="backend comparison only")
    p.add_argument("--json", help="also write the raw timings here")
    args = p.parse_args(argv)

    if "cython" not in _backend.available():
        print("compiled extension not built; only the numpy fallback is available")
    res = {"backend": _backend.BACKEND, "backends": backend_comparison(args.seed, args.quick),
           "scaling": {} if args.no_scaling else scaling(args.seed, args.quick)}
    print(format_bench(res))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(res, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
