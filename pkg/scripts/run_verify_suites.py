"""Run every verification suite at its default size and print a summary table.

    python scripts/run_verify_suites.py --seed 0 --out results/suites.json
"""

import argparse
import json
from pathlib import Path

from gdoi.randmat import InstanceConfig
from gdoi.serialize import dumps
from gdoi.suites import DEFAULT_COUNTS, SUITES, run_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--scale", type=float, default=1.0, help="multiply every default instance count")
    ap.add_argument("--unitary", action="store_true", help="use unitary bases for the norms suite")
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    results = {}
    for name in SUITES:
        count = max(1, round(DEFAULT_COUNTS[name] * args.scale))
        cfg = InstanceConfig(unitary=True) if name == "norms" and args.unitary else None
        rep = run_suite(name, count=count, seed=args.seed, cfg=cfg)
        results[name] = rep.to_dict(timing=True)
        status = "PASS" if rep.passed else "FAIL"
        print(f"{name:<14}{status}  n={count:<5d} max residual {rep.max_residual:9.3e}  {rep.seconds:6.2f}s")
        if rep.summary:
            print(f"{'':<14}{json.dumps(rep.summary, default=str)}")

    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(dumps(results))


if __name__ == "__main__":
    main()
