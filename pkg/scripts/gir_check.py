"""Getting-it-right check of the sampler, and of a broken copy that never updates W.

    python3 scripts/gir_check.py --nodes 5 --rounds 100000
"""
import argparse

import numpy as np

from zipsbm.netcore import AttributeVector
from zipsbm.validation import getting_it_right


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=5)
    ap.add_argument("--rounds", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--supervised", action="store_true", help="two alternating attribute classes")
    ap.add_argument("--threshold", type=float, default=5.0)
    args = ap.parse_args()

    c = AttributeVector(np.arange(args.nodes) % 2) if args.supervised else None
    for label, skip in (("sampler", False), ("W frozen", True)):
        rep = getting_it_right(args.nodes, args.rounds, c=c, seed=args.seed, skip_step2=skip)
        verdict = "PASS" if rep.passed(args.threshold) else "FAIL"
        print(f"== {label}: max|z| = {rep.max_abs_z():.2f} -> {verdict}")
        print(rep.table())


if __name__ == "__main__":
    main()
