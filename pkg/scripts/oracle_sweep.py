"""Compare the solver with exhaustive enumeration on many small random problems.

    python scripts/oracle_sweep.py --problems 1000 --max-nodes 4
"""
import argparse
import random
import sys
import time
from collections import Counter
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from oracles import brute_force, feasible, random_problem  # noqa: E402
from stage.ilp import InfeasibleError, solve  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--problems", type=int, default=500)
    ap.add_argument("--max-nodes", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    tally = Counter()
    start = time.perf_counter()
    for k in range(args.problems):
        mode = ("none", "hard", "soft")[k % 3]
        prob = random_problem(rng, args.max_nodes, mode)
        best, _ = brute_force(prob)
        try:
            sol = solve(prob)
        except InfeasibleError:
            tally["infeasible" if best is None else "wrongly infeasible"] += 1
            continue
        if sol.objective != best or not feasible(sol.assignment, prob):
            tally["mismatch"] += 1
            print(f"problem {k} ({mode}): solver {sol.objective}, enumeration {best}")
        else:
            tally[f"ok {mode}"] += 1
    print(dict(sorted(tally.items())), f"{time.perf_counter() - start:.1f}s")
    return 1 if tally["mismatch"] or tally["wrongly infeasible"] else 0


if __name__ == "__main__":
    sys.exit(main())
