"""Time the exact solver on synthetic documents.

    python scripts/bench_solver.py --events 10 --seeds 5 --kind timeline
    python scripts/bench_solver.py --events 8 --kind uniform

``timeline`` documents have classifier-like probabilities peaked around a
hidden timeline; ``uniform`` draws every distribution at random, which is
the hardest case for the bound.
"""
import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from oracles import random_distribution, timeline_document  # noqa: E402
from stage.ilp import ALL_RELATIONS, OrderingProblem, argmax_assignment, objective_score, solve, violations  # noqa: E402


def uniform_document(n, rng):
    events = [f"e{i}" for i in range(n)]
    probs = {(events[i], events[j]): random_distribution(rng, ALL_RELATIONS, grain=100)
             for i in range(n) for j in range(i + 1, n)}
    return OrderingProblem(events, probs)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=10)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--kind", choices=("timeline", "uniform"), default="timeline")
    ap.add_argument("--noise", type=float, default=0.2)
    args = ap.parse_args()

    print(f"{'seed':>4} {'secs':>7} {'nodes':>8} {'optimal':>7} {'objective':>10} {'argmax':>10}")
    worst = 0.0
    for seed in range(args.seeds):
        rng = random.Random(seed)
        if args.kind == "timeline":
            prob = timeline_document(args.events, rng, args.noise)
        else:
            prob = uniform_document(args.events, rng)
        start = time.perf_counter()
        sol = solve(prob)
        secs = time.perf_counter() - start
        worst = max(worst, secs)
        assert not violations(sol.assignment, prob)
        upper = objective_score(argmax_assignment(prob), prob)
        print(f"{seed:>4} {secs:>7.2f} {sol.nodes:>8} {str(sol.optimal):>7} "
              f"{float(sol.objective):>10.4f} {float(upper):>10.4f}")
    print(f"worst {worst:.2f}s")


if __name__ == "__main__":
    main()
