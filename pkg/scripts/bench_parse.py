"""Throughput of the cue pipeline (tokenize, chart, select, compose, resolve)."""
import argparse
import random
import time

from stage.grammar import load_grammar
from stage.pipeline import extract

SAMPLES = ["three days ago", "before three days ago", "for an hour sometime next week",
           "within four hours", "from November to February", "since last year", "on Monday",
           "later in the week", "in the first quarter", "by Friday"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cues", type=int, default=1000)
    ap.add_argument("--max-tokens", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    grammar = load_grammar()
    rng = random.Random(args.seed)
    words = sorted(w for w in grammar.lexicon if " " not in w) + ["three", "1999", "12"]
    cues = [rng.choice(SAMPLES) if k % 2 else
            " ".join(rng.choice(words) for _ in range(rng.randint(1, args.max_tokens)))
            for k in range(args.cues)]
    start = time.perf_counter()
    found = sum(extract(c, "2001-01-10", grammar) is not None for c in cues)
    secs = time.perf_counter() - start
    print(f"{args.cues} cues in {secs:.2f}s ({args.cues / secs:.0f}/s), {found} interpreted")


if __name__ == "__main__":
    main()
