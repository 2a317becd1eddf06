"""Acceptance criteria, one test each; every test also records a PASS/FAIL line."""
import json
import random
import time
from fractions import Fraction

import pytest

from conftest import ACCEPTANCE
from oracles import (
    brute_force, feasible, interval_relation, random_problem, score, timeline_document, timeline_spans,
)
from stage.bridge import Relation, derive_relation, dummy_constraints, features
from stage.cli import main
from stage.evalkit import (
    MatchVerdict, default_whitelist, extraction_report, load_minicorpus, relaxed_match,
)
from stage.grammar import load_grammar
from stage.ilp import ALL_RELATIONS, OrderingProblem, hinge_loss, solve
from stage.pipeline import extract, find_cues
from stage.timecore import (
    PRESENT, UNKNOWN, BareLength, Instant, Interval, Known, Range, Relative, UnitKind, length_from,
    render,
)


def verdict(number, title, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'}  {number:>2}. {title}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def test_01_walkthrough():
    start = time.perf_counter()
    ago = extract("three days ago")
    before = extract("before three days ago")
    elapsed = time.perf_counter() - start
    expected = Instant(Relative(PRESENT, -72, length_from(3, UnitKind.DAY)))
    ok = (ago.expression == expected
          and ago.expression.position.dist == length_from(3, UnitKind.DAY)
          and render(ago.expression) == "Instant(anchor=present,dist=Length(3,day))"
          and features(ago.expression).as_tuple() == (True, True, True, False)
          and before.expression == Interval(UNKNOWN, expected.position, None)
          and before.expression.length is None
          and elapsed < 1.0)
    verdict(1, "walkthrough fidelity", ok, f"{elapsed:.3f}s")


def test_02_abc_constraints():
    dct = "2001-01-10"
    a, b, c = (extract(t, dct).resolved for t in ("three days ago", "two days ago", "one week ago"))
    rels = {("A", "B"): derive_relation(a, b), ("A", "C"): derive_relation(a, c)}
    ok = rels == {("A", "B"): Relation.BEFORE, ("A", "C"): Relation.AFTER}
    verdict(2, "A/B/C constraints", ok, ", ".join(f"A {r.value} {y}" for (_, y), r in rels.items()))


def test_03_table_paradigm():
    kinds = [type(extract(t).expression) for t in
             ("four hours", "in four hours", "for four hours", "within four hours")]
    ok = kinds == [BareLength, Instant, Interval, Range]
    verdict(3, "four-hours paradigm", ok, " ".join(k.__name__ for k in kinds))


def _oracle_sweep():
    rng = random.Random(20240601)
    results = []
    for k in range(200):
        prob = random_problem(rng, 4, ("none", "hard", "soft")[k % 3])
        best, _ = brute_force(prob)
        try:
            sol = solve(prob)
        except ValueError:
            sol = None
        results.append((prob, best, sol))
    return results


@pytest.fixture(scope="module")
def sweep():
    start = time.perf_counter()
    results = _oracle_sweep()
    return results, time.perf_counter() - start


def test_04_oracle_equivalence(sweep):
    results, elapsed = sweep
    mismatches = sum(1 for _, best, sol in results
                     if (sol.objective if sol else None) != best)
    infeasible = sum(1 for _, best, _ in results if best is None)
    ok = mismatches == 0 and elapsed < 60
    verdict(4, "ILP equals exhaustive enumeration", ok,
            f"200 problems, {mismatches} mismatches, {infeasible} infeasible hard, {elapsed:.1f}s")


def test_05_feasibility_audit(sweep):
    results, _ = sweep
    audited = [(prob, sol) for prob, _, sol in results if sol is not None]
    bad = sum(1 for prob, sol in audited
              if not feasible(sol.assignment, prob) or score(sol.assignment, prob) != sol.objective)
    verdict(5, "feasibility audit", bad == 0, f"{len(audited)} solutions, {bad} violations")


def test_06_hinge():
    rng = random.Random(6)
    nonzero = 0
    for _ in range(100):
        prob = random_problem(rng, 4)
        gold = {p: rng.choice(prob.relations) for p in prob.pairs}
        nonzero += hinge_loss(gold, gold, prob) != 0
    pair = OrderingProblem(["x", "y"], {("x", "y"): {Relation.BEFORE: Fraction(1, 5),
                                                      Relation.AFTER: Fraction(4, 5)}},
                           relations=(Relation.BEFORE, Relation.AFTER))
    value = hinge_loss({("x", "y"): Relation.AFTER}, {("x", "y"): Relation.BEFORE}, pair)
    ok = nonzero == 0 and abs(float(value) - 1.6) < 1e-12
    verdict(6, "hinge loss", ok, f"pred=gold nonzero on {nonzero}/100, single pair {value}")


def _soft_instance(rng):
    """Dummy nodes for random certain time expressions, events attached to others."""
    def random_expr():
        start = rng.randint(0, 60)
        kind = rng.random()
        if kind < 0.4:
            return Instant(Known(start))
        if kind < 0.7:
            return Interval(Known(start), Known(start + rng.randint(1, 12)), None)
        return Range(Known(start), Known(start + rng.randint(6, 30)))
    timexes = [(f"t{k}", random_expr()) for k in range(rng.randint(1, 3))]
    events = [(f"e{k}", random_expr()) for k in range(rng.randint(1, 3))]
    stage = {(c.source, c.target): c.relation for c in dummy_constraints(timexes, events)}
    uniform = {r: Fraction(1, len(ALL_RELATIONS)) for r in ALL_RELATIONS}
    ids = [e for e, _ in events]
    probs = {(x, y): uniform for i, x in enumerate(ids) for y in ids[i + 1:]}
    return OrderingProblem(ids, probs, dummies=[t for t, _ in timexes], stage_relations=stage,
                           mode="soft", alpha=Fraction(9, 10))


def test_07_soft_dominance():
    rng = random.Random(7)
    total = honoured = 0
    for _ in range(100):
        prob = _soft_instance(rng)
        sol = solve(prob)
        for pair, rel in prob.stage.items():
            total += 1
            honoured += sol.assignment[pair] == rel
    verdict(7, "soft constraints dominate uniform probabilities", total > 0 and honoured == total,
            f"{honoured}/{total} stage pairs")


def test_08_relaxed_match():
    wl = default_whitelist()
    cases = [("Monday", "the Monday", MatchVerdict.EXTENDED),
             ("December", "in December", MatchVerdict.EXTENDED),
             ("Monday", "Monday", MatchVerdict.EXACT),
             ("Monday", "Tuesday", MatchVerdict.MISS)]
    examples_ok = all(relaxed_match(g, s, wl) is v for g, s, v in cases)
    corpus = load_minicorpus()
    grammar = load_grammar()
    spans = {d.doc_id: [c.span for c in find_cues(d.text, d.dct, grammar)] for d in corpus}
    report = extraction_report(corpus, spans, wl)
    ok = examples_ok and report.n == 20 and report.matched == 1.0
    verdict(8, "relaxed match", ok,
            f"examples {'ok' if examples_ok else 'wrong'}, mini-corpus =/+ {100 * report.matched:.0f}%"
            f", + {100 * report.extended_share:.0f}%")


def _external_corpus(tmp_path, n_docs=12, n_events=6):
    """Gold documents and classifier-like probabilities, as an outside corpus would supply them."""
    rng = random.Random(9)
    gold, probs = [], []
    for d in range(n_docs):
        hidden = timeline_spans(n_events, rng)
        prob = timeline_document(n_events, rng, noise=0.3, spans=hidden)
        ids = list(prob.events)
        text = " ".join(ids)
        events = [{"id": e, "span": [3 * k, 3 * k + 2]} for k, e in enumerate(ids)]
        links = []
        for i, x in enumerate(ids):
            for j in range(i + 1, len(ids)):
                rel = interval_relation(hidden[i], hidden[j])
                if rel is not None:
                    links.append({"source": x, "target": ids[j], "relation": rel.value})
        gold.append({"doc_id": f"x{d}", "text": text, "events": events, "tlinks": links})
        for (x, y), dist in prob.pair_probs.items():
            probs.append({"doc_id": f"x{d}", "source": x, "target": y,
                          "probs": {r.value: str(p) for r, p in dist.items()}})
    gpath, ppath = tmp_path / "gold.jsonl", tmp_path / "probs.jsonl"
    gpath.write_text("".join(json.dumps(r) + "\n" for r in gold), encoding="utf-8")
    ppath.write_text("".join(json.dumps(r) + "\n" for r in probs), encoding="utf-8")
    return gpath, ppath


# Objective(ILP) >= Objective(argmax) cannot hold whenever the per-pair argmax breaks
# transitivity: the argmax maximises the same sum with fewer constraints.
@pytest.mark.xfail(strict=True, reason="the unconstrained argmax bounds the constrained optimum from above")
def test_09_external_probabilities(tmp_path):
    gpath, ppath = _external_corpus(tmp_path)
    pred = tmp_path / "pred.jsonl"
    report = tmp_path / "report.jsonl"
    ran = (main(["order", "--probs", str(ppath), "-o", str(pred)]) == 0
           and main(["eval", "ordering", "--pred", str(pred), "--gold", str(gpath), "-o", str(report)]) == 0)
    records = [json.loads(line) for line in pred.read_text().splitlines()]
    below = [r["doc_id"] for r in records
             if Fraction(r["objective"]) < Fraction(r["argmax_objective"])]
    f1 = json.loads(report.read_text().splitlines()[-1])["summary"]["f1"]
    verdict(9, "order + eval ordering end to end; ILP objective >= argmax objective",
            ran and not below,
            f"ran={'yes' if ran else 'no'}, F1 {f1:.3f}, ILP below argmax on "
            f"{len(below)}/{len(records)} documents")


def test_10_performance():
    grammar = load_grammar()
    rng = random.Random(10)
    words = sorted(w for w in grammar.lexicon if " " not in w) + ["three", "1999", "ago", "12"]
    base = ["three days ago", "before three days ago", "for an hour sometime next week",
            "within four hours", "from November to February", "since last year", "on Monday",
            "later in the week"]
    cues = [rng.choice(base) if k % 2 else " ".join(rng.choice(words) for _ in range(rng.randint(1, 8)))
            for k in range(1000)]
    start = time.perf_counter()
    for cue in cues:
        extract(cue, "2001-01-10", grammar)
    parse_time = time.perf_counter() - start
    prob = timeline_document(10, random.Random(0))
    start = time.perf_counter()
    sol = solve(prob)
    solve_time = time.perf_counter() - start
    ok = parse_time < 5 and solve_time < 5 and sol.optimal
    verdict(10, "performance", ok,
            f"1000 cues {parse_time:.2f}s, 10-event document proven optimal in {solve_time:.2f}s")
