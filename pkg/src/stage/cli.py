"""Command-line batch interface: parse, extract, features, constraints, order, eval.

All subcommands read their inputs completely and validate them before any
output is written.  Output is line-delimited JSON in input order; run
metadata (timings, counts) goes to stderr only.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional

from stage.bridge import Relation, StageConstraint, dummy_constraints, features, generate_constraints
from stage.chart import enumerate_trees, parse_all, select_tree
from stage.compose import SemanticError
from stage.evalkit import (
    CorpusError, Document, extraction_report, ordering_counts, read_corpus, score_counts,
)
from stage.grammar import GrammarError, load_grammar, tokenize
from stage.ilp import (
    ALL_RELATIONS, DEFAULT_ALPHA, MODES, InfeasibleError, OrderingProblem, stage_conflict,
    argmax_assignment, as_fraction, load_transitivity_table, objective_score, solve,
)
from stage.normalize import parse_dct
from stage.pipeline import extract, find_cues
from stage.timecore import BareLength, render


class ValidationError(Exception):
    """Bad input content; reported with ``path:line`` and exit status 2."""


# -- record I/O ----------------------------------------------------------------

def _read_lines(path: str) -> list[str]:
    if path == "-":
        return sys.stdin.read().splitlines()
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def _json_records(path: str) -> list[tuple[int, dict]]:
    out = []
    for lineno, line in enumerate(_read_lines(path), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict):
            raise ValidationError(f"{path}:{lineno}: expected a JSON object")
        out.append((lineno, rec))
    return out


def _corpus(path: str) -> list[Document]:
    try:
        return list(read_corpus(_read_lines(path)))
    except CorpusError as exc:
        raise ValidationError(f"{path}:{exc}") from None


def _dump(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, ensure_ascii=False)


def _emit(records: Iterable[dict], out: Optional[str]) -> None:
    if out is None:
        for rec in records:
            sys.stdout.write(_dump(rec) + "\n")
        sys.stdout.flush()
        return
    with open(out, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(_dump(rec) + "\n")


def _fraction_text(x: Fraction) -> str:
    return str(Fraction(x))


def _pool_map(fn: Callable, items: list, jobs: int) -> Iterator:
    """Ordered map; a process pool when ``jobs`` > 1."""
    if jobs <= 1 or len(items) < 2:
        return map(fn, items)
    pool = ProcessPoolExecutor(max_workers=jobs)

    def gen():
        with pool:
            yield from pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs)))
    return gen()


# -- cue inputs ----------------------------------------------------------------

def _cues(args) -> list[tuple[int, str, object]]:
    """(line, text, dct) per cue from a plain-text or JSONL file."""
    default_dct = _dct(args.dct, "--dct")
    if args.format == "text":
        return [(n, line.strip(), default_dct)
                for n, line in enumerate(_read_lines(args.input), 1) if line.strip()]
    cues = []
    for lineno, rec in _json_records(args.input):
        if not isinstance(rec.get("text"), str):
            raise ValidationError(f"{args.input}:{lineno}: record needs a string 'text'")
        dct = _dct(rec["dct"], f"{args.input}:{lineno}") if rec.get("dct") else default_dct
        cues.append((lineno, rec["text"], dct))
    return cues


def _dct(value, where: str):
    try:
        return parse_dct(value)
    except ValueError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def _parse_job(job):
    (line, text, _), grammar_path, all_trees = job
    grammar = load_grammar(grammar_path)
    tokens = tokenize(text, grammar)
    rec = {"line": line, "text": text, "tokens": [t.surface for t in tokens]}
    if not tokens:
        rec["tree"] = None
        return rec
    chart = parse_all(tokens, grammar)
    best = select_tree(chart)
    rec["tree"] = best.bracketed() if best else None
    if all_trees:
        rec["trees"] = [t.bracketed() for t in enumerate_trees(chart, (0, len(tokens)))]
    return rec


def _extract_job(job):
    (line, text, dct), grammar_path = job
    rec = {"line": line, "text": text}
    try:
        found = extract(text, dct, load_grammar(grammar_path))
    except SemanticError as exc:
        found = None
        rec["error"] = str(exc)
    if found is None:
        rec.update(expression=None, resolved=None, type=None, features=None, span=None)
        return rec
    expr = found.expression
    rec.update(span=list(found.span), surface=found.surface, type=type(expr).__name__,
               expression=render(expr), resolved=render(found.resolved),
               features=None if isinstance(expr, BareLength) else features(expr).record())
    return rec


def cmd_parse(args) -> int:
    cues = _cues(args)
    jobs = [(cue, args.grammar, args.trees) for cue in cues]
    _emit(_pool_map(_parse_job, jobs, args.jobs), args.output)
    return 0


def cmd_extract(args) -> int:
    cues = _cues(args)
    _emit(_pool_map(_extract_job, [(cue, args.grammar) for cue in cues], args.jobs), args.output)
    return 0


# -- document commands -------------------------------------------------------------

def _event_expressions(doc: Document, grammar_path):
    grammar = load_grammar(grammar_path)
    out = []
    for ev in doc.events:
        cue = doc.cue_text(ev)
        if cue is None:
            continue
        try:
            found = extract(cue, doc.dct, grammar)
        except SemanticError:
            continue
        if found is not None and not isinstance(found.resolved, BareLength):
            out.append((ev.id, found.resolved))
    return out


def _features_job(job):
    doc, grammar_path = job
    return [{"doc_id": doc.doc_id, "event_id": eid, **features(expr).record()}
            for eid, expr in _event_expressions(doc, grammar_path)]


def _constraints_job(job):
    doc, grammar_path, with_dummies = job
    events = _event_expressions(doc, grammar_path)
    out = generate_constraints(events)
    if with_dummies:
        cues = [c.resolved for c in find_cues(doc.text, doc.dct, load_grammar(grammar_path))]
        timexes = [(f"t{k}", expr) for k, expr in
                   enumerate((e for e in cues if not isinstance(e, BareLength)), 1)]
        out = out + dummy_constraints(timexes, events)
    return [{"doc_id": doc.doc_id, **c.record()} for c in out]


_DUMMY_ID = re.compile(r"t\d+")


def _flatten(chunks) -> Iterator[dict]:
    for chunk in chunks:
        yield from chunk


def cmd_features(args) -> int:
    docs = _corpus(args.corpus)
    jobs = [(d, args.grammar) for d in docs]
    _emit(_flatten(_pool_map(_features_job, jobs, args.jobs)), args.output)
    return 0


def cmd_constraints(args) -> int:
    docs = _corpus(args.corpus)
    if args.dummies:
        for doc in docs:
            clash = sorted(e.id for e in doc.events if _DUMMY_ID.fullmatch(e.id))
            if clash:
                raise ValidationError(f"{args.corpus}: {doc.doc_id}: event id {clash[0]} "
                                      "is reserved for time-expression nodes")
    jobs = [(d, args.grammar, args.dummies) for d in docs]
    _emit(_flatten(_pool_map(_constraints_job, jobs, args.jobs)), args.output)
    return 0


# -- ordering ------------------------------------------------------------------------

def _relations(text: str) -> tuple[Relation, ...]:
    try:
        rels = tuple(Relation(r.strip()) for r in text.split(",") if r.strip())
    except ValueError as exc:
        raise ValidationError(f"--relations: {exc}") from None
    return rels


def _load_problems(args) -> list[tuple[str, OrderingProblem]]:
    relations = _relations(args.relations)
    try:
        table = load_transitivity_table(args.tc_table)
    except ValueError as exc:
        raise ValidationError(f"{args.tc_table}: {exc}") from None
    try:
        alpha = as_fraction(args.alpha)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"--alpha: not a number: {args.alpha!r}") from None

    probs: dict = {}
    order: list = []
    for lineno, rec in _json_records(args.probs):
        where = f"{args.probs}:{lineno}"
        try:
            doc, x, y, dist = rec["doc_id"], rec["source"], rec["target"], rec["probs"]
        except KeyError as exc:
            raise ValidationError(f"{where}: missing field {exc}") from None
        if not all(isinstance(v, str) for v in (doc, x, y)) or not isinstance(dist, dict):
            raise ValidationError(f"{where}: doc_id, source, target must be strings and probs an object")
        try:
            dist = {Relation(r): as_fraction(p) for r, p in dist.items()}
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise ValidationError(f"{where}: bad probabilities: {exc}") from None
        if doc not in probs:
            probs[doc] = {}
            order.append(doc)
        probs[doc][(x, y)] = (dist, where)

    stage: dict = {}
    if args.stage:
        for lineno, rec in _json_records(args.stage):
            where = f"{args.stage}:{lineno}"
            try:
                doc, x, y = rec["doc_id"], rec["source"], rec["target"]
                rel = Relation(rec["relation"])
                StageConstraint(x, y, rel)
            except KeyError as exc:
                raise ValidationError(f"{where}: missing field {exc}") from None
            except ValueError as exc:
                raise ValidationError(f"{where}: {exc}") from None
            if doc not in probs:
                raise ValidationError(f"{where}: document {doc!r} has no probabilities")
            stage.setdefault(doc, {})[(x, y)] = (rel, where)

    problems = []
    skipped = 0
    for doc in order:
        pairs = probs[doc]
        links = stage.get(doc, {})
        nodes = {n for pair in list(pairs) + list(links) for n in pair}
        # time-expression nodes carry the ids that `constraints --dummies` hands out
        dummies = sorted(n for n in nodes if _DUMMY_ID.fullmatch(n))
        events = sorted(nodes - set(dummies))
        # event-event records describe feature-level evidence, not dummy pairs
        kept = {pair: v for pair, v in links.items() if pair[0] in dummies or pair[1] in dummies}
        skipped += len(links) - len(kept)
        links = kept
        try:
            prob = OrderingProblem(
                events, {pair: dist for pair, (dist, _) in pairs.items()},
                relations=relations, dummies=dummies,
                stage_relations={pair: rel for pair, (rel, _) in links.items()},
                mode=args.mode, alpha=alpha, transitivity=table)
        except ValueError as exc:
            raise ValidationError(f"{args.probs}: document {doc!r}: {exc}") from None
        if args.mode == "hard":
            broken = stage_conflict(prob)
            if broken:
                raise ValidationError(f"{args.stage}: document {doc!r}: stage relations "
                                      f"violate transitivity: {broken}")
        problems.append((doc, prob))
    if skipped:
        print(f"stage: ignored {skipped} event-event stage records", file=sys.stderr)
    return problems


def _order_job(job):
    (doc_id, prob), exact_limit = job
    rec = {"doc_id": doc_id}
    base = argmax_assignment(prob)
    rec["argmax_objective"] = _fraction_text(objective_score(base, prob))
    try:
        sol = solve(prob, exact_limit=exact_limit)
    except InfeasibleError as exc:
        rec["error"] = str(exc)
        return rec
    rec["objective"] = _fraction_text(sol.objective)
    rec["optimal"] = sol.optimal
    rec["assignment"] = [{"source": x, "target": y, "relation": sol.assignment[(x, y)].value}
                         for x, y in sorted(sol.assignment)]
    return rec


def cmd_order(args) -> int:
    problems = _load_problems(args)
    status = 0
    records = _pool_map(_order_job, [(p, args.exact_limit) for p in problems], args.jobs)

    def checked():
        nonlocal status
        for rec in records:
            if "error" in rec:
                status = 1
                print(f"{rec['doc_id']}: {rec['error']}", file=sys.stderr)
            yield rec
    _emit(checked(), args.output)
    return status


# -- evaluation ----------------------------------------------------------------------

def _system_spans(path: str) -> dict:
    spans = {}
    for lineno, rec in _json_records(path):
        try:
            spans[rec["doc_id"]] = [tuple(s) for s in rec["spans"]]
            if not all(len(s) == 2 and all(isinstance(v, int) for v in s) for s in spans[rec["doc_id"]]):
                raise ValueError
        except (KeyError, TypeError, ValueError):
            raise ValidationError(f"{path}:{lineno}: expected {{doc_id, spans: [[start, end], ...]}}") from None
    return spans


def cmd_eval_extraction(args) -> int:
    docs = _corpus(args.corpus)
    if args.system:
        spans = _system_spans(args.system)
    else:
        grammar = load_grammar(args.grammar)
        spans = {d.doc_id: [c.span for c in find_cues(d.text, d.dct, grammar)] for d in docs}
    report = extraction_report(docs, spans)
    rows = [{"doc_id": doc_id, "gold": list(g), "system": list(s) if s else None, "verdict": v.value}
            for doc_id, g, s, v in report.verdicts]
    _emit(rows + [{"summary": report.record()}], args.output)
    print(f"{'cues':>8} {'=':>6} {'+':>6} {'=/+':>8} {'+ share':>8}", file=sys.stderr)
    print(f"{report.n:>8} {report.exact:>6} {report.extended:>6} "
          f"{100 * report.matched:>7.1f}% {100 * report.extended_share:>7.1f}%", file=sys.stderr)
    return 0


def cmd_eval_ordering(args) -> int:
    docs = {d.doc_id: d for d in _corpus(args.gold)}
    preds = {}
    for lineno, rec in _json_records(args.pred):
        if "assignment" not in rec:
            continue
        try:
            preds[rec["doc_id"]] = {(a["source"], a["target"]): Relation(a["relation"])
                                    for a in rec["assignment"]}
        except (KeyError, TypeError, ValueError):
            raise ValidationError(f"{args.pred}:{lineno}: bad assignment record") from None
    rows, totals = [], [0, 0, 0]
    for doc_id in sorted(docs):
        counts = ordering_counts(preds.get(doc_id, {}), docs[doc_id].tlinks)
        totals = [a + b for a, b in zip(totals, counts)]
        if counts[2]:
            rows.append({"doc_id": doc_id, **score_counts(*counts).record()})
    total = score_counts(*totals)
    _emit(rows + [{"summary": total.record()}], args.output)
    print(f"P {total.precision:.3f}  R {total.recall:.3f}  F1 {total.f1:.3f}  "
          f"({total.correct}/{total.gold} gold links)", file=sys.stderr)
    return 0


# -- argument parsing ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stage", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grammar", default=None, help="grammar file (default: $STAGE_GRAMMAR or bundled)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("-o", "--output", default=None, help="output path (default: stdout)")

    cue = argparse.ArgumentParser(add_help=False)
    cue.add_argument("input", help="one cue per line, or JSONL with --format jsonl ('-' for stdin)")
    cue.add_argument("--format", choices=("text", "jsonl"), default="text")
    cue.add_argument("--dct", default=None, help="document date, ISO format")

    sp = sub.add_parser("parse", parents=[common, cue], help="best parse tree per cue")
    sp.add_argument("--trees", action="store_true", help="also list every full-span derivation")
    sp.set_defaults(func=cmd_parse)
    sub.add_parser("extract", parents=[common, cue], help="compose and normalize each cue"
                   ).set_defaults(func=cmd_extract)

    sp = sub.add_parser("features", parents=[common], help="boolean features per event")
    sp.add_argument("corpus")
    sp.set_defaults(func=cmd_features)
    sp = sub.add_parser("constraints", parents=[common], help="certain relations between events")
    sp.add_argument("corpus")
    sp.add_argument("--dummies", action="store_true", help="add time-expression nodes t1, t2, ...")
    sp.set_defaults(func=cmd_constraints)

    sp = sub.add_parser("order", parents=[common], help="constrained decoding of pair labels")
    sp.add_argument("--probs", required=True, help="JSONL {doc_id, source, target, probs}")
    sp.add_argument("--stage", default=None, help="JSONL constraint records for dummy pairs")
    sp.add_argument("--mode", choices=MODES, default="none")
    sp.add_argument("--alpha", default=str(DEFAULT_ALPHA))
    sp.add_argument("--exact-limit", type=int, default=12)
    sp.add_argument("--tc-table", default=None, help="transitivity table file")
    sp.add_argument("--relations", default=",".join(r.value for r in ALL_RELATIONS))
    sp.set_defaults(func=cmd_order)

    ev = sub.add_parser("eval", help="scoring").add_subparsers(dest="what", required=True)
    sp = ev.add_parser("extraction", parents=[common], help="relaxed-match extraction report")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--system", default=None, help="JSONL {doc_id, spans}; default: run the extractor")
    sp.set_defaults(func=cmd_eval_extraction)
    sp = ev.add_parser("ordering", parents=[common], help="micro P/R/F1 against gold links")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--gold", required=True)
    sp.set_defaults(func=cmd_eval_ordering)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "jobs", 1) < 1:
            raise ValidationError("--jobs must be at least 1")
        if getattr(args, "output", None):
            Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        load_grammar(getattr(args, "grammar", None))
        return args.func(args)
    except ValidationError as exc:
        print(f"stage: validation error: {exc}", file=sys.stderr)
        return 2
    except GrammarError as exc:
        print(f"stage: grammar error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"stage: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
