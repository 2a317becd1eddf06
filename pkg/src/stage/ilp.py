"""Exact constrained inference for document-level event ordering.

Maximises the summed relation probabilities over event pairs subject to one
label per pair and the transitivity table, optionally forcing (hard mode)
or rewarding with weight ``alpha`` (soft mode) the relations derived from
time expressions for dummy time-expression nodes.

The search is a depth-first branch and bound over pairs with
arc-consistency propagation through transitivity triples.  Each pair's
weight is split over the triangles containing it and every triangle
contributes its best consistent labelling; the split is tuned once at the
root.  A greedy dive plus node-wise local search supplies the first
incumbent.  Weights are scaled to integers so objectives are exact rationals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from itertools import combinations
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from stage.bridge import Relation

ALL_RELATIONS = (Relation.AFTER, Relation.BEFORE, Relation.SIMULTANEOUS,
                 Relation.INCLUDES, Relation.IS_INCLUDED, Relation.VAGUE)
DEFAULT_ALPHA = Fraction(9, 10)
PROB_TOLERANCE = Fraction(1, 10**6)
MODES = ("none", "hard", "soft")

Pair = tuple[str, str]
Triple = tuple[Relation, Relation, Relation]


class InfeasibleError(ValueError):
    pass


def as_fraction(x) -> Fraction:
    """Exact rational from ints, Fractions, decimal strings or floats (via their repr)."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"not a finite number: {x}")
        return Fraction(repr(x))
    return Fraction(str(x))


def parse_relations(names: Sequence[str]) -> tuple[Relation, ...]:
    return tuple(Relation(n) for n in names)


def read_transitivity_table(text: str) -> frozenset:
    triples = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        if len(line) != 3:
            raise ValueError(f"line {lineno}: a triple needs three relations")
        triples.add(tuple(Relation(r) for r in line))
    return frozenset(triples)


def load_transitivity_table(path: Optional[str] = None) -> frozenset:
    if path is None:
        text = resources.files("stage").joinpath("data/transitivity.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return read_transitivity_table(text)


def default_transitivity_table(relations: Sequence[Relation] = ALL_RELATIONS) -> frozenset:
    rs = set(relations)
    return frozenset(t for t in load_transitivity_table()
                     if Relation.VAGUE not in t and all(r in rs for r in t))


@dataclass
class OrderingProblem:
    """One document's ordering instance.

    ``probabilities`` maps an oriented pair to per-relation probabilities
    and must cover every pair of events.  Pairs between a dummy node and any other node that lack probabilities
    get the uniform distribution, so only the soft term tells labels apart.
    ``stage_relations`` keys must involve a dummy node; either orientation
    is accepted.
    """
    events: Sequence[str]
    probabilities: Mapping[Pair, Mapping[Relation, object]]
    relations: Sequence[Relation] = ALL_RELATIONS
    dummies: Sequence[str] = ()
    stage_relations: Mapping[Pair, Relation] = field(default_factory=dict)
    mode: str = "none"
    alpha: object = DEFAULT_ALPHA
    transitivity: Optional[frozenset] = None

    def __post_init__(self):
        self.relations = tuple(self.relations)
        self.events = list(self.events)
        self.dummies = list(self.dummies)
        self.alpha = as_fraction(self.alpha)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, not {self.mode!r}")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if len(set(self.relations)) != len(self.relations) or len(self.relations) < 2:
            raise ValueError("relation set needs at least two distinct labels")
        if any(r.inverse not in self.relations for r in self.relations):
            raise ValueError("relation set must be closed under inversion")
        nodes = self.events + self.dummies
        if len(set(nodes)) != len(nodes):
            raise ValueError("duplicate node ids")
        if self.transitivity is None:
            self.transitivity = default_transitivity_table(self.relations)
        else:
            self.transitivity = frozenset(t for t in self.transitivity
                                          if all(r in self.relations for r in t))
        self.node_index = {n: i for i, n in enumerate(nodes)}

        probs: dict = {}
        for (x, y), dist in self.probabilities.items():
            for node in (x, y):
                if node not in self.node_index:
                    raise ValueError(f"pair ({x}, {y}) names unknown node {node!r}")
            if x == y:
                raise ValueError(f"pair ({x}, {y}) relates a node to itself")
            if (x, y) in probs or (y, x) in probs:
                raise ValueError(f"pair ({x}, {y}) appears more than once")
            dist = {Relation(r) if not isinstance(r, Relation) else r: as_fraction(p)
                    for r, p in dist.items()}
            extra = set(dist) - set(self.relations)
            if extra:
                raise ValueError(f"pair ({x}, {y}) scores relations outside the set: "
                                 f"{sorted(r.value for r in extra)}")
            full = {r: dist.get(r, Fraction(0)) for r in self.relations}
            if any(p < 0 or p > 1 for p in full.values()):
                raise ValueError(f"pair ({x}, {y}) has a probability outside [0, 1]")
            if abs(sum(full.values()) - 1) > PROB_TOLERANCE:
                raise ValueError(f"pair ({x}, {y}) probabilities sum to {float(sum(full.values()))}")
            probs[(x, y)] = full
        for i, x in enumerate(self.events):
            for y in self.events[i + 1:]:
                if (x, y) not in probs and (y, x) not in probs:
                    raise ValueError(f"no probabilities for event pair ({x}, {y})")
        uniform = Fraction(1, len(self.relations))
        for i, d in enumerate(self.dummies):
            for other in self.events + self.dummies[i + 1:]:
                if (d, other) not in probs and (other, d) not in probs:
                    probs[(d, other)] = {r: uniform for r in self.relations}
        self.pair_probs = probs
        self.pairs: list[Pair] = list(probs)

        dummy_set = set(self.dummies)
        stage: dict = {}
        for (x, y), rel in self.stage_relations.items():
            rel = Relation(rel) if not isinstance(rel, Relation) else rel
            if x not in dummy_set and y not in dummy_set:
                raise ValueError(f"stage relation ({x}, {y}) involves no time-expression node")
            if (x, y) in probs:
                key, label = (x, y), rel
            elif (y, x) in probs:
                key, label = (y, x), rel.inverse
            else:
                raise ValueError(f"stage relation ({x}, {y}) is not a problem pair")
            if label not in self.relations:
                raise ValueError(f"stage relation {label.value} is outside the relation set")
            if key in stage and stage[key] != label:
                raise ValueError(f"conflicting stage relations for ({x}, {y})")
            stage[key] = label
        self.stage = stage

    @property
    def size(self) -> int:
        return len(self.node_index)

    def weight(self, pair: Pair, rel: Relation) -> Fraction:
        """Objective contribution of labelling ``pair`` with ``rel``."""
        w = self.pair_probs[pair][rel]
        if self.mode == "soft" and pair in self.stage:
            if rel == self.stage[pair]:
                w += self.alpha
            else:
                w += (1 - self.alpha) / (len(self.relations) - 1)
        return w

    def canonical(self, pair: Pair) -> tuple[int, int, bool]:
        i, j = self.node_index[pair[0]], self.node_index[pair[1]]
        return (i, j, False) if i < j else (j, i, True)

    def triples(self) -> list[tuple[Pair, Pair, Pair]]:
        """Pair triples (ij, jk, ik) in node order, where all three pairs exist."""
        by_nodes = {}
        for pair in self.pairs:
            i, j, _ = self.canonical(pair)
            by_nodes[(i, j)] = pair
        out = []
        n = self.size
        for i, j, k in combinations(range(n), 3):
            if (i, j) in by_nodes and (j, k) in by_nodes and (i, k) in by_nodes:
                out.append((by_nodes[(i, j)], by_nodes[(j, k)], by_nodes[(i, k)]))
        return out


Assignment = dict  # Pair -> Relation


def _orderings(ij: Relation, jk: Relation, ik: Relation):
    """(r(x,y), r(y,z), r(x,z)) for all six orderings of nodes i < j < k."""
    ji, kj, ki = ij.inverse, jk.inverse, ik.inverse
    return ((ij, jk, ik), (ik, kj, ij), (ji, ik, jk),
            (jk, ki, ji), (ki, ij, kj), (kj, ji, ki))


def broken_rules(ij: Relation, jk: Relation, ik: Relation, table) -> list[Triple]:
    """Transitivity triples a labelled node triangle violates, under any node order."""
    rules = {}
    for t1, t2, t3 in table:
        rules.setdefault((t1, t2), set()).add(t3)
    out = []
    for x, y, z in _orderings(ij, jk, ik):
        for t3 in sorted(rules.get((x, y), ()), key=lambda r: r.value):
            if t3 != z:
                out.append((x, y, t3))
    return out


@dataclass(frozen=True)
class Solution:
    assignment: Assignment
    objective: Fraction
    optimal: bool
    nodes: int = 0


def _check_complete(assign: Mapping[Pair, Relation], prob: OrderingProblem) -> None:
    if set(assign) != set(prob.pairs):
        missing = set(prob.pairs) - set(assign)
        extra = set(assign) - set(prob.pairs)
        raise ValueError(f"assignment does not cover the problem pairs "
                         f"(missing {sorted(missing)[:3]}, extra {sorted(extra)[:3]})")
    for pair, rel in assign.items():
        if rel not in prob.relations:
            raise ValueError(f"pair {pair} labelled {rel} outside the relation set")


def objective_score(assign: Mapping[Pair, Relation], prob: OrderingProblem) -> Fraction:
    _check_complete(assign, prob)
    return sum((prob.weight(pair, rel) for pair, rel in assign.items()), Fraction(0))


def oriented(label: Relation, flipped: bool) -> Relation:
    return label.inverse if flipped else label


def violations(assign: Mapping[Pair, Relation], prob: OrderingProblem) -> list[str]:
    """Uniqueness, transitivity and (hard mode) forced-label violations."""
    problems = []
    if set(assign) != set(prob.pairs):
        problems.append("assignment does not label every pair exactly once")
        return problems
    for pair, rel in assign.items():
        if rel not in prob.relations:
            problems.append(f"{pair}: label {rel} outside relation set")

    def rel_of(pair):
        return oriented(assign[pair], prob.canonical(pair)[2])

    for ij, jk, ik in prob.triples():
        for t1, t2, t3 in broken_rules(rel_of(ij), rel_of(jk), rel_of(ik), prob.transitivity):
            problems.append(f"transitivity ({t1},{t2},{t3}) broken on {ij},{jk},{ik}")
    if prob.mode == "hard":
        for pair, rel in prob.stage.items():
            if assign[pair] != rel:
                problems.append(f"hard constraint {pair}={rel} not honoured")
    return problems


def hinge_loss(pred: Mapping[Pair, Relation], gold: Mapping[Pair, Relation],
               prob: OrderingProblem) -> Fraction:
    """max(0, Hamming(pred, gold) + score(pred) - score(gold))."""
    if set(pred) != set(gold):
        raise ValueError("predicted and gold assignments cover different pairs")
    hamming = sum(1 for pair in pred if pred[pair] != gold[pair])
    return max(Fraction(0), hamming + objective_score(pred, prob) - objective_score(gold, prob))


# -- search ----------------------------------------------------------------

class _Search:
    def __init__(self, prob: OrderingProblem, node_budget: Optional[int]):
        self.prob = prob
        rels = prob.relations
        self.m = len(rels)
        self.rel_bit = {r: 1 << i for i, r in enumerate(rels)}
        self.rels = rels
        self.pairs = prob.pairs
        self.budget = node_budget
        self.nodes = 0
        self.exhausted = True

        # canonical orientation: relation index as seen from the lower node
        self.flipped = [prob.canonical(p)[2] for p in self.pairs]
        fracs = [[prob.weight(p, oriented(r, f)) for r in rels]
                 for p, f in zip(self.pairs, self.flipped)]
        scale = 1
        for row in fracs:
            for w in row:
                scale = scale * w.denominator // math.gcd(scale, w.denominator)
        self.scale = scale
        self.w = [[int(w * scale) for w in row] for row in fracs]

        # allowed[a][b]: labels of pair ik consistent with ij=a, jk=b
        allowed = [[0] * self.m for _ in range(self.m)]
        for a, ra in enumerate(rels):
            for b, rb in enumerate(rels):
                for c, rc in enumerate(rels):
                    if not broken_rules(ra, rb, rc, prob.transitivity):
                        allowed[a][b] |= 1 << c
        self.allowed = allowed
        self.bits = [[b for b in range(self.m) if mask >> b & 1] for mask in range(1 << self.m)]

        pos = {p: n for n, p in enumerate(self.pairs)}
        self.triples = [(pos[a], pos[b], pos[c]) for a, b, c in prob.triples()]
        self.touching = [[] for _ in self.pairs]
        for t in self.triples:
            for p in t:
                self.touching[p].append(t)

        # triangle bound: each pair's weight is shared out over the triangles
        # containing it; a triangle contributes its best consistent labelling
        counts = [len(ts) for ts in self.touching]
        share = 1
        for c in counts:
            if c:
                share = share * c // math.gcd(share, c)
        self.share = share
        self.tri_w = [[[w * (share // counts[p]) for w in self.w[p]] for p in t]
                      for t in self.triples]
        self.free = [p for p, c in enumerate(counts) if c == 0]
        self.tri_memo = [{} for _ in self.triples]
        self.narrow_memo: dict = {}

        margins = []
        for n, row in enumerate(self.w):
            top = sorted(row, reverse=True)
            margins.append((-(top[0] - top[1]), n))
        self.order = [n for _, n in sorted(margins)]
        self.by_node = [[] for _ in range(prob.size)]
        for n, pair in enumerate(self.pairs):
            i, j, _ = prob.canonical(pair)
            self.by_node[i].append(n)
            self.by_node[j].append(n)
        self.best_value: Optional[int] = None
        self.best: Optional[list[int]] = None

    def _narrow(self, key: tuple[int, int, int]) -> tuple[int, int, int]:
        da, db, dc = key
        allowed, bits = self.allowed, self.bits
        reach_c = keep_a = keep_b = 0
        for r1 in bits[da]:
            row = allowed[r1]
            for r2 in bits[db]:
                hit = row[r2] & dc
                if hit:
                    reach_c |= hit
                    keep_a |= 1 << r1
                    keep_b |= 1 << r2
        out = (keep_a, keep_b, reach_c)
        self.narrow_memo[key] = out
        return out

    def propagate(self, dom, queue) -> bool:
        """Arc consistency over transitivity triples; False on a wiped-out domain."""
        pending = list(dict.fromkeys(queue))
        queued = set(pending)
        memo, touching = self.narrow_memo, self.touching
        while pending:
            p = pending.pop()
            queued.discard(p)
            for t in touching[p]:
                a, b, c = t
                key = (dom[a], dom[b], dom[c])
                new = memo.get(key) or self._narrow(key)
                for q, d in zip(t, new):
                    if d != dom[q]:
                        if not d:
                            return False
                        dom[q] = d
                        if q not in queued:
                            queued.add(q)
                            pending.append(q)
        return True

    def value(self, dom) -> int:
        return sum(row[self.bits[mask][0]] for row, mask in zip(self.w, dom))

    def _triangle_best(self, n: int, key: tuple[int, int, int]) -> tuple[int, tuple[int, int, int]]:
        wa, wb, wc = self.tri_w[n]
        bits, allowed = self.bits, self.allowed
        best, arg = None, None
        for r1 in bits[key[0]]:
            row = allowed[r1]
            for r2 in bits[key[1]]:
                rest = row[r2] & key[2]
                if rest:
                    r3 = max(bits[rest], key=wc.__getitem__)
                    v = wa[r1] + wb[r2] + wc[r3]
                    if best is None or v > best:
                        best, arg = v, (r1, r2, r3)
        return best, arg

    def bound(self, dom) -> int:
        """Upper bound on the best completion, in units of ``scale * share``."""
        total = 0
        for p in self.free:
            total += max(self.w[p][b] for b in self.bits[dom[p]]) * self.share
        for n, (a, b, c) in enumerate(self.triples):
            key = (dom[a], dom[b], dom[c])
            memo = self.tri_memo[n]
            best = memo.get(key)
            if best is None:
                best = memo[key] = self._triangle_best(n, key)[0]
            total += best
        return total

    def tighten(self, dom, rounds: int = 2000, patience: int = 20) -> None:
        """Re-split pair weights over triangles so that the triangles agree on labels.

        Any split that sums to each pair's weight gives a valid bound.  The
        split is searched with float subgradient steps aimed at the
        incumbent; the result is rounded back to integers with the last
        triangle of every pair absorbing the remainder, so the bound stays exact.
        """
        T, m = len(self.triples), self.m
        if not T:
            return
        combos = np.array([(a, b, c) for a in range(m) for b in range(m)
                           for c in self.bits[self.allowed[a][b]]])
        fa, fb, fc = combos.T
        owner = np.array(self.triples)  # (T, 3) pair index per slot
        unit = self.scale * self.share
        w = np.array([[[float(Fraction(v, unit)) for v in row] for row in t] for t in self.tri_w])
        pen = np.zeros_like(w)
        for t, pairs in enumerate(self.triples):
            for pos, p in enumerate(pairs):
                for r in range(m):
                    if not dom[p] >> r & 1:
                        pen[t, pos, r] = -np.inf
        counts = np.bincount(owner.ravel(), minlength=len(self.pairs)).astype(float)
        target = (self.best_value / self.scale) if self.best_value is not None else None
        free = sum(max(self.w[p][b] for b in self.bits[dom[p]]) for p in self.free) / self.scale
        rows = np.arange(T)
        theta, stalled, best_total, best_w = 1.0, 0, np.inf, w.copy()
        for _ in range(rounds):
            x = w + pen
            scores = x[:, 0, fa] + x[:, 1, fb] + x[:, 2, fc]
            pick = scores.argmax(axis=1)
            total = scores[rows, pick].sum() + free
            if total < best_total - 1e-12:
                best_total, best_w, stalled = total, w.copy(), 0
            else:
                stalled += 1
                if stalled >= patience:
                    theta, stalled = theta / 2, 0
                    if theta < 1e-4:
                        break
            chosen = np.zeros_like(w)
            chosen[rows, 0, fa[pick]] = 1
            chosen[rows, 1, fb[pick]] = 1
            chosen[rows, 2, fc[pick]] = 1
            mean = np.zeros((len(self.pairs), m))
            np.add.at(mean, owner.ravel(), chosen.reshape(-1, m))
            mean /= np.maximum(counts, 1)[:, None]
            g = chosen - mean[owner]
            norm = float((g * g).sum())
            if norm == 0:
                break
            gap = total - target if target is not None else 0.1 * abs(total)
            w -= theta * max(gap, 1e-9) / norm * g
        self.tri_w = self._exact_split(best_w, unit)
        self.tri_memo = [{} for _ in self.triples]

    def _exact_split(self, approx, unit: int) -> list:
        grain = 1 << 40
        split = [[[0] * self.m for _ in range(3)] for _ in self.triples]
        slots = [[] for _ in self.pairs]
        for t, pairs in enumerate(self.triples):
            for pos, p in enumerate(pairs):
                slots[p].append((t, pos))
        for p, where in enumerate(slots):
            for r in range(self.m):
                remaining = self.w[p][r] * self.share
                for t, pos in where[:-1]:
                    v = int(round(float(approx[t, pos, r]) * grain)) * unit // grain
                    split[t][pos][r] = v
                    remaining -= v
                if where:
                    t, pos = where[-1]
                    split[t][pos][r] = remaining
        return split

    def run(self, dom, dive: bool = False) -> bool:
        """Branch and bound below ``dom``; with ``dive`` stop at the first leaf found.

        The budget only cuts the full search, so a dive always yields an incumbent.
        """
        if not dive and self.budget is not None and self.nodes >= self.budget:
            self.exhausted = False
            return True
        self.nodes += 1
        branch = next((n for n in self.order if dom[n] & (dom[n] - 1)), None)
        if branch is None:
            value = self.value(dom)
            if self.best_value is None or value > self.best_value:
                self.best_value = value
                self.best = [self.bits[mask][0] for mask in dom]
            return True
        if self.best_value is not None and self.bound(dom) <= self.best_value * self.share:
            return False
        row = self.w[branch]
        found = False
        for b in sorted(self.bits[dom[branch]], key=lambda b: -row[b]):
            child = list(dom)
            child[branch] = 1 << b
            if self.propagate(child, [branch]) and self.run(child, dive) and dive:
                found = True
                break
        return found

    def polish(self, root) -> None:
        """Local search: re-solve all pairs at one node exactly, the rest held at the incumbent."""
        improved = True
        while improved and self.best is not None:
            improved = False
            for free in self.by_node:
                dom = [1 << b for b in self.best]
                for n in free:
                    dom[n] = root[n]
                before = self.best_value
                if self.propagate(dom, free):
                    self.run(dom)
                improved |= self.best_value > before


def stage_conflict(prob: OrderingProblem) -> Optional[str]:
    """A node triangle whose three stage relations already break transitivity, if any."""
    for ij, jk, ik in prob.triples():
        if ij in prob.stage and jk in prob.stage and ik in prob.stage:
            labels = [oriented(prob.stage[p], prob.canonical(p)[2]) for p in (ij, jk, ik)]
            broken = broken_rules(*labels, prob.transitivity)
            if broken:
                t = "(" + ",".join(r.value for r in broken[0]) + ")"
                return (f"{ij}={prob.stage[ij].value}, {jk}={prob.stage[jk].value}, "
                        f"{ik}={prob.stage[ik].value} break {t}")
    return None


def solve(prob: OrderingProblem, exact_limit: int = 12, node_budget: int = 200_000) -> Solution:
    """Best labelling of every pair.

    Problems with at most ``exact_limit`` nodes are searched to proven
    optimality; larger ones stop after ``node_budget`` search nodes and
    report ``optimal=False`` unless the search still finished.
    """
    search = _Search(prob, None if prob.size <= exact_limit else node_budget)
    dom = [(1 << search.m) - 1 for _ in prob.pairs]
    fixed = []
    if prob.mode == "hard":
        broken = stage_conflict(prob)
        if broken:
            raise InfeasibleError(f"stage relations violate transitivity: {broken}")
        for pair, rel in prob.stage.items():
            n = prob.pairs.index(pair)
            dom[n] = search.rel_bit[oriented(rel, search.flipped[n])]
            fixed.append(n)
    if not search.propagate(dom, fixed or range(len(dom))):
        raise InfeasibleError("hard constraints admit no transitively consistent labelling")
    search.run(list(dom), dive=True)
    search.polish(dom)
    search.tighten(dom)
    search.run(dom)
    if search.best is None:
        if not search.exhausted:
            raise InfeasibleError("search budget exhausted before any feasible labelling")
        raise InfeasibleError("no labelling satisfies the constraints")
    assign = {pair: oriented(search.rels[b], f)
              for pair, b, f in zip(prob.pairs, search.best, search.flipped)}
    return Solution(assign, Fraction(search.best_value, search.scale), search.exhausted, search.nodes)


def argmax_assignment(prob: OrderingProblem) -> Assignment:
    """Per-pair best label, ignoring every constraint (ties go to relation order)."""
    return {pair: max(prob.relations, key=lambda r: (prob.weight(pair, r), -prob.relations.index(r)))
            for pair in prob.pairs}
