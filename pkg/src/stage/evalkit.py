"""Corpus records, relaxed extraction matching and ordering scores."""
from __future__ import annotations

import enum
import json
import re
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from stage.bridge import Relation
from stage.grammar import DETERMINERS, Grammar, load_grammar
from stage.normalize import parse_dct

Span = tuple[int, int]


class CorpusError(ValueError):
    """A document record that does not validate; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class EventMention:
    id: str
    span: Span
    cue: Optional[Span] = None  # the time cue attached to the event, if any


@dataclass(frozen=True)
class GoldLink:
    source: str
    target: str
    relation: Relation


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str
    dct: Optional[object] = None
    events: tuple[EventMention, ...] = ()
    timex: tuple[Span, ...] = ()
    tlinks: tuple[GoldLink, ...] = ()

    def __post_init__(self):
        n = len(self.text)
        spans = [e.span for e in self.events] + [e.cue for e in self.events if e.cue] + list(self.timex)
        for s, e in spans:
            if not 0 <= s < e <= n:
                raise CorpusError(f"{self.doc_id}: span ({s}, {e}) outside text of length {n}")
        ids = [e.id for e in self.events]
        if len(set(ids)) != len(ids):
            raise CorpusError(f"{self.doc_id}: duplicate event ids")
        for link in self.tlinks:
            for node in (link.source, link.target):
                if node not in ids:
                    raise CorpusError(f"{self.doc_id}: link names unknown event {node!r}")

    def cue_text(self, event: EventMention) -> Optional[str]:
        return None if event.cue is None else self.text[event.cue[0]:event.cue[1]]


def _span(value, what: str) -> Span:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)):
        raise CorpusError(f"{what} must be a [start, end] pair of integers")
    return (value[0], value[1])


def document_from_record(rec: Mapping) -> Document:
    if not isinstance(rec, Mapping):
        raise CorpusError("a document record must be an object")
    for key in ("doc_id", "text"):
        if not isinstance(rec.get(key), str):
            raise CorpusError(f"missing or non-string field {key!r}")
    try:
        dct = parse_dct(rec.get("dct"))
    except ValueError as exc:
        raise CorpusError(f"bad dct: {exc}") from None
    events = []
    for ev in rec.get("events", []):
        if not isinstance(ev, Mapping) or not isinstance(ev.get("id"), str):
            raise CorpusError("every event needs a string id")
        cue = ev.get("cue")
        events.append(EventMention(ev["id"], _span(ev.get("span"), "event span"),
                                   None if cue is None else _span(cue, "cue span")))
    timex = tuple(_span(s, "timex span") for s in rec.get("timex", []))
    links = []
    for link in rec.get("tlinks", []):
        try:
            links.append(GoldLink(link["source"], link["target"], Relation(link["relation"])))
        except (KeyError, TypeError, ValueError):
            raise CorpusError(f"bad tlink record {link!r}") from None
    return Document(rec["doc_id"], rec["text"], dct, tuple(events), timex, tuple(links))


def read_corpus(lines: Iterable[str]) -> Iterator[Document]:
    """Parse line-delimited document records; blank lines are skipped."""
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"invalid JSON: {exc.msg}", lineno) from None
        try:
            yield document_from_record(rec)
        except CorpusError as exc:
            raise CorpusError(str(exc), lineno) from None


def load_corpus(path) -> list[Document]:
    with open(path, encoding="utf-8") as fh:
        return list(read_corpus(fh))


def load_minicorpus() -> list[Document]:
    from importlib import resources
    text = resources.files("stage").joinpath("data/minicorpus.jsonl").read_text("utf-8")
    return list(read_corpus(text.splitlines()))


TIMEML_FIELDS = {
    "doc_id": "DOCID or file name",
    "dct": "TIMEX3 with functionInDocument=CREATION_TIME, value attribute",
    "text": "TEXT element content with tags stripped, offsets kept",
    "events": "EVENT eid and character span; cue = span of the TIMEX3 the event links to",
    "timex": "character spans of every other TIMEX3",
    "tlinks": "event-event TLINKs mapped to a, b, s, i, ii, v",
}


def timeml_to_record(path):
    """TimeML import is not bundled; convert externally into the fields in ``TIMEML_FIELDS``."""
    raise NotImplementedError(
        "TimeML conversion is not bundled; produce one JSON record per document with fields: "
        + ", ".join(f"{k} ({v})" for k, v in TIMEML_FIELDS.items()))


# -- relaxed matching --------------------------------------------------------

class MatchVerdict(enum.Enum):
    EXACT = "="
    EXTENDED = "+"
    MISS = "-"


_WORD = re.compile(r"[^\s,;:!?()\"]+")


def _words(text: str) -> list[str]:
    return [w.casefold().rstrip(".") or w for w in _WORD.findall(text)]


def default_whitelist(grammar: Optional[Grammar] = None) -> frozenset:
    """Function words plus determiners: extra words that leave a cue's meaning intact."""
    grammar = grammar or load_grammar()
    classes = set().union(*grammar.lexicon.values())
    funcs = {cls for cls in classes if cls.startswith("Func") or cls == "Det"}
    return frozenset(grammar.words_of(funcs)) | DETERMINERS


def relaxed_match(gold: str, system: str, whitelist: Optional[frozenset] = None) -> MatchVerdict:
    g, s = _words(gold), _words(system)
    if g == s:
        return MatchVerdict.EXACT
    if not g or len(s) <= len(g):
        return MatchVerdict.MISS
    whitelist = default_whitelist() if whitelist is None else whitelist
    for i in range(len(s) - len(g) + 1):
        if s[i:i + len(g)] == g:
            extra = s[:i] + s[i + len(g):]
            if all(w in whitelist for w in extra):
                return MatchVerdict.EXTENDED
    return MatchVerdict.MISS


@dataclass
class ExtractionReport:
    n: int = 0
    exact: int = 0
    extended: int = 0
    verdicts: list = field(default_factory=list)  # (doc_id, gold span, system span, verdict)

    @property
    def matched(self) -> float:
        """Share of gold cues matched exactly or by extension ("=/+")."""
        return (self.exact + self.extended) / self.n if self.n else 0.0

    @property
    def extended_share(self) -> float:
        """Share of gold cues matched only by extension ("+")."""
        return self.extended / self.n if self.n else 0.0

    def record(self) -> dict:
        return {"n": self.n, "exact": self.exact, "extended": self.extended,
                "eq_plus": self.matched, "plus": self.extended_share}


_RANK = {MatchVerdict.EXACT: 2, MatchVerdict.EXTENDED: 1, MatchVerdict.MISS: 0}


def extraction_report(corpus: Sequence[Document], system_spans: Mapping[str, Sequence[Span]],
                      whitelist: Optional[frozenset] = None) -> ExtractionReport:
    """Score system cue spans against each document's gold time expressions.

    Every gold span takes the best verdict among the system spans that overlap it.
    """
    whitelist = default_whitelist() if whitelist is None else whitelist
    report = ExtractionReport()
    for doc in corpus:
        spans = system_spans.get(doc.doc_id, ())
        for gs, ge in doc.timex:
            report.n += 1
            best, best_span = MatchVerdict.MISS, None
            for ss, se in spans:
                if ss < ge and gs < se:
                    v = relaxed_match(doc.text[gs:ge], doc.text[ss:se], whitelist)
                    if _RANK[v] > _RANK[best]:
                        best, best_span = v, (ss, se)
            report.exact += best is MatchVerdict.EXACT
            report.extended += best is MatchVerdict.EXTENDED
            report.verdicts.append((doc.doc_id, (gs, ge), best_span, best))
    return report


# -- ordering ------------------------------------------------------------------

@dataclass(frozen=True)
class OrderingScore:
    precision: float
    recall: float
    f1: float
    correct: int = 0
    predicted: int = 0
    gold: int = 0

    def record(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "correct": self.correct, "predicted": self.predicted, "gold": self.gold}


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


def ordering_counts(pred: Mapping[tuple[str, str], Relation],
                    gold: Iterable[GoldLink]) -> tuple[int, int, int]:
    """(correct, scored predictions, gold links).  A prediction is scored when its pair is gold."""
    correct = predicted = total = 0
    for link in gold:
        total += 1
        if (link.source, link.target) in pred:
            label = pred[(link.source, link.target)]
        elif (link.target, link.source) in pred:
            label = pred[(link.target, link.source)].inverse
        else:
            continue
        predicted += 1
        correct += label == link.relation
    return correct, predicted, total


def score_counts(correct: int, predicted: int, total: int) -> OrderingScore:
    if total == 0:
        warnings.warn("no gold links: recall is undefined and reported as 0")
    p = correct / predicted if predicted else 0.0
    r = correct / total if total else 0.0
    return OrderingScore(p, r, _f1(p, r), correct, predicted, total)


def ordering_metrics(pred: Mapping[tuple[str, str], Relation], gold: Iterable[GoldLink]) -> OrderingScore:
    """Micro precision, recall and F1 of predicted pair labels against gold links."""
    return score_counts(*ordering_counts(pred, gold))
