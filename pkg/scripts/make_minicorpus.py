"""Rebuild the bundled 20-cue mini-corpus (src/stage/data/minicorpus.jsonl).

Each document is written with its gold time expressions in [brackets]
and events as {word|cue}, where ``cue`` names the bracketed expression
(by index) that the event is anchored to.  Offsets are computed here so
the JSONL never drifts from the text.
"""
import json
import re
import sys
from pathlib import Path

DOCS = [
    ("d01", "2001-01-10",
     "The plant {closed|0} [three days ago] and {reopened|1} [two days ago], "
     "after a strike that {began|2} [one week ago].",
     [("closed", "reopened", "b"), ("closed", "began", "a"), ("reopened", "began", "a")],
     {0: "", 1: "", 2: ""}),
    ("d02", "2001-01-10",
     "The union {met|0} on [Monday] and {signed|1} the deal in [December].",
     [("met", "signed", "a")], {0: "on ", 1: "in "}),
    ("d03", "2001-01-10",
     "Sales {rose|0} during [the first quarter] and {fell|1} sharply in [March 2000].",
     [("rose", "fell", "a")], {0: "during ", 1: "in "}),
    ("d04", "2001-01-10",
     "The reactor {ran|0} for [four hours] and was {inspected|1} [yesterday].",
     [], {0: "for ", 1: ""}),
    ("d05", "2001-01-10",
     "Inspectors will {arrive|0} within [two weeks] and {report|1} by [Friday].",
     [], {0: "within ", 1: "by "}),
    ("d06", "2001-01-10",
     "The museum has been {closed|0} since [1999] and {reopens|1} [next year].",
     [("closed", "reopens", "b")], {0: "since ", 1: ""}),
    ("d07", "2001-01-10",
     "Production {ran|0} from [January to March] and {resumed|1} [last week].",
     [], {0: "from ", 1: ""}),
    ("d08", "2001-01-10",
     "Rates were {cut|0} on [2000-11-15] and will {fall|1} again in [four days].",
     [("cut", "fall", "b")], {0: "on ", 1: "in "}),
    ("d09", "2001-01-10",
     "Flights {resumed|0} [today] after a {storm|1} [yesterday] and will {expand|2} [next month].",
     [("resumed", "storm", "a"), ("storm", "expand", "b"), ("resumed", "expand", "b")],
     {0: "", 1: "", 2: ""}),
]


def build(doc_id, dct, marked, links, lead):
    text, timex, events = "", [], []
    pos = 0
    for m in re.finditer(r"\[([^\]]+)\]|\{([^|}]+)\|(\d+)\}", marked):
        text += marked[pos:m.start()]
        if m.group(1):
            timex.append((len(text), len(text) + len(m.group(1))))
            text += m.group(1)
        else:
            events.append((m.group(2), len(text), int(m.group(3))))
            text += m.group(2)
        pos = m.end()
    text += marked[pos:]
    records = []
    for word, start, cue in events:
        s, e = timex[cue]
        s -= len(lead[cue])  # the cue includes its preposition
        records.append({"id": word, "span": [start, start + len(word)], "cue": [s, e]})
    return {"doc_id": doc_id, "dct": dct, "text": text,
            "events": records, "timex": [list(t) for t in timex],
            "tlinks": [{"source": a, "target": b, "relation": r} for a, b, r in links]}


def main(out=None):
    out = Path(out or Path(__file__).resolve().parents[1] / "src/stage/data/minicorpus.jsonl")
    lines = [json.dumps(build(*doc), sort_keys=True) for doc in DOCS]
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(lines)} documents, {sum(len(json.loads(l)['timex']) for l in lines)} cues to {out}")


if __name__ == "__main__":
    main(*sys.argv[1:])
