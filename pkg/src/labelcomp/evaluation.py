"""IOB2 span decoding and micro-averaged span scores.

Four views are computed over a corpus: exact span match, per frequency
bucket, per hierarchy depth, and boundaries only.
"""
from __future__ import annotations

import io
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .schema import NULL, OUTSIDE

BUCKETS = ("low", "middle", "high")


@dataclass(frozen=True, order=True)
class SpanMention:
    start: int
    end: int
    type_path: tuple[str, ...]

    @property
    def label(self) -> str:
        return "/".join(self.type_path)


def _split(label: str) -> tuple[str, str | None]:
    if label == OUTSIDE:
        return OUTSIDE, None
    prefix, _, path = label.partition("-")
    return prefix, path


def decode_label_strings(labels: Sequence[str]) -> list[SpanMention]:
    """Spans of an IOB2 sequence.

    ``B-t`` always opens a span; ``I-t`` extends the open span only if that
    span has type ``t``, otherwise it opens a new one.
    """
    spans = []
    start, cur = None, None
    for i, label in enumerate(labels):
        prefix, path = _split(label)
        if prefix == "I" and cur == path:
            continue
        if cur is not None:
            spans.append(SpanMention(start, i, tuple(cur.split("/"))))
            start, cur = None, None
        if prefix in ("B", "I"):
            start, cur = i, path
    if cur is not None:
        spans.append(SpanMention(start, len(labels), tuple(cur.split("/"))))
    return spans


def decode_spans(label_ids: Sequence[int], schema) -> list[SpanMention]:
    return decode_label_strings([schema.labels[y] for y in label_ids])


@dataclass
class Score:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __iadd__(self, other: "Score"):
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        return self


def _match(gold_keys: Iterable, pred_keys: Iterable) -> Score:
    g, p = Counter(gold_keys), Counter(pred_keys)
    tp = sum((g & p).values())
    return Score(tp, sum(p.values()) - tp, sum(g.values()) - tp)


def _keys(corpus_spans, key):
    return [(i, *key(s)) for i, spans in enumerate(corpus_spans) for s in spans]


def span_f1(gold: Sequence[Sequence[SpanMention]], pred: Sequence[Sequence[SpanMention]]) -> Score:
    """Exact match on sentence, start, end and full type path."""
    _check_aligned(gold, pred)
    key = lambda s: (s.start, s.end, s.type_path)
    return _match(_keys(gold, key), _keys(pred, key))


def boundary_f1(gold, pred) -> Score:
    _check_aligned(gold, pred)
    key = lambda s: (s.start, s.end)
    return _match(_keys(gold, key), _keys(pred, key))


def truncate_path(path: tuple[str, ...], depth: int) -> tuple[str, ...]:
    return (tuple(path) + (NULL,) * depth)[:depth]


def layer_f1(gold, pred, depth: int) -> Score:
    """Boundaries must match and the first ``depth`` path values must agree."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    _check_aligned(gold, pred)
    key = lambda s: (s.start, s.end, truncate_path(s.type_path, depth))
    return _match(_keys(gold, key), _keys(pred, key))


@dataclass(frozen=True)
class FrequencyBuckets:
    """Label -> Low/Middle/High by training-set gold mention count.

    Low is (0, 100], Middle (100, 500], High above 500; labels never seen
    in training count as frequency 0 and fall into Low.
    """

    counts: Mapping[str, int]
    low_max: int = 100
    mid_max: int = 500

    def bucket_of_count(self, n: int) -> str:
        if n <= self.low_max:
            return "low"
        if n <= self.mid_max:
            return "middle"
        return "high"

    def bucket(self, label: str) -> str:
        return self.bucket_of_count(self.counts.get(label, 0))

    def labels_in(self, bucket: str) -> list[str]:
        return sorted(l for l in self.counts if self.bucket(l) == bucket)


def bucketed_f1(gold, pred, buckets: FrequencyBuckets) -> dict[str, Score]:
    """Recall over gold labels in each bucket; precision over predicted labels in it."""
    _check_aligned(gold, pred)
    out = {}
    for b in BUCKETS:
        key = lambda s: (s.start, s.end, s.type_path)
        g = [k for k, s in zip(_keys(gold, key), _flat(gold)) if buckets.bucket(s.label) == b]
        p = [k for k, s in zip(_keys(pred, key), _flat(pred)) if buckets.bucket(s.label) == b]
        out[b] = _match(g, p)
    return out


def _flat(corpus_spans):
    return [s for spans in corpus_spans for s in spans]


def _check_aligned(gold, pred):
    if len(gold) != len(pred):
        raise ValueError(f"gold has {len(gold)} sentences, prediction has {len(pred)}")


@dataclass
class EvalReport:
    overall: Score
    buckets: dict[str, Score]
    layers: dict[int, Score]
    boundary: Score
    n_sentences: int = 0

    def metrics(self) -> dict[str, float]:
        """Flat F1 values (as percentages) keyed by view name."""
        m = {"overall": 100 * self.overall.f1}
        for b, s in self.buckets.items():
            m[b] = 100 * s.f1
        for d, s in self.layers.items():
            m[f"layer{d}"] = 100 * s.f1
        m["boundary"] = 100 * self.boundary.f1
        return m

    def rows(self):
        yield "overall", "all", self.overall
        for b, s in self.buckets.items():
            yield "bucket", b, s
        for d, s in self.layers.items():
            yield "layer", str(d), s
        yield "boundary", "all", self.boundary

    def to_tsv(self) -> str:
        out = io.StringIO()
        out.write("view\tkey\tprecision\trecall\tf1\ttp\tfp\tfn\n")
        for view, key, s in self.rows():
            out.write(f"{view}\t{key}\t{100 * s.precision:.4f}\t{100 * s.recall:.4f}\t"
                      f"{100 * s.f1:.4f}\t{s.tp}\t{s.fp}\t{s.fn}\n")
        return out.getvalue()


def evaluate_spans(gold, pred, buckets: FrequencyBuckets, depth: int) -> EvalReport:
    return EvalReport(
        overall=span_f1(gold, pred),
        buckets=bucketed_f1(gold, pred, buckets),
        layers={d: layer_f1(gold, pred, d) for d in range(1, depth + 1)},
        boundary=boundary_f1(gold, pred),
        n_sentences=len(gold),
    )


def evaluate_labels(gold_labels: Sequence[Sequence[str]], pred_labels: Sequence[Sequence[str]],
                    buckets: FrequencyBuckets, depth: int) -> EvalReport:
    gold = [decode_label_strings(s) for s in gold_labels]
    pred = [decode_label_strings(s) for s in pred_labels]
    return evaluate_spans(gold, pred, buckets, depth)


# -- tables ----------------------------------------------------------------


def _cell(values) -> str:
    if isinstance(values, tuple):
        mean, std = values
        return f"{mean:6.2f}±{std:.2f}"
    return f"{values:6.2f}"


def format_table(rows: Mapping[str, Mapping[str, object]], columns: Sequence[str],
                 headers: Sequence[str] | None = None) -> str:
    """Fixed-width text table; cells are floats or (mean, std) pairs."""
    headers = list(headers or columns)
    name_w = max([len(r) for r in rows] + [8])
    cells = {r: [_cell(v[c]) for c in columns] for r, v in rows.items()}
    col_w = [max([len(h)] + [len(cells[r][j]) for r in rows]) for j, h in enumerate(headers)]
    lines = [" " * name_w + "  " + "  ".join(h.rjust(w) for h, w in zip(headers, col_w))]
    for r in rows:
        lines.append(r.ljust(name_w) + "  " + "  ".join(c.rjust(w) for c, w in zip(cells[r], col_w)))
    return "\n".join(lines) + "\n"


def frequency_table_text(rows) -> str:
    return format_table(rows, ["low", "middle", "high", "overall"], ["Low", "Middle", "High", "Overall"])
