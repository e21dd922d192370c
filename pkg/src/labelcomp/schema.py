"""Label sets decomposed into typed components.

An IOB2 label such as ``B-Facility/GOE/Park`` is split into a span symbol
(``B``) followed by one value per hierarchy layer.  Every schema has a fixed
number ``K`` of component types; shallow labels are padded with the reserved
NULL value, which sits at index 0 of every non-span vocabulary.
"""
from __future__ import annotations

import hashlib
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

OUTSIDE = "O"
SPAN_VALUES = ("B", "I", OUTSIDE)
NULL = "<null>"


class SchemaError(ValueError):
    """Raised for malformed or inconsistent label sets."""


def parse_label(label: str, K: int) -> tuple[str, ...]:
    """Split ``label`` into its ``K`` component values.

    >>> parse_label("B-Facility/GOE/Park", 4)
    ('B', 'Facility', 'GOE', 'Park')
    >>> parse_label("O", 3)
    ('O', '<null>', '<null>')
    """
    if K < 2:
        raise SchemaError(f"K must be >= 2 for IOB2 labels, got {K}")
    if label == OUTSIDE:
        return (OUTSIDE,) + (NULL,) * (K - 1)
    prefix, sep, path = label.partition("-")
    if not sep or prefix not in ("B", "I"):
        raise SchemaError(f"malformed label {label!r}: expected 'O' or a B-/I- prefix")
    segments = path.split("/")
    if any(not s for s in segments):
        raise SchemaError(f"malformed label {label!r}: empty type segment")
    if NULL in segments:
        raise SchemaError(f"malformed label {label!r}: reserved value {NULL!r}")
    if len(segments) > K - 1:
        raise SchemaError(
            f"label {label!r} has depth {len(segments)} but schema allows {K - 1}"
        )
    return (prefix, *segments) + (NULL,) * (K - 1 - len(segments))


def label_depth(label: str) -> int:
    """Number of type-path segments in ``label`` (0 for ``O``)."""
    if label == OUTSIDE:
        return 0
    _, _, path = label.partition("-")
    return len(path.split("/"))


def join_label(components: Sequence[str]) -> str:
    """Inverse of :func:`parse_label`; NULL values are dropped."""
    span, *path = components
    if span == OUTSIDE:
        return OUTSIDE
    return f"{span}-" + "/".join(v for v in path if v != NULL)


@dataclass(frozen=True, eq=False)
class LabelSchema:
    """Immutable label set with a component decomposition per label.

    ``components[y, k]`` is the index of label ``y``'s value in ``vocabs[k]``.
    """

    labels: tuple[str, ...]
    type_names: tuple[str, ...]
    vocabs: tuple[tuple[str, ...], ...]
    components: np.ndarray = field(repr=False)
    partial: bool = False
    iob: bool = True

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=np.int64)
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)
        if comps.shape != (len(self.labels), len(self.type_names)):
            raise SchemaError(f"component table has shape {comps.shape}")
        if len({tuple(row) for row in comps.tolist()}) != len(self.labels):
            raise SchemaError("two labels share the same component tuple")
        object.__setattr__(self, "_index", {l: i for i, l in enumerate(self.labels)})

    def __eq__(self, other):
        if not isinstance(other, LabelSchema):
            return NotImplemented
        return (
            self.labels == other.labels
            and self.type_names == other.type_names
            and self.vocabs == other.vocabs
            and np.array_equal(self.components, other.components)
        )

    def __hash__(self):
        return hash((self.labels, self.vocabs))

    @property
    def K(self) -> int:
        return len(self.type_names)

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    @property
    def vocab_sizes(self) -> list[int]:
        return [len(v) for v in self.vocabs]

    @property
    def hierarchy_depth(self) -> int:
        return self.K - 1

    def label_id(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise SchemaError(f"label {label!r} is not in the schema") from None

    def __contains__(self, label: str) -> bool:
        return label in self._index

    def decompose(self, label: str | int) -> tuple[str, ...]:
        y = label if isinstance(label, (int, np.integer)) else self.label_id(label)
        return tuple(self.vocabs[k][c] for k, c in enumerate(self.components[y]))

    def value_index(self, k: int, value: str) -> int:
        return self.vocabs[k].index(value)

    def type_path(self, label: str | int) -> tuple[str, ...]:
        """Layer values of a label, NULL-padded to ``K - 1``."""
        return self.decompose(label)[1:]

    def entity_labels(self) -> list[str]:
        """Distinct type paths ("A/B/C") present in the schema."""
        seen = dict.fromkeys(l.partition("-")[2] for l in self.labels if l != OUTSIDE)
        return list(seen)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update("\n".join(self.labels).encode())
        h.update(b"\0")
        h.update("\n".join(",".join(v) for v in self.vocabs).encode())
        h.update(self.components.tobytes())
        return h.hexdigest()[:16]


def build_schema(label_strings: Iterable[str]) -> LabelSchema:
    """Build an IOB2 schema; ordering is sorted with ``O`` first."""
    labels = list(label_strings)
    if not labels:
        raise SchemaError("empty label list")
    dupes = [l for l, n in Counter(labels).items() if n > 1]
    if dupes:
        raise SchemaError(f"duplicate labels: {sorted(dupes)}")
    if OUTSIDE not in labels:
        raise SchemaError("label set must contain 'O'")
    ordered = [OUTSIDE] + sorted(l for l in labels if l != OUTSIDE)
    K = 1 + max(1, max(label_depth(l) if l != OUTSIDE else 0 for l in ordered))
    for l in ordered:
        parse_label(l, K)

    vocabs: list[list[str]] = [list(SPAN_VALUES)] + [[NULL] for _ in range(K - 1)]
    rows = []
    for l in ordered:
        row = []
        for k, value in enumerate(parse_label(l, K)):
            if value not in vocabs[k]:
                vocabs[k].append(value)
            row.append(vocabs[k].index(value))
        rows.append(row)

    paths = {}
    for l in ordered[1:]:
        prefix, _, path = l.partition("-")
        paths.setdefault(path, set()).add(prefix)
    missing = sorted(p for p, prefixes in paths.items() if prefixes != {"B", "I"})
    if missing:
        warnings.warn(f"schema is partial: types without both B-/I- labels: {missing}")

    names = ("span",) + tuple(f"layer{k}" for k in range(1, K))
    return LabelSchema(
        labels=tuple(ordered),
        type_names=names,
        vocabs=tuple(tuple(v) for v in vocabs),
        components=np.array(rows, dtype=np.int64),
        partial=bool(missing),
    )


def complete_labels(type_paths: Iterable[str]) -> list[str]:
    """``O`` plus ``B-``/``I-`` variants of every type path."""
    out = [OUTSIDE]
    for p in type_paths:
        out += [f"B-{p}", f"I-{p}"]
    return out


def identity_schema(labels: Sequence[str]) -> LabelSchema:
    """Degenerate schema: one component type whose values are the labels.

    Summation over this schema reduces to an independent row per label.
    """
    return LabelSchema(
        labels=tuple(labels),
        type_names=("label",),
        vocabs=(tuple(labels),),
        components=np.arange(len(labels), dtype=np.int64)[:, None],
        iob=False,
    )


def read_schema_file(path) -> LabelSchema:
    """One label per line; ``#`` starts a comment."""
    labels = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                labels.append(line)
    return build_schema(labels)


def write_schema_file(schema: LabelSchema, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# one label per line\n")
        for l in schema.labels:
            fh.write(l + "\n")


def component_frequency(schema: LabelSchema, corpus) -> dict[tuple[int, int], int]:
    """Count gold entity mentions contributing each component value.

    Keys are ``(type index, value index)``.  A mention contributes the span
    value ``B`` (the symbol that opens it) and every layer value of its type
    path, NULL padding included.
    """
    from .evaluation import decode_label_strings

    counts = {(k, v): 0 for k in range(schema.K) for v in range(len(schema.vocabs[k]))}
    b_index = schema.value_index(0, "B")
    for sent in corpus:
        for span in decode_label_strings(sent.gold_labels):
            counts[(0, b_index)] += 1
            padded = tuple(span.type_path) + (NULL,) * (schema.K - 1 - len(span.type_path))
            for k, value in enumerate(padded, start=1):
                counts[(k, schema.value_index(k, value))] += 1
    return counts
