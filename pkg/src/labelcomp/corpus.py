"""Corpus files, training-set label statistics and the synthetic benchmark.

The synthetic generator produces a three-layer type hierarchy
(``Top/Mid/Leaf``) with Zipf-skewed leaf frequencies.  Entity tokens are
drawn from word pools attached to each layer of the hierarchy, so a rare
leaf shares most of its surface evidence with its frequent siblings and only
a leaf-specific cue token tells it apart.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .evaluation import FrequencyBuckets, decode_label_strings
from .schema import (LabelSchema, SchemaError, build_schema, complete_labels, label_depth, parse_label,
                     write_schema_file)


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class SentenceExample:
    tokens: tuple[str, ...]
    gold_labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "gold_labels", tuple(self.gold_labels))
        if len(self.tokens) != len(self.gold_labels):
            raise CorpusError(f"{len(self.tokens)} tokens but {len(self.gold_labels)} labels")

    def __len__(self):
        return len(self.tokens)


def read_conll(path, schema: LabelSchema | None = None) -> list[SentenceExample]:
    """Read ``token<TAB>label`` lines; blank lines separate sentences."""
    sentences: list[SentenceExample] = []
    tokens, labels = [], []
    with open(path, encoding="utf-8", newline=None) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                if tokens:
                    sentences.append(SentenceExample(tokens, labels))
                    tokens, labels = [], []
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise CorpusError(f"{path}:{lineno}: expected 2 tab-separated fields, got {len(parts)}")
            token, label = parts
            _check_label(label, schema, f"{path}:{lineno}")
            tokens.append(token)
            labels.append(label)
    if tokens:
        sentences.append(SentenceExample(tokens, labels))
    return sentences


def _check_label(label: str, schema: LabelSchema | None, where: str) -> None:
    try:
        if schema is not None:
            schema.label_id(label)
        else:
            parse_label(label, max(2, label_depth(label) + 1))
    except SchemaError as exc:
        raise CorpusError(f"{where}: bad label {label!r}: {exc}") from None


def write_conll(corpus: Sequence[SentenceExample], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, sent in enumerate(corpus):
            if i:
                fh.write("\n")
            for tok, lab in zip(sent.tokens, sent.gold_labels):
                fh.write(f"{tok}\t{lab}\n")


def schema_from_corpus(*corpora: Sequence[SentenceExample]) -> LabelSchema:
    """Schema over every type path seen, with both B-/I- variants."""
    paths = set()
    for corpus in corpora:
        for sent in corpus:
            for lab in sent.gold_labels:
                if lab != "O":
                    paths.add(lab.partition("-")[2])
    return build_schema(complete_labels(sorted(paths)))


def entity_counts(corpus: Sequence[SentenceExample]) -> Counter:
    """Gold entity mentions per type path."""
    counts = Counter()
    for sent in corpus:
        for span in decode_label_strings(sent.gold_labels):
            counts[span.label] += 1
    return counts


def frequency_table(train: Sequence[SentenceExample], schema: LabelSchema) -> FrequencyBuckets:
    """Mention counts for every entity label of ``schema`` (zero if unseen)."""
    counts = entity_counts(train)
    table = {label: counts.get(label, 0) for label in schema.entity_labels()}
    for label, n in counts.items():
        table.setdefault(label, n)
    return FrequencyBuckets(table)


# -- synthetic benchmark -----------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    n_top_types: int = 4
    n_mid_per_top: int = 3
    n_leaf_per_mid: int = 3
    zipf_exponent: float = 1.3
    n_train: int = 2000
    n_dev: int = 500
    n_test: int = 1000
    min_length: int = 8
    max_length: int = 20
    entity_density: float = 0.12
    cue_strength: float = 0.9
    n_filler_words: int = 400
    n_top_words: int = 4
    n_mid_words: int = 4
    seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "seed":
                continue
            if f.name in ("cue_strength",):
                if not 0.0 <= v <= 1.0:
                    raise ValueError("cue_strength must be in [0, 1]")
            elif v <= 0:
                raise ValueError(f"{f.name} must be positive")
        if not 0.0 < self.entity_density < 1.0:
            raise ValueError("entity_density must be in (0, 1)")
        if self.min_length > self.max_length:
            raise ValueError("min_length > max_length")

    @property
    def n_leaves(self) -> int:
        return self.n_top_types * self.n_mid_per_top * self.n_leaf_per_mid

    def asdict(self) -> dict:
        return asdict(self)


def extended_ne_like_spec(**overrides) -> SyntheticSpec:
    """A 200-leaf hierarchy, the size of the Extended Named Entity tag set."""
    return SyntheticSpec(**{"n_top_types": 8, "n_mid_per_top": 5, "n_leaf_per_mid": 5, **overrides})


def type_hierarchy(spec: SyntheticSpec) -> list[tuple[str, str, str]]:
    return [
        (f"Top{t}", f"Top{t}_Mid{m}", f"Top{t}_Mid{m}_Leaf{l}")
        for t in range(spec.n_top_types)
        for m in range(spec.n_mid_per_top)
        for l in range(spec.n_leaf_per_mid)
    ]


def leaf_probabilities(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    """Zipf weights over leaves; ranks are shuffled across the hierarchy."""
    ranks = rng.permutation(spec.n_leaves) + 1
    w = ranks.astype(np.float64) ** -spec.zipf_exponent
    return w / w.sum()


_LENGTH_WEIGHTS = np.array([0.3, 0.35, 0.2, 0.15])


class _Generator:
    def __init__(self, spec: SyntheticSpec):
        self.spec = spec
        self.rng = np.random.Generator(np.random.PCG64(spec.seed))
        self.leaves = type_hierarchy(spec)
        self.p_leaf = leaf_probabilities(spec, self.rng)
        fr = np.arange(1, spec.n_filler_words + 1, dtype=np.float64) ** -1.0
        self.p_filler = fr / fr.sum()

    def filler(self) -> str:
        return f"w{self.rng.choice(self.spec.n_filler_words, p=self.p_filler)}"

    def entity_tokens(self, leaf: tuple[str, str, str]) -> list[str]:
        spec, rng = self.spec, self.rng
        top, mid, name = leaf
        length = int(rng.choice(4, p=_LENGTH_WEIGHTS)) + 1
        toks = []
        for _ in range(length):
            u = rng.random()
            if u < 0.55:
                toks.append(f"{mid.lower()}_w{rng.integers(spec.n_mid_words)}")
            else:
                toks.append(f"{top.lower()}_w{rng.integers(spec.n_top_words)}")
        if rng.random() < spec.cue_strength:
            toks[int(rng.integers(length))] = f"cue_{name.lower()}"
        return toks

    def sentence(self) -> SentenceExample:
        spec, rng = self.spec, self.rng
        n = int(rng.integers(spec.min_length, spec.max_length + 1))
        tokens, labels = [], []
        while len(tokens) < n:
            if (not labels or labels[-1] == "O") and rng.random() < spec.entity_density:
                leaf = self.leaves[int(rng.choice(len(self.leaves), p=self.p_leaf))]
                ent = self.entity_tokens(leaf)
                path = "/".join(leaf)
                tokens += ent
                labels += [f"B-{path}"] + [f"I-{path}"] * (len(ent) - 1)
            else:
                tokens.append(self.filler())
                labels.append("O")
        return SentenceExample(tokens, labels)


def generate_synthetic(spec: SyntheticSpec):
    """Train/dev/test corpora and the full schema; deterministic in ``spec.seed``."""
    gen = _Generator(spec)
    seen: set[tuple[str, ...]] = set()
    splits = []
    for size in (spec.n_train, spec.n_dev, spec.n_test):
        split = []
        while len(split) < size:
            sent = gen.sentence()
            if sent.tokens in seen:
                continue
            seen.add(sent.tokens)
            split.append(sent)
        splits.append(split)
    schema = build_schema(complete_labels("/".join(l) for l in gen.leaves))
    train, dev, test = splits
    return train, dev, test, schema


def write_synthetic(spec: SyntheticSpec, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, dev, test, schema = generate_synthetic(spec)
    paths = {name: out / f"{name}.tsv" for name in ("train", "dev", "test")}
    for name, corpus in zip(("train", "dev", "test"), (train, dev, test)):
        write_conll(corpus, paths[name])
    paths["schema"] = out / "labels.txt"
    write_schema_file(schema, paths["schema"])
    return paths
