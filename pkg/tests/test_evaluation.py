import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from labelcomp.evaluation import (FrequencyBuckets, SpanMention, boundary_f1, bucketed_f1,
                                  decode_label_strings, decode_spans, evaluate_labels, layer_f1, span_f1)

import oracles

TYPES = ["A/B/C", "A/B/D", "A/E/C", "F/G/H", "F/G", "A"]
TAGS = ["O"] + [f"{p}-{t}" for t in TYPES for p in "BI"]

tag_seqs = st.lists(st.sampled_from(TAGS), min_size=0, max_size=10)


def S(start, end, path):
    return SpanMention(start, end, tuple(path.split("/")))


def test_decode_basic():
    assert decode_label_strings(["B-X", "I-X", "O"]) == [S(0, 2, "X")]
    assert decode_label_strings(["O", "O"]) == []
    assert decode_label_strings([]) == []


def test_decode_repair():
    assert decode_label_strings(["I-X", "I-Y", "I-Y"]) == [S(0, 1, "X"), S(1, 3, "Y")]
    assert decode_label_strings(["B-X", "B-X", "I-X"]) == [S(0, 1, "X"), S(1, 3, "X")]
    assert decode_label_strings(["B-A/B", "I-A/C"]) == [S(0, 1, "A/B"), S(1, 2, "A/C")]


def test_decode_ids(small_schema):
    ids = [small_schema.label_id(l) for l in ["B-A/B", "I-A/B", "O", "B-X"]]
    assert decode_spans(ids, small_schema) == [S(0, 2, "A/B"), S(3, 4, "X")]


@settings(max_examples=300, deadline=None)
@given(tag_seqs)
def test_decode_matches_conlleval_and_is_total(tags):
    spans = decode_label_strings(tags)
    assert [(s.start, s.end, s.label) for s in spans] == oracles.conlleval_chunks(tags)
    covered = set()
    for s in spans:
        assert 0 <= s.start < s.end <= len(tags)
        cells = set(range(s.start, s.end))
        assert not cells & covered
        covered |= cells


def test_perfect_and_empty():
    gold = [[S(0, 2, "X")], [S(1, 3, "Y/Z")]]
    sc = span_f1(gold, gold)
    assert (sc.precision, sc.recall, sc.f1) == (1.0, 1.0, 1.0)
    sc = span_f1(gold, [[], []])
    assert (sc.precision, sc.recall, sc.f1, sc.tp, sc.fn) == (0.0, 0.0, 0.0, 0, 2)
    assert boundary_f1(gold, [[], []]).f1 == 0.0


def test_boundary_ignores_type():
    gold = [[S(0, 2, "X"), S(3, 4, "Y")]]
    pred = [[S(0, 2, "Q"), S(3, 4, "R")]]
    assert boundary_f1(gold, pred).f1 == 1.0
    assert span_f1(gold, pred).f1 == 0.0


def test_layer_definition():
    gold = [[S(0, 1, "A/B")]]
    pred = [[S(0, 1, "A/C")]]
    assert layer_f1(gold, pred, 1).tp == 1
    assert layer_f1(gold, pred, 2).tp == 0
    # shallow gold vs deeper prediction differ once padding is reached
    assert layer_f1([[S(0, 1, "A/B")]], [[S(0, 1, "A/B/C")]], 2).tp == 1
    assert layer_f1([[S(0, 1, "A/B")]], [[S(0, 1, "A/B/C")]], 3).tp == 0
    with pytest.raises(ValueError):
        layer_f1(gold, pred, 0)


def test_layer_full_depth_equals_exact():
    gold = [[S(0, 1, "A/B/C"), S(2, 4, "F/G/H")]]
    pred = [[S(0, 1, "A/B/D"), S(2, 4, "F/G/H")]]
    assert layer_f1(gold, pred, 3) == span_f1(gold, pred)


def test_bucket_boundaries():
    b = FrequencyBuckets({"a": 100, "b": 101, "c": 500, "d": 501, "e": 0})
    assert [b.bucket(x) for x in "abcde"] == ["low", "middle", "middle", "high", "low"]
    assert b.bucket("never-seen") == "low"


def test_single_bucket_equals_overall():
    gold = [[S(0, 2, "X")], [S(1, 3, "Y")]]
    pred = [[S(0, 2, "X")], [S(1, 2, "Y"), S(4, 5, "X")]]
    b = bucketed_f1(gold, pred, FrequencyBuckets({"X": 5, "Y": 7}))
    assert b["low"] == span_f1(gold, pred)
    assert b["middle"].tp == b["middle"].fp == b["middle"].fn == 0


def test_bucket_hand_tally():
    counts = {"L": 3, "M": 200, "H": 900}
    gold = [[S(0, 1, "L"), S(2, 3, "M")], [S(0, 2, "H"), S(3, 4, "L")]]
    pred = [[S(0, 1, "M"), S(2, 3, "M")], [S(0, 2, "H"), S(3, 4, "Z")]]
    b = bucketed_f1(gold, pred, FrequencyBuckets(counts))
    # low: gold L,L both missed; predicted Z (unseen -> low) is a false positive
    assert (b["low"].tp, b["low"].fp, b["low"].fn) == (0, 1, 2)
    # middle: one hit, one wrong-typed prediction at (0,1)
    assert (b["middle"].tp, b["middle"].fp, b["middle"].fn) == (1, 1, 0)
    assert (b["high"].tp, b["high"].fp, b["high"].fn) == (1, 0, 0)


def _random_corpus(rng, n):
    out = []
    for _ in range(n):
        length = int(rng.integers(0, 9))
        out.append([TAGS[i] for i in rng.integers(0, len(TAGS), length)])
    return out


def _perturb(rng, corpus):
    pred = []
    for tags in corpus:
        new = list(tags)
        for i in range(len(new)):
            if rng.random() < 0.3:
                new[i] = TAGS[int(rng.integers(len(TAGS)))]
        pred.append(new)
    return pred


def test_scorers_match_bruteforce_oracles():
    rng = np.random.default_rng(2024)
    gold_tags = _random_corpus(rng, 1000)
    pred_tags = _perturb(rng, gold_tags)
    counts = {t: int(c) for t, c in zip(TYPES, [3, 150, 700, 100, 101, 501])}
    buckets = FrequencyBuckets(counts)
    rep = evaluate_labels(gold_tags, pred_tags, buckets, 3)
    as_tuple = lambda s: (s.tp, s.fp, s.fn)
    assert as_tuple(rep.overall) == oracles.exact_counts(gold_tags, pred_tags)
    assert as_tuple(rep.boundary) == oracles.boundary_counts(gold_tags, pred_tags)
    for d in (1, 2, 3):
        assert as_tuple(rep.layers[d]) == oracles.layer_counts(gold_tags, pred_tags, d)
    ref = oracles.bucket_counts(gold_tags, pred_tags, buckets.bucket)
    for b in ("low", "middle", "high"):
        assert as_tuple(rep.buckets[b]) == ref[b]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(tag_seqs, tag_seqs), min_size=1, max_size=6))
def test_monotonicity_and_partition(pairs):
    gold_tags = [g for g, _ in pairs]
    pred_tags = [p[:len(g)] + ["O"] * (len(g) - len(p)) for g, p in pairs]
    buckets = FrequencyBuckets({"A/B/C": 50, "A/B/D": 300, "F/G/H": 600})
    rep = evaluate_labels(gold_tags, pred_tags, buckets, 3)
    assert rep.boundary.f1 >= rep.overall.f1 - 1e-12
    assert rep.boundary.tp >= rep.overall.tp
    tps = [rep.layers[d].tp for d in (1, 2, 3)]
    assert tps == sorted(tps, reverse=True)
    f1s = [rep.layers[d].f1 for d in (1, 2, 3)]
    assert all(a >= b - 1e-12 for a, b in zip(f1s, f1s[1:]))
    n_gold = rep.overall.tp + rep.overall.fn
    n_pred = rep.overall.tp + rep.overall.fp
    assert sum(s.tp + s.fn for s in rep.buckets.values()) == n_gold
    assert sum(s.tp + s.fp for s in rep.buckets.values()) == n_pred
    assert rep.overall.tp <= min(n_gold, n_pred)


def test_report_tsv_rows():
    rep = evaluate_labels([["B-A/B/C", "O"]], [["B-A/B/C", "O"]], FrequencyBuckets({}), 3)
    lines = rep.to_tsv().splitlines()
    assert lines[0].split("\t") == ["view", "key", "precision", "recall", "f1", "tp", "fp", "fn"]
    keys = [tuple(l.split("\t")[:2]) for l in lines[1:]]
    assert keys == [("overall", "all"), ("bucket", "low"), ("bucket", "middle"), ("bucket", "high"),
                    ("layer", "1"), ("layer", "2"), ("layer", "3"), ("boundary", "all")]


def test_misaligned_raises():
    with pytest.raises(ValueError):
        span_f1([[]], [[], []])
