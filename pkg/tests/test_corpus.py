import pytest
from hypothesis import given, settings, strategies as st

from labelcomp.corpus import (CorpusError, SentenceExample, SyntheticSpec, entity_counts,
                              extended_ne_like_spec, frequency_table, generate_synthetic, read_conll,
                              schema_from_corpus, write_conll, write_synthetic)
from labelcomp.schema import component_frequency

import oracles


def test_read_single_sentence(tmp_path):
    p = tmp_path / "a.tsv"
    p.write_text("南\tB-Park\n公園\tI-Park\n", encoding="utf-8")
    corpus = read_conll(p)
    assert corpus == [SentenceExample(("南", "公園"), ("B-Park", "I-Park"))]


def test_read_empty_file(tmp_path):
    p = tmp_path / "a.tsv"
    p.write_text("")
    assert read_conll(p) == []


def test_read_blank_runs_and_crlf(tmp_path):
    p = tmp_path / "a.tsv"
    p.write_bytes(b"\r\n\r\na\tO\r\nb\tB-X\r\n\r\n\r\nc\tI-Y/Z\r\n")
    corpus = read_conll(p)
    assert [s.tokens for s in corpus] == [("a", "b"), ("c",)]
    assert corpus[1].gold_labels == ("I-Y/Z",)


def test_ragged_line_reports_line_number(tmp_path):
    p = tmp_path / "a.tsv"
    p.write_text("a\tO\nb\tB-X\textra\n")
    with pytest.raises(CorpusError, match=":2:"):
        read_conll(p)


def test_bad_label_reports_line_number(tmp_path):
    p = tmp_path / "a.tsv"
    p.write_text("a\tO\n\nb\tQ-X\n")
    with pytest.raises(CorpusError, match=":3:"):
        read_conll(p)


def test_label_outside_schema_rejected(tmp_path, small_schema):
    p = tmp_path / "a.tsv"
    p.write_text("a\tB-Nope\n")
    with pytest.raises(CorpusError):
        read_conll(p, small_schema)


def test_mismatched_example():
    with pytest.raises(CorpusError):
        SentenceExample(("a", "b"), ("O",))


tok = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc", "Zs", "Zl", "Zp")), min_size=1, max_size=5)
lab = st.sampled_from(["O", "B-X", "I-X", "B-A/B", "I-A/B"])
sent = st.lists(st.tuples(tok, lab), min_size=1, max_size=6).map(
    lambda pairs: SentenceExample([t for t, _ in pairs], [l for _, l in pairs]))


@settings(max_examples=60, deadline=None)
@given(st.lists(sent, max_size=5))
def test_write_read_roundtrip(tmp_path_factory, corpus):
    p = tmp_path_factory.mktemp("rt") / "c.tsv"
    write_conll(corpus, p)
    assert read_conll(p) == corpus


def test_generation_is_deterministic(tmp_path):
    spec = SyntheticSpec(n_train=50, n_dev=10, n_test=10, seed=4)
    a = write_synthetic(spec, tmp_path / "a")
    b = write_synthetic(spec, tmp_path / "b")
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes()
    other = write_synthetic(SyntheticSpec(n_train=50, n_dev=10, n_test=10, seed=5), tmp_path / "c")
    assert other["train"].read_bytes() != a["train"].read_bytes()


def test_splits_are_sentence_disjoint(tiny_synthetic):
    train, dev, test, _ = tiny_synthetic
    sets = [{s.tokens for s in c} for c in (train, dev, test)]
    assert not (sets[0] & sets[1]) and not (sets[0] & sets[2]) and not (sets[1] & sets[2])


def test_generated_labels_in_schema(tiny_synthetic):
    train, dev, test, schema = tiny_synthetic
    assert schema.K == 4
    for corpus in (train, dev, test):
        for s in corpus:
            for l in s.gold_labels:
                assert l in schema


def test_default_spec_fills_every_bucket():
    train, _, _, schema = generate_synthetic(SyntheticSpec(n_dev=1, n_test=1))
    buckets = frequency_table(train, schema)
    assert all(buckets.labels_in(b) for b in ("low", "middle", "high"))
    assert len(buckets.labels_in("low")) > len(buckets.labels_in("high"))


def test_extended_spec_size():
    assert extended_ne_like_spec().n_leaves == 200


def test_frequency_table_matches_recount(tiny_synthetic):
    train, _, _, schema = tiny_synthetic
    table = frequency_table(train, schema)
    ref = {}
    for i, s, e, typ in oracles.corpus_chunks([x.gold_labels for x in train]):
        ref[typ] = ref.get(typ, 0) + 1
    for label in schema.entity_labels():
        assert table.counts[label] == ref.get(label, 0)


def test_component_frequency_matches_scan(tiny_synthetic):
    train, _, _, schema = tiny_synthetic
    counts = component_frequency(schema, train)
    ref = oracles.component_tally(train, schema.K)
    for (k, v), n in counts.items():
        assert n == ref.get((k, schema.vocabs[k][v]), 0)


def test_empty_train_all_low(small_schema):
    buckets = frequency_table([], small_schema)
    assert buckets.labels_in("middle") == [] and buckets.labels_in("high") == []
    assert set(buckets.labels_in("low")) == set(small_schema.entity_labels())


def test_schema_from_corpus_completes_pairs():
    corpus = [SentenceExample(["a", "b"], ["B-X/Y", "O"]), SentenceExample(["c"], ["I-Z"])]
    schema = schema_from_corpus(corpus)
    assert set(schema.labels) == {"O", "B-X/Y", "I-X/Y", "B-Z", "I-Z"}
    assert entity_counts(corpus) == {"X/Y": 1, "Z": 1}


def test_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(entity_density=1.5)
    with pytest.raises(ValueError):
        SyntheticSpec(min_length=10, max_length=5)
