import pytest

from labelcomp.corpus import SentenceExample, SyntheticSpec, generate_synthetic
from labelcomp.encoder import EncoderConfig, build_vocab
from labelcomp.model import LabelingModel
from labelcomp.schema import build_schema


@pytest.fixture
def small_schema():
    return build_schema(["O", "B-A/B", "I-A/B", "B-A/C", "I-A/C", "B-X", "I-X"])


@pytest.fixture(scope="session")
def tiny_synthetic():
    spec = SyntheticSpec(n_top_types=2, n_mid_per_top=2, n_leaf_per_mid=2,
                         n_train=60, n_dev=20, n_test=20, seed=3)
    return generate_synthetic(spec)


def make_model(schema, mode, seed=0, D=16, vocab_words=("a", "b", "c", "d"), dropout=0.1, **kw):
    corpus = [SentenceExample(list(vocab_words), ["O"] * len(vocab_words))]
    vocab = build_vocab(corpus)
    cfg = EncoderConfig(len(vocab), word_dim=kw.get("word_dim", 6), window_radius=kw.get("radius", 1),
                        hidden_dim=kw.get("hidden", 10), output_dim=D, dropout_rate=dropout)
    return LabelingModel(schema, vocab, cfg, mode, seed=seed)


def random_batch(model, rng, n_sent=3, max_len=6):
    ids, gold = [], []
    for _ in range(n_sent):
        n = int(rng.integers(1, max_len + 1))
        ids.append(rng.integers(0, model.cfg.vocab_size, size=n))
        gold.append(rng.integers(0, model.schema.num_labels, size=n))
    return ids, gold


# -- acceptance criterion reporting ------------------------------------------
#
# Tests marked ``criterion(n, title)`` are grouped by number; a criterion
# passes when every test carrying its number passes.  Details recorded with
# ``record_property("detail", ...)`` are echoed in the summary.

_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed or rep.skipped):
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "status": "PASS", "details": []})
    if rep.failed:
        entry["status"] = "FAIL"
    elif rep.skipped and entry["status"] == "PASS":
        entry["status"] = "SKIP"
    if rep.when == "call":
        entry["details"] += [v for k, v in item.user_properties if k == "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {e['status']}  {e['title']}")
        for d in e["details"]:
            terminalreporter.write_line(f"    {d}")
