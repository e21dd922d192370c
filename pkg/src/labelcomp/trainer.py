"""Training loop, best-dev selection and the multi-seed driver."""
from __future__ import annotations

import logging
import math
import statistics
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .composition import CompositionMode
from .corpus import SentenceExample, frequency_table
from .encoder import EncoderConfig, TokenVocabulary, build_vocab
from .evaluation import EvalReport, FrequencyBuckets, decode_label_strings, decode_spans, evaluate_spans
from .model import LabelingModel
from .numeric import NumericError, adam_step, make_rngs
from .schema import LabelSchema

log = logging.getLogger(__name__)

FINETUNE_LEARNING_RATE = 5.0e-5


@dataclass(frozen=True)
class TrainConfig:
    mode: CompositionMode = CompositionMode.SUM
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-3
    dropout_rate: float = 0.1
    seed: int = 0
    selection_metric: str = "overall"
    word_dim: int = 32
    window_radius: int = 2
    hidden_dim: int = 128
    output_dim: int = 64
    min_count: int = 1
    component_dims: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", CompositionMode(self.mode))
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.selection_metric != "overall":
            raise ValueError("only overall span F1 is supported for model selection")

    def encoder_config(self, vocab_size: int) -> EncoderConfig:
        return EncoderConfig(vocab_size, self.word_dim, self.window_radius,
                             self.hidden_dim, self.output_dim, self.dropout_rate)


def finetune_preset(**overrides) -> TrainConfig:
    """Learning rate and feature width of a BERT-base fine-tuning setup."""
    return TrainConfig(**{"learning_rate": FINETUNE_LEARNING_RATE, "output_dim": 768, **overrides})


@dataclass
class RunResult:
    config: TrainConfig
    epoch_losses: list[float]
    dev_reports: list[EvalReport]
    best_epoch: int
    model: LabelingModel
    buckets: FrequencyBuckets
    seed: int = 0

    @property
    def best_dev(self) -> EvalReport:
        return self.dev_reports[self.best_epoch - 1]

    def metrics_log(self) -> str:
        lines = ["epoch\tloss\tdev_f1_overall\tdev_f1_low\tdev_f1_mid\tdev_f1_high"]
        for e, (loss, rep) in enumerate(zip(self.epoch_losses, self.dev_reports), start=1):
            m = rep.metrics()
            lines.append(f"{e}\t{loss:.8f}\t{m['overall']:.4f}\t{m['low']:.4f}\t"
                         f"{m['middle']:.4f}\t{m['high']:.4f}")
        return "\n".join(lines) + "\n"


def encode_corpus(corpus: Sequence[SentenceExample], vocab: TokenVocabulary, schema: LabelSchema):
    ids = [vocab.encode(s.tokens) for s in corpus]
    gold = [np.array([schema.label_id(l) for l in s.gold_labels], dtype=np.int64) for s in corpus]
    return ids, gold


def evaluate_model(model: LabelingModel, corpus: Sequence[SentenceExample],
                   buckets: FrequencyBuckets, token_ids=None) -> EvalReport:
    if token_ids is None:
        token_ids = [model.vocab.encode(s.tokens) for s in corpus]
    preds = model.predict_ids(token_ids)
    gold = [decode_label_strings(s.gold_labels) for s in corpus]
    pred = [decode_spans(p, model.schema) for p in preds]
    return evaluate_spans(gold, pred, buckets, model.schema.hierarchy_depth)


def token_accuracy(model: LabelingModel, corpus: Sequence[SentenceExample]) -> float:
    ids, gold = encode_corpus(corpus, model.vocab, model.schema)
    preds = model.predict_ids(ids)
    total = sum(len(g) for g in gold)
    right = sum(int((p == g).sum()) for p, g in zip(preds, gold))
    return right / total if total else 1.0


def train(corpus_train: Sequence[SentenceExample], corpus_dev: Sequence[SentenceExample],
          schema: LabelSchema, config: TrainConfig, vocab: TokenVocabulary | None = None) -> RunResult:
    """Train with Adam and keep the parameters of the best dev epoch.

    Batches are groups of whole sentences; their tokens are flattened, so no
    padding enters the loss.
    """
    vocab = vocab or build_vocab(corpus_train, config.min_count)
    model = LabelingModel(schema, vocab, config.encoder_config(len(vocab)), config.mode,
                          seed=config.seed, component_dims=config.component_dims)
    buckets = frequency_table(corpus_train, schema)
    rngs = make_rngs(config.seed)
    ids, gold = encode_corpus(corpus_train, vocab, schema)
    dev_ids = [vocab.encode(s.tokens) for s in corpus_dev]

    losses, reports = [], []
    best_epoch, best_f1, best_params = 0, -1.0, None
    for epoch in range(1, config.epochs + 1):
        order = rngs["shuffle"].permutation(len(ids))
        batch_losses = []
        for b, start in enumerate(range(0, len(order), config.batch_size)):
            idx = order[start:start + config.batch_size]
            # overflow is detected below and reported with its location
            with np.errstate(over="ignore", invalid="ignore"):
                loss = model.loss_and_backward([ids[i] for i in idx], [gold[i] for i in idx],
                                               rngs["dropout"], training=True)
            if not math.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {b}")
            try:
                adam_step(model.store, config.learning_rate)
            except NumericError as exc:
                raise NumericError(f"epoch {epoch}, batch {b}: {exc}") from None
            batch_losses.append(loss)
        losses.append(float(np.mean(batch_losses)) if batch_losses else 0.0)
        report = evaluate_model(model, corpus_dev, buckets, dev_ids)
        reports.append(report)
        f1 = report.overall.f1
        log.info("epoch %d loss %.5f dev f1 %.4f", epoch, losses[-1], f1)
        if f1 > best_f1:
            best_epoch, best_f1, best_params = epoch, f1, model.store.snapshot()
    model.store.load(best_params)
    return RunResult(config, losses, reports, best_epoch, model, buckets, config.seed)


def fit_to_accuracy(corpus: Sequence[SentenceExample], schema: LabelSchema, config: TrainConfig,
                    target: float = 0.99, max_epochs: int = 200) -> tuple[LabelingModel, int, float]:
    """Train on ``corpus`` until its own token accuracy reaches ``target``.

    Returns the model, the number of epochs used and the final accuracy.
    Used as a capacity sanity check; there is no dev selection.
    """
    vocab = build_vocab(corpus, config.min_count)
    model = LabelingModel(schema, vocab, config.encoder_config(len(vocab)), config.mode,
                          seed=config.seed, component_dims=config.component_dims)
    rngs = make_rngs(config.seed)
    ids, gold = encode_corpus(corpus, vocab, schema)
    acc = token_accuracy(model, corpus)
    for epoch in range(1, max_epochs + 1):
        order = rngs["shuffle"].permutation(len(ids))
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            model.loss_and_backward([ids[i] for i in idx], [gold[i] for i in idx], rngs["dropout"])
            adam_step(model.store, config.learning_rate)
        acc = token_accuracy(model, corpus)
        if acc >= target:
            return model, epoch, acc
    return model, max_epochs, acc


@dataclass
class MultiSeedResult:
    mode: CompositionMode
    seeds: list[int]
    reports: list[EvalReport]
    runs: list[RunResult] = field(default_factory=list, repr=False)

    def summary(self) -> dict[str, tuple[float, float]]:
        return summarize(self.reports)


def summarize(reports: Sequence[EvalReport]) -> dict[str, tuple[float, float]]:
    """Sample mean and sample standard deviation (n - 1) of each metric."""
    if len(reports) < 2:
        raise ValueError("need at least two runs to estimate a standard deviation")
    keys = reports[0].metrics().keys()
    out = {}
    for k in keys:
        vals = [r.metrics()[k] for r in reports]
        out[k] = (statistics.fmean(vals), statistics.stdev(vals))
    return out


def multi_seed(config: TrainConfig, seeds: Sequence[int], corpus_train, corpus_dev, corpus_test,
               schema: LabelSchema, keep_runs: bool = False) -> MultiSeedResult:
    """Train once per seed and score each best-dev model on the test set."""
    if len(seeds) < 2:
        raise ValueError("multi_seed needs at least two seeds")
    reports, runs = [], []
    for seed in seeds:
        run = train(corpus_train, corpus_dev, schema, replace(config, seed=seed))
        reports.append(evaluate_model(run.model, corpus_test, run.buckets))
        if keep_runs:
            runs.append(run)
    return MultiSeedResult(config.mode, list(seeds), reports, runs)
