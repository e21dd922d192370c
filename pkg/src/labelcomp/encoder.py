"""Windowed feed-forward token encoder.

Each token is represented by the concatenated word embeddings of the
``2r + 1`` positions around it (PAD outside the sentence), passed through a
tanh hidden layer with dropout and a linear output layer of width ``D``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .numeric import ParameterStore, dropout, embedding_normal, glorot_uniform

PAD, UNK = 0, 1
PAD_TOKEN, UNK_TOKEN = "<pad>", "<unk>"


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    word_dim: int = 32
    window_radius: int = 2
    hidden_dim: int = 128
    output_dim: int = 64
    dropout_rate: float = 0.1

    def __post_init__(self):
        for name in ("vocab_size", "word_dim", "hidden_dim", "output_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.window_radius < 0:
            raise ValueError("window_radius must be non-negative")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")

    @property
    def input_dim(self) -> int:
        return (2 * self.window_radius + 1) * self.word_dim


class TokenVocabulary:
    def __init__(self, tokens: Sequence[str] = ()):
        self.itos = [PAD_TOKEN, UNK_TOKEN] + [t for t in tokens if t not in (PAD_TOKEN, UNK_TOKEN)]
        self.stoi = {t: i for i, t in enumerate(self.itos)}

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def encode(self, tokens: Iterable[str]) -> np.ndarray:
        return np.array([self.stoi.get(t, UNK) for t in tokens], dtype=np.int64)


def build_vocab(corpus, min_count: int = 1) -> TokenVocabulary:
    """Tokens seen at least ``min_count`` times, ordered by count desc then text."""
    counts = Counter(t for sent in corpus for t in _tokens(sent))
    kept = sorted((t for t, n in counts.items() if n >= min_count), key=lambda t: (-counts[t], t))
    return TokenVocabulary(kept)


def _tokens(sent):
    return sent.tokens if hasattr(sent, "tokens") else sent


def window_ids(sentences: Sequence[np.ndarray], radius: int) -> np.ndarray:
    """``(total_tokens, 2r+1)`` word ids; positions outside a sentence are PAD."""
    out = []
    for ids in sentences:
        padded = np.concatenate([np.full(radius, PAD), ids, np.full(radius, PAD)])
        n = len(ids)
        idx = np.arange(n)[:, None] + np.arange(2 * radius + 1)[None, :]
        out.append(padded[idx])
    if not out:
        return np.zeros((0, 2 * radius + 1), dtype=np.int64)
    return np.concatenate(out).astype(np.int64)


def init_encoder_params(store: ParameterStore, cfg: EncoderConfig, rng: np.random.Generator) -> None:
    store.add("enc.E", embedding_normal(rng, cfg.vocab_size, cfg.word_dim))
    store.add("enc.W1", glorot_uniform(rng, cfg.input_dim, cfg.hidden_dim))
    store.add("enc.b1", np.zeros(cfg.hidden_dim))
    store.add("enc.W2", glorot_uniform(rng, cfg.hidden_dim, cfg.output_dim))
    store.add("enc.b2", np.zeros(cfg.output_dim))


@dataclass
class EncoderCache:
    win: np.ndarray
    x: np.ndarray
    h: np.ndarray
    hd: np.ndarray
    mask: np.ndarray | None


def encode(sentences: Sequence[np.ndarray], store: ParameterStore, cfg: EncoderConfig,
           rng: np.random.Generator | None = None, training: bool = False):
    """Features for every token of every sentence, stacked; plus a backward cache."""
    for ids in sentences:
        if len(ids) and (ids.min() < 0 or ids.max() >= cfg.vocab_size):
            raise ValueError("token id out of vocabulary range")
    win = window_ids(sentences, cfg.window_radius)
    x = store["enc.E"][win].reshape(len(win), cfg.input_dim)
    h = np.tanh(x @ store["enc.W1"] + store["enc.b1"])
    hd, mask = dropout(h, cfg.dropout_rate, rng, training)
    f = hd @ store["enc.W2"] + store["enc.b2"]
    return f, EncoderCache(win, x, h, hd, mask)


def encode_backward(df: np.ndarray, cache: EncoderCache, store: ParameterStore,
                    cfg: EncoderConfig) -> None:
    """Accumulate encoder gradients for upstream ``df`` (tokens x D)."""
    store.grad("enc.W2")[...] += cache.hd.T @ df
    store.grad("enc.b2")[...] += df.sum(axis=0)
    dh = df @ store["enc.W2"].T
    if cache.mask is not None:
        dh = dh * cache.mask
    dpre = dh * (1.0 - cache.h * cache.h)
    store.grad("enc.W1")[...] += cache.x.T @ dpre
    store.grad("enc.b1")[...] += dpre.sum(axis=0)
    dx = (dpre @ store["enc.W1"].T).reshape(len(cache.win), -1, cfg.word_dim)
    np.add.at(store.grad("enc.E"), cache.win, dx)
