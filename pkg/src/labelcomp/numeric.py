"""Small float64 numeric layer: parameters, Adam, losses, gradient checks.

Gradients are computed by hand-written adjoints in the modules that own each
layer; this module holds the shared pieces.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

STREAMS = ("encoder_init", "label_init", "dropout", "shuffle")


class NumericError(RuntimeError):
    """Non-finite values encountered during training."""


def make_rngs(seed: int) -> dict[str, np.random.Generator]:
    """Independent PCG64 streams for each source of randomness.

    Separate streams keep e.g. the encoder initialization identical across
    label-embedding modes that draw a different number of label parameters.
    """
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.Generator(np.random.PCG64(s)) for name, s in zip(STREAMS, children)}


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_in, fan_out))


def embedding_normal(rng: np.random.Generator, rows: int, cols: int, scale: float = 0.1) -> np.ndarray:
    return rng.normal(0.0, scale, size=(rows, cols))


@dataclass
class Parameter:
    value: np.ndarray
    grad: np.ndarray = field(init=False)
    m: np.ndarray = field(init=False)
    v: np.ndarray = field(init=False)

    def __post_init__(self):
        self.value = np.array(self.value, dtype=np.float64, order="C", copy=True)
        if self.value.ndim == 1:
            self.value = self.value[None, :]
        self.grad = np.zeros_like(self.value)
        self.m = np.zeros_like(self.value)
        self.v = np.zeros_like(self.value)


class ParameterStore:
    """Named parameter groups with gradient and Adam moment buffers."""

    def __init__(self):
        self.params: dict[str, Parameter] = {}
        self.t = 0

    def add(self, name: str, value) -> Parameter:
        if name in self.params:
            raise KeyError(f"parameter {name!r} already registered")
        p = Parameter(value)
        self.params[name] = p
        return p

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name].value

    def grad(self, name: str) -> np.ndarray:
        return self.params[name].grad

    def __contains__(self, name):
        return name in self.params

    def __iter__(self):
        return iter(self.params)

    def items(self):
        return self.params.items()

    def zero_grad(self):
        for p in self.params.values():
            p.grad.fill(0.0)

    def snapshot(self) -> dict[str, np.ndarray]:
        return {n: p.value.copy() for n, p in self.params.items()}

    def load(self, values: dict[str, np.ndarray]):
        for n, v in values.items():
            p = self.params[n]
            if p.value.shape != np.shape(v):
                raise ValueError(f"shape mismatch for {n}: {p.value.shape} vs {np.shape(v)}")
            p.value[...] = v


def adam_step(store: ParameterStore, lr: float, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One bias-corrected Adam update over every group, then zero gradients."""
    for name, p in store.items():
        if not np.all(np.isfinite(p.grad)):
            raise NumericError(f"non-finite gradient in parameter group {name!r}")
    store.t += 1
    t = store.t
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for p in store.params.values():
        p.m *= beta1
        p.m += (1.0 - beta1) * p.grad
        p.v *= beta2
        p.v += (1.0 - beta2) * p.grad * p.grad
        p.value -= lr * (p.m / c1) / (np.sqrt(p.v / c2) + eps)
        p.grad.fill(0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, gold) -> tuple[np.ndarray, np.ndarray]:
    """Per-row losses and ``dloss/dlogits`` for each row.

    Accepts a single vector with an int gold or an ``n x C`` matrix with an
    array of gold ids.  The returned gradient is ``softmax - onehot``.
    """
    single = np.ndim(logits) == 1
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    gold = np.atleast_1d(np.asarray(gold, dtype=np.int64))
    rows = np.arange(len(gold))
    top = logits.argmax(axis=1)
    z = logits - logits[rows, top][:, None]
    rest = np.exp(z)
    rest[rows, top] = 0.0
    # log1p over the non-max terms keeps precision when one logit dominates
    lse = np.log1p(rest.sum(axis=1))
    loss = lse - z[rows, gold]
    dlogits = np.exp(z - lse[:, None])
    dlogits[rows, gold] -= 1.0
    if single:
        return loss[0], dlogits[0]
    return loss, dlogits


def dropout(x: np.ndarray, rate: float, rng: np.random.Generator | None,
            training: bool) -> tuple[np.ndarray, np.ndarray | None]:
    """Inverted dropout. Returns the output and the scaled mask (None if inactive)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, None
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def grad_check(loss_and_grad: Callable[[], float], store: ParameterStore,
               epsilon: float = 1e-5, samples: int = 200, seed: int = 0,
               abs_floor: float = 1e-8) -> dict[str, float]:
    """Max relative error between analytic and central-difference gradients.

    ``loss_and_grad`` must be deterministic and must leave the analytic
    gradient in ``store`` when called.  Up to ``samples`` coordinates per
    group are checked (all of them for smaller groups).  The relative error
    is ``|a - n| / max(|a|, |n|, abs_floor)``.
    """
    rng = np.random.default_rng(seed)
    store.zero_grad()
    loss_and_grad()
    analytic = {n: p.grad.copy() for n, p in store.items()}
    errors = {}
    for name, p in store.items():
        flat = p.value.reshape(-1)
        size = flat.size
        idx = np.arange(size) if size <= samples else rng.choice(size, samples, replace=False)
        worst = 0.0
        for i in idx:
            orig = flat[i]
            flat[i] = orig + epsilon
            store.zero_grad()
            up = loss_and_grad()
            flat[i] = orig - epsilon
            store.zero_grad()
            down = loss_and_grad()
            flat[i] = orig
            numeric = (up - down) / (2 * epsilon)
            a = analytic[name].reshape(-1)[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), abs_floor)
            worst = max(worst, err)
        errors[name] = worst
    store.zero_grad()
    return errors


# -- checkpoint files ------------------------------------------------------
#
# Plain text, UTF-8, "\n" line endings:
#   line 1:   "labelcomp-checkpoint <version>"
#   line 2:   JSON header (sorted keys) with metadata and the tensor list
#   then per tensor: "<name>\t<rows>\t<cols>\t<v0> <v1> ..." with each value
#   written via float.hex() so the round trip is exact.
# The header's "tensor_digest" is a sha256 over the tensor lines.

CHECKPOINT_VERSION = 1


def write_tensors(path, tensors: dict[str, np.ndarray], meta: dict) -> None:
    lines = []
    for name in sorted(tensors):
        arr = np.atleast_2d(np.asarray(tensors[name], dtype=np.float64))
        vals = " ".join(float(x).hex() for x in arr.reshape(-1))
        lines.append(f"{name}\t{arr.shape[0]}\t{arr.shape[1]}\t{vals}")
    body = "\n".join(lines) + "\n"
    header = dict(meta, tensors=sorted(tensors),
                  tensor_digest=hashlib.sha256(body.encode()).hexdigest())
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"labelcomp-checkpoint {CHECKPOINT_VERSION}\n")
        fh.write(json.dumps(header, sort_keys=True, ensure_ascii=False) + "\n")
        fh.write(body)


def read_tensors(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, encoding="utf-8") as fh:
        magic = fh.readline().split()
        if len(magic) != 2 or magic[0] != "labelcomp-checkpoint":
            raise ValueError(f"{path}: not a checkpoint file")
        if int(magic[1]) != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {magic[1]}")
        header = json.loads(fh.readline())
        body = fh.read()
    if hashlib.sha256(body.encode()).hexdigest() != header["tensor_digest"]:
        raise ValueError(f"{path}: tensor digest mismatch (corrupt file)")
    tensors = {}
    for line in body.splitlines():
        name, rows, cols, vals = line.split("\t")
        data = [float.fromhex(v) for v in vals.split()] if vals else []
        tensors[name] = np.array(data, dtype=np.float64).reshape(int(rows), int(cols))
    return tensors, header
