"""Label-embedding matrices: independent rows or composed from components.

``baseline`` keeps one free row per label.  ``sum`` and ``concat`` keep one
matrix per component type and rebuild the label matrix on every forward pass;
``scatter_label_gradients`` is the adjoint that routes label-row gradients
back to the shared component rows.
"""
from __future__ import annotations

import csv
import enum
from typing import Sequence

import numpy as np

from .numeric import ParameterStore, embedding_normal
from .schema import LabelSchema


class CompositionMode(str, enum.Enum):
    BASELINE = "baseline"
    SUM = "sum"
    CONCAT = "concat"


class ConfigError(ValueError):
    pass


def component_dims(mode: CompositionMode, K: int, D: int,
                   override: Sequence[int] | None = None) -> list[int]:
    """Per-type embedding widths; concat splits ``D`` as floor(D/K) + remainder on the last."""
    mode = CompositionMode(mode)
    if mode is CompositionMode.SUM:
        if override is not None and any(d != D for d in override):
            raise ConfigError("sum mode requires every component width to equal D")
        return [D] * K
    if mode is CompositionMode.CONCAT:
        if override is not None:
            dims = list(override)
            if len(dims) != K or sum(dims) != D or min(dims) < 1:
                raise ConfigError(f"concat widths {dims} must be {K} positive ints summing to {D}")
            return dims
        if D < K:
            raise ConfigError(f"concat mode needs D >= K ({D} < {K})")
        dims = [D // K] * K
        dims[-1] += D - sum(dims)
        return dims
    return []


def component_param_name(k: int) -> str:
    return f"label.component{k}"


def init_label_params(store: ParameterStore, schema: LabelSchema, mode, D: int,
                      rng: np.random.Generator, dims: Sequence[int] | None = None) -> None:
    mode = CompositionMode(mode)
    if mode is CompositionMode.BASELINE:
        store.add("label.W", embedding_normal(rng, schema.num_labels, D))
        return
    for k, d in enumerate(component_dims(mode, schema.K, D, dims)):
        store.add(component_param_name(k), embedding_normal(rng, len(schema.vocabs[k]), d))


def component_embeddings(store: ParameterStore, schema: LabelSchema) -> list[np.ndarray]:
    return [store[component_param_name(k)] for k in range(schema.K)]


def compose_label_matrix(schema: LabelSchema, embeddings, mode) -> np.ndarray:
    """Build the ``|Y| x D`` label matrix.

    ``embeddings`` is the list of component matrices for ``sum``/``concat``
    and the free label matrix for ``baseline``.
    """
    mode = CompositionMode(mode)
    if mode is CompositionMode.BASELINE:
        W = np.asarray(embeddings)
        if W.shape[0] != schema.num_labels:
            raise ConfigError(f"baseline matrix has {W.shape[0]} rows for {schema.num_labels} labels")
        return W
    if len(embeddings) != schema.K:
        raise ConfigError(f"expected {schema.K} component matrices, got {len(embeddings)}")
    comps = schema.components
    rows = [E[comps[:, k]] for k, E in enumerate(embeddings)]
    if mode is CompositionMode.SUM:
        widths = {E.shape[1] for E in embeddings}
        if len(widths) != 1:
            raise ConfigError(f"sum mode needs equal component widths, got {sorted(widths)}")
        W = rows[0].copy()
        for r in rows[1:]:
            W += r
        return W
    return np.concatenate(rows, axis=1)


def scatter_label_gradients(dW: np.ndarray, schema: LabelSchema, mode,
                            grads: list[np.ndarray]) -> None:
    """Accumulate ``dW`` into component gradient buffers ``grads`` in place."""
    mode = CompositionMode(mode)
    comps = schema.components
    if mode is CompositionMode.SUM:
        for k, g in enumerate(grads):
            np.add.at(g, comps[:, k], dW)
    elif mode is CompositionMode.CONCAT:
        start = 0
        for k, g in enumerate(grads):
            width = g.shape[1]
            np.add.at(g, comps[:, k], dW[:, start:start + width])
            start += width
    else:
        raise ConfigError("baseline mode has no component gradients")


def label_scores(features: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``logits[i, y] = W[y] . features[i]``."""
    if features.shape[-1] != W.shape[1]:
        raise ConfigError(f"feature width {features.shape[-1]} != label width {W.shape[1]}")
    return features @ W.T


class LabelEmbedding:
    """Binds a schema and mode to the label parameters inside a store."""

    def __init__(self, schema: LabelSchema, mode, D: int, dims: Sequence[int] | None = None):
        self.schema = schema
        self.mode = CompositionMode(mode)
        self.D = D
        self.dims = component_dims(self.mode, schema.K, D, dims)

    def init(self, store: ParameterStore, rng: np.random.Generator) -> None:
        init_label_params(store, self.schema, self.mode, self.D, rng, self.dims or None)

    def matrix(self, store: ParameterStore) -> np.ndarray:
        if self.mode is CompositionMode.BASELINE:
            return compose_label_matrix(self.schema, store["label.W"], self.mode)
        return compose_label_matrix(self.schema, component_embeddings(store, self.schema), self.mode)

    def backward(self, store: ParameterStore, dW: np.ndarray) -> None:
        if self.mode is CompositionMode.BASELINE:
            store.grad("label.W")[...] += dW
        else:
            grads = [store.grad(component_param_name(k)) for k in range(self.schema.K)]
            scatter_label_gradients(dW, self.schema, self.mode, grads)


def export_embeddings(schema: LabelSchema, store: ParameterStore, mode,
                      label_path, component_path=None) -> None:
    """Write composed label rows and, for composed modes, raw component rows as TSV."""
    mode = CompositionMode(mode)
    if mode is CompositionMode.BASELINE:
        W = store["label.W"]
    else:
        W = compose_label_matrix(schema, component_embeddings(store, schema), mode)
    with open(label_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["label"] + [f"d{j}" for j in range(W.shape[1])])
        for label, row in zip(schema.labels, W):
            w.writerow([label] + [repr(float(x)) for x in row])
    if component_path is None or mode is CompositionMode.BASELINE:
        return
    with open(component_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        # rows are ragged in concat mode; the floats follow the two key columns
        w.writerow(["component_type", "value", "embedding"])
        for k, E in enumerate(component_embeddings(store, schema)):
            for value, row in zip(schema.vocabs[k], E):
                w.writerow([schema.type_names[k], value] + [repr(float(x)) for x in row])


def read_label_embeddings(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        r = csv.reader(fh, delimiter="\t")
        next(r)
        labels, rows = [], []
        for rec in r:
            labels.append(rec[0])
            rows.append([float(x) for x in rec[1:]])
    return labels, np.array(rows)

