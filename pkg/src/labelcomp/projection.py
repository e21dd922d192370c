"""2-D projections of label embeddings and cluster statistics.

PCA is deterministic and is the default; an exact t-SNE is provided for
pictures.  Silhouette scores quantify how well labels sharing a component
(span symbol or top-layer type) group together.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from html import escape
from typing import Sequence

import numpy as np

from .schema import NULL, OUTSIDE


class ProjectionError(ValueError):
    pass


@dataclass
class ProjectionResult:
    labels: list[str]
    coords: np.ndarray
    span_groups: list[str]
    top_groups: list[str]
    explained_variance: np.ndarray | None = None
    method: str = "pca"

    def groups(self, grouping: str) -> list[str]:
        if grouping == "span":
            return self.span_groups
        if grouping == "top_layer":
            return self.top_groups
        raise ValueError(f"unknown grouping {grouping!r}")


def group_keys(labels: Sequence[str]) -> tuple[list[str], list[str]]:
    """Span symbol and top-layer type of every label (``O`` for the outside label)."""
    span, top = [], []
    for l in labels:
        if l == OUTSIDE:
            span.append(OUTSIDE)
            top.append(OUTSIDE)
        else:
            prefix, _, path = l.partition("-")
            span.append(prefix)
            top.append(path.split("/")[0] or NULL)
    return span, top


def pca(X: np.ndarray, n_components: int = 2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scores, loadings and per-component explained variance.

    Each loading vector is sign-fixed so its largest-magnitude entry is
    positive.
    """
    X = np.asarray(X, dtype=np.float64)
    Xc = X - X.mean(axis=0)
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    k = min(n_components, Vt.shape[0])
    V = Vt[:k].copy()
    for i in range(k):
        j = np.argmax(np.abs(V[i]))
        if V[i, j] < 0:
            V[i] = -V[i]
    var = s[:k] ** 2 / max(len(X) - 1, 1)
    scores = Xc @ V.T
    if k < n_components:
        scores = np.hstack([scores, np.zeros((len(X), n_components - k))])
        var = np.concatenate([var, np.zeros(n_components - k)])
    return scores, V, var


def _hbeta(d2: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    p = np.exp(-(d2 - d2.min()) * beta)
    sp = p.sum()
    h = np.log(sp) + beta * np.sum(d2 * p) / sp - beta * d2.min()
    return h, p / sp


def _affinities(X: np.ndarray, perplexity: float, tol: float = 1e-5) -> np.ndarray:
    n = len(X)
    sq = (X * X).sum(axis=1)
    D = np.maximum(sq[:, None] + sq[None, :] - 2 * X @ X.T, 0.0)
    P = np.zeros((n, n))
    target = np.log(perplexity)
    for i in range(n):
        d2 = np.delete(D[i], i)
        lo, hi, beta = -np.inf, np.inf, 1.0
        for _ in range(100):
            h, p = _hbeta(d2, beta)
            if abs(h - target) < tol:
                break
            if h > target:
                lo = beta
                beta = beta * 2 if hi == np.inf else (beta + hi) / 2
            else:
                hi = beta
                beta = beta / 2 if lo == -np.inf else (beta + lo) / 2
        P[i, np.arange(n) != i] = p
    P = (P + P.T) / (2 * n)
    return np.maximum(P, 1e-12)


def tsne(X: np.ndarray, perplexity: float = 30.0, n_iter: int = 1000, seed: int = 0,
         learning_rate: float | None = None) -> np.ndarray:
    """Exact O(n^2) t-SNE with early exaggeration and gains.

    The default step size is ``max(n / 48, 50)``; a fixed large step makes
    small label sets blow up during exaggeration.
    """
    X = np.asarray(X, dtype=np.float64)
    n = len(X)
    if learning_rate is None:
        learning_rate = max(n / (4.0 * 12.0), 50.0)
    P = _affinities(X, perplexity)
    rng = np.random.Generator(np.random.PCG64(seed))
    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    for it in range(n_iter):
        exag = 12.0 if it < 250 else 1.0
        momentum = 0.5 if it < 250 else 0.8
        sq = (Y * Y).sum(axis=1)
        num = 1.0 / (1.0 + np.maximum(sq[:, None] + sq[None, :] - 2 * Y @ Y.T, 0.0))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), 1e-12)
        PQ = (exag * P - Q) * num
        grad = 4.0 * (np.diag(PQ.sum(axis=1)) - PQ) @ Y
        same = np.sign(grad) == np.sign(update)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        update = momentum * update - learning_rate * gains * grad
        Y = Y + update
        Y -= Y.mean(axis=0)
    return Y


def project(label_matrix: np.ndarray, labels: Sequence[str], method: str = "pca",
            perplexity: float | None = None, n_iter: int = 1000, seed: int = 0) -> ProjectionResult:
    X = np.asarray(label_matrix, dtype=np.float64)
    n = len(X)
    if n < 3:
        raise ProjectionError(f"need at least 3 labels to project, got {n}")
    if len(labels) != n:
        raise ProjectionError("label list and matrix rows disagree")
    span, top = group_keys(labels)
    degenerate = np.allclose(X, X[0], rtol=0.0, atol=0.0)
    if method == "pca":
        if degenerate:
            warnings.warn("all label embeddings are identical; PCA projection is all zeros")
            return ProjectionResult(list(labels), np.zeros((n, 2)), span, top, np.zeros(2), "pca")
        coords, _, var = pca(X, 2)
        return ProjectionResult(list(labels), coords, span, top, var, "pca")
    if method == "tsne":
        if degenerate:
            raise ProjectionError("t-SNE is undefined when all embeddings are identical")
        perplexity = min(30.0, (n - 1) / 3.0) if perplexity is None else perplexity
        if not perplexity < n / 3.0:
            raise ProjectionError(f"perplexity {perplexity} must be < n/3 = {n / 3:.2f}")
        coords = tsne(X, perplexity, n_iter, seed)
        return ProjectionResult(list(labels), coords, span, top, None, "tsne")
    raise ProjectionError(f"unknown projection method {method!r}")


def silhouette(points: np.ndarray, groups: Sequence[str]) -> tuple[float, dict[str, float]]:
    """Mean silhouette and per-group mean silhouette (Euclidean).

    Singleton groups score 0, as do points where both mean distances vanish.
    """
    X = np.asarray(points, dtype=np.float64)
    keys = sorted(set(groups))
    if len(keys) < 2:
        raise ProjectionError("silhouette needs at least two groups")
    g = np.array([keys.index(x) for x in groups])
    D = np.sqrt(np.maximum(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1), 0.0))
    s = np.zeros(len(X))
    for i in range(len(X)):
        own = g == g[i]
        if own.sum() == 1:
            continue
        a = D[i, own].sum() / (own.sum() - 1)
        b = min(D[i, g == j].mean() for j in range(len(keys)) if j != g[i])
        denom = max(a, b)
        s[i] = (b - a) / denom if denom > 0 else 0.0
    per_group = {k: float(s[g == j].mean()) for j, k in enumerate(keys)}
    return float(s.mean()), per_group


def cluster_stats(result: ProjectionResult, grouping: str = "span") -> tuple[float, dict[str, float]]:
    return silhouette(result.coords, result.groups(grouping))


def write_projection_tsv(result: ProjectionResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["label", "x", "y", "span_group", "top_group"])
        for l, (x, y), s, t in zip(result.labels, result.coords, result.span_groups, result.top_groups):
            w.writerow([l, f"{x:.10g}", f"{y:.10g}", s, t])


_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
            "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def write_svg(result: ProjectionResult, path, size: int = 600) -> None:
    """Scatter plot coloured by top-layer group; B labels are circles, I labels squares."""
    xy = result.coords
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    pad = 30
    pts = pad + (xy - lo) / span * (size - 2 * pad)
    tops = sorted(set(result.top_groups))
    color = {t: _PALETTE[i % len(_PALETTE)] for i, t in enumerate(tops)}
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    for (px, py), label, s, t in zip(pts, result.labels, result.span_groups, result.top_groups):
        py = size - py
        c = color[t]
        if s == "I":
            out.append(f'<rect x="{px - 4:.2f}" y="{py - 4:.2f}" width="8" height="8" fill="{c}">'
                       f'<title>{escape(label)}</title></rect>')
        else:
            out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="4" fill="{c}">'
                       f'<title>{escape(label)}</title></circle>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
