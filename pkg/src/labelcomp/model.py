"""Token classifier: encoder features scored against a label-embedding matrix."""
from __future__ import annotations

import hashlib
from typing import Sequence

import numpy as np

from .composition import CompositionMode, LabelEmbedding, label_scores
from .encoder import EncoderConfig, TokenVocabulary, encode, encode_backward, init_encoder_params
from .numeric import ParameterStore, make_rngs, read_tensors, softmax_cross_entropy, write_tensors
from .schema import LabelSchema


class CheckpointError(ValueError):
    pass


class LabelingModel:
    def __init__(self, schema: LabelSchema, vocab: TokenVocabulary, enc_cfg: EncoderConfig,
                 mode="sum", seed: int = 0, component_dims: Sequence[int] | None = None):
        if enc_cfg.vocab_size != len(vocab):
            raise ValueError(f"encoder vocab_size {enc_cfg.vocab_size} != vocabulary size {len(vocab)}")
        self.schema = schema
        self.vocab = vocab
        self.cfg = enc_cfg
        self.mode = CompositionMode(mode)
        self.labels = LabelEmbedding(schema, self.mode, enc_cfg.output_dim, component_dims)
        self.store = ParameterStore()
        rngs = make_rngs(seed)
        init_encoder_params(self.store, enc_cfg, rngs["encoder_init"])
        self.labels.init(self.store, rngs["label_init"])

    def label_matrix(self) -> np.ndarray:
        return self.labels.matrix(self.store)

    def loss_and_backward(self, token_ids: Sequence[np.ndarray], gold: Sequence[np.ndarray],
                          rng: np.random.Generator | None = None, training: bool = True) -> float:
        """Mean token cross-entropy over the batch; gradients are accumulated."""
        f, cache = encode(token_ids, self.store, self.cfg, rng, training)
        W = self.label_matrix()
        logits = label_scores(f, W)
        y = np.concatenate(gold) if len(gold) else np.zeros(0, dtype=np.int64)
        n = len(y)
        if n == 0:
            return 0.0
        losses, dlogits = softmax_cross_entropy(logits, y)
        dlogits /= n
        self.labels.backward(self.store, dlogits.T @ f)
        encode_backward(dlogits @ W, cache, self.store, self.cfg)
        return float(losses.mean())

    def logits(self, token_ids: Sequence[np.ndarray]) -> list[np.ndarray]:
        f, _ = encode(token_ids, self.store, self.cfg, None, False)
        scores = label_scores(f, self.label_matrix())
        bounds = np.cumsum([len(s) for s in token_ids])[:-1]
        return np.split(scores, bounds)

    def predict_ids(self, token_ids: Sequence[np.ndarray]) -> list[np.ndarray]:
        # np.argmax returns the first maximum, i.e. the lowest label id on ties
        return [np.argmax(s, axis=1) if len(s) else np.zeros(0, dtype=np.int64)
                for s in self.logits(token_ids)]

    def predict(self, sentences: Sequence[Sequence[str]]) -> list[list[str]]:
        ids = [self.vocab.encode(s) for s in sentences]
        return [[self.schema.labels[y] for y in row] for row in self.predict_ids(ids)]

    # -- persistence -------------------------------------------------------

    def vocab_digest(self) -> str:
        return hashlib.sha256("\n".join(self.vocab.itos).encode()).hexdigest()[:16]

    def save(self, path, extra: dict | None = None) -> None:
        cfg = self.cfg
        meta = {
            "mode": self.mode.value,
            "encoder": {
                "vocab_size": cfg.vocab_size, "word_dim": cfg.word_dim,
                "window_radius": cfg.window_radius, "hidden_dim": cfg.hidden_dim,
                "output_dim": cfg.output_dim, "dropout_rate": cfg.dropout_rate,
            },
            "component_dims": self.labels.dims,
            "schema": {
                "labels": list(self.schema.labels),
                "type_names": list(self.schema.type_names),
                "vocabs": [list(v) for v in self.schema.vocabs],
                "components": self.schema.components.tolist(),
                "iob": self.schema.iob,
            },
            "schema_hash": self.schema.digest(),
            "vocab": self.vocab.itos,
            "vocab_hash": self.vocab_digest(),
        }
        if extra:
            meta["extra"] = extra
        write_tensors(path, {n: p.value for n, p in self.store.items()}, meta)

    @classmethod
    def load(cls, path, schema: LabelSchema | None = None,
             vocab: TokenVocabulary | None = None) -> "LabelingModel":
        try:
            tensors, meta = read_tensors(path)
        except (OSError, ValueError, KeyError) as exc:
            raise CheckpointError(str(exc)) from exc
        s = meta["schema"]
        stored = LabelSchema(
            labels=tuple(s["labels"]), type_names=tuple(s["type_names"]),
            vocabs=tuple(tuple(v) for v in s["vocabs"]),
            components=np.array(s["components"], dtype=np.int64), iob=s["iob"],
        )
        if stored.digest() != meta["schema_hash"]:
            raise CheckpointError(f"{path}: stored schema does not match its hash")
        if schema is not None and schema.digest() != meta["schema_hash"]:
            raise CheckpointError(f"{path}: checkpoint schema hash {meta['schema_hash']} "
                                  f"does not match schema {schema.digest()}")
        stored_vocab = TokenVocabulary(meta["vocab"][2:])
        model = cls(stored, stored_vocab, EncoderConfig(**meta["encoder"]), meta["mode"],
                    component_dims=meta["component_dims"] or None)
        if model.vocab_digest() != meta["vocab_hash"]:
            raise CheckpointError(f"{path}: vocabulary hash mismatch")
        if vocab is not None and vocab.itos != stored_vocab.itos:
            raise CheckpointError(f"{path}: vocabulary differs from the supplied one")
        if set(tensors) != set(model.store):
            raise CheckpointError(f"{path}: tensor set {sorted(tensors)} does not match model")
        model.store.load(tensors)
        model.meta = meta
        return model
