"""Analytic loss gradients and the Adadelta update with sparse state.

Gradients flow only into embeddings touched by the current batch. Duplicate
touches of one parameter are summed before the optimizer step, so each
parameter moves once per batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from ._validation import check_triple_array
from .errors import ConfigError, NumericalError
from .loss import LossState
from .model import TERM_FAMILY, EmbeddingSet, ScoreConfig, score_triples, term_residual

Key = tuple[str, str]  # (family, kind) with kind in {"entity", "relation"}


class GradientBuffer:
    """Sparse accumulator mapping (family, kind, index) to a gradient vector."""

    def __init__(self, dim: int):
        self.dim = dim
        self._chunks: dict[Key, list[tuple[np.ndarray, np.ndarray]]] = {}
        self._merged: dict[Key, tuple[np.ndarray, np.ndarray]] | None = None

    def add(self, family: str, kind: str, indices, grads) -> None:
        indices = np.asarray(indices, dtype=np.int64).ravel()
        grads = np.asarray(grads, dtype=float).reshape(len(indices), self.dim)
        if len(indices) == 0:
            return
        self._chunks.setdefault((family, kind), []).append((indices, grads))
        self._merged = None

    def groups(self) -> dict[Key, tuple[np.ndarray, np.ndarray]]:
        """Per (family, kind): unique touched indices and their summed gradients."""
        if self._merged is None:
            merged = {}
            for key, chunks in self._chunks.items():
                idx = np.concatenate([c[0] for c in chunks])
                g = np.concatenate([c[1] for c in chunks])
                uniq, inverse = np.unique(idx, return_inverse=True)
                summed = np.zeros((len(uniq), self.dim))
                np.add.at(summed, inverse, g)
                merged[key] = (uniq, summed)
            self._merged = merged
        return self._merged

    def entries(self) -> Iterator[tuple[tuple[str, str, int], np.ndarray]]:
        for (family, kind), (idx, g) in self.groups().items():
            for row, i in enumerate(idx):
                yield (family, kind, int(i)), g[row]

    def get(self, family: str, kind: str, index: int) -> np.ndarray:
        idx, g = self.groups().get((family, kind), (None, None))
        if idx is not None:
            pos = np.searchsorted(idx, index)
            if pos < len(idx) and idx[pos] == index:
                return g[pos].copy()
        raise KeyError((family, kind, index))

    def __contains__(self, key) -> bool:
        try:
            self.get(*key)
            return True
        except KeyError:
            return False

    def __len__(self) -> int:
        return sum(len(idx) for idx, _ in self.groups().values())

    def all_finite(self) -> bool:
        return all(np.isfinite(g).all() for _, g in self.groups().values())


def _norm_gradient(residual: np.ndarray, p: int) -> np.ndarray:
    """d||v||_p / dv, rows of zeros at kinks (v=0 componentwise or ||v||=0)."""
    if p == 1:
        return np.sign(residual)
    norms = np.linalg.norm(residual, axis=1, keepdims=True)
    out = np.zeros_like(residual)
    np.divide(residual, norms, out=out, where=norms > 0)
    return out


@dataclass
class TermGradients:
    """Per-triple partials of one distance term w.r.t. its three vectors."""

    family: str
    d_head: np.ndarray
    d_relation: np.ndarray
    d_tail: np.ndarray


def grad_score_term(m: int, triples: np.ndarray, emb: EmbeddingSet,
                    p: int = 1) -> TermGradients:
    """Analytic gradients of score_term(m) for every triple in the batch."""
    v = term_residual(m, triples, emb)
    g = _norm_gradient(v, p)
    fam = TERM_FAMILY[m]
    if m == 1:
        return TermGradients(fam, g, g, -g)
    if m == 2:
        return TermGradients(fam, g, -g, g)
    if m == 3:
        return TermGradients(fam, -g, g, g)
    rel = emb.relations[fam][triples[:, 1]]
    tail = emb.entities[fam][triples[:, 2]]
    return TermGradients(fam, g, -g * tail, -g * rel)


def grad_loss(pos_triples: np.ndarray, neg_triples: np.ndarray,
              emb: EmbeddingSet, config: ScoreConfig,
              state: LossState) -> GradientBuffer:
    """Gradient of the batch limit loss w.r.t. every touched embedding.

    Positives with scores strictly above the positive limit contribute
    ``+beta1 * w_m * dS_m``; negatives strictly below the negative limit
    contribute ``-beta2 * w_m * dS_m``. Inactive hinges contribute nothing.
    """
    buffer = GradientBuffer(emb.dim)
    pos_triples = check_triple_array(pos_triples, allow_empty=True)
    neg_triples = check_triple_array(neg_triples, allow_empty=True)
    sides = []
    if len(pos_triples):
        scores = score_triples(pos_triples, emb, config)
        sides.append((pos_triples[scores > state.positive_limit], state.beta1))
    if len(neg_triples):
        scores = score_triples(neg_triples, emb, config)
        sides.append((neg_triples[scores < state.negative_limit], -state.beta2))
    for triples, coef in sides:
        if len(triples) == 0:
            continue
        for m in config.enabled_terms:
            w = config.weights[m - 1]
            if w == 0.0:
                continue
            tg = grad_score_term(m, triples, emb, config.p)
            scale = coef * w
            buffer.add(tg.family, "entity", triples[:, 0], scale * tg.d_head)
            buffer.add(tg.family, "relation", triples[:, 1], scale * tg.d_relation)
            buffer.add(tg.family, "entity", triples[:, 2], scale * tg.d_tail)
    return buffer


@dataclass
class AdadeltaState:
    """Decay settings plus lazily allocated squared-gradient/update averages.

    Accumulators are created per (family, kind) table on first touch and
    stay zero for parameters that never receive a gradient.
    """

    rho: float = 0.95
    eps: float = 1e-6
    lr: float = 1.0
    accumulators: dict[Key, dict[str, np.ndarray]] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise ConfigError(f"rho must be in [0, 1), got {self.rho}")
        if self.eps <= 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")

    def _acc(self, key: Key, shape: tuple[int, int]) -> dict[str, np.ndarray]:
        acc = self.accumulators.get(key)
        if acc is None:
            acc = {"eg2": np.zeros(shape), "edx2": np.zeros(shape)}
            self.accumulators[key] = acc
        return acc


def _table(emb: EmbeddingSet, key: Key) -> np.ndarray:
    family, kind = key
    return emb.entities[family] if kind == "entity" else emb.relations[family]


def adadelta_step(state: AdadeltaState, grads: GradientBuffer,
                  emb: EmbeddingSet) -> None:
    """Apply one Adadelta update in place to every touched parameter.

    Recurrences, per component: E[g2] <- rho E[g2] + (1-rho) g2 first, then
    dx = -sqrt(E[dx2]+eps)/sqrt(E[g2]+eps) * g, then E[dx2] is refreshed
    from dx, then x <- x + lr * dx.
    """
    if not grads.all_finite():
        raise NumericalError("non-finite gradient; aborting this iteration")
    for key, (idx, g) in grads.groups().items():
        table = _table(emb, key)
        acc = state._acc(key, table.shape)
        eg2 = state.rho * acc["eg2"][idx] + (1.0 - state.rho) * np.square(g)
        acc["eg2"][idx] = eg2
        dx = -np.sqrt(acc["edx2"][idx] + state.eps) / np.sqrt(eg2 + state.eps) * g
        acc["edx2"][idx] = state.rho * acc["edx2"][idx] + (1.0 - state.rho) * np.square(dx)
        table[idx] += state.lr * dx


def sgd_step(grads: GradientBuffer, emb: EmbeddingSet, lr: float) -> None:
    """Plain gradient descent step; debugging fallback for the main optimizer."""
    if not grads.all_finite():
        raise NumericalError("non-finite gradient; aborting this iteration")
    for key, (idx, g) in grads.groups().items():
        _table(emb, key)[idx] -= lr * g
