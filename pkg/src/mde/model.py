"""Embedding storage and the multi-distance scoring function family.

Every entity and relation owns one independent vector per *family*. Each
distance term reads exactly one family, so a gradient step arising from one
term never touches the vectors used by the others:

    term 1 (family "i"):  || h + r - t ||_p      directed translation
    term 2 (family "j"):  || h + t - r ||_p      symmetric in head/tail
    term 3 (family "k"):  || t + r - h ||_p      reverse translation
    term 4 (family "l"):  || h - r * t ||_p      componentwise product

The aggregate score is ``sum_m w_m * S_m - psi`` (lower = more plausible).
With ``w = (1, 0, 0, 0)`` and ``psi = 0`` the aggregate reproduces the plain
translational score bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_positive_int, check_triple_array
from .data import Vocabulary
from .errors import ConfigError

TERM_FAMILY = {1: "i", 2: "j", 3: "k", 4: "l"}
FAMILIES = ("i", "j", "k", "l")


@dataclass(frozen=True)
class ScoreConfig:
    """Weights, offset, and norm order of the aggregate score."""

    w1: float = 0.25
    w2: float = 0.5
    w3: float = 0.25
    w4: float = 0.0
    psi: float = 1.2
    p: int = 1
    term4: bool = False

    def __post_init__(self):
        weights = self.weights
        if any(w < 0 for w in weights):
            raise ConfigError(f"weights must be nonnegative, got {weights}")
        if not any(w > 0 for w in weights):
            raise ConfigError("at least one weight must be positive")
        if self.psi < 0:
            raise ConfigError(f"psi must be nonnegative, got {self.psi}")
        if self.p not in (1, 2):
            raise ConfigError(f"norm order must be 1 or 2, got {self.p}")
        if not self.term4 and self.w4 != 0.0:
            raise ConfigError("w4 must be 0 when the product term is disabled")

    @property
    def weights(self) -> tuple[float, float, float, float]:
        return (self.w1, self.w2, self.w3, self.w4)

    @property
    def enabled_terms(self) -> tuple[int, ...]:
        terms = [1, 2, 3]
        if self.term4:
            terms.append(4)
        return tuple(terms)


class EmbeddingSet:
    """Per-family entity and relation vectors, all of one dimension."""

    def __init__(self, entities: dict[str, np.ndarray],
                 relations: dict[str, np.ndarray]):
        if set(entities) != set(relations):
            raise ConfigError("entity and relation families must match")
        fams = tuple(f for f in FAMILIES if f in entities)
        if fams not in (("i", "j", "k"), ("i", "j", "k", "l")):
            raise ConfigError(f"unsupported family set {sorted(entities)}")
        dims = {a.shape[1] for a in entities.values()}
        dims |= {a.shape[1] for a in relations.values()}
        if len(dims) != 1:
            raise ConfigError(f"inconsistent vector dimensions {sorted(dims)}")
        self.entities = entities
        self.relations = relations
        self.families = fams

    @property
    def dim(self) -> int:
        return self.entities["i"].shape[1]

    @property
    def n_entities(self) -> int:
        return self.entities["i"].shape[0]

    @property
    def n_relations(self) -> int:
        return self.relations["i"].shape[0]

    @property
    def has_product_term(self) -> bool:
        return "l" in self.entities

    def copy(self) -> "EmbeddingSet":
        return EmbeddingSet({f: a.copy() for f, a in self.entities.items()},
                            {f: a.copy() for f, a in self.relations.items()})

    def normalize_entities(self) -> None:
        """Project every entity vector onto the unit L2 sphere, per family."""
        for arr in self.entities.values():
            norms = np.linalg.norm(arr, axis=1, keepdims=True)
            np.divide(arr, norms, out=arr, where=norms > 0)


def init_embeddings(vocab: Vocabulary | tuple[int, int], dim: int, seed: int = 0,
                    term4: bool = False) -> EmbeddingSet:
    """Draw all vector components i.i.d. uniform on [-6/sqrt(d), +6/sqrt(d)]."""
    check_positive_int(dim, "dim")
    if isinstance(vocab, Vocabulary):
        n_ent, n_rel = vocab.n_entities, vocab.n_relations
    else:
        n_ent, n_rel = vocab
    check_positive_int(n_ent, "n_entities")
    check_positive_int(n_rel, "n_relations")
    rng = np.random.default_rng(seed)
    bound = 6.0 / np.sqrt(dim)
    fams = FAMILIES if term4 else FAMILIES[:3]
    entities, relations = {}, {}
    for fam in fams:
        entities[fam] = rng.uniform(-bound, bound, size=(n_ent, dim))
        relations[fam] = rng.uniform(-bound, bound, size=(n_rel, dim))
    return EmbeddingSet(entities, relations)


def term_residual(m: int, triples: np.ndarray, emb: EmbeddingSet) -> np.ndarray:
    """The pre-norm residual vector of one term, shape (n, dim)."""
    if m not in TERM_FAMILY:
        raise ConfigError(f"term index must be 1..4, got {m}")
    fam = TERM_FAMILY[m]
    if fam == "l" and not emb.has_product_term:
        raise ConfigError("product term requested but its family is not allocated")
    h, r, t = triples[:, 0], triples[:, 1], triples[:, 2]
    ent, rel = emb.entities[fam], emb.relations[fam]
    if m == 1:
        return ent[h] + rel[r] - ent[t]
    if m == 2:
        return ent[h] + ent[t] - rel[r]
    if m == 3:
        return ent[t] + rel[r] - ent[h]
    return ent[h] - rel[r] * ent[t]


def _norm(residual: np.ndarray, p: int) -> np.ndarray:
    if p == 1:
        return np.abs(residual).sum(axis=1)
    return np.sqrt(np.square(residual).sum(axis=1))


def score_term(m: int, triples, emb: EmbeddingSet, p: int = 1) -> np.ndarray:
    """Distance of one term for a batch of triples, shape (n,)."""
    if p not in (1, 2):
        raise ConfigError(f"norm order must be 1 or 2, got {p}")
    triples = check_triple_array(triples, emb.n_entities, emb.n_relations)
    return _norm(term_residual(m, triples, emb), p)


def score_triples(triples, emb: EmbeddingSet, config: ScoreConfig) -> np.ndarray:
    """Aggregate score ``sum_m w_m * S_m - psi`` for a batch of triples."""
    if config.term4 and not emb.has_product_term:
        raise ConfigError("config enables the product term but embeddings lack it")
    triples = check_triple_array(triples, emb.n_entities, emb.n_relations)
    total = np.zeros(len(triples))
    for m in config.enabled_terms:
        w = config.weights[m - 1]
        if w == 0.0:
            continue
        total += w * _norm(term_residual(m, triples, emb), config.p)
    return total - config.psi


def score_candidates(triple, emb: EmbeddingSet, config: ScoreConfig,
                     side: str) -> np.ndarray:
    """Scores of a triple with ``side`` replaced by every entity, shape (|E|,).

    Equivalent to scoring the n_entities substituted triples one by one, but
    broadcast so memory stays O(|E| * dim).
    """
    if side not in ("head", "tail"):
        raise ConfigError(f"side must be 'head' or 'tail', got {side!r}")
    h, r, t = (int(v) for v in np.asarray(triple).reshape(3))
    total = np.zeros(emb.n_entities)
    for m in config.enabled_terms:
        w = config.weights[m - 1]
        if w == 0.0:
            continue
        fam = TERM_FAMILY[m]
        ent, rel = emb.entities[fam], emb.relations[fam]
        if m == 1:
            v = (ent[h] + rel[r]) - ent if side == "tail" else ent + (rel[r] - ent[t])
        elif m == 2:
            v = ent + (ent[h] - rel[r]) if side == "tail" else ent + (ent[t] - rel[r])
        elif m == 3:
            v = ent + (rel[r] - ent[h]) if side == "tail" else (ent[t] + rel[r]) - ent
        else:
            v = ent[h] - rel[r] * ent if side == "tail" else ent - rel[r] * ent[t]
        total += w * _norm(v, config.p)
    return total - config.psi


@dataclass(frozen=True)
class LimitCompatibilityReport:
    """Advisory result of the single-term override check.

    ``consistent`` means limits, weights, and offset admit a regime where one
    translational term classifying a fact as true is enough for the aggregate
    score to classify it as true, even when the other two disagree.
    """

    consistent: bool
    reason: str
    max_negative_bound: float | None = None
    psi_ceiling: float | None = None


def check_limit_compatibility(config: ScoreConfig, gamma1: float,
                              gamma2: float) -> LimitCompatibilityReport:
    """Check whether one well-scoring term can carry the classification.

    Advisory only; never raises. Considers the two mixed cases (the
    symmetric term dissenting from the two translational ones, and vice
    versa) and reports whether a finite bound on the dissenting distances
    keeps the aggregate below ``gamma1`` while staying nonnegative.
    """
    w1, w2, w3, _ = config.weights
    psi = config.psi
    if min(w1, w2, w3) <= 0:
        return LimitCompatibilityReport(
            False, "all three translational weights must be positive")
    if gamma1 <= 0:
        return LimitCompatibilityReport(
            True, "no positive-classification region; constraints are vacuous")
    u, v = w1 + w3, w2
    psi_ceiling = min(u, v) * gamma2
    if psi > psi_ceiling:
        return LimitCompatibilityReport(
            False,
            f"psi={psi} exceeds {psi_ceiling}; aggregate scores of mixed "
            "cases can go negative", None, psi_ceiling)
    a_max = min((gamma1 + psi - v * gamma1) / (2 * u),
                (gamma1 + psi - u * gamma1) / (2 * v))
    if a_max <= gamma2 / 2:
        return LimitCompatibilityReport(
            False,
            f"no admissible bound: need a > {gamma2 / 2} but at most {a_max}",
            a_max, psi_ceiling)
    return LimitCompatibilityReport(
        True, f"admissible up to dissenting distances < {2 * a_max}",
        a_max, psi_ceiling)
