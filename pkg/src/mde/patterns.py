"""Synthetic knowledge graphs exercising one relational regularity each.

Each generator emits a training set plus a holdout of implied facts:

* ``symmetry``      r(x,y) observed; the reverse r(y,x) is implied.
* ``antisymmetry``  r(x,y) observed; the reverse r(y,x) must be *false*
  (the holdout is a negative list, scored by rank comparison).
* ``inversion``     r2(x,y) observed; r1(y,x) is implied.
* ``composition``   r2(x,y) and r3(y,z) observed; r1(x,z) is implied.

For the positive patterns a ``holdout_fraction`` of the implied facts is
withheld for evaluation and the remainder is placed in train, so the
regularity is visible during training.

Composition chains are laid out along disjoint alternating paths inside
per-group entity blocks rather than sampled uniformly at random. Uniform
chains make every relation a dense many-to-many map, and no assignment of
entity and relation vectors can then satisfy the pattern even approximately;
the holdout becomes unlearnable for any distance-based model. With disjoint
paths each relation is a partial one-to-one map, so a consistent embedding
of the regularity exists and a learner can be judged on whether it finds
one.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import check_fraction, check_positive_int
from .data import TripleSet, Vocabulary, save_triples
from .errors import ConfigError

PATTERNS = ("symmetry", "antisymmetry", "inversion", "composition")

_MAX_ENUMERATED_PAIRS = 20_000_000


@dataclass(frozen=True)
class PatternSpec:
    """Parameters of one synthetic pattern dataset.

    ``density`` is the fraction of the pattern's instance space that gets
    sampled: unordered entity pairs for symmetry/antisymmetry/inversion,
    path-aligned chains (x, y, z) for composition.
    """

    n_entities: int
    pattern: str
    n_relations: int = 1
    density: float = 1.0
    holdout_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.n_entities, "n_entities", minimum=3)
        check_positive_int(self.n_relations, "n_relations", minimum=1)
        check_fraction(self.density, "density", include_one=True)
        check_fraction(self.holdout_fraction, "holdout_fraction",
                       include_one=False, include_zero=True)
        if self.pattern not in PATTERNS:
            raise ConfigError(f"pattern must be one of {PATTERNS}, got {self.pattern!r}")
        if self.pattern == "inversion" and self.n_relations < 2:
            raise ConfigError("inversion needs n_relations >= 2")
        if self.pattern == "composition" and self.n_relations < 3:
            raise ConfigError("composition needs n_relations >= 3")

    @property
    def holdout_is_negative(self) -> bool:
        return self.pattern == "antisymmetry"


def _sample_pairs(spec: PatternSpec, rng: np.random.Generator):
    """Sample distinct unordered entity pairs, randomly oriented."""
    n = spec.n_entities
    n_pairs = n * (n - 1) // 2
    if n_pairs > _MAX_ENUMERATED_PAIRS:
        raise ConfigError(
            f"{n} entities give {n_pairs} candidate pairs; generation is desk-scale")
    xs, ys = np.triu_indices(n, k=1)
    count = max(1, int(round(spec.density * n_pairs)))
    chosen = rng.choice(n_pairs, size=count, replace=False)
    xs, ys = xs[chosen], ys[chosen]
    flip = rng.random(count) < 0.5
    heads = np.where(flip, ys, xs)
    tails = np.where(flip, xs, ys)
    return heads, tails


def _sample_chains(spec: PatternSpec, rng: np.random.Generator):
    """Chains (x, y, z) along disjoint alternating paths, one per group.

    The entity set is split into one block per relation group. Each block is
    shuffled into a path v0, v1, v2, ... and the chains are its windows
    (v0,v1,v2), (v2,v3,v4), ...: consecutive chains share only an endpoint,
    so both observed relations stay one-to-one and the pattern admits an
    exact translation embedding. ``density`` is the fraction of each path's
    windows that is kept (at least one per block).
    """
    n_groups = spec.n_relations // 3
    blocks = np.array_split(np.arange(spec.n_entities), n_groups)
    if any(len(block) < 3 for block in blocks):
        raise ConfigError(
            f"composition with {n_groups} relation groups needs at least "
            f"{3 * n_groups} entities, got {spec.n_entities}")
    xs, ys, zs, groups = [], [], [], []
    for g, block in enumerate(blocks):
        path = rng.permutation(block)
        starts = np.arange(0, len(path) - 2, 2)
        count = max(1, int(round(spec.density * len(starts))))
        if count < len(starts):
            keep = np.sort(rng.choice(len(starts), size=count, replace=False))
            starts = starts[keep]
        xs.append(path[starts])
        ys.append(path[starts + 1])
        zs.append(path[starts + 2])
        groups.append(np.full(len(starts), g, dtype=np.int64))
    return (np.concatenate(xs), np.concatenate(ys), np.concatenate(zs),
            np.concatenate(groups))


def _split_holdout(n: int, fraction: float, rng: np.random.Generator):
    """Index masks (train_mask, holdout_mask) over n implied facts."""
    k = int(round(fraction * n))
    order = rng.permutation(n)
    holdout = np.zeros(n, dtype=bool)
    holdout[order[:k]] = True
    return ~holdout, holdout


def generate_pattern_kg(spec: PatternSpec) -> tuple[TripleSet, TripleSet, Vocabulary]:
    """Generate (train, holdout, vocabulary) for the requested pattern.

    Byte-identical output for identical specs. Train and holdout are always
    disjoint; for ``antisymmetry`` the holdout contains facts the pattern
    asserts to be false.
    """
    rng = np.random.default_rng(spec.seed)
    vocab = Vocabulary([f"e{i}" for i in range(spec.n_entities)],
                       [f"r{i}" for i in range(spec.n_relations)])

    if spec.pattern in ("symmetry", "antisymmetry"):
        heads, tails = _sample_pairs(spec, rng)
        rels = rng.integers(0, spec.n_relations, size=len(heads))
        observed = np.stack([heads, rels, tails], axis=1)
        implied = np.stack([tails, rels, heads], axis=1)
        train_mask, holdout_mask = _split_holdout(len(implied),
                                                  spec.holdout_fraction, rng)
        if spec.pattern == "symmetry":
            train = np.concatenate([observed, implied[train_mask]])
        else:
            # reverses are false here: never add them to train
            train = observed
        holdout = implied[holdout_mask]

    elif spec.pattern == "inversion":
        heads, tails = _sample_pairs(spec, rng)
        n_groups = spec.n_relations // 2
        group = rng.integers(0, n_groups, size=len(heads))
        r1, r2 = 2 * group, 2 * group + 1
        observed = np.stack([heads, r2, tails], axis=1)
        implied = np.stack([tails, r1, heads], axis=1)
        train_mask, holdout_mask = _split_holdout(len(implied),
                                                  spec.holdout_fraction, rng)
        train = np.concatenate([observed, implied[train_mask]])
        holdout = implied[holdout_mask]

    else:  # composition
        xs, ys, zs, group = _sample_chains(spec, rng)
        r1, r2, r3 = 3 * group, 3 * group + 1, 3 * group + 2
        observed = np.concatenate([np.stack([xs, r2, ys], axis=1),
                                   np.stack([ys, r3, zs], axis=1)])
        implied = np.unique(np.stack([xs, r1, zs], axis=1), axis=0)
        train_mask, holdout_mask = _split_holdout(len(implied),
                                                  spec.holdout_fraction, rng)
        train = np.concatenate([observed, implied[train_mask]])
        holdout = implied[holdout_mask]

    train_set = TripleSet(train, role="train")
    holdout_set = TripleSet(holdout, role="test")
    overlap = train_set.as_set() & holdout_set.as_set()
    if overlap:
        raise AssertionError(f"train/holdout overlap: {sorted(overlap)[:3]}")
    return train_set, holdout_set, vocab


def write_pattern_dataset(spec: PatternSpec, out_dir) -> dict[str, str]:
    """Generate and write train.tsv, holdout.tsv, and manifest.txt."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train, holdout, vocab = generate_pattern_kg(spec)
    save_triples(train, vocab, out_dir / "train.tsv")
    save_triples(holdout, vocab, out_dir / "holdout.tsv")
    manifest = {
        "pattern": spec.pattern,
        "seed": str(spec.seed),
        "n_entities": str(spec.n_entities),
        "n_relations": str(spec.n_relations),
        "density": repr(spec.density),
        "holdout_fraction": repr(spec.holdout_fraction),
        "n_train": str(len(train)),
        "n_holdout": str(len(holdout)),
        "holdout_kind": "negative" if spec.holdout_is_negative else "positive",
    }
    with (out_dir / "manifest.txt").open("w", encoding="utf-8") as fh:
        for key, value in manifest.items():
            fh.write(f"{key}: {value}\n")
    return manifest
