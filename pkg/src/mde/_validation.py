"""Input validation helpers used by the estimator and the functional API."""

from __future__ import annotations

import numbers

import numpy as np

from .errors import ConfigError, DataError


def check_triple_array(X, n_entities: int | None = None, n_relations: int | None = None,
                       allow_empty: bool = False) -> np.ndarray:
    """Validate and convert a triple collection to an int64 array of shape (n, 3).

    Accepts anything array-like holding integer (head, relation, tail) rows.
    Index bounds are checked when the vocabulary sizes are given.
    """
    X = np.asarray(X)
    if X.size == 0 and allow_empty:
        return np.zeros((0, 3), dtype=np.int64)
    if X.ndim == 1 and X.shape == (3,):
        X = X.reshape(1, 3)
    if X.ndim != 2 or X.shape[1] != 3:
        raise DataError(f"triples must have shape (n, 3), got {X.shape}")
    if X.size == 0 and not allow_empty:
        raise DataError("empty triple array")
    if not np.issubdtype(X.dtype, np.integer):
        rounded = np.rint(np.asarray(X, dtype=float))
        if not np.array_equal(rounded, np.asarray(X, dtype=float)):
            raise DataError("triple indices must be integers")
        X = rounded
    X = X.astype(np.int64, copy=False)
    if X.min(initial=0) < 0:
        raise DataError("triple indices must be nonnegative")
    if n_entities is not None:
        ent = X[:, [0, 2]]
        if ent.size and ent.max() >= n_entities:
            raise DataError(
                f"entity index {int(ent.max())} out of range for {n_entities} entities")
    if n_relations is not None:
        rel = X[:, 1]
        if rel.size and rel.max() >= n_relations:
            raise DataError(
                f"relation index {int(rel.max())} out of range for {n_relations} relations")
    return X


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if not isinstance(value, numbers.Integral):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_fraction(value, name: str, *, include_one: bool = True,
                   include_zero: bool = False) -> float:
    value = float(value)
    low_ok = value > 0.0 or (include_zero and value == 0.0)
    high_ok = value < 1.0 or (include_one and value == 1.0)
    if not (low_ok and high_ok):
        raise ConfigError(f"{name}={value} outside the allowed range")
    return value


def as_rng(seed_or_rng) -> np.random.Generator:
    """Return a numpy Generator; integers seed a fresh PCG64 stream."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)
