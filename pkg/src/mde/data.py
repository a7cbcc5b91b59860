"""Triple datasets: vocabulary indexing, TSV ingestion, and the filter index.

Triple files are UTF-8, newline-delimited, three tab-separated fields per
line: ``head<TAB>relation<TAB>tail``. This matches the layout of the public
WN18/FB15k distributions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

from ._validation import check_triple_array
from .errors import DataError

logger = logging.getLogger(__name__)

ROLES = ("train", "valid", "test")


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


@dataclass
class Vocabulary:
    """Dense string <-> index maps for entities and relations.

    Indices are assigned in first-seen order and are always contiguous.
    Mutation is confined to the data-loading phase; afterwards treat the
    vocabulary as read-only.
    """

    entity_names: list[str] = field(default_factory=list)
    relation_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self._entity_index = {name: i for i, name in enumerate(self.entity_names)}
        self._relation_index = {name: i for i, name in enumerate(self.relation_names)}
        if len(self._entity_index) != len(self.entity_names):
            raise DataError("duplicate entity names in vocabulary")
        if len(self._relation_index) != len(self.relation_names):
            raise DataError("duplicate relation names in vocabulary")

    @property
    def n_entities(self) -> int:
        return len(self.entity_names)

    @property
    def n_relations(self) -> int:
        return len(self.relation_names)

    def add_entity(self, name: str) -> int:
        idx = self._entity_index.get(name)
        if idx is None:
            idx = len(self.entity_names)
            self.entity_names.append(name)
            self._entity_index[name] = idx
        return idx

    def add_relation(self, name: str) -> int:
        idx = self._relation_index.get(name)
        if idx is None:
            idx = len(self.relation_names)
            self.relation_names.append(name)
            self._relation_index[name] = idx
        return idx

    def entity_id(self, name: str) -> int:
        try:
            return self._entity_index[name]
        except KeyError:
            raise DataError(f"unknown entity {name!r}") from None

    def relation_id(self, name: str) -> int:
        try:
            return self._relation_index[name]
        except KeyError:
            raise DataError(f"unknown relation {name!r}") from None

    def __eq__(self, other) -> bool:
        return (isinstance(other, Vocabulary)
                and self.entity_names == other.entity_names
                and self.relation_names == other.relation_names)


class TripleSet:
    """An immutable, deduplicated collection of integer-indexed triples."""

    def __init__(self, triples, role: str = "train"):
        if role not in ROLES:
            raise DataError(f"role must be one of {ROLES}, got {role!r}")
        arr = check_triple_array(triples, allow_empty=True)
        unique, first = np.unique(arr, axis=0, return_index=True)
        if len(unique) != len(arr):
            logger.info("dropped %d duplicate triples from %s set",
                        len(arr) - len(unique), role)
            arr = arr[np.sort(first)]
        self._triples = arr
        self._triples.setflags(write=False)
        self.role = role

    @property
    def triples(self) -> np.ndarray:
        return self._triples

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        for h, r, t in self._triples:
            yield Triple(int(h), int(r), int(t))

    def __contains__(self, triple) -> bool:
        h, r, t = triple
        return (int(h), int(r), int(t)) in self.as_set()

    def as_set(self) -> frozenset[tuple[int, int, int]]:
        if not hasattr(self, "_as_set"):
            self._as_set = frozenset(map(tuple, self._triples.tolist()))
        return self._as_set

    def __repr__(self) -> str:
        return f"TripleSet(role={self.role!r}, n={len(self)})"


def load_triples(path, vocab: Vocabulary | None = None,
                 role: str = "train") -> tuple[TripleSet, Vocabulary]:
    """Read a 3-column TSV triple file into an indexed TripleSet.

    When an existing vocabulary is passed (the valid/test case), names not
    seen before are appended to it, so entities that only occur outside the
    training split keep a dense index. Duplicate lines are dropped with a
    logged count.

    Raises DataError for a missing file, an empty file, or a line that does
    not have exactly three tab-separated fields.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"triple file not found: {path}")
    if vocab is None:
        vocab = Vocabulary()
    rows: list[tuple[int, int, int]] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise DataError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}")
            head, rel, tail = fields
            rows.append((vocab.add_entity(head), vocab.add_relation(rel),
                         vocab.add_entity(tail)))
    if not rows:
        raise DataError(f"triple file is empty: {path}")
    n_raw = len(rows)
    triples = TripleSet(np.asarray(rows, dtype=np.int64), role=role)
    if len(triples) != n_raw:
        logger.info("%s: %d duplicate lines removed", path, n_raw - len(triples))
    return triples, vocab


def save_triples(triples: TripleSet, vocab: Vocabulary, path) -> None:
    """Write a TripleSet back to the 3-column TSV format."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for h, r, t in triples.triples:
            fh.write(f"{vocab.entity_names[h]}\t{vocab.relation_names[r]}"
                     f"\t{vocab.entity_names[t]}\n")


class FilterIndex:
    """Membership index over the union of all splits.

    Supports O(1)-expected containment plus the per-slot lookups the
    filtered ranking protocol needs (all known heads for a fixed
    (relation, tail), and all known tails for a fixed (head, relation)).
    """

    def __init__(self, *triple_sets: TripleSet):
        known: set[tuple[int, int, int]] = set()
        for ts in triple_sets:
            known.update(map(tuple, ts.triples.tolist()))
        self._known = known
        self._tails_by_hr: dict[tuple[int, int], list[int]] = {}
        self._heads_by_rt: dict[tuple[int, int], list[int]] = {}
        for h, r, t in known:
            self._tails_by_hr.setdefault((h, r), []).append(t)
            self._heads_by_rt.setdefault((r, t), []).append(h)
        self._tails_by_hr = {k: np.asarray(sorted(v), dtype=np.int64)
                             for k, v in self._tails_by_hr.items()}
        self._heads_by_rt = {k: np.asarray(sorted(v), dtype=np.int64)
                             for k, v in self._heads_by_rt.items()}

    def contains(self, triple) -> bool:
        h, r, t = triple
        return (int(h), int(r), int(t)) in self._known

    __contains__ = contains

    def __len__(self) -> int:
        return len(self._known)

    def known_tails(self, head: int, relation: int) -> np.ndarray:
        return self._tails_by_hr.get((head, relation), _EMPTY_IDS)

    def known_heads(self, relation: int, tail: int) -> np.ndarray:
        return self._heads_by_rt.get((relation, tail), _EMPTY_IDS)


_EMPTY_IDS = np.zeros(0, dtype=np.int64)


def build_filter_index(train: TripleSet, valid: TripleSet | None = None,
                       test: TripleSet | None = None) -> FilterIndex:
    """Index train ∪ valid ∪ test for the filtered evaluation setting."""
    sets = [s for s in (train, valid, test) if s is not None]
    return FilterIndex(*sets)
