"""Binary checkpoint format for embeddings, limits, and optimizer state.

Layout (all integers little-endian):

    bytes 0-3   magic ``MDEC``
    bytes 4-7   uint32 format version (currently 1)
    bytes 8-11  uint32 header length in bytes
    then        UTF-8 JSON header
    then        float32 arrays, family-major: for each family listed in the
                header, the entity table (n_entities x dim, row-major) then
                the relation table (n_relations x dim)

The header records dimensions, families, scoring settings, limit state,
optional entity/relation names, the epoch, and the training config used.
Optimizer state goes in a sidecar file with magic ``MDEO`` and float64
accumulator tables.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass

import numpy as np

from .data import Vocabulary
from .errors import ConfigError, DataError
from .loss import LossState
from .model import EmbeddingSet, ScoreConfig
from .optim import AdadeltaState

MAGIC = b"MDEC"
OPTIMIZER_MAGIC = b"MDEO"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    """Everything a checkpoint file carries."""

    embeddings: EmbeddingSet
    score_config: ScoreConfig
    loss_state: LossState | None = None
    vocab: Vocabulary | None = None
    epoch: int | None = None
    train_config: dict | None = None


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise DataError(f"truncated checkpoint: expected {n} bytes of {what}, "
                        f"got {len(data)}")
    return data


def save_checkpoint(path, emb: EmbeddingSet, *, score_config=None,
                    config=None, loss_state: LossState | None = None,
                    vocab: Vocabulary | None = None,
                    epoch: int | None = None) -> None:
    """Write embeddings plus run state; ``config`` may stand in for
    ``score_config`` (its scoring fields are used and the full config is
    recorded in the header)."""
    train_config = None
    if config is not None:
        train_config = config.to_dict()
        if score_config is None:
            score_config = config.score_config()
    if score_config is None:
        raise ConfigError("save_checkpoint needs score_config or config")
    header = {
        "format_version": FORMAT_VERSION,
        "dim": emb.dim,
        "n_entities": emb.n_entities,
        "n_relations": emb.n_relations,
        "families": list(emb.families),
        "score_config": dataclasses.asdict(score_config),
        "loss_state": dataclasses.asdict(loss_state) if loss_state else None,
        "epoch": epoch,
        "entity_names": list(vocab.entity_names) if vocab else None,
        "relation_names": list(vocab.relation_names) if vocab else None,
        "train_config": train_config,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for family in emb.families:
            fh.write(np.ascontiguousarray(emb.entities[family],
                                          dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(emb.relations[family],
                                          dtype="<f4").tobytes())


def load_checkpoint(path) -> Checkpoint:
    """Read a checkpoint; raises DataError with a diagnostic on any
    malformed, truncated, or newer-version file."""
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise DataError(f"cannot open checkpoint {path}: {exc}") from exc
    with fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise DataError(f"{path} is not a checkpoint file "
                            f"(bad magic {magic!r})")
        version, header_len = struct.unpack("<II", _read_exact(fh, 8, "header"))
        if version > FORMAT_VERSION:
            raise DataError(
                f"{path} uses checkpoint format version {version}; this "
                f"build reads up to version {FORMAT_VERSION}")
        try:
            header = json.loads(_read_exact(fh, header_len, "JSON header"))
        except json.JSONDecodeError as exc:
            raise DataError(f"corrupt checkpoint header in {path}: {exc}") from exc
        dim = header["dim"]
        n_ent = header["n_entities"]
        n_rel = header["n_relations"]
        families = tuple(header["families"])
        entities = {}
        relations = {}
        for family in families:
            raw = _read_exact(fh, 4 * n_ent * dim, f"entity table {family!r}")
            entities[family] = np.frombuffer(raw, dtype="<f4").astype(
                float).reshape(n_ent, dim)
            raw = _read_exact(fh, 4 * n_rel * dim, f"relation table {family!r}")
            relations[family] = np.frombuffer(raw, dtype="<f4").astype(
                float).reshape(n_rel, dim)
        trailing = fh.read(1)
        if trailing:
            raise DataError(f"{path} has unexpected data past the embedding "
                            "tables")
    emb = EmbeddingSet(entities, relations)
    score_config = ScoreConfig(**header["score_config"])
    loss_state = (LossState(**header["loss_state"])
                  if header.get("loss_state") else None)
    vocab = None
    if header.get("entity_names") is not None:
        vocab = Vocabulary(entity_names=list(header["entity_names"]),
                           relation_names=list(header["relation_names"] or []))
    return Checkpoint(embeddings=emb, score_config=score_config,
                      loss_state=loss_state, vocab=vocab,
                      epoch=header.get("epoch"),
                      train_config=header.get("train_config"))


def save_optimizer_state(path, state: AdadeltaState) -> None:
    groups = [{"family": family, "kind": kind,
               "rows": acc["eg2"].shape[0], "dim": acc["eg2"].shape[1]}
              for (family, kind), acc in sorted(state.accumulators.items())]
    header = {"format_version": FORMAT_VERSION, "rho": state.rho,
              "eps": state.eps, "lr": state.lr, "groups": groups}
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(OPTIMIZER_MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for group in groups:
            acc = state.accumulators[(group["family"], group["kind"])]
            fh.write(np.ascontiguousarray(acc["eg2"], dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(acc["edx2"], dtype="<f8").tobytes())


def load_optimizer_state(path) -> AdadeltaState:
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise DataError(f"cannot open optimizer state {path}: {exc}") from exc
    with fh:
        magic = fh.read(4)
        if magic != OPTIMIZER_MAGIC:
            raise DataError(f"{path} is not an optimizer state file "
                            f"(bad magic {magic!r})")
        version, header_len = struct.unpack("<II", _read_exact(fh, 8, "header"))
        if version > FORMAT_VERSION:
            raise DataError(
                f"{path} uses optimizer format version {version}; this "
                f"build reads up to version {FORMAT_VERSION}")
        header = json.loads(_read_exact(fh, header_len, "JSON header"))
        state = AdadeltaState(rho=header["rho"], eps=header["eps"],
                              lr=header["lr"])
        for group in header["groups"]:
            rows, dim = group["rows"], group["dim"]
            eg2 = np.frombuffer(
                _read_exact(fh, 8 * rows * dim, "eg2 table"),
                dtype="<f8").reshape(rows, dim).copy()
            edx2 = np.frombuffer(
                _read_exact(fh, 8 * rows * dim, "edx2 table"),
                dtype="<f8").reshape(rows, dim).copy()
            state.accumulators[(group["family"], group["kind"])] = {
                "eg2": eg2, "edx2": edx2}
    return state
