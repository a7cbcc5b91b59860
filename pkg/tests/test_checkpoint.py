import json
import struct

import numpy as np
import pytest

from conftest import random_embeddings
from mde.checkpoint import (FORMAT_VERSION, MAGIC, load_checkpoint,
                            load_optimizer_state, save_checkpoint,
                            save_optimizer_state)
from mde.data import Vocabulary
from mde.errors import ConfigError, DataError
from mde.loss import LossState
from mde.model import ScoreConfig
from mde.optim import AdadeltaState, GradientBuffer, adadelta_step
from mde.training import TrainConfig


def vocab_for(n_entities, n_relations):
    vocab = Vocabulary()
    for i in range(n_entities):
        vocab.add_entity(f"e{i}")
    for i in range(n_relations):
        vocab.add_relation(f"r{i}")
    return vocab


class TestRoundTrip:
    def test_tables_survive_float32_quantization_exactly(self, tmp_path):
        emb = random_embeddings(n_entities=7, n_relations=3, dim=5, seed=1,
                                term4=True)
        path = tmp_path / "model.mde"
        save_checkpoint(path, emb, score_config=ScoreConfig(term4=True, w4=0.1,
                                                            w1=0.3, w2=0.3,
                                                            w3=0.3))
        loaded = load_checkpoint(path)
        assert loaded.embeddings.families == emb.families
        for fam in emb.families:
            expected = emb.entities[fam].astype(np.float32).astype(float)
            assert np.array_equal(loaded.embeddings.entities[fam], expected)
            expected = emb.relations[fam].astype(np.float32).astype(float)
            assert np.array_equal(loaded.embeddings.relations[fam], expected)
        assert loaded.embeddings.entities["i"].dtype == np.float64

    def test_header_fields_round_trip(self, tmp_path):
        emb = random_embeddings(n_entities=4, n_relations=2, dim=3, seed=2)
        cfg = ScoreConfig(w1=0.4, w2=0.4, w3=0.2, psi=0.8, p=2)
        state = LossState(gamma1=1.0, gamma2=2.0, delta=0.3, delta_prime=-0.2,
                          xi=0.05, threshold=0.01, beta1=2.0, beta2=3.0)
        vocab = vocab_for(4, 2)
        path = tmp_path / "model.mde"
        save_checkpoint(path, emb, score_config=cfg, loss_state=state,
                        vocab=vocab, epoch=42)
        loaded = load_checkpoint(path)
        assert loaded.score_config == cfg
        assert loaded.loss_state == state
        assert loaded.epoch == 42
        assert loaded.vocab == vocab
        assert loaded.train_config is None

    def test_train_config_stands_in_and_is_recorded(self, tmp_path):
        emb = random_embeddings(n_entities=3, n_relations=1, dim=2, seed=3)
        cfg = TrainConfig(dim=2, gamma1=1.5, gamma2=1.5, psi=0.7, p=2)
        path = tmp_path / "model.mde"
        save_checkpoint(path, emb, config=cfg)
        loaded = load_checkpoint(path)
        assert loaded.score_config == cfg.score_config()
        assert loaded.train_config == cfg.to_dict()
        assert TrainConfig(**loaded.train_config) == cfg

    def test_optional_fields_default_to_none(self, tmp_path):
        emb = random_embeddings(n_entities=3, n_relations=1, dim=2, seed=4)
        path = tmp_path / "model.mde"
        save_checkpoint(path, emb, score_config=ScoreConfig())
        loaded = load_checkpoint(path)
        assert loaded.loss_state is None
        assert loaded.vocab is None
        assert loaded.epoch is None

    def test_some_config_required(self, tmp_path):
        emb = random_embeddings()
        with pytest.raises(ConfigError):
            save_checkpoint(tmp_path / "model.mde", emb)

    def test_save_load_save_is_byte_identical(self, tmp_path):
        emb = random_embeddings(n_entities=5, n_relations=2, dim=4, seed=5)
        first = tmp_path / "a.mde"
        second = tmp_path / "b.mde"
        save_checkpoint(first, emb, score_config=ScoreConfig(), epoch=7,
                        vocab=vocab_for(5, 2))
        loaded = load_checkpoint(first)
        save_checkpoint(second, loaded.embeddings,
                        score_config=loaded.score_config, epoch=loaded.epoch,
                        vocab=loaded.vocab)
        assert first.read_bytes() == second.read_bytes()


class TestDiagnostics:
    def save_small(self, tmp_path):
        emb = random_embeddings(n_entities=3, n_relations=1, dim=2, seed=6)
        path = tmp_path / "model.mde"
        save_checkpoint(path, emb, score_config=ScoreConfig())
        return path

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="cannot open"):
            load_checkpoint(tmp_path / "absent.mde")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.mde"
        path.write_bytes(b"JUNKJUNKJUNK")
        with pytest.raises(DataError, match="magic"):
            load_checkpoint(path)

    def test_newer_version_named_in_error(self, tmp_path):
        path = self.save_small(tmp_path)
        data = bytearray(path.read_bytes())
        data[4:8] = struct.pack("<I", 99)
        path.write_bytes(bytes(data))
        with pytest.raises(DataError, match="version 99"):
            load_checkpoint(path)

    def test_corrupt_json_header(self, tmp_path):
        path = self.save_small(tmp_path)
        data = bytearray(path.read_bytes())
        header_len = struct.unpack("<I", data[8:12])[0]
        data[12:12 + header_len] = b"{" * header_len
        path.write_bytes(bytes(data))
        with pytest.raises(DataError, match="corrupt checkpoint header"):
            load_checkpoint(path)

    def test_truncated_tables(self, tmp_path):
        path = self.save_small(tmp_path)
        data = path.read_bytes()
        path.write_bytes(data[:-5])
        with pytest.raises(DataError, match="truncated"):
            load_checkpoint(path)

    def test_trailing_garbage(self, tmp_path):
        path = self.save_small(tmp_path)
        path.write_bytes(path.read_bytes() + b"x")
        with pytest.raises(DataError, match="past the embedding"):
            load_checkpoint(path)

    def test_magic_is_stable(self, tmp_path):
        path = self.save_small(tmp_path)
        assert path.read_bytes()[:4] == MAGIC == b"MDEC"
        version = struct.unpack("<I", path.read_bytes()[4:8])[0]
        assert version == FORMAT_VERSION == 1

    def test_header_is_sorted_json(self, tmp_path):
        path = self.save_small(tmp_path)
        data = path.read_bytes()
        header_len = struct.unpack("<I", data[8:12])[0]
        header = json.loads(data[12:12 + header_len])
        assert list(header) == sorted(header)
        assert header["dim"] == 2


class TestOptimizerSidecar:
    def stepped_state(self):
        emb = random_embeddings(n_entities=4, n_relations=2, dim=3, seed=8)
        state = AdadeltaState(rho=0.9, eps=1e-5, lr=2.0)
        buf = GradientBuffer(dim=3)
        buf.add("i", "entity", [0, 2], [[1.0, -1.0, 0.5], [0.1, 0.2, 0.3]])
        buf.add("j", "relation", [1], [[0.7, 0.0, -0.7]])
        adadelta_step(state, buf, emb)
        return state

    def test_accumulators_round_trip_exactly(self, tmp_path):
        state = self.stepped_state()
        path = tmp_path / "model.mde.opt"
        save_optimizer_state(path, state)
        loaded = load_optimizer_state(path)
        assert loaded.rho == state.rho
        assert loaded.eps == state.eps
        assert loaded.lr == state.lr
        assert set(loaded.accumulators) == set(state.accumulators)
        for key, acc in state.accumulators.items():
            assert np.array_equal(loaded.accumulators[key]["eg2"], acc["eg2"])
            assert np.array_equal(loaded.accumulators[key]["edx2"],
                                  acc["edx2"])

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.opt"
        path.write_bytes(b"NOPE" + b"\0" * 16)
        with pytest.raises(DataError, match="magic"):
            load_optimizer_state(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="cannot open"):
            load_optimizer_state(tmp_path / "absent.opt")

    def test_checkpoint_and_sidecar_magics_differ(self, tmp_path):
        state = self.stepped_state()
        opt_path = tmp_path / "model.mde.opt"
        save_optimizer_state(opt_path, state)
        with pytest.raises(DataError, match="magic"):
            load_checkpoint(opt_path)
