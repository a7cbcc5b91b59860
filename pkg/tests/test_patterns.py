import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mde.data import load_triples
from mde.errors import ConfigError
from mde.patterns import PATTERNS, PatternSpec, generate_pattern_kg, write_pattern_dataset


def gen(pattern, **kwargs):
    defaults = {"n_entities": 12, "density": 0.6, "holdout_fraction": 0.25,
                "seed": 7}
    if pattern == "inversion":
        defaults["n_relations"] = 2
    if pattern == "composition":
        defaults["n_relations"] = 3
    defaults.update(kwargs)
    return generate_pattern_kg(PatternSpec(pattern=pattern, **defaults))


class TestSpecValidation:
    def test_pattern_name_checked(self):
        with pytest.raises(ConfigError):
            PatternSpec(n_entities=5, pattern="transitivity")

    def test_inversion_needs_two_relations(self):
        with pytest.raises(ConfigError):
            PatternSpec(n_entities=5, pattern="inversion", n_relations=1)

    def test_composition_needs_three_relations(self):
        with pytest.raises(ConfigError):
            PatternSpec(n_entities=5, pattern="composition", n_relations=2)

    def test_fraction_bounds(self):
        with pytest.raises(ConfigError):
            PatternSpec(n_entities=5, pattern="symmetry", holdout_fraction=1.0)
        with pytest.raises(ConfigError):
            PatternSpec(n_entities=5, pattern="symmetry", density=0.0)


class TestSymmetry:
    def test_no_holdout_means_both_directions_trained(self):
        train, holdout, _ = gen("symmetry", density=1.0, holdout_fraction=0.0)
        assert len(holdout) == 0
        pairs = train.as_set()
        for h, r, t in pairs:
            assert (t, r, h) in pairs

    def test_holdout_reverses_a_trained_fact(self):
        train, holdout, _ = gen("symmetry")
        assert len(holdout) > 0
        for h, r, t in holdout:
            assert (t, r, h) in train

    def test_holdout_fraction_respected(self):
        spec = PatternSpec(n_entities=30, pattern="symmetry", density=1.0,
                           holdout_fraction=0.2, seed=3)
        train, holdout, _ = generate_pattern_kg(spec)
        n_pairs = 30 * 29 // 2
        assert len(holdout) == round(0.2 * n_pairs)
        assert len(train) == 2 * n_pairs - len(holdout)


class TestAntisymmetry:
    def test_holdout_is_negative_reverse_of_trained_fact(self):
        spec = PatternSpec(n_entities=12, pattern="antisymmetry",
                           density=0.6, holdout_fraction=0.25, seed=7)
        assert spec.holdout_is_negative
        train, holdout, _ = generate_pattern_kg(spec)
        for h, r, t in holdout:
            assert (h, r, t) not in train
            assert (t, r, h) in train

    def test_no_reverse_ever_trains(self):
        train, _, _ = gen("antisymmetry", density=1.0)
        facts = train.as_set()
        for h, r, t in facts:
            assert (t, r, h) not in facts


class TestInversion:
    def test_observed_relation_is_odd_implied_is_even(self):
        train, holdout, _ = gen("inversion")
        assert len(holdout) > 0
        for h, r, t in holdout:
            assert r % 2 == 0
            assert (t, r + 1, h) in train

    def test_single_pair_semantics(self):
        # every observed fact r_odd(x, y) has its implied twin r_even(y, x)
        # in train or holdout
        train, holdout, _ = gen("inversion", density=1.0)
        everything = train.as_set() | holdout.as_set()
        observed = [(h, r, t) for h, r, t in train if r % 2 == 1]
        assert observed
        for h, r, t in observed:
            assert (t, r - 1, h) in everything


class TestComposition:
    def test_chain_implies_shortcut(self):
        train, holdout, _ = gen("composition", n_entities=9, density=1.0)
        assert len(holdout) > 0
        facts = train.as_set()
        for x, r, z in holdout:
            assert r % 3 == 0
            mids = [y for (a, rr, y) in facts if a == x and rr == r + 1]
            assert any((y, r + 2, z) in facts for y in mids)

    def test_holdout_carries_only_shortcut_relations(self):
        train, holdout, _ = gen("composition", n_entities=9, density=1.0)
        assert all(r % 3 == 0 for _, r, _ in holdout)
        assert not (train.as_set() & holdout.as_set())

    def test_each_relation_is_a_partial_one_to_one_map(self):
        # chains follow disjoint paths, so no relation ever reuses a head
        # or a tail; this is what makes the pattern geometrically satisfiable
        train, holdout, _ = gen("composition", n_entities=14, density=1.0,
                                n_relations=6)
        facts = np.concatenate([train.triples, holdout.triples])
        for r in np.unique(facts[:, 1]):
            edges = facts[facts[:, 1] == r]
            assert len(np.unique(edges[:, 0])) == len(edges)
            assert len(np.unique(edges[:, 2])) == len(edges)

    def test_relation_groups_use_disjoint_entity_blocks(self):
        train, holdout, _ = gen("composition", n_entities=14, density=1.0,
                                n_relations=6)
        facts = np.concatenate([train.triples, holdout.triples])
        per_group = [np.unique(facts[facts[:, 1] // 3 == g][:, [0, 2]])
                     for g in (0, 1)]
        assert not set(per_group[0]) & set(per_group[1])

    def test_density_scales_chain_count(self):
        full, full_hold, _ = gen("composition", n_entities=41, density=1.0)
        half, half_hold, _ = gen("composition", n_entities=41, density=0.5)
        n_full = (len(full) + len(full_hold)) // 3
        n_half = (len(half) + len(half_hold)) // 3
        assert n_full == 20  # (41 - 1) // 2 path windows
        assert n_half == 10

    def test_too_few_entities_per_group_rejected(self):
        with pytest.raises(ConfigError, match="at least 6 entities"):
            gen("composition", n_entities=5, n_relations=6)


@settings(max_examples=25, deadline=None)
@given(pattern=st.sampled_from(PATTERNS),
       n_entities=st.integers(min_value=4, max_value=14),
       density=st.floats(min_value=0.05, max_value=1.0),
       holdout_fraction=st.floats(min_value=0.0, max_value=0.9),
       seed=st.integers(min_value=0, max_value=2**31 - 1))
def test_train_and_holdout_always_disjoint(pattern, n_entities, density,
                                           holdout_fraction, seed):
    n_relations = {"inversion": 2, "composition": 3}.get(pattern, 1)
    spec = PatternSpec(n_entities=n_entities, pattern=pattern,
                       n_relations=n_relations, density=density,
                       holdout_fraction=holdout_fraction, seed=seed)
    train, holdout, vocab = generate_pattern_kg(spec)
    assert not (train.as_set() & holdout.as_set())
    assert len(train) > 0
    arr = np.concatenate([train.triples, holdout.triples]) if len(holdout) \
        else train.triples
    assert arr[:, [0, 2]].max() < vocab.n_entities
    assert arr[:, 1].max() < vocab.n_relations


def test_same_seed_reproduces_identical_arrays():
    a_train, a_hold, _ = gen("composition", n_entities=10, density=0.05)
    b_train, b_hold, _ = gen("composition", n_entities=10, density=0.05)
    assert np.array_equal(a_train.triples, b_train.triples)
    assert np.array_equal(a_hold.triples, b_hold.triples)


def test_different_seeds_differ():
    a_train, _, _ = gen("symmetry", seed=1)
    b_train, _, _ = gen("symmetry", seed=2)
    assert not np.array_equal(a_train.triples, b_train.triples)


def test_density_scales_pair_count():
    spec = PatternSpec(n_entities=40, pattern="symmetry", density=0.5,
                       holdout_fraction=0.0, seed=0)
    train, _, _ = generate_pattern_kg(spec)
    n_pairs = 40 * 39 // 2
    assert len(train) == 2 * round(0.5 * n_pairs)


class TestWriteDataset:
    def test_files_written_and_loadable(self, tmp_path):
        spec = PatternSpec(n_entities=10, pattern="inversion", n_relations=2,
                           density=0.5, seed=5)
        manifest = write_pattern_dataset(spec, tmp_path / "ds")
        train, vocab = load_triples(tmp_path / "ds" / "train.tsv")
        holdout, _ = load_triples(tmp_path / "ds" / "holdout.tsv",
                                  vocab=vocab, role="test")
        assert len(train) == int(manifest["n_train"])
        assert len(holdout) == int(manifest["n_holdout"])
        text = (tmp_path / "ds" / "manifest.txt").read_text()
        assert "pattern: inversion" in text
        assert "holdout_kind: positive" in text

    def test_rewrite_is_byte_identical(self, tmp_path):
        spec = PatternSpec(n_entities=10, pattern="symmetry", seed=9)
        write_pattern_dataset(spec, tmp_path / "a")
        write_pattern_dataset(spec, tmp_path / "b")
        for name in ("train.tsv", "holdout.tsv", "manifest.txt"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()
