import numpy as np
import pytest

from mde.model import EmbeddingSet, init_embeddings


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_embeddings(n_entities=5, n_relations=2, dim=4, seed=0,
                      term4=False) -> EmbeddingSet:
    return init_embeddings((n_entities, n_relations), dim, seed=seed,
                           term4=term4)


def explicit_embeddings(entities, relations, families=("i", "j", "k"),
                        term4=False, **per_family) -> EmbeddingSet:
    """Build an EmbeddingSet with the same tables in every family.

    ``entities``/``relations`` are (n, d) arrays used for each family
    unless overridden by ``<family>_entities`` / ``<family>_relations``
    keyword arrays. ``term4=True`` adds the product family "l".
    """
    entities = np.asarray(entities, dtype=float)
    relations = np.asarray(relations, dtype=float)
    if term4 and "l" not in families:
        families = tuple(families) + ("l",)
    ent = {}
    rel = {}
    for fam in families:
        ent[fam] = np.array(per_family.get(f"{fam}_entities", entities),
                            dtype=float)
        rel[fam] = np.array(per_family.get(f"{fam}_relations", relations),
                            dtype=float)
    return EmbeddingSet(ent, rel)
