"""Scikit-learn style estimator facade over the training loop."""

from __future__ import annotations

import dataclasses

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_triple_array
from .checkpoint import load_checkpoint, save_checkpoint
from .data import FilterIndex
from .errors import ConfigError
from .evaluation import evaluate as _evaluate
from .evaluation import rank_triple
from .model import score_triples as _score_triples
from .training import TrainConfig, train

_CONFIG_FIELDS = [f.name for f in dataclasses.fields(TrainConfig)]


class MDE(BaseEstimator):
    """Multi-distance knowledge-graph embedding model.

    ``fit`` takes an integer array of (head, relation, tail) id triples,
    all treated as positive facts; corruptions are sampled internally.
    Lower ``score_triples`` output means more plausible, so
    ``decision_function`` returns the negated scores to keep the usual
    higher-is-better orientation.

    Parameters mirror :class:`mde.training.TrainConfig`; entity and
    relation counts are inferred from the training triples unless given.
    """

    def __init__(self, dim=50, epochs=1000, batch_size=100, lr=10.0,
                 negatives_per_positive=1, seed=0,
                 w1=0.25, w2=0.5, w3=0.25, w4=0.0, psi=1.2, p=1,
                 term4=False, gamma1=2.0, gamma2=2.0, xi=0.1,
                 threshold=0.05, beta1=1.0, beta2=1.0,
                 optimizer="adadelta", rho=0.95, eps=1e-6,
                 normalize_entities=False, filtered_sampling=False,
                 checkpoint_interval=100, checkpoint_dir=None,
                 n_entities=None, n_relations=None):
        self.dim = dim
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.negatives_per_positive = negatives_per_positive
        self.seed = seed
        self.w1 = w1
        self.w2 = w2
        self.w3 = w3
        self.w4 = w4
        self.psi = psi
        self.p = p
        self.term4 = term4
        self.gamma1 = gamma1
        self.gamma2 = gamma2
        self.xi = xi
        self.threshold = threshold
        self.beta1 = beta1
        self.beta2 = beta2
        self.optimizer = optimizer
        self.rho = rho
        self.eps = eps
        self.normalize_entities = normalize_entities
        self.filtered_sampling = filtered_sampling
        self.checkpoint_interval = checkpoint_interval
        self.checkpoint_dir = checkpoint_dir
        self.n_entities = n_entities
        self.n_relations = n_relations

    def _train_config(self) -> TrainConfig:
        return TrainConfig(**{name: getattr(self, name)
                              for name in _CONFIG_FIELDS})

    def fit(self, X, y=None):
        """Train on positive triples; y is ignored (present for API
        compatibility)."""
        X = check_triple_array(X)
        n_entities = self.n_entities
        n_relations = self.n_relations
        if n_entities is None:
            n_entities = int(max(X[:, 0].max(), X[:, 2].max())) + 1
        if n_relations is None:
            n_relations = int(X[:, 1].max()) + 1
        config = self._train_config()
        result = train(X, n_entities, n_relations, config)
        self.n_entities_ = n_entities
        self.n_relations_ = n_relations
        self.config_ = config
        self.embeddings_ = result.embeddings
        self.history_ = result.history
        self.loss_state_ = result.loss_state
        self.optimizer_ = result.optimizer
        return self

    def _check_fitted(self):
        if not hasattr(self, "embeddings_"):
            raise ConfigError("this model has not been fitted yet")

    def score_triples(self, X) -> np.ndarray:
        """Raw scores for triples; lower means more plausible."""
        self._check_fitted()
        X = check_triple_array(X, n_entities=self.n_entities_,
                               n_relations=self.n_relations_)
        return _score_triples(X, self.embeddings_, self.config_.score_config())

    def decision_function(self, X) -> np.ndarray:
        return -self.score_triples(X)

    def predict(self, X) -> np.ndarray:
        """Alias for decision_function: plausibility, higher is better."""
        return self.decision_function(X)

    def rank_triples(self, X, side: str = "tail",
                     filter_index: FilterIndex | None = None) -> np.ndarray:
        self._check_fitted()
        X = check_triple_array(X, n_entities=self.n_entities_,
                               n_relations=self.n_relations_)
        config = self.config_.score_config()
        return np.array([rank_triple(tr, self.embeddings_, config, side,
                                     filter_index) for tr in X],
                        dtype=np.int64)

    def evaluate(self, X, *, filter_index: FilterIndex | None = None,
                 threads: int = 1):
        self._check_fitted()
        return _evaluate(X, self.embeddings_, self.config_.score_config(),
                         filter_index=filter_index, threads=threads)

    def save(self, path, vocab=None) -> None:
        self._check_fitted()
        save_checkpoint(path, self.embeddings_, config=self.config_,
                        loss_state=self.loss_state_, vocab=vocab,
                        epoch=len(self.history_))

    @classmethod
    def from_checkpoint(cls, path) -> "MDE":
        """Rebuild a scoring-ready estimator from a saved checkpoint."""
        ckpt = load_checkpoint(path)
        model = cls()
        if ckpt.train_config:
            model.set_params(**{k: v for k, v in ckpt.train_config.items()
                                if k in _CONFIG_FIELDS})
            model.config_ = TrainConfig(**ckpt.train_config)
        else:
            sc = ckpt.score_config
            model.set_params(w1=sc.w1, w2=sc.w2, w3=sc.w3, w4=sc.w4,
                             psi=sc.psi, p=sc.p, term4=sc.term4)
            model.config_ = model._train_config()
        model.embeddings_ = ckpt.embeddings
        model.loss_state_ = ckpt.loss_state
        model.n_entities_ = ckpt.embeddings.n_entities
        model.n_relations_ = ckpt.embeddings.n_relations
        from .training import TrainHistory

        model.history_ = TrainHistory()
        model.optimizer_ = None
        return model
