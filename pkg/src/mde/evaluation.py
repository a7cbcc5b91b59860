"""Link-prediction ranking: per-query ranks and aggregate reports."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive_int, check_triple_array
from .data import FilterIndex
from .errors import ConfigError
from .model import EmbeddingSet, ScoreConfig, score_candidates

SETTINGS = ("raw", "filtered")
SIDES = ("head", "tail")
HITS_AT = (1, 3, 10)


@dataclass(frozen=True)
class RankingReport:
    """Aggregate ranking quality over a set of queries (lower MR is better)."""

    n_queries: int
    mean_rank: float
    mrr: float
    hits1: float
    hits3: float
    hits10: float

    @classmethod
    def from_ranks(cls, ranks) -> "RankingReport":
        ranks = np.asarray(ranks, dtype=float)
        if len(ranks) == 0:
            raise ConfigError("cannot aggregate an empty set of ranks")
        return cls(
            n_queries=len(ranks),
            mean_rank=float(ranks.mean()),
            mrr=float((1.0 / ranks).mean()),
            hits1=float((ranks <= 1).mean()),
            hits3=float((ranks <= 3).mean()),
            hits10=float((ranks <= 10).mean()),
        )

    def as_dict(self) -> dict:
        return {"n_queries": self.n_queries, "mean_rank": self.mean_rank,
                "mrr": self.mrr, "hits1": self.hits1, "hits3": self.hits3,
                "hits10": self.hits10}


def _rank_from_scores(scores: np.ndarray, true_index: int,
                      allowed: np.ndarray | None) -> int:
    """Rank of the true candidate; ties share their mean rank, rounded up.

    ``allowed`` is a boolean mask over candidates (the true one must be
    allowed); None means every candidate competes.
    """
    true_score = scores[true_index]
    if allowed is None:
        better = int(np.count_nonzero(scores < true_score))
        equal = int(np.count_nonzero(scores == true_score)) - 1
    else:
        pool = scores[allowed]
        better = int(np.count_nonzero(pool < true_score))
        equal = int(np.count_nonzero(pool == true_score)) - 1
    return 1 + better + (equal + 1) // 2


def rank_triple(triple, emb: EmbeddingSet, config: ScoreConfig, side: str,
                filter_index: FilterIndex | None = None) -> int:
    """Rank the true entity among all candidate replacements on one side.

    With a filter index, candidates that complete a known positive are
    removed from the pool — except the queried entity itself, which always
    competes.
    """
    if side not in SIDES:
        raise ConfigError(f"side must be one of {SIDES}, got {side!r}")
    h, r, t = (int(x) for x in triple)
    scores = score_candidates((h, r, t), emb, config, side)
    true_index = h if side == "head" else t
    allowed = None
    if filter_index is not None:
        known = (filter_index.known_heads(r, t) if side == "head"
                 else filter_index.known_tails(h, r))
        allowed = np.ones(len(scores), dtype=bool)
        allowed[known] = False
        allowed[true_index] = True
    return _rank_from_scores(scores, true_index, allowed)


def _collect_ranks(triples, emb, config, side, filter_index, threads):
    if threads <= 1:
        return [rank_triple(tr, emb, config, side, filter_index)
                for tr in triples]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(
            lambda tr: rank_triple(tr, emb, config, side, filter_index),
            triples))


def evaluate(test_triples, emb: EmbeddingSet, config: ScoreConfig, *,
             filter_index: FilterIndex | None = None,
             settings: tuple[str, ...] | None = None,
             threads: int = 1) -> dict[tuple[str, str], RankingReport]:
    """Rank every test triple on both sides under each requested setting.

    Returns reports keyed by ``(setting, side)`` where side is "head",
    "tail", or "both" (all head and tail queries pooled). The filtered
    setting needs a filter index covering every known positive split.
    """
    check_positive_int(threads, "threads")
    triples = check_triple_array(test_triples, n_entities=emb.n_entities,
                                 n_relations=emb.n_relations)
    if settings is None:
        settings = SETTINGS if filter_index is not None else ("raw",)
    for setting in settings:
        if setting not in SETTINGS:
            raise ConfigError(f"unknown evaluation setting {setting!r}")
        if setting == "filtered" and filter_index is None:
            raise ConfigError("filtered evaluation requires a filter index")
    reports: dict[tuple[str, str], RankingReport] = {}
    for setting in settings:
        index = filter_index if setting == "filtered" else None
        all_ranks = []
        for side in SIDES:
            ranks = _collect_ranks(triples, emb, config, side, index, threads)
            all_ranks.extend(ranks)
            reports[(setting, side)] = RankingReport.from_ranks(ranks)
        reports[(setting, "both")] = RankingReport.from_ranks(all_ranks)
    return reports


def score_comparison_rate(reference_triples, other_triples,
                          emb: EmbeddingSet, config: ScoreConfig) -> float:
    """Fraction of pairs where the other triple scores strictly worse.

    Pairs row i of each array. Used for negative holdouts (e.g. reversed
    pairs under a one-way relation) where the model should prefer the
    trained direction.
    """
    from .model import score_triples

    ref = check_triple_array(reference_triples, n_entities=emb.n_entities,
                             n_relations=emb.n_relations)
    other = check_triple_array(other_triples, n_entities=emb.n_entities,
                               n_relations=emb.n_relations)
    if len(ref) != len(other):
        raise ConfigError("comparison requires equally many reference and "
                          f"other triples, got {len(ref)} vs {len(other)}")
    ref_scores = score_triples(ref, emb, config)
    other_scores = score_triples(other, emb, config)
    return float(np.mean(other_scores > ref_scores))


def format_reports(reports: dict[tuple[str, str], RankingReport]) -> str:
    """Readable key/value block per (setting, side) report."""
    lines = []
    for (setting, side) in sorted(reports):
        report = reports[(setting, side)]
        lines.append(f"[{setting}/{side}]")
        lines.append(f"  queries:   {report.n_queries}")
        lines.append(f"  mean_rank: {report.mean_rank:.2f}")
        lines.append(f"  mrr:       {report.mrr:.4f}")
        lines.append(f"  hits@1:    {report.hits1:.4f}")
        lines.append(f"  hits@3:    {report.hits3:.4f}")
        lines.append(f"  hits@10:   {report.hits10:.4f}")
    return "\n".join(lines)


def write_reports_csv(reports: dict[tuple[str, str], RankingReport],
                      path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["setting", "side", "n_queries", "mean_rank", "mrr",
                         "hits1", "hits3", "hits10"])
        for (setting, side) in sorted(reports):
            r = reports[(setting, side)]
            writer.writerow([setting, side, r.n_queries, r.mean_rank, r.mrr,
                             r.hits1, r.hits3, r.hits10])
