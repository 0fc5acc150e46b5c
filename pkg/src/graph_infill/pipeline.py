"""End-to-end runs shared by the command line and the demos."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .gacls import TrainResult, train
from .graph import FeatureMatrix, Split, normalize
from .ingest import Dataset, apply_mask, make_split
from .metrics import ranking_report
from .precoder import dirichlet_energy, iterate_propagation, normalized_dirichlet_energy
from .probe import classify_probe
from .report import EvalReport


@dataclass
class PrecodeResult:
    split: Split
    precoded: FeatureMatrix
    energy: list[float]  # energy of the iterate after 0, 1, ... rounds
    normalized_energy: list[float]


def run_precode(dataset: Dataset, cfg: RunConfig) -> PrecodeResult:
    split = make_split(dataset, cfg.mask)
    adj = normalize(dataset.graph)
    energy, normalized = [], []
    x = None
    for x in iterate_propagation(apply_mask(dataset, split), adj, cfg.precoder):
        energy.append(dirichlet_energy(x, adj))
        normalized.append(normalized_dirichlet_energy(x, adj))
    return PrecodeResult(split, FeatureMatrix(x, split.observed_mask()), energy, normalized)


def evaluate(dataset: Dataset, split: Split, cfg: RunConfig, imputed=None, embedding=None,
             label: str = "AmGCL", param_count: int = 0, wall_time_s: float = 0.0,
             extra: dict | None = None) -> EvalReport:
    """Ranking metrics of ``imputed`` on the test nodes and probe accuracy.

    The probe runs on each source listed in ``cfg.probe_inputs`` that is
    available; ``accuracy_folds`` holds the first one, the rest go to
    ``extra``. Ranking metrics need binary attributes.
    """
    extra = dict(extra or {})
    ranking = {"recall_at": {}, "ndcg_at": {}, "ndcg_full_at": {}, "skipped_rows": 0}
    if imputed is not None:
        values = np.asarray(getattr(imputed, "values", imputed))
        test = split.missing_test
        if dataset.binary and test.size:
            ranking = ranking_report(values[test], dataset.features.values[test], cfg.ks)
        elif test.size:
            extra["test_mse"] = float(np.mean((values[test] - dataset.features.values[test]) ** 2))

    sources = {"embedding": embedding, "imputed": imputed}
    folds, mean = [], None
    if dataset.labels is not None:
        for name in cfg.probe_inputs:
            src = sources.get(name)
            if src is None:
                continue
            accs = classify_probe(src, dataset.graph, dataset.labels, split.missing, cfg.probe)
            if not folds:
                folds, mean = accs, float(np.mean(accs))
                extra["probe_input"] = name
            else:
                extra[f"accuracy_folds_{name}"] = accs
                extra[f"accuracy_mean_{name}"] = float(np.mean(accs))

    return EvalReport(
        label=label, config_echo=cfg.to_dict(), seed=cfg.train.seed,
        accuracy_folds=folds, accuracy_mean=mean, param_count=param_count,
        wall_time_s=wall_time_s, extra=extra, **ranking,
    )


@dataclass
class TrainRun:
    split: Split
    result: TrainResult
    report: EvalReport


def run_train(dataset: Dataset, cfg: RunConfig) -> TrainRun:
    t0 = time.perf_counter()
    split = make_split(dataset, cfg.mask)
    result = train(dataset, split, cfg.train, cfg.precoder)
    label = "AmGCL*" if cfg.train.variant == "star" else "AmGCL"
    extra = {"best_epoch": result.best_epoch, "epochs_run": result.epochs_run,
             "train_time_s": result.wall_time_s}
    report = evaluate(dataset, split, cfg, result.imputed, result.embedding, label,
                      result.model.num_parameters(), 0.0, extra)
    report.wall_time_s = time.perf_counter() - t0
    return TrainRun(split, result, report)


def zero_filled(dataset: Dataset, split: Split) -> FeatureMatrix:
    """Raw features with missing rows set to zero (the no-imputation baseline)."""
    return apply_mask(dataset, split)
