"""Desk-scale comparison experiments: quantile training vs logistic.

Two experiment kinds share one result schema:

* rate_table: repeated stratified splits of a loaded dataset; per split
  the quantile method trains one model per (tau, weight decay) on the
  false-positive-side rate objective and logistic regression trains one
  model per weight decay; precision at predicted-positive rate tau is
  recorded on both sides of the split.
* recall_point: repeated draws of a pinned synthetic mixture; methods
  train toward precision at a recall floor and are scored with
  precision_at_recall on the held-out half.

The weight decay is selected per (method, level) two ways and both are
reported: "test" picks the decay with the best mean test metric (the
protocol the published comparison tables use), "train" picks by the
mean train metric.  Aggregates are mean and sample standard deviation
(ddof=1; a single repetition reports 0) over repetitions at the
selected decay.

Every repetition derives its seeds from the experiment seed through
named SeedSequence tuples, so repetitions can run concurrently (--jobs)
without affecting any output byte.  Wall-clock timing is returned to
the caller for console display and never written to result files.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .baseline import logistic_train, with_bias
from .data import (
    MixtureComponent,
    SplitSpec,
    generate_mixture,
    load_delimited,
    load_sparse,
    split,
    standardize,
)
from .errors import InvalidSpec
from .metrics import precision_at_rate, precision_at_recall
from .presets import published_rows
from .train import multi_restart_train
from .types import (
    Dataset,
    QuantileEstimatorSpec,
    RateConstraint,
    SurrogateLossSpec,
    TrainConfig,
)

METHOD_QUANTILE = "quantile"
METHOD_LOGISTIC = "logistic"


@dataclass(frozen=True)
class MethodAggregate:
    """One method's metric distribution at one level, one selection rule."""

    method: str
    level: float
    selection: str
    weight_decay: float
    per_rep: Tuple[float, ...]
    mean: float
    std: float


@dataclass(frozen=True)
class CurvePoint:
    """Plot-ready aggregated curve sample."""

    method: str
    level: float
    mean: float
    std: float


@dataclass(frozen=True)
class ExperimentResult:
    kind: str
    name: str
    seed: int
    config: dict
    aggregates: Tuple[MethodAggregate, ...]
    curve: Tuple[CurvePoint, ...]
    published: Tuple[dict, ...]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "name": self.name,
            "seed": self.seed,
            "config": self.config,
            "aggregates": [
                {
                    "method": a.method,
                    "level": a.level,
                    "selection": a.selection,
                    "weight_decay": a.weight_decay,
                    "per_rep": list(a.per_rep),
                    "mean": a.mean,
                    "std": a.std,
                }
                for a in self.aggregates
            ],
            "curve": [
                {
                    "method": p.method,
                    "level": p.level,
                    "mean": p.mean,
                    "std": p.std,
                }
                for p in self.curve
            ],
            "published": list(self.published),
        }


def _seed_from(*parts: int) -> int:
    ss = np.random.SeedSequence(tuple(int(p) for p in parts))
    return int(ss.generate_state(1)[0])


def _std(values: np.ndarray) -> float:
    if values.size <= 1:
        return 0.0
    return float(values.std(ddof=1))


def _train_config(block: dict, seed: int, restarts: int = 1) -> TrainConfig:
    return TrainConfig(
        learning_rate=float(block["learning_rate"]),
        steps=int(block["steps"]),
        seed=seed,
        momentum=float(block.get("momentum", 0.0)),
        weight_decay=float(block.get("weight_decay", 0.0)),
        batch_size=block.get("batch_size"),
        constraint_batch_size=block.get("constraint_batch_size"),
        restarts=restarts,
        init_scale=float(block.get("init_scale", 0.01)),
        eval_every=int(block.get("eval_every", max(1, int(block["steps"])))),
        lr_decay=str(block.get("lr_decay", "constant")),
    )


def _estimator_spec(block: dict) -> QuantileEstimatorSpec:
    return QuantileEstimatorSpec(
        kind=block["kind"],
        bandwidth=block.get("bandwidth"),
        normalize=bool(block.get("normalize", True)),
        paper_exact=bool(block.get("paper_exact", False)),
        k1=block.get("k1"),
        k2=block.get("k2"),
    )


def _require(config: dict, keys: Sequence[str], kind: str) -> None:
    missing = [k for k in keys if k not in config]
    if missing:
        raise InvalidSpec(f"{kind} experiment config lacks keys {missing}")


def _check_levels(levels, lo_open: float, hi: float, what: str) -> List[float]:
    out = [float(v) for v in levels]
    if not out:
        raise InvalidSpec(f"{what} list is empty")
    if any(not (lo_open < v <= hi) for v in out):
        raise InvalidSpec(f"every {what} must lie in ({lo_open}, {hi}]")
    return out


def load_experiment_dataset(config: dict, data_path: Optional[str]) -> Dataset:
    """Load the dataset a rate_table config names, honoring a path override."""
    block = config.get("data", {})
    path = data_path or block.get("path")
    if not path:
        raise InvalidSpec(
            "no dataset path: set data.path in the config or pass --data"
        )
    form = block.get("format", "delimited")
    if form == "sparse":
        return load_sparse(path)
    if form != "delimited":
        raise InvalidSpec(f"unknown data format {form!r}")
    return load_delimited(
        path,
        label_column=int(block["label_column"]),
        positive_label_value=str(block["positive_label_value"]),
        delimiter=block.get("delimiter", ","),
        header=bool(block.get("header", False)),
        negative_label_value=block.get("negative_label_value"),
        numeric_labels=bool(block.get("numeric_labels", False)),
    )


def _select_and_aggregate(
    method: str,
    levels: Sequence[float],
    test_metric: np.ndarray,
    train_metric: np.ndarray,
    weight_decays: Sequence[float],
) -> List[MethodAggregate]:
    """Pick a weight decay per level under both protocols and aggregate.

    Metric arrays are (reps, n_levels, n_decays); argmax ties resolve
    to the lowest grid index.
    """
    out = []
    for li, level in enumerate(levels):
        for selection, source in (("test", test_metric), ("train", train_metric)):
            wi = int(np.argmax(source[:, li, :].mean(axis=0)))
            per_rep = test_metric[:, li, wi]
            out.append(
                MethodAggregate(
                    method=method,
                    level=float(level),
                    selection=selection,
                    weight_decay=float(weight_decays[wi]),
                    per_rep=tuple(float(v) for v in per_rep),
                    mean=float(per_rep.mean()),
                    std=_std(per_rep),
                )
            )
    return out


def _curve_from_aggregates(
    aggregates: Sequence[MethodAggregate],
) -> List[CurvePoint]:
    return [
        CurvePoint(a.method, a.level, a.mean, a.std)
        for a in aggregates
        if a.selection == "test"
    ]


def _mixture_components(blocks: Sequence[dict]) -> List[MixtureComponent]:
    return [
        MixtureComponent(
            label=int(b["label"]),
            weight=float(b["weight"]),
            mean=tuple(float(v) for v in b["mean"]),
            sigma=float(b["sigma"]),
        )
        for b in blocks
    ]


def _run_rate_table(
    config: dict, dataset: Dataset, seed: int, jobs: int
) -> ExperimentResult:
    _require(
        config,
        ["taus", "weight_decays", "split", "estimator", "train", "logistic", "reps"],
        "rate_table",
    )
    taus = _check_levels(config["taus"], 0.0, 0.999999, "tau")
    decays = [float(v) for v in config["weight_decays"]]
    if not decays or any(v < 0 for v in decays):
        raise InvalidSpec("weight_decays must be nonnegative and nonempty")
    reps = int(config["reps"])
    if reps < 1:
        raise InvalidSpec("reps must be positive")
    frac = float(config["split"]["train_fraction"])
    stratified = bool(config["split"].get("stratified", True))
    do_standardize = bool(config.get("standardize", True))
    est_spec = _estimator_spec(config["estimator"])
    restarts = int(config["train"].get("restarts", 1))

    n_t, n_w = len(taus), len(decays)
    q_test = np.empty((reps, n_t, n_w))
    q_train = np.empty((reps, n_t, n_w))
    l_test = np.empty((reps, n_t, n_w))
    l_train = np.empty((reps, n_t, n_w))

    def one_rep(rep: int):
        spec = SplitSpec(frac, _seed_from(seed, rep), stratified)
        train_set, test_set = split(dataset, spec)
        if do_standardize:
            train_set, test_set, _ = standardize(train_set, test_set)
        qt = np.empty((n_t, n_w))
        qr = np.empty((n_t, n_w))
        lt = np.empty((n_t, n_w))
        lr = np.empty((n_t, n_w))
        for wi, wd in enumerate(decays):
            lmodel = logistic_train(
                train_set,
                wd,
                _train_config(config["logistic"], _seed_from(seed, rep, wi)),
            )
            lsc_test = with_bias(test_set.features) @ lmodel.weights
            lsc_train = with_bias(train_set.features) @ lmodel.weights
            for ti, tau in enumerate(taus):
                lt[ti, wi] = precision_at_rate(lsc_test, test_set.labels, tau)
                lr[ti, wi] = precision_at_rate(lsc_train, train_set.labels, tau)
                loss_spec = SurrogateLossSpec(
                    objective="p_at_ppr_fp",
                    constraint=RateConstraint("all", "at_least", tau),
                    estimator=est_spec,
                )
                cfg = _train_config(
                    dict(config["train"], weight_decay=wd),
                    _seed_from(seed, rep, ti, wi),
                    restarts=restarts,
                )
                fitted = multi_restart_train(train_set, loss_spec, cfg)
                qsc_test = fitted.model.scores(test_set)
                qsc_train = fitted.model.scores(train_set)
                qt[ti, wi] = precision_at_rate(qsc_test, test_set.labels, tau)
                qr[ti, wi] = precision_at_rate(qsc_train, train_set.labels, tau)
        return rep, qt, qr, lt, lr

    for rep, qt, qr, lt, lr in _map_reps(one_rep, reps, jobs):
        q_test[rep], q_train[rep] = qt, qr
        l_test[rep], l_train[rep] = lt, lr

    aggregates = _select_and_aggregate(
        METHOD_QUANTILE, taus, q_test, q_train, decays
    ) + _select_and_aggregate(METHOD_LOGISTIC, taus, l_test, l_train, decays)
    return ExperimentResult(
        kind="rate_table",
        name=str(config.get("name", "rate_table")),
        seed=seed,
        config=config,
        aggregates=tuple(aggregates),
        curve=tuple(_curve_from_aggregates(aggregates)),
        published=tuple(published_rows(config["published"]))
        if config.get("published")
        else (),
    )


def _run_recall_point(config: dict, seed: int, jobs: int) -> ExperimentResult:
    _require(
        config,
        [
            "synthetic",
            "recall_levels",
            "weight_decays",
            "split",
            "estimator",
            "train",
            "logistic",
            "reps",
        ],
        "recall_point",
    )
    levels = _check_levels(config["recall_levels"], 0.0, 1.0, "recall level")
    curve_grid = _check_levels(
        config.get("curve_grid", [round(0.1 * k, 1) for k in range(1, 11)]),
        0.0,
        1.0,
        "curve recall level",
    )
    decays = [float(v) for v in config["weight_decays"]]
    if not decays or any(v < 0 for v in decays):
        raise InvalidSpec("weight_decays must be nonnegative and nonempty")
    reps = int(config["reps"])
    if reps < 1:
        raise InvalidSpec("reps must be positive")
    synth = config["synthetic"]
    components = _mixture_components(synth["components"])
    n_samples = int(synth["n"])
    frac = float(config["split"]["train_fraction"])
    stratified = bool(config["split"].get("stratified", True))
    do_standardize = bool(config.get("standardize", False))
    est_spec = _estimator_spec(config["estimator"])
    restarts = int(config["train"].get("restarts", 1))

    n_c, n_w, n_g = len(levels), len(decays), len(curve_grid)
    q_test = np.empty((reps, n_c, n_w))
    q_train = np.empty((reps, n_c, n_w))
    l_test = np.empty((reps, n_c, n_w))
    l_train = np.empty((reps, n_c, n_w))
    # curves follow the models trained at the first listed recall level
    q_curve = np.empty((reps, n_w, n_g))
    l_curve = np.empty((reps, n_w, n_g))

    def one_rep(rep: int):
        dataset = generate_mixture(components, n_samples, _seed_from(seed, rep))
        spec = SplitSpec(frac, _seed_from(seed, rep, 0), stratified)
        train_set, test_set = split(dataset, spec)
        if do_standardize:
            train_set, test_set, _ = standardize(train_set, test_set)
        qt = np.empty((n_c, n_w))
        qr = np.empty((n_c, n_w))
        lt = np.empty((n_c, n_w))
        lr = np.empty((n_c, n_w))
        qc = np.empty((n_w, n_g))
        lc = np.empty((n_w, n_g))
        for wi, wd in enumerate(decays):
            lmodel = logistic_train(
                train_set,
                wd,
                _train_config(config["logistic"], _seed_from(seed, rep, 1, wi)),
            )
            lsc_test = with_bias(test_set.features) @ lmodel.weights
            lsc_train = with_bias(train_set.features) @ lmodel.weights
            for ci, c in enumerate(levels):
                lt[ci, wi] = precision_at_recall(lsc_test, test_set.labels, c)
                lr[ci, wi] = precision_at_recall(lsc_train, train_set.labels, c)
                loss_spec = SurrogateLossSpec(
                    objective="p_at_r",
                    constraint=RateConstraint("positives", "at_least", c),
                    estimator=est_spec,
                )
                cfg = _train_config(
                    dict(config["train"], weight_decay=wd),
                    _seed_from(seed, rep, 2, ci, wi),
                    restarts=restarts,
                )
                fitted = multi_restart_train(train_set, loss_spec, cfg)
                qsc_test = fitted.model.scores(test_set)
                qsc_train = fitted.model.scores(train_set)
                qt[ci, wi] = precision_at_recall(qsc_test, test_set.labels, c)
                qr[ci, wi] = precision_at_recall(qsc_train, train_set.labels, c)
                if ci == 0:
                    for gi, g in enumerate(curve_grid):
                        qc[wi, gi] = precision_at_recall(
                            qsc_test, test_set.labels, g
                        )
                        lc[wi, gi] = precision_at_recall(
                            lsc_test, test_set.labels, g
                        )
        return rep, qt, qr, lt, lr, qc, lc

    for rep, qt, qr, lt, lr, qc, lc in _map_reps(one_rep, reps, jobs):
        q_test[rep], q_train[rep] = qt, qr
        l_test[rep], l_train[rep] = lt, lr
        q_curve[rep], l_curve[rep] = qc, lc

    aggregates = _select_and_aggregate(
        METHOD_QUANTILE, levels, q_test, q_train, decays
    ) + _select_and_aggregate(METHOD_LOGISTIC, levels, l_test, l_train, decays)

    curve = []
    for method, metric, curves in (
        (METHOD_QUANTILE, q_test, q_curve),
        (METHOD_LOGISTIC, l_test, l_curve),
    ):
        wi = int(np.argmax(metric[:, 0, :].mean(axis=0)))
        for gi, g in enumerate(curve_grid):
            values = curves[:, wi, gi]
            curve.append(
                CurvePoint(method, float(g), float(values.mean()), _std(values))
            )
    return ExperimentResult(
        kind="recall_point",
        name=str(config.get("name", "recall_point")),
        seed=seed,
        config=config,
        aggregates=tuple(aggregates),
        curve=tuple(curve),
        published=tuple(published_rows(config["published"]))
        if config.get("published")
        else (),
    )


def _map_reps(fn, reps: int, jobs: int):
    if jobs <= 1:
        for rep in range(reps):
            yield fn(rep)
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(fn, range(reps))


def run_experiment(
    config: dict,
    data_path: Optional[str] = None,
    seed: Optional[int] = None,
    jobs: int = 1,
) -> Tuple[ExperimentResult, float]:
    """Run one experiment config; returns (result, elapsed seconds).

    The elapsed time is for console reporting only; nothing time-based
    enters the result, so identical configs and seeds reproduce output
    files byte-for-byte.
    """
    kind = config.get("kind")
    used_seed = int(seed if seed is not None else config.get("seed", 0))
    if used_seed < 0:
        raise InvalidSpec("seed must be nonnegative")
    if jobs < 1:
        raise InvalidSpec("jobs must be positive")
    started = time.perf_counter()
    if kind == "rate_table":
        dataset = load_experiment_dataset(config, data_path)
        result = _run_rate_table(config, dataset, used_seed, jobs)
    elif kind == "recall_point":
        result = _run_recall_point(config, used_seed, jobs)
    else:
        raise InvalidSpec(f"unknown experiment kind {kind!r}")
    return result, time.perf_counter() - started


def _format_number(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results(result: ExperimentResult, out_dir) -> List[Path]:
    """Serialize an ExperimentResult to results.json, summary.csv, and
    pr_points.csv inside out_dir; returns the written paths.

    JSON uses sorted keys and CSV floats use shortest-round-trip repr,
    so reruns of a deterministic experiment match byte-for-byte.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    results_path = out / "results.json"
    results_path.write_text(
        json.dumps(result.to_dict(), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    paths.append(results_path)

    summary_path = out / "summary.csv"
    lines = ["method,level,mean,std,selection,weight_decay,source"]
    for a in result.aggregates:
        lines.append(
            ",".join(
                [
                    a.method,
                    _format_number(a.level),
                    _format_number(a.mean),
                    _format_number(a.std),
                    a.selection,
                    _format_number(a.weight_decay),
                    "computed",
                ]
            )
        )
    for row in result.published:
        lines.append(
            ",".join(
                [
                    str(row["method"]),
                    _format_number(float(row["level"])),
                    _format_number(float(row["mean"])),
                    _format_number(float(row["std"])),
                    "",
                    "",
                    "published",
                ]
            )
        )
    summary_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    paths.append(summary_path)

    curve_path = out / "pr_points.csv"
    lines = ["method,level,mean,std"]
    for p in result.curve:
        lines.append(
            ",".join(
                [
                    p.method,
                    _format_number(p.level),
                    _format_number(p.mean),
                    _format_number(p.std),
                ]
            )
        )
    curve_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    paths.append(curve_path)
    return paths
