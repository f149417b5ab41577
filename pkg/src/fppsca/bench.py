"""Monte-Carlo benchmark harness.

Runs seeded experiment batches over the generator ensembles, collects
one record per run, and folds the records into table-style aggregates.
Scenarios:

* "sdr_only": relaxation bound + randomized rounding.
* "fpp_only": pursuit solver from a random start.
* "both": both pipelines on the same instance; pursuit loss is measured
  against the relaxation bound.
* "multicast": relaxation first, rounding expected to fail, pursuit
  solver initialized at the best-effort (minimum l1 violation) rounded
  point; runs whose relaxation is not solved to optimality are excluded,
  mirroring a study that filters to relaxation-feasible instances.

Reproducibility: run i generates its instance with seed base_seed + i;
the pursuit start uses an rng seeded with [seed, 1] and the rounding
draws use [seed, 2], so any single run can be re-executed in isolation.

Failures inside a run are recorded, not fatal; a batch with more than
5% failed runs aborts with the collected diagnostics.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .demo2d import (
    DEMO_CONSTRAINTS,
    demo_instance,
    ellipse_points,
    halfplane_coefficients,
    run_demo,
)
from .fpp import FEASIBLE_STATUSES, FppParams, FppResult, run_fpp_sca
from .generators import MulticastConfig, generate, parse_generator_spec
from .qcqp import QcqpInstance
from .sdr import loss_db, randomization_search, sdr_lower_bound

__all__ = [
    "BenchConfig",
    "RunRecord",
    "BenchReport",
    "run_bench",
    "run_multicast_study",
    "aggregate_records",
    "report_to_json",
    "write_report_files",
    "export_fig1_traces",
]

SCENARIOS = ("sdr_only", "fpp_only", "both", "multicast")
FAILURE_ABORT_FRACTION = 0.05
MIN_RUNS_FOR_SDR_LOSS = 5


@dataclass(frozen=True)
class BenchConfig:
    """One experiment batch: generator, run count, solver settings."""

    generator: str
    runs: int
    scenario: str = "both"
    sdr_draws: int = 1000
    base_seed: int = 0
    fpp_params: FppParams = field(default_factory=FppParams)
    jobs: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.sdr_draws < 0:
            raise ValueError(f"sdr_draws must be nonnegative, got {self.sdr_draws}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")
        parsed = parse_generator_spec(self.generator)
        if self.scenario == "multicast" and not isinstance(parsed, MulticastConfig):
            raise ValueError("multicast scenario requires a multicast generator spec")
        if self.scenario == "multicast" and self.sdr_draws < 1:
            raise ValueError("multicast scenario needs at least one randomization draw")


@dataclass(frozen=True)
class RunRecord:
    """Everything measured on a single Monte-Carlo run; JSON-ready values."""

    index: int
    seed: int
    error: Optional[str] = None
    excluded: bool = False
    sdr_status: Optional[str] = None
    sdr_category: Optional[str] = None  # rank_one | randomized | none
    rank1: Optional[bool] = None
    lower_bound: Optional[float] = None
    sdr_objective: Optional[float] = None
    sdr_loss_db: Optional[float] = None
    randomizations_tried: Optional[int] = None
    fpp_status: Optional[str] = None
    fpp_feasible: Optional[bool] = None
    fpp_objective: Optional[float] = None
    fpp_iters_feasibility: Optional[int] = None
    fpp_iters_convergence: Optional[int] = None
    fpp_loss_db: Optional[float] = None
    kkt_passed: Optional[bool] = None


@dataclass(frozen=True)
class BenchReport:
    """Per-run records plus table-style aggregates.

    Aggregates are computed only over runs where the metric is defined:
    losses over feasible runs, iteration counts over runs that reached
    feasibility or convergence.  The three relaxation outcome
    percentages partition the completed runs.
    """

    scenario: str
    generator: str
    runs: int
    records: tuple
    completed: int
    failed: int
    excluded: int
    rank1_pct: Optional[float]
    feasible_after_randomization_pct: Optional[float]
    no_feasible_after_randomization_pct: Optional[float]
    sdr_avg_loss_db: Optional[float]
    fpp_feasible_pct: Optional[float]
    fpp_avg_iters_feasibility: Optional[float]
    fpp_avg_iters_convergence: Optional[float]
    fpp_avg_loss_db: Optional[float]


def _finite(value) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return value if np.isfinite(value) else None


def _feasible_objective(result: FppResult, params: FppParams) -> Optional[float]:
    """Objective of the returned point if feasible, else of the best feasible iterate."""
    if result.status in FEASIBLE_STATUSES:
        return float(result.objective)
    best = None
    for rec in result.trace.records:
        ok = (
            float(np.max(rec.violations)) <= params.feas_tol
            and float(np.max(rec.slacks)) <= params.slack_zero_tol
        )
        if ok and (best is None or rec.true_objective < best):
            best = float(rec.true_objective)
    return best


def _fpp_fields(result: FppResult, lower_bound: Optional[float], params: FppParams) -> dict:
    # a run counts as feasible when it produced any feasible point within
    # the iteration budget, even if the objective never met the
    # convergence test before the cap
    objective = _feasible_objective(result, params)
    feasible = objective is not None
    loss = None
    if feasible and lower_bound is not None:
        loss = loss_db(objective, lower_bound)
    return {
        "fpp_status": result.status,
        "fpp_feasible": feasible,
        "fpp_objective": objective if feasible else _finite(result.objective),
        "fpp_iters_feasibility": result.iterations_to_feasibility,
        "fpp_iters_convergence": result.iterations_to_convergence,
        "fpp_loss_db": loss,
        "kkt_passed": bool(result.kkt_passed),
    }


def default_start(seed: int, dim: int) -> np.ndarray:
    """Solver starting point for a run seed: i.i.d. complex Gaussian, variance 2.

    Stream [seed, 1] is reserved for starts so instance generation (plain
    seed) and randomization ([seed, 2]) never share draws.
    """
    rng = np.random.default_rng([seed, 1])
    return rng.standard_normal(dim) + 1j * rng.standard_normal(dim)


def _run_one(cfg: BenchConfig, index: int) -> RunRecord:
    seed = cfg.base_seed + index
    gen_cfg = dataclasses.replace(parse_generator_spec(cfg.generator), seed=seed)
    try:
        inst = generate(gen_cfg)
        if cfg.scenario == "multicast":
            return _run_multicast_one(cfg, index, seed, inst)
        fields: dict = {}
        lower_bound = None
        if cfg.scenario in ("sdr_only", "both"):
            fields.update(_sdr_fields(inst, cfg.sdr_draws, seed))
            lower_bound = fields["lower_bound"]
        if cfg.scenario in ("fpp_only", "both"):
            result = run_fpp_sca(inst, default_start(seed, inst.dim), params=cfg.fpp_params)
            fields.update(_fpp_fields(result, lower_bound, cfg.fpp_params))
        return RunRecord(index=index, seed=seed, **fields)
    except Exception as exc:  # per-run isolation: recorded, not fatal
        return RunRecord(index=index, seed=seed, error=f"{type(exc).__name__}: {exc}")


def _sdr_fields(inst: QcqpInstance, draws: int, seed: int) -> dict:
    base = sdr_lower_bound(inst)
    if base.status != "optimal":
        return {
            "sdr_status": base.status,
            "sdr_category": None,
            "rank1": None,
            "lower_bound": None,
            "sdr_objective": None,
            "sdr_loss_db": None,
            "randomizations_tried": 0,
        }
    if base.best_point is not None:
        category = "rank_one"
        objective = base.best_objective
        tried = 0
    else:
        outcome = randomization_search(inst, base.matrix, draws, [seed, 2])
        tried = outcome.draws
        if outcome.best_point is not None:
            category = "randomized"
            objective = outcome.best_objective
        else:
            category = "none"
            objective = None
    loss = None
    if objective is not None and category == "randomized":
        loss = loss_db(objective, base.lower_bound)
    return {
        "sdr_status": "optimal",
        "sdr_category": category,
        "rank1": base.rank1,
        "lower_bound": _finite(base.lower_bound),
        "sdr_objective": _finite(objective),
        "sdr_loss_db": loss,
        "randomizations_tried": tried,
    }


def _run_multicast_one(cfg: BenchConfig, index: int, seed: int, inst: QcqpInstance) -> RunRecord:
    base = sdr_lower_bound(inst)
    if base.status != "optimal":
        # study filters to relaxation-feasible instances
        return RunRecord(index=index, seed=seed, excluded=True, sdr_status=base.status)
    if base.best_point is not None:
        category = "rank_one"
        objective = base.best_objective
        start = base.best_point
        tried = 0
    else:
        outcome = randomization_search(inst, base.matrix, cfg.sdr_draws, [seed, 2])
        tried = outcome.draws
        if outcome.best_point is not None:
            category = "randomized"
            objective = outcome.best_objective
            start = outcome.best_point
        else:
            category = "none"
            objective = None
            start = outcome.best_effort_point
    result = run_fpp_sca(inst, start, params=cfg.fpp_params)
    fields = _fpp_fields(result, base.lower_bound, cfg.fpp_params)
    loss = None
    if category == "randomized":
        loss = loss_db(objective, base.lower_bound)
    return RunRecord(
        index=index,
        seed=seed,
        sdr_status="optimal",
        sdr_category=category,
        rank1=base.rank1,
        lower_bound=_finite(base.lower_bound),
        sdr_objective=_finite(objective),
        sdr_loss_db=loss,
        randomizations_tried=tried,
        **fields,
    )


def _pct(flags) -> Optional[float]:
    flags = list(flags)
    if not flags:
        return None
    return 100.0 * sum(flags) / len(flags)


def _mean(values) -> Optional[float]:
    values = [v for v in values if v is not None]
    if not values:
        return None
    return float(np.mean(values))


def aggregate_records(cfg: BenchConfig, records) -> BenchReport:
    """Pure fold from per-run records to the report aggregates."""
    records = tuple(records)
    failed = [r for r in records if r.error is not None]
    excluded = [r for r in records if r.excluded and r.error is None]
    completed = [r for r in records if r.error is None and not r.excluded]

    has_sdr = cfg.scenario in ("sdr_only", "both", "multicast")
    has_fpp = cfg.scenario in ("fpp_only", "both", "multicast")

    rank1_pct = None
    feas_rand_pct = None
    none_pct = None
    sdr_loss = None
    if has_sdr and completed:
        rank1_pct = _pct(r.sdr_category == "rank_one" for r in completed)
        feas_rand_pct = _pct(r.sdr_category == "randomized" for r in completed)
        none_pct = _pct(r.sdr_category == "none" for r in completed)
        rand_losses = [
            r.sdr_loss_db for r in completed
            if r.sdr_category == "randomized" and r.sdr_loss_db is not None
        ]
        if len(rand_losses) >= MIN_RUNS_FOR_SDR_LOSS:
            sdr_loss = float(np.mean(rand_losses))

    fpp_pct = None
    fpp_iters_feas = None
    fpp_iters_conv = None
    fpp_loss = None
    if has_fpp and completed:
        fpp_pct = _pct(bool(r.fpp_feasible) for r in completed)
        fpp_iters_feas = _mean(r.fpp_iters_feasibility for r in completed)
        fpp_iters_conv = _mean(r.fpp_iters_convergence for r in completed)
        fpp_loss = _mean(r.fpp_loss_db for r in completed if r.fpp_feasible)

    return BenchReport(
        scenario=cfg.scenario,
        generator=cfg.generator,
        runs=cfg.runs,
        records=records,
        completed=len(completed),
        failed=len(failed),
        excluded=len(excluded),
        rank1_pct=rank1_pct,
        feasible_after_randomization_pct=feas_rand_pct,
        no_feasible_after_randomization_pct=none_pct,
        sdr_avg_loss_db=sdr_loss,
        fpp_feasible_pct=fpp_pct,
        fpp_avg_iters_feasibility=fpp_iters_feas,
        fpp_avg_iters_convergence=fpp_iters_conv,
        fpp_avg_loss_db=fpp_loss,
    )


def _collect_records(cfg: BenchConfig) -> tuple:
    indices = range(cfg.runs)
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            records = list(pool.map(_run_one, [cfg] * cfg.runs, indices))
    else:
        records = [_run_one(cfg, i) for i in indices]
    failed = [r for r in records if r.error is not None]
    if len(failed) > FAILURE_ABORT_FRACTION * cfg.runs:
        lines = [f"run {r.index} (seed {r.seed}): {r.error}" for r in failed[:10]]
        raise RuntimeError(
            f"{len(failed)} of {cfg.runs} runs failed (> {FAILURE_ABORT_FRACTION:.0%}):\n"
            + "\n".join(lines)
        )
    return tuple(records)


def run_bench(cfg: BenchConfig) -> BenchReport:
    """Execute a batch for the sdr_only / fpp_only / both scenarios."""
    if cfg.scenario == "multicast":
        return run_multicast_study(cfg)
    return aggregate_records(cfg, _collect_records(cfg))


def run_multicast_study(cfg: BenchConfig) -> BenchReport:
    """Relaxation-filtered study: pursuit solver seeded by rounded points."""
    if cfg.scenario != "multicast":
        raise ValueError(f"run_multicast_study needs scenario 'multicast', got {cfg.scenario!r}")
    return aggregate_records(cfg, _collect_records(cfg))


def report_to_json(report: BenchReport) -> dict:
    doc = dataclasses.asdict(report)
    doc["records"] = [dataclasses.asdict(r) for r in report.records]
    return doc


_CSV_FIELDS = (
    "rank1_pct",
    "feasible_after_randomization_pct",
    "no_feasible_after_randomization_pct",
    "sdr_avg_loss_db",
    "fpp_feasible_pct",
    "fpp_avg_iters_feasibility",
    "fpp_avg_iters_convergence",
    "fpp_avg_loss_db",
)


def write_report_files(report: BenchReport, out_prefix) -> dict:
    """Write {prefix}.json, {prefix}.csv, {prefix}_runs.jsonl; returns paths."""
    prefix = str(out_prefix)
    json_path = prefix + ".json"
    csv_path = prefix + ".csv"
    jsonl_path = prefix + "_runs.jsonl"
    with open(json_path, "w") as fh:
        json.dump(report_to_json(report), fh, indent=1)
        fh.write("\n")
    with open(csv_path, "w") as fh:
        fh.write("metric,value\n")
        fh.write(f"scenario,{report.scenario}\n")
        fh.write(f"generator,{report.generator}\n")
        fh.write(f"runs,{report.runs}\n")
        fh.write(f"completed,{report.completed}\n")
        fh.write(f"failed,{report.failed}\n")
        fh.write(f"excluded,{report.excluded}\n")
        for name in _CSV_FIELDS:
            value = getattr(report, name)
            fh.write(f"{name},{'' if value is None else repr(value)}\n")
    with open(jsonl_path, "w") as fh:
        for record in report.records:
            fh.write(json.dumps(dataclasses.asdict(record)))
            fh.write("\n")
    return {"json": json_path, "csv": csv_path, "jsonl": jsonl_path}


def _trace_iteration_doc(inst: QcqpInstance, record, iteration: int) -> dict:
    center = record.center.real
    point = record.x.real
    halfplanes = []
    for m, (mat, bound) in enumerate(DEMO_CONSTRAINTS[:2]):
        normal, offset = halfplane_coefficients(mat, bound, center)
        halfplanes.append(
            {"constraint": m, "normal": [float(v) for v in normal], "offset": offset}
        )
    interior_mat, interior_bound = DEMO_CONSTRAINTS[2]
    level = float(interior_bound + record.slacks[2])
    return {
        "iteration": iteration,
        "z": [float(v) for v in center],
        "x": [float(v) for v in point],
        "slacks": [float(v) for v in record.slacks],
        "true_objective": float(record.true_objective),
        "surrogate_objective": float(record.surrogate_objective),
        "halfplanes": halfplanes,
        "interior_level_set": {
            "level": level,
            "points": [[float(a), float(b)] for a, b in ellipse_points(interior_mat, level)],
        },
    }


def export_fig1_traces(z0_a, z0_b, out_dir, params: Optional[FppParams] = None) -> dict:
    """Export per-iteration plot data for the 2-d demo from two starts.

    Writes case_a/iter_NNN.json and case_b/iter_NNN.json plus a summary
    file per case; returns {"case_a": [...paths], "case_b": [...paths]}.
    """
    import os

    inst = demo_instance()
    written = {}
    for name, z0 in (("case_a", z0_a), ("case_b", z0_b)):
        result = run_demo(z0, params=params)
        case_dir = os.path.join(str(out_dir), name)
        os.makedirs(case_dir, exist_ok=True)
        paths = []
        for k, record in enumerate(result.trace.records):
            doc = _trace_iteration_doc(inst, record, k)
            path = os.path.join(case_dir, f"iter_{k:03d}.json")
            with open(path, "w") as fh:
                json.dump(doc, fh, indent=1)
                fh.write("\n")
            paths.append(path)
        summary = {
            "status": result.status,
            "iterations_to_feasibility": result.iterations_to_feasibility,
            "iterations_to_convergence": result.iterations_to_convergence,
            "objective": _finite(result.objective),
            "final_slacks": [float(v) for v in result.s_final],
        }
        summary_path = os.path.join(case_dir, "summary.json")
        with open(summary_path, "w") as fh:
            json.dump(summary, fh, indent=1)
            fh.write("\n")
        paths.append(summary_path)
        written[name] = paths
    return written
