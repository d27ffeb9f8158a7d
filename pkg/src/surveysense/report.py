"""Pipeline orchestration and report assembly.

One loaded pipeline backs every subcommand: survey rows, expanded
design, solved baseline weights. Reports serialize deterministically
(sorted keys, no timestamps, shortest-round-trip floats) and validate
against the JSON schema shipped with the package.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__
from .benchmark import BenchmarkRecord, benchmark_table
from .bias import ObservedScale
from .bootstrap import BootstrapResult, bootstrap_interval
from .calibrate import (
    CalibrationProblem,
    WeightVector,
    solve_raking,
    weighted_mean,
    weighted_se,
)
from .config import RunConfig
from .data import (
    Design,
    SurveyFrame,
    apply_filters,
    build_features,
    load_margins,
    load_population_target,
    load_table,
    terms_from_config,
)
from .detect import DetectionReport, detect, graph_to_dot
from .errors import ConfigError, SurveySenseError
from .partial import PartialSweep, binary_grid, partial_sweep, standardized_grid
from .summary import ContourGrid, RobustnessInput, contour_grid, killer_region_area, robustness_value
from .svg import render_contour, render_sweep

__all__ = [
    "Pipeline",
    "build_pipeline",
    "assemble_report",
    "canonical_json",
    "validate_report",
    "write_weights_csv",
    "write_balance_csv",
    "write_contour_csv",
    "write_benchmarks_csv",
    "write_sweep_csv",
]

SE_KIND = "approximate design-based"


@dataclass(frozen=True)
class Pipeline:
    """Everything downstream commands share after loading and weighting."""

    config: RunConfig
    frame: SurveyFrame
    design: Design
    problem: CalibrationProblem
    y: np.ndarray
    baseline: WeightVector

    @property
    def scale(self) -> ObservedScale:
        return ObservedScale.from_sample(self.y, self.baseline.values)


def build_pipeline(cfg: RunConfig) -> Pipeline:
    frame = load_table(cfg.survey, cfg.schema)
    if cfg.filters:
        frame = apply_filters(frame, list(cfg.filters))
    if frame.n == 0:
        raise ConfigError("no survey rows left after filtering")
    if frame.kind(cfg.outcome) == "categorical":
        raise ConfigError(
            f"outcome {cfg.outcome!r} is categorical; a numeric outcome is required"
        )

    needed = set(cfg.weighting_variables)
    for combo in cfg.interactions:
        needed.update(combo)
    if cfg.margins is not None:
        target = load_margins(cfg.margins)
    else:
        pop_schema = {v: cfg.schema[v] for v in sorted(needed)}
        target = load_population_target(
            cfg.population, pop_schema, weight_column=cfg.population_weight
        )

    terms = terms_from_config(
        list(cfg.weighting_variables), [list(c) for c in cfg.interactions]
    )
    design = build_features(frame, target, terms)
    base = frame.column(cfg.base_weight) if cfg.base_weight else None
    problem = design.to_problem(base)
    baseline = solve_raking(problem)
    if not baseline.diagnostics.converged:
        raise SurveySenseError(
            "baseline calibration did not converge: "
            f"violation {baseline.diagnostics.max_violation:.3g}"
        )
    y = np.asarray(frame.column(cfg.outcome), dtype=np.float64)
    return Pipeline(
        config=cfg, frame=frame, design=design, problem=problem, y=y, baseline=baseline
    )


def _num(value: float) -> float | None:
    v = float(value)
    return v if np.isfinite(v) else None


def estimates_block(pipe: Pipeline) -> dict:
    ones = np.ones_like(pipe.y)
    return {
        "unweighted": {
            "value": float(pipe.y.mean()),
            "se": float(weighted_se(pipe.y, ones)),
        },
        "weighted": {
            "value": float(weighted_mean(pipe.y, pipe.baseline.values)),
            "se": float(weighted_se(pipe.y, pipe.baseline.values)),
        },
        "se_kind": SE_KIND,
    }


def calibration_block(pipe: Pipeline) -> dict:
    d = pipe.baseline.diagnostics
    return {
        "converged": bool(d.converged),
        "iterations": int(d.iterations),
        "max_violation": float(d.max_violation),
        "dual_norm": float(d.dual_norm),
        "newton_steps": int(d.newton_steps),
        "fallback_sweeps": int(d.fallback_sweeps),
        "columns": list(pipe.design.column_names),
        "dropped_columns": list(d.dropped_columns),
    }


def balance_block(pipe: Pipeline) -> list[dict]:
    w = pipe.baseline.values
    n = pipe.problem.n
    rows = []
    for j, name in enumerate(pipe.design.column_names):
        col = pipe.problem.matrix[:, j]
        rows.append(
            {
                "column": name,
                "target": float(pipe.problem.targets[j]),
                "unweighted": float(col.mean()),
                "weighted": float(col @ (w / n)),
            }
        )
    return rows


def robustness_block(pipe: Pipeline, b_star: float) -> dict:
    scale = pipe.scale
    gap = scale.mu_hat - b_star
    denom = scale.var_y * scale.var_w
    a = (gap * gap / denom) if denom > 0 else 0.0
    rv = robustness_value(
        RobustnessInput(
            mu_hat=scale.mu_hat, b_star=b_star, var_y=scale.var_y, var_w=scale.var_w
        )
    )
    return {"b_star": float(b_star), "gap": float(gap), "a": float(a), "rv": float(rv)}


def benchmark_records(pipe: Pipeline, b_star: float | None) -> list[BenchmarkRecord]:
    covariates = pipe.config.benchmark_covariates
    if covariates is None:
        covariates = pipe.config.weighting_variables
    return benchmark_table(
        pipe.problem, pipe.baseline, pipe.y, tuple(covariates), b_star=b_star
    )


def benchmarks_block(records: list[BenchmarkRecord]) -> list[dict]:
    return [
        {
            "label": r.label,
            "r2_raw": float(r.r2_raw),
            "r2": float(r.r2),
            "rho": float(r.rho),
            "est_bias": float(r.est_bias),
            "mrcs": None if r.mrcs is None else _num(r.mrcs),
            "rho_defined": bool(r.rho_defined),
            "converged": bool(r.converged),
        }
        for r in records
    ]


def build_contour(pipe: Pipeline, b_star: float, records: list[BenchmarkRecord]) -> ContourGrid:
    cfg = pipe.config
    grid = contour_grid(
        pipe.scale,
        b_star,
        rho_step=cfg.rho_step,
        r2_step=cfg.r2_step,
        r2_max=cfg.r2_max,
    )
    points = [(r.label, r.rho, r.r2) for r in records if r.converged]
    return grid.with_benchmarks(points)


def contour_block(grid: ContourGrid) -> dict:
    return {
        "rho_step": float(np.round(grid.rho_axis[1] - grid.rho_axis[0], 12)),
        "r2_step": float(np.round(grid.r2_axis[1] - grid.r2_axis[0], 12)),
        "r2_max": float(grid.r2_axis[-1]),
        "n_rho": int(grid.rho_axis.size),
        "n_r2": int(grid.r2_axis.size),
        "killer_area": float(killer_region_area(grid)),
        "csv": "contour.csv",
        "svg": "contour.svg",
    }


def build_sweep(pipe: Pipeline) -> PartialSweep:
    cfg = pipe.config
    name = cfg.sweep_variable
    if name is None:
        raise ConfigError("sweep.variable is not set in the config")
    kind = pipe.frame.kind(name)
    if kind == "categorical":
        raise ConfigError("sweep variable must be binary or continuous")
    v = np.asarray(pipe.frame.column(name), dtype=np.float64)
    if cfg.sweep_grid is not None:
        grid = np.asarray(cfg.sweep_grid, dtype=np.float64)
    elif kind == "binary":
        grid = binary_grid()
    else:
        grid = standardized_grid(v)
    return partial_sweep(
        pipe.problem, v, pipe.y, label=name, grid=grid, baseline=pipe.baseline
    )


def sweep_block(sweep: PartialSweep) -> dict:
    return {
        "label": sweep.label,
        "baseline_t": float(sweep.baseline_t),
        "baseline_estimate": float(sweep.baseline_estimate),
        "points": [
            {
                "t_v": float(p.t_v),
                "estimate": _num(p.estimate),
                "se": _num(p.se),
                "feasible": bool(p.feasible),
                "converged": bool(p.converged),
                "is_baseline": bool(p.is_baseline),
            }
            for p in sweep.points
        ],
        "csv": "sweep.csv",
        "svg": "sweep.svg",
    }


def build_detection(pipe: Pipeline) -> DetectionReport:
    cfg = pipe.config
    if not cfg.detection_sampling_set:
        raise ConfigError("detection.sampling_set is not set in the config")
    columns = {name: pipe.frame.column(name) for name in pipe.frame.columns}
    kinds = {name: pipe.frame.kind(name) for name in pipe.frame.columns}
    return detect(
        columns,
        kinds,
        cfg.outcome,
        cfg.detection_sampling_set,
        cfg.detection_partial,
        lam=cfg.detection_lambda,
        seed=cfg.seed,
    )


def build_bootstrap(pipe: Pipeline) -> BootstrapResult:
    cfg = pipe.config
    from .bias import SensitivityParams

    return bootstrap_interval(
        pipe.problem,
        pipe.y,
        SensitivityParams(cfg.bootstrap_rho, cfg.bootstrap_r2),
        b=cfg.bootstrap_draws,
        alpha=cfg.bootstrap_alpha,
        seed=cfg.seed,
        reestimate=cfg.bootstrap_reestimate,
        baseline=pipe.baseline,
        threads=cfg.threads,
    )


def bootstrap_block(result: BootstrapResult) -> dict:
    return {
        "lower": float(result.lower),
        "upper": float(result.upper),
        "draws_kept": int(result.draws.size),
        "dropped": int(result.dropped),
        "n_draws": int(result.n_draws),
        "alpha": float(result.alpha),
        "rho": float(result.params.rho),
        "r2": float(result.params.r2),
        "reestimate": bool(result.reestimate),
    }


def assemble_report(
    pipe: Pipeline,
    config_sha256: str,
    *,
    robustness: dict | None = None,
    benchmarks: list[dict] | None = None,
    contour: dict | None = None,
    sweep: dict | None = None,
    detection: dict | None = None,
    bootstrap: dict | None = None,
) -> dict:
    report = {
        "schema_version": "1",
        "provenance": {
            "config_sha256": config_sha256,
            "package_version": __version__,
            "numpy_version": np.__version__,
            "scipy_version": scipy.__version__,
            "seed": int(pipe.config.seed),
        },
        "n_rows": int(pipe.frame.n),
        "estimates": estimates_block(pipe),
        "calibration": calibration_block(pipe),
        "balance": balance_block(pipe),
        "scale": {
            "var_y": float(pipe.scale.var_y),
            "var_w": float(pipe.scale.var_w),
            "mu_hat": float(pipe.scale.mu_hat),
        },
        "robustness": robustness,
        "benchmarks": benchmarks if benchmarks is not None else [],
        "contour": contour,
        "sweep": sweep,
        "detection": detection,
        "bootstrap": bootstrap,
    }
    validate_report(report)
    return report


def _schema() -> dict:
    text = (
        resources.files("surveysense") / "schemas" / "report.schema.json"
    ).read_text()
    return json.loads(text)


def validate_report(report: dict) -> None:
    """Schema validation; raises ``SchemaError`` with the failing path."""
    from .errors import SchemaError

    try:
        jsonschema.validate(report, _schema())
    except jsonschema.ValidationError as err:
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise SchemaError(f"report failed schema validation at {path}: {err.message}")


def canonical_json(obj: dict) -> str:
    """Deterministic serialization: sorted keys, fixed indent, no NaN."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write_rows(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_weights_csv(path: Path, pipe: Pipeline) -> None:
    rows = [
        [str(rid), _cell(float(w))]
        for rid, w in zip(pipe.frame.row_ids, pipe.baseline.values)
    ]
    _write_rows(path, ["row_id", "weight"], rows)


def write_balance_csv(path: Path, pipe: Pipeline) -> None:
    rows = [
        [b["column"], _cell(b["target"]), _cell(b["unweighted"]), _cell(b["weighted"])]
        for b in balance_block(pipe)
    ]
    _write_rows(path, ["column", "target", "unweighted", "weighted"], rows)


def write_contour_csv(path: Path, grid: ContourGrid) -> None:
    rows = []
    for i, rho in enumerate(grid.rho_axis):
        for j, r2 in enumerate(grid.r2_axis):
            rows.append(
                [
                    _cell(float(rho)),
                    _cell(float(r2)),
                    _cell(float(grid.bias[i, j])),
                    _cell(float(grid.adjusted[i, j])),
                    "1" if grid.killer_mask[i, j] else "0",
                ]
            )
    _write_rows(path, ["rho", "r2", "bias", "adjusted", "killer"], rows)


def write_benchmarks_csv(path: Path, blocks: list[dict]) -> None:
    rows = [
        [
            b["label"],
            _cell(b["r2_raw"]),
            _cell(b["r2"]),
            _cell(b["rho"]),
            _cell(b["est_bias"]),
            "" if b["mrcs"] is None else _cell(b["mrcs"]),
        ]
        for b in blocks
    ]
    _write_rows(path, ["variable", "r2_raw", "r2", "rho", "est_bias", "mrcs"], rows)


def write_sweep_csv(path: Path, sweep: PartialSweep) -> None:
    rows = [
        [
            _cell(float(p.t_v)),
            _cell(float(p.estimate)),
            _cell(float(p.se)),
            "1" if p.feasible else "0",
            "1" if p.converged else "0",
            "1" if p.is_baseline else "0",
        ]
        for p in sweep.points
    ]
    _write_rows(
        path, ["t_v", "estimate", "se", "feasible", "converged", "is_baseline"], rows
    )


def write_detection_artifacts(out: Path, rep: DetectionReport) -> None:
    (out / "detection.json").write_text(canonical_json(rep.to_dict()))
    (out / "detection.dot").write_text(graph_to_dot(rep))
