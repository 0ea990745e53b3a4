"""Experiment plans, comparison reports, and the end-to-end runners.

Each experiment kind sweeps a parameter, runs whatever combination of
sampling, theory, spectral analysis, and MCMC it needs, persists every
artifact (raw CSVs, theory tables, plots, report, manifest) into one output
directory, and returns a ComparisonReport whose verdict is re-derivable
from the persisted numbers alone.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import EnsembleConfig, derive_sample_seed
from .errors import (
    GridMismatch,
    InvalidField,
    NetLatticeError,
    Supercritical,
    UnknownKind,
)
from . import lattice, plotting, sampler, spectral, theory

KINDS = (
    "fig3_linear_saddle",
    "fig4_linear_spectrum",
    "fig5_relu_saddle",
    "fig6_relu_cross_spectrum",
    "fig1_tanh_meanfield",
    "mcmc_oracle",
    "xi_fit",
)

# Sweep-point master seeds derive from the base master seed with this index
# offset, so they never collide with per-sample indices.
_SWEEP_SEED_OFFSET = 4096

_KIND_DEFS = {
    "fig3_linear_saddle": dict(
        activation="linear",
        limit=1.0,
        sweep=(0.05, 0.1, 0.3, 0.5, 0.7, 0.8, 0.9),
        tolerances={"rel_tol": 0.02},
    ),
    "fig4_linear_spectrum": dict(
        activation="linear",
        limit=1.0,
        sweep=(0.02, 0.18, 0.34, 0.5, 0.66, 0.82, 0.98),
        tolerances={
            "mode_z": 4.0,
            "min_pass_fraction": 0.95,
            "min_shape_correlation": 0.99,
        },
    ),
    "fig5_relu_saddle": dict(
        activation="relu",
        limit=2.0,
        sweep=(0.2, 0.6, 1.0, 1.4, 1.8),
        tolerances={"radius_rel_tol": 0.03, "count_rel_tol": 0.01},
    ),
    "fig6_relu_cross_spectrum": dict(
        activation="relu",
        limit=2.0,
        sweep=(0.02, 0.98, 1.94),
        tolerances={"diag_median_rel_tol": 0.20, "offdiag_sign_z": 2.0},
    ),
    "fig1_tanh_meanfield": dict(
        activation="tanh",
        limit=None,
        sweep=(0.1, 1.5),
        tolerances={"z_window": 3.0},
        base_overrides=dict(
            width=500, depth=100, bias_variance=0.001, window_start=64, window_len=32
        ),
    ),
    "mcmc_oracle": dict(
        activation="linear",
        limit=1.0,
        sweep=(0.18, 0.82),
        tolerances={"median_rel_tol": 0.05, "calibration_rel_tol": 0.05},
    ),
    "xi_fit": dict(
        activation="linear",
        limit=1.0,
        sweep=(0.5, 0.8, 0.9),
        tolerances={"rel_tol": 0.15},
    ),
}


@dataclass(frozen=True)
class ExperimentPlan:
    """A fully specified experiment: kind, base config, sweep, tolerances."""

    kind: str
    base: EnsembleConfig
    sweep: tuple
    out_dir: str
    tolerances: dict = field(default_factory=dict)
    workers: int = 1
    mcmc_length: int = 64
    mcmc_sweeps: int = 400_000
    mcmc_burn_in: int = 10_000
    mcmc_thin: int = 10
    mcmc_calibration: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnknownKind(f"unknown experiment kind {self.kind!r}")
        if not self.sweep:
            raise InvalidField("sweep", "must contain at least one value")
        limit = _KIND_DEFS[self.kind]["limit"]
        if limit is not None:
            for value in self.sweep:
                if value >= limit:
                    raise Supercritical(value, limit)
        if self.workers < 1:
            raise InvalidField("workers", f"must be >= 1, got {self.workers}")


def make_plan(
    kind: str,
    out_dir,
    base: EnsembleConfig | None = None,
    sweep=None,
    tolerances: dict | None = None,
    workers: int = 1,
    **mcmc_overrides,
) -> ExperimentPlan:
    """Build a plan with the kind's documented defaults filled in."""
    if kind not in _KIND_DEFS:
        raise UnknownKind(f"unknown experiment kind {kind!r}")
    defs = _KIND_DEFS[kind]
    if base is None:
        base = EnsembleConfig(
            activation=defs["activation"], **defs.get("base_overrides", {})
        )
    elif base.activation != defs["activation"]:
        base = base.replace(activation=defs["activation"])
    merged_tol = dict(defs["tolerances"])
    if tolerances:
        merged_tol.update(tolerances)
    return ExperimentPlan(
        kind=kind,
        base=base,
        sweep=tuple(sweep) if sweep is not None else defs["sweep"],
        out_dir=str(out_dir),
        tolerances=merged_tol,
        workers=workers,
        **mcmc_overrides,
    )


# ---------------------------------------------------------------------------
# Comparison machinery


@dataclass
class ComparisonRow:
    """One comparison with everything needed to re-derive its verdict.

    rule records how the verdict was reached: "tolerance" (relative
    deviation within tolerance), "<z>se" (within the z-score window),
    "lower_bound"/"upper_bound" (measured >= / <= tolerance), "none"
    (failed), or "error" (the sweep point itself failed to execute).
    """

    sweep_value: float
    quantity: str
    predicted: float
    measured: float
    stderr: float
    rel_dev: float
    z: float
    tolerance: float
    rule: str
    passed: bool

    def __post_init__(self):
        # comparisons routinely arrive as numpy scalars; normalize so the
        # rows serialize cleanly
        for name in ("sweep_value", "predicted", "measured", "stderr",
                     "rel_dev", "z", "tolerance"):
            setattr(self, name, float(getattr(self, name)))
        self.passed = bool(self.passed)


def compare_values(
    sweep_value: float,
    quantity: str,
    predicted: float,
    measured: float,
    stderr: float,
    tolerance: float,
    z_window: float = 4.0,
) -> ComparisonRow:
    """Tolerance-or-z comparison: pass when either gate admits the point."""
    diff = abs(measured - predicted)
    if predicted != 0:
        rel_dev = diff / abs(predicted)
    else:
        rel_dev = 0.0 if diff == 0 else math.inf
    if stderr > 0:
        z = diff / stderr
    else:
        z = 0.0 if diff == 0 else math.inf
    tol_pass = rel_dev <= tolerance
    z_pass = z <= z_window
    if tol_pass:
        rule = "tolerance"
    elif z_pass:
        rule = f"{z_window:g}se"
    else:
        rule = "none"
    return ComparisonRow(
        sweep_value=sweep_value,
        quantity=quantity,
        predicted=predicted,
        measured=measured,
        stderr=stderr,
        rel_dev=rel_dev,
        z=z,
        tolerance=tolerance,
        rule=rule,
        passed=tol_pass or z_pass,
    )


def bound_row(
    sweep_value: float,
    quantity: str,
    measured: float,
    bound: float,
    direction: str,
) -> ComparisonRow:
    """One-sided comparison against a bound ("lower"/"upper")."""
    if direction == "lower":
        passed = measured >= bound
        rule = "lower_bound"
    elif direction == "upper":
        passed = measured <= bound
        rule = "upper_bound"
    else:
        raise InvalidField("direction", f"must be lower/upper, got {direction!r}")
    return ComparisonRow(
        sweep_value=sweep_value,
        quantity=quantity,
        predicted=bound,
        measured=measured,
        stderr=math.nan,
        rel_dev=math.nan,
        z=math.nan,
        tolerance=bound,
        rule=rule,
        passed=passed,
    )


def error_row(sweep_value: float, message: str) -> ComparisonRow:
    return ComparisonRow(
        sweep_value=sweep_value,
        quantity=f"execution failed: {message}",
        predicted=math.nan,
        measured=math.nan,
        stderr=math.nan,
        rel_dev=math.nan,
        z=math.nan,
        tolerance=math.nan,
        rule="error",
        passed=False,
    )


def rederive_passed(row: ComparisonRow) -> bool:
    """Recompute the verdict from the recorded numbers (report invariant)."""
    if row.rule == "error":
        return False
    if row.rule == "lower_bound":
        return row.measured >= row.tolerance
    if row.rule == "upper_bound":
        return row.measured <= row.tolerance
    tol_pass = row.rel_dev <= row.tolerance
    z_window = 4.0 if row.rule in ("tolerance", "none") else float(row.rule[:-2])
    return tol_pass or row.z <= z_window


@dataclass
class ComparisonReport:
    kind: str
    rows: list
    extras: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if all(row.passed for row in self.rows) else "fail"

    def to_csv(self, path) -> None:
        fmt = "%.17g"
        lines = [
            "sweep_value,quantity,predicted,measured,stderr,rel_dev,z,tolerance,rule,passed"
        ]
        for r in self.rows:
            lines.append(
                ",".join(
                    [
                        fmt % r.sweep_value,
                        '"%s"' % r.quantity.replace('"', "'"),
                        fmt % r.predicted,
                        fmt % r.measured,
                        fmt % r.stderr,
                        fmt % r.rel_dev,
                        fmt % r.z,
                        fmt % r.tolerance,
                        r.rule,
                        str(r.passed).lower(),
                    ]
                )
            )
        Path(path).write_text("\n".join(lines) + "\n")

    def to_json(self, path) -> None:
        payload = {
            "kind": self.kind,
            "verdict": self.verdict,
            "rows": [vars(r) for r in self.rows],
            "extras": self.extras,
        }
        Path(path).write_text(json.dumps(payload, indent=2, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def compare(
    measured,
    predicted,
    stderr,
    tolerance: float,
    quantity: str = "value",
    sweep_value: float = math.nan,
    z_window: float = 4.0,
    grid=None,
) -> list:
    """Pointwise comparison of two aligned tables; returns one row per point."""
    measured = np.atleast_1d(np.asarray(measured, dtype=float))
    predicted = np.atleast_1d(np.asarray(predicted, dtype=float))
    stderr = np.broadcast_to(np.asarray(stderr, dtype=float), measured.shape)
    if measured.shape != predicted.shape:
        raise GridMismatch(
            f"measured {measured.shape} and predicted {predicted.shape} differ"
        )
    if grid is not None and len(grid) != len(measured):
        raise GridMismatch(f"grid length {len(grid)} != table length {len(measured)}")
    rows = []
    for i in range(len(measured)):
        label = f"{quantity}[{'%g' % grid[i] if grid is not None else i}]"
        rows.append(
            compare_values(
                sweep_value, label, predicted[i], measured[i], stderr[i], tolerance, z_window
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Experiment runners


def _sweep_config(plan: ExperimentPlan, index: int, value: float) -> EnsembleConfig:
    seed = derive_sample_seed(plan.base.master_seed, _SWEEP_SEED_OFFSET + index)
    return plan.base.replace(weight_variance=value, master_seed=seed)


def _sample_stats(matrix: np.ndarray):
    """Mean and standard error of per-sample window means."""
    per_sample = matrix.mean(axis=1)
    n = len(per_sample)
    return (
        float(per_sample.mean()),
        float(per_sample.std(ddof=1) / np.sqrt(n)) if n > 1 else math.inf,
    )


def _half_grid_mask(q: np.ndarray) -> np.ndarray:
    return (q > 0) & (q <= np.pi + 1e-12)


def _mark_failure(rows, extras, value, err) -> None:
    rows.append(error_row(value, str(err)))
    extras.setdefault("failures", {})[f"{value:g}"] = str(err)


def _run_fig3(plan, out: Path, rows, artifacts, extras):
    tol = plan.tolerances["rel_tol"]
    sweep_curve = []
    for index, value in enumerate(plan.sweep):
        try:
            config = _sweep_config(plan, index, value)
            result = sampler.run_ensemble(config, plan.workers)
            raw = out / f"trajectories_sw2_{value:g}.csv"
            sampler.write_trajectories_csv(result, raw)
            artifacts.append(raw.name)
            mean, se = _sample_stats(result.field_matrix("r"))
            r_star = theory.linear_saddle(config.width, value, config.bias_variance)
            rows.append(compare_values(value, "window_mean_r", r_star, mean, se, tol))
            sweep_curve.append((value, mean, se))
            if result.failures:
                extras.setdefault("failed_samples", {})[f"{value:g}"] = len(result.failures)
        except NetLatticeError as err:
            _mark_failure(rows, extras, value, err)

    grid = np.linspace(0.01, max(plan.sweep) * 1.02, 200)
    curve = [
        theory.linear_saddle(plan.base.width, v, plan.base.bias_variance) for v in grid
    ]
    theory_path = out / "theory_r_star.csv"
    theory.write_linear_theory_csv(grid, np.array(curve), theory_path)
    artifacts.append(theory_path.name)

    if not sweep_curve:
        return
    measured = np.array(sweep_curve)
    plot_path = out / "fig3_linear_saddle.svg"
    plotting.emit_plot(
        [
            plotting.PlotSeries("theory r*", grid, np.array(curve), color="black", dash="6,3"),
            plotting.PlotSeries("ensemble mean", measured[:, 0], measured[:, 1], style="points", color="#d62728"),
        ],
        plotting.AxesSpec(
            title="Stationary norm vs weight variance",
            xlabel="weight variance",
            ylabel="window-mean r",
        ),
        plot_path,
    )
    artifacts.append(plot_path.name)


def _run_fig4(plan, out: Path, rows, artifacts, extras):
    z_window = plan.tolerances["mode_z"]
    min_fraction = plan.tolerances["min_pass_fraction"]
    min_corr = plan.tolerances["min_shape_correlation"]
    pooled_measured, pooled_predicted = [], []
    per_sweep_corr = {}

    for index, value in enumerate(plan.sweep):
        try:
            config = _sweep_config(plan, index, value)
            result = sampler.run_ensemble(config, plan.workers)
            modes = spectral.ensemble_modes(result)
            est = spectral.estimate_spectrum(
                modes["eps"], fingerprint=config.fingerprint()
            )
        except NetLatticeError as err:
            _mark_failure(rows, extras, value, err)
            continue
        spec_path = out / f"spectrum_sw2_{value:g}.csv"
        spectral.write_spectrum_csv(est, spec_path)
        artifacts.append(spec_path.name)

        mask = _half_grid_mask(est.q)
        q = est.q[mask]
        predicted = theory.linear_mode_variance(
            q, value, config.bias_variance, config.window_len
        )
        theory_path = out / f"theory_spectrum_sw2_{value:g}.csv"
        theory.write_linear_theory_csv(q, predicted, theory_path)
        artifacts.append(theory_path.name)

        measured = est.variance[mask]
        stderr = est.stderr[mask]
        z = np.abs(measured - predicted) / stderr
        fraction = float(np.mean(z <= z_window))
        rows.append(
            bound_row(value, f"mode_pass_fraction(z<={z_window:g})", fraction, min_fraction, "lower")
        )
        corr = float(np.corrcoef(np.log(measured), np.log(predicted))[0, 1])
        per_sweep_corr[f"{value:g}"] = corr
        pooled_measured.append(measured)
        pooled_predicted.append(predicted)

        plot_path = out / f"fig4_spectrum_sw2_{value:g}.svg"
        plotting.emit_plot(
            [
                plotting.PlotSeries(f"measured {value:g}", q, measured),
                plotting.PlotSeries("theory", q, predicted, color="black", dash="6,3"),
            ],
            plotting.AxesSpec(
                title=f"Mode variance, weight variance {value:g}",
                xlabel="q",
                ylabel="Var",
                xscale="log",
                yscale="log",
            ),
            plot_path,
        )
        artifacts.append(plot_path.name)

    if pooled_measured:
        pooled = np.corrcoef(
            np.log(np.concatenate(pooled_measured)),
            np.log(np.concatenate(pooled_predicted)),
        )[0, 1]
        rows.append(
            bound_row(math.nan, "loglog_shape_correlation(pooled)", float(pooled), min_corr, "lower")
        )
    extras["per_sweep_shape_correlation"] = per_sweep_corr


def _run_fig5(plan, out: Path, rows, artifacts, extras):
    radius_tol = plan.tolerances["radius_rel_tol"]
    count_tol = plan.tolerances["count_rel_tol"]
    measured_points = []
    for index, value in enumerate(plan.sweep):
        try:
            config = _sweep_config(plan, index, value)
            result = sampler.run_ensemble(config, plan.workers)
        except NetLatticeError as err:
            _mark_failure(rows, extras, value, err)
            continue
        raw = out / f"trajectories_sw2_{value:g}.csv"
        sampler.write_trajectories_csv(result, raw)
        artifacts.append(raw.name)

        saddle = theory.relu_saddle(config.width, value, config.bias_variance)
        mean_p, se_p = _sample_stats(result.field_matrix("r_plus"))
        mean_m, se_m = _sample_stats(result.field_matrix("r_minus"))
        mean_k, se_k = _sample_stats(result.field_matrix("k").astype(float))
        rows.append(
            compare_values(value, "window_mean_r_plus", saddle.r_plus, mean_p, se_p, radius_tol)
        )
        rows.append(
            compare_values(value, "window_mean_r_minus", saddle.r_minus, mean_m, se_m, radius_tol)
        )
        rows.append(
            compare_values(value, "window_mean_k", saddle.k, mean_k, se_k, count_tol)
        )
        measured_points.append((value, mean_p, mean_m, mean_k))

    if not measured_points:
        return
    grid = np.linspace(0.01, max(plan.sweep) * 1.02, 200)
    saddles = [theory.relu_saddle(plan.base.width, v, plan.base.bias_variance) for v in grid]
    radius_curve = np.array([s.r_plus for s in saddles])
    theory_path = out / "theory_r_star_relu.csv"
    theory.write_linear_theory_csv(grid, radius_curve, theory_path)
    artifacts.append(theory_path.name)

    pts = np.array(measured_points)
    radii_path = out / "fig5_relu_radii.svg"
    plotting.emit_plot(
        [
            plotting.PlotSeries("theory r+* = r-*", grid, radius_curve, color="black", dash="6,3"),
            plotting.PlotSeries("mean r+", pts[:, 0], pts[:, 1], style="points", color="#d62728"),
            plotting.PlotSeries("mean r-", pts[:, 0], pts[:, 2], style="points", color="#1f77b4"),
        ],
        plotting.AxesSpec(
            title="Rectified saddle radii",
            xlabel="weight variance",
            ylabel="window mean",
        ),
        radii_path,
    )
    artifacts.append(radii_path.name)

    count_path = out / "fig5_relu_count.svg"
    plotting.emit_plot(
        [
            plotting.PlotSeries(
                "theory k*", grid, np.full_like(grid, plan.base.width / 2.0), color="black", dash="6,3"
            ),
            plotting.PlotSeries("mean k", pts[:, 0], pts[:, 3], style="points", color="#2ca02c"),
        ],
        plotting.AxesSpec(
            title="Positive-count fixed point",
            xlabel="weight variance",
            ylabel="window-mean k",
        ),
        count_path,
    )
    artifacts.append(count_path.name)


_OFFDIAG = ((0, 1), (0, 2), (1, 2))


def _run_fig6(plan, out: Path, rows, artifacts, extras):
    diag_tol = plan.tolerances["diag_median_rel_tol"]
    sign_z = plan.tolerances["offdiag_sign_z"]
    labels = theory.FIELD_ORDER
    sign_details = {}

    for index, value in enumerate(plan.sweep):
        try:
            config = _sweep_config(plan, index, value)
            result = sampler.run_ensemble(config, plan.workers)
            modes = spectral.ensemble_modes(result)
            est = spectral.estimate_cross_spectrum(modes, fingerprint=config.fingerprint())
        except NetLatticeError as err:
            _mark_failure(rows, extras, value, err)
            continue
        cross_path = out / f"cross_spectrum_sw2_{value:g}.csv"
        spectral.write_cross_spectrum_csv(est, cross_path)
        artifacts.append(cross_path.name)
        artifacts.append(cross_path.stem + "_stderr.csv")

        mask = _half_grid_mask(est.q)
        predicted = theory.relu_covariance(est.q[mask], value, config.window_len)
        theory_path = out / f"theory_cross_sw2_{value:g}.csv"
        theory.write_relu_theory_csv(est.q[mask], predicted, theory_path)
        artifacts.append(theory_path.name)

        measured = est.covariance[mask]
        stderr = est.stderr[mask]
        for a, name in enumerate(labels):
            rel = np.abs(measured[:, a, a].real / predicted[:, a, a].real - 1.0)
            rows.append(
                bound_row(
                    value, f"diag_{name}_median_rel_dev", float(np.median(rel)), diag_tol, "upper"
                )
            )

        agree_total, qualify_total = 0, 0
        for a, b in _OFFDIAG:
            for part, take in (("re", np.real), ("im", np.imag)):
                th = take(predicted[:, a, b])
                ms = take(measured[:, a, b])
                qualifying = np.abs(th) > sign_z * stderr[:, a, b]
                qualify_total += int(np.count_nonzero(qualifying))
                agree_total += int(
                    np.count_nonzero(np.sign(ms[qualifying]) == np.sign(th[qualifying]))
                )
        fraction = agree_total / qualify_total if qualify_total else 1.0
        sign_details[f"{value:g}"] = {
            "qualifying_components": qualify_total,
            "agreeing": agree_total,
        }
        rows.append(
            bound_row(value, "offdiag_sign_agreement_fraction", float(fraction), 1.0, "lower")
        )

        q = est.q[mask]
        diag_path = out / f"fig6_diag_sw2_{value:g}.svg"
        series = []
        for a, name in enumerate(labels):
            series.append(
                plotting.PlotSeries(f"measured {name}", q, measured[:, a, a].real)
            )
            series.append(
                plotting.PlotSeries(
                    f"theory {name}", q, predicted[:, a, a].real, color="black", dash="6,3"
                )
            )
        plotting.emit_plot(
            series,
            plotting.AxesSpec(
                title=f"Cross-spectrum diagonal, weight variance {value:g}",
                xlabel="q",
                ylabel="Var",
                xscale="log",
                yscale="log",
            ),
            diag_path,
        )
        artifacts.append(diag_path.name)

        off_path = out / f"fig6_offdiag_sw2_{value:g}.svg"
        series = []
        for a, b in _OFFDIAG:
            series.append(
                plotting.PlotSeries(
                    f"Re measured {labels[a]}{labels[b]}", q, measured[:, a, b].real
                )
            )
            series.append(
                plotting.PlotSeries(
                    f"Re theory {labels[a]}{labels[b]}",
                    q,
                    predicted[:, a, b].real,
                    color="black",
                    dash="6,3",
                )
            )
        plotting.emit_plot(
            series,
            plotting.AxesSpec(
                title=f"Cross-spectrum off-diagonal (real), weight variance {value:g}",
                xlabel="q",
                ylabel="Re cov",
            ),
            off_path,
        )
        artifacts.append(off_path.name)

    extras["offdiag_sign_details"] = sign_details


def _run_fig1(plan, out: Path, rows, artifacts, extras):
    z_window = plan.tolerances["z_window"]
    points = []
    for index, value in enumerate(plan.sweep):
        try:
            config = _sweep_config(plan, index, value)
            result = sampler.run_ensemble(config, plan.workers)
            q_star = theory.meanfield_fixed_point("tanh", value, config.bias_variance)
        except NetLatticeError as err:
            _mark_failure(rows, extras, value, err)
            continue
        raw = out / f"trajectories_sw2_{value:g}.csv"
        sampler.write_trajectories_csv(result, raw)
        artifacts.append(raw.name)

        norm_sq = result.field_matrix("r") ** 2 / config.width
        mean, se = _sample_stats(norm_sq)
        rows.append(
            compare_values(
                value, "window_mean_r_sq_over_n", q_star, mean, se, 0.0, z_window
            )
        )
        points.append((value, mean, se))

    if not points:
        return
    grid = np.linspace(0.05, max(plan.sweep) * 1.1, 120)
    curve = np.array(
        [
            theory.meanfield_fixed_point("tanh", v, plan.base.bias_variance)
            for v in grid
        ]
    )
    theory_path = out / "theory_meanfield_tanh.csv"
    theory.write_linear_theory_csv(grid, curve, theory_path)
    artifacts.append(theory_path.name)

    pts = np.array(points)
    plot_path = out / "fig1_tanh_meanfield.svg"
    plotting.emit_plot(
        [
            plotting.PlotSeries("mean-field q*", grid, curve, color="black", dash="6,3"),
            plotting.PlotSeries("ensemble r^2/N", pts[:, 0], pts[:, 1], style="points", color="#d62728"),
        ],
        plotting.AxesSpec(
            title="Saturating-activation variance map fixed point",
            xlabel="weight variance",
            ylabel="r^2 / N",
            yscale="log",
        ),
        plot_path,
    )
    artifacts.append(plot_path.name)


def _chain_spectrum(chain: lattice.MetropolisResult, field_name: str = "eps"):
    """Per-mode variance of a thinned chain with autocorrelation-aware errors.

    Returns (q, variance, stderr, n_eff). The variance estimator matches
    estimate_spectrum; the standard error replaces the sample count with the
    per-mode effective sample size n/(2 tau_int), tau_int measured on the
    |mode|^2 series.
    """
    samples = chain.samples[field_name]
    modes = spectral.fft_modes(samples)
    n = len(modes)
    mean = modes.mean(axis=0)
    var = (np.sum(np.abs(modes) ** 2, axis=0) - n * np.abs(mean) ** 2) / (n - 1)
    n_eff = np.empty(len(var))
    for i in range(modes.shape[1]):
        tau = lattice.integrated_autocorrelation(np.abs(modes[:, i]) ** 2)
        n_eff[i] = n / (2.0 * tau)
    stderr = var * np.sqrt(2.0 / np.maximum(n_eff - 1, 1.0))
    return spectral.mode_wavevectors(samples.shape[1]), var, stderr, n_eff


def _run_mcmc_oracle(plan, out: Path, rows, artifacts, extras):
    median_tol = plan.tolerances["median_rel_tol"]
    cal_tol = plan.tolerances["calibration_rel_tol"]
    length = plan.mcmc_length

    def chain_for(value, seed_index):
        config = plan.base.replace(weight_variance=value)
        seed = derive_sample_seed(plan.base.master_seed, _SWEEP_SEED_OFFSET + seed_index)
        chain = lattice.metropolis_run(
            config,
            "linear_quadratic",
            length=length,
            sweeps=plan.mcmc_sweeps,
            burn_in=plan.mcmc_burn_in,
            thin=plan.mcmc_thin,
            seed=seed,
        )
        summary_path = out / f"mcmc_summary_sw2_{value:g}.json"
        lattice.write_mcmc_summary(chain, summary_path)
        artifacts.append(summary_path.name)
        dump_path = out / f"mcmc_samples_sw2_{value:g}.csv"
        lattice.write_mcmc_csv(chain, dump_path)
        artifacts.append(dump_path.name)
        return config, chain

    # calibration chain fixes the normalization constant
    cal_value = plan.mcmc_calibration
    config, chain = chain_for(cal_value, 0)
    q, var, stderr, n_eff = _chain_spectrum(chain)
    mask = q != 0
    predicted_unit = theory.linear_mode_variance(
        q[mask], cal_value, config.bias_variance, length
    ) / theory.KAPPA_LINEAR
    ratio = var[mask] / predicted_unit
    weights = (predicted_unit / stderr[mask]) ** 2
    kappa_hat = float(np.sum(weights * ratio) / np.sum(weights))
    extras["kappa_hat"] = kappa_hat
    extras["kappa_frozen"] = theory.KAPPA_LINEAR

    cal_dev = np.abs(var[mask] / (kappa_hat * predicted_unit) - 1.0)
    rows.append(
        bound_row(cal_value, "calibration_max_rel_dev", float(cal_dev.max()), cal_tol, "upper")
    )
    rows.append(
        compare_values(cal_value, "kappa_hat", theory.KAPPA_LINEAR, kappa_hat,
                       float(1.0 / np.sqrt(np.sum(weights))), cal_tol)
    )

    spec_path = out / f"mcmc_spectrum_sw2_{cal_value:g}.csv"
    _write_chain_spectrum_csv(q[mask], var[mask], stderr[mask], n_eff[mask], spec_path)
    artifacts.append(spec_path.name)

    # holdouts test the frozen normalization on unseen couplings
    for index, value in enumerate(plan.sweep):
        try:
            config, chain = chain_for(value, 1 + index)
        except NetLatticeError as err:
            _mark_failure(rows, extras, value, err)
            continue
        q, var, stderr, n_eff = _chain_spectrum(chain)
        mask = q != 0
        predicted = kappa_hat * theory.linear_mode_variance(
            q[mask], value, config.bias_variance, length
        ) / theory.KAPPA_LINEAR
        rel = np.abs(var[mask] / predicted - 1.0)
        rows.append(
            bound_row(value, "holdout_median_rel_dev", float(np.median(rel)), median_tol, "upper")
        )
        spec_path = out / f"mcmc_spectrum_sw2_{value:g}.csv"
        _write_chain_spectrum_csv(q[mask], var[mask], stderr[mask], n_eff[mask], spec_path)
        artifacts.append(spec_path.name)

        order = np.argsort(q[mask])
        plot_path = out / f"mcmc_oracle_sw2_{value:g}.svg"
        plotting.emit_plot(
            [
                plotting.PlotSeries("chain variance", q[mask][order], var[mask][order]),
                plotting.PlotSeries("prediction", q[mask][order], predicted[order], color="black", dash="6,3"),
            ],
            plotting.AxesSpec(
                title=f"Ring-chain mode variance, weight variance {value:g}",
                xlabel="q",
                ylabel="Var",
                yscale="log",
            ),
            plot_path,
        )
        artifacts.append(plot_path.name)


def _write_chain_spectrum_csv(q, var, stderr, n_eff, path) -> None:
    fmt = "%.17g"
    lines = ["q,var,stderr,n_eff"]
    for i in range(len(q)):
        lines.append(
            ",".join([fmt % q[i], fmt % var[i], fmt % stderr[i], fmt % n_eff[i]])
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _run_xi_fit(plan, out: Path, rows, artifacts, extras):
    tol = plan.tolerances["rel_tol"]
    fits = {}
    for index, value in enumerate(plan.sweep):
        try:
            config = _sweep_config(plan, index, value)
            result = sampler.run_ensemble(config, plan.workers)
            modes = spectral.ensemble_modes(result)
            est = spectral.estimate_spectrum(modes["eps"], fingerprint=config.fingerprint())
            fit = spectral.fit_lorentzian(est)
        except NetLatticeError as err:
            _mark_failure(rows, extras, value, err)
            continue
        spec_path = out / f"spectrum_sw2_{value:g}.csv"
        spectral.write_spectrum_csv(est, spec_path)
        artifacts.append(spec_path.name)

        xi_theory = theory.correlation_length(value)
        rows.append(compare_values(value, "xi_fit", xi_theory, fit.xi, 0.0, tol))
        fits[f"{value:g}"] = {
            "a": fit.a,
            "b": fit.b,
            "xi": fit.xi,
            "n_modes": fit.n_modes,
            "xi_half_range": fit.xi_half_range,
        }
    extras["lorentzian_fits"] = fits

    grid = np.linspace(0.05, 0.95, 120)
    curve = np.array([theory.correlation_length(v) for v in grid])
    theory_path = out / "theory_xi.csv"
    theory.write_linear_theory_csv(grid, curve, theory_path)
    artifacts.append(theory_path.name)

    values = sorted(float(k) for k in fits)
    plot_path = out / "xi_fit.svg"
    plotting.emit_plot(
        [
            plotting.PlotSeries("theory xi", grid, curve, color="black", dash="6,3"),
            plotting.PlotSeries(
                "fitted xi",
                np.array(values),
                np.array([fits[f"{v:g}"]["xi"] for v in values]),
                style="points",
                color="#d62728",
            ),
        ],
        plotting.AxesSpec(
            title="Correlation length from Lorentzian fits",
            xlabel="weight variance",
            ylabel="xi",
            yscale="log",
        ),
        plot_path,
    )
    artifacts.append(plot_path.name)


_RUNNERS = {
    "fig3_linear_saddle": _run_fig3,
    "fig4_linear_spectrum": _run_fig4,
    "fig5_relu_saddle": _run_fig5,
    "fig6_relu_cross_spectrum": _run_fig6,
    "fig1_tanh_meanfield": _run_fig1,
    "mcmc_oracle": _run_mcmc_oracle,
    "xi_fit": _run_xi_fit,
}


def run_experiment(plan: ExperimentPlan) -> ComparisonReport:
    """Execute a plan, persist all artifacts, and return its report.

    A failing sweep point is recorded as a failed row and the remaining
    points still run; the manifest always lists whatever was persisted.
    """
    out = Path(plan.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    rows: list = []
    artifacts: list = []
    extras: dict = {}
    try:
        _RUNNERS[plan.kind](plan, out, rows, artifacts, extras)
    except NetLatticeError as err:
        rows.append(error_row(math.nan, str(err)))

    report = ComparisonReport(kind=plan.kind, rows=rows, extras=extras)
    report.to_csv(out / "report.csv")
    report.to_json(out / "report.json")
    artifacts.extend(["report.csv", "report.json"])

    from . import __version__

    manifest = {
        "kind": plan.kind,
        "config": plan.base.as_dict(),
        "sweep": list(plan.sweep),
        "tolerances": plan.tolerances,
        "master_seed": plan.base.master_seed,
        "sweep_seed_offset": _SWEEP_SEED_OFFSET,
        "workers": plan.workers,
        "tool_version": __version__,
        "wall_time_s": round(time.perf_counter() - start, 3),
        "verdict": report.verdict,
        "artifacts": sorted(set(artifacts)),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return report
