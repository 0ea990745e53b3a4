"""Fluctuation series, Fourier modes, empirical spectra, and the Lorentzian fit.

Transform convention (fixed package-wide): the forward transform is

    eps_q = (1/L) * sum_l eps[l] * exp(+i q l),   q = 2 pi n / L

which is numpy's ifft. The inverse (numpy's fft) reconstructs the series as
sum_q eps_q exp(-i q l). Mode amplitudes are therefore intensive in the
series length, matching the normalization of the theory module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .config import EnsembleConfig
from .errors import (
    BadLength,
    FieldMisalignment,
    InsufficientModes,
    InvalidField,
    MissingReference,
    NonPositiveFit,
    Supercritical,
    TooFewSamples,
)
from .theory import FIELD_ORDER, linear_saddle, relu_saddle


def mode_wavevectors(length: int) -> np.ndarray:
    """Wavevector grid q_n = 2 pi n / length, n = 0..length-1."""
    return 2.0 * np.pi * np.arange(length) / length


def _require_power_of_two(length: int) -> None:
    if length < 1 or length & (length - 1):
        raise BadLength(f"series length must be a power of two, got {length}")


def fft_modes(series: np.ndarray) -> np.ndarray:
    """Forward transform along the last axis; length must be a power of two."""
    series = np.asarray(series, dtype=float)
    _require_power_of_two(series.shape[-1])
    return np.fft.ifft(series, axis=-1)


def reconstruct_series(modes: np.ndarray) -> np.ndarray:
    """Invert fft_modes; returns the real series (imaginary residue discarded)."""
    return np.fft.fft(modes, axis=-1).real


def fluctuation_series(traj, config: EnsembleConfig, reference=None) -> dict:
    """Windowed fluctuation fields of one trajectory, about the theory saddle.

    linear (or tanh with an explicit reference): {"eps": r - r_star} over the
    analysis window. relu: the three rescaled fields
    {"plus": s*(r_plus - r_plus_star), "minus": s*(r_minus - r_minus_star),
    "k": (k - N/2)/sqrt(N)} with s = sqrt(2 (1 - sigma_w^2/2) / sigma_b^2).

    reference overrides the saddle: a float (linear/tanh) or a ReluSaddle.
    Without an override, a supercritical or tanh config has no reference
    profile and MissingReference is raised.
    """
    sl = config.window_slice
    if config.activation == "relu":
        if reference is None:
            try:
                reference = relu_saddle(
                    config.width, config.weight_variance, config.bias_variance
                )
            except Supercritical as err:
                raise MissingReference(str(err)) from None
        scale = np.sqrt(
            2.0 * (1.0 - config.weight_variance / 2.0) / config.bias_variance
        )
        return {
            "plus": scale * (traj.r_plus[sl] - reference.r_plus),
            "minus": scale * (traj.r_minus[sl] - reference.r_minus),
            "k": (traj.k[sl] - config.width / 2.0) / np.sqrt(config.width),
        }
    if reference is None:
        if config.activation != "linear":
            raise MissingReference(
                f"no closed-form saddle for activation {config.activation!r}"
            )
        try:
            reference = linear_saddle(
                config.width, config.weight_variance, config.bias_variance
            )
        except Supercritical as err:
            raise MissingReference(str(err)) from None
    return {"eps": traj.r[sl] - reference}


def ensemble_modes(result, reference=None) -> dict:
    """fft_modes of every trajectory's fluctuation fields, stacked per field.

    Returns {field: complex array (n_samples, window_len)}.
    """
    per_field: dict = {}
    for traj in result.trajectories:
        for name, series in fluctuation_series(traj, result.config, reference).items():
            per_field.setdefault(name, []).append(series)
    return {name: fft_modes(np.stack(rows)) for name, rows in per_field.items()}


@dataclass
class SpectrumEstimate:
    """Per-mode variance of a scalar fluctuation field across an ensemble.

    stderr is the documented Gaussian-assumption estimator
    variance * sqrt(2/(n-1)); kurtosis is the unbiased excess kurtosis of
    the real parts. The q = 0 entry is retained in the arrays but flagged
    out of theory comparisons (it absorbs residual mean error).
    """

    q: np.ndarray
    variance: np.ndarray
    stderr: np.ndarray
    kurtosis: np.ndarray
    n: int
    field_label: str = "eps"
    fingerprint: str = ""

    @property
    def comparison_mask(self) -> np.ndarray:
        return self.q != 0.0


@dataclass
class CrossSpectrumEstimate:
    """Per-mode 3x3 Hermitian covariance of the rectified fluctuation fields."""

    q: np.ndarray
    covariance: np.ndarray  # (L, 3, 3) complex
    stderr: np.ndarray      # (L, 3, 3) real
    kurtosis: np.ndarray    # (L, 3) real, per field
    n: int
    field_labels: tuple = FIELD_ORDER
    fingerprint: str = ""

    @property
    def comparison_mask(self) -> np.ndarray:
        return self.q != 0.0


def estimate_spectrum(modes: np.ndarray, fingerprint: str = "", field_label: str = "eps") -> SpectrumEstimate:
    """Sample variance of complex mode coefficients across samples.

    modes has shape (n_samples, L). The variance estimator is the unbiased
    E[|m|^2] - |E[m]|^2 form with the n/(n-1) correction.
    """
    modes = np.asarray(modes)
    if modes.ndim != 2:
        raise InvalidField("modes", f"expected 2d (samples, modes), got {modes.shape}")
    n, length = modes.shape
    if n < 2:
        raise TooFewSamples(f"need at least 2 samples, got {n}")
    mean = modes.mean(axis=0)
    var = (np.sum(np.abs(modes) ** 2, axis=0) - n * np.abs(mean) ** 2) / (n - 1)
    var = np.maximum(var, 0.0)
    return SpectrumEstimate(
        q=mode_wavevectors(length),
        variance=var,
        stderr=var * np.sqrt(2.0 / (n - 1)),
        kurtosis=stats.kurtosis(modes.real, axis=0, fisher=True, bias=False),
        n=n,
        field_label=field_label,
        fingerprint=fingerprint,
    )


def estimate_cross_spectrum(modes_by_field: dict, fingerprint: str = "") -> CrossSpectrumEstimate:
    """Empirical Hermitian covariance between the three rectified fields.

    modes_by_field maps each label in FIELD_ORDER to an (n_samples, L)
    complex array; all three must be aligned sample-by-sample.
    """
    missing = [name for name in FIELD_ORDER if name not in modes_by_field]
    if missing:
        raise FieldMisalignment(f"missing fields: {missing}")
    stacks = [np.asarray(modes_by_field[name]) for name in FIELD_ORDER]
    shape = stacks[0].shape
    if len(shape) != 2 or any(s.shape != shape for s in stacks):
        raise FieldMisalignment(
            f"field arrays must share one (samples, modes) shape, got "
            f"{[s.shape for s in stacks]}"
        )
    n, length = shape
    if n < 2:
        raise TooFewSamples(f"need at least 2 samples, got {n}")

    means = [s.mean(axis=0) for s in stacks]
    cov = np.empty((length, 3, 3), dtype=complex)
    for a in range(3):
        for b in range(3):
            raw = np.sum(stacks[a] * np.conj(stacks[b]), axis=0)
            cov[:, a, b] = (raw - n * means[a] * np.conj(means[b])) / (n - 1)
    var_diag = np.maximum(cov[:, range(3), range(3)].real, 0.0)  # (L, 3)
    stderr = np.sqrt(var_diag[:, :, None] * var_diag[:, None, :]) * np.sqrt(2.0 / (n - 1))
    kurt = np.stack(
        [stats.kurtosis(s.real, axis=0, fisher=True, bias=False) for s in stacks],
        axis=1,
    )
    return CrossSpectrumEstimate(
        q=mode_wavevectors(length),
        covariance=cov,
        stderr=stderr,
        kurtosis=kurt,
        n=n,
        fingerprint=fingerprint,
    )


@dataclass
class LorentzianFit:
    """Weighted least-squares fit of 1/Var(eps_q) = a + b q^2 over 0 < q <= q_max."""

    a: float
    b: float
    xi: float
    n_modes: int
    q_max: float
    xi_half_range: float | None = None  # refit with q_max/2, None if too few modes


def fit_lorentzian(spectrum: SpectrumEstimate, q_max: float = 0.5) -> LorentzianFit:
    """Extract the correlation length from the small-q spectrum.

    Weights come from the per-mode standard errors propagated through
    y = 1/Var. Requires at least 8 modes in (0, q_max]. The fit is rejected
    (NonPositiveFit) if either coefficient comes out non-positive, since
    xi = sqrt(b/a) is then meaningless. xi_half_range reports the same fit
    restricted to q <= q_max/2 as a sensitivity diagnostic.
    """
    a, b, n_modes = _weighted_inverse_fit(spectrum, q_max)
    if a <= 0 or b <= 0:
        raise NonPositiveFit(f"fit gave a={a!r}, b={b!r}; expected both > 0")
    xi_half = None
    try:
        a2, b2, _ = _weighted_inverse_fit(spectrum, q_max / 2.0)
        if a2 > 0 and b2 > 0:
            xi_half = float(np.sqrt(b2 / a2))
    except InsufficientModes:
        pass
    return LorentzianFit(
        a=float(a),
        b=float(b),
        xi=float(np.sqrt(b / a)),
        n_modes=n_modes,
        q_max=q_max,
        xi_half_range=xi_half,
    )


def _weighted_inverse_fit(spectrum: SpectrumEstimate, q_max: float):
    mask = (spectrum.q > 0) & (spectrum.q <= q_max) & (spectrum.variance > 0)
    n_modes = int(np.count_nonzero(mask))
    if n_modes < 8:
        raise InsufficientModes(
            f"{n_modes} modes in (0, {q_max}]; need at least 8"
        )
    q = spectrum.q[mask]
    v = spectrum.variance[mask]
    y = 1.0 / v
    sigma_y = spectrum.stderr[mask] / v**2
    design = np.stack([np.ones_like(q), q**2], axis=1) / sigma_y[:, None]
    coef, *_ = np.linalg.lstsq(design, y / sigma_y, rcond=None)
    return float(coef[0]), float(coef[1]), n_modes


_FMT = "%.17g"


def write_spectrum_csv(spectrum: SpectrumEstimate, path) -> None:
    """Scalar spectrum table: ``q,var,stderr,kurtosis,n``."""
    lines = ["q,var,stderr,kurtosis,n"]
    for i in range(len(spectrum.q)):
        lines.append(
            ",".join(
                [
                    _FMT % spectrum.q[i],
                    _FMT % spectrum.variance[i],
                    _FMT % spectrum.stderr[i],
                    _FMT % spectrum.kurtosis[i],
                    str(spectrum.n),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_spectrum_csv(path) -> SpectrumEstimate:
    raw = Path(path).read_text().strip().splitlines()
    data = np.array([[float(c) for c in line.split(",")] for line in raw[1:]])
    return SpectrumEstimate(
        q=data[:, 0],
        variance=data[:, 1],
        stderr=data[:, 2],
        kurtosis=data[:, 3],
        n=int(data[0, 4]),
    )


def _matrix_header() -> list:
    codes = ("p", "m", "k")
    cols = []
    for a in codes:
        for b in codes:
            cols.extend([f"re_{a}{b}", f"im_{a}{b}"])
    return cols


def write_cross_spectrum_csv(estimate: CrossSpectrumEstimate, path) -> None:
    """Matrix spectrum table: ``q`` plus re/im of the 9 covariance entries.

    A companion file <stem>_stderr.csv with the same layout carries the
    per-entry standard errors (imaginary column zero), so downstream
    comparisons are re-derivable from persisted artifacts alone.
    """
    path = Path(path)
    _write_matrix_table(estimate.q, estimate.covariance, path)
    stderr_complex = estimate.stderr.astype(complex)
    _write_matrix_table(
        estimate.q, stderr_complex, path.with_name(path.stem + "_stderr.csv")
    )


def _write_matrix_table(q, matrices, path) -> None:
    lines = [",".join(["q"] + _matrix_header())]
    for qi, mat in zip(q, matrices):
        cells = [_FMT % qi]
        for a in range(3):
            for b in range(3):
                cells.append(_FMT % mat[a, b].real)
                cells.append(_FMT % mat[a, b].imag)
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def read_cross_spectrum_csv(path) -> tuple:
    """Read a matrix table; returns (q, matrices (L,3,3) complex)."""
    raw = Path(path).read_text().strip().splitlines()
    data = np.array([[float(c) for c in line.split(",")] for line in raw[1:]])
    q = data[:, 0]
    mats = np.empty((len(q), 3, 3), dtype=complex)
    col = 1
    for a in range(3):
        for b in range(3):
            mats[:, a, b] = data[:, col] + 1j * data[:, col + 1]
            col += 2
    return q, mats
