"""Closed-form predictions for subcritical random-network ensembles.

Saddle points, Fourier-space fluctuation variances and covariances,
mean-field fixed points, the correlation length, and the long-wavelength
effective-theory coefficients.

Conventions fixed across the package:

- Fourier modes use the 1/L-forward transform (spectral.fft_modes), so mode
  amplitudes are intensive in the series length.
- Predicted variances are per-mode and two-sided (each of q and -q carries
  the full stated variance).
- The normalization constants KAPPA_LINEAR and KAPPA_RELU multiply the
  predicted (co)variances. They were calibrated once against direct
  Metropolis sampling of the quadratic ring energies and are frozen at
  exactly 1: under the 1/L-forward convention the Gaussian algebra produces
  no extra factor. The calibration is re-verified in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import InvalidField, NoConvergence, NonPositiveBiasVariance, Supercritical, ZeroMode

# Frozen normalization constants (see module docstring).
KAPPA_LINEAR = 1.0
KAPPA_RELU = 1.0

# Row/column order of all 3x3 field matrices.
FIELD_ORDER = ("plus", "minus", "k")


def _check_bias(bias_variance: float) -> None:
    if bias_variance <= 0:
        raise NonPositiveBiasVariance(bias_variance)


def _check_subcritical(weight_variance: float, limit: float) -> None:
    if weight_variance < 0:
        raise InvalidField("weight_variance", f"must be >= 0, got {weight_variance}")
    if weight_variance >= limit:
        raise Supercritical(weight_variance, limit)


def linear_saddle(width: int, weight_variance: float, bias_variance: float) -> float:
    """Stationary norm r* of the linear ensemble: sqrt(N sigma_b^2 / (1 - sigma_w^2))."""
    _check_subcritical(weight_variance, 1.0)
    _check_bias(bias_variance)
    return float(np.sqrt(width * bias_variance / (1.0 - weight_variance)))


@dataclass(frozen=True)
class ReluSaddle:
    """Stationary point of the rectified ensemble in orthant coordinates."""

    r_plus: float
    r_minus: float
    k: float


def relu_saddle(width: int, weight_variance: float, bias_variance: float) -> ReluSaddle:
    """Stationary (r+*, r-*, k*) of the rectified ensemble.

    r+* = r-* = sqrt(N sigma_b^2 / (2 (1 - sigma_w^2/2))) and k* = N/2:
    on average half the entries are positive and the two half-norms match.
    """
    _check_subcritical(weight_variance, 2.0)
    _check_bias(bias_variance)
    r = float(np.sqrt(width * bias_variance / (2.0 * (1.0 - weight_variance / 2.0))))
    return ReluSaddle(r_plus=r, r_minus=r, k=width / 2.0)


def linear_mode_coefficient(q, weight_variance: float):
    """Quadratic-energy coefficient c(q) = (1 + sigma_w^4) - 2 sigma_w^2 cos q."""
    _check_subcritical(weight_variance, 1.0)
    q = np.asarray(q, dtype=float)
    out = (1.0 + weight_variance**2) - 2.0 * weight_variance * np.cos(q)
    return float(out) if out.ndim == 0 else out


def linear_mode_variance(q, weight_variance: float, bias_variance: float, length: int):
    """Predicted per-mode variance of the linear fluctuation field.

    Var(eps_q) = KAPPA_LINEAR * sigma_b^2 / (2 * length * Delta_w * c(q))
    where Delta_w = 1 - sigma_w^2 and length is the number of sites of the
    transformed series (analysis-window length for ensembles, ring length
    for lattice chains). q = 0 is rejected: the constant mode tracks the
    residual mean, which the analysis handles separately.
    """
    _check_bias(bias_variance)
    if length < 1:
        raise InvalidField("length", f"must be >= 1, got {length}")
    q = np.asarray(q, dtype=float)
    if np.any(q == 0.0):
        raise ZeroMode("q = 0 has no per-mode variance prediction")
    delta = 1.0 - weight_variance
    c = linear_mode_coefficient(q, weight_variance)
    out = KAPPA_LINEAR * bias_variance / (2.0 * length * delta * c)
    return float(out) if np.ndim(out) == 0 else out


def relu_inverse_covariance(q, weight_variance: float) -> np.ndarray:
    """Per-mode inverse covariance of the rescaled rectified fields.

    Field order FIELD_ORDER, with k the count of positive components. The
    count enters through the orthant entropy of the decomposition: its
    curvature at the half-filled saddle gives the constant 6 on the k
    diagonal, and trading a component between the halves couples the count
    to the two half-norms with opposite signs, giving the constant -1/+1
    off-diagonals. The lattice tests re-derive all constant entries by
    finite differences of the radial ring energy.

    Returns the Hermitian 3x3 matrix for scalar q, or an array of shape
    q.shape + (3, 3) for array q.
    """
    _check_subcritical(weight_variance, 2.0)
    q = np.asarray(q, dtype=float)
    w2 = weight_variance
    shape = q.shape + (3, 3)
    out = np.empty(shape, dtype=complex)
    out[..., 0, 0] = 1.0 + w2**2 / 2.0 - w2 * np.cos(q)
    out[..., 0, 1] = -0.5 * w2 * np.exp(-1j * q)
    out[..., 0, 2] = -1.0
    out[..., 1, 0] = -0.5 * w2 * np.exp(1j * q)
    out[..., 1, 1] = 1.0
    out[..., 1, 2] = 1.0
    out[..., 2, 0] = -1.0
    out[..., 2, 1] = 1.0
    out[..., 2, 2] = 6.0
    return out


def relu_covariance(q, weight_variance: float, length: int) -> np.ndarray:
    """Predicted per-mode covariance of the rescaled rectified fields.

    Inverse of relu_inverse_covariance scaled by KAPPA_RELU / length. Valid
    at every q including 0 (the matrix is positive-definite on the whole
    subcritical range, so the inverse always exists).
    """
    if length < 1:
        raise InvalidField("length", f"must be >= 1, got {length}")
    inv = relu_inverse_covariance(q, weight_variance)
    return np.linalg.inv(inv) * (KAPPA_RELU / length)


def correlation_length(weight_variance: float) -> float:
    """Depth scale of linear fluctuations: xi = sigma_w / (1 - sigma_w^2)."""
    _check_subcritical(weight_variance, 1.0)
    return float(np.sqrt(weight_variance) / (1.0 - weight_variance))


@lru_cache(maxsize=None)
def _gauss_hermite(nodes: int):
    # Physicists' nodes/weights; E[f(Z)] = sum w_i f(sqrt(2) x_i) / sqrt(pi).
    x, w = np.polynomial.hermite.hermgauss(nodes)
    return np.sqrt(2.0) * x, w / np.sqrt(np.pi)


def _phi_sq_expectation(activation: str, q: float, nodes: int) -> float:
    if activation == "linear":
        return q
    if activation == "relu":
        return q / 2.0
    if activation == "tanh":
        z, w = _gauss_hermite(nodes)
        return float(np.sum(w * np.tanh(np.sqrt(q) * z) ** 2))
    raise InvalidField("activation", f"unknown activation {activation!r}")


def meanfield_fixed_point(
    activation: str,
    weight_variance: float,
    bias_variance: float,
    tol: float = 1e-12,
    max_iter: int = 10_000,
    nodes: int = 61,
) -> float:
    """Fixed point q* of the layer-to-layer variance map
    q <- sigma_w^2 E[phi(sqrt(q) Z)^2] + sigma_b^2, Z standard normal.

    For linear (E = q) and relu (E = q/2) the map is affine and is solved in
    closed form, which keeps the exact identities N q* = r*^2 (linear) and
    N q* = r+*^2 + r-*^2 (relu) true to rounding rather than to an iteration
    tolerance. For tanh the expectation uses Gauss-Hermite quadrature with
    the given node count and the map is iterated until successive values
    differ by less than tol; at the couplings the experiments use
    (sigma_w^2 <= 2) the default 61 nodes agree with 121 nodes to 1e-12,
    which the tests enforce.
    """
    _check_bias(bias_variance)
    if activation == "linear":
        _check_subcritical(weight_variance, 1.0)
        return bias_variance / (1.0 - weight_variance)
    if activation == "relu":
        _check_subcritical(weight_variance, 2.0)
        return bias_variance / (1.0 - weight_variance / 2.0)
    if activation != "tanh":
        raise InvalidField("activation", f"unknown activation {activation!r}")
    if nodes < 1:
        raise InvalidField("nodes", f"must be >= 1, got {nodes}")

    q = bias_variance
    for _ in range(max_iter):
        q_next = weight_variance * _phi_sq_expectation("tanh", q, nodes) + bias_variance
        if abs(q_next - q) < tol:
            return float(q_next)
        q = q_next
    raise NoConvergence(
        f"variance map did not converge to {tol} within {max_iter} iterations"
    )


def eft_coefficients(model: str, weight_variance: float, bias_variance: float) -> dict:
    """Coefficients of the long-wavelength quadratic energy density.

    model "linear": energy density mass * eps^2 + gradient * (d eps)^2 with
    mass = Delta_w^3 / sigma_b^2 and gradient = Delta_w sigma_w^2 / sigma_b^2.

    model "relu": the seven coefficients of the energy density
    (1/2)[c1 eps_plus^2 + c2 eps_minus^2 + c3 eps_k^2 + c4 eps_plus eps_minus
    + c5 eps_k (eps_plus - eps_minus) + c6 (d eps_plus)^2
    + c7 (d eps_plus) eps_minus] on the rescaled fields, with eps_k oriented
    as the positive-count fluctuation (so c5 is negative: a larger count
    goes with a larger positive half-norm); bias_variance is already
    absorbed by the rescaling and does not appear.
    """
    _check_bias(bias_variance)
    w2 = weight_variance
    if model == "linear":
        _check_subcritical(w2, 1.0)
        delta = 1.0 - w2
        return {"mass": delta**3 / bias_variance, "gradient": delta * w2 / bias_variance}
    if model == "relu":
        _check_subcritical(w2, 2.0)
        return {
            "eps_plus_sq": 1.0 - w2 + w2**2 / 2.0,
            "eps_minus_sq": 1.0,
            "eps_k_sq": 6.0,
            "eps_plus_eps_minus": w2,
            "eps_k_cross": -2.0,
            "grad_eps_plus_sq": w2,
            "grad_eps_plus_eps_minus": w2,
        }
    raise InvalidField("model", f"unknown model {model!r}")


@dataclass
class TheoryPrediction:
    """Bundle of every closed-form prediction available for one configuration.

    q excludes the constant mode (no per-mode prediction exists there).
    variance is filled for linear configs, covariance (stack of 3x3
    Hermitian matrices on the rescaled fields) for relu, neither for tanh.
    xi is the linear correlation length; q_star the mean-field fixed point
    of the variance map (available for every activation).
    """

    activation: str
    q_star: float
    r_star: object = None  # float (linear) or ReluSaddle (relu); None for tanh
    q: np.ndarray | None = None
    variance: np.ndarray | None = None
    covariance: np.ndarray | None = None
    xi: float | None = None


def predict(config, include_modes: bool = True) -> TheoryPrediction:
    """Evaluate all predictions that exist for the given configuration.

    Mode tables use the analysis-window wavevector grid with q = 0 dropped.
    Raises Supercritical when the configuration is outside the activation's
    closed-form regime.
    """
    activation = config.activation
    w2, b2, n = config.weight_variance, config.bias_variance, config.width
    q_star = meanfield_fixed_point(activation, w2, b2)
    grid = 2.0 * np.pi * np.arange(1, config.window_len) / config.window_len

    if activation == "linear":
        r_star = linear_saddle(n, w2, b2)
        variance = (
            linear_mode_variance(grid, w2, b2, config.window_len)
            if include_modes
            else None
        )
        return TheoryPrediction(
            activation=activation,
            q_star=q_star,
            r_star=r_star,
            q=grid if include_modes else None,
            variance=variance,
            xi=correlation_length(w2),
        )
    if activation == "relu":
        return TheoryPrediction(
            activation=activation,
            q_star=q_star,
            r_star=relu_saddle(n, w2, b2),
            q=grid if include_modes else None,
            covariance=relu_covariance(grid, w2, config.window_len)
            if include_modes
            else None,
        )
    return TheoryPrediction(activation=activation, q_star=q_star)


def is_hermitian(matrices: np.ndarray, tol: float = 1e-12) -> bool:
    """True when every matrix in the (..., 3, 3) stack equals its conjugate transpose."""
    adj = np.conj(np.swapaxes(matrices, -1, -2))
    return bool(np.all(np.abs(matrices - adj) <= tol))


def is_positive_definite(matrices: np.ndarray) -> bool:
    """True when every Hermitian matrix in the stack has strictly positive eigenvalues."""
    eigvals = np.linalg.eigvalsh(matrices)
    return bool(np.all(eigvals > 0))


_FMT = "%.17g"


def write_linear_theory_csv(q: np.ndarray, prediction: np.ndarray, path) -> None:
    """Theory table for a scalar prediction: header ``q,prediction``."""
    lines = ["q,prediction"]
    for qi, pi in zip(np.asarray(q), np.asarray(prediction)):
        lines.append(f"{_FMT % qi},{_FMT % pi}")
    Path(path).write_text("\n".join(lines) + "\n")


def _matrix_header() -> list:
    codes = ("p", "m", "k")
    cols = []
    for a in codes:
        for b in codes:
            cols.append(f"re_{a}{b}")
            cols.append(f"im_{a}{b}")
    return cols


def write_relu_theory_csv(q: np.ndarray, matrices: np.ndarray, path) -> None:
    """Theory table for 3x3 covariances: ``q`` then re/im of the 9 entries."""
    lines = [",".join(["q"] + _matrix_header())]
    for qi, mat in zip(np.asarray(q), np.asarray(matrices)):
        cells = [_FMT % qi]
        for a in range(3):
            for b in range(3):
                cells.append(_FMT % mat[a, b].real)
                cells.append(_FMT % mat[a, b].imag)
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def read_theory_csv(path) -> dict:
    """Read either theory-table layout; returns {"q": ..., columns...}."""
    raw = Path(path).read_text().strip().splitlines()
    header = raw[0].split(",")
    data = np.array([[float(cell) for cell in line.split(",")] for line in raw[1:]])
    return {name: data[:, i] for i, name in enumerate(header)}
