"""Ring-lattice energies and direct Metropolis sampling.

Four model tags. The radial models are the full single-site energies of the
network ensemble on a periodic chain; the quadratic models are their
Gaussian expansions about the saddle, used as exactly solvable oracles for
the spectrum normalization.

    linear_radial     site fields: r > 0
    relu_radial       site fields: r_plus > 0, r_minus > 0, k in (0, N)
    linear_quadratic  site field:  eps (unconstrained)
    relu_quadratic    site fields: plus, minus, k (unconstrained, rescaled)

Sites are indexed 0..L-1 with periodic neighbors (site L == site 0); the
wavevector grid of a length-L ring is 2 pi n / L.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import EnsembleConfig
from .errors import (
    DomainViolation,
    InvalidField,
    NonFiniteEnergy,
    SeriesTooShort,
    Supercritical,
)
from .theory import linear_saddle, relu_saddle

MODELS = ("linear_radial", "relu_radial", "linear_quadratic", "relu_quadratic")

FIELDS_BY_MODEL = {
    "linear_radial": ("r",),
    "relu_radial": ("r_plus", "r_minus", "k"),
    "linear_quadratic": ("eps",),
    "relu_quadratic": ("plus", "minus", "k"),
}


@dataclass
class RingState:
    """Per-site field values of one ring configuration."""

    model: str
    values: dict

    def __post_init__(self):
        if self.model not in MODELS:
            raise InvalidField("model", f"unknown model {self.model!r}")
        expected = FIELDS_BY_MODEL[self.model]
        if tuple(self.values) != expected:
            raise InvalidField(
                "values", f"model {self.model} needs fields {expected}, got {tuple(self.values)}"
            )
        lengths = {name: len(v) for name, v in self.values.items()}
        if len(set(lengths.values())) != 1:
            raise InvalidField("values", f"field lengths differ: {lengths}")
        self.values = {name: np.asarray(v, dtype=float) for name, v in self.values.items()}

    @property
    def length(self) -> int:
        return len(next(iter(self.values.values())))

    def copy(self) -> "RingState":
        return RingState(self.model, {k: v.copy() for k, v in self.values.items()})


def validate_state(state: RingState, config: EnsembleConfig) -> None:
    """Enforce the domain constraints of the state's model tag."""
    v = state.values
    if state.model == "linear_radial":
        if np.any(v["r"] <= 0):
            raise DomainViolation("linear_radial requires r > 0 at every site")
    elif state.model == "relu_radial":
        if np.any(v["r_plus"] <= 0) or np.any(v["r_minus"] <= 0):
            raise DomainViolation("relu_radial requires r_plus, r_minus > 0")
        if np.any(v["k"] <= 0) or np.any(v["k"] >= config.width):
            raise DomainViolation(
                f"relu_radial requires 0 < k < {config.width} at every site"
            )


def uniform_state(model: str, length: int, config: EnsembleConfig) -> RingState:
    """Uniform ring at the model's saddle (zeros for the quadratic models)."""
    n, w2, b2 = config.width, config.weight_variance, config.bias_variance
    if model == "linear_radial":
        r = linear_saddle(n, w2, b2)
        return RingState(model, {"r": np.full(length, r)})
    if model == "relu_radial":
        saddle = relu_saddle(n, w2, b2)
        return RingState(
            model,
            {
                "r_plus": np.full(length, saddle.r_plus),
                "r_minus": np.full(length, saddle.r_minus),
                "k": np.full(length, saddle.k),
            },
        )
    if model in ("linear_quadratic", "relu_quadratic"):
        if model == "linear_quadratic" and w2 >= 1:
            raise Supercritical(w2, 1.0)
        if model == "relu_quadratic" and w2 >= 2:
            raise Supercritical(w2, 2.0)
        return RingState(
            model, {name: np.zeros(length) for name in FIELDS_BY_MODEL[model]}
        )
    raise InvalidField("model", f"unknown model {model!r}")


def _gain(r_sq: np.ndarray, config: EnsembleConfig) -> np.ndarray:
    # per-site conditional variance sigma_w^2 r^2 / N + sigma_b^2
    return config.weight_variance * r_sq / config.width + config.bias_variance


def ring_energy(state: RingState, config: EnsembleConfig) -> float:
    """Total energy of a ring configuration under its model tag."""
    validate_state(state, config)
    n, w2, b2 = config.width, config.weight_variance, config.bias_variance
    v = state.values
    # non-finite results raise NonFiniteEnergy below, not a numpy warning
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if state.model == "linear_radial":
            r = v["r"]
            r_sq = r * r
            gain_prev = _gain(np.roll(r_sq, 1), config)
            energy = 0.5 * np.sum(
                r_sq / gain_prev - n * np.log(r_sq / _gain(r_sq, config))
            )
        elif state.model == "relu_radial":
            rp, rm, k = v["r_plus"], v["r_minus"], v["k"]
            rp_sq, rm_sq = rp * rp, rm * rm
            gain_prev = _gain(np.roll(rp_sq, 1), config)
            # k counts positive components, so it pairs with r_plus
            energy = 0.5 * np.sum(
                (rp_sq + rm_sq) / gain_prev
                + n * np.log(_gain(rp_sq, config))
                + k * (3.0 * np.log(k) - 2.0 * np.log(rp))
                + (n - k) * (3.0 * np.log(n - k) - 2.0 * np.log(rm))
            )
        elif state.model == "linear_quadratic":
            eps = v["eps"]
            delta = 1.0 - w2
            energy = (delta / b2) * np.sum(
                (1.0 + w2**2) * eps * eps - 2.0 * w2 * eps * np.roll(eps, 1)
            )
        else:  # relu_quadratic
            a, b, c = v["plus"], v["minus"], v["k"]
            energy = 0.5 * np.sum(
                (1.0 + w2**2 / 2.0) * a * a
                + b * b
                + 6.0 * c * c
                - 2.0 * c * (a - b)
                - w2 * np.roll(a, 1) * (a + b)
            )
    energy = float(energy)
    if not np.isfinite(energy):
        raise NonFiniteEnergy(f"{state.model} energy evaluated to {energy}")
    return energy


# ---------------------------------------------------------------------------
# Site-local energies for single-site Metropolis updates. Each returns, for
# the given sites, every energy term that depends on that site's fields
# (its own term plus the coupling term it feeds into); constant terms are
# dropped since only differences matter.


def _local_linear_radial(r_prev, r_site, r_next, config):
    n = config.width
    r_sq = r_site * r_site
    with np.errstate(divide="ignore", invalid="ignore"):
        own = r_sq / _gain(r_prev * r_prev, config) - n * np.log(
            r_sq / _gain(r_sq, config)
        )
        feed = (r_next * r_next) / _gain(r_sq, config)
    return 0.5 * (own + feed)


def _local_relu_radial(fields_prev, fields_site, fields_next, config):
    n = config.width
    rp_prev = fields_prev[0]
    rp, rm, k = fields_site
    rp_next, rm_next = fields_next[0], fields_next[1]
    rp_sq, rm_sq = rp * rp, rm * rm
    with np.errstate(divide="ignore", invalid="ignore"):
        own = (
            (rp_sq + rm_sq) / _gain(rp_prev * rp_prev, config)
            + n * np.log(_gain(rp_sq, config))
            + k * (3.0 * np.log(k) - 2.0 * np.log(rp))
            + (n - k) * (3.0 * np.log(n - k) - 2.0 * np.log(rm))
        )
        feed = (rp_next * rp_next + rm_next * rm_next) / _gain(rp_sq, config)
    return 0.5 * (own + feed)


def _local_linear_quadratic(e_prev, e_site, e_next, config):
    w2 = config.weight_variance
    delta = 1.0 - w2
    return (delta / config.bias_variance) * e_site * (
        (1.0 + w2**2) * e_site - 2.0 * w2 * (e_prev + e_next)
    )


def _local_relu_quadratic(fields_prev, fields_site, fields_next, config):
    w2 = config.weight_variance
    a_prev = fields_prev[0]
    a, b, c = fields_site
    a_next, b_next = fields_next[0], fields_next[1]
    return 0.5 * (
        (1.0 + w2**2 / 2.0) * a * a
        + b * b
        + 6.0 * c * c
        - 2.0 * c * (a - b)
        - w2 * a_prev * (a + b)
        - w2 * a * (a_next + b_next)
    )


def _local_energy(model, fields_prev, fields_site, fields_next, config):
    if model == "linear_radial":
        return _local_linear_radial(fields_prev[0], fields_site[0], fields_next[0], config)
    if model == "relu_radial":
        return _local_relu_radial(fields_prev, fields_site, fields_next, config)
    if model == "linear_quadratic":
        return _local_linear_quadratic(fields_prev[0], fields_site[0], fields_next[0], config)
    return _local_relu_quadratic(fields_prev, fields_site, fields_next, config)


def _reflect(values, field_name, model, config):
    """Fold proposals back into the field's domain (symmetric proposal kept)."""
    if model == "linear_radial" or (
        model == "relu_radial" and field_name in ("r_plus", "r_minus")
    ):
        return np.abs(values)
    if model == "relu_radial" and field_name == "k":
        n = float(config.width)
        folded = np.mod(values, 2.0 * n)
        return np.where(folded > n, 2.0 * n - folded, folded)
    return values


_DEFAULT_ADAPT_INTERVAL = 200
_ACCEPT_BAND = (0.3, 0.5)


def _initial_widths(model, config):
    w2, b2 = config.weight_variance, config.bias_variance
    if model in ("linear_radial", "linear_quadratic"):
        # stationary per-site sd of the quadratic model, if defined
        if w2 < 1:
            sd = np.sqrt(b2 / (2.0 * (1.0 - w2) * (1.0 - w2**2)))
        else:
            sd = np.sqrt(b2)
        name = FIELDS_BY_MODEL[model][0]
        return {name: 2.4 * sd}
    if model == "relu_radial":
        sd = np.sqrt(b2 / (2.0 * max(1.0 - w2 / 2.0, 0.05)))
        return {
            "r_plus": 2.4 * sd,
            "r_minus": 2.4 * sd,
            "k": 1.2 * np.sqrt(config.width),
        }
    return {"plus": 1.5, "minus": 1.5, "k": 0.8}


@dataclass
class MetropolisResult:
    """Thinned post-burn-in samples of one ring chain plus run diagnostics.

    samples maps each field to an array of shape (n_samples, L); sample i
    was recorded at sweep burn_in + (i+1)*thin. acceptance holds post-warmup
    acceptance rates per field; proposal_width the frozen widths.
    """

    model: str
    samples: dict
    acceptance: dict
    proposal_width: dict
    sweeps: int
    burn_in: int
    thin: int
    seed: int
    energy: np.ndarray

    @property
    def n_samples(self) -> int:
        return len(self.energy)


def metropolis_run(
    config: EnsembleConfig,
    model: str,
    init: RingState | None = None,
    length: int = 64,
    sweeps: int = 120_000,
    burn_in: int = 10_000,
    thin: int = 10,
    proposal_width: dict | None = None,
    seed: int = 0,
    adapt_interval: int = _DEFAULT_ADAPT_INTERVAL,
) -> MetropolisResult:
    """Single-site Metropolis on a ring energy.

    One sweep proposes a Gaussian move at every site of every field, sites
    updated in even/odd blocks for even ring lengths (sequentially for odd),
    with rejection by min(1, exp(-dE)). Constrained fields reflect at their
    domain boundaries, which keeps the proposal symmetric. Widths adapt
    toward acceptance 0.3-0.5 during burn-in only and are frozen afterward.
    Deterministic for a given seed.
    """
    if model not in MODELS:
        raise InvalidField("model", f"unknown model {model!r}")
    if sweeps <= burn_in:
        raise InvalidField("sweeps", f"sweeps ({sweeps}) must exceed burn_in ({burn_in})")
    if thin < 1:
        raise InvalidField("thin", f"must be >= 1, got {thin}")

    state = init.copy() if init is not None else uniform_state(model, length, config)
    validate_state(state, config)
    ring_energy(state, config)  # raises NonFiniteEnergy on a bad start
    length = state.length
    field_names = FIELDS_BY_MODEL[model]
    widths = dict(_initial_widths(model, config))
    if proposal_width is not None:
        widths.update(proposal_width)

    rng = np.random.Generator(np.random.PCG64(seed))
    if length % 2 == 0:
        blocks = [np.arange(0, length, 2), np.arange(1, length, 2)]
    else:
        blocks = [np.array([i]) for i in range(length)]
    prev_idx = [(idx - 1) % length for idx in blocks]
    next_idx = [(idx + 1) % length for idx in blocks]

    accepted = {name: 0 for name in field_names}
    proposed = {name: 0 for name in field_names}
    window_acc = {name: 0 for name in field_names}
    window_prop = {name: 0 for name in field_names}
    samples: dict = {name: [] for name in field_names}
    energies = []

    for sweep in range(sweeps):
        warming = sweep < burn_in
        for block, prev, nxt in zip(blocks, prev_idx, next_idx):
            for name in field_names:
                current = state.values[name][block]
                move = widths[name] * rng.standard_normal(len(block))
                candidate = _reflect(current + move, name, model, config)

                site_old = [state.values[f][block] for f in field_names]
                site_new = [
                    candidate if f == name else state.values[f][block]
                    for f in field_names
                ]
                fields_prev = [state.values[f][prev] for f in field_names]
                fields_next = [state.values[f][nxt] for f in field_names]

                # NaN deltas compare False below, so bad proposals are
                # rejected without special-casing.
                with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                    delta = _local_energy(model, fields_prev, site_new, fields_next, config) \
                        - _local_energy(model, fields_prev, site_old, fields_next, config)
                    accept = rng.random(len(block)) < np.exp(-delta)
                state.values[name][block[accept]] = candidate[accept]
                n_acc = int(np.count_nonzero(accept))
                if warming:
                    window_acc[name] += n_acc
                    window_prop[name] += len(block)
                else:
                    accepted[name] += n_acc
                    proposed[name] += len(block)

        if warming and adapt_interval and (sweep + 1) % adapt_interval == 0:
            for name in field_names:
                if window_prop[name] == 0:
                    continue
                rate = window_acc[name] / window_prop[name]
                if rate < _ACCEPT_BAND[0]:
                    widths[name] *= 0.8
                elif rate > _ACCEPT_BAND[1]:
                    widths[name] *= 1.25
                window_acc[name] = 0
                window_prop[name] = 0
        if not warming and (sweep + 1 - burn_in) % thin == 0:
            for name in field_names:
                samples[name].append(state.values[name].copy())
            energies.append(ring_energy(state, config))

    acceptance = {
        name: accepted[name] / proposed[name] if proposed[name] else 0.0
        for name in field_names
    }
    return MetropolisResult(
        model=model,
        samples={name: np.array(rows) for name, rows in samples.items()},
        acceptance=acceptance,
        proposal_width=widths,
        sweeps=sweeps,
        burn_in=burn_in,
        thin=thin,
        seed=seed,
        energy=np.array(energies),
    )


def integrated_autocorrelation(
    series: np.ndarray, window_factor: float = 5.0, min_samples: int = 1000
) -> float:
    """Windowed estimate of the integrated autocorrelation time.

    tau_int = 1/2 + sum_{t=1}^{W} rho(t), with the self-consistent window
    W chosen as the smallest lag satisfying W >= window_factor * tau_int(W)
    (Madras-Sokal). An i.i.d. series gives 0.5; effective sample size is
    n / (2 tau_int).
    """
    series = np.asarray(series, dtype=float)
    n = len(series)
    if n < min_samples:
        raise SeriesTooShort(f"need >= {min_samples} samples, got {n}")
    centered = series - series.mean()
    # autocovariance via FFT, O(n log n)
    padded = np.fft.rfft(centered, 2 * n)
    acov = np.fft.irfft(padded * np.conj(padded))[:n] / n
    if acov[0] <= 0:
        return 0.5  # constant series: no fluctuations to correlate
    rho = acov / acov[0]
    tau = 0.5
    max_lag = n // 2
    for lag in range(1, max_lag):
        tau += rho[lag]
        if lag >= window_factor * tau:
            return float(max(tau, 0.5))
    return float(max(tau, 0.5))


def effective_sample_size(series: np.ndarray, **kwargs) -> float:
    return len(series) / (2.0 * integrated_autocorrelation(series, **kwargs))


def write_mcmc_csv(result: MetropolisResult, path) -> None:
    """Sample dump, one row per (recorded sweep, site, field)."""
    lines = ["sweep,site,field,value"]
    for i in range(result.n_samples):
        sweep = result.burn_in + (i + 1) * result.thin
        for name, rows in result.samples.items():
            for site, value in enumerate(rows[i]):
                lines.append(f"{sweep},{site},{name},{'%.17g' % value}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_mcmc_summary(result: MetropolisResult, path) -> None:
    """JSON run summary: acceptance, frozen widths, and per-field tau_int.

    tau_int is measured on the series of each field's spatial mean, the
    slowest observable of these ferromagnetically coupled rings, so the
    reported effective sample size is conservative.
    """
    tau = {}
    ess = {}
    for name, rows in result.samples.items():
        mean_series = rows.mean(axis=1)
        try:
            tau[name] = integrated_autocorrelation(mean_series)
            ess[name] = len(mean_series) / (2.0 * tau[name])
        except SeriesTooShort:
            tau[name] = None
            ess[name] = None
    summary = {
        "model": result.model,
        "sweeps": result.sweeps,
        "burn_in": result.burn_in,
        "thin": result.thin,
        "seed": result.seed,
        "n_samples": result.n_samples,
        "acceptance": result.acceptance,
        "proposal_width": result.proposal_width,
        "tau_int": tau,
        "effective_samples": ess,
        "energy_mean": float(result.energy.mean()) if result.n_samples else None,
    }
    Path(path).write_text(json.dumps(summary, indent=2) + "\n")
