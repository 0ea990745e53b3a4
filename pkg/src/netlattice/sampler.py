"""Monte-Carlo sampling of random deep networks.

Each ensemble member draws a fresh network: layer l applies
z_l = W_l phi(z_{l-1}) + b_l with W_l entries i.i.d. N(0, sigma_w^2 / N),
b_l entries i.i.d. N(0, sigma_b^2), and the input z_{-1} i.i.d. standard
normal. phi is applied uniformly, including to the input vector; the
analysis window starts deep enough that the input transient is irrelevant.

The draw order per sample is fixed and documented: input first, then per
layer the weight matrix (row-major) followed by the bias vector, all from
one numpy PCG64 stream seeded with the derived per-sample seed. This makes
every trajectory bit-reproducible for a given platform and numpy version.
"""

from __future__ import annotations

import concurrent.futures
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import EnsembleConfig, derive_sample_seed
from .errors import InvalidField, NumericOverflow
from .observables import Trajectory

_FLOAT_FMT = "%.17g"


def _phi(activation: str, z: np.ndarray) -> np.ndarray:
    if activation == "linear":
        return z
    if activation == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def sample_trajectory(
    config: EnsembleConfig, rng_seed: int, sample_index: int = 0
) -> Trajectory:
    """Run one forward pass and record per-layer radial observables.

    Raises NumericOverflow, carrying the layer index, as soon as any
    pre-activation entry is non-finite (deep supercritical linear networks
    overflow float64 within a few hundred layers).
    """
    n, depth = config.width, config.depth
    w_scale = np.sqrt(config.weight_variance / n)
    b_scale = np.sqrt(config.bias_variance)
    rng = np.random.Generator(np.random.PCG64(rng_seed))

    r = np.empty(depth)
    r_plus = np.empty(depth)
    r_minus = np.empty(depth)
    k = np.empty(depth, dtype=np.int64)

    z = rng.standard_normal(n)
    for layer in range(depth):
        w = rng.standard_normal((n, n))
        b = rng.standard_normal(n)
        # overflow is detected and reported, not a numpy warning condition
        with np.errstate(over="ignore", invalid="ignore"):
            z = w_scale * (w @ _phi(config.activation, z)) + b_scale * b
            sq = z * z
            pos = z > 0
            plus_sq = float(np.sum(sq[pos]))
            minus_sq = float(np.sum(sq[~pos]))
            total = plus_sq + minus_sq
        if not np.isfinite(total):
            raise NumericOverflow(layer)
        r[layer] = np.sqrt(total)
        r_plus[layer] = np.sqrt(plus_sq)
        r_minus[layer] = np.sqrt(minus_sq)
        k[layer] = np.count_nonzero(pos)

    return Trajectory(
        sample_index=sample_index,
        config_fingerprint=config.fingerprint(),
        r=r,
        r_plus=r_plus,
        r_minus=r_minus,
        k=k,
    )


@dataclass
class EnsembleResult:
    """All trajectories of one ensemble plus a record of failed samples.

    trajectories is sorted by sample_index and contains only the samples
    that completed; failures lists (sample_index, layer) pairs for members
    whose forward pass overflowed.
    """

    config: EnsembleConfig
    trajectories: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def n_ok(self) -> int:
        return len(self.trajectories)

    def field_matrix(self, name: str, window: bool = True) -> np.ndarray:
        """Stack one observable across samples: shape (n_ok, depth or window_len)."""
        if name not in ("r", "r_plus", "r_minus", "k"):
            raise InvalidField("name", f"unknown observable {name!r}")
        sl = self.config.window_slice if window else slice(None)
        return np.stack([getattr(t, name)[sl] for t in self.trajectories])


def _sample_one(args):
    config, index, seed = args
    try:
        return index, sample_trajectory(config, seed, sample_index=index), None
    except NumericOverflow as err:
        return index, None, err.layer


def run_ensemble(config: EnsembleConfig, workers: int = 1) -> EnsembleResult:
    """Sample all num_samples members of the ensemble.

    Per-sample seeds come from derive_sample_seed, so the result does not
    depend on execution order or on the worker count; with workers > 1 the
    samples are drawn in separate processes. Members that overflow are
    excluded from trajectories and recorded in failures.
    """
    if workers < 1:
        raise InvalidField("workers", f"must be >= 1, got {workers}")
    tasks = [
        (config, i, derive_sample_seed(config.master_seed, i))
        for i in range(config.num_samples)
    ]
    if workers == 1:
        outcomes = [_sample_one(t) for t in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sample_one, tasks))
    outcomes.sort(key=lambda item: item[0])

    result = EnsembleResult(config=config)
    for index, traj, overflow_layer in outcomes:
        if traj is None:
            result.failures.append((index, overflow_layer))
        else:
            result.trajectories.append(traj)
    return result


def write_trajectories_csv(result: EnsembleResult, path) -> None:
    """Dump every completed trajectory, one row per (sample, layer)."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample", "layer", "r", "r_plus", "r_minus", "k"])
        for traj in result.trajectories:
            for layer in range(traj.depth):
                writer.writerow(
                    [
                        traj.sample_index,
                        layer,
                        _FLOAT_FMT % traj.r[layer],
                        _FLOAT_FMT % traj.r_plus[layer],
                        _FLOAT_FMT % traj.r_minus[layer],
                        int(traj.k[layer]),
                    ]
                )


def read_trajectories_csv(path, config_fingerprint: str = "") -> list:
    """Read back a trajectory dump; inverse of write_trajectories_csv."""
    rows: dict = {}
    with Path(path).open(newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.setdefault(int(rec["sample"]), []).append(rec)
    trajectories = []
    for index in sorted(rows):
        recs = sorted(rows[index], key=lambda rec: int(rec["layer"]))
        trajectories.append(
            Trajectory(
                sample_index=index,
                config_fingerprint=config_fingerprint,
                r=np.array([float(rec["r"]) for rec in recs]),
                r_plus=np.array([float(rec["r_plus"]) for rec in recs]),
                r_minus=np.array([float(rec["r_minus"]) for rec in recs]),
                k=np.array([int(rec["k"]) for rec in recs], dtype=np.int64),
            )
        )
    return trajectories
