"""Per-layer observables of a forward pass and their container types."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidField


@dataclass(frozen=True)
class LayerObservables:
    """Radial observables of one layer's pre-activation vector z.

    r is the Euclidean norm of z, r_plus the norm of the strictly positive
    entries, r_minus the norm of the rest, and k the count of strictly
    positive entries. By construction r^2 == r_plus^2 + r_minus^2 up to
    rounding.
    """

    r: float
    r_plus: float
    r_minus: float
    k: int


def compute_layer_observables(z: np.ndarray) -> LayerObservables:
    """Split z by sign and measure the radial observables.

    Entries equal to exactly zero count as non-positive: they contribute to
    r_minus (with zero weight) and are excluded from k. This tie-break is
    fixed so that k is reproducible bit-for-bit.
    """
    z = np.asarray(z, dtype=float)
    pos = z > 0
    r_plus = float(np.linalg.norm(z[pos]))
    r_minus = float(np.linalg.norm(z[~pos]))
    return LayerObservables(
        r=float(np.linalg.norm(z)),
        r_plus=r_plus,
        r_minus=r_minus,
        k=int(np.count_nonzero(pos)),
    )


@dataclass(frozen=True)
class Trajectory:
    """Layer-resolved observables of a single sampled network.

    The arrays all have length equal to the network depth; entry l holds the
    observables of layer l's pre-activation. config_fingerprint ties the
    trajectory back to the EnsembleConfig that produced it.
    """

    sample_index: int
    config_fingerprint: str
    r: np.ndarray
    r_plus: np.ndarray
    r_minus: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        n = len(self.r)
        for name in ("r_plus", "r_minus", "k"):
            if len(getattr(self, name)) != n:
                raise InvalidField(name, f"length {len(getattr(self, name))} != {n}")

    @property
    def depth(self) -> int:
        return len(self.r)

    def layer(self, index: int) -> LayerObservables:
        return LayerObservables(
            r=float(self.r[index]),
            r_plus=float(self.r_plus[index]),
            r_minus=float(self.r_minus[index]),
            k=int(self.k[index]),
        )
