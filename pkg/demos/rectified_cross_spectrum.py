"""Joint mode statistics of the rectified fields (r+, r-, k).

The three fluctuation fields of a ReLU network are correlated mode by mode,
and the predicted 3x3 covariance has a rigid sign structure: a surplus of
positive components comes with a larger positive half-norm and a smaller
negative one, so at every wavevector Cov(plus, k) > 0 and Cov(minus, k) < 0,
while the two half-norms are positively correlated through the shared
layer-to-layer gain. This script measures the cross-spectrum of one
ensemble, prints the full matrix at the longest mode next to the
prediction, and then counts sign agreements over every mode where the
predicted component is resolvable above the measurement noise.
"""

import argparse

import numpy as np

from netlattice import (
    EnsembleConfig,
    ensemble_modes,
    estimate_cross_spectrum,
    relu_covariance,
    run_ensemble,
)
from netlattice.theory import FIELD_ORDER


def show_matrix(label, m):
    print(label)
    for a, name in enumerate(FIELD_ORDER):
        cells = "  ".join(f"{m[a, b].real:+.3e}{m[a, b].imag:+.1e}j" for b in range(3))
        print(f"  {name:>5}  {cells}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--weight-variance", type=float, default=0.98)
    ap.add_argument("--full", action="store_true", help="acceptance-test scale")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    wv = args.weight_variance

    if args.full:
        config = EnsembleConfig(
            weight_variance=wv, activation="relu", master_seed=24_000
        )
    else:
        config = EnsembleConfig(
            width=120,
            depth=384,
            weight_variance=wv,
            activation="relu",
            num_samples=80,
            window_start=128,
            window_len=256,
            master_seed=24_000,
        )
    print(f"weight variance {wv:g}, {config.num_samples} samples, "
          f"window length {config.window_len}")
    result = run_ensemble(config, workers=args.workers)
    est = estimate_cross_spectrum(
        ensemble_modes(result), fingerprint=config.fingerprint()
    )

    mask = (est.q > 0) & (est.q <= np.pi)
    q = est.q[mask]
    predicted = relu_covariance(q, wv, config.window_len)
    measured, stderr = est.covariance[mask], est.stderr[mask]

    i = int(np.argmin(q))
    print(f"\nat q = {q[i]:.4f} (longest mode in the window):")
    show_matrix("predicted:", predicted[i])
    show_matrix("measured:", measured[i])

    agree = total = 0
    for a, b in ((0, 1), (0, 2), (1, 2)):
        for take in (np.real, np.imag):
            th, ms = take(predicted[:, a, b]), take(measured[:, a, b])
            ok = np.abs(th) > 2.0 * stderr[:, a, b]
            total += int(ok.sum())
            agree += int((np.sign(ms[ok]) == np.sign(th[ok])).sum())
    print(f"\noff-diagonal sign agreement: {agree}/{total} resolvable components")

    rel = [
        float(np.median(np.abs(measured[:, a, a].real / predicted[:, a, a].real - 1.0)))
        for a in range(3)
    ]
    print("median relative deviation of the diagonals "
          + ", ".join(f"{n}: {r:.3f}" for n, r in zip(FIELD_ORDER, rel)))


if __name__ == "__main__":
    main()
