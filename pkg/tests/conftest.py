"""Shared corpus builders for the randomized suites."""

import numpy as np
import pytest

from weakgordon import measure as me


def random_measure(
    rng,
    window=(-6.0, 6.0),
    max_atoms=8,
    max_segments=2,
    complex_weights=False,
    density_degree=1,
    max_weight=0.8,
    unif_cap=None,
):
    """Random atoms + low-degree density segments inside the window."""
    lo, hi = window
    n = int(rng.integers(1, max_atoms + 1))
    margin = 0.05 * (hi - lo)
    xs = rng.uniform(lo + margin, hi - margin, n)
    if complex_weights:
        ws = rng.uniform(-max_weight, max_weight, n) + 1j * rng.uniform(
            -max_weight, max_weight, n
        )
    else:
        ws = rng.uniform(-max_weight, max_weight, n)
    atoms = [(float(x), complex(w)) for x, w in zip(xs, ws)]

    segments = []
    k = int(rng.integers(0, max_segments + 1))
    if k:
        cuts = np.sort(rng.uniform(lo + margin, hi - margin, 2 * k))
        for i in range(k):
            a, b = float(cuts[2 * i]), float(cuts[2 * i + 1])
            if b - a < 1e-3:
                continue
            deg = int(rng.integers(0, density_degree + 1))
            coeffs = tuple(float(c) for c in rng.uniform(-0.5, 0.5, deg + 1))
            segments.append((a, b, coeffs))
    mu = me.make_measure(atoms, segments, window)
    if mu.is_zero():
        mu = me.dirac(0.5 * (lo + hi), 0.5, window)
    if unif_cap is not None:
        nrm = me.norm_unif(mu)
        if nrm > unif_cap:
            s = unif_cap / nrm
            mu = me.make_measure(
                [(x, w * s) for x, w in mu.atoms],
                [
                    (sg.start, sg.end, tuple(c * s for c in sg.coeffs))
                    for sg in mu.segments
                ],
                window,
            )
    return mu


def random_periodic(rng, period=None, max_atoms=3):
    p = float(period) if period is not None else float(rng.uniform(1.5, 4.0))
    n = int(rng.integers(1, max_atoms + 1))
    xs = rng.uniform(0.0, p * 0.999, n)
    ws = rng.uniform(-1.0, 1.0, n)
    base = me.make_measure(
        [(float(x), float(w)) for x, w in zip(xs, ws)], (), (0.0, p)
    )
    return me.PeriodicMeasure(base, p)


def random_affine_test_function(rng, support_center, diam=2.0, n_kinks=3):
    """Admissible test function: support diameter <= diam, slopes <= 1."""
    left = support_center - diam / 2.0
    inner = np.sort(rng.uniform(0.05, diam - 0.05, n_kinks))
    xs = np.concatenate([[0.0], inner, [diam]])
    ys = [0.0]
    for dx in np.diff(xs):
        slope = rng.uniform(-1.0, 1.0)
        ys.append(ys[-1] + slope * dx)
    ys = np.asarray(ys)
    ys = ys - ys[-1] * xs / diam  # close the support
    slopes = np.abs(np.diff(ys) / np.diff(xs))
    cap = max(1.0, float(np.max(slopes)))
    return me.PiecewiseAffine(tuple(left + xs), tuple(ys / cap))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
