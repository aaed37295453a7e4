"""Low-degree polynomial helpers.

Polynomials are tuples of coefficients (c0, c1, ..., cn), low order first,
in a local variable x, so p(x) = sum c_k x^k.  Everything the measure layer
needs (evaluation, Taylor shifts, antiderivatives, root isolation, integrals
of |p|) stays closed-form for real coefficients; genuinely complex densities
fall back to adaptive quadrature.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

_REAL_EPS = 1e-14


def trim(coeffs):
    """Drop trailing (near-)zero leading coefficients; keep at least one."""
    c = list(coeffs)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return tuple(c)


def evaluate(coeffs, x):
    """Horner evaluation; x may be a scalar or ndarray."""
    acc = coeffs[-1]
    if isinstance(x, np.ndarray):
        dtype = complex if any(isinstance(c, complex) for c in coeffs) else float
        acc = np.full_like(x, acc, dtype=dtype)
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


def _is_complex(coeffs):
    return any(abs(getattr(c, "imag", 0.0)) > 0.0 for c in coeffs)


def is_real(coeffs, tol=0.0):
    return all(abs(getattr(c, "imag", 0.0)) <= tol for c in coeffs)


def to_real(coeffs):
    return tuple(float(getattr(c, "real", c)) for c in coeffs)


def add(a, b):
    n = max(len(a), len(b))
    return tuple(
        (a[k] if k < len(a) else 0) + (b[k] if k < len(b) else 0) for k in range(n)
    )


def negate(a):
    return tuple(-c for c in a)


def scale_coeffs(a, s):
    return tuple(c * s for c in a)


def multiply(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        for j, cb in enumerate(b):
            out[i + j] += ca * cb
    return tuple(out)


def shift_origin(coeffs, d):
    """Re-expand p(x) as q(y) with x = y + d, i.e. q(y) = p(y + d).

    Used when a segment's local origin moves from t0 to t0 + d.
    """
    n = len(coeffs)
    out = [0 * coeffs[0]] * n
    for k in range(n - 1, -1, -1):
        # Horner in (y + d): out <- out * (y + d) + c_k
        new = [0 * coeffs[0]] * n
        for j in range(n):
            if out[j] == 0:
                continue
            if j + 1 < n:
                new[j + 1] += out[j]
            new[j] += out[j] * d
        new[0] += coeffs[k]
        out = new
    return tuple(out)


def antiderivative(coeffs):
    return (0,) + tuple(c / (k + 1) for k, c in enumerate(coeffs))


def derivative(coeffs):
    if len(coeffs) == 1:
        return (0 * coeffs[0],)
    return tuple(c * k for k, c in enumerate(coeffs) if k >= 1)


def integral(coeffs, x0, x1):
    """Exact definite integral of p over [x0, x1] (local coordinates)."""
    F = antiderivative(coeffs)
    return evaluate(F, x1) - evaluate(F, x0)


def real_roots_in(coeffs, lo, hi, include_ends=False):
    """Real roots of a real-coefficient polynomial inside (lo, hi).

    Degrees 1 and 2 are closed-form; higher degrees go through the
    companion matrix (np.roots) with a small imaginary-part tolerance.
    """
    c = to_real(trim(coeffs))
    deg = len(c) - 1
    if deg == 0:
        return []
    scale = max(abs(v) for v in c)
    if scale == 0.0:
        return []
    if deg == 1:
        raw = [-c[0] / c[1]]
    elif deg == 2:
        a2, a1, a0 = c[2], c[1], c[0]
        disc = a1 * a1 - 4.0 * a2 * a0
        if disc < 0.0:
            raw = []
        elif disc == 0.0:
            raw = [-a1 / (2.0 * a2)]
        else:
            sq = math.sqrt(disc)
            q = -0.5 * (a1 + math.copysign(sq, a1))
            raw = [q / a2, a0 / q] if q != 0.0 else [0.0, -a1 / a2]
    else:
        rts = np.roots(list(reversed(c)))
        raw = [
            float(r.real)
            for r in rts
            if abs(r.imag) <= 1e-9 * max(1.0, abs(r.real))
        ]
    out = []
    for x in raw:
        if include_ends:
            if lo - 1e-15 <= x <= hi + 1e-15:
                out.append(min(max(x, lo), hi))
        elif lo < x < hi:
            out.append(x)
    out.sort()
    # collapse numerically coincident roots
    dedup = []
    for x in out:
        if not dedup or x - dedup[-1] > 1e-13 * max(1.0, abs(x)):
            dedup.append(x)
    return dedup


def integral_abs(coeffs, x0, x1, tol=1e-12):
    """Integral of |p(x)| over [x0, x1].

    Real coefficients: exact root splitting.  Complex coefficients: adaptive
    quadrature to `tol` (documented fallback; the modulus of a complex cubic
    has no closed-form antiderivative).
    """
    if x1 <= x0:
        return 0.0
    c = trim(coeffs)
    if is_real(c):
        cr = to_real(c)
        pts = [x0] + real_roots_in(cr, x0, x1) + [x1]
        total = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            if b <= a:
                continue
            total += abs(integral(cr, a, b))
        return total
    val, _err = quad(
        lambda x: abs(evaluate(c, x)), x0, x1, epsabs=tol, epsrel=tol, limit=200
    )
    return float(val)


def sup_abs_on(coeffs, x0, x1):
    """sup of |p| on [x0, x1]; exact via critical points for real p,
    critical points of |p|^2 otherwise."""
    c = trim(coeffs)
    if is_real(c):
        cr = to_real(c)
        xs = [x0, x1] + real_roots_in(derivative(cr), x0, x1)
        return max(abs(evaluate(cr, x)) for x in xs)
    # |p|^2 is a real polynomial; its critical points are real roots.
    re = to_real(tuple(getattr(v, "real", v) for v in c))
    im = to_real(tuple(getattr(v, "imag", 0.0) for v in c))
    sq = add(multiply(re, re), multiply(im, im))
    xs = [x0, x1] + real_roots_in(derivative(sq), x0, x1)
    return max(abs(evaluate(c, x)) for x in xs)


def hermite_cubic(x0, x1, f0, d0, f1, d1):
    """Cubic matching values/derivatives at both ends, coefficients in (x - x0)."""
    h = x1 - x0
    c0 = f0
    c1 = d0
    c2 = (3 * (f1 - f0) / h - 2 * d0 - d1) / h
    c3 = (2 * (f0 - f1) / h + d0 + d1) / (h * h)
    return (c0, c1, c2, c3)


def hermite_error_bound(h, f4_sup):
    """Sup-norm error of two-point Hermite cubic interpolation on a width-h
    cell for a C^4 function with |f''''| <= f4_sup."""
    return (h**4) / 384.0 * f4_sup


def as_complex(coeffs):
    return tuple(complex(c) for c in coeffs)


def companion_roots_batch(coeff_rows):
    """Real roots for a batch of same-length real coefficient rows.

    coeff_rows: ndarray (n, d+1), low order first.  Returns a list of sorted
    root lists.  Degenerate rows (zero leading coefficients) are handled by
    degree reduction per row.
    """
    results = []
    for row in np.asarray(coeff_rows, dtype=float):
        results.append(real_roots_in(tuple(row), -math.inf, math.inf))
    return results
