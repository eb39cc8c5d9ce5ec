"""Vectorized adaptive quadrature.

Each interval is integrated with an n-point Gauss-Legendre rule on the whole
interval and on its two halves; the difference is the error estimate.
Intervals are bisected until the summed estimate meets the tolerance.  All
nodes of all active intervals are evaluated in a single call, so the
integrand must accept an array ``x`` of shape ``(m, n)`` and return either
the same shape or ``(m, n, k)`` for a vector of ``k`` integrals.  Vector
integrands are converged in the max norm.

Infinite segments are mapped to finite ones with ``x = a + u/(1-u)`` style
substitutions.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import QuadratureError

_ORDER = 10
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(_ORDER)


def _segment_map(a, b, scale=1.0):
    """Return ``(lo, hi, x(u), dx/du)`` mapping a finite u-interval onto [a, b].

    ``scale`` is the length over which an infinite segment's integrand
    varies; it keeps the mapped integrand smooth in ``u``.
    """
    L = scale
    if math.isfinite(a) and math.isfinite(b):
        return a, b, (lambda u: u), (lambda u: np.ones_like(u))
    if math.isfinite(a):
        return 0.0, 1.0, (lambda u: a + L * u / (1.0 - u)), (lambda u: L / (1.0 - u) ** 2)
    if math.isfinite(b):
        return 0.0, 1.0, (lambda u: b - L * (1.0 - u) / u), (lambda u: L / (u * u))
    return (-1.0, 1.0, (lambda u: L * u / (1.0 - u * u)),
            (lambda u: L * (1.0 + u * u) / (1.0 - u * u) ** 2))


def _gauss(func, lo, hi):
    """Gauss-Legendre estimates on the rows of (lo, hi); shape (m,) or (m, k)."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    u = mid[:, None] + half[:, None] * _NODES[None, :]
    values = np.tensordot(func(u), _WEIGHTS, axes=([1], [0]))
    return half.reshape((-1,) + (1,) * (values.ndim - 1)) * values


def _norm(values):
    """Per-interval max norm over the trailing (vector) axis."""
    values = np.abs(values)
    return values.max(axis=1) if values.ndim > 1 else values


def integrate(func, a, b, breakpoints=(), epsrel=1e-8, epsabs=1e-14, max_intervals=20000):
    """Integrate a vectorized ``func`` over ``[a, b]``.

    ``breakpoints`` inside ``(a, b)`` split the range into separate segments
    before refinement; all finite segments are refined together against a
    shared tolerance.  Raises :class:`QuadratureError` when the interval
    budget is exhausted before the tolerance is met.
    """
    if a > b:
        return -integrate(func, b, a, breakpoints, epsrel, epsabs, max_intervals)
    cuts = sorted({float(p) for p in breakpoints if a < p < b and math.isfinite(p)})
    edges = [a, *cuts, b]
    total = 0.0
    if a == b:
        return total
    finite = [(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])
              if math.isfinite(lo) and math.isfinite(hi)]
    if finite:
        lo, hi = (np.array(v, dtype=float) for v in zip(*finite))
        total += _refine(func, lo, hi, epsrel, epsabs, max_intervals, (a, b))
    # tails are held to the bulk's accuracy, not to their own (small) size
    tail_abs = max(epsabs, 0.1 * epsrel * float(np.max(np.abs(total))))
    finite_edges = [e for e in edges if math.isfinite(e)]
    scale = max(1.0, finite_edges[-1] - finite_edges[0]) if finite_edges else 1.0
    for lo_x, hi_x in zip(edges[:-1], edges[1:]):
        if not (math.isfinite(lo_x) and math.isfinite(hi_x)):
            u0, u1, xmap, jac = _segment_map(lo_x, hi_x, scale)
            total += _refine(_mapped(func, xmap, jac), np.array([u0]), np.array([u1]),
                             epsrel, tail_abs, max_intervals, (lo_x, hi_x))
    return total


def _mapped(func, xmap, jac):
    def g(u):
        values = func(xmap(u))
        j = jac(u)
        return values * j.reshape(j.shape + (1,) * (values.ndim - j.ndim))
    return g


def _refine(g, lo, hi, epsrel, epsabs, max_intervals, label):
    whole = _gauss(g, lo, hi)
    done_value = 0.0
    done_err = 0.0
    n_intervals = len(lo)
    while True:
        mid = 0.5 * (lo + hi)
        left = _gauss(g, lo, mid)
        right = _gauss(g, mid, hi)
        halves = left + right
        errors = _norm(halves - whole)
        estimate = done_value + halves.sum(axis=0)
        tol = max(epsabs, epsrel * float(np.max(np.abs(estimate))))
        if done_err + errors.sum() <= tol:
            return estimate
        # accept intervals whose error is already negligible, refine the rest
        share = tol / (4.0 * len(errors))
        keep = errors <= share
        done_value += halves[keep].sum(axis=0)
        done_err += errors[keep].sum()
        refine = ~keep
        n_intervals += int(refine.sum())
        if n_intervals > max_intervals or not np.all(np.isfinite(halves)):
            raise QuadratureError(f"adaptive quadrature over {label} did not converge",
                                  float(done_err + errors.sum()))
        lo = np.concatenate([lo[refine], mid[refine]])
        hi = np.concatenate([mid[refine], hi[refine]])
        whole = np.concatenate([left[refine], right[refine]])
