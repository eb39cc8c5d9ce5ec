"""Renormalized form factor, sum rule and decay rates.

The detector broadens every detected photon mode into a Lorentzian of
half-width ``pi*eta(k)``.  The atom therefore sees the effective coupling
density

    |g_mu|^2 = int dk eta(k) J_d(k) / ((mu - k)^2 + pi^2 eta(k)^2) + J_u(mu)

and decays at ``2*pi*|g_{omega0}|^2`` to lowest order.  The free rate is
``2*pi*(J_d + J_u)(omega0)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .errors import ParameterError
from .io import format_csv
from .model import DecayRateResult, LorentzianModel, SpectralModel, lorentzian_to_spectral

EPSREL = 1e-8
EPSABS = 1e-14

#: Kernels narrower than this fraction of the support width are replaced by
#: their delta-function limit; the relative error is about pi*eta/width.
NARROW_KERNEL = 1e-12


def _kernel_width(s: SpectralModel, mu):
    # the kernel width is set by eta(k) for k near mu, and eta is only
    # meaningful on the support
    return math.pi * float(s.eta(min(max(mu, s.support[0]), s.support[1])))


def _kernel_points(s: SpectralModel, mu):
    # geometric shells around the kernel peak out to the support size
    width = _kernel_width(s, mu)
    span = s.support[1] - s.support[0]
    pts = [mu, *s.hints]
    c = width
    while width > 0 and c < span:
        pts += [mu - c, mu + c]
        c *= 10.0
    return pts


def renormalized_form_factor(s: SpectralModel, mu):
    """Return ``|g_mu|^2`` for a scalar mode energy ``mu``."""
    mu = float(mu)
    ju = float(s.ju(mu))
    lo, hi = s.support
    if s.unmeasured or _kernel_width(s, mu) < NARROW_KERNEL * (hi - lo):
        return float(s.jd(mu)) + ju

    def integrand(k):
        eta = s.eta(k)
        d = mu - k
        return eta * s.detected_density(k) / (d * d + (math.pi * eta) ** 2)

    return float(_integrate_support(s, integrand, _kernel_points(s, mu))) + ju


@dataclass(frozen=True)
class FormFactorCurve:
    mu: np.ndarray
    g2: np.ndarray

    def to_csv(self, meta=None, trailer=None):
        return format_csv(("mu", "g2"), zip(self.mu, self.g2), meta=meta, trailer=trailer)


def form_factor_curve(s: SpectralModel, mu) -> FormFactorCurve:
    mu = np.asarray(mu, dtype=float)
    g2 = np.array([renormalized_form_factor(s, m) for m in mu])
    return FormFactorCurve(mu, g2)


def _integrate(func, a, b, points=()):
    return quadrature.integrate(func, a, b, points, epsrel=EPSREL, epsabs=EPSABS)


def _integrate_support(s: SpectralModel, func, points=()):
    lo, hi = s.support
    if s.tails:
        return _integrate(func, -math.inf, math.inf, [lo, hi, *points])
    return _integrate(func, lo, hi, points)


def _padded_edges(s: SpectralModel, mu):
    """Per-mu sorted breakpoints, padded to a common count with repeats."""
    lo, hi = s.support
    rows = []
    for m in mu:
        pts = {lo, hi, *(p for p in _kernel_points(s, m) if s.tails or lo <= p <= hi)}
        rows.append(sorted(pts))
    n = max(len(r) for r in rows)
    return np.array([r + [r[-1]] * (n - len(r)) for r in rows])


def _form_factor_batch(s: SpectralModel, mu):
    """:func:`renormalized_form_factor` for many ``mu`` in one vector quadrature.

    Each ``mu`` has its own breakpoints.  A common variable ``u`` in
    ``[0, n]`` is mapped piecewise linearly onto every ``mu``'s segments, so
    the integers are shared breakpoints; infinite tails use ``u/(1-u)``.
    Convergence is in the max norm over the batch, which suits integrals of
    the curve rather than pointwise values far down its tails.
    """
    mu = np.asarray(mu, dtype=float)
    out = np.asarray(s.jd(mu), dtype=float) + np.asarray(s.ju(mu), dtype=float)
    if s.unmeasured or mu.size == 0:
        return out
    lo, hi = s.support
    width = math.pi * np.asarray(s.eta(np.clip(mu, lo, hi)), dtype=float) * np.ones_like(mu)
    wide = width >= NARROW_KERNEL * (hi - lo)
    if not np.any(wide):
        return out
    m = mu[wide]
    edges = _padded_edges(s, m)
    n = edges.shape[1] - 1

    def kernel(k):
        eta = s.eta(k)
        d = m - k
        return eta * s.detected_density(k) / (d * d + (math.pi * eta) ** 2)

    def body(u):
        j = np.clip(np.floor(u).astype(int), 0, n - 1)
        a, b = edges[:, j], edges[:, j + 1]                     # (len(m), ...)
        k = np.moveaxis(a + (u - j) * (b - a), 0, -1)
        return kernel(k) * np.moveaxis(b - a, 0, -1)

    smeared = _integrate(body, 0.0, float(n), range(1, n))
    if s.tails:
        scale = edges[:, -1] - edges[:, 0]

        def left(u):
            k = edges[:, 0] - np.multiply.outer(u / (1.0 - u), scale)
            return kernel(k) * np.multiply.outer(1.0 / (1.0 - u) ** 2, scale)

        def right(u):
            k = edges[:, -1] + np.multiply.outer(u / (1.0 - u), scale)
            return kernel(k) * np.multiply.outer(1.0 / (1.0 - u) ** 2, scale)

        smeared = smeared + _integrate(left, 0.0, 1.0) + _integrate(right, 0.0, 1.0)
    out[wide] = smeared + np.asarray(s.ju(m), dtype=float)
    return out


def sum_rule_check(s: SpectralModel):
    """Compare the weight of the renormalized and bare form factors.

    Returns ``(lhs, rhs, rel_err)`` with ``lhs = int |g_mu|^2 dmu`` and
    ``rhs = int (J_d + J_u) dk``, both by adaptive quadrature.
    """
    lo, hi = s.support
    pts = [lo, hi, *s.hints, s.omega0]

    def bare(k):
        return s.jd(k) + s.ju(k)

    def g2(mu):
        return _form_factor_batch(s, mu.ravel()).reshape(mu.shape)

    rhs = _integrate_support(s, bare, pts)
    if s.unmeasured:
        lhs = _integrate_support(s, g2, pts)
    else:
        # the kernel spreads weight beyond the support, so mu runs over the whole line
        lhs = _integrate(g2, -math.inf, math.inf, pts)
    return lhs, rhs, abs(lhs - rhs) / rhs


def free_rate(s: SpectralModel):
    """``2*pi*(J_d + J_u)`` at the transition energy."""
    if not s.contains(s.omega0):
        raise ParameterError(
            f"omega0={s.omega0} lies outside the support {s.support}; free decay is undefined")
    return 2.0 * math.pi * float(s.jd(s.omega0) + s.ju(s.omega0))


def measured_rate_general(s: SpectralModel) -> DecayRateResult:
    gamma0 = free_rate(s)
    if gamma0 <= 0:
        raise ParameterError("no spectral weight at omega0; the free rate vanishes")
    gamma = 2.0 * math.pi * renormalized_form_factor(s, s.omega0)
    return DecayRateResult.from_rates(gamma0, gamma)


def lorentzian_rate(detuning, delta, eta, eps_inf, gamma=1.0):
    """Closed-form measured rate for the Lorentzian example (numpy-vectorized)."""
    detuning = np.asarray(detuning, dtype=float)
    dt = delta + np.pi * np.asarray(eta, dtype=float)
    d2 = detuning * detuning
    return 2.0 * np.pi * gamma * ((1.0 - eps_inf) * delta * dt / (d2 + dt * dt)
                                  + eps_inf * delta * delta / (d2 + delta * delta))


def lorentzian_ratio(detuning, delta, eta, eps_inf):
    """``Gamma/Gamma_0`` for the Lorentzian example (numpy-vectorized)."""
    detuning = np.asarray(detuning, dtype=float)
    dt = delta + np.pi * np.asarray(eta, dtype=float)
    d2 = detuning * detuning
    detected = dt * (d2 + delta * delta) / (delta * (d2 + dt * dt))
    return eps_inf + (1.0 - eps_inf) * detected


def measured_rate_lorentzian(m: LorentzianModel) -> DecayRateResult:
    gamma = float(lorentzian_rate(m.detuning, m.delta, m.eta, m.eps_inf, m.gamma))
    return DecayRateResult.from_rates(m.free_rate, gamma)


def measured_rate_quadrature(m: LorentzianModel) -> DecayRateResult:
    """Measured rate of the Lorentzian model through the general quadrature path."""
    return measured_rate_general(lorentzian_to_spectral(m))
