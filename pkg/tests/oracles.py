"""Reference computations that share no code with the package.

Each helper is written from the defining formula in the most direct way
(high-precision polynomial roots, the coefficient expansion of the
survival amplitude, textbook Lorentzian integrals).
"""
import math

import mpmath
import numpy as np

WEAK_QZE = dict(detuning=0.0, delta=100.0, eta=2.0, eps_inf=0.2)
AZE = dict(detuning=200.0, delta=100.0, eta=30.0, eps_inf=0.2)
DEEP_QZE = dict(detuning=0.0, delta=100.0, eta=200.0, eps_inf=0.2)


def rate_closed_form(gamma, delta, detuning, eta, eps_inf):
    """Measured rate of the Lorentzian example, term by term."""
    width = delta + math.pi * eta
    detected = 2 * math.pi * gamma * (1 - eps_inf) * delta * width / (detuning ** 2 + width ** 2)
    undetected = 2 * math.pi * gamma * eps_inf * delta ** 2 / (detuning ** 2 + delta ** 2)
    return detected + undetected


def free_rate(gamma, delta, detuning):
    return 2 * math.pi * gamma * delta ** 2 / (detuning ** 2 + delta ** 2)


def lorentzian_mass(gamma, delta, a, b):
    """Integral of gamma*delta^2/(x^2+delta^2) over a <= x <= b (x measured from k0)."""
    return gamma * delta * (math.atan(b / delta) - math.atan(a / delta))


def cubic_roots(m, p=None, dps=40):
    """Roots of (w-W0)(w-k0+iD)(w-k0+iDt) - pi*g*D*(w-k0+i(pD+(1-p)Dt)) in absolute w."""
    if p is None:
        p = 1 - m.eps_inf
    with mpmath.workdps(dps):
        W0, k0 = mpmath.mpf(m.omega0), mpmath.mpf(m.k0)
        D, Dt = mpmath.mpf(m.delta), mpmath.mpf(m.delta) + mpmath.pi * mpmath.mpf(m.eta)
        g = mpmath.mpf(m.gamma)
        a = -k0 + 1j * D
        b = -k0 + 1j * Dt
        # (w - W0)(w + a)(w + b) expanded
        c3 = mpmath.mpc(1)
        c2 = a + b - W0
        c1 = a * b - W0 * (a + b)
        c0 = -W0 * a * b
        c1 -= mpmath.pi * g * D
        c0 -= mpmath.pi * g * D * (-k0 + 1j * (p * D + (1 - p) * Dt))
        roots = mpmath.polyroots([c3, c2, c1, c0], maxsteps=200, extraprec=200)
        return [complex(r) for r in roots]


def survival_coefficients(m, t, p=None):
    """Survival probability from the c_ijk expansion of the amplitude."""
    if p is None:
        p = 1 - m.eps_inf
    w = cubic_roots(m, p)
    D = m.delta
    Dt = D + math.pi * m.eta
    pe = p * math.pi * m.eta

    def c(i, j, k):
        wi, wj, wk = w[i], w[j], w[k]
        num = m.gamma * D * ((D + pe) * (wi - m.k0) ** 2 + (Dt - pe) * D * Dt)
        den = ((wi - wi.conjugate()) * (wi - wj) * (wi - wj.conjugate())
               * (wi - wk) * (wi - wk.conjugate()))
        return num / den

    t = np.asarray(t, dtype=float)
    amp = sum(c(i, j, k) * np.exp(-1j * w[i] * t)
              for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)))
    return 4 * math.pi ** 2 * np.abs(amp) ** 2
