"""Exact time evolution of the Lorentzian model.

Eliminating the photon continuum gives the atom's resolvent
``1/(z - omega0 - Sigma(z))`` with the self-energy

    Sigma(z) = pi*gamma*Delta * [(1-eps_inf)/(z - k0 + i*Dt) + eps_inf/(z - k0 + i*Delta)]

where ``Dt = Delta + pi*eta``.  Clearing denominators gives a cubic whose
three roots are the poles; the atom amplitude is ``sum_j R_j exp(-i w_j t)``
with ``R_j = Q(w_j)/P'(w_j)``.  All polynomial work is done in the shifted
variable ``x = w - k0`` so that coefficients stay of order ``Dt**3``.

Photon amplitudes follow from the same poles.  A detected mode is damped at
``pi*eta`` by the flat detector continuum, an undetected one is not, so

    f_k(t) = -i g_k sum_j R_j (e^{-i w_j t} - e^{-(i k + pi*eta_k) t}) / (i (k - w_j) + pi*eta_k)

and ``eps(t)`` is the weighted k-integral of ``|f_k|^2``.

Writing ``f_k`` as a time integral over the atom amplitude, the k-integral
of the Lorentzian can be done first; it gives the correlation
``w*pi*gamma*Delta*exp(-Delta*|t1 - t2|)``.  What remains is a double time
integral of exponentials, one per pole pair, evaluated as the corner entry of
a 3x3 matrix exponential.  This stays exact when exponents coincide and never
needs the oscillatory k-integral, which degrades badly at long times for
undamped modes.  :func:`photon_probabilities_quadrature` keeps the direct
k-quadrature as an independent cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .errors import QuadratureError, UnitarityError, ZenoError
from .io import complex_to_json, dumps, format_csv
from .model import LorentzianModel

RESIDUE_FLOOR = 1e-6
# A computed double root splits by about sqrt(machine eps) relative to the
# root scale, so the detection band has to be wider than that.
DEGENERACY_TOL = 1e-6
GAMMA_NUDGE = 1e-7
UNITARITY_TOL = 1e-6
EPS_ABS = 1e-10
EPS_REL = 1e-9

P_CONVENTIONS = ("detected", "eps_inf")


@dataclass(frozen=True)
class PoleSet:
    """Roots of the characteristic cubic and the matching residues.

    ``offsets`` are the poles measured from ``k0``; ``poles`` adds ``k0``
    back.  ``perturbed`` is set when a near-degenerate root pair forced a
    relative nudge of ``gamma`` by ``GAMMA_NUDGE``.
    """

    offsets: np.ndarray
    residues: np.ndarray
    k0: float
    p: float
    residual: float
    perturbed: bool = False

    @property
    def poles(self):
        return self.k0 + self.offsets

    def to_dict(self):
        return {
            "poles": [complex_to_json(w) for w in self.poles],
            "residues": [complex_to_json(r) for r in self.residues],
            "p": self.p,
            "residual": self.residual,
            "perturbed": self.perturbed,
        }

    def to_json(self):
        return dumps(self.to_dict())


def _p_value(m: LorentzianModel, convention):
    if convention == "detected":
        return 1.0 - m.eps_inf
    if convention == "eps_inf":
        return m.eps_inf
    raise ValueError(f"unknown p convention {convention!r}; expected one of {P_CONVENTIONS}")


def characteristic_coefficients(m: LorentzianModel, p=None):
    """Coefficients (highest degree first) of the cubic in ``x = w - k0``.

    ``P(x) = (x - detuning)(x + i*Delta)(x + i*Dt) - pi*gamma*Delta*(x + i*(p*Delta + (1-p)*Dt))``
    """
    if p is None:
        p = 1.0 - m.eps_inf
    d, D, Dt = m.detuning, m.delta, m.delta_tilde
    c = p * D + (1.0 - p) * Dt
    cubic = np.polymul(np.polymul([1.0, -d], [1.0, 1j * D]), [1.0, 1j * Dt]).astype(complex)
    cubic[2] -= math.pi * m.gamma * D
    cubic[3] -= 1j * math.pi * m.gamma * D * c
    return cubic


def _companion_roots(coeffs):
    a = np.asarray(coeffs, dtype=complex) / coeffs[0]
    n = len(a) - 1
    companion = np.zeros((n, n), dtype=complex)
    companion[0, :] = -a[1:]
    companion[1:, :-1] = np.eye(n - 1)
    return np.linalg.eigvals(companion)


def _root_scale(coeffs):
    n = len(coeffs) - 1
    return max(abs(coeffs[k] / coeffs[0]) ** (1.0 / k) for k in range(1, n + 1))


def solve_poles(m: LorentzianModel, p_convention="detected") -> PoleSet:
    """Poles and residues of the atom amplitude.

    ``p_convention`` selects the weight in the cubic's linear term:
    ``"detected"`` uses ``p = 1 - eps_inf`` (the detected fraction);
    ``"eps_inf"`` is a deliberately wrong alternative kept as a test hook.
    """
    p = _p_value(m, p_convention)
    roots, residual, scale = _solve(m, p)
    perturbed = False
    if _min_separation(roots) < DEGENERACY_TOL * max(m.delta_tilde, abs(m.detuning)):
        m = m.replace(gamma=m.gamma * (1.0 + GAMMA_NUDGE))
        roots, residual, scale = _solve(m, p)
        perturbed = True
    residues = _residues(roots, m.delta, m.delta_tilde)
    order = np.argsort(-roots.imag)
    return PoleSet(roots[order], residues[order], m.k0, p, residual / scale ** 3, perturbed)


def _residues(roots, D, Dt):
    # Q(x_j)/prod_{k != j}(x_j - x_k) rather than Q/P'(x_j): with the
    # product of root differences the residues sum to one identically (the
    # Lagrange identity for a monic quadratic Q), whatever the root error
    diff = roots[:, None] - roots[None, :]
    np.fill_diagonal(diff, 1.0)
    return (roots + 1j * D) * (roots + 1j * Dt) / diff.prod(axis=1)


PAIR_TOL = 1e-3


def _balance_close_pair(coeffs, roots, scale):
    # Newton converges only linearly on a (near) double root and may push
    # both members of the pair the same way.  Shift the pair by half the
    # trace defect: the roots then sum to -a2 exactly while the pair keeps
    # its (distinct) separation.
    gaps = [abs(roots[1] - roots[2]), abs(roots[0] - roots[2]), abs(roots[0] - roots[1])]
    k = int(np.argmin(gaps))
    if gaps[k] >= PAIR_TOL * scale:
        return roots
    defect = -coeffs[1] / coeffs[0] - roots.sum()
    out = roots.copy()
    for j in ((k + 1) % 3, (k + 2) % 3):
        out[j] += defect / 2
    return out


def _solve(m, p):
    coeffs = characteristic_coefficients(m, p)
    roots = _companion_roots(coeffs)
    deriv = np.polyder(coeffs)
    for _ in range(2):
        step = np.polyval(coeffs, roots) / np.polyval(deriv, roots)
        roots = np.where(np.isfinite(step), roots - step, roots)
    roots = _balance_close_pair(coeffs, roots, _root_scale(coeffs))
    residual = float(np.max(np.abs(np.polyval(coeffs, roots))))
    return roots, residual, _root_scale(coeffs)


def _min_separation(roots):
    return min(abs(roots[i] - roots[j]) for i in range(3) for j in range(i + 1, 3))


def _resolve(m, poles):
    return solve_poles(m) if poles is None else poles


def amplitude(m: LorentzianModel, t, poles=None):
    """Atom amplitude ``f(t)`` in the frame rotating at ``omega0``."""
    poles = _resolve(m, poles)
    t = np.asarray(t, dtype=float)
    shifted = poles.offsets - m.detuning
    return np.exp(-1j * np.multiply.outer(t, shifted)) @ poles.residues


def survival(m: LorentzianModel, t, poles=None):
    """Survival probability ``s(t) = |f(t)|^2``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    return np.abs(amplitude(m, t, poles)) ** 2


SERIES_RADIUS = 1e-2
SERIES_TERMS = 10


def _phi1(u):
    # (e^u - 1)/u with the removable point at 0
    out = np.ones_like(u)
    nz = u != 0
    out[nz] = np.expm1(u[nz]) / u[nz]
    return out


def _exp_dd1(a, b):
    """First divided difference of exp, pivoted so that no factor overflows."""
    swap = a.real < b.real
    q = np.where(swap, b, a)
    r = np.where(swap, a, b)
    return np.exp(q) * _phi1(r - q)


def _exp_dd2(z1, z2, z3):
    """Second divided difference ``exp[z1, z2, z3]``, elementwise.

    The difference quotient divides by the farthest pair; when all three
    points sit within ``SERIES_RADIUS`` of their mean a Taylor series in the
    offsets is used instead (the quotient would cancel).
    """
    z = np.stack(np.broadcast_arrays(z1, z2, z3))
    gaps = np.stack([abs(z[1] - z[2]), abs(z[0] - z[2]), abs(z[0] - z[1])])
    pivot = np.argmax(gaps, axis=0)     # the point outside the farthest pair
    p = np.take_along_axis(z, pivot[None], 0)[0]
    b = np.take_along_axis(z, ((pivot + 1) % 3)[None], 0)[0]
    c = np.take_along_axis(z, ((pivot + 2) % 3)[None], 0)[0]
    spread = np.max(gaps, axis=0)
    out = np.empty(p.shape, dtype=complex)
    far = spread >= SERIES_RADIUS
    if np.any(far):
        out[far] = (_exp_dd1(p[far], c[far]) - _exp_dd1(p[far], b[far])) / (c[far] - b[far])
    near = ~far
    if np.any(near):
        mean = z[:, near].mean(axis=0)
        w = z[:, near] - mean
        # exp[w] = sum_k h_{k-2}(w1, w2, w3)/k!, h_n the complete homogeneous polynomial
        h_pair = [np.ones_like(mean)]          # h_n(w2, w3)
        for n in range(1, SERIES_TERMS):
            h_pair.append(w[2] ** n + w[1] * h_pair[-1])
        total = np.zeros_like(mean)
        for n in range(SERIES_TERMS):
            h = sum(w[0] ** k * h_pair[n - k] for k in range(n + 1))
            total += h / math.factorial(n + 2)
        out[near] = np.exp(mean) * total
    return out


def _channel_probability(m, poles, t, weight, damping):
    """Exact photon population of one channel.

    For the pole pair ``(j, l)`` the time-ordered part of the double integral
    is the (0, 2) entry of ``expm(t*M)`` with

        M = [[-2k, 1, 0], [0, -i x_j - k - Delta, 1], [0, 0, -i (x_j - conj(x_l))]]

    and ``k`` the mode damping; the other ordering is its conjugate with
    ``j`` and ``l`` swapped.  For this bidiagonal ``M`` the entry equals
    ``t**2`` times the second divided difference of ``exp`` at ``t*diag(M)``.
    Every diagonal entry has a non-positive real part, so nothing overflows.
    """
    if weight == 0:
        return np.zeros_like(t)
    xj, R = poles.offsets, poles.residues
    a = np.full((len(xj), len(xj)), -2.0 * damping, dtype=complex)
    b = np.broadcast_to((-1j * xj - damping - m.delta)[:, None], a.shape)
    c = -1j * (xj[:, None] - np.conj(xj)[None, :])
    tt = t[:, None, None]
    corner = tt ** 2 * _exp_dd2(tt * a, tt * b, tt * c)
    ordered = np.einsum("j,l,tjl->t", R, np.conj(R), corner)
    return 2.0 * weight * math.pi * m.gamma * m.delta * ordered.real


def _photon_integrand(poles, weight, delta, damping, t):
    R = poles.residues
    xj = poles.offsets
    phase_j = np.exp(-1j * np.multiply.outer(xj, t))            # (3, nt)

    def f(x):
        J = weight * delta * delta / (x * x + delta * delta)
        c = R / (1j * (x[..., None] - xj) + damping)             # (..., 3)
        mode = np.exp(-np.multiply.outer(1j * x + damping, t))   # (..., nt)
        F = c @ phase_j - mode * c.sum(axis=-1)[..., None]
        return J[..., None] * (F.real ** 2 + F.imag ** 2)

    return f


def _breakpoints(m, poles, W):
    pts = {0.0, m.detuning}
    pts.update(float(x) for x in poles.offsets.real)
    for width in (m.delta, m.delta_tilde):
        c = width
        while c < W:
            pts.update((-c, c))
            c *= 10.0
    return sorted(p for p in pts if -W < p < W)


def _channel_quadrature(m, poles, t, weight, damping, chunk=32):
    if weight == 0:
        return np.zeros_like(t)
    W = m.window_halfwidth()
    pts = [-W, *_breakpoints(m, poles, W), W]
    out = np.empty_like(t)
    for start in range(0, len(t), chunk):
        block = t[start:start + chunk]
        f = _photon_integrand(poles, weight * m.gamma, m.delta, damping, block)
        try:
            out[start:start + chunk] = quadrature.integrate(
                f, -math.inf, math.inf, pts, epsrel=EPS_REL, epsabs=EPS_ABS)
        except QuadratureError as exc:
            raise QuadratureError("photon-population quadrature did not converge",
                                  exc.achieved) from exc
    return out


def _times(t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    return t


def photon_probabilities_quadrature(m: LorentzianModel, t, poles=None):
    """Same as :func:`photon_probabilities` by adaptive quadrature over k.

    Accurate to about ``1e-10`` while ``t`` is a few lifetimes; slow and
    eventually non-convergent for undamped channels at long times.
    """
    poles = _resolve(m, poles)
    t = _times(t)
    detected = _channel_quadrature(m, poles, t, 1.0 - m.eps_inf, math.pi * m.eta)
    undetected = _channel_quadrature(m, poles, t, m.eps_inf, 0.0)
    return detected, undetected


def photon_probabilities(m: LorentzianModel, t, poles=None):
    """Photon populations ``(eps_detected, eps_undetected)`` at times ``t``."""
    poles = _resolve(m, poles)
    t = _times(t)
    detected = _channel_probability(m, poles, t, 1.0 - m.eps_inf, math.pi * m.eta)
    undetected = _channel_probability(m, poles, t, m.eps_inf, 0.0)
    return detected, undetected


def error_probability(m: LorentzianModel, t, poles=None):
    """Probability that the atom has decayed but no photon has been absorbed."""
    scalar = np.ndim(t) == 0
    detected, undetected = photon_probabilities(m, t, poles)
    eps = detected + undetected
    return float(eps[0]) if scalar else eps


def _response(s, eps):
    r = 1.0 - s - eps
    worst = float(np.min(r)) if np.size(r) else 0.0
    if worst < -UNITARITY_TOL:
        raise UnitarityError(f"1 - s - eps = {worst:.3e} is below -{UNITARITY_TOL}")
    return np.clip(r, 0.0, 1.0)


def response_probability(m: LorentzianModel, t, poles=None):
    """Probability that the emitted photon has been absorbed, ``1 - s - eps``."""
    scalar = np.ndim(t) == 0
    poles = _resolve(m, poles)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    r = _response(survival(m, t, poles), error_probability(m, t, poles))
    return float(r[0]) if scalar else r


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    s: np.ndarray
    eps: np.ndarray
    r: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.t)

    def unitarity_error(self):
        return float(np.max(np.abs(self.s + self.eps + self.r - 1.0)))

    def ln_s_over_t(self):
        """``t**-1 * ln s(t)``, taken as 0 at ``t = 0`` (its limit)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.log(self.s) / self.t
        return np.where(self.t > 0, out, 0.0)

    def to_csv(self, log_s=False, meta=None):
        header = ["t", "s", "eps", "r"]
        columns = [self.t, self.s, self.eps, self.r]
        if log_s:
            header.append("ln_s_over_t")
            columns.append(self.ln_s_over_t())
        return format_csv(header, zip(*columns), meta=meta)

    def to_dict(self, log_s=False):
        out = {"t": self.t.tolist(), "s": self.s.tolist(), "eps": self.eps.tolist(),
               "r": self.r.tolist()}
        if log_s:
            out["ln_s_over_t"] = self.ln_s_over_t().tolist()
        return out


def time_grid(t_max, n, log_grid=False):
    if t_max <= 0:
        raise ValueError(f"t_max must be > 0 (got {t_max})")
    if n < 2:
        raise ValueError(f"n must be >= 2 (got {n})")
    if log_grid:
        return np.concatenate([[0.0], np.geomspace(t_max * 1e-4, t_max, n - 1)])
    return np.linspace(0.0, t_max, n)


def evolve(m: LorentzianModel, t_max, n, log_grid=False, poles=None) -> Trajectory:
    """Sample ``s``, ``eps`` and ``r`` on a grid from 0 to ``t_max``."""
    poles = _resolve(m, poles)
    t = time_grid(t_max, n, log_grid)
    s = survival(m, t, poles)
    eps = error_probability(m, t, poles)
    r = _response(s, eps)
    return Trajectory(t, s, eps, r, meta={"perturbed": poles.perturbed})


def asymptotic_rate(m: LorentzianModel, poles=None):
    """Long-time decay rate of ``s(t)`` and the weak-coupling validity flag.

    The rate is ``-2 Im w`` of the least-damped pole whose residue exceeds
    ``RESIDUE_FLOOR`` in magnitude.
    """
    poles = _resolve(m, poles)
    live = np.abs(poles.residues) > RESIDUE_FLOOR
    if not np.any(live):
        raise ZenoError("no pole carries a residue above the floor; no dominant exponential")
    dominant = poles.offsets[live][np.argmax(poles.offsets[live].imag)]
    return -2.0 * float(dominant.imag), m.is_valid_asymptotic()
