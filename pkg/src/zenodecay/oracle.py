"""Brute-force reference: a discretized photon continuum integrated in time.

The atom couples to ``N`` discrete photon modes.  Each detected mode decays
into the (flat) detector continuum at ``pi*eta``; that continuum is
eliminated exactly and its population is carried as one accumulator ``r``.
In the frame rotating at ``omega0`` the single-excitation equations are

    df/dt   = -i sum_i g_i f_i
    df_i/dt = (-i x_i - kappa_i) f_i - i g_i f
    dr/dt   = sum_i 2 kappa_i |f_i|^2

with ``x_i = k_i - omega0`` and ``kappa_i = pi*eta`` on detected modes, 0
otherwise.  They are stepped with classical fourth-order Runge-Kutta.

Nodes come from a Gauss-Legendre rule in ``theta`` with
``k = omega0 + c*tan(theta)``, which packs modes around the transition
energy and keeps the level spacing there (and hence the recurrence time
``2*pi/spacing``) under control.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numba
import numpy as np

from . import dynamics, quadrature
from .errors import NormDriftError, ParameterError, ZenoError
from .model import LorentzianModel, SpectralModel, lorentzian_to_spectral

DEFAULT_MODES = 2000
WINDOW_WIDTHS = 20.0
STEP_FACTOR = 0.05
FIDELITY_TOL = 1e-4
DRIFT_TOL = 1e-6
PASS_TOL = 1e-3
RECURRENCE_MARGIN = 2.5


class RecurrenceError(ZenoError):
    """Requested times reach the discretization's recurrence horizon."""


@dataclass(frozen=True)
class DiscretizedSystem:
    """Discrete modes standing in for both photon channels.

    ``x`` are mode energies measured from ``omega0``; ``g`` the couplings
    ``sqrt(J(k_i) w_i)``; ``kappa`` the per-mode damping ``pi*eta_i``.
    """

    omega0: float
    x: np.ndarray
    g: np.ndarray
    kappa: np.ndarray
    detected: np.ndarray
    window: Tuple[float, float]
    scale: float
    weight_error: float

    @property
    def n_modes(self):
        return len(self.x)

    @property
    def energies(self):
        return self.omega0 + self.x

    def spacing(self):
        """Largest level spacing next to ``omega0`` over the channels."""
        out = 0.0
        for tag in (True, False):
            xs = np.sort(self.x[self.detected == tag])
            if len(xs) < 2:
                continue
            i = int(np.clip(np.searchsorted(xs, 0.0), 1, len(xs) - 1))
            out = max(out, xs[i] - xs[i - 1])
        return out

    def recurrence_time(self):
        return 2.0 * math.pi / self.spacing()

    def max_step(self):
        """Largest step allowed for stable, accurate integration."""
        fastest = max(float(np.max(np.abs(self.window))), float(np.max(self.kappa, initial=0.0)))
        return STEP_FACTOR / fastest


def _channel_nodes(n, window, scale):
    u, w = np.polynomial.legendre.leggauss(n)
    a, b = (math.atan(v / scale) for v in window)
    theta = 0.5 * (b - a) * u + 0.5 * (b + a)
    x = scale * np.tan(theta)
    return x, 0.5 * (b - a) * w * scale / np.cos(theta) ** 2


def _has_weight(density, lo, hi):
    probe = np.linspace(lo, hi, 1025)
    return bool(np.any(np.asarray(density(probe)) > 0))


def build(s: SpectralModel, n_modes=DEFAULT_MODES, window=None, scale=None) -> DiscretizedSystem:
    """Discretize both photon channels of ``s``.

    ``window`` is an absolute energy interval (default: the support) and
    must contain ``omega0``.  ``scale`` is the ``c`` of the tangent map
    (default: a fortieth of the window).  The modes are shared between the
    channels that carry weight.
    """
    if int(n_modes) != n_modes or n_modes < 100:
        raise ParameterError(f"n_modes must be an integer >= 100 (got {n_modes})")
    n_modes = int(n_modes)
    lo, hi = s.support if window is None else (float(window[0]), float(window[1]))
    if not lo < s.omega0 < hi:
        raise ParameterError(f"window ({lo}, {hi}) must contain omega0 = {s.omega0}")
    rel = (lo - s.omega0, hi - s.omega0)
    if scale is None:
        scale = (hi - lo) / 40.0
    if not scale > 0:
        raise ParameterError(f"scale must be > 0 (got {scale})")

    channels = [(tag, density) for tag, density in
                ((True, s.jd), (False, s.ju)) if _has_weight(density, lo, hi)]
    if not channels:
        raise ParameterError("no spectral weight inside the window")
    sizes = [n_modes // len(channels)] * len(channels)
    sizes[-1] += n_modes - sum(sizes)

    xs, gs, ks, tags = [], [], [], []
    for (tag, density), n in zip(channels, sizes):
        x, w = _channel_nodes(n, rel, scale)
        k = s.omega0 + x
        xs.append(x)
        gs.append(np.sqrt(np.asarray(density(k), dtype=float) * w))
        ks.append(math.pi * s.eta(k) if tag else np.zeros(n))
        tags.append(np.full(n, tag))
    x, g = np.concatenate(xs), np.concatenate(gs)

    exact = quadrature.integrate(lambda k: s.jd(k) + s.ju(k), lo, hi,
                                 [s.omega0, *s.hints], epsrel=1e-10)
    weight_error = abs(float(np.sum(g * g)) - exact) / exact
    if weight_error > FIDELITY_TOL:
        raise ParameterError(
            f"discretized coupling weight is off by {weight_error:.2e} (> {FIDELITY_TOL}); "
            "increase n_modes or adjust the scale")
    return DiscretizedSystem(s.omega0, x, g, np.concatenate(ks), np.concatenate(tags),
                             (rel[0], rel[1]), float(scale), weight_error)


@numba.njit(cache=True)
def _rk4(fr, fi, yr, yi, x, kappa, g, h, n_steps, stride, out):
    n = x.size
    kr = np.empty((4, n))
    ki = np.empty((4, n))
    ka = np.empty((4, 3))
    tr = np.empty(n)
    ti = np.empty(n)
    r = 0.0
    row = 0
    for step in range(n_steps + 1):
        if step % stride == 0:
            e = 0.0
            for i in range(n):
                e += yr[i] * yr[i] + yi[i] * yi[i]
            out[row, 0] = fr * fr + fi * fi
            out[row, 1] = e
            out[row, 2] = r
            row += 1
        if step == n_steps:
            break
        for st in range(4):
            c = 0.0 if st == 0 else (0.5 * h if st < 3 else h)
            if st == 0:
                for i in range(n):
                    tr[i] = yr[i]
                    ti[i] = yi[i]
                br = fr
                bi = fi
            else:
                for i in range(n):
                    tr[i] = yr[i] + c * kr[st - 1, i]
                    ti[i] = yi[i] + c * ki[st - 1, i]
                br = fr + c * ka[st - 1, 0]
                bi = fi + c * ka[st - 1, 1]
            sr = 0.0
            si = 0.0
            q = 0.0
            for i in range(n):
                sr += g[i] * tr[i]
                si += g[i] * ti[i]
                kr[st, i] = x[i] * ti[i] - kappa[i] * tr[i] + g[i] * bi
                ki[st, i] = -x[i] * tr[i] - kappa[i] * ti[i] - g[i] * br
                q += 2.0 * kappa[i] * (tr[i] * tr[i] + ti[i] * ti[i])
            ka[st, 0] = si
            ka[st, 1] = -sr
            ka[st, 2] = q
        for i in range(n):
            yr[i] += h / 6.0 * (kr[0, i] + 2.0 * kr[1, i] + 2.0 * kr[2, i] + kr[3, i])
            yi[i] += h / 6.0 * (ki[0, i] + 2.0 * ki[1, i] + 2.0 * ki[2, i] + ki[3, i])
        fr += h / 6.0 * (ka[0, 0] + 2.0 * ka[1, 0] + 2.0 * ka[2, 0] + ka[3, 0])
        fi += h / 6.0 * (ka[0, 1] + 2.0 * ka[1, 1] + 2.0 * ka[2, 1] + ka[3, 1])
        r += h / 6.0 * (ka[0, 2] + 2.0 * ka[1, 2] + 2.0 * ka[2, 2] + ka[3, 2])


def integrate(d: DiscretizedSystem, t_max, dt=None, n_samples=201) -> dynamics.Trajectory:
    """Integrate from the excited atom and sample ``n_samples`` uniform times.

    ``dt`` defaults to :meth:`DiscretizedSystem.max_step` and is shrunk so
    that the samples fall on steps.  Raises :class:`RecurrenceError` when
    ``t_max`` exceeds half the recurrence time and :class:`NormDriftError`
    when the total probability drifts by more than ``1e-6``.
    """
    if not t_max > 0:
        raise ParameterError(f"t_max must be > 0 (got {t_max})")
    if int(n_samples) != n_samples or n_samples < 2:
        raise ParameterError(f"n_samples must be an integer >= 2 (got {n_samples})")
    limit = d.max_step()
    if dt is None:
        dt = limit
    elif dt > limit * (1.0 + 1e-12):
        raise ParameterError(f"dt = {dt} exceeds the stability limit {limit:.3e}")
    t_rec = d.recurrence_time()
    if t_max >= 0.5 * t_rec:
        raise RecurrenceError(
            f"t_max = {t_max:.4g} reaches half the recurrence time {t_rec:.4g}; "
            "use more modes or a smaller scale")
    intervals = int(n_samples) - 1
    stride = max(1, math.ceil(t_max / (dt * intervals)))
    n_steps = stride * intervals
    h = t_max / n_steps

    out = np.empty((intervals + 1, 3))
    zeros = np.zeros(d.n_modes)
    _rk4(1.0, 0.0, zeros.copy(), zeros.copy(), d.x, d.kappa, d.g, h, n_steps, stride, out)
    s, eps, r = out.T.copy()
    drift = float(np.max(np.abs(s + eps + r - 1.0)))
    if drift > DRIFT_TOL:
        raise NormDriftError(f"norm drifted by {drift:.2e} (> {DRIFT_TOL}); use a smaller dt")
    t = np.linspace(0.0, t_max, intervals + 1)
    return dynamics.Trajectory(t, s, eps, r, meta={"dt": h, "norm_drift": drift})


def lorentzian_system(m: LorentzianModel, n_modes=DEFAULT_MODES, t_max=None):
    """Discretize the Lorentzian model on ``omega0 +/- 20*max(Dt, |detuning|)``.

    The tangent-map scale starts at ``Delta/2`` and shrinks when needed so
    that ``t_max`` stays below the recurrence time divided by 2.5.
    """
    width = max(m.delta_tilde, abs(m.detuning))
    half = WINDOW_WIDTHS * width
    window = (m.omega0 - half, m.omega0 + half)
    scale = 0.5 * m.delta
    n_channel = n_modes // (2 if 0.0 < m.eps_inf < 1.0 else 1)
    if t_max is not None:
        # centre spacing of the tangent-mapped rule is about scale*range*pi/(2n)
        span = 2.0 * math.atan(half / scale)
        target = 2.0 * math.pi / (RECURRENCE_MARGIN * t_max)
        scale = min(scale, target * 2.0 * n_channel / (math.pi * span))
    return build(lorentzian_to_spectral(m), n_modes, window, scale)


@dataclass(frozen=True)
class ComparisonReport:
    max_dev_s: float
    max_dev_eps: float
    max_dev_r: float
    n_modes: int
    dt: float
    passed: bool

    def to_dict(self):
        return {"max_dev_s": self.max_dev_s, "max_dev_eps": self.max_dev_eps,
                "max_dev_r": self.max_dev_r, "n_modes": self.n_modes, "dt": self.dt,
                "pass": self.passed}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def compare(m: LorentzianModel, t_max: Optional[float] = None, n_modes=DEFAULT_MODES,
            p_convention="detected", n_samples=201, tol=PASS_TOL) -> ComparisonReport:
    """Largest deviations of the pole solution from the oracle over ``[0, t_max]``.

    ``t_max`` defaults to ``10/Gamma_0``.  ``p_convention`` is passed to
    :func:`dynamics.solve_poles`; the analytic ``r`` is taken as
    ``1 - s - eps`` without clamping so that a wrong convention shows up as
    a deviation rather than an exception.
    """
    if t_max is None:
        t_max = 10.0 / m.free_rate
    d = lorentzian_system(m, n_modes, t_max)
    ref = integrate(d, t_max, n_samples=n_samples)
    poles = dynamics.solve_poles(m, p_convention)
    s = dynamics.survival(m, ref.t, poles)
    eps = dynamics.error_probability(m, ref.t, poles)
    r = 1.0 - s - eps
    devs = [float(np.max(np.abs(a - b))) for a, b in ((s, ref.s), (eps, ref.eps), (r, ref.r))]
    return ComparisonReport(*devs, n_modes=d.n_modes, dt=ref.meta["dt"],
                            passed=all(v < tol for v in devs))
