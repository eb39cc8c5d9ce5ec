"""Zeno / anti-Zeno phase diagram of the Lorentzian model.

With the form factor centred at ``k0`` the measured-to-free rate ratio
depends only on ``|detuning|/Delta``, ``eta/Delta`` and ``eps_inf``.  The sign
of ``ratio - 1`` does not depend on ``eps_inf`` at all: the undetected
channel contributes its free rate unchanged, so only the detected channel
decides between suppression and enhancement.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError
from .io import format_csv
from .model import CLASSIFICATION_TOL, LorentzianModel, classify
from .spectral import lorentzian_ratio

PHASEMAP_HEADER = ("detuning_over_delta", "eta_over_delta", "ratio", "class")


def _unpack(detuning, delta):
    if isinstance(detuning, LorentzianModel):
        return detuning.detuning, detuning.delta
    if delta is None:
        raise TypeError("delta is required unless a LorentzianModel is given")
    if not delta > 0:
        raise ParameterError(f"delta must be > 0 (got {delta})")
    return float(detuning), float(delta)


def phase_boundary(detuning, delta=None) -> Optional[float]:
    """Detector coupling at which the measured rate equals the free rate.

    Returns ``(detuning**2 - delta**2)/(pi*delta)``, or ``None`` when
    ``|detuning| < delta`` and no boundary exists.  Accepts a
    :class:`LorentzianModel` in place of the two numbers; its ``eta`` and
    ``eps_inf`` are ignored.
    """
    d, D = _unpack(detuning, delta)
    if abs(d) < D:
        return None
    return (d * d - D * D) / (math.pi * D)


def max_effect_eta(detuning, delta=None) -> Optional[float]:
    """Detector coupling that maximises the measured rate, ``(|detuning| - delta)/pi``.

    ``None`` when ``|detuning| < delta``; the rate then falls monotonically
    with ``eta``.
    """
    d, D = _unpack(detuning, delta)
    if abs(d) < D:
        return None
    return (abs(d) - D) / math.pi


def max_rate_ratio(detuning, delta=None, eps_inf=None) -> float:
    """Largest attainable ``Gamma/Gamma_0`` over ``eta``.

    Evaluated from the closed-form rate at :func:`max_effect_eta`; it equals
    ``eps_inf + (1 - eps_inf)*(detuning**2 + delta**2)/(2*delta*|detuning|)``.
    """
    if isinstance(detuning, LorentzianModel):
        m = detuning
        d, D = m.detuning, m.delta
        eps = m.eps_inf if eps_inf is None else eps_inf
    else:
        d, D = _unpack(detuning, delta)
        eps = 0.0 if eps_inf is None else eps_inf
    if not 0.0 <= eps <= 1.0:
        raise ParameterError(f"eps_inf must lie in [0, 1] (got {eps})")
    if abs(d) <= D:
        raise ParameterError(
            f"|detuning| = {abs(d)} must exceed delta = {D}; the rate has no interior maximum")
    return float(lorentzian_ratio(d, D, max_effect_eta(d, D), eps))


@dataclass(frozen=True)
class PhaseMap:
    """Rate ratio and Zeno classification on a ``(eta, |detuning|)`` grid.

    Both axes are in units of ``Delta``.  ``ratio`` and ``classification``
    have shape ``(len(eta), len(detuning))``.
    """

    detuning: np.ndarray
    eta: np.ndarray
    ratio: np.ndarray
    classification: np.ndarray
    eps_inf: float

    def rows(self):
        for j, d in enumerate(self.detuning):
            for i, e in enumerate(self.eta):
                yield d, e, self.ratio[i, j], self.classification[i, j]

    def to_csv(self, meta=None):
        return format_csv(PHASEMAP_HEADER, self.rows(), meta=meta)

    def to_dict(self):
        return {
            "eps_inf": self.eps_inf,
            "detuning_over_delta": self.detuning.tolist(),
            "eta_over_delta": self.eta.tolist(),
            "ratio": self.ratio.tolist(),
            "class": self.classification.tolist(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def recovered_boundary(self):
        """Per-column ``eta`` where the ratio first drops below 1 after exceeding it.

        The crossing is located by linear interpolation between the two
        straddling grid rows; columns without such a crossing give ``nan``.
        """
        out = np.full(len(self.detuning), np.nan)
        dev = self.ratio - 1.0
        for j in range(len(self.detuning)):
            col = dev[:, j]
            above = np.nonzero(col > 0)[0]
            if not len(above):
                continue
            below = np.nonzero((col < 0) & (np.arange(len(col)) > above[0]))[0]
            if not len(below):
                continue
            i = below[0]
            e0, e1 = self.eta[i - 1], self.eta[i]
            out[j] = e0 + (e1 - e0) * col[i - 1] / (col[i - 1] - col[i])
        return out


def _axis(name, bounds, n):
    lo, hi = (float(v) for v in bounds)
    if not (math.isfinite(lo) and math.isfinite(hi) and 0.0 <= lo < hi):
        raise ParameterError(f"{name} range must satisfy 0 <= lo < hi (got {bounds})")
    if int(n) != n or n < 2:
        raise ParameterError(f"{name} grid size must be an integer >= 2 (got {n})")
    return np.linspace(lo, hi, int(n))


def sweep(detuning_range=(0.0, 3.0), eta_range=(0.0, 3.0), grid_sizes=(200, 200),
          eps_inf=0.0, tol=CLASSIFICATION_TOL) -> PhaseMap:
    """Evaluate the rate ratio on an inclusive grid of ``|detuning|/Delta`` by ``eta/Delta``."""
    if not 0.0 <= eps_inf <= 1.0:
        raise ParameterError(f"eps_inf must lie in [0, 1] (got {eps_inf})")
    detuning = _axis("detuning", detuning_range, grid_sizes[0])
    eta = _axis("eta", eta_range, grid_sizes[1])
    ratio = lorentzian_ratio(detuning[None, :], 1.0, eta[:, None], eps_inf)
    classes = np.vectorize(lambda r: classify(r, tol), otypes=[object])(ratio)
    return PhaseMap(detuning, eta, ratio, classes.astype(str), float(eps_inf))


def boundary_curve(detuning_max=3.0, n=200):
    """Points ``(|detuning|/Delta, eta_b/Delta)`` from the boundary onset to ``detuning_max``."""
    x = np.linspace(1.0, max(1.0, detuning_max), n)
    return x, (x * x - 1.0) / math.pi


def max_effect_curve(detuning_max=3.0, n=200):
    """Points ``(|detuning|/Delta, eta_m/Delta)`` of the maximum-enhancement line."""
    x = np.linspace(1.0, max(1.0, detuning_max), n)
    return x, (x - 1.0) / math.pi
