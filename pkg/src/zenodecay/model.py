"""Parameter types and unit conventions.

All energies and rates are expressed in units of the coupling strength
``gamma`` (conventionally 1) and times in units of ``1/gamma``.  Mode
energies are plain floats; the three-dimensional wavevector integrals are
represented by one-dimensional spectral densities over mode energy.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .errors import ParameterError

#: Relative half-width of the NEUTRAL band around Gamma / Gamma_0 = 1.
CLASSIFICATION_TOL = 1e-9

#: Default factor used to operationalise "gamma << |delta + i Delta|^2 / Delta".
VALIDITY_THRESHOLD = 0.05

#: Half-width of the integration window in units of max(Delta, pi*eta, |delta|).
WINDOW_FACTOR = 200.0

PARAMETER_FIELDS = ("gamma", "delta", "k0", "omega0", "eta", "eps_inf")

Density = Callable[[np.ndarray], np.ndarray]


def _require(condition, message):
    if not condition:
        raise ParameterError(message)


def _finite(name, value):
    _require(isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value),
             f"{name} must be a finite number (got {value!r})")


@dataclass(frozen=True)
class LorentzianModel:
    """Two-level atom coupled to a Lorentzian continuum watched by a detector.

    Parameters
    ----------
    gamma : float
        Atom-photon coupling strength; the free decay rate on resonance is
        ``2*pi*gamma``.
    delta : float
        Half-width of the Lorentzian form factor.
    k0 : float
        Centre of the form factor.
    omega0 : float
        Atomic transition energy.
    eta : float
        Detector coupling density.  Photons in the detected solid angle are
        absorbed at rate ``2*pi*eta``; the response time is ``1/(2*pi*eta)``.
    eps_inf : float
        Asymptotic error probability.  ``1 - eps_inf`` is the detection
        efficiency.
    """

    gamma: float
    delta: float
    k0: float
    omega0: float
    eta: float
    eps_inf: float

    def __post_init__(self):
        for name in PARAMETER_FIELDS:
            _finite(name, getattr(self, name))
            object.__setattr__(self, name, float(getattr(self, name)))
        _require(self.gamma > 0, f"gamma must be > 0 (got {self.gamma})")
        _require(self.delta > 0, f"delta must be > 0 (got {self.delta})")
        _require(self.eta >= 0, f"eta must be >= 0 (got {self.eta})")
        _require(0.0 <= self.eps_inf <= 1.0,
                 f"eps_inf must lie in [0, 1] (got {self.eps_inf})")

    @classmethod
    def from_detuning(cls, detuning, delta=100.0, eta=0.0, eps_inf=0.0,
                      gamma=1.0, k0=None):
        """Build a model from the detuning ``omega0 - k0``.

        ``k0`` defaults to ``100 * delta``; only the detuning enters any
        observable.
        """
        _finite("delta", delta)
        if k0 is None:
            k0 = 100.0 * float(delta)
        return cls(gamma=gamma, delta=delta, k0=k0, omega0=k0 + detuning,
                   eta=eta, eps_inf=eps_inf)

    @classmethod
    def from_dict(cls, data):
        missing = [name for name in PARAMETER_FIELDS if name not in data]
        if missing:
            raise ParameterError(f"missing parameter(s): {', '.join(missing)}")
        return cls(**{name: data[name] for name in PARAMETER_FIELDS})

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def replace(self, **changes):
        data = self.to_dict()
        data.update(changes)
        return LorentzianModel(**data)

    @property
    def detuning(self):
        """``omega0 - k0``."""
        return self.omega0 - self.k0

    @property
    def delta_tilde(self):
        """Measurement-broadened width ``delta + pi*eta``."""
        return self.delta + math.pi * self.eta

    @property
    def tau(self):
        """Detector response time ``1/(2*pi*eta)``; infinite without a detector."""
        return math.inf if self.eta == 0 else 1.0 / (2.0 * math.pi * self.eta)

    @property
    def jump_time(self):
        return 2.0 / self.delta

    @property
    def total_weight(self):
        """Integral of the full Lorentzian over the real line, ``pi*gamma*delta``."""
        return math.pi * self.gamma * self.delta

    @property
    def free_rate(self):
        d = self.detuning
        return 2.0 * math.pi * self.gamma * self.delta ** 2 / (d * d + self.delta ** 2)

    def validity_ratio(self):
        """``gamma * delta / |detuning + i*delta|^2``; small means weak coupling."""
        d = self.detuning
        return self.gamma * self.delta / (d * d + self.delta ** 2)

    def is_valid_asymptotic(self, threshold=VALIDITY_THRESHOLD):
        return self.validity_ratio() <= threshold

    def window_halfwidth(self):
        return WINDOW_FACTOR * max(self.delta, math.pi * self.eta, abs(self.detuning))

    def lorentzian(self, k):
        """Full (both channels) density ``gamma*delta^2/((k-k0)^2+delta^2)``."""
        x = np.asarray(k, dtype=float) - self.k0
        return self.gamma * self.delta ** 2 / (x * x + self.delta ** 2)


@dataclass(frozen=True)
class SpectralModel:
    """General two-channel coupling over mode energy.

    ``detected_density`` and ``undetected_density`` are the angularly
    integrated squared couplings inside and outside the detector's solid
    angle.  Both are treated as zero outside ``support`` unless ``tails`` is
    set, in which case the densities are defined on the whole line, the
    support marks the bulk region, and every integral adds the two outer
    half-lines.

    ``eta_of_k`` may be a constant or a callable.  A callable must be either
    identically zero or strictly positive on the support.

    ``hints`` are energies where the integrands have structure (peaks,
    kinks); they become quadrature breakpoints.
    """

    omega0: float
    detected_density: Density
    undetected_density: Density
    eta_of_k: Union[float, Callable[[np.ndarray], np.ndarray]]
    support: Tuple[float, float]
    tails: bool = False
    hints: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        lo, hi = (float(v) for v in self.support)
        _require(math.isfinite(lo) and math.isfinite(hi) and lo < hi,
                 f"support must be a finite interval with k_min < k_max (got {self.support})")
        object.__setattr__(self, "support", (lo, hi))
        _finite("omega0", self.omega0)
        if not callable(self.eta_of_k):
            _finite("eta", self.eta_of_k)
            _require(self.eta_of_k >= 0, f"eta must be >= 0 (got {self.eta_of_k})")
        probe = np.linspace(lo, hi, 257)
        for name in ("detected_density", "undetected_density"):
            values = np.asarray(getattr(self, name)(probe), dtype=float)
            _require(np.all(np.isfinite(values)) and np.all(values >= 0),
                     f"{name} must be finite and non-negative on the support")
        eta = self.eta(probe)
        _require(np.all(eta >= 0), "eta_of_k must be non-negative")
        _require(np.all(eta == 0) or np.all(eta > 0),
                 "eta_of_k must be identically zero or strictly positive on the support")
        object.__setattr__(self, "hints", tuple(sorted(float(h) for h in self.hints)))

    def contains(self, k):
        return self.support[0] <= k <= self.support[1]

    def _mask(self, k, values):
        if self.tails:
            return values
        k = np.asarray(k, dtype=float)
        inside = (k >= self.support[0]) & (k <= self.support[1])
        return np.where(inside, values, 0.0)

    def jd(self, k):
        return self._mask(k, self.detected_density(np.asarray(k, dtype=float)))

    def ju(self, k):
        return self._mask(k, self.undetected_density(np.asarray(k, dtype=float)))

    def eta(self, k):
        k = np.asarray(k, dtype=float)
        if callable(self.eta_of_k):
            return np.asarray(self.eta_of_k(k), dtype=float) * np.ones_like(k)
        return np.full_like(k, float(self.eta_of_k))

    @property
    def unmeasured(self):
        """True when no photon mode couples to the detector."""
        if not callable(self.eta_of_k):
            return self.eta_of_k == 0
        probe = np.linspace(*self.support, 257)
        return bool(np.all(self.eta(probe) == 0))


@dataclass(frozen=True)
class DecayRateResult:
    free_rate: float
    measured_rate: float
    ratio: float
    classification: str

    @classmethod
    def from_rates(cls, free_rate, measured_rate, tol=CLASSIFICATION_TOL):
        free_rate, measured_rate = float(free_rate), float(measured_rate)
        ratio = measured_rate / free_rate
        return cls(free_rate, measured_rate, ratio, classify(ratio, tol))

    def to_dict(self):
        return asdict(self)


def classify(ratio, tol=CLASSIFICATION_TOL):
    """Return ``"QZE"``, ``"AZE"`` or ``"NEUTRAL"`` for a rate ratio."""
    if ratio < 1.0 - tol:
        return "QZE"
    if ratio > 1.0 + tol:
        return "AZE"
    return "NEUTRAL"


def lorentzian_to_spectral(m: LorentzianModel, halfwidth: Optional[float] = None) -> SpectralModel:
    """Split the Lorentzian example into detected and undetected channels.

    The bulk support is ``k0 +/- halfwidth`` (default
    ``m.window_halfwidth()``); the Lorentzian tails beyond it are kept.
    """
    W = m.window_halfwidth() if halfwidth is None else float(halfwidth)
    _require(W > 0, "halfwidth must be > 0")
    gamma, delta, k0, eps = m.gamma, m.delta, m.k0, m.eps_inf

    def detected(k):
        x = np.asarray(k, dtype=float) - k0
        return (1.0 - eps) * gamma * delta ** 2 / (x * x + delta ** 2)

    def undetected(k):
        x = np.asarray(k, dtype=float) - k0
        return eps * gamma * delta ** 2 / (x * x + delta ** 2)

    hints = {k0, m.omega0}
    for width in (delta, m.delta_tilde):
        for c in (1.0, 10.0, 100.0):
            hints.update((k0 - c * width, k0 + c * width))
    hints = tuple(h for h in hints if k0 - W < h < k0 + W)
    return SpectralModel(
        omega0=m.omega0,
        detected_density=detected,
        undetected_density=undetected,
        eta_of_k=m.eta,
        support=(k0 - W, k0 + W),
        tails=True,
        hints=hints,
    )
