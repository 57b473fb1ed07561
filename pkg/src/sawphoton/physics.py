"""Device parameters and closed-form formulas for the acousto-electric photon source.

Units are SI throughout (seconds, hertz, volts, meters, coulombs). Conversions
to laboratory units (GHz, pA, cm^-2, um) live in :mod:`sawphoton.units` and are
applied only at the reporting layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Final

import numpy as np

#: Elementary charge [C] (exact by SI definition).
ELEMENTARY_CHARGE: Final[float] = 1.602176634e-19
#: Vacuum permittivity [F/m] (CODATA 2018).
VACUUM_PERMITTIVITY: Final[float] = 8.8541878128e-12


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class InvalidParameter(ValueError):
    """A parameter violates a physical invariant.

    ``field`` names the offending attribute so that callers parsing nested
    configuration can report a full path.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


def _require(cond: bool, field: str, message: str) -> None:
    if not cond:
        raise InvalidParameter(field, message)


def _finite(x: float) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


@dataclass(frozen=True)
class PhysicalConstants:
    elementary_charge: float = ELEMENTARY_CHARGE
    vacuum_permittivity: float = VACUUM_PERMITTIVITY

    def __post_init__(self):
        _require(self.elementary_charge == ELEMENTARY_CHARGE, "elementary_charge", "fixed constant")
        _require(self.vacuum_permittivity == VACUUM_PERMITTIVITY, "vacuum_permittivity", "fixed constant")


CONSTANTS: Final[PhysicalConstants] = PhysicalConstants()


@dataclass(frozen=True)
class SawParams:
    """Surface acoustic wave drive: frequency [Hz], velocity [m/s], potential amplitude [V]."""

    frequency: float
    sound_velocity: float = 3000.0
    amplitude: float = 0.03

    def __post_init__(self):
        for name in ("frequency", "sound_velocity", "amplitude"):
            value = getattr(self, name)
            _require(_finite(value) and value > 0, name, f"must be a finite positive number, got {value!r}")

    @property
    def wavelength(self) -> float:
        return self.sound_velocity / self.frequency

    @property
    def wavevector(self) -> float:
        return 2.0 * math.pi * self.frequency / self.sound_velocity

    @property
    def peak_field(self) -> float:
        """Peak longitudinal electric field of the SAW potential [V/m]."""
        return self.wavevector * self.amplitude


@dataclass(frozen=True)
class JunctionParams:
    """Lateral n-i-p junction: band drop [V], relative permittivity, 2D hole density [m^-2], i-region length [m]."""

    band_drop: float = 1.5
    dielectric_constant: float = 12.0
    hole_density: float = 1e15
    iregion_length: float = 3.2e-5

    def __post_init__(self):
        _require(_finite(self.band_drop) and self.band_drop > 0, "band_drop", "must be > 0")
        _require(_finite(self.dielectric_constant) and self.dielectric_constant >= 1,
                 "dielectric_constant", "must be >= 1")
        _require(_finite(self.hole_density) and self.hole_density > 0, "hole_density", "must be > 0")
        _require(_finite(self.iregion_length) and self.iregion_length > 0, "iregion_length", "must be > 0")


@dataclass(frozen=True)
class InjectionSpec:
    """Quantized injection: ``electrons_per_packet`` electrons every ``divider`` SAW cycles."""

    electrons_per_packet: int
    divider: int
    saw_frequency: float

    def __post_init__(self):
        _require(_is_int(self.electrons_per_packet) and self.electrons_per_packet >= 1,
                 "electrons_per_packet", "must be an integer >= 1")
        _require(_is_int(self.divider) and self.divider >= 1, "divider", "must be an integer >= 1")
        _require(_finite(self.saw_frequency) and self.saw_frequency > 0, "saw_frequency", "must be > 0")

    @property
    def injection_period(self) -> float:
        return self.divider / self.saw_frequency

    @property
    def injection_rate(self) -> float:
        return self.saw_frequency / self.divider


def _is_int(x) -> bool:
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


@dataclass(frozen=True)
class RecombinationModel:
    """Radiative and non-radiative recombination rates [1/s] in the p-region."""

    radiative_rate: float
    nonradiative_rate: float = 0.0

    def __post_init__(self):
        _require(_finite(self.radiative_rate) and self.radiative_rate > 0, "radiative_rate", "must be > 0")
        _require(_finite(self.nonradiative_rate) and self.nonradiative_rate >= 0,
                 "nonradiative_rate", "must be >= 0")

    @property
    def total_rate(self) -> float:
        return self.radiative_rate + self.nonradiative_rate

    @property
    def branching_ratio(self) -> float:
        return self.radiative_rate / self.total_rate


@dataclass(frozen=True, eq=False)
class NumberStateDistribution:
    """Photon-number probabilities ``probabilities[m]`` for m = 0..max_photons at ``eval_time``."""

    max_photons: int
    probabilities: np.ndarray
    eval_time: float

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)
        _require(p.shape == (self.max_photons + 1,), "probabilities", "length must be max_photons + 1")
        _require(bool(np.all((p >= 0) & (p <= 1))), "probabilities", "entries must lie in [0, 1]")

    def __eq__(self, other):
        if not isinstance(other, NumberStateDistribution):
            return NotImplemented
        return (self.max_photons == other.max_photons and self.eval_time == other.eval_time
                and np.array_equal(self.probabilities, other.probabilities))

    __hash__ = None

    def __getitem__(self, m: int) -> float:
        return float(self.probabilities[m])

    def __len__(self) -> int:
        return self.max_photons + 1

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(self.max_photons + 1), self.probabilities))


def quantized_current(n: int, f: float) -> float:
    """Acousto-electric current on the ``n``-th plateau, ``n * e * f`` [A]."""
    if not _is_int(n) or n < 1:
        raise DomainError(f"electrons per packet must be a positive integer, got {n!r}")
    if not (math.isfinite(f) and f >= 0):
        raise DomainError(f"frequency must be finite and >= 0, got {f!r}")
    return n * (ELEMENTARY_CHARGE * f)


def _check_emission_args(n: int, gamma: float, t: float) -> float:
    if not _is_int(n) or n < 1:
        raise DomainError(f"N must be a positive integer, got {n!r}")
    gt = gamma * t
    if not math.isfinite(gt):
        raise DomainError(f"gamma*t must be finite, got {gt!r}")
    if not gamma > 0:
        raise DomainError(f"gamma must be > 0, got {gamma!r}")
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t!r}")
    return gt


_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# Stirling-series remainder for n = 0..15, from lgamma directly
_STIRLERR_TABLE = np.array(
    [0.0] + [math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - _HALF_LOG_2PI for n in range(1, 16)])


def _stirlerr(n: np.ndarray) -> np.ndarray:
    """``log(n!) - log(sqrt(2 pi n) (n/e)^n)`` for integer ``n >= 0``."""
    n = np.asarray(n, dtype=float)
    out = np.empty_like(n)
    small = n <= 15
    out[small] = _STIRLERR_TABLE[n[small].astype(int)]
    m = n[~small]
    nn = m * m
    out[~small] = (1 / 12 - (1 / 360 - (1 / 1260 - (1 / 1680 - 1 / 1188 / nn) / nn) / nn) / nn) / m
    return out


def _bd0(x: np.ndarray, mean: np.ndarray) -> np.ndarray:
    """Deviance term ``x log(x/mean) + mean - x``, without cancellation when x is near mean."""
    x = np.asarray(x, dtype=float)
    mean = np.broadcast_to(np.asarray(mean, dtype=float), x.shape)
    out = np.empty_like(x)
    near = np.abs(x - mean) < 0.1 * (x + mean)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        far = ~near
        out[far] = x[far] * np.log(x[far] / mean[far]) + mean[far] - x[far]
    xn, mn = x[near], mean[near]
    v = (xn - mn) / (xn + mn)
    s = (xn - mn) * v
    ej = 2 * xn * v
    v2 = v * v
    for j in range(1, 60):
        ej = ej * v2
        s1 = s + ej / (2 * j + 1)
        if np.array_equal(s1, s):
            break
        s = s1
    out[near] = s
    return out


def _binomial_log_pmf(n: int, log_p: float, log_q: float) -> np.ndarray:
    """Log binomial pmf over k = 0..n given log success / failure probabilities.

    Saddle-point form (Loader 2000): every term is accurate to a few ulp in
    log space, so the pmf normalizes to ~1e-15 even for n in the thousands.
    """
    k = np.arange(n + 1, dtype=float)
    out = np.empty(n + 1)
    out[0] = n * log_q
    out[n] = n * log_p
    if n >= 2:
        ki = k[1:n]
        np_mean = n * math.exp(log_p)
        nq_mean = n * math.exp(log_q)
        lc = (_stirlerr(np.array([n]))[0] - _stirlerr(ki) - _stirlerr(n - ki)
              - _bd0(ki, np_mean) - _bd0(n - ki, nq_mean))
        lf = math.log(2 * math.pi) + np.log(ki) + np.log1p(-ki / n)
        out[1:n] = lc - 0.5 * lf
    return out


def emitted_count_pmf(n: int, gamma: float, t: float) -> NumberStateDistribution:
    """Distribution of the number of photons emitted by time ``t`` after injecting ``n`` electrons.

    Each electron recombines independently at rate ``gamma``, so the count is
    binomial with success probability ``1 - exp(-gamma t)``. Evaluated in log
    space so that ``n`` in the thousands neither overflows nor underflows.
    """
    gt = _check_emission_args(n, gamma, t)
    if gt == 0.0:
        probs = np.zeros(n + 1)
        probs[0] = 1.0
        return NumberStateDistribution(n, probs, float(t))
    log_q = -gt  # log P(not yet emitted)
    log_p = math.log(-math.expm1(-gt))  # log P(emitted)
    probs = np.exp(_binomial_log_pmf(n, log_p, log_q))
    return NumberStateDistribution(n, np.clip(probs, 0.0, 1.0), float(t))


def field_state_diagonal(n: int, gamma: float, t: float) -> NumberStateDistribution:
    """Diagonal of the output-mode density matrix ``t`` after injecting ``n`` electrons.

    The sum runs over the number of electrons still waiting to recombine,
    ``k``, each contributing ``C(n, k) e^{-k gamma t} (1 - e^{-gamma t})^{n-k}``
    to the photon-number state ``|n - k>``. The result is indexed by photon
    number.
    """
    gt = _check_emission_args(n, gamma, t)
    diag = np.zeros(n + 1)
    if gt == 0.0:
        diag[0] = 1.0
        return NumberStateDistribution(n, diag, float(t))
    log_survive = -gt
    log_decayed = math.log(-math.expm1(-gt))
    weights = np.exp(_binomial_log_pmf(n, log_survive, log_decayed))  # indexed by electrons waiting
    for waiting in range(n + 1):
        diag[n - waiting] = weights[waiting]
    return NumberStateDistribution(n, np.clip(diag, 0.0, 1.0), float(t))


def max_injection_frequency(gamma: float, epsilon: float) -> float:
    """Highest single-electron injection rate with ``P(photon not yet emitted at T) <= epsilon``.

    Solves ``exp(-gamma / f) = epsilon`` for ``f``.
    """
    if not (math.isfinite(gamma) and gamma > 0):
        raise DomainError(f"gamma must be finite and > 0, got {gamma!r}")
    if not (0 < epsilon < 1):
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    return gamma / math.log(1.0 / epsilon)


def _check_screening(k: float, eps_r: float) -> None:
    if not (math.isfinite(k) and k > 0):
        raise DomainError(f"wavevector must be > 0, got {k!r}")
    if not (math.isfinite(eps_r) and eps_r >= 1):
        raise DomainError(f"dielectric constant must be >= 1, got {eps_r!r}")


def screening_potential(charge_amplitude: float, k: float, eps_r: float) -> float:
    """In-plane potential [V] of a sheet charge ``rho0 exp(-ikx)`` with amplitude in C/m^2."""
    _check_screening(k, eps_r)
    if charge_amplitude < 0:
        raise DomainError(f"charge amplitude must be >= 0, got {charge_amplitude!r}")
    return charge_amplitude / (VACUUM_PERMITTIVITY * k * (eps_r + 1.0))


def screening_charge(saw_amplitude: float, k: float, eps_r: float) -> float:
    """Sheet-charge amplitude [C/m^2] whose potential cancels a SAW of ``saw_amplitude`` volts."""
    _check_screening(k, eps_r)
    if saw_amplitude < 0:
        raise DomainError(f"SAW amplitude must be >= 0, got {saw_amplitude!r}")
    return VACUUM_PERMITTIVITY * k * (eps_r + 1.0) * saw_amplitude


def screening_hole_density(saw_amplitude: float, k: float, eps_r: float) -> float:
    """Hole number density [m^-2] needed to fully screen the SAW potential."""
    return screening_charge(saw_amplitude, k, eps_r) / ELEMENTARY_CHARGE


def min_iregion_length(band_drop: float, saw: SawParams, safety: float = 0.25) -> float:
    """Shortest i-region [m] whose uniform junction field stays below ``safety`` times the peak SAW field."""
    if not (math.isfinite(band_drop) and band_drop >= 0):
        raise DomainError(f"band drop must be >= 0, got {band_drop!r}")
    if not (0 < safety <= 1):
        raise DomainError(f"safety factor must lie in (0, 1], got {safety!r}")
    e_saw = saw.peak_field
    if not e_saw > 0:
        raise DomainError("SAW amplitude is zero; electrons cannot be confined")
    return band_drop / (safety * e_saw)
