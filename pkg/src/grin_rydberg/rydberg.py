"""Rydberg receiver sensitivity and EIT Autler-Townes splitting analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import curve_fit
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from .errors import DataError, DomainError, UnresolvedDoubletError
from .focal import MEASURED, GainEstimate

PLANCK_H = 6.62607015e-34  # J s, exact (SI 2019)
ETA0 = 376.730313668  # ohm


@dataclass(frozen=True)
class AtomicTransition:
    dipole_moment_mu: float  # C m
    rf_frequency: float      # Hz
    label: str = ""

    def __post_init__(self):
        if not self.dipole_moment_mu > 0:
            raise DomainError("dipole moment must be positive")
        if not self.rf_frequency > 0:
            raise DomainError("RF frequency must be positive")


@dataclass(frozen=True)
class MeasurementConfig:
    measurement_time_Tm: float = 1.0
    num_measurements_Nm: int = 1

    def __post_init__(self):
        if not self.measurement_time_Tm > 0:
            raise DomainError("measurement time must be positive")
        if int(self.num_measurements_Nm) != self.num_measurements_Nm or self.num_measurements_Nm < 1:
            raise DomainError("number of measurements must be an integer >= 1")


def min_detectable_field(tr: AtomicTransition, mc: MeasurementConfig) -> float:
    """Shot-noise-limited minimum field h / (mu Tm sqrt(Nm)), in V/m."""
    return PLANCK_H / (tr.dipole_moment_mu * mc.measurement_time_Tm
                       * math.sqrt(mc.num_measurements_Nm))


def at_splitting(tr: AtomicTransition, e_incident: float, gamma: float = 1.0) -> float:
    """Autler-Townes splitting in Hz for an incident field focused by gain gamma."""
    if e_incident < 0:
        raise DomainError("incident field magnitude must be non-negative")
    if gamma < 0:
        raise DomainError("focusing gain must be non-negative")
    return gamma * tr.dipole_moment_mu * e_incident / PLANCK_H


def enhanced_min_field(tr: AtomicTransition, mc: MeasurementConfig, gamma: float) -> float:
    if not gamma > 0:
        raise DomainError("focusing gain must be positive")
    return PLANCK_H / (gamma * tr.dipole_moment_mu * mc.measurement_time_Tm
                       * math.sqrt(mc.num_measurements_Nm))


# --- spectra ---------------------------------------------------------------

@dataclass
class EitSpectrum:
    detuning_hz: np.ndarray
    transmission: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.detuning_hz = np.asarray(self.detuning_hz, dtype=float)
        self.transmission = np.asarray(self.transmission, dtype=float)
        if self.detuning_hz.shape != self.transmission.shape or self.detuning_hz.ndim != 1:
            raise DataError("detuning and transmission must be 1-D and equal length")
        if np.any(np.diff(self.detuning_hz) <= 0):
            raise DataError("detuning axis must be strictly increasing")

    def __len__(self):
        return len(self.detuning_hz)

    def to_csv(self) -> str:
        lines = [TRACE_HEADER]
        lines += [f"{x:.9g},{y:.9g}" for x, y in zip(self.detuning_hz, self.transmission)]
        return "\n".join(lines) + "\n"


TRACE_HEADER = "detuning_hz,transmission"


def lorentzian(x, center, fwhm, height):
    hw = 0.5 * fwhm
    return height * hw * hw / ((x - center) ** 2 + hw * hw)


def detuning_grid(start: float, stop: float, step: float) -> np.ndarray:
    if not step > 0 or stop <= start:
        raise DomainError("detuning grid must have step > 0 and stop > start")
    count = int(math.floor((stop - start) / step * (1 + 1e-12))) + 1
    return start + step * np.arange(count)


def synth_eit_spectrum(delta_f: float, linewidth: float, amplitude: float = 1.0,
                       noise_rms: float = 0.0, grid=(-40e6, 40e6, 0.1e6),
                       seed: Optional[int] = None, rng: Optional[np.random.Generator] = None,
                       meta: Optional[dict] = None) -> EitSpectrum:
    """Phenomenological EIT trace.

    With delta_f > 0 the window splits into two Lorentzians at +-delta_f/2,
    each of height amplitude/2, so the area matches the unsplit peak of
    height ``amplitude``. ``grid`` is ``(start, stop, step)`` or an array.
    """
    if not linewidth > 0:
        raise DomainError("linewidth must be positive")
    if delta_f < 0:
        raise DomainError("splitting must be non-negative")
    if noise_rms < 0:
        raise DomainError("noise_rms must be non-negative")
    x = detuning_grid(*grid) if isinstance(grid, tuple) else np.asarray(grid, dtype=float)
    if x.size == 0:
        raise DomainError("detuning grid is empty")
    if delta_f == 0:
        y = lorentzian(x, 0.0, linewidth, amplitude)
    else:
        y = (lorentzian(x, -delta_f / 2, linewidth, amplitude / 2)
             + lorentzian(x, delta_f / 2, linewidth, amplitude / 2))
    if noise_rms > 0:
        gen = rng if rng is not None else np.random.default_rng(seed)
        y = y + gen.normal(0.0, noise_rms, size=x.shape)
    info = {"rf_on": delta_f > 0}
    info.update(meta or {})
    return EitSpectrum(x, y, info)


@dataclass(frozen=True)
class SplittingFit:
    delta_f_hz: float
    uncertainty_hz: float
    peak_positions: Tuple[float, float]
    goodness: float
    params: tuple = ()

    def report(self) -> str:
        return (f"delta_f_hz={self.delta_f_hz:.9g}\n"
                f"uncertainty_hz={self.uncertainty_hz:.9g}\n"
                f"peak1_hz={self.peak_positions[0]:.9g}\n"
                f"peak2_hz={self.peak_positions[1]:.9g}\n"
                f"residual_norm={self.goodness:.9g}\n")


def _doublet(x, c1, c2, w1, w2, h1, h2, base):
    return lorentzian(x, c1, w1, h1) + lorentzian(x, c2, w2, h2) + base


def _half_width_guess(x, y, k, base):
    half = base + 0.5 * (y[k] - base)
    left = k
    while left > 0 and y[left] > half:
        left -= 1
    right = k
    while right < len(y) - 1 and y[right] > half:
        right += 1
    return max(x[right] - x[left], 2 * (x[1] - x[0]))


def fit_splitting(spec: EitSpectrum, prominence: float = 0.25,
                  smooth_samples: Optional[int] = None) -> SplittingFit:
    """Measure the Autler-Townes splitting of an EIT doublet.

    Peaks are first located on a lightly smoothed copy of the trace (two
    most prominent maxima, prominence relative to the trace range), then
    refined with a least-squares fit of two Lorentzians on a constant
    baseline.
    """
    x, y = spec.detuning_hz, spec.transmission
    if len(x) < 32:
        raise DataError(f"need at least 32 samples to fit a doublet, got {len(x)}")
    span = float(np.ptp(y))
    if span == 0:
        raise UnresolvedDoubletError("flat trace has no peaks")
    if smooth_samples is None:
        smooth_samples = max(1, len(x) // 200) * 2 + 1
    ys = uniform_filter1d(y, smooth_samples, mode="nearest")
    peaks, props = find_peaks(ys, prominence=prominence * span)
    if len(peaks) < 2:
        pos = float(x[peaks[np.argmax(props["prominences"])]]) if len(peaks) else None
        raise UnresolvedDoubletError(
            f"found {len(peaks)} resolvable peak(s); doublet unresolved", pos)
    top = np.sort(peaks[np.argsort(props["prominences"])[-2:]])
    base = float(np.percentile(y, 5))
    p0 = [x[top[0]], x[top[1]],
          _half_width_guess(x, ys, top[0], base), _half_width_guess(x, ys, top[1], base),
          ys[top[0]] - base, ys[top[1]] - base, base]
    dx = x[1] - x[0]
    lower = [x[0], x[0], dx / 10, dx / 10, 0.0, 0.0, -np.inf]
    upper = [x[-1], x[-1], np.ptp(x), np.ptp(x), np.inf, np.inf, np.inf]
    try:
        popt, pcov = curve_fit(_doublet, x, y, p0=p0, bounds=(lower, upper),
                               xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=20000)
    except RuntimeError as exc:
        raise UnresolvedDoubletError(f"doublet fit did not converge: {exc}",
                                     float(x[top[0]])) from exc
    c1, c2 = sorted((popt[0], popt[1]))
    resid = y - _doublet(x, *popt)
    var = pcov[0, 0] + pcov[1, 1] - 2 * pcov[0, 1]
    unc = float(math.sqrt(var)) if np.isfinite(var) and var > 0 else 0.0
    return SplittingFit(float(c2 - c1), unc, (float(c1), float(c2)),
                        float(np.linalg.norm(resid)), tuple(float(v) for v in popt))


def gain_from_spectra(with_lens: EitSpectrum, without_lens: EitSpectrum, **fit_kw) -> GainEstimate:
    """Focusing gain as the ratio of fitted splittings (with / without lens)."""
    fw = fit_splitting(with_lens, **fit_kw)
    fo = fit_splitting(without_lens, **fit_kw)
    if fo.delta_f_hz <= 0:
        raise DomainError("reference splitting is zero")
    return GainEstimate(fw.delta_f_hz / fo.delta_f_hz, MEASURED)


def field_from_splitting(fit, tr: AtomicTransition) -> float:
    """Field amplitude h * delta_f / mu from a splitting (fit or Hz value)."""
    delta_f = fit.delta_f_hz if isinstance(fit, SplittingFit) else float(fit)
    if delta_f < 0:
        raise DomainError("splitting must be non-negative")
    return PLANCK_H * delta_f / tr.dipole_moment_mu
