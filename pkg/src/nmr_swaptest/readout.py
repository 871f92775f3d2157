"""Readout chain: crush, 90_y on the control, FID, spectrum, multiplet area."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .linalg import DimensionError
from .pulses import Timings, reading_events, run_sequence
from .spins import SpinSystem

MIN_POINTS = 256
CLAMP_RANGE = (-0.05, 1.05)


class AliasError(ValueError):
    pass


class ReadoutError(ValueError):
    pass


@dataclass
class Fid:
    samples: np.ndarray
    dwell_time: float
    windows: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.dwell_time <= 0:
            raise ReadoutError(f"dwell time must be positive, got {self.dwell_time}")

    @property
    def n_points(self) -> int:
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dwell_time

    def __add__(self, other: "Fid") -> "Fid":
        if other.n_points != self.n_points or other.dwell_time != self.dwell_time:
            raise ReadoutError("cannot add FIDs with different acquisition parameters")
        return Fid(self.samples + other.samples, self.dwell_time, dict(self.windows))

    def to_csv(self, fh=None) -> str:
        return _write_csv(fh, "time_s", self.times, self.samples)


@dataclass
class Spectrum:
    frequencies: np.ndarray
    intensities: np.ndarray
    multiplet_windows: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.frequencies) != len(self.intensities):
            raise DimensionError("spectrum axis", len(self.intensities), len(self.frequencies))

    def to_csv(self, fh=None) -> str:
        return _write_csv(fh, "frequency_hz", self.frequencies, self.intensities)


def _write_csv(fh, axis_name, axis, values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([axis_name, "real", "imag"])
    for a, v in zip(axis, values):
        w.writerow([repr(float(a)), repr(float(v.real)), repr(float(v.imag))])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


# ---------------------------------------------------------------- acquisition

@dataclass(frozen=True)
class Acquisition:
    n_points: int
    dwell: float

    @property
    def spectral_width(self) -> float:
        return 1.0 / self.dwell

    @property
    def acquisition_time(self) -> float:
        return self.n_points * self.dwell


def gauss_time_constant(t2: float) -> float:
    """Gaussian time constant whose line FWHM equals the Lorentzian FWHM of ``t2``."""
    return 2.0 * np.sqrt(np.log(2.0)) * t2


def default_acquisition(sys: SpinSystem, decay: float = 4.5) -> Acquisition:
    """Spectral width of four times the offset spread, power-of-two length.

    The acquisition time covers ``decay`` Gaussian time constants of the
    apodized FID (residual ``exp(-decay**2)``), so truncation does not bias
    the multiplet areas.
    """
    spread = max(sys.offsets) - min(sys.offsets)
    jsum = float(np.max(np.sum(np.abs(sys.j), axis=1)))
    sw = 4.0 * spread if spread > 0 else 8.0 * (jsum + 10.0)
    need = decay * gauss_time_constant(max(sys.t2)) * sw
    n = max(MIN_POINTS, 1 << int(np.ceil(np.log2(need))))
    return Acquisition(n, 1.0 / sw)


def linewidth(t2: float) -> float:
    """Lorentzian FWHM in Hz."""
    return 1.0 / (np.pi * t2)


def multiplet_windows(sys: SpinSystem, linewidths: float = 5.0) -> dict:
    """Per-spin integration interval: offset ± (sum |J| + ``linewidths`` FWHM)."""
    jabs = np.sum(np.abs(sys.j), axis=1)
    out = {}
    for k, nu in enumerate(sys.offsets):
        half = jabs[k] + linewidths * linewidth(sys.t2[k])
        out[k] = (nu - half, nu + half)
    return out


# ---------------------------------------------------------------- lines and FID

def detected_lines(sys: SpinSystem, detect=(0,)):
    """Single-quantum transitions seen by ``I+`` on the detected spins.

    Returns ``(rows, cols, freqs_hz, rates)``: the FID is
    ``sum rho[rows, cols] exp((2πi f - rate) t)``.
    """
    n = sys.n_spins
    e = sys.energies()
    rows, cols, freqs, rates = [], [], [], []
    for k in detect:
        if not 0 <= k < n:
            raise ReadoutError(f"detected spin {k} outside 0..{n - 1}")
        bit = 1 << (n - 1 - k)
        for j in range(2 ** n):
            if j & bit:
                i = j ^ bit  # spin k up
                rows.append(j)
                cols.append(i)
                freqs.append((e[i] - e[j]) / (2 * np.pi))
                rates.append(1.0 / sys.t2[k])
    return np.array(rows), np.array(cols), np.array(freqs), np.array(rates)


@lru_cache(maxsize=8)
def _line_basis(sys: SpinSystem, n_points: int, dwell: float, detect: tuple) -> np.ndarray:
    _, _, freqs, rates = detected_lines(sys, detect)
    t = np.arange(n_points) * dwell
    basis = np.exp(np.outer(2j * np.pi * freqs - rates, t))
    basis.setflags(write=False)
    return basis


def synthesize_fid(rho, sys: SpinSystem, n_points: int | None = None, dwell: float | None = None,
                   detect=(0,), noise_sigma: float = 0.0, rng: np.random.Generator | None = None,
                   window_linewidths: float = 5.0) -> Fid:
    """Sample ``Tr(I+ rho(t))`` under free precession with T2 decay.

    Only the detected spins' transverse magnetization contributes. Optional
    complex Gaussian noise of standard deviation ``noise_sigma`` per
    quadrature is drawn from ``rng``.
    """
    acq = default_acquisition(sys)
    n_points = acq.n_points if n_points is None else int(n_points)
    dwell = acq.dwell if dwell is None else float(dwell)
    if n_points < MIN_POINTS:
        raise ReadoutError(f"need at least {MIN_POINTS} points, got {n_points}")
    if dwell <= 0:
        raise ReadoutError(f"dwell time must be positive, got {dwell}")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (sys.dim, sys.dim):
        raise DimensionError("density matrix", (sys.dim, sys.dim), rho.shape)
    detect = tuple(int(k) for k in detect)
    rows, cols, freqs, _ = detected_lines(sys, detect)
    nyq = 0.5 / dwell
    for f in freqs:
        if abs(f) >= nyq:
            raise AliasError(f"line at {f:.3f} Hz lies outside the ±{nyq:.3f} Hz spectral window")
    amps = rho[rows, cols]
    samples = amps @ _line_basis(sys, n_points, dwell, detect)
    if noise_sigma > 0:
        rng = rng if rng is not None else np.random.default_rng(0)
        samples = samples + noise_sigma * (rng.standard_normal(n_points)
                                           + 1j * rng.standard_normal(n_points))
    return Fid(samples, dwell, multiplet_windows(sys, window_linewidths))


def apodize(fid: Fid, t2: float, gauss_tc: float | None = None) -> Fid:
    """Lorentz-to-Gauss transform: multiply by ``exp(t/t2 - (t/tc)^2)``.

    Cancels the ``t2`` decay and replaces it with a Gaussian envelope of equal
    FWHM by default. The window is 1 at t = 0, so line areas are unchanged,
    while the real-part line shape loses its slowly decaying Lorentzian tails.
    """
    tc = gauss_time_constant(t2) if gauss_tc is None else gauss_tc
    t = fid.times
    return Fid(fid.samples * np.exp(t / t2 - (t / tc) ** 2), fid.dwell_time, dict(fid.windows))


def spectrum_of(fid: Fid) -> Spectrum:
    """Discrete Fourier transform on a centred Hz axis.

    The first sample is halved (trapezoidal weight at t = 0) so that line
    areas match the continuous transform.
    """
    s = fid.samples.copy()
    s[0] *= 0.5
    spec = np.fft.fftshift(np.fft.fft(s)) * fid.dwell_time
    freqs = np.fft.fftshift(np.fft.fftfreq(fid.n_points, fid.dwell_time))
    return Spectrum(freqs, spec, dict(fid.windows))


def integrate_multiplet(spec: Spectrum, spin: int) -> float:
    """Trapezoidal area of the real spectrum over the spin's multiplet window."""
    if spin not in spec.multiplet_windows:
        raise ReadoutError(f"no multiplet window for spin {spin}")
    lo, hi = spec.multiplet_windows[spin]
    mask = (spec.frequencies >= lo) & (spec.frequencies <= hi)
    if mask.sum() < 2:
        return 0.0
    return float(np.trapezoid(spec.intensities[mask].real, spec.frequencies[mask]))


class FidelityEstimate(NamedTuple):
    value: float
    raw: float
    clamped: bool


def estimate_fidelity(area: float, area_ref: float) -> FidelityEstimate:
    """Normalise a multiplet area by the reference area, clamping to [-0.05, 1.05]."""
    if not area_ref > 0:
        raise ReadoutError(f"reference area must be positive, got {area_ref}")
    raw = area / area_ref
    lo, hi = CLAMP_RANGE
    val = min(max(raw, lo), hi)
    return FidelityEstimate(float(val), float(raw), val != raw)


def reading_sequence(rho, sys: SpinSystem, noise_on: bool = False, timings: Timings | None = None,
                     settle: float = 0.0, flip_error: float = 0.0,
                     keep_zero_quantum: bool = False) -> np.ndarray:
    """Gradient crush, optional storage delay, then 90_y on the control spin."""
    return run_sequence(rho, reading_events(timings, settle), sys, noise_on=noise_on,
                        flip_error=flip_error, keep_zero_quantum=keep_zero_quantum)


def process(fid: Fid, sys: SpinSystem, spin: int = 0) -> float:
    """Apodize with the spin's T2, transform and integrate its multiplet."""
    return integrate_multiplet(spectrum_of(apodize(fid, sys.t2[spin])), spin)


def measure(rho, sys: SpinSystem, spin: int = 0, acquisition: Acquisition | None = None,
            **fid_kw) -> float:
    """FID -> spectrum -> multiplet area for an already-read-out state."""
    acq = acquisition or default_acquisition(sys)
    return process(synthesize_fid(rho, sys, acq.n_points, acq.dwell, **fid_kw), sys, spin)
