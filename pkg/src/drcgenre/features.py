"""Clip-level genre features: 13 MFCCs, tempo, zero-crossing rate, tonal centroid.

All functions are deterministic. Frame-level quantities are averaged over the
clip to give one 21-dimensional vector per clip::

    mfcc_0 .. mfcc_12, tempo_bpm, zcr, tc_0 .. tc_5
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.fft import dct
from scipy.ndimage import gaussian_filter1d
from scipy.signal import get_window

from .audio_io import AudioBuffer

__all__ = [
    "FEATURE_NAMES",
    "FrameSpec",
    "MelFilterbank",
    "FeatureConfig",
    "FeatureVector",
    "TempoEstimate",
    "hz_to_mel",
    "mel_to_hz",
    "frame_signal",
    "power_spectrum",
    "mel_filterbank",
    "dct_ii",
    "mfcc",
    "zero_crossing_rate",
    "onset_strength",
    "estimate_tempo",
    "chroma",
    "TONAL_CENTROID_MATRIX",
    "tonal_centroid",
    "hcdf",
    "extract_feature_vector",
    "extract_diagnostics",
]

FEATURE_NAMES = tuple(
    [f"mfcc_{i}" for i in range(13)] + ["tempo_bpm", "zcr"] + [f"tc_{i}" for i in range(6)]
)
LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class FrameSpec:
    frame_len: int = 2048
    hop_len: int = 512
    window: str = "hann"

    def __post_init__(self):
        if not 0 < self.hop_len <= self.frame_len:
            raise ValueError(f"need 0 < hop_len <= frame_len, got hop={self.hop_len} frame={self.frame_len}")
        if self.window not in ("hann", "rect"):
            raise ValueError(f"unknown window {self.window!r}")


@dataclass(frozen=True)
class FeatureConfig:
    """Analysis parameters for :func:`extract_feature_vector`.

    Tempo uses its own, finer framing: onset timing needs a short hop far more
    than it needs frequency resolution.
    """

    frame: FrameSpec = FrameSpec()
    n_mfcc: int = 13
    n_mels: int = 26
    tempo_frame: FrameSpec = FrameSpec(1024, 128)
    tempo_band: tuple[float, float] = (40.0, 200.0)


@dataclass(frozen=True)
class FeatureVector:
    mfcc: np.ndarray
    tempo_bpm: float
    zcr: float
    tonal_centroid: np.ndarray

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.mfcc, [self.tempo_bpm, self.zcr], self.tonal_centroid])

    @classmethod
    def from_array(cls, values) -> "FeatureVector":
        v = np.asarray(values, dtype=np.float64)
        if v.shape != (21,):
            raise ValueError(f"expected 21 values, got shape {v.shape}")
        return cls(v[:13].copy(), float(v[13]), float(v[14]), v[15:].copy())


class TempoEstimate(NamedTuple):
    bpm: float
    reliable: bool


# -- mel scale ---------------------------------------------------------------

def hz_to_mel(f):
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise ValueError("frequency must be non-negative")
    m = 2595.0 * np.log10(1.0 + f / 700.0)
    return m if m.ndim else float(m)


def mel_to_hz(m):
    f = 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)
    return f if f.ndim else float(f)


# -- spectra -----------------------------------------------------------------

@lru_cache(maxsize=None)
def _window(kind: str, n: int) -> np.ndarray:
    w = get_window("hann", n, fftbins=True) if kind == "hann" else np.ones(n)
    w.flags.writeable = False
    return w


def frame_signal(x: np.ndarray, spec: FrameSpec) -> np.ndarray:
    """Split `x` into overlapping frames (n_frames, frame_len); the tail is dropped."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < spec.frame_len:
        raise ValueError(f"signal of {x.size} samples is shorter than one frame ({spec.frame_len})")
    frames = np.lib.stride_tricks.sliding_window_view(x, spec.frame_len)[:: spec.hop_len]
    return frames


def power_spectrum(frame, window: str = "hann") -> np.ndarray:
    """|DFT|^2 of the windowed frame, bins 0..N/2."""
    frame = np.asarray(frame, dtype=np.float64)
    n = frame.shape[-1]
    if n < 2:
        raise ValueError("frame length must be at least 2")
    spectrum = np.fft.rfft(frame * _window(window, n), axis=-1)
    return spectrum.real**2 + spectrum.imag**2


@dataclass(frozen=True, eq=False)
class MelFilterbank:
    """Triangular filters with unit peaks, centres equally spaced in mel."""

    weights: np.ndarray
    sample_rate: int
    centers_hz: np.ndarray = field(repr=False)

    @property
    def n_filters(self) -> int:
        return self.weights.shape[0]


@lru_cache(maxsize=32)
def mel_filterbank(n_filters: int, frame_len: int, sample_rate: int) -> MelFilterbank:
    """Build `n_filters` triangles spanning 0 Hz to Nyquist.

    Raises ValueError if the frame is too short for every filter to cover at
    least one FFT bin.
    """
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_filters + 2))
    freqs = np.fft.rfftfreq(frame_len, 1.0 / sample_rate)
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (mid - lo)
    falling = (hi - freqs) / (hi - mid)
    w = np.maximum(0.0, np.minimum(rising, falling))
    if np.any(w.max(axis=1) <= 0):
        raise ValueError(f"{n_filters} mel filters do not all fit in a {frame_len}-point FFT at {sample_rate} Hz")
    w.flags.writeable = False
    return MelFilterbank(w, sample_rate, edges[1:-1])


def dct_ii(x, n_out: int | None = None) -> np.ndarray:
    """Orthonormal DCT-II along the last axis, optionally truncated to `n_out` terms."""
    c = dct(np.asarray(x, dtype=np.float64), type=2, norm="ortho", axis=-1)
    return c if n_out is None else c[..., :n_out]


def mfcc(buffer: AudioBuffer, spec: FrameSpec | None = None, bank: MelFilterbank | None = None,
         n_coeffs: int = 13) -> np.ndarray:
    """Per-frame MFCCs, shape (n_frames, n_coeffs).

    Power spectrum -> mel energies -> natural log (energies floored at 1e-10)
    -> DCT-II, keeping the first `n_coeffs` coefficients.
    """
    spec = spec or FrameSpec()
    bank = bank or mel_filterbank(26, spec.frame_len, buffer.sample_rate)
    if bank.weights.shape[1] != spec.frame_len // 2 + 1:
        raise ValueError("filterbank does not match the frame length")
    power = power_spectrum(frame_signal(buffer.samples, spec), spec.window)
    energies = power @ bank.weights.T
    return dct_ii(np.log(np.maximum(energies, LOG_FLOOR)), n_coeffs)


# -- time-domain -------------------------------------------------------------

def zero_crossing_rate(buffer) -> float:
    """Fraction of adjacent sample pairs whose product is strictly negative.

    Accepts an :class:`AudioBuffer` or a plain sequence.
    """
    x = buffer.samples if isinstance(buffer, AudioBuffer) else np.asarray(buffer, dtype=np.float64)
    if x.size < 2:
        raise ValueError("need at least 2 samples")
    return float(np.count_nonzero(x[1:] * x[:-1] < 0) / (x.size - 1))


# -- tempo -------------------------------------------------------------------

def onset_strength(buffer: AudioBuffer, spec: FrameSpec) -> np.ndarray:
    """Half-wave rectified spectral flux of the log-compressed magnitude spectrum."""
    power = power_spectrum(frame_signal(buffer.samples, spec), spec.window)
    mag = np.log1p(1000.0 * np.sqrt(power))
    return np.maximum(np.diff(mag, axis=0), 0.0).sum(axis=1)


def estimate_tempo(buffer: AudioBuffer, spec: FrameSpec | None = None,
                   band: tuple[float, float] = (40.0, 200.0)) -> TempoEstimate:
    """Global tempo from the autocorrelation of the onset envelope.

    The envelope is smoothed with a 2-frame Gaussian so that beat periods which
    are not a whole number of hops do not favour the doubled period. The
    strongest local maximum of its (biased) autocorrelation whose lag falls
    inside `band` is then refined by parabolic interpolation. Silent input, or an
    envelope with no peak in the band, returns the band midpoint with
    ``reliable=False``.
    """
    spec = spec or FrameSpec(1024, 128)
    lo_bpm, hi_bpm = band
    fallback = TempoEstimate(0.5 * (lo_bpm + hi_bpm), False)
    env = gaussian_filter1d(onset_strength(buffer, spec), 2.0)
    env = env - env.mean()
    if env.size < 3 or not np.any(np.abs(env) > 1e-12):
        return fallback

    frame_rate = buffer.sample_rate / spec.hop_len
    n = env.size
    ac = np.correlate(env, env, mode="full")[n - 1 :] / n
    min_lag = max(1, int(np.floor(60.0 * frame_rate / hi_bpm)))
    max_lag = min(n - 2, int(np.ceil(60.0 * frame_rate / lo_bpm)))
    if max_lag <= min_lag:
        return fallback

    lags = np.arange(min_lag, max_lag + 1)
    is_peak = (ac[lags] > ac[lags - 1]) & (ac[lags] >= ac[lags + 1]) & (ac[lags] > 0)
    if not np.any(is_peak):
        return fallback
    candidates = lags[is_peak]
    k = candidates[np.argmax(ac[candidates])]
    a, b, c = ac[k - 1], ac[k], ac[k + 1]
    denom = a - 2.0 * b + c
    offset = 0.5 * (a - c) / denom if denom < 0 else 0.0
    bpm = 60.0 * frame_rate / (k + offset)
    if not lo_bpm <= bpm <= hi_bpm:
        return TempoEstimate(float(np.clip(bpm, lo_bpm, hi_bpm)), True)
    return TempoEstimate(float(bpm), True)


# -- pitch class and tonal centroid ------------------------------------------

def chroma(frame_power, sample_rate: int) -> np.ndarray:
    """Fold spectrum bins into 12 pitch classes (class 0 = C, class 9 = A).

    Each bin at frequency f goes to ``(round(12*log2(f/440)) + 69) mod 12``.
    Bins below 27.5 Hz are ignored. Works on a single spectrum or on a
    stack of spectra along the last axis.
    """
    p = np.asarray(frame_power, dtype=np.float64)
    n_fft = 2 * (p.shape[-1] - 1)
    classes = _pitch_classes(n_fft, int(sample_rate))
    keep = classes >= 0
    out = np.zeros(p.shape[:-1] + (12,))
    for pc in range(12):
        out[..., pc] = p[..., keep & (classes == pc)].sum(axis=-1)
    return out


@lru_cache(maxsize=32)
def _pitch_classes(n_fft: int, sample_rate: int) -> np.ndarray:
    f = np.fft.rfftfreq(n_fft, 1.0 / sample_rate)
    classes = np.full(f.size, -1)
    ok = f >= 27.5
    classes[ok] = (np.round(12.0 * np.log2(f[ok] / 440.0)).astype(int) + 69) % 12
    return classes


def _tonal_centroid_matrix(r_fifths=1.0, r_minor=1.0, r_major=0.5) -> np.ndarray:
    l = np.arange(12)
    rows = []
    for radius, angle in ((r_fifths, 7 * np.pi / 6), (r_minor, 3 * np.pi / 2), (r_major, 2 * np.pi / 3)):
        rows += [radius * np.sin(l * angle), radius * np.cos(l * angle)]
    m = np.vstack(rows)
    m.flags.writeable = False
    return m


# rows: fifths (sin, cos), minor thirds (sin, cos), major thirds (sin, cos)
TONAL_CENTROID_MATRIX = _tonal_centroid_matrix()


def tonal_centroid(chroma_vec, return_flag: bool = False):
    """Project L1-normalised chroma onto the circles of fifths and thirds.

    Accepts shape (12,) or (n, 12). All-zero chroma maps to the zero vector; with
    ``return_flag=True`` a boolean mask of those degenerate rows is also returned.
    """
    c = np.asarray(chroma_vec, dtype=np.float64)
    norm = np.abs(c).sum(axis=-1, keepdims=True)
    empty = norm[..., 0] == 0
    zeta = (c @ TONAL_CENTROID_MATRIX.T) / np.where(norm == 0, 1.0, norm)
    zeta[empty] = 0.0
    return (zeta, empty) if return_flag else zeta


def hcdf(centroid_series) -> np.ndarray:
    """Harmonic change: ``||zeta[n+1] - zeta[n-1]||`` for each interior frame."""
    z = np.asarray(centroid_series, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] < 3:
        raise ValueError("need a (n_frames >= 3, dim) centroid series")
    return np.linalg.norm(z[2:] - z[:-2], axis=1)


# -- clip level --------------------------------------------------------------

def _frame_features(buffer: AudioBuffer, config: FeatureConfig):
    spec = config.frame
    power = power_spectrum(frame_signal(buffer.samples, spec), spec.window)
    bank = mel_filterbank(config.n_mels, spec.frame_len, buffer.sample_rate)
    coeffs = dct_ii(np.log(np.maximum(power @ bank.weights.T, LOG_FLOOR)), config.n_mfcc)
    zeta, empty = tonal_centroid(chroma(power, buffer.sample_rate), return_flag=True)
    return coeffs, zeta, empty


def extract_feature_vector(buffer: AudioBuffer, config: FeatureConfig | None = None) -> FeatureVector:
    config = config or FeatureConfig()
    coeffs, zeta, _ = _frame_features(buffer, config)
    tempo = estimate_tempo(buffer, config.tempo_frame, config.tempo_band)
    return FeatureVector(
        mfcc=coeffs.mean(axis=0),
        tempo_bpm=tempo.bpm,
        zcr=zero_crossing_rate(buffer),
        tonal_centroid=zeta.mean(axis=0),
    )


def extract_diagnostics(buffer: AudioBuffer, config: FeatureConfig | None = None) -> dict:
    """Frame-level detail behind :func:`extract_feature_vector`.

    Includes per-frame MFCCs and tonal centroids, the HCDF, the onset envelope,
    and whether the tempo estimate fell back to the band midpoint.
    """
    config = config or FeatureConfig()
    coeffs, zeta, empty = _frame_features(buffer, config)
    tempo = estimate_tempo(buffer, config.tempo_frame, config.tempo_band)
    return {
        "mfcc": coeffs,
        "tonal_centroid": zeta,
        "silent_chroma_frames": int(empty.sum()),
        "hcdf": hcdf(zeta) if zeta.shape[0] >= 3 else np.zeros(0),
        "onset_strength": onset_strength(buffer, config.tempo_frame),
        "tempo": tempo,
    }
