"""Feed-forward dynamic range compressor.

Level detection is per-sample peak (|x|) in dB. The static curve maps input
level to a target output level; the difference is the gain reduction, which
is smoothed by a one-pole filter whose coefficient depends on whether the
reduction is deepening (attack) or recovering (release). Makeup gain is a
constant dB offset added after smoothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .audio_io import AudioBuffer

__all__ = [
    "DB_FLOOR",
    "CompressorSettings",
    "db_from_linear",
    "linear_from_db",
    "static_gain_hard_knee",
    "static_gain_soft_knee",
    "smooth_gain",
    "compress",
]

DB_FLOOR = -120.0
_SILENCE = 1e-6


@dataclass(frozen=True)
class CompressorSettings:
    """The six compressor controls.

    Attributes
    ----------
    threshold_db : float
        Level above which gain reduction starts.
    ratio : float
        Input/output dB slope above the threshold, >= 1.
    knee_width_db : float
        Width of the soft-knee transition, centred on the threshold.
    attack_s, release_s : float
        Smoother time constants in seconds; 0 means instantaneous.
    makeup_db : float
        Post-compression gain, may be negative.
    """

    threshold_db: float
    ratio: float
    knee_width_db: float = 0.0
    attack_s: float = 0.0
    release_s: float = 0.0
    makeup_db: float = 0.0

    def __post_init__(self):
        if not self.ratio >= 1:
            raise ValueError(f"ratio must be >= 1, got {self.ratio}")
        if not self.knee_width_db >= 0:
            raise ValueError(f"knee_width_db must be >= 0, got {self.knee_width_db}")
        if not (self.attack_s >= 0 and self.release_s >= 0):
            raise ValueError("attack_s and release_s must be >= 0")

    def replace(self, **changes) -> "CompressorSettings":
        return CompressorSettings(**{**self.as_dict(), **changes})

    def as_dict(self) -> dict:
        return {
            "threshold_db": self.threshold_db,
            "ratio": self.ratio,
            "knee_width_db": self.knee_width_db,
            "attack_s": self.attack_s,
            "release_s": self.release_s,
            "makeup_db": self.makeup_db,
        }


def db_from_linear(a):
    """20*log10(a), with amplitudes at or below 1e-6 mapped to -120 dB."""
    a = np.asarray(a, dtype=np.float64)
    safe = np.where(a > _SILENCE, a, 1.0)
    out = np.where(a > _SILENCE, 20.0 * np.log10(safe), DB_FLOOR)
    return out if out.ndim else float(out)


def linear_from_db(g):
    out = np.power(10.0, np.asarray(g, dtype=np.float64) / 20.0)
    return out if out.ndim else float(out)


def static_gain_hard_knee(x_db, threshold_db, ratio):
    """Hard-knee curve: identity up to the threshold, slope 1/ratio above it."""
    x = np.asarray(x_db, dtype=np.float64)
    out = np.where(x <= threshold_db, x, threshold_db + (x - threshold_db) / ratio)
    return out if out.ndim else float(out)


def static_gain_soft_knee(x_db, threshold_db, ratio, knee_width_db):
    """Soft-knee curve.

    Below ``T - W/2`` the level passes unchanged, above ``T + W/2`` it follows
    the hard-knee line, and in between a quadratic joins the two with matching
    value and slope at both ends. With ``W == 0`` the middle region is empty and
    the result is exactly :func:`static_gain_hard_knee`.
    """
    x = np.asarray(x_db, dtype=np.float64)
    T, R, W = float(threshold_db), float(ratio), float(knee_width_db)
    over = 2.0 * (x - T)
    out = np.where(over > W, T + (x - T) / R, x)
    if W > 0:
        out = np.atleast_1d(out)
        xk = np.broadcast_to(x, out.shape)
        k = np.abs(np.broadcast_to(over, out.shape)) <= W
        out[k] = xk[k] + (1.0 / R - 1.0) * (xk[k] - T + W / 2.0) ** 2 / (2.0 * W)
        if x.ndim == 0:
            return float(out[0])
    return out if out.ndim else float(out)


def _coeff(time_s, sample_rate):
    if time_s <= 0:
        return 0.0
    return float(np.exp(-1.0 / (time_s * sample_rate)))


@numba.njit(cache=True)
def _smooth(g, alpha_attack, alpha_release):
    out = np.empty_like(g)
    if g.size == 0:
        return out
    state = g[0]
    for n in range(g.size):
        target = g[n]
        # gain is <= 0 dB; a lower target means more reduction, i.e. attack
        a = alpha_attack if target < state else alpha_release
        state = a * state + (1.0 - a) * target
        out[n] = state
    return out


def smooth_gain(raw_gain_db, attack_s, release_s, sample_rate):
    """One-pole attack/release smoothing of a dB gain-reduction signal.

    The filter state starts at the first input value, so a constant input
    passes through unchanged. Each step uses
    ``exp(-1/(attack_s*fs))`` while the target is below the current state and
    ``exp(-1/(release_s*fs))`` otherwise.

    Examples
    --------
    A step from 0 dB to -10 dB with a 10 ms attack at 16 kHz reaches
    ``-10*(1-1/e)`` on its 160th sample.
    """
    if sample_rate <= 0:
        raise ValueError("sample_rate must be positive")
    g = np.ascontiguousarray(raw_gain_db, dtype=np.float64)
    if attack_s <= 0 and release_s <= 0:
        return g.copy()
    return _smooth(g, _coeff(attack_s, sample_rate), _coeff(release_s, sample_rate))


def compress(buffer: AudioBuffer, settings: CompressorSettings) -> AudioBuffer:
    """Apply `settings` to `buffer`; the output has the same length and rate."""
    x = buffer.samples
    level = db_from_linear(np.abs(x))
    target = static_gain_soft_knee(level, settings.threshold_db, settings.ratio, settings.knee_width_db)
    gain = smooth_gain(target - level, settings.attack_s, settings.release_s, buffer.sample_rate)
    return AudioBuffer(x * linear_from_db(gain + settings.makeup_db), buffer.sample_rate)
