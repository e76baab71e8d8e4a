"""WAV input/output, mono audio buffers, and synthetic genre clips.

Samples are held as float64 in [-1, 1]. Reading accepts RIFF/WAVE files with
16-bit PCM or 32-bit IEEE float data in one or two channels; stereo is folded
to mono by averaging the channels. Writing always produces 16-bit PCM mono.
"""

from __future__ import annotations

import hashlib
import struct
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "AudioBuffer",
    "GenreSpec",
    "WavError",
    "UnsupportedWavError",
    "MalformedWavError",
    "RECIPE_KINDS",
    "DEFAULT_GENRES",
    "read_wav",
    "write_wav",
    "synth_clip",
    "click_train",
    "write_synthetic_dataset",
]

_FORMAT_PCM = 1
_FORMAT_FLOAT = 3
_FORMAT_EXTENSIBLE = 0xFFFE
_INT16_SCALE = 32768.0


class WavError(Exception):
    """Base class for WAV decoding problems."""


class UnsupportedWavError(WavError):
    """The file is a valid WAV, but its encoding is not one we decode."""


class MalformedWavError(WavError):
    """The RIFF structure or fmt chunk is broken."""


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Mono signal with its sample rate.

    Parameters
    ----------
    samples : array_like
        Real amplitudes, nominally in [-1, 1]. Stored as a read-only float64 array.
    sample_rate : int
        Sampling frequency in Hz.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64).reshape(-1)
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def digest(self) -> str:
        """Content hash of rate and sample bytes, used as a cache key."""
        h = hashlib.sha1(struct.pack("<I", self.sample_rate))
        h.update(self.samples.tobytes())
        return h.hexdigest()


def _iter_chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise MalformedWavError(f"chunk {cid!r} truncated: declares {size} bytes, {len(body)} present")
        yield cid, body
        pos += 8 + size + (size & 1)


def read_wav(path) -> AudioBuffer:
    """Read a WAV file into a mono :class:`AudioBuffer`.

    int16 samples are scaled by 1/32768; float32 samples are taken as-is.
    Stereo is downmixed by the per-sample channel mean.

    Raises
    ------
    FileNotFoundError
        If `path` does not exist.
    MalformedWavError
        If the RIFF header, fmt chunk, or data chunk is missing or inconsistent.
    UnsupportedWavError
        For encodings other than 16-bit PCM / 32-bit float, or more than two channels.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such WAV file: {path}")
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedWavError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    for cid, body in _iter_chunks(data):
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            payload = body
    if fmt is None or len(fmt) < 16:
        raise MalformedWavError(f"{path}: missing or short fmt chunk")
    if payload is None:
        raise MalformedWavError(f"{path}: missing data chunk")

    tag, channels, rate, _byte_rate, block_align, bits = struct.unpack_from("<HHIIHH", fmt)
    if tag == _FORMAT_EXTENSIBLE:
        if len(fmt) < 40:
            raise MalformedWavError(f"{path}: truncated WAVE_FORMAT_EXTENSIBLE header")
        tag = struct.unpack_from("<H", fmt, 24)[0]
    if channels == 0 or rate == 0:
        raise MalformedWavError(f"{path}: zero channels or zero sample rate")
    if block_align != channels * bits // 8:
        raise MalformedWavError(f"{path}: block align {block_align} inconsistent with {channels}x{bits} bits")
    if channels > 2:
        raise UnsupportedWavError(f"{path}: {channels} channels (only mono/stereo supported)")

    if tag == _FORMAT_PCM and bits == 16:
        dtype, scale = np.dtype("<i2"), 1.0 / _INT16_SCALE
    elif tag == _FORMAT_FLOAT and bits == 32:
        dtype, scale = np.dtype("<f4"), 1.0
    else:
        raise UnsupportedWavError(f"{path}: format tag {tag} with {bits} bits per sample")

    n_frames = len(payload) // block_align
    frames = np.frombuffer(payload[: n_frames * block_align], dtype=dtype).astype(np.float64)
    frames = frames.reshape(n_frames, channels) * scale
    return AudioBuffer(frames.mean(axis=1), rate)


def write_wav(buffer: AudioBuffer, path) -> int:
    """Write `buffer` as 16-bit PCM mono and return the number of clipped samples.

    Samples outside [-1, 1] are clipped to full scale. Positive full scale maps
    to 32767, so reading back loses at most 1/32768 per in-range sample.
    """
    x = buffer.samples
    n_clipped = int(np.count_nonzero(np.abs(x) > 1.0))
    q = np.clip(np.round(np.clip(x, -1.0, 1.0) * _INT16_SCALE), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(buffer.sample_rate)
        w.writeframes(q.tobytes())
    return n_clipped


# -- synthetic clips ---------------------------------------------------------

RECIPE_KINDS = ("noise", "chord-pad", "click-train", "chirp")


@dataclass(frozen=True)
class GenreSpec:
    """A synthetic stand-in for one genre.

    `fundamental_hz` and `bpm` are (low, high) ranges; each clip draws its own
    value uniformly from them. `peak_db` bounds the clip's peak level in dBFS;
    `noise_level` scales white background noise relative to the lower bound.
    """

    name: str
    kind: str
    fundamental_hz: tuple[float, float] = (220.0, 440.0)
    bpm: tuple[float, float] = (90.0, 150.0)
    noise_level: float = 0.01
    peak_db: tuple[float, float] = (-24.0, -16.0)

    def __post_init__(self):
        if self.kind not in RECIPE_KINDS:
            raise ValueError(f"unknown recipe kind {self.kind!r}; expected one of {RECIPE_KINDS}")


DEFAULT_GENRES = (
    GenreSpec("drone", "noise", fundamental_hz=(300.0, 1200.0), bpm=(20.0, 30.0), noise_level=0.0),
    GenreSpec("ambient", "chord-pad", fundamental_hz=(330.0, 495.0), bpm=(45.0, 60.0)),
    GenreSpec("techno", "click-train", bpm=(100.0, 140.0)),
    GenreSpec("sweep", "chirp", fundamental_hz=(200.0, 3000.0), bpm=(20.0, 30.0)),
)

_MAJOR_TRIAD = (0, 4, 7)


def _seeded_rng(spec: GenreSpec, seed: int) -> np.random.Generator:
    # Seed from the recipe content so equal seeds on different genres decorrelate.
    tag = hashlib.sha256(repr((spec.name, spec.kind)).encode()).digest()
    return np.random.default_rng([int(seed), int.from_bytes(tag[:4], "little")])


def _noise(rng, n, fs, spec):
    # band-limited noise centred on a drawn frequency, slowly amplitude modulated
    centre = rng.uniform(*spec.fundamental_hz)
    white = rng.standard_normal(n)
    spec_ = np.fft.rfft(white)
    f = np.fft.rfftfreq(n, 1.0 / fs)
    spec_ *= np.exp(-0.5 * ((f - centre) / (0.5 * centre)) ** 2)
    y = np.fft.irfft(spec_, n)
    t = np.arange(n) / fs
    rate = rng.uniform(*spec.bpm) / 60.0
    return y * (1.0 + 0.3 * np.sin(2 * np.pi * rate * t + rng.uniform(0, 2 * np.pi)))


def _chord_pad(rng, n, fs, spec):
    root = rng.uniform(*spec.fundamental_hz)
    t = np.arange(n) / fs
    y = np.zeros(n)
    for step in _MAJOR_TRIAD:
        f0 = root * 2.0 ** (step / 12.0) * (1.0 + rng.uniform(-0.002, 0.002))
        for harmonic, amp in ((1, 1.0), (2, 0.3)):
            y += amp * np.sin(2 * np.pi * harmonic * f0 * t + rng.uniform(0, 2 * np.pi))
    # Slow re-articulated swells: one soft attack per beat.
    period = 60.0 / rng.uniform(*spec.bpm)
    phase = (t % period) / period
    env = np.minimum(phase / 0.15, 1.0) * np.exp(-1.5 * phase)
    return y * (0.2 + env)


def _click_train(rng, n, fs, spec, bpm=None):
    bpm = rng.uniform(*spec.bpm) if bpm is None else bpm
    period = 60.0 / bpm
    y = np.zeros(n)
    click_len = int(0.02 * fs)
    decay = np.exp(-np.arange(click_len) / (0.003 * fs))
    k = 0
    while True:
        start = int(round(k * period * fs))
        if start >= n:
            break
        seg = min(click_len, n - start)
        y[start : start + seg] += rng.standard_normal(seg) * decay[:seg]
        k += 1
    return y


def _chirp(rng, n, fs, spec):
    lo, hi = spec.fundamental_hz
    f_start = rng.uniform(lo, np.sqrt(lo * hi))
    f_end = rng.uniform(np.sqrt(lo * hi), hi)
    t = np.arange(n) / fs
    dur = n / fs
    # exponential sweep: instantaneous frequency f_start * (f_end/f_start)**(t/dur)
    k = np.log(f_end / f_start) / dur
    return np.sin(2 * np.pi * f_start * (np.exp(k * t) - 1.0) / k)


_RECIPES = {"noise": _noise, "chord-pad": _chord_pad, "click-train": _click_train, "chirp": _chirp}


def synth_clip(spec: GenreSpec, seed: int, duration: float = 3.0, sample_rate: int = 16000) -> AudioBuffer:
    """Render one deterministic clip for `spec`.

    The same (spec, seed, duration, sample_rate) always yields bit-identical
    samples. Click trains place a click every 60/bpm seconds starting at t=0.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if spec.kind not in _RECIPES:
        raise ValueError(f"unknown recipe kind {spec.kind!r}")
    rng = _seeded_rng(spec, seed)
    n = int(round(duration * sample_rate))
    y = _RECIPES[spec.kind](rng, n, sample_rate, spec)
    peak = np.max(np.abs(y))
    if peak > 0:
        y = y / peak * 10.0 ** (rng.uniform(*spec.peak_db) / 20.0)
    if spec.noise_level > 0:
        y = y + spec.noise_level * 10.0 ** (spec.peak_db[0] / 20.0) * rng.standard_normal(n)
    return AudioBuffer(y, sample_rate)


def click_train(bpm: float, duration: float, sample_rate: int = 16000, seed: int = 0) -> AudioBuffer:
    """Noise-burst clicks at exactly `bpm`, first click at t=0, no background."""
    spec = GenreSpec("clicks", "click-train", bpm=(bpm, bpm), noise_level=0.0, peak_db=(-6.0, -6.0))
    return synth_clip(spec, seed, duration, sample_rate)


def write_synthetic_dataset(
    root,
    genres=DEFAULT_GENRES,
    clips_per_genre: int = 20,
    duration: float = 3.0,
    sample_rate: int = 16000,
    seed: int = 0,
) -> Path:
    """Write a GTZAN-layout tree ``<root>/<genre>/<genre>.NNNNN.wav`` of synthetic clips."""
    root = Path(root)
    names = [g.name for g in genres]
    if len(set(names)) != len(names):
        raise ValueError("genre names must be unique")
    for g in genres:
        d = root / g.name
        d.mkdir(parents=True, exist_ok=True)
        for i in range(clips_per_genre):
            clip = synth_clip(g, seed * 100003 + i, duration, sample_rate)
            write_wav(clip, d / f"{g.name}.{i:05d}.wav")
    return root
