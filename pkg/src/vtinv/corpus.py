"""Corpus ingestion, train/val/test splitting, and synthetic corpus generation.

On-disk layout: one directory per utterance containing

    audio.wav      RIFF PCM, mono, 16-bit little-endian
    frames/        frame_00001.pgm upward (binary P5, maxval 255)
    meta.txt       key=value lines (id, speaker), UTF-8

Audio/image alignment is tolerated to +/-1 frame; pairing truncates to the
shorter side.
"""

import io
import struct
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlignmentError, FormatError, SizeError, ValidationError


@dataclass(frozen=True)
class CorpusConfig:
    """Acquisition geometry of the paired audio/image recordings."""

    audio_rate: int = 20000
    frame_rate: float = 23.18
    frame_shift: int = 863
    image_size: int = 68

    def __post_init__(self):
        if self.audio_rate <= 0:
            raise ValidationError("audio_rate must be positive")
        if self.image_size <= 0:
            raise ValidationError("image_size must be positive")
        expected = round(self.audio_rate / self.frame_rate)
        if self.frame_shift != expected:
            raise ValidationError(
                f"frame_shift {self.frame_shift} != round(audio_rate/frame_rate) = {expected}"
            )


@dataclass
class Utterance:
    """One sentence: audio samples plus the synchronized image sequence."""

    id: str
    audio: np.ndarray  # int16 [n_samples]
    frames: np.ndarray  # uint8 [n_frames, size, size]
    speaker: str = "unknown"

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


@dataclass
class CorpusSplit:
    train: list = field(default_factory=list)
    validation: list = field(default_factory=list)
    test: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# WAV / PGM I/O


def read_wav(path, expected_rate=None) -> np.ndarray:
    """Read a mono 16-bit PCM WAV file into an int16 array."""
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            rate = wf.getframerate()
            n = wf.getnframes()
            payload = wf.readframes(n)
    except (wave.Error, EOFError, struct.error) as exc:
        raise FormatError(f"malformed WAV file {path}: {exc}") from exc
    if n_channels != 1:
        raise FormatError(f"{path}: expected mono audio, got {n_channels} channels")
    if sampwidth != 2:
        raise FormatError(f"{path}: expected 16-bit samples, got {8 * sampwidth}-bit")
    if expected_rate is not None and rate != expected_rate:
        raise FormatError(f"{path}: sample rate {rate} != expected {expected_rate}")
    return np.frombuffer(payload, dtype="<i2").astype(np.int16)


def write_wav(path, samples: np.ndarray, rate: int):
    samples = np.asarray(samples, dtype=np.int16)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(rate)
        wf.writeframes(samples.astype("<i2").tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM image with maxval 255 into a uint8 array."""
    data = Path(path).read_bytes()
    stream = io.BytesIO(data)

    def next_token():
        tok = b""
        while True:
            ch = stream.read(1)
            if ch == b"":
                raise FormatError(f"malformed PGM header in {path}: truncated")
            if ch == b"#":  # comment runs to end of line
                while ch not in (b"\n", b""):
                    ch = stream.read(1)
                continue
            if ch.isspace():
                if tok:
                    return tok
                continue
            tok += ch

    magic = next_token()
    if magic != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {magic!r})")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise FormatError(f"malformed PGM header in {path}: {exc}") from exc
    if maxval != 255:
        raise FormatError(f"{path}: expected maxval 255, got {maxval}")
    raster = stream.read(width * height)
    if len(raster) != width * height:
        raise FormatError(f"{path}: raster truncated ({len(raster)} of {width * height} bytes)")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width)


def write_pgm(path, image: np.ndarray):
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 2:
        raise ValidationError("PGM images are 2-D")
    h, w = image.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + image.tobytes())


# ---------------------------------------------------------------------------
# Utterance loading / saving


def load_utterance(audio_path, frames_dir, config: CorpusConfig,
                   utt_id=None, speaker="unknown") -> Utterance:
    """Load one utterance from audio.wav + frames/*.pgm.

    Frames are sorted by their numeric index. The image frame count must
    agree with floor(len(audio)/frame_shift) within one frame.
    """
    audio = read_wav(audio_path, expected_rate=config.audio_rate)
    frame_paths = sorted(Path(frames_dir).glob("frame_*.pgm"))
    if not frame_paths:
        raise AlignmentError(f"{frames_dir}: no frames found for {len(audio)}-sample audio")
    images = [read_pgm(p) for p in frame_paths]
    shapes = {im.shape for im in images}
    if len(shapes) != 1:
        raise FormatError(f"{frames_dir}: mixed frame sizes {sorted(shapes)}")
    frames = np.stack(images)
    expected = len(audio) // config.frame_shift
    if abs(frames.shape[0] - expected) > 1:
        raise AlignmentError(
            f"{frames_dir}: {frames.shape[0]} image frames vs {expected} audio frames "
            f"({len(audio)} samples / shift {config.frame_shift})"
        )
    if utt_id is None:
        utt_id = Path(frames_dir).parent.name
    return Utterance(id=utt_id, audio=audio, frames=frames, speaker=speaker)


def load_utterance_dir(utt_dir, config: CorpusConfig) -> Utterance:
    """Load an utterance directory (audio.wav, frames/, meta.txt)."""
    utt_dir = Path(utt_dir)
    meta = read_meta(utt_dir / "meta.txt")
    return load_utterance(
        utt_dir / "audio.wav",
        utt_dir / "frames",
        config,
        utt_id=meta.get("id", utt_dir.name),
        speaker=meta.get("speaker", "unknown"),
    )


def save_utterance(utt: Utterance, utt_dir, config: CorpusConfig):
    """Write an utterance in the corpus layout; inverse of load_utterance_dir."""
    utt_dir = Path(utt_dir)
    frames_dir = utt_dir / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    write_wav(utt_dir / "audio.wav", utt.audio, config.audio_rate)
    for k in range(utt.n_frames):
        write_pgm(frames_dir / f"frame_{k + 1:05d}.pgm", utt.frames[k])
    (utt_dir / "meta.txt").write_text(f"id={utt.id}\nspeaker={utt.speaker}\n", encoding="utf-8")


def read_meta(path) -> dict:
    meta = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        meta[key.strip()] = value.strip()
    return meta


def list_utterance_dirs(corpus_dir):
    """Sorted utterance directories under a corpus root."""
    root = Path(corpus_dir)
    return sorted(p for p in root.iterdir() if p.is_dir() and (p / "meta.txt").exists())


# ---------------------------------------------------------------------------
# Splitting


def split_corpus(utterance_ids, spec) -> CorpusSplit:
    """Deterministic split by sorted id: first n_train, then n_val, then n_test."""
    n_train, n_val, n_test = spec
    ids = sorted(utterance_ids)
    needed = n_train + n_val + n_test
    if needed > len(ids):
        raise SizeError(f"split {spec} needs {needed} utterances, corpus has {len(ids)}")
    return CorpusSplit(
        train=ids[:n_train],
        validation=ids[n_train:n_train + n_val],
        test=ids[n_train + n_val:needed],
    )


# ---------------------------------------------------------------------------
# Synthetic corpus

_LATENT_FREQS = np.array([[0.017, 0.041], [0.011, 0.029], [0.023, 0.053]])


def latent_trajectory(seed: int, utt_index: int, n_frames: int) -> np.ndarray:
    """Smooth per-frame latent state in [0,1]^3 driving features and images.

    Component 0 controls tract aperture and noise resonance, 1 the tract
    curvature, 2 the audio gain.
    """
    rng = np.random.default_rng([seed, utt_index, 0xA11])
    t = np.arange(n_frames)[:, None]
    phases = rng.uniform(0.0, 2 * np.pi, size=(3, 2))
    out = np.empty((n_frames, 3))
    for c in range(3):
        waves = np.sin(2 * np.pi * _LATENT_FREQS[c] * t + phases[c])
        out[:, c] = 0.5 + 0.3 * waves[:, 0] + 0.2 * waves[:, 1]
    return np.clip(out, 0.0, 1.0)


def _tract_image(state: np.ndarray, size: int) -> np.ndarray:
    """Parametric midsagittal-style frame: bright tissue, dark curved channel."""
    aperture, curve, _ = state
    x = np.arange(size)
    y = np.arange(size)[:, None]
    background = 210.0 + 20.0 * np.sin(2 * np.pi * (1.7 * x / size + 0.4 * y / size))
    center = size / 2.0 + (curve - 0.5) * 0.3 * size * np.sin(np.pi * x / (size - 1))
    width = 1.5 + 0.09 * size * aperture
    channel = 170.0 * np.exp(-((y - center) ** 2) / (2.0 * width**2))
    return np.clip(np.rint(background - channel), 0, 255).astype(np.uint8)


def _shaped_noise(rng, latent: np.ndarray, frame_shift: int) -> np.ndarray:
    """White noise shaped per frame by the latent: two resonators in disjoint
    bands (components 0 and 1) plus an amplitude envelope (component 2), so
    every latent dimension is recoverable from the spectral features."""
    n_frames = latent.shape[0]
    noise = rng.standard_normal(n_frames * frame_shift)
    floor = rng.standard_normal(n_frames * frame_shift)
    out = np.empty_like(noise)
    s1 = s2 = t1 = t2 = 0.0
    r_lo, r_hi = 0.82, 0.78
    for k in range(n_frames):
        theta_lo = np.pi * (0.12 + 0.4 * latent[k, 0])
        theta_hi = np.pi * (0.6 + 0.3 * latent[k, 1])
        amp = 0.1 + 0.9 * latent[k, 2]
        a1, a2 = 2.0 * r_lo * np.cos(theta_lo), -r_lo * r_lo
        b1, b2 = 2.0 * r_hi * np.cos(theta_hi), -r_hi * r_hi
        base = k * frame_shift
        for n in range(frame_shift):
            s0 = noise[base + n] + a1 * s1 + a2 * s2
            t0 = s0 + b1 * t1 + b2 * t2
            # broadband floor keeps the spectral dynamic range moderate
            out[base + n] = amp * (t0 + 0.3 * floor[base + n])
            s2, s1 = s1, s0
            t2, t1 = t1, t0
    peak = np.max(np.abs(out))
    return np.clip(out / peak * 8000.0, -32768, 32767).astype(np.int16)


def generate_synthetic_corpus(seed: int, n_utterances: int, frames_per_utterance: int,
                              config: CorpusConfig, speaker: str = "s1") -> list:
    """Deterministic toy corpus with a learnable feature-to-image mapping.

    One smooth latent trajectory per utterance drives both the audio shaping
    (and hence the extracted spectral features) and the tube geometry of the
    target images.
    """
    if n_utterances < 1:
        raise ValidationError("n_utterances must be >= 1")
    if frames_per_utterance < 1:
        raise ValidationError("frames_per_utterance must be >= 1")
    utterances = []
    for u in range(n_utterances):
        latent = latent_trajectory(seed, u, frames_per_utterance)
        frames = np.stack([_tract_image(latent[k], config.image_size)
                           for k in range(frames_per_utterance)])
        rng = np.random.default_rng([seed, u, 0xD10])
        audio = _shaped_noise(rng, latent, config.frame_shift)
        utterances.append(Utterance(id=f"{speaker}_{u:03d}", audio=audio,
                                    frames=frames, speaker=speaker))
    return utterances
