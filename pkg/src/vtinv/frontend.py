"""Audio frames to 25-dimensional spectral features (gain + 24 line spectral
frequencies on a warped frequency axis), plus feature/pixel normalization.

Feature files use the "VTF1" format: 4-byte magic, u32 little-endian row and
column counts, then rows x cols float32 little-endian values, row-major.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, NumericError, ShapeError, SizeError, ValidationError

VARIANCE_FLOOR = 1e-8
FEATURE_MAGIC = b"VTF1"


@dataclass(frozen=True)
class AnalysisConfig:
    order: int = 24
    alpha: float = 0.42
    window_len: int = 1024
    fft_len: int = 2048
    floor_db: float = -120.0

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValidationError(f"alpha must be in [0,1), got {self.alpha}")
        if self.window_len > self.fft_len:
            raise ValidationError("window_len must not exceed fft_len")
        if self.order >= self.window_len:
            raise ValidationError("order must be smaller than window_len")


# ---------------------------------------------------------------------------
# Framing and cepstral analysis


def frame_signal(audio, shift: int, window_len: int) -> np.ndarray:
    """Split audio into Hann-windowed frames.

    Frame k is centered at sample k*shift and zero-padded at the edges.
    Returns [floor(len(audio)/shift), window_len].
    """
    if shift < 1:
        raise ValidationError("shift must be >= 1")
    if window_len < shift:
        raise ValidationError("window_len must be >= shift")
    audio = np.asarray(audio, dtype=np.float64)
    n_frames = len(audio) // shift
    if n_frames == 0:
        return np.zeros((0, window_len))
    half = window_len // 2
    padded = np.concatenate([np.zeros(half), audio, np.zeros(window_len)])
    frames = np.empty((n_frames, window_len))
    for k in range(n_frames):
        start = k * shift
        frames[k] = padded[start:start + window_len]
    return frames * np.hanning(window_len)


def warp_frequency(omega, alpha):
    """First-order all-pass frequency map on [0, pi]; identity at alpha=0.

    The inverse map is obtained by negating alpha.
    """
    return omega + 2.0 * np.arctan(alpha * np.sin(omega) / (1.0 - alpha * np.cos(omega)))


def melcep_analyze(frame, config: AnalysisConfig) -> np.ndarray:
    """Warped cepstral coefficients c0..c_order of one windowed frame.

    Pipeline: floored log power spectrum, frequency-axis warp by resampling,
    inverse transform to cepstra. c0 carries the overall log energy.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (config.window_len,):
        raise ShapeError(f"expected frame of {config.window_len} samples, got {frame.shape}")
    if not np.all(np.isfinite(frame)):
        raise NumericError("non-finite input samples")
    spectrum = np.fft.rfft(frame, n=config.fft_len)
    power = spectrum.real**2 + spectrum.imag**2
    floor = 10.0 ** (config.floor_db / 10.0)
    log_power = np.log(np.maximum(power, floor))
    if config.alpha != 0.0:
        half = config.fft_len // 2
        omega = np.linspace(0.0, np.pi, half + 1)
        source = warp_frequency(omega, -config.alpha)
        log_power = np.interp(source, omega, log_power)
    cepstra = np.fft.irfft(log_power, n=config.fft_len)
    return cepstra[:config.order + 1].copy()


# ---------------------------------------------------------------------------
# Cepstrum -> LSP

LSP_GRID_POINTS = 4096
LSP_BISECT_TOL = 1e-10


def cepstrum_to_allpole(cepstra, order: int) -> np.ndarray:
    """Minimum-phase all-pole coefficients from cepstra c1..c_order.

    Returns a with A(z) = 1 + sum a[n] z^-n such that 1/A has the given
    leading cepstral coefficients.
    """
    c = np.asarray(cepstra, dtype=np.float64)
    a = np.zeros(order + 1)
    a[0] = 1.0
    for n in range(1, order + 1):
        acc = c[n]
        for k in range(1, n):
            acc += (k / n) * c[k] * a[n - k]
        a[n] = -acc
    return a


def _chebyshev_series(poly):
    """Fold a symmetric polynomial of even degree 2m into Chebyshev form:
    z^-m P(z) = g[0] + 2*sum g[j] T_j(cos w). Returns g[0..m]."""
    m = (len(poly) - 1) // 2
    g = np.empty(m + 1)
    g[0] = poly[m]
    for j in range(1, m + 1):
        g[j] = poly[m - j]
    return g


def _eval_cheb(g, x):
    """Evaluate g[0] + 2*sum_{j>=1} g[j] T_j(x) for scalar or array x."""
    x = np.asarray(x, dtype=np.float64)
    t_prev = np.ones_like(x)
    t_cur = x.copy()
    acc = g[0] * t_prev
    for j in range(1, len(g)):
        acc = acc + 2.0 * g[j] * t_cur
        t_prev, t_cur = t_cur, 2.0 * x * t_cur - t_prev
    return acc


def _scan_roots(g, n_roots, grid_points):
    """Sign-change scan over omega in (0, pi) plus bisection refinement."""
    omega = np.linspace(0.0, np.pi, grid_points + 1)
    values = _eval_cheb(g, np.cos(omega))
    roots = []
    for i in range(grid_points):
        lo, hi = omega[i], omega[i + 1]
        flo, fhi = values[i], values[i + 1]
        if flo == 0.0:
            if lo > 0.0:
                roots.append(lo)
            continue
        if flo * fhi < 0.0:
            while hi - lo > LSP_BISECT_TOL:
                mid = 0.5 * (lo + hi)
                fmid = float(_eval_cheb(g, np.cos(mid)))
                if flo * fmid <= 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fmid
            roots.append(0.5 * (lo + hi))
        if len(roots) == n_roots:
            break
    return roots


def cepstrum_to_lsp(cepstra, order: int = 24) -> np.ndarray:
    """Convert cepstra (c0..c_order) to gain + strictly increasing LSPs.

    The all-pole polynomial's symmetric/antisymmetric sum and difference
    polynomials have interleaved unit-circle roots; these are located by a
    dense Chebyshev-domain scan with bisection refinement.
    """
    cepstra = np.asarray(cepstra, dtype=np.float64)
    if cepstra.shape != (order + 1,):
        raise ShapeError(f"expected {order + 1} cepstra, got {cepstra.shape}")
    if not np.all(np.isfinite(cepstra)):
        raise NumericError("non-finite cepstra")
    if order % 2 != 0:
        raise ValidationError("LSP conversion requires an even order")
    a = cepstrum_to_allpole(cepstra, order)
    # sum/difference polynomials of degree order+1; z=-1 / z=+1 roots removed
    a_ext = np.concatenate([a, [0.0]])
    a_rev = a_ext[::-1]
    p_poly = a_ext + a_rev
    q_poly = a_ext - a_rev
    p_red = np.empty(order + 1)  # P / (1 + z^-1)
    q_red = np.empty(order + 1)  # Q / (1 - z^-1)
    carry = 0.0
    for i in range(order + 1):
        p_red[i] = p_poly[i] - carry
        carry = p_red[i]
    carry = 0.0
    for i in range(order + 1):
        q_red[i] = q_poly[i] + carry
        carry = q_red[i]
    half = order // 2
    grid = LSP_GRID_POINTS
    p_roots = _scan_roots(_chebyshev_series(p_red), half, grid)
    q_roots = _scan_roots(_chebyshev_series(q_red), half, grid)
    if len(p_roots) != half or len(q_roots) != half:
        # close root pairs can hide between grid points; retry once, denser
        grid = 4 * LSP_GRID_POINTS
        p_roots = _scan_roots(_chebyshev_series(p_red), half, grid)
        q_roots = _scan_roots(_chebyshev_series(q_red), half, grid)
    if len(p_roots) != half or len(q_roots) != half:
        raise NumericError(
            f"LSP root scan found {len(p_roots)}+{len(q_roots)} roots, expected "
            f"{half}+{half} (grid resolution {grid})"
        )
    lsps = np.sort(np.concatenate([p_roots, q_roots]))
    if not np.all(np.diff(lsps) > 0.0):
        raise NumericError("LSP frequencies are not strictly increasing")
    return np.concatenate([[cepstra[0]], lsps])


def extract_features(audio, frame_shift: int, config: AnalysisConfig) -> np.ndarray:
    """Full analysis chain for one utterance: int16 audio -> [T, order+1]."""
    audio = np.asarray(audio)
    if audio.dtype.kind == "i":
        audio = audio.astype(np.float64) / 32768.0
    frames = frame_signal(audio, frame_shift, config.window_len)
    features = np.empty((frames.shape[0], config.order + 1))
    for k in range(frames.shape[0]):
        features[k] = cepstrum_to_lsp(melcep_analyze(frames[k], config), config.order)
    return features


# ---------------------------------------------------------------------------
# Normalization


@dataclass
class NormStats:
    mean: np.ndarray
    std: np.ndarray


def fit_normalizer(features: np.ndarray) -> NormStats:
    """Per-column mean and population standard deviation over training rows."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 2:
        raise SizeError(f"need at least 2 feature rows, got shape {features.shape}")
    mean = features.mean(axis=0)
    std = np.maximum(features.std(axis=0), VARIANCE_FLOOR)
    return NormStats(mean=mean, std=std)


def apply_normalizer(features: np.ndarray, stats: NormStats) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != stats.mean.shape[0]:
        raise ShapeError(
            f"feature dim {features.shape[-1]} != normalizer dim {stats.mean.shape[0]}"
        )
    return (features - stats.mean) / stats.std


def denormalize_features(features: np.ndarray, stats: NormStats) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != stats.mean.shape[0]:
        raise ShapeError(
            f"feature dim {features.shape[-1]} != normalizer dim {stats.mean.shape[0]}"
        )
    return features * stats.std + stats.mean


def scale_pixels(image) -> np.ndarray:
    """8-bit image frame(s) to float in [0, 1]."""
    return np.asarray(image, dtype=np.float64) / 255.0


# ---------------------------------------------------------------------------
# Feature file I/O


def write_features(path, features: np.ndarray):
    features = np.asarray(features)
    if features.ndim != 2:
        raise ShapeError("feature matrices are 2-D")
    rows, cols = features.shape
    payload = np.ascontiguousarray(features, dtype="<f4").tobytes()
    Path(path).write_bytes(FEATURE_MAGIC + struct.pack("<II", rows, cols) + payload)


def read_features(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != FEATURE_MAGIC:
        raise FormatError(f"{path}: not a VTF1 feature file")
    rows, cols = struct.unpack("<II", data[4:12])
    expected = 12 + 4 * rows * cols
    if len(data) != expected:
        raise FormatError(f"{path}: payload is {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f4", offset=12)
    return values.reshape(rows, cols).astype(np.float64)
