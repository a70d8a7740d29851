"""Image-sequence evaluation: NMSE, SSIM, and complex-wavelet SSIM, with
per-frame time series, per-utterance means, and per-speaker aggregation.

All metrics operate on [0,1]-scaled images. SSIM uses valid-region windows
(no padding); CW-SSIM uses circular convolution in the frequency domain.
"""

import csv
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import CoverageError, ShapeError


@dataclass(frozen=True)
class SsimConfig:
    window_size: int = 11
    sigma: float = 1.5
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0


@dataclass(frozen=True)
class CwSsimConfig:
    scales: int = 2
    orientations: int = 4
    window_size: int = 7
    k: float = 0.01
    global_window: bool = False


@lru_cache(maxsize=8)
def gaussian_window(size: int, sigma: float) -> np.ndarray:
    """Circular-symmetric 2-D Gaussian weighting window, normalized to sum 1."""
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g1 = np.exp(-(coords**2) / (2.0 * sigma**2))
    window = np.outer(g1, g1)
    return window / window.sum()


def _window_filter(image: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Valid-region weighted local sums of an image (or stack of maps)."""
    size = window.shape[0]
    win = sliding_window_view(image, (size, size), axis=(-2, -1))
    return np.einsum("...uv,uv->...", win, window)


def nmse(reference: np.ndarray, predicted: np.ndarray) -> float:
    """Mean squared error over all frames and pixels of [0,1] sequences."""
    reference = np.asarray(reference, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if reference.shape != predicted.shape:
        raise ShapeError(f"sequence shapes differ: {reference.shape} vs {predicted.shape}")
    diff = reference - predicted
    return float(np.mean(diff * diff))


def ssim(y: np.ndarray, yhat: np.ndarray, config: SsimConfig = SsimConfig()) -> float:
    """Mean structural similarity over Gaussian-weighted local windows.

    Combines luminance, contrast, and structure comparisons, each raised to
    its configured exponent (all 1 by default).
    """
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape:
        raise ShapeError(f"image shapes differ: {y.shape} vs {yhat.shape}")
    window = gaussian_window(config.window_size, config.sigma)
    c1 = (config.k1 * config.dynamic_range) ** 2
    c2 = (config.k2 * config.dynamic_range) ** 2
    c3 = c2 / 2.0

    mu1 = _window_filter(y, window)
    mu2 = _window_filter(yhat, window)
    var1 = np.maximum(_window_filter(y * y, window) - mu1 * mu1, 0.0)
    var2 = np.maximum(_window_filter(yhat * yhat, window) - mu2 * mu2, 0.0)
    cov = _window_filter(y * yhat, window) - mu1 * mu2
    sd1 = np.sqrt(var1)
    sd2 = np.sqrt(var2)

    lum = (2.0 * mu1 * mu2 + c1) / (mu1 * mu1 + mu2 * mu2 + c1)
    con = (2.0 * sd1 * sd2 + c2) / (var1 + var2 + c2)
    struct = (cov + c3) / (sd1 * sd2 + c3)

    def powed(term, expo):
        if expo == 1.0:
            return term
        # odd extension keeps negative structure terms meaningful
        return np.sign(term) * np.abs(term) ** expo

    smap = powed(lum, config.alpha) * powed(con, config.beta) * powed(struct, config.gamma)
    return float(smap.mean())


# ---------------------------------------------------------------------------
# Complex-wavelet SSIM


@lru_cache(maxsize=8)
def gabor_bank(shape, scales: int = 2, orientations: int = 4) -> np.ndarray:
    """Frequency-domain complex Gabor filters, one per (scale, orientation).

    Each filter is a single-sided Gaussian bump at radial frequency
    0.25/2^scale cycles/pixel along its orientation, normalized so the
    spatial filter has unit L2 norm. Returns [scales*orientations, H, W].
    """
    h, w = shape
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    filters = []
    for s in range(scales):
        f0 = 0.25 / (2.0**s)
        bw = f0 / 2.0
        for o in range(orientations):
            theta = np.pi * o / orientations
            u = fx * np.cos(theta) + fy * np.sin(theta)
            v = -fx * np.sin(theta) + fy * np.cos(theta)
            g = np.exp(-((u - f0) ** 2 + v**2) / (2.0 * bw**2))
            g /= np.sqrt(np.sum(g * g) / (h * w))  # unit spatial L2 norm
            filters.append(g)
    return np.stack(filters).astype(np.complex128)


def decompose(image: np.ndarray, bank: np.ndarray) -> np.ndarray:
    """Complex coefficient maps: per-subband circular convolution via FFT."""
    spectrum = np.fft.fft2(np.asarray(image, dtype=np.float64))
    return np.fft.ifft2(spectrum[None, :, :] * bank)


def cwssim(y: np.ndarray, yhat: np.ndarray, config: CwSsimConfig = CwSsimConfig()) -> float:
    """Structural similarity on complex wavelet coefficients.

    Per subband, the similarity statistic
    (2|sum w_y conj(w_yhat)| + K) / (sum |w_y|^2 + sum |w_yhat|^2 + K)
    is evaluated over sliding coefficient windows (or one global window) and
    averaged, then averaged across subbands.
    """
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape:
        raise ShapeError(f"image shapes differ: {y.shape} vs {yhat.shape}")
    bank = gabor_bank(y.shape, config.scales, config.orientations)
    wy = decompose(y, bank)
    wh = decompose(yhat, bank)
    cross = wy * np.conj(wh)
    power = (wy.real**2 + wy.imag**2) + (wh.real**2 + wh.imag**2)
    k = config.k
    values = []
    if config.global_window:
        for s in range(bank.shape[0]):
            num = 2.0 * np.abs(cross[s].sum()) + k
            den = power[s].sum() + k
            values.append(num / den)
    else:
        box = np.ones((config.window_size, config.window_size))
        for s in range(bank.shape[0]):
            csum = _window_filter(cross[s].real, box) + 1j * _window_filter(cross[s].imag, box)
            psum = _window_filter(power[s], box)
            smap = (2.0 * np.abs(csum) + k) / (psum + k)
            values.append(smap.mean())
    return float(np.mean(values))


# ---------------------------------------------------------------------------
# Corpus evaluation and CSV report


@dataclass
class UtteranceMetrics:
    utterance_id: str
    speaker: str
    frame_nmse: np.ndarray
    frame_ssim: np.ndarray
    frame_cwssim: np.ndarray

    @property
    def mean_nmse(self) -> float:
        return float(self.frame_nmse.mean())

    @property
    def mean_ssim(self) -> float:
        return float(self.frame_ssim.mean())

    @property
    def mean_cwssim(self) -> float:
        return float(self.frame_cwssim.mean())


@dataclass
class MetricReport:
    utterances: list = field(default_factory=list)

    def speaker_means(self) -> dict:
        """Per-speaker averages of the per-utterance means."""
        by_speaker = {}
        for um in self.utterances:
            by_speaker.setdefault(um.speaker, []).append(um)
        out = {}
        for speaker, ums in sorted(by_speaker.items()):
            out[speaker] = (
                float(np.mean([u.mean_nmse for u in ums])),
                float(np.mean([u.mean_ssim for u in ums])),
                float(np.mean([u.mean_cwssim for u in ums])),
            )
        return out

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["speaker", "utterance_id", "frame_index", "nmse", "ssim", "cwssim"])
            for um in self.utterances:
                for i in range(len(um.frame_nmse)):
                    writer.writerow([
                        um.speaker, um.utterance_id, i,
                        f"{um.frame_nmse[i]:.10g}",
                        f"{um.frame_ssim[i]:.10g}",
                        f"{um.frame_cwssim[i]:.10g}",
                    ])
                writer.writerow([
                    um.speaker, um.utterance_id, "mean",
                    f"{um.mean_nmse:.10g}", f"{um.mean_ssim:.10g}", f"{um.mean_cwssim:.10g}",
                ])
            for speaker, (m_nmse, m_ssim, m_cw) in self.speaker_means().items():
                writer.writerow([
                    speaker, "mean", "mean",
                    f"{m_nmse:.10g}", f"{m_ssim:.10g}", f"{m_cw:.10g}",
                ])


def evaluate_sequences(reference: np.ndarray, predicted: np.ndarray,
                       utterance_id: str, speaker: str,
                       ssim_config: SsimConfig = SsimConfig(),
                       cw_config: CwSsimConfig = CwSsimConfig()) -> UtteranceMetrics:
    """Per-frame metric arrays for one utterance."""
    reference = np.asarray(reference, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if reference.shape != predicted.shape:
        raise ShapeError(
            f"{utterance_id}: reference {reference.shape} vs predicted {predicted.shape}"
        )
    n = reference.shape[0]
    frame_nmse = np.empty(n)
    frame_ssim = np.empty(n)
    frame_cw = np.empty(n)
    for i in range(n):
        diff = reference[i] - predicted[i]
        frame_nmse[i] = float(np.mean(diff * diff))
        frame_ssim[i] = ssim(reference[i], predicted[i], ssim_config)
        frame_cw[i] = cwssim(reference[i], predicted[i], cw_config)
    return UtteranceMetrics(utterance_id, speaker, frame_nmse, frame_ssim, frame_cw)


def evaluate_corpus(predictions: dict, references: dict, speakers: dict,
                    utterance_ids, ssim_config: SsimConfig = SsimConfig(),
                    cw_config: CwSsimConfig = CwSsimConfig()) -> MetricReport:
    """Score predictions against references for the given utterance ids.

    predictions/references map id -> [T, H, W] sequences in [0,1]; speakers
    maps id -> speaker name. Missing predictions raise CoverageError.
    """
    utterance_ids = list(utterance_ids)
    missing = [u for u in utterance_ids if u not in predictions]
    if missing:
        raise CoverageError(f"missing predictions for utterances: {missing}")
    report = MetricReport()
    for utt_id in utterance_ids:
        report.utterances.append(
            evaluate_sequences(
                references[utt_id], predictions[utt_id], utt_id,
                speakers.get(utt_id, "unknown"), ssim_config, cw_config,
            )
        )
    return report
