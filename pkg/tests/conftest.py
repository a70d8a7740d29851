import numpy as np
import pytest

from vtinv.corpus import CorpusConfig, generate_synthetic_corpus
from vtinv.frontend import AnalysisConfig, extract_features


@pytest.fixture(scope="session")
def corpus_config():
    return CorpusConfig()


@pytest.fixture(scope="session")
def analysis_config():
    return AnalysisConfig()


@pytest.fixture(scope="session")
def toy_corpus(corpus_config):
    """Three 40-frame utterances, seed 7."""
    return generate_synthetic_corpus(7, 3, 40, corpus_config)


@pytest.fixture(scope="session")
def toy_features(toy_corpus, corpus_config, analysis_config):
    """Extracted features for the toy corpus, keyed by utterance id."""
    return {
        u.id: extract_features(u.audio, corpus_config.frame_shift, analysis_config)
        for u in toy_corpus
    }


def textured_frame(seed, size=68, cutoff=0.15):
    """Low-pass filtered noise texture in [0, 1]; shared by metric tests."""
    rng = np.random.default_rng(seed)
    spectrum = np.fft.fft2(rng.standard_normal((size, size)))
    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.fftfreq(size)[None, :]
    mask = np.sqrt(fx**2 + fy**2) <= cutoff
    img = np.real(np.fft.ifft2(spectrum * mask))
    return (img - img.min()) / (img.max() - img.min())
