"""Speaker-dependent acoustic-to-articulatory inversion toolkit.

Maps speech spectral features (gain + 24 line spectral frequencies) to
68x68 midsagittal vocal-tract image sequences with fully connected,
convolutional, and recurrent networks built on a from-scratch numpy engine.
"""

__version__ = "0.1.0"
