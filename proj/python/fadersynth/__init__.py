"""Attribute-controlled audio synthesis (native core bindings)."""

# Load libtorch's shared libraries before the extension that links them.
import torch  # noqa: F401

from ._core import (  # noqa: F401
    ConfigError,
    DegenerateDistributionError,
    IoError,
    LengthError,
    Model,
    NumericError,
    PqmfBank,
    ShapeError,
    compute_attribute_set,
    descriptor_track,
    design_pqmf,
    fit_quantizer,
    make_toy_corpus,
    mel_spectrogram,
    multiscale_spectral_distance,
    pqmf_analyze,
    pqmf_synthesize,
    read_wav,
    resample_track,
    spearman,
    spectrogram,
    train,
    warmup,
    write_wav,
)

__version__ = "0.1.0"
