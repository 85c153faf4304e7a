from faultfusion.spectral.stft import (
    REGIMES,
    Regime,
    Spectrogram,
    get_regime,
    log_compress,
    read_cache,
    resize_bilinear,
    spectrogram,
    spectrogram_images,
    stft,
    to_image,
    write_cache,
    write_preview,
)

__all__ = [
    "REGIMES",
    "Regime",
    "Spectrogram",
    "get_regime",
    "log_compress",
    "read_cache",
    "resize_bilinear",
    "spectrogram",
    "spectrogram_images",
    "stft",
    "to_image",
    "write_cache",
    "write_preview",
]
