"""Python bindings for the CT degradation benchmark core."""

from ._core import (
    HIGH_QUALITY_PROMPTS,
    LOW_QUALITY_PROMPTS,
    decode_ctde,
    drift,
    encode_ctde,
    generate,
    hf_ratio,
    macro_f1,
    metadata_schema,
    pearson,
    phantom,
    psnr,
    qwk,
    quality_axis,
    read_image,
    reconstruct,
    reconstruction_mask,
    set_threads,
    spearman,
    spectral_descriptor,
    ssim,
    supcon_loss,
    total_loss,
    validate_metadata,
    vif,
    write_image,
)

__all__ = [name for name in dir() if not name.startswith("_")]
