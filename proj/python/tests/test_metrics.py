import numpy as np
import pytest
from scipy.signal import convolve2d
from skimage.metrics import structural_similarity

import ctdb as cdb


def vifp_reference(ref, dist, sigma_nsq=2.0, eps=1e-10):
    num = den = 0.0
    for scale in range(1, 5):
        n = 2 ** (4 - scale + 1) + 1
        ax = np.arange(n) - (n - 1) / 2
        g = np.exp(-(ax**2) / (2 * (n / 5.0) ** 2))
        win = np.outer(g, g)
        win /= win.sum()
        if scale > 1:
            ref = convolve2d(ref, win, mode="valid")[::2, ::2]
            dist = convolve2d(dist, win, mode="valid")[::2, ::2]
        mu1 = convolve2d(ref, win, mode="valid")
        mu2 = convolve2d(dist, win, mode="valid")
        s1 = np.maximum(convolve2d(ref * ref, win, mode="valid") - mu1 * mu1, 0)
        s2 = np.maximum(convolve2d(dist * dist, win, mode="valid") - mu2 * mu2, 0)
        s12 = convolve2d(ref * dist, win, mode="valid") - mu1 * mu2
        g = s12 / (s1 + eps)
        sv = s2 - g * s12
        g[s1 < eps] = 0
        sv[s1 < eps] = s2[s1 < eps]
        s1[s1 < eps] = 0
        g[s2 < eps] = 0
        sv[s2 < eps] = 0
        sv[g < 0] = s2[g < 0]
        g[g < 0] = 0
        sv[sv <= eps] = eps
        num += np.sum(np.log10(1 + g * g * s1 / (sv + sigma_nsq)))
        den += np.sum(np.log10(1 + s1 / sigma_nsq))
    return num / den


def degraded(hu, rng, sigma=30.0):
    return hu + rng.normal(0.0, sigma, hu.shape)


def test_ssim_matches_skimage(phantom, rng):
    hu, _ = phantom
    deg = degraded(hu, rng)
    lo, hi = hu.min(), hu.max()
    full = np.ones(hu.shape, np.uint8)
    ours = cdb.ssim(hu, deg, mask=full, window=(lo, hi))
    x, y = (hu - lo) / (hi - lo), (deg - lo) / (hi - lo)
    ref = structural_similarity(
        x, y, data_range=1.0, gaussian_weights=True, sigma=1.5, use_sample_covariance=False
    )
    assert ours == pytest.approx(ref, abs=1e-10)


def test_vif_matches_pixel_domain_reference(phantom, rng):
    hu, _ = phantom
    deg = degraded(hu, rng, 60.0)
    lo, hi = hu.min(), hu.max()
    full = np.ones(hu.shape, np.uint8)
    ours = cdb.vif(hu, deg, mask=full, window=(lo, hi))
    ref = vifp_reference(255 * (hu - lo) / (hi - lo), 255 * (deg - lo) / (hi - lo))
    assert ours == pytest.approx(ref, rel=1e-9)


def test_psnr_closed_form(phantom):
    hu, _ = phantom
    assert cdb.psnr(hu, hu + 10.0, data_range=1000.0) == pytest.approx(40.0, abs=1e-9)
    assert cdb.psnr(hu, hu) == float("inf")


def test_reconstruction_quality(phantom):
    hu, spacing = phantom
    rec = cdb.reconstruct(hu, spacing, 360)
    sparse = cdb.reconstruct(hu, spacing, 45)
    mask = cdb.reconstruction_mask(*hu.shape).astype(bool)
    err = lambda r: np.sqrt(np.mean((r - hu)[mask] ** 2))
    assert err(rec) < err(sparse)


def test_invalid_input_raises_value_error(phantom):
    hu, _ = phantom
    with pytest.raises(ValueError):
        cdb.psnr(hu, hu[:10, :10])
