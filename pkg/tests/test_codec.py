import math

import numpy as np
import pytest
import scipy.fft
from hypothesis import given, settings, strategies as st
from skimage import data as skdata
from skimage.metrics import structural_similarity

from conftest import EFFICIENT
from fwdct import codec
from fwdct.codec import (GAUSSIAN_SSIM, SSIMConfig, batch_evaluate, compress_reconstruct,
                         forward_2d, inverse_2d, psnr, retain, ssim, zigzag_order)
from fwdct.ortho import exact_dct_approximation, make_approximation
from fwdct.pgm import GrayImage, write_pgm

# Natural-order position of each zigzag index, as tabulated in the JPEG standard.
JPEG_ZIGZAG = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
]

DCT = exact_dct_approximation()
T1 = make_approximation(EFFICIENT[1])
T3 = make_approximation(EFFICIENT[3])
T16 = make_approximation(EFFICIENT[16])
blocks8 = st.lists(st.integers(0, 255), min_size=64, max_size=64).map(
    lambda v: np.array(v, dtype=float).reshape(8, 8))


def camera(size=128):
    return GrayImage(skdata.camera()[:size, :size])


def test_zigzag_matches_jpeg_table():
    order = zigzag_order()
    assert [8 * i + j for i, j in order] == JPEG_ZIGZAG
    assert order[0] == (0, 0) and order[63] == (7, 7)
    assert order[:6] == ((0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2))


def test_retain():
    x = np.arange(64, dtype=float).reshape(8, 8) + 1
    assert np.array_equal(retain(x, 64), x)
    dc = retain(x, 1)
    assert dc[0, 0] == 1 and np.count_nonzero(dc) == 1
    r3 = retain(x, 3)
    assert {tuple(p) for p in np.argwhere(r3)} == {(0, 0), (0, 1), (1, 0)}
    for bad in (0, 65):
        with pytest.raises(ValueError):
            retain(x, bad)


def test_constant_block_has_only_dc():
    b = forward_2d(T1, np.full((8, 8), 37.0))
    assert abs(b[0, 0]) > 0
    b[0, 0] = 0
    assert np.allclose(b, 0, atol=1e-10)


def test_dct_impulse_matches_separable_oracle():
    a = np.zeros((8, 8))
    a[2, 5] = 100.0
    assert np.allclose(forward_2d(DCT, a), scipy.fft.dctn(a, norm="ortho"), atol=1e-10)


@given(blocks8)
@settings(max_examples=50)
def test_round_trip_t16(block):
    assert np.allclose(inverse_2d(T16, forward_2d(T16, block)), block, atol=1e-8)


@given(blocks8)
@settings(max_examples=50)
def test_retained_energy_nondecreasing(block):
    coeffs = forward_2d(T3, block)
    energy = [np.sum(retain(coeffs, r) ** 2) for r in range(1, 65)]
    assert all(b >= a for a, b in zip(energy, energy[1:]))
    assert energy[-1] == pytest.approx(np.sum(block ** 2), rel=1e-10)


@pytest.mark.parametrize("app", [DCT, T1, T3, T16], ids=["dct", "t1", "t3", "t16"])
def test_lossless_at_full_retention(app):
    img = camera()
    assert compress_reconstruct(img, app, 64) == img
    assert psnr(img, compress_reconstruct(img, app, 64)) == math.inf


def test_level_shift_option():
    img = camera(64)
    a = compress_reconstruct(img, T1, 10, level_shift=False)
    b = compress_reconstruct(img, T1, 10, level_shift=True)
    assert a.pixels.shape == b.pixels.shape
    assert compress_reconstruct(img, T1, 64, level_shift=True) == img


def test_dimension_error():
    with pytest.raises(ValueError):
        compress_reconstruct(GrayImage(np.zeros((12, 16), dtype=np.uint8)), T1, 5)


def test_rounding_half_away():
    assert list(codec.round_half_away(np.array([0.5, 1.5, -0.5, 2.49]))) == [1, 2, -1, 2]


def test_psnr_values():
    z = GrayImage(np.zeros((8, 8), dtype=np.uint8))
    f = GrayImage(np.full((8, 8), 255, dtype=np.uint8))
    assert psnr(z, z) == math.inf
    assert psnr(z, f) == 0
    checker = (np.indices((8, 8)).sum(0) % 2 * 255).astype(np.uint8)
    assert psnr(GrayImage(checker), GrayImage(255 - checker)) == 0
    with pytest.raises(ValueError):
        psnr(z, GrayImage(np.zeros((8, 16), dtype=np.uint8)))


def ssim_loops(x, y, w=8, k1=0.01, k2=0.03, L=255):
    x = x.astype(float)
    y = y.astype(float)
    c1, c2 = (k1 * L) ** 2, (k2 * L) ** 2
    vals = []
    for i in range(x.shape[0] - w + 1):
        for j in range(x.shape[1] - w + 1):
            a, b = x[i:i + w, j:j + w], y[i:i + w, j:j + w]
            ma, mb = a.mean(), b.mean()
            va, vb = a.var(), b.var()
            cov = ((a - ma) * (b - mb)).mean()
            vals.append((2 * ma * mb + c1) * (2 * cov + c2)
                        / ((ma ** 2 + mb ** 2 + c1) * (va + vb + c2)))
    return float(np.mean(vals))


def test_ssim_matches_loop_oracle():
    img = camera(40)
    rec = compress_reconstruct(img, T3, 6)
    assert ssim(img, rec) == pytest.approx(ssim_loops(img.pixels, rec.pixels), abs=1e-10)


def test_ssim_matches_reference_implementation():
    img = camera(128)
    rec = compress_reconstruct(img, T1, 10)
    ref = structural_similarity(img.pixels, rec.pixels, win_size=7, data_range=255,
                                use_sample_covariance=False)
    assert ssim(img, rec, SSIMConfig(size=7)) == pytest.approx(ref, abs=1e-10)
    ref_g = structural_similarity(img.pixels, rec.pixels, gaussian_weights=True, sigma=1.5,
                                  data_range=255, use_sample_covariance=False)
    assert ssim(img, rec, GAUSSIAN_SSIM) == pytest.approx(ref_g, abs=1e-8)


def test_ssim_basic_properties():
    img = camera(64)
    rec = compress_reconstruct(img, T3, 3)
    assert ssim(img, img) == pytest.approx(1.0)
    assert ssim(img, rec) == pytest.approx(ssim(rec, img))
    full = GrayImage(skdata.camera())
    neg = GrayImage(255 - full.pixels)
    assert ssim(full, neg) < 0
    ref = structural_similarity(full.pixels, neg.pixels, win_size=7, data_range=255,
                                use_sample_covariance=False)
    assert ssim(full, neg, SSIMConfig(size=7)) == pytest.approx(ref, abs=1e-10)
    with pytest.raises(ValueError):
        ssim(GrayImage(np.zeros((4, 4), dtype=np.uint8)), GrayImage(np.zeros((4, 4), dtype=np.uint8)))
    with pytest.raises(ValueError):
        ssim(img, img, SSIMConfig(window="box"))


def test_psnr_symmetric():
    img = camera(64)
    rec = compress_reconstruct(img, T3, 5)
    assert psnr(img, rec) == psnr(rec, img)


@pytest.fixture
def corpus(tmp_path):
    write_pgm(tmp_path / "b_camera.pgm", camera(64))
    write_pgm(tmp_path / "a_coins.pgm", GrayImage(skdata.coins()[:64, :64]))
    write_pgm(tmp_path / "c_odd.pgm", GrayImage(np.zeros((10, 12), dtype=np.uint8)))
    (tmp_path / "d_broken.pgm").write_bytes(b"P5\n8 8\n255\n")
    (tmp_path / "notes.txt").write_text("ignored")
    return tmp_path


def test_batch_evaluate(corpus):
    res = batch_evaluate(corpus, {"dct": DCT, "t1": T1, "t3": T3}, r_values=[1, 5, 10, 64])
    assert res.images == ["a_coins.pgm", "b_camera.pgm"]
    assert {name for name, _ in res.failures} == {"c_odd.pgm", "d_broken.pgm"}
    agg = res.aggregate_rows()
    assert [r["r"] for r in agg if r["transform"] == "dct"] == [1, 5, 10, 64]
    for row in agg:
        if row["transform"] == "dct":
            assert row["ape_psnr"] == 0 and row["ape_ssim"] == 0
        assert row["bpp"] == row["r"] / 8
    for name in ("dct", "t1", "t3"):
        means = [r["mean_psnr"] for r in agg if r["transform"] == name]
        assert all(b >= a for a, b in zip(means, means[1:]))
    csv_text = codec.rows_to_csv(agg, codec.AGGREGATE_COLUMNS)
    assert csv_text.splitlines()[0] == ",".join(codec.AGGREGATE_COLUMNS)
    per = codec.rows_to_csv(res.per_image_rows(), codec.PER_IMAGE_COLUMNS)
    assert per.splitlines()[0] == "image,transform,r,bpp,psnr,ssim"
    assert len(per.splitlines()) == 1 + 2 * 3 * 4


def test_batch_is_worker_independent(corpus):
    apps = {"dct": DCT, "t16": T16}
    a = batch_evaluate(corpus, apps, [2, 9], workers=1).aggregate_rows()
    b = batch_evaluate(corpus, apps, [2, 9], workers=2).aggregate_rows()
    assert a == b


def test_empty_corpus(tmp_path):
    with pytest.raises(codec.EmptyCorpusError):
        batch_evaluate(tmp_path, {"dct": DCT}, [1])
    with pytest.raises(FileNotFoundError):
        batch_evaluate(tmp_path / "missing", {"dct": DCT}, [1])
