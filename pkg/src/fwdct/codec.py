"""JPEG-like compression harness.

Each 8x8 block is transformed, all but the first r zigzag coefficients are
zeroed, and the block is transformed back.  There is no quantization or
entropy coding; r/8 bits per pixel serves as the rate proxy.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .ortho import Approximation
from .pgm import GrayImage, PGMError, read_pgm

BLOCK = 8


class EmptyCorpusError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Block transforms


def forward_2d(app: Approximation, block) -> np.ndarray:
    """C A C^T for orthogonal approximations, C A inv(C) otherwise. Works on stacks."""
    c = app.c_hat
    right = c.T if app.is_orthogonal else app.c_hat_inv
    return c @ np.asarray(block, dtype=float) @ right


def inverse_2d(app: Approximation, coeffs) -> np.ndarray:
    """inv(C) B C, with inv(C) = C^T in the orthogonal case."""
    c = app.c_hat
    left = c.T if app.is_orthogonal else app.c_hat_inv
    return left @ np.asarray(coeffs, dtype=float) @ c


@lru_cache(maxsize=None)
def zigzag_order() -> tuple[tuple[int, int], ...]:
    """JPEG zigzag scan of an 8x8 block as (row, col) pairs."""
    order = []
    for s in range(2 * BLOCK - 1):
        rows = range(max(0, s - BLOCK + 1), min(s, BLOCK - 1) + 1)
        # Odd anti-diagonals run downwards (row increasing), even ones upwards.
        for i in (rows if s % 2 else reversed(rows)):
            order.append((i, s - i))
    return tuple(order)


@lru_cache(maxsize=65)
def retention_mask(r: int) -> np.ndarray:
    if not 1 <= r <= BLOCK * BLOCK:
        raise ValueError(f"r must be in 1..64, got {r}")
    mask = np.zeros((BLOCK, BLOCK))
    for i, j in zigzag_order()[:r]:
        mask[i, j] = 1
    mask.flags.writeable = False
    return mask


def retain(coeffs, r: int) -> np.ndarray:
    """Keep the first r zigzag coefficients, zero the rest."""
    return np.asarray(coeffs, dtype=float) * retention_mask(r)


def round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def compress_reconstruct(img: GrayImage, app: Approximation, r: int,
                         level_shift: bool = False) -> GrayImage:
    img.require_blocks(BLOCK)
    blocks = img.blocks(BLOCK)
    shift = 128.0 if level_shift else 0.0
    coeffs = retain(forward_2d(app, blocks - shift), r)
    rec = inverse_2d(app, coeffs) + shift
    return GrayImage.from_blocks(np.clip(round_half_away(rec), 0, 255).astype(np.uint8))


# ---------------------------------------------------------------------------
# Quality measures


def _same_shape(a: GrayImage, b: GrayImage) -> None:
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(f"size mismatch {a.pixels.shape} vs {b.pixels.shape}")


def psnr(a: GrayImage, b: GrayImage) -> float:
    """10 log10(255^2 / MSE); ``math.inf`` means the images are identical."""
    _same_shape(a, b)
    err = np.mean((a.pixels.astype(float) - b.pixels.astype(float)) ** 2)
    if err == 0:
        return math.inf
    return float(10 * np.log10(255.0 ** 2 / err))


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-x * x / (2 * sigma * sigma))
    return g / g.sum()


def _filter_valid(x: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Separable 'valid' correlation with the 1-D kernel k on both axes."""
    n = len(k)
    rows = np.lib.stride_tricks.sliding_window_view(x, n, axis=0) @ k
    return np.lib.stride_tricks.sliding_window_view(rows, n, axis=1) @ k


@dataclass(frozen=True)
class SSIMConfig:
    window: str = "uniform"
    size: int = 8
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 255.0

    def kernel(self) -> np.ndarray:
        if self.window == "uniform":
            return np.full(self.size, 1.0 / self.size)
        if self.window == "gaussian":
            return gaussian_window(self.size, self.sigma)
        raise ValueError(f"unknown SSIM window {self.window!r}")


DEFAULT_SSIM = SSIMConfig()
GAUSSIAN_SSIM = SSIMConfig(window="gaussian", size=11)


def ssim(a: GrayImage, b: GrayImage, config: SSIMConfig = DEFAULT_SSIM) -> float:
    """Mean structural similarity over all fully contained windows."""
    _same_shape(a, b)
    if min(a.pixels.shape) < config.size:
        raise ValueError(f"image smaller than the {config.size}x{config.size} SSIM window")
    x = a.pixels.astype(float)
    y = b.pixels.astype(float)
    k = config.kernel()
    mx, my = _filter_valid(x, k), _filter_valid(y, k)
    vx = _filter_valid(x * x, k) - mx * mx
    vy = _filter_valid(y * y, k) - my * my
    cxy = _filter_valid(x * y, k) - mx * my
    c1 = (config.k1 * config.data_range) ** 2
    c2 = (config.k2 * config.data_range) ** 2
    s = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
    return float(s.mean())


# ---------------------------------------------------------------------------
# Runs and corpus evaluation


@dataclass(frozen=True)
class CompressionRun:
    transform: str
    r: int
    psnr: float
    ssim: float

    @property
    def bpp(self) -> float:
        return self.r / BLOCK


def evaluate_image(img: GrayImage, transforms: Mapping[str, Approximation],
                   r_values: Sequence[int], level_shift: bool = False,
                   ssim_config: SSIMConfig = DEFAULT_SSIM) -> list[CompressionRun]:
    runs = []
    for name, app in transforms.items():
        for r in r_values:
            rec = compress_reconstruct(img, app, r, level_shift)
            runs.append(CompressionRun(name, r, psnr(img, rec), ssim(img, rec, ssim_config)))
    return runs


def load_corpus(corpus_dir) -> tuple[list[tuple[str, GrayImage]], list[tuple[str, str]]]:
    """Codec-ready PGM images in lexicographic order, plus (file, reason) for skipped ones."""
    root = Path(corpus_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory {root} not found")
    images, failures = [], []
    for path in sorted(p for p in root.iterdir() if p.suffix.lower() in (".pgm", ".pnm")):
        try:
            img = read_pgm(path)
            img.require_blocks(BLOCK)
        except (OSError, PGMError, ValueError) as exc:
            failures.append((path.name, str(exc)))
            continue
        images.append((path.name, img))
    return images, failures


def _ape(value: float, ref: float) -> float:
    if value == ref:
        return 0.0
    if not (math.isfinite(value) and math.isfinite(ref)) or ref == 0:
        return math.nan
    return abs(value - ref) / abs(ref) * 100


def _cv(values: np.ndarray) -> float:
    if not np.all(np.isfinite(values)):
        return math.nan
    m = values.mean()
    return float(values.std() / m) if m else math.nan


def _mean(values: np.ndarray) -> float:
    return float(values.mean())


@dataclass
class BatchResult:
    images: list[str]
    runs: dict[str, list[CompressionRun]]
    failures: list[tuple[str, str]] = field(default_factory=list)
    reference: str = "dct"

    def per_image_rows(self) -> list[dict]:
        rows = []
        for name in self.images:
            for run in self.runs[name]:
                rows.append({"image": name, "transform": run.transform, "r": run.r,
                             "bpp": run.bpp, "psnr": run.psnr, "ssim": run.ssim})
        return rows

    def aggregate_rows(self) -> list[dict]:
        table: dict[tuple[str, int], list[CompressionRun]] = {}
        order: list[tuple[str, int]] = []
        for name in self.images:
            for run in self.runs[name]:
                key = (run.transform, run.r)
                if key not in table:
                    table[key] = []
                    order.append(key)
                table[key].append(run)
        means = {}
        for key in order:
            p = np.array([x.psnr for x in table[key]])
            s = np.array([x.ssim for x in table[key]])
            means[key] = (p, s)
        rows = []
        for transform, r in order:
            p, s = means[(transform, r)]
            ref = means.get((self.reference, r))
            mp, ms = _mean(p), _mean(s)
            rows.append({
                "transform": transform, "r": r, "bpp": r / BLOCK,
                "mean_psnr": mp, "mean_ssim": ms,
                "ape_psnr": _ape(mp, _mean(ref[0])) if ref else math.nan,
                "ape_ssim": _ape(ms, _mean(ref[1])) if ref else math.nan,
                "cv_psnr": _cv(p), "cv_ssim": _cv(s),
            })
        return rows


PER_IMAGE_COLUMNS = ["image", "transform", "r", "bpp", "psnr", "ssim"]
AGGREGATE_COLUMNS = ["transform", "r", "bpp", "mean_psnr", "mean_ssim",
                     "ape_psnr", "ape_ssim", "cv_psnr", "cv_ssim"]


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def _evaluate_task(args):
    name, img, transforms, r_values, level_shift, ssim_config = args
    return name, evaluate_image(img, transforms, r_values, level_shift, ssim_config)


def batch_evaluate(corpus_dir, transforms: Mapping[str, Approximation],
                   r_values: Sequence[int] = range(1, 46), level_shift: bool = False,
                   ssim_config: SSIMConfig = DEFAULT_SSIM, workers: int = 1,
                   reference: str = "dct") -> BatchResult:
    """Score every (image, transform, r); APE columns compare against ``reference``."""
    images, failures = load_corpus(corpus_dir)
    if not images:
        raise EmptyCorpusError(f"no usable PGM images in {corpus_dir}")
    r_values = list(r_values)
    for r in r_values:
        retention_mask(r)  # validates the range up front
    tasks = [(name, img, dict(transforms), r_values, level_shift, ssim_config)
             for name, img in images]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_task, tasks))
    else:
        results = [_evaluate_task(t) for t in tasks]
    return BatchResult([n for n, _ in images], dict(results), failures, reference)
