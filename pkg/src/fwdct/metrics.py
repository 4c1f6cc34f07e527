"""Objective functions for scoring DCT approximations.

The real-valued metrics accept a single 8x8 matrix or a stack ``(..., 8, 8)``
so the exhaustive search can score thousands of candidates per call.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fwcore import KnownTransform, exact_dct, fw_map_batch
from .ortho import Approximation, make_approximation
from .rational import LOW_COMPLEXITY_SET, ParamVector, as_params

DEFAULT_RHO = 0.95
_SHIFT_VALUES = frozenset(v for v in LOW_COMPLEXITY_SET if abs(v) in (0.5, 2))


class LowComplexityWarning(UserWarning):
    """Operation counts requested for parameters outside {0, +-1/2, +-1, +-2}."""


def markov_covariance(rho: float = DEFAULT_RHO, n: int = 8) -> np.ndarray:
    """First-order Markov covariance, entries rho ** |m - n|."""
    if not 0 < rho < 1:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    if n < 1:
        raise ValueError("size must be positive")
    idx = np.arange(n)
    return rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)


@dataclass(frozen=True)
class MarkovModel:
    rho: float = DEFAULT_RHO
    size: int = 8

    def __post_init__(self):
        markov_covariance(self.rho, self.size)  # validates

    @property
    def covariance(self) -> np.ndarray:
        return _cached_cov(self.rho, self.size)


@lru_cache(maxsize=16)
def _cached_cov(rho, n):
    r = markov_covariance(rho, n)
    r.flags.writeable = False
    return r


DEFAULT_MODEL = MarkovModel()


def _check(c: np.ndarray, model: MarkovModel) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.shape[-2:] != (model.size, model.size):
        raise ValueError(f"matrix shape {c.shape[-2:]} does not match model size {model.size}")
    return c


def total_error_energy(c_hat) -> np.ndarray | float:
    """pi * ||C - c_hat||_F^2."""
    d = exact_dct() - np.asarray(c_hat, dtype=float)
    out = np.pi * np.sum(d * d, axis=(-2, -1))
    return float(out) if np.ndim(out) == 0 else out


def mse(c_hat, model: MarkovModel = DEFAULT_MODEL):
    """tr((C - c_hat) R (C - c_hat)^T) / N."""
    c_hat = _check(c_hat, model)
    d = exact_dct() - c_hat
    out = np.einsum("...ij,jk,...ik->...", d, model.covariance, d) / model.size
    return float(out) if np.ndim(out) == 0 else out


def unified_coding_gain(c_hat, c_hat_inv, model: MarkovModel = DEFAULT_MODEL):
    """10 log10 prod_k (A_k B_k) ** (-1/N), with A_k = h_k R h_k^T and B_k = ||g_k||^2.

    h_k are rows of c_hat and g_k rows of its inverse.
    """
    c_hat = _check(c_hat, model)
    c_hat_inv = _check(c_hat_inv, model)
    a = np.einsum("...ki,ij,...kj->...k", c_hat, model.covariance, c_hat)
    b = np.sum(c_hat_inv * c_hat_inv, axis=-1)
    out = -10 * np.mean(np.log10(a * b), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def transform_efficiency(c_hat, model: MarkovModel = DEFAULT_MODEL):
    """Percentage of |R_X| mass on its diagonal, R_X = c_hat R c_hat^T."""
    c_hat = _check(c_hat, model)
    rx = c_hat @ model.covariance @ np.swapaxes(c_hat, -1, -2)
    diag = np.abs(np.diagonal(rx, axis1=-2, axis2=-1)).sum(axis=-1)
    out = 100 * diag / np.abs(rx).sum(axis=(-2, -1))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Operation counts


def _warn_if_off_set(alpha: ParamVector, what: str) -> None:
    if not alpha.is_low_complexity:
        warnings.warn(f"{what} assumes parameters in {{0, +-1/2, +-1, +-2}}; got {alpha}",
                      LowComplexityWarning, stacklevel=3)


def addition_count(alpha) -> int:
    """A = 14 + 2 max(1, nnz(a1, a5)) + 4 max(1, nnz(a0, a2, a4, a6)) - 6."""
    alpha = as_params(alpha)
    _warn_if_off_set(alpha, "addition count")
    a0, a1, a2, _, a4, a5, a6 = alpha
    rot = sum(v != 0 for v in (a1, a5))
    quad = sum(v != 0 for v in (a0, a2, a4, a6))
    return 14 + 2 * max(1, rot) + 4 * max(1, quad) - 6


def shift_count(alpha) -> int:
    """S = 2 phi(a3) + 2 phi(a1, a5) + 4 phi(a0, a2, a4, a6), phi counting +-1/2 and +-2."""
    alpha = as_params(alpha)
    _warn_if_off_set(alpha, "shift count")
    a0, a1, a2, a3, a4, a5, a6 = alpha

    def phi(*vals):
        return sum(v in _SHIFT_VALUES for v in vals)

    return 2 * phi(a3) + 2 * phi(a1, a5) + 4 * phi(a0, a2, a4, a6)


def operation_counts_batch(alphas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (A, S) for float rows already known to lie in the low-complexity set."""
    a = np.asarray(alphas, dtype=float)
    nz = a != 0
    sh = (np.abs(a) == 0.5) | (np.abs(a) == 2)
    rot, quad = [1, 5], [0, 2, 4, 6]
    adds = 14 + 2 * np.maximum(1, nz[:, rot].sum(1)) + 4 * np.maximum(1, nz[:, quad].sum(1)) - 6
    shifts = 2 * sh[:, 3] + 2 * sh[:, rot].sum(1) + 4 * sh[:, quad].sum(1)
    return adds.astype(int), shifts.astype(int)


# ---------------------------------------------------------------------------
# Objective vectors


@dataclass(frozen=True)
class ObjectiveVector:
    """(epsilon, MSE, -Cg, -eta, A, S); every entry is to be minimized.

    ``adds`` and ``shifts`` are None when the parameters fall outside the
    low-complexity set, where the counting formulas do not apply.
    """

    epsilon: float
    mse: float
    neg_cg: float
    neg_eta: float
    adds: int | None
    shifts: int | None

    @property
    def cg(self) -> float:
        return -self.neg_cg

    @property
    def eta(self) -> float:
        return -self.neg_eta

    def as_tuple(self) -> tuple:
        return (self.epsilon, self.mse, self.neg_cg, self.neg_eta, self.adds, self.shifts)

    def describe(self) -> dict:
        return {"epsilon": self.epsilon, "mse": self.mse, "cg": self.cg, "eta": self.eta,
                "adds": self.adds, "shifts": self.shifts}


def score_approximation(app: Approximation, model: MarkovModel = DEFAULT_MODEL) -> tuple:
    return (total_error_energy(app.c_hat), mse(app.c_hat, model),
            unified_coding_gain(app.c_hat, app.c_hat_inv, model),
            transform_efficiency(app.c_hat, model))


def objective_vector(source, model: MarkovModel = DEFAULT_MODEL) -> ObjectiveVector:
    """Score a parameter vector, a known transform or a ready approximation."""
    if isinstance(source, Approximation):
        app, alpha = source, source.alpha
    elif isinstance(source, KnownTransform):
        app, alpha = make_approximation(source), source.parameters
    else:
        alpha = as_params(source)
        app = make_approximation(alpha)
    eps, err, cg, eta = score_approximation(app, model)
    if alpha is not None and alpha.is_low_complexity:
        adds, shifts = addition_count(alpha), shift_count(alpha)
    else:
        adds = shifts = None
    return ObjectiveVector(eps, err, -cg, -eta, adds, shifts)


def objective_batch(alphas: np.ndarray, model: MarkovModel = DEFAULT_MODEL) -> np.ndarray:
    """Real objectives (epsilon, MSE, -Cg, -eta) for rows of invertible low-complexity alphas.

    Uses ``c_hat = diag(T T^T) ** -1/2 T``, which coincides with the polar
    scaling whenever the Gram matrix is diagonal.
    """
    t = fw_map_batch(alphas)
    norms = np.sqrt(np.sum(t * t, axis=-1))
    c_hat = t / norms[..., None]
    c_inv = np.linalg.inv(c_hat)
    return np.stack([total_error_energy(c_hat), mse(c_hat, model),
                     -unified_coding_gain(c_hat, c_inv, model),
                     -transform_efficiency(c_hat, model)], axis=-1)
