"""Orthogonalization of low-complexity matrices.

For a low-complexity T the orthogonal approximation is ``C = S T`` with
``S = sqrt(inv(T T^T))``.  When the Gram matrix is diagonal S is diagonal
too and folds into quantization; otherwise we fall back to the cheaper
``diag(T T^T) ** -1/2`` and call the result near-orthogonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .fwcore import KnownTransform, fw_map, exact_dct
from .inversion import NotInvertibleError, invertibility, inverse_matrix
from .rational import ExactMatrix, ParamVector, as_params

ORTHOGONAL = "orthogonal"
NEAR_ORTHOGONAL = "near_orthogonal"


class NotPositiveDefiniteError(ValueError):
    pass


def gram_matrix(t: ExactMatrix) -> ExactMatrix:
    return t @ t.T


def diagonality_condition(alpha) -> bool:
    """True iff T(alpha) T(alpha)^T is exactly diagonal."""
    return gram_matrix(fw_map(alpha)).is_diagonal()


def sufficient_condition(alpha) -> bool:
    """alpha0 (alpha2 - alpha4) == alpha6 (alpha2 + alpha4)."""
    a0, _, a2, _, a4, _, a6 = as_params(alpha)
    return a0 * (a2 - a4) == a6 * (a2 + a4)


def closed_form_scaling(alpha) -> np.ndarray:
    """Diagonal of S when the Gram matrix is diagonal: (s0, s1, s2, s1, s0, s1, s2, s1)."""
    a0, a1, a2, a3, a4, a5, a6 = (float(v) for v in as_params(alpha))
    s0 = 1 / (2 ** 1.5 * abs(a3))
    s1 = 1 / math.sqrt(2 * (a0 * a0 + a2 * a2 + a4 * a4 + a6 * a6))
    s2 = 1 / (2 * math.sqrt(a1 * a1 + a5 * a5))
    return np.array([s0, s1, s2, s1, s0, s1, s2, s1])


def inverse_sqrt_spd(m: np.ndarray) -> np.ndarray:
    """Principal square root of inv(m) for symmetric positive-definite m."""
    m = (m + m.T) / 2
    w, v = np.linalg.eigh(m)
    if w.min() <= 0:
        raise NotPositiveDefiniteError("Gram matrix is not positive definite")
    return (v / np.sqrt(w)) @ v.T


def polar_scaling(alpha) -> np.ndarray:
    """S = sqrt(inv(T T^T)): closed-form diagonal when possible, dense otherwise."""
    alpha = as_params(alpha)
    if not invertibility(alpha):
        raise NotInvertibleError(f"T{alpha} is singular")
    g = gram_matrix(fw_map(alpha))
    if g.is_diagonal():
        return np.diag(closed_form_scaling(alpha))
    return inverse_sqrt_spd(g.to_float())


def _near_ortho_from_gram(g: ExactMatrix) -> np.ndarray:
    d = np.array([float(v) for v in g.diagonal()])
    if np.any(d <= 0):
        raise ZeroDivisionError("a row of the transform is all zero")
    return np.diag(1 / np.sqrt(d))


def near_ortho_scaling(alpha) -> np.ndarray:
    """S_hat = diag(T T^T) ** -1/2."""
    alpha = as_params(alpha)
    if not invertibility(alpha):
        raise NotInvertibleError(f"T{alpha} is singular")
    return _near_ortho_from_gram(gram_matrix(fw_map(alpha)))


def deviation_from_diagonality(m) -> float:
    """1 - ||diag(m)||_F^2 / ||m||_F^2; zero exactly for diagonal matrices."""
    m = np.asarray(m.to_float() if isinstance(m, ExactMatrix) else m, dtype=float)
    total = np.sum(m * m)
    if total == 0:
        raise ValueError("deviation from diagonality is undefined for the zero matrix")
    return float(1 - np.sum(np.diag(m) ** 2) / total)


@dataclass(frozen=True, eq=False)
class Approximation:
    """An orthogonal or near-orthogonal DCT approximation ``c_hat = scaling @ low_matrix``."""

    alpha: ParamVector | None
    low_matrix: ExactMatrix
    scaling: np.ndarray
    c_hat: np.ndarray
    kind: str
    name: str | None = None

    @property
    def is_orthogonal(self) -> bool:
        return self.kind == ORTHOGONAL

    @cached_property
    def gram_deviation(self) -> float:
        return deviation_from_diagonality(gram_matrix(self.low_matrix))

    @cached_property
    def c_hat_inv(self) -> np.ndarray:
        """True inverse of c_hat, from the exact inverse of the low-complexity matrix."""
        if self.alpha is not None and self.low_matrix == fw_map(self.alpha):
            t_inv = inverse_matrix(self.alpha).to_float()
        else:
            t_inv = np.linalg.inv(self.low_matrix.to_float())
        s = self.scaling
        if np.count_nonzero(s - np.diag(np.diag(s))) == 0:
            return t_inv / np.diag(s)[None, :]
        return t_inv @ np.linalg.inv(s)

    def label(self) -> str:
        return self.name or str(self.alpha)


def approximation_from_matrix(t: ExactMatrix, alpha=None, name=None) -> Approximation:
    """Orthogonalize an arbitrary invertible low-complexity matrix."""
    g = gram_matrix(t)
    if g.is_diagonal():
        d = np.array([float(v) for v in g.diagonal()])
        if np.any(d <= 0):
            raise NotInvertibleError("a row of the transform is all zero")
        scaling, kind = np.diag(1 / np.sqrt(d)), ORTHOGONAL
    else:
        scaling, kind = _near_ortho_from_gram(g), NEAR_ORTHOGONAL
    c_hat = scaling @ t.to_float()
    for arr in (scaling, c_hat):
        arr.flags.writeable = False
    return Approximation(None if alpha is None else as_params(alpha), t, scaling, c_hat, kind, name)


def make_approximation(source) -> Approximation:
    """Build the approximation for a parameter vector or a :class:`KnownTransform`."""
    if isinstance(source, KnownTransform):
        if source.name == "dct":
            return exact_dct_approximation()
        permuted = source.left_perm is not None or source.right_perm is not None
        # Permuted matrices are not T(alpha), so alpha is dropped for them.
        alpha = None if permuted else source.parameters
        return approximation_from_matrix(source.matrix(), alpha, source.name)
    alpha = as_params(source)
    if not invertibility(alpha):
        raise NotInvertibleError(f"T{alpha} is singular")
    t = fw_map(alpha)
    app = approximation_from_matrix(t, alpha)
    if app.is_orthogonal:
        # Same numbers as 1/sqrt(diag), written the closed-form way.
        scaling = np.diag(closed_form_scaling(alpha))
        scaling.flags.writeable = False
        c_hat = scaling @ t.to_float()
        c_hat.flags.writeable = False
        app = Approximation(alpha, t, scaling, c_hat, ORTHOGONAL)
    return app


def exact_dct_approximation() -> Approximation:
    """The DCT itself, wrapped as an orthogonal approximation with identity scaling."""
    c = exact_dct()
    c.flags.writeable = False
    eye = np.eye(8)
    eye.flags.writeable = False
    t = ExactMatrix.from_entries(c.tolist())
    return Approximation(None, t, eye, c, ORTHOGONAL, "dct")
