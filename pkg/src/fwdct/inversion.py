"""Closed-form inverse of T(alpha).

K(alpha) is block diagonal, so its inverse is again a K-shaped matrix:
``inv(K(alpha)) = K(alpha')^T``.  The butterflies square to diagonal
matrices, and everything diagonal can be gathered into one matrix on the
right, giving

    inv(T) = B3 . B2 . B1 . K(alpha')^T . P8^T . D0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .fwcore import FlowGraph, SparseStage, fw_map, k_matrix, structural_matrices
from .rational import LOW_COMPLEXITY_SET, ExactMatrix, ParamVector, as_params

D0 = ExactMatrix.diag([Fraction(1, 8), Fraction(1, 2), Fraction(1, 4), Fraction(1, 2),
                       Fraction(1, 8), Fraction(1, 2), Fraction(1, 4), Fraction(1, 2)])
D1 = ExactMatrix.diag([Fraction(1, 8), Fraction(1, 8), Fraction(1, 4), Fraction(1, 4),
                       Fraction(1, 2), Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)])

# Per-parameter factors turning D1 . K(alpha') into K(beta) / 8.
_TRANSPOSE_SCALE = (4, 2, 4, 1, 4, 2, 4)


class NotInvertibleError(ValueError):
    pass


@dataclass(frozen=True)
class InverseParams:
    alpha_prime: ParamVector
    lam: Fraction

    @property
    def transpose_params(self) -> ParamVector:
        """beta with ``T(alpha) . T(beta)^T = 8 I``."""
        return ParamVector(s * a for s, a in zip(_TRANSPOSE_SCALE, self.alpha_prime))


def _quad_lambda(a0, a2, a4, a6) -> Fraction:
    return ((a0 * a0 + a6 * a6) ** 2 + (a2 * a2 + a4 * a4) ** 2
            + 4 * (a0 * a2 - a4 * a6) * (a2 * a6 + a0 * a4))


def invertibility(alpha) -> bool:
    """Nonzero alpha3, nonzero rotation pair, nonzero and nondegenerate quad group."""
    a0, a1, a2, a3, a4, a5, a6 = as_params(alpha)
    if a3 == 0 or a1 * a1 + a5 * a5 == 0:
        return False
    if a0 * a0 + a2 * a2 + a4 * a4 + a6 * a6 == 0:
        return False
    # The quad-group formulas divide by lambda; treat a vanishing one as singular.
    return _quad_lambda(a0, a2, a4, a6) != 0


def inverse_params(alpha) -> InverseParams:
    alpha = as_params(alpha)
    if not invertibility(alpha):
        raise NotInvertibleError(f"T{alpha} is singular")
    a0, a1, a2, a3, a4, a5, a6 = alpha
    lam = _quad_lambda(a0, a2, a4, a6)
    rot = a1 * a1 + a5 * a5
    p0 = (a0 * a6**2 + (a2**2 - a4**2) * a6 + 2 * a0 * a2 * a4 + a0**3) / lam
    p2 = (a2 * a4**2 + (a0**2 - a6**2) * a4 + 2 * a0 * a2 * a6 + a2**3) / lam
    p4 = (a4 * a2**2 + (a0**2 - a6**2) * a2 - 2 * a0 * a4 * a6 + a4**3) / lam
    p6 = (a6 * a0**2 + (a2**2 - a4**2) * a0 - 2 * a2 * a4 * a6 + a6**3) / lam
    prime = ParamVector([p0, a1 / rot, p2, 1 / a3, p4, a5 / rot, p6])
    return InverseParams(prime, lam)


def inverse_matrix(alpha) -> ExactMatrix:
    """Exact inv(T(alpha)) from the factored form."""
    ip = inverse_params(alpha)
    b1, b2, b3, p8 = structural_matrices()
    return b3 @ b2 @ b1 @ k_matrix(ip.alpha_prime).T @ p8.T @ D0


def transpose_inverse_matrix(alpha) -> ExactMatrix:
    """inv(T(alpha))^T = P8 . D1 . K(alpha') . B1 . B2 . B3."""
    ip = inverse_params(alpha)
    b1, b2, b3, p8 = structural_matrices()
    return p8 @ D1 @ k_matrix(ip.alpha_prime) @ b1 @ b2 @ b3


def inverse_graph(alpha) -> FlowGraph:
    """Flow graph of inv(T): scale, unpermute, K(alpha')^T, then the butterflies."""
    ip = inverse_params(alpha)
    b1, b2, b3, p8 = structural_matrices()
    stages = (
        SparseStage.from_matrix("D0", D0),
        SparseStage.from_matrix("P8^T", p8.T),
        SparseStage.from_matrix("K'^T", k_matrix(ip.alpha_prime).T),
        SparseStage.from_matrix("B1", b1),
        SparseStage.from_matrix("B2", b2),
        SparseStage.from_matrix("B3", b3),
    )
    return FlowGraph(stages)


def fast_inverse(alpha, y):
    return inverse_graph(as_params(alpha))(y)


def _dyadic_fit(values) -> bool:
    """True if some power of two maps every value into the low-complexity set."""
    nz = [abs(v) for v in values if v != 0]
    if not nz:
        return True
    for k in range(-16, 17):
        f = Fraction(2) ** k
        if all(f * v in LOW_COMPLEXITY_SET for v in values):
            return True
    return False


def low_complexity_inverse(alpha, mode: str = "raw") -> bool:
    """Whether the inverse multipliers stay in {0, +-1/2, +-1, +-2}.

    ``mode="raw"`` tests alpha' as given by the closed forms; ``"scaled"``
    allows one common power-of-two factor on the whole vector.
    """
    if mode not in ("raw", "scaled"):
        raise ValueError(f"unknown mode {mode!r}")
    alpha = as_params(alpha)
    if not invertibility(alpha):
        return False
    prime = inverse_params(alpha).alpha_prime
    if mode == "raw":
        return prime.is_low_complexity
    return _dyadic_fit(prime)


def check_inverse(alpha) -> bool:
    """T(alpha) . inverse_matrix(alpha) == I, exactly."""
    return (fw_map(alpha) @ inverse_matrix(alpha)).is_identity()
