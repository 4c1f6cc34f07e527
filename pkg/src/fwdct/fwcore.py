"""Feig-Winograd structure: factor matrices, the parametrized map, the flow graph.

Every transform in the family factors as

    T(alpha) = P8 . K(alpha) . B1 . B2 . B3

where the B's are butterflies, P8 is a signed permutation and K(alpha) is a
block-diagonal matrix holding all seven multipliers.  With
``alpha = gamma / 2``, ``gamma_k = cos(pi (k + 1) / 16)`` the product is the
orthonormal 8-point DCT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .rational import ExactMatrix, ParamVector, as_params, is_power_of_two

N = 8

# Row r of P8 takes column _P8_COLS[r] with sign _P8_SIGNS[r].
_P8_COLS = (0, 4, 2, 5, 1, 7, 3, 6)
_P8_SIGNS = (1, -1, 1, -1, 1, -1, 1, 1)


class UnknownTransformError(KeyError):
    pass


@lru_cache(maxsize=None)
def structural_matrices() -> tuple[ExactMatrix, ExactMatrix, ExactMatrix, ExactMatrix]:
    """Return ``(B1, B2, B3, P8)``."""
    b1 = np.eye(N, dtype=int)
    b1[:2, :2] = [[1, 1], [1, -1]]
    b2 = np.eye(N, dtype=int)
    b2[:4, :4] = [[1, 0, 0, 1], [0, 1, 1, 0], [0, 1, -1, 0], [1, 0, 0, -1]]
    eye4 = np.eye(4, dtype=int)
    rev4 = eye4[::-1]
    b3 = np.block([[eye4, rev4], [rev4, -eye4]])
    p8 = np.zeros((N, N), dtype=int)
    for r, (c, s) in enumerate(zip(_P8_COLS, _P8_SIGNS)):
        p8[r, c] = s
    return ExactMatrix(b1), ExactMatrix(b2), ExactMatrix(b3), ExactMatrix(p8)


@lru_cache(maxsize=None)
def butterfly_product() -> ExactMatrix:
    b1, b2, b3, _ = structural_matrices()
    return b1 @ b2 @ b3


def _k_layout(a: Sequence) -> list[list]:
    a0, a1, a2, a3, a4, a5, a6 = a
    z = 0 * a3
    return [
        [a3, z, z, z, z, z, z, z],
        [z, a3, z, z, z, z, z, z],
        [z, z, a5, a1, z, z, z, z],
        [z, z, -a1, a5, z, z, z, z],
        [z, z, z, z, -a6, -a4, -a2, -a0],
        [z, z, z, z, a4, a0, a6, -a2],
        [z, z, z, z, -a0, a2, -a4, a6],
        [z, z, z, z, -a2, -a6, a0, -a4],
    ]


def k_matrix(alpha) -> ExactMatrix:
    """Block-diagonal multiplier matrix K(alpha)."""
    return ExactMatrix.from_entries(_k_layout(as_params(alpha)))


def fw_map(alpha) -> ExactMatrix:
    """T(alpha) = P8 K(alpha) B1 B2 B3, exactly."""
    p8 = structural_matrices()[3]
    return p8 @ k_matrix(alpha) @ butterfly_product()


def fw_map_float(alpha) -> np.ndarray:
    """Floating-point T(alpha); accepts real parameters such as cosines."""
    a = np.asarray([float(v) for v in alpha], dtype=float)
    if a.shape != (7,):
        raise ValueError("parameter vector needs 7 entries")
    k = np.array(_k_layout(a), dtype=float)
    return _P8_FLOAT @ k @ _B_FLOAT


def fw_map_batch(alphas: np.ndarray) -> np.ndarray:
    """T(alpha) for a stack of parameter rows, shape ``(n, 7) -> (n, 8, 8)``."""
    a = np.asarray(alphas, dtype=float)
    n = a.shape[0]
    k = np.zeros((n, N, N))
    a0, a1, a2, a3, a4, a5, a6 = a.T
    k[:, 0, 0] = k[:, 1, 1] = a3
    k[:, 2, 2], k[:, 2, 3], k[:, 3, 2], k[:, 3, 3] = a5, a1, -a1, a5
    k[:, 4, 4:] = np.stack([-a6, -a4, -a2, -a0], axis=1)
    k[:, 5, 4:] = np.stack([a4, a0, a6, -a2], axis=1)
    k[:, 6, 4:] = np.stack([-a0, a2, -a4, a6], axis=1)
    k[:, 7, 4:] = np.stack([-a2, -a6, a0, -a4], axis=1)
    return _P8_FLOAT @ k @ _B_FLOAT


_P8_FLOAT = structural_matrices()[3].to_float()
_B_FLOAT = butterfly_product().to_float()


def dct_parameters() -> np.ndarray:
    """gamma_k = cos(2 pi (k + 1) / 32), k = 0..6; T(gamma / 2) is the DCT."""
    return np.cos(2 * np.pi * (np.arange(7) + 1) / 32)


def exact_dct() -> np.ndarray:
    """Orthonormal 8-point DCT-II matrix built straight from the cosine formula."""
    m = np.arange(N)[:, None]
    n = np.arange(N)[None, :]
    c = np.sqrt(2 / N) * np.cos(np.pi * m * (2 * n + 1) / (2 * N))
    c[0] /= math.sqrt(2)
    return c


# ---------------------------------------------------------------------------
# Flow graph


@dataclass(frozen=True)
class OpCount:
    adds: int = 0
    shifts: int = 0
    mults: int = 0

    def __add__(self, other: "OpCount") -> "OpCount":
        return OpCount(self.adds + other.adds, self.shifts + other.shifts, self.mults + other.mults)


def _arc_cost(c: Fraction) -> OpCount:
    if abs(c) == 1:
        return OpCount()
    if is_power_of_two(c):
        return OpCount(shifts=1)
    return OpCount(mults=1)


@dataclass(frozen=True)
class SparseStage:
    """One layer of the signal flow graph: ``y[i] = sum(c * x[j] for j, c in rows[i])``."""

    name: str
    rows: tuple[tuple[tuple[int, Fraction], ...], ...]

    @classmethod
    def from_matrix(cls, name: str, m: ExactMatrix) -> "SparseStage":
        rows = tuple(
            tuple((j, q) for j, q in enumerate(row) if q != 0) for row in m.entries()
        )
        return cls(name, rows)

    def ops(self) -> OpCount:
        total = OpCount()
        for row in self.rows:
            if row:
                total = total + OpCount(adds=len(row) - 1)
            for _, c in row:
                total = total + _arc_cost(c)
        return total

    def apply(self, x: Sequence) -> list:
        out = []
        for row in self.rows:
            acc = None
            for j, c in row:
                v = x[j]
                if c == -1:
                    v = -v
                elif c != 1:
                    v = _scale(c, v)
                acc = v if acc is None else acc + v
            out.append(0 * x[0] if acc is None else acc)
        return out


def _scale(c: Fraction, v):
    if isinstance(v, (Fraction, int)):
        return c * v
    return float(c) * v


@dataclass(frozen=True)
class FlowGraph:
    """Cascade of sparse stages applied right to left in matrix terms (first stage first)."""

    stages: tuple[SparseStage, ...]
    counts: OpCount = field(init=False)

    def __post_init__(self):
        total = OpCount()
        for s in self.stages:
            total = total + s.ops()
        object.__setattr__(self, "counts", total)

    def __call__(self, x: Sequence) -> np.ndarray:
        if len(x) != N:
            raise ValueError("input must have 8 samples")
        v = list(x)
        for stage in self.stages:
            v = stage.apply(v)
        exact = all(isinstance(t, (Fraction, int)) for t in v)
        return np.array(v, dtype=object if exact else float)

    def matrix(self) -> ExactMatrix:
        """Reassemble the dense matrix the graph computes (for checking only)."""
        m = ExactMatrix.identity()
        for stage in self.stages:
            rows = [[Fraction(0)] * N for _ in range(N)]
            for i, row in enumerate(stage.rows):
                for j, c in row:
                    rows[i][j] = c
            m = ExactMatrix.from_entries(rows) @ m
        return m


@lru_cache(maxsize=4096)
def forward_graph(alpha) -> FlowGraph:
    """Flow graph for T(alpha), zero-parameter arcs pruned."""
    b1, b2, b3, p8 = structural_matrices()
    stages = (
        SparseStage.from_matrix("B3", b3),
        SparseStage.from_matrix("B2", b2),
        SparseStage.from_matrix("B1", b1),
        SparseStage.from_matrix("K", k_matrix(alpha)),
        SparseStage.from_matrix("P8", p8),
    )
    return FlowGraph(stages)


def fast_forward(alpha, x: Sequence) -> np.ndarray:
    """Evaluate ``T(alpha) @ x`` through the butterfly network."""
    return forward_graph(as_params(alpha))(x)


# ---------------------------------------------------------------------------
# Known transforms


@dataclass(frozen=True)
class KnownTransform:
    name: str
    description: str
    alpha: ParamVector
    param_scale: Fraction = Fraction(1)
    left_perm: tuple[int, ...] | None = None
    right_perm: tuple[int, ...] | None = None
    literature_adds: int | None = None
    literature_shifts: int | None = None
    literature_mults: int | None = None

    @property
    def parameters(self) -> ParamVector:
        """The vector actually fed to the FW map."""
        return self.alpha if self.param_scale == 1 else self.alpha.scaled(self.param_scale)

    @property
    def is_low_complexity(self) -> bool:
        return self.parameters.is_low_complexity

    def matrix(self) -> ExactMatrix:
        """FW(parameters), with the recorded row/column permutations applied."""
        t = fw_map(self.parameters)
        if self.left_perm is not None:
            t = permutation_matrix(self.left_perm) @ t
        if self.right_perm is not None:
            t = t @ permutation_matrix(self.right_perm)
        return t


def perm_from_cycles(cycles: Sequence[Sequence[int]], n: int = N) -> tuple[int, ...]:
    """Cycle notation on 1..n to an image tuple p with p[i] the image of i (0-based)."""
    p = list(range(n))
    for cyc in cycles:
        for i, src in enumerate(cyc):
            p[src - 1] = cyc[(i + 1) % len(cyc)] - 1
    if sorted(p) != list(range(n)):
        raise ValueError("cycles do not describe a permutation")
    return tuple(p)


def permutation_matrix(p: Sequence[int]) -> ExactMatrix:
    """Matrix with a one at (i, p[i])."""
    n = len(p)
    m = np.zeros((n, n), dtype=int)
    for i, j in enumerate(p):
        m[i, j] = 1
    return ExactMatrix(m)


def _known() -> dict[str, KnownTransform]:
    gamma = ParamVector(dct_parameters())
    items = [
        KnownTransform("dct", "exact DCT", gamma, Fraction(1, 2),
                       literature_adds=28, literature_shifts=0, literature_mults=22),
        KnownTransform("sdct", "signed DCT", ParamVector([1] * 7),
                       literature_adds=24, literature_shifts=0),
        KnownTransform("lo", "Lengwehasatit-Ortega level 1", ParamVector("1,1,1,1,1,1/2,0")),
        KnownTransform("rdct", "rounded DCT", ParamVector("1,1,1,1,1,0,0"),
                       literature_adds=22, literature_shifts=0),
        KnownTransform("mrdct", "modified rounded DCT", ParamVector("1,1,0,1,0,0,0")),
        KnownTransform("rf", "multiplier-free approximation for RF imaging",
                       ParamVector("2,2,1,1,1,1,0")),
        KnownTransform("haar", "non-normalized Haar", ParamVector("0,0,0,1,1,1,0"),
                       left_perm=perm_from_cycles([(1,), (8, 2, 5, 6, 4, 3, 7)]),
                       right_perm=perm_from_cycles([(1,), (8, 2, 6), (5, 3, 7), (4,)])),
        KnownTransform("avc", "H.264/AVC 8-point integer transform",
                       ParamVector("12,8,10,8,6,4,3"),
                       literature_adds=32, literature_shifts=10, literature_mults=0),
        KnownTransform("hevc", "H.265/HEVC 8-point core transform",
                       ParamVector("89,83,75,64,50,36,18"),
                       literature_adds=28, literature_shifts=0, literature_mults=22),
    ]
    return {t.name: t for t in items}


KNOWN_TRANSFORMS: dict[str, KnownTransform] = _known()


def known_transform(name: str) -> KnownTransform:
    try:
        return KNOWN_TRANSFORMS[name.lower()]
    except KeyError:
        raise UnknownTransformError(
            f"unknown transform {name!r}; known: {', '.join(KNOWN_TRANSFORMS)}"
        ) from None


def haar_matrix() -> np.ndarray:
    """Non-normalized 8-point Haar matrix, built by recursive expansion."""
    h = np.array([[1]])
    while h.shape[0] < N:
        n = h.shape[0]
        top = np.kron(h, [1, 1])
        bottom = np.kron(np.eye(n, dtype=int), [1, -1])
        h = np.vstack([top, bottom])
    return h

