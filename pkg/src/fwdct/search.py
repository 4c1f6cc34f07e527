"""Exhaustive multicriteria search over a finite parameter space.

Candidates are addressed by their position in the lexicographic product of
the (ascending) space, so every block of indices can be screened and scored
independently and the merge is just concatenation in index order.  All the
feasibility decisions (invertibility, orthogonality, inverse parameters in
the space) are made in integer arithmetic.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .fwcore import KNOWN_TRANSFORMS, fw_map, fw_map_batch
from .metrics import DEFAULT_RHO, MarkovModel, ObjectiveVector, objective_batch, operation_counts_batch
from .rational import LOW_COMPLEXITY_VALUES, ParamVector, format_rational, to_rational

DEFAULT_TAU = 5e-3
BLOCK_SIZE = 1 << 15
FEASIBILITY_MODES = ("raw", "scaled")
_REAL = slice(0, 4)
_INT = slice(4, 6)


# ---------------------------------------------------------------------------
# Enumeration


def normalize_space(space: Iterable) -> tuple[Fraction, ...]:
    vals = sorted({to_rational(v) for v in space})
    if not vals:
        raise ValueError("parameter space is empty")
    return tuple(vals)


def space_size(space: Sequence) -> int:
    return len(space) ** 7


def enumerate_space(space: Iterable = LOW_COMPLEXITY_VALUES) -> Iterator[ParamVector]:
    """Every vector of space^7 once, lexicographic in the ascending space (alpha0 slowest)."""
    space = normalize_space(space)
    for combo in itertools.product(space, repeat=7):
        yield ParamVector(combo)


def vector_at(index: int, space: Sequence) -> ParamVector:
    """Inverse of the enumeration order."""
    space = normalize_space(space)
    n = len(space)
    if not 0 <= index < n ** 7:
        raise IndexError(index)
    digits = []
    for _ in range(7):
        index, d = divmod(index, n)
        digits.append(space[d])
    return ParamVector(reversed(digits))


def _digits(lo: int, hi: int, n: int) -> np.ndarray:
    idx = np.arange(lo, hi, dtype=np.int64)
    powers = n ** np.arange(6, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % n


# ---------------------------------------------------------------------------
# Integer screen


def _membership(p, q, space_num, space_den):
    """Elementwise test p/q in space, for integer arrays p, q (q != 0)."""
    hit = np.zeros(np.shape(p), dtype=bool)
    for sn, sd in zip(space_num, space_den):
        hit |= p * sd == q * sn
    return hit


def _dyadic_membership(p, q, space_num, space_den, all_cols):
    """Rows where one common power of two maps every p/q into the space."""
    ok = np.zeros(p.shape[0], dtype=bool)
    for k in range(-16, 17):
        pk, qk = (p << k, q) if k >= 0 else (p, q << -k)
        ok |= _membership(pk, qk, space_num, space_den).all(axis=1)
    return ok


def screen(ints: np.ndarray, scale: int, space_num, space_den, mode: str = "raw") -> dict:
    """Feasibility flags for integer rows ``alpha * scale``.

    Returns boolean arrays ``invertible``, ``orthogonal`` and ``low_inverse``.
    """
    a = ints
    a0, a1, a2, a3, a4, a5, a6 = (a[:, k] for k in range(7))
    rot = a1 * a1 + a5 * a5
    quad = a0 * a0 + a2 * a2 + a4 * a4 + a6 * a6
    lam = ((a0 * a0 + a6 * a6) ** 2 + (a2 * a2 + a4 * a4) ** 2
           + 4 * (a0 * a2 - a4 * a6) * (a2 * a6 + a0 * a4))
    invertible = (a3 != 0) & (rot != 0) & (quad != 0) & (lam != 0)

    # T T^T is diagonal iff the 4x4 quad block Q has orthogonal rows.
    q = np.stack([np.stack([-a6, -a4, -a2, -a0], 1), np.stack([a4, a0, a6, -a2], 1),
                  np.stack([-a0, a2, -a4, a6], 1), np.stack([-a2, -a6, a0, -a4], 1)], 1)
    qq = np.einsum("nik,njk->nij", q, q)
    off = qq.copy()
    off[:, np.arange(4), np.arange(4)] = 0
    orthogonal = invertible & ~np.any(off != 0, axis=(1, 2))

    # alpha' = num / den with the scale folded back in: alpha'_k = scale * N_k / lambda.
    one = np.ones_like(a3)
    safe_lam = np.where(lam == 0, one, lam)
    safe_rot = np.where(rot == 0, one, rot)
    safe_a3 = np.where(a3 == 0, one, a3)
    n0 = a0 * a6**2 + (a2**2 - a4**2) * a6 + 2 * a0 * a2 * a4 + a0**3
    n2 = a2 * a4**2 + (a0**2 - a6**2) * a4 + 2 * a0 * a2 * a6 + a2**3
    n4 = a4 * a2**2 + (a0**2 - a6**2) * a2 - 2 * a0 * a4 * a6 + a4**3
    n6 = a6 * a0**2 + (a2**2 - a4**2) * a0 - 2 * a2 * a4 * a6 + a6**3
    p = scale * np.stack([n0, a1, n2, one, n4, a5, n6], 1)
    den = np.stack([safe_lam, safe_rot, safe_lam, safe_a3, safe_lam, safe_rot, safe_lam], 1)
    if mode == "raw":
        low = _membership(p, den, space_num, space_den).all(axis=1)
    elif mode == "scaled":
        low = _dyadic_membership(p, den, space_num, space_den, True)
    else:
        raise ValueError(f"unknown feasibility mode {mode!r}")
    return {"invertible": invertible, "orthogonal": orthogonal, "low_inverse": invertible & low}


# ---------------------------------------------------------------------------
# Configuration and block evaluation


def default_workers() -> int:
    env = os.environ.get("FWDCT_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"FWDCT_WORKERS must be an integer, got {env!r}") from None
    return 1


@dataclass(frozen=True)
class SearchConfig:
    """Search settings.

    ``orthogonal_exempt`` admits candidates whose Gram matrix is diagonal even
    when alpha' leaves the space: their inverse is the transpose of the
    orthogonalized matrix, so no extra multipliers are needed.
    """

    space: tuple[Fraction, ...] = LOW_COMPLEXITY_VALUES
    tau: float = DEFAULT_TAU
    workers: int = field(default_factory=default_workers)
    feasibility: str = "raw"
    orthogonal_exempt: bool = True
    rho: float = DEFAULT_RHO
    block_size: int = BLOCK_SIZE

    def __post_init__(self):
        object.__setattr__(self, "space", normalize_space(self.space))
        if self.feasibility not in FEASIBILITY_MODES:
            raise ValueError(f"feasibility must be one of {FEASIBILITY_MODES}")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if self.workers < 1 or self.block_size < 1:
            raise ValueError("workers and block_size must be positive")

    def to_json(self) -> dict:
        d = asdict(self)
        d["space"] = [format_rational(v) for v in self.space]
        return d


@dataclass
class _Block:
    lo: int
    counts: dict
    index: np.ndarray
    objectives: np.ndarray
    orthogonal: np.ndarray
    low_inverse: np.ndarray
    deviation: np.ndarray


def _integer_space(space: Sequence[Fraction]):
    scale = math.lcm(*(v.denominator for v in space))
    ints = [int(v * scale) for v in space]
    return scale, ints


def _evaluate_block(args) -> _Block:
    lo, hi, space, mode, exempt, rho = args
    n = len(space)
    scale, ints = _integer_space(space)
    digits = _digits(lo, hi, n)
    big = max(abs(v) for v in ints) > 1000
    table = np.array(ints, dtype=object if big else np.int64)
    a_int = table[digits]
    space_num = [v.numerator for v in space]
    space_den = [v.denominator for v in space]
    flags = screen(a_int, scale, space_num, space_den, mode)
    feasible = flags["low_inverse"] | (exempt & flags["orthogonal"])
    sel = np.flatnonzero(feasible)
    values = np.array([float(v) for v in space])
    alphas = values[digits[sel]]
    if len(sel):
        objs = objective_batch(alphas, MarkovModel(rho))
        adds, shifts = operation_counts_batch(alphas)
        t = fw_map_batch(alphas)
        g = t @ np.swapaxes(t, 1, 2)
        dev = 1 - np.sum(np.diagonal(g, axis1=1, axis2=2) ** 2, 1) / np.sum(g * g, (1, 2))
        objectives = np.column_stack([objs, adds, shifts])
    else:
        objectives = np.zeros((0, 6))
        dev = np.zeros(0)
    counts = {
        "total": hi - lo,
        "invertible": int(flags["invertible"].sum()),
        "low_complexity_inverse": int(flags["low_inverse"].sum()),
        "orthogonalizable": int(flags["orthogonal"].sum()),
        "feasible": int(feasible.sum()),
    }
    return _Block(lo, counts, lo + sel, objectives, flags["orthogonal"][sel],
                  flags["low_inverse"][sel], dev)


# ---------------------------------------------------------------------------
# Pareto filtering


def dominates(d: Sequence[float], c: Sequence[float], tau: float = DEFAULT_TAU) -> bool:
    """d dominates c: no worse anywhere, strictly better somewhere.

    Real objectives (the first four) within ``tau`` count as equal; the two
    operation counts compare exactly.
    """
    d = np.asarray(d, dtype=float)
    c = np.asarray(c, dtype=float)
    slack = np.array([tau] * 4 + [0, 0])
    return bool(np.all(d <= c + slack) and np.any(d < c - slack))


def _dominated_by_any(pool: np.ndarray, o: np.ndarray, slack: np.ndarray) -> bool:
    return bool(np.any(np.all(pool <= o + slack, axis=1) & np.any(pool < o - slack, axis=1)))


def pareto_front(objectives: np.ndarray, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Positions of the non-dominated rows of ``objectives`` (n, 6), ascending.

    Sweep in lexicographic order keeping an archive, then confirm every
    archive member against the whole pool (tolerant dominance is not
    transitive, so the sweep alone can keep false survivors).
    """
    objs = np.asarray(objectives, dtype=float)
    if objs.size == 0:
        return np.zeros(0, dtype=int)
    slack = np.array([tau] * 4 + [0, 0])
    order = np.lexsort(objs.T[::-1])
    archive: list[int] = []
    for i in order:
        if archive and _dominated_by_any(objs[archive], objs[i], slack):
            continue
        archive.append(int(i))
    keep = [i for i in archive if not _dominated_by_any(objs, objs[i], slack)]
    return np.array(sorted(keep), dtype=int)


def pareto_front_quadratic(objectives: np.ndarray, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Plain all-pairs version of :func:`pareto_front`, for checking."""
    objs = np.asarray(objectives, dtype=float)
    return np.array([i for i in range(len(objs))
                     if not any(dominates(objs[j], objs[i], tau) for j in range(len(objs)))],
                    dtype=int)


# ---------------------------------------------------------------------------
# Equivalence under positive diagonal scaling


def diagonal_multiple(ta, tb) -> list[Fraction] | None:
    """Positive d with ``ta == diag(d) @ tb`` exactly, or None."""
    ra, rb = ta.entries(), tb.entries()
    d = []
    for row_a, row_b in zip(ra, rb):
        ratio = None
        for x, y in zip(row_a, row_b):
            if y == 0:
                if x != 0:
                    return None
                continue
            r = x / y
            if ratio is None:
                ratio = r
            elif r != ratio:
                return None
        if ratio is None or ratio <= 0:
            return None
        d.append(ratio)
    return d


def equivalence_classes(alphas: Sequence) -> list[list[int]]:
    """Partition positions of ``alphas`` by T_a = D T_b with D positive diagonal.

    Classes are listed by their smallest position, members ascending.
    """
    mats = [fw_map(a) for a in alphas]
    classes: list[list[int]] = []
    for i, m in enumerate(mats):
        for cls in classes:
            if diagonal_multiple(m, mats[cls[0]]) is not None:
                cls.append(i)
                break
        else:
            classes.append([i])
    return classes


# ---------------------------------------------------------------------------
# Results


@dataclass(frozen=True)
class Candidate:
    alpha: ParamVector
    objectives: ObjectiveVector
    feasible: bool
    orthogonalizable: bool
    index: int = -1
    low_complexity_inverse: bool = False
    gram_deviation: float = 0.0


@dataclass
class EfficientSet:
    members: list[Candidate]
    equivalence_classes: list[list[int]]

    @property
    def alphas(self) -> list[ParamVector]:
        return [m.alpha for m in self.members]

    def class_of(self, pos: int) -> int:
        for cid, cls in enumerate(self.equivalence_classes):
            if pos in cls:
                return cid
        raise IndexError(pos)

    def representatives(self) -> list[Candidate]:
        """One member per class: a registered transform if any, else the fewest non-integers."""
        known = {t.parameters for t in KNOWN_TRANSFORMS.values()}
        reps = []
        for cls in self.equivalence_classes:
            def key(pos):
                a = self.members[pos].alpha
                return (a not in known, sum(v.denominator != 1 for v in a),
                        self.members[pos].index)
            reps.append(self.members[min(cls, key=key)])
        return reps

    def to_rows(self) -> list[dict]:
        rows = []
        for pos, m in enumerate(self.members):
            row = {f"alpha{k}": format_rational(v) for k, v in enumerate(m.alpha)}
            o = m.objectives
            row.update(epsilon=o.epsilon, mse=o.mse, cg=o.cg, eta=o.eta, adds=o.adds,
                       shifts=o.shifts, orthogonalizable=m.orthogonalizable,
                       class_id=self.class_of(pos))
            rows.append(row)
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = [f"alpha{k}" for k in range(7)] + [
            "epsilon", "mse", "cg", "eta", "adds", "shifts", "orthogonalizable", "class_id"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for row in self.to_rows():
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()


@dataclass
class SearchResult:
    config: SearchConfig
    stats: dict
    efficient: EfficientSet
    feasible_index: np.ndarray
    feasible_objectives: np.ndarray
    feasible_orthogonal: np.ndarray

    def feasible_alphas(self) -> Iterator[ParamVector]:
        for i in self.feasible_index:
            yield vector_at(int(i), self.config.space)

    def to_json(self) -> dict:
        reps = {id(c) for c in self.efficient.representatives()}
        members = []
        for pos, (row, m) in enumerate(zip(self.efficient.to_rows(), self.efficient.members)):
            members.append({
                "alpha": [format_rational(v) for v in m.alpha],
                "index": m.index,
                "epsilon": row["epsilon"], "mse": row["mse"], "cg": row["cg"], "eta": row["eta"],
                "adds": row["adds"], "shifts": row["shifts"],
                "orthogonalizable": m.orthogonalizable,
                "low_complexity_inverse": m.low_complexity_inverse,
                "gram_deviation": m.gram_deviation,
                "class_id": row["class_id"],
                "representative": id(m) in reps,
            })
        return {"config": self.config.to_json(), "stats": self.stats, "efficient": members,
                "classes": self.efficient.equivalence_classes}


def _blocks(total: int, size: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]


def _candidate(idx, obj, orth, low, dev, space) -> Candidate:
    ov = ObjectiveVector(float(obj[0]), float(obj[1]), float(obj[2]), float(obj[3]),
                         int(obj[4]), int(obj[5]))
    return Candidate(vector_at(int(idx), space), ov, True, bool(orth), int(idx), bool(low),
                     float(dev))


def pareto_filter(candidates: Sequence[Candidate], tau: float = DEFAULT_TAU) -> EfficientSet:
    """Efficient subset of feasible candidates, ordered by objectives then index."""
    cands = list(candidates)
    if not cands:
        return EfficientSet([], [])
    objs = np.array([c.objectives.as_tuple() for c in cands], dtype=float)
    keep = pareto_front(objs, tau)
    members = sorted((cands[i] for i in keep),
                     key=lambda c: (c.objectives.as_tuple(), c.index))
    return EfficientSet(members, equivalence_classes([m.alpha for m in members]))


def run_search(config: SearchConfig | None = None, progress=None) -> SearchResult:
    """Screen, score and filter the whole space. Output does not depend on ``workers``."""
    config = config or SearchConfig()
    total = space_size(config.space)
    tasks = [(lo, hi, config.space, config.feasibility, config.orthogonal_exempt, config.rho)
             for lo, hi in _blocks(total, config.block_size)]
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            blocks = list(pool.map(_evaluate_block, tasks))
    else:
        blocks = []
        for t in tasks:
            blocks.append(_evaluate_block(t))
            if progress:
                progress(t[1], total)
    stats = {k: sum(b.counts[k] for b in blocks) for k in blocks[0].counts}
    index = np.concatenate([b.index for b in blocks])
    objs = np.concatenate([b.objectives for b in blocks])
    orth = np.concatenate([b.orthogonal for b in blocks])
    low = np.concatenate([b.low_inverse for b in blocks])
    dev = np.concatenate([b.deviation for b in blocks])

    keep = pareto_front(objs, config.tau)
    cands = [_candidate(index[i], objs[i], orth[i], low[i], dev[i], config.space) for i in keep]
    efficient = pareto_filter(cands, config.tau)
    stats["efficient"] = len(efficient.members)
    stats["classes"] = len(efficient.equivalence_classes)
    return SearchResult(config, stats, efficient, index, objs, orth)


def write_report(result: SearchResult, json_path=None, csv_path=None) -> None:
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(result.to_json(), fh, indent=2)
            fh.write("\n")
    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(result.efficient.to_csv())
