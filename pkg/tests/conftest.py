import functools
import hashlib
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from fwdct.rational import LOW_COMPLEXITY_VALUES, ParamVector

DATA = Path(__file__).parent / "data"
LENA = DATA / "lena512.pgm"
LENA_SHA256 = "3c011a8e33645ec9bf30d84b938a0ea56a53739e2fddf18e61df16842006bde1"

H = Fraction(1, 2)

# The sixteen efficient parameter vectors, numbered 1..16.
EFFICIENT = {
    1: (1, 1, 1, 1, 1, H, 0),
    2: (1, 1, 1, 1, 1, 0, 0),
    3: (1, 1, 0, 1, 0, 0, 0),
    4: (1, 2, 0, 1, 0, 1, 0),
    5: (0, 1, 1, 1, 1, 0, 0),
    6: (0, 2, 1, 1, 1, 1, 0),
    7: (0, 2, 2, 1, 1, 1, 0),
    8: (2, 2, 0, 1, 0, 1, H),
    9: (1, 2, 1, 1, 1, 1, 0),
    10: (1, 1, 0, 1, 0, H, 0),
    11: (0, 1, 1, 1, 1, H, 0),
    12: (0, 1, 2, 1, 1, H, 0),
    13: (0, 2, 1, 1, H, 1, 0),
    14: (0, 1, 1, 1, H, H, 0),
    15: (2, 1, 0, 1, 0, H, H),
    16: (1, 1, 1, 1, 0, 0, 0),
}
EFFICIENT = {k: ParamVector(v) for k, v in EFFICIENT.items()}

# Published scores: (epsilon, mse, cg, eta, adds, shifts).
SCORES = {
    1: (0.870, 0.006, 8.39, 88.70, 24, 2),
    2: (1.794, 0.010, 8.18, 87.43, 22, 0),
    3: (8.659, 0.059, 7.33, 80.90, 14, 0),
    4: (7.734, 0.056, 7.54, 81.99, 16, 2),
    5: (8.659, 0.059, 7.37, 81.18, 18, 0),
    6: (7.734, 0.055, 7.58, 82.27, 20, 2),
    7: (7.532, 0.054, 7.56, 82.70, 20, 6),
    8: (7.414, 0.053, 7.58, 83.08, 20, 10),
    16: (3.316, 0.021, 6.05, 83.08, 18, 0),
}

# Multi-member classes under positive diagonal scaling; the rest are singletons.
CLASSES = [{1, 9}, {4, 10}, {6, 11}, {8, 15}, {7, 12, 13, 14}, {2}, {3}, {5}, {16}]

TOL = {"epsilon": 1e-3, "mse": 5e-4, "cg": 1e-2, "eta": 5e-2}

# Reconstruction quality at r = 25 on Lena: (psnr, ssim).
LENA_R25 = {
    "T1": (35.176, 0.995),
    "T2": (34.138, 0.989),
    "T3": (31.838, 0.970),
    "T4": (32.299, 0.977),
    "T16": (31.602, 0.985),
    "dct": (37.886, 0.997),
}

low_complexity = st.sampled_from(LOW_COMPLEXITY_VALUES)
params = st.lists(low_complexity, min_size=7, max_size=7).map(ParamVector)


@functools.lru_cache(maxsize=None)
def raw_feasible() -> list:
    """Every vector of the low-complexity space whose alpha' stays in the space."""
    from fwdct.search import SearchConfig, run_search, vector_at

    res = run_search(SearchConfig(orthogonal_exempt=False, tau=0.0))
    return [vector_at(int(i), res.config.space) for i in res.feasible_index]


@functools.lru_cache(maxsize=None)
def orthogonalizable() -> list:
    """Every invertible vector of the low-complexity space with a diagonal Gram matrix."""
    from fwdct.search import _digits, screen

    digits = _digits(0, 7 ** 7, 7)
    ints = np.array([-4, -2, -1, 0, 1, 2, 4], dtype=np.int64)[digits]
    flags = screen(ints, 2, [-2, -1, -1, 0, 1, 1, 2], [1, 1, 2, 1, 2, 1, 1])
    values = np.array(LOW_COMPLEXITY_VALUES, dtype=object)
    return [ParamVector(values[d]) for d in digits[flags["orthogonal"]]]


@pytest.fixture(scope="session")
def lena():
    from fwdct.pgm import read_pgm

    data = LENA.read_bytes()
    assert hashlib.sha256(data).hexdigest() == LENA_SHA256
    return read_pgm(LENA)


@pytest.fixture(scope="session")
def default_search():
    from fwdct.search import SearchConfig, run_search

    return run_search(SearchConfig(workers=1))


ACCEPTANCE: dict = {}


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    """Log one acceptance criterion; the summary is printed at the end of the run."""
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
