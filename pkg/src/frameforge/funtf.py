"""Hadamard-based unit-norm tight frames whose bases all have small lower Riesz bound."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .errors import InvalidInput, ResourceLimit

AUDIT_CAP = 3


def sylvester_hadamard(n):
    """2^n x 2^n +-1 matrix built by repeated Kronecker products with [[1,1],[1,-1]]."""
    if n < 1:
        raise InvalidInput("n must be at least 1")
    H1 = np.array([[1, 1], [1, -1]], dtype=np.int64)
    H = H1
    for _ in range(n - 1):
        H = np.kron(H, H1)
    return H


def column_scales_squared(n):
    """Exact squared column scalings (s1^2, s2^2) of the two stacked blocks."""
    half = 2 ** (n - 1)
    head = half - 1
    s1 = [Fraction(1, half)] * head + [Fraction(1, half * (half + 1))] * (2 ** n - head)
    s2 = [Fraction(0)] * head + [Fraction(1, half + 1)] * (2 ** n - head)
    return s1, s2


@dataclass(frozen=True, eq=False)
class HadamardFuntf:
    n: int
    matrix: np.ndarray

    @property
    def size(self):
        return self.matrix.shape[0]


def exact_gram_checks(n):
    """Construction invariants in exact integer/rational arithmetic.

    Column orthogonality reduces to H^T H = 2^n I over the integers, squared
    row and column norms are sums of rational squared scalings, and the
    aligned pair (rows j and j + 2^{n-1} of the second block) has a rational
    inner product because that block has a single scaling on its support.
    """
    H = sylvester_hadamard(n)
    s1, s2 = column_scales_squared(n)
    size = 2 ** n
    half = 2 ** (n - 1)
    head = half - 1
    cols_orthogonal = bool(np.all(H.T @ H == size * np.eye(size, dtype=np.int64)))
    row_norms = {sum(s1), sum(s2)}
    col_norms = {size * (a + b) for a, b in zip(s1, s2)}
    j, k = 0, half
    tail = int(np.sum(H[j, head:] * H[k, head:]))
    aligned = abs(Fraction(tail, half + 1))
    return {"row_norms_sq": row_norms, "columns_orthogonal": cols_orthogonal,
            "column_norms_sq": col_norms, "aligned_inner": aligned,
            "aligned_expected": Fraction(half - 1, half + 1)}


def build_funtf(n):
    """Stack H_n diag(s1) over H_n diag(s2); rows unit norm, frame bound 2."""
    if n < 2:
        raise InvalidInput("n must be at least 2")
    H = sylvester_hadamard(n).astype(float)
    s1, s2 = column_scales_squared(n)
    top = H * np.sqrt(np.array([float(v) for v in s1]))
    bottom = H * np.sqrt(np.array([float(v) for v in s2]))
    F = np.vstack([top, bottom])
    if not np.allclose(np.sum(F ** 2, axis=1), 1.0, atol=1e-12):
        raise AssertionError("row norms differ from 1")
    if not np.allclose(F.T @ F, 2 * np.eye(2 ** n), atol=1e-12):
        raise AssertionError("columns are not orthogonal with squared norm 2")
    return HadamardFuntf(n, F)


def copy_funtf(funtf, k):
    return HadamardFuntf(funtf.n, np.vstack([funtf.matrix] * k))


def case_bound(n):
    return 2.0 / (2 ** (n - 1) + 1)


def pair_bound(n):
    return 1.0 - (2 ** (n - 1) - 1) / (2 ** (n - 1) + 1)


@dataclass(frozen=True)
class RieszAudit:
    subset: tuple
    case: int
    spanning: bool
    bound: float


def _lower_riesz(rows):
    sv = np.linalg.svd(rows, compute_uv=False)
    return float(sv[-1] ** 2)


def _classify(n, idx):
    head = 2 ** (n - 1) - 1
    in_first = int(np.sum(np.asarray(idx) < 2 ** n))
    if in_first > head:
        return 1
    if in_first < head:
        return 2
    return 3


def subset_riesz_audit(funtf, subset, tolerance=1e-10):
    """Classify a 2^n-subset by how many rows it takes from the first block and
    compute sigma_min^2 of its rows. The case bound is asserted."""
    n = funtf.n
    idx = tuple(int(i) for i in subset)
    if len(idx) != 2 ** n or len(set(idx)) != len(idx):
        raise InvalidInput(f"subset must contain {2 ** n} distinct rows")
    if min(idx) < 0 or max(idx) >= funtf.size:
        raise InvalidInput("row index out of range")
    base = [i % (2 ** (n + 1)) for i in idx]
    case = _classify(n, base)
    rows = funtf.matrix[list(idx)]
    bound = _lower_riesz(rows)
    spanning = bound > tolerance
    if case == 1 and bound > case_bound(n) + tolerance:
        raise AssertionError(f"case 1 bound {bound} exceeds {case_bound(n)}")
    if case == 2 and spanning:
        raise AssertionError("case 2 subset unexpectedly spans")
    if case == 3 and spanning and bound > pair_bound(n) + tolerance:
        raise AssertionError(f"case 3 bound {bound} exceeds {pair_bound(n)}")
    return RieszAudit(idx, case, spanning, bound)


def exhaustive_basis_audit(funtf, cap=AUDIT_CAP, chunk=4096, tolerance=1e-10):
    """Maximum lower Riesz bound over all spanning 2^n-subsets of rows."""
    n = funtf.n
    if n > cap:
        raise ResourceLimit(f"n={n} exceeds the exhaustive cap {cap} "
                            f"({comb(funtf.size, 2 ** n)} subsets)")
    F = funtf.matrix
    best, best_subset, rows_out = 0.0, None, []
    it = itertools.combinations(range(funtf.size), 2 ** n)
    while True:
        batch = list(itertools.islice(it, chunk))
        if not batch:
            break
        arr = np.array(batch)
        sv = np.linalg.svd(F[arr], compute_uv=False)
        vals = sv[:, -1] ** 2
        vals[vals <= tolerance] = 0.0
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, best_subset = float(vals[k]), tuple(int(i) for i in arr[k])
        for s, v in zip(arr, vals):
            rows_out.append((tuple(int(i) for i in s), _classify(n, [i % (2 ** (n + 1)) for i in s]), float(v)))
    envelope = max(case_bound(n), pair_bound(n))
    if best > envelope + tolerance:
        raise AssertionError(f"audit maximum {best} exceeds {envelope}")
    return best, best_subset, rows_out
