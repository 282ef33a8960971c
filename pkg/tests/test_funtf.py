from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from frameforge.errors import InvalidInput, ResourceLimit
from frameforge.funtf import (
    build_funtf,
    case_bound,
    copy_funtf,
    exact_gram_checks,
    exhaustive_basis_audit,
    subset_riesz_audit,
    sylvester_hadamard,
)


@pytest.mark.parametrize("n", range(2, 7))
def test_exact_invariants(n):
    c = exact_gram_checks(n)
    assert c["columns_orthogonal"]
    assert c["row_norms_sq"] == {Fraction(1)}
    assert c["column_norms_sq"] == {Fraction(2)}
    assert c["aligned_inner"] == Fraction(2 ** (n - 1) - 1, 2 ** (n - 1) + 1)


def test_float_construction_matches():
    F = build_funtf(4).matrix
    assert np.allclose(F @ F.T.diagonal() * 0 + np.sum(F ** 2, axis=1), 1.0)
    assert np.allclose(F.T @ F, 2 * np.eye(16))
    H = sylvester_hadamard(3)
    assert np.array_equal(H @ H.T, 8 * np.eye(8, dtype=np.int64))


def test_audit_n2_by_direct_enumeration():
    f = build_funtf(2)
    best, subset, rows = exhaustive_basis_audit(f)
    direct = max(np.linalg.svd(f.matrix[list(s)], compute_uv=False)[-1] ** 2
                 for s in combinations(range(8), 4))
    assert best == pytest.approx(direct, abs=1e-12)
    assert best == pytest.approx(2 / 3)
    assert len(rows) == 70


def test_audit_n3_bound():
    best, subset, rows = exhaustive_basis_audit(build_funtf(3))
    assert best <= 0.4 + 1e-10
    assert case_bound(3) == pytest.approx(0.4)
    assert {case for _, case, _ in rows} <= {1, 2, 3}


def test_subset_cases():
    f = build_funtf(3)
    first = subset_riesz_audit(f, range(8))
    assert first.case == 1 and first.bound <= 0.4 + 1e-10
    second = subset_riesz_audit(f, range(8, 16))
    assert second.case == 2 and not second.spanning
    with pytest.raises(InvalidInput):
        subset_riesz_audit(f, range(7))


def test_copies_and_caps():
    f = build_funtf(3)
    g = copy_funtf(f, 2)
    assert g.size == 32
    audit = subset_riesz_audit(g, list(range(4)) + list(range(16, 20)))
    assert audit.case in (1, 2, 3)
    with pytest.raises(ResourceLimit):
        exhaustive_basis_audit(build_funtf(4))
    with pytest.raises(InvalidInput):
        build_funtf(1)
