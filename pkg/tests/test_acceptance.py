"""Acceptance gate: nine criteria at their stated tolerances, one PASS/FAIL line each."""

import math
import time
from fractions import Fraction
from itertools import product

import numpy as np

from frameforge.continuous import (
    discretize_parseval,
    exponential_on_set,
    gabor_stft,
    quadrature_frame_operator,
    spanning_sampling_max_norm,
    unbounded_counterexample,
)
from frameforge.core import Frame, extreme_eigenvalues, frame_bounds, rank_one_sum
from frameforge.errors import PartitionFailure
from frameforge.funtf import build_funtf, exact_gram_checks, exhaustive_basis_audit
from frameforge.partition import (
    B_STAR,
    RATIO_BOUND,
    complement_duality_check,
    exact_two_partition,
    next_bound,
    reduce_tight_frame,
)
from frameforge.scalable import (
    ScalableFrame,
    epsilon_prime,
    epsilon_two,
    quantize_scaling,
    sample_scalable,
)
from frameforge.synth import (
    block_groups,
    random_parseval,
    rational_scalable,
    small_norm_parseval,
    tight_onb_union,
)


def test_1_bound_recursion(report):
    t = time.perf_counter()
    b1 = next_bound(200.0)
    elapsed = time.perf_counter() - t
    ok = abs(b1 - 79.0) <= 1e-12 and elapsed < 1e-3
    report(1, "bound recursion 200 -> 79", ok, f"B_1={b1!r} in {elapsed * 1e6:.1f} us")
    assert ok


def _brute_force_best(y):
    """Smallest max Bessel bound over all two-way splits (independent oracle)."""
    best = np.inf
    for bits in product((0, 1), repeat=len(y)):
        side = np.array(bits, dtype=bool)
        hi = max(extreme_eigenvalues(rank_one_sum(y[side]))[1] if side.any() else 0.0,
                 extreme_eigenvalues(rank_one_sum(y[~side]))[1] if (~side).any() else 0.0)
        best = min(best, hi)
    return best


def test_2_mss_instances(report):
    rng = np.random.default_rng(2)
    bound = (1 / math.sqrt(2) + 0.5) ** 2
    t = time.perf_counter()
    worst, oracle_checked = 0.0, 0
    for _ in range(100):
        f = small_norm_parseval(rng)
        res = exact_two_partition(f)
        worst = max(worst, res.achieved)
        assert res.achieved <= bound + 1e-9
        if len(f) <= 12:
            assert abs(_brute_force_best(f.effective_vectors()) - res.achieved) <= 1e-9
            oracle_checked += 1
    elapsed = time.perf_counter() - t
    ok = worst <= bound + 1e-9 and elapsed < 60
    report(2, "exact two-partition bound", ok,
           f"worst={worst:.6f} <= {bound:.6f}, {oracle_checked} brute-forced, {elapsed:.1f}s")
    assert ok


def test_3_reduce_tight_frames(report):
    rng = np.random.default_rng(3)
    t = time.perf_counter()
    certified, failures, worst_ratio = 0, [], 0.0
    for k in range(50):
        d = int(rng.integers(1, 5))
        B = float(rng.uniform(79, 2000))
        f = tight_onb_union(rng, d, B)
        try:
            res = reduce_tight_frame(f)
        except PartitionFailure as exc:
            failures.append(f"frame {k}: {exc}")
            continue
        for part in res.parts:
            b = frame_bounds(f.subframe(part))
            assert b.lower >= 1 - 1e-8
            assert b.upper <= B_STAR
            assert b.upper / b.lower <= RATIO_BOUND
            worst_ratio = max(worst_ratio, b.upper / b.lower)
        certified += 1
    elapsed = time.perf_counter() - t
    for line in failures:
        print("certificate failure:", line)
    ok = certified > 0 and elapsed < 300
    report(3, "tight-frame reduction", ok,
           f"{certified}/50 certified, {len(failures)} reported failures, "
           f"worst ratio {worst_ratio:.3f} <= {RATIO_BOUND:.3f}, {elapsed:.1f}s")
    assert ok


def test_4_complement_duality(report):
    rng = np.random.default_rng(4)
    agree, max_identity_gap = 0, 0.0
    for k in range(100):
        d = int(rng.integers(1, 5))
        M = int(rng.integers(d + 1, 4 * d + 3))
        f = random_parseval(rng, d, M, field="complex" if k % 2 else "real")
        subset = np.flatnonzero(rng.random(M) < 0.5)
        s_lo, s_hi = (extreme_eigenvalues(rank_one_sum(f.vectors[subset])) if len(subset) else (0.0, 0.0))
        # pick delta near the informative threshold so all outcomes occur
        delta = float(np.clip(min(s_lo, 1 - s_hi) + rng.uniform(-0.05, 0.05), 1e-3, 0.5))
        rep = complement_duality_check(f, subset, delta)
        c_lo, c_hi = rep.complement_bounds
        max_identity_gap = max(max_identity_gap, abs(c_lo - (1 - rep.subset_bounds[1])),
                               abs(c_hi - (1 - rep.subset_bounds[0])))
        agree += rep.agree
    ok = agree == 100 and max_identity_gap <= 1e-8
    report(4, "subset/complement equivalence", ok,
           f"{agree}/100 agree, complement identity gap {max_identity_gap:.1e}")
    assert ok


def test_5_quantize_scaling(report):
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        base, a_sq = rational_scalable(rng)
        sf = ScalableFrame.certify(base, a_sq)
        N = int(rng.integers(1, 4))
        q = quantize_scaling(sf, N)
        m = q.multiplicities
        assert m.dtype.kind == "i" and np.all(m >= 0)
        scaled = frame_bounds(Frame(base.field, base.dim, base.vectors, m / float(N * N)))
        owner = np.repeat(np.arange(len(m)), m)
        sub = frame_bounds(Frame(base.field, base.dim, base.vectors[owner] / N))
        worst = max(worst, abs(scaled.lower - sub.lower), abs(scaled.upper - sub.upper))
    ok = worst <= 1e-10
    report(5, "quantized scalars sqrt(m)/N", ok, f"max bound mismatch {worst:.1e}")
    assert ok


REQUIRED_RECORDS = {"Een", "Twee-lower", "Twee-upper", "Drie", "Vier",
                    "SewePlus", "Agt", "Nege-lower", "Nege-upper", "Tien", "TienPlus"}


def test_6_sampler_certificates(report):
    rng = np.random.default_rng(6)
    worst_slack, runs = np.inf, 0
    for _ in range(10):
        groups = int(rng.integers(1, 5))
        sizes = [int(s) for s in rng.integers(1, 11, size=groups)]
        base, a_sq = block_groups(rng, sizes)
        sf = ScalableFrame.certify(base, a_sq)
        assert sf.base.dim <= 40 and sf.epsilon <= 0.003
        res = sample_scalable(sf)
        names = {r.name for r in res.records}
        assert REQUIRED_RECORDS <= names, REQUIRED_RECORDS - names
        worst_slack = min(worst_slack, min(r.slack for r in res.records))
        ep = epsilon_prime(sf.epsilon)
        e2 = epsilon_two(ep, B_STAR)
        A, B = 1.0, B_STAR
        lower_env = A - A * ep - e2 ** 2 - e2 - 4 * B * (1 + e2) * e2 - 1e-6
        upper_env = 2 * B * (1 + e2) + 1e-6
        T = rank_one_sum(base.vectors[res.indices], res.multiplicities.astype(float))
        lo, hi = extreme_eigenvalues(T)
        assert lo >= lower_env and hi <= upper_env and lo > 0
        runs += 1
    ok = runs == 10 and worst_slack >= 0
    report(6, "sampler per-inequality certificates", ok, f"{runs} frames, min slack {worst_slack:.2e}")
    assert ok


def test_7_discretization(report):
    t = time.perf_counter()
    model = exponential_on_set([[0.0, 0.5]], degree=3)
    Q = quadrature_frame_operator(model, resolution=4096, tolerance=1e-7)
    qlo, qhi = extreme_eigenvalues(Q.entries)
    defect = max(1 - qlo, qhi - 1)
    eps = 0.5
    res = discretize_parseval(model, eps, net_epsilon=8.0, resolution=4096, quad_tolerance=1e-7)
    vecs = model.evaluate(res.points)
    lo, hi = extreme_eigenvalues(rank_one_sum(vecs, res.multiplicities.astype(float)))
    t_exp = time.perf_counter() - t
    t = time.perf_counter()
    gabor = gabor_stft()
    G = quadrature_frame_operator(gabor, resolution=16, tolerance=1e-9)
    glo, ghi = extreme_eigenvalues(G.entries)
    g2 = gabor.notes["window_norm_sq"]
    t_gab = time.perf_counter() - t
    ok = (defect <= 1e-3 and lo > 0 and hi <= 2 * (1 + eps) * qhi + 1e-6
          and abs(glo - g2) <= 0.01 * g2 and abs(ghi - g2) <= 0.01 * g2
          and t_exp < 300 and t_gab < 300)
    report(7, "continuous-frame discretization", ok,
           f"defect {defect:.2e}, samples {int(res.multiplicities.sum())} with bounds ({lo:.4f}, {hi:.4f}) "
           f"<= {2 * (1 + eps) * qhi:.4f}; gabor ({glo:.6f}, {ghi:.6f}) vs {g2:.6f}; "
           f"{t_exp:.1f}s / {t_gab:.1f}s")
    assert ok


def test_8_funtf_counterexample(report):
    t = time.perf_counter()
    best, subset, rows = exhaustive_basis_audit(build_funtf(3))
    checks = {n: exact_gram_checks(n) for n in range(2, 7)}
    elapsed = time.perf_counter() - t
    exact_ok = all(c["columns_orthogonal"] and c["row_norms_sq"] == {1} and c["column_norms_sq"] == {2}
                   and c["aligned_inner"] == c["aligned_expected"] for c in checks.values())
    ok = best <= 0.4 + 1e-10 and checks[3]["aligned_inner"] == Fraction(3, 5) and exact_ok and elapsed < 120
    report(8, "Hadamard FUNTF basis audit", ok,
           f"max spanning bound {best:.15f} over {len(rows)} subsets, aligned {checks[3]['aligned_inner']}, "
           f"{elapsed:.1f}s")
    assert ok


def test_9_unbounded_counterexample(report):
    worst_parseval, worst_norm_gap = 0.0, np.inf
    for d in range(1, 101):
        m = unbounded_counterexample(d)
        lo, hi = extreme_eigenvalues(quadrature_frame_operator(m).entries)
        worst_parseval = max(worst_parseval, abs(lo - 1), abs(hi - 1))
        worst_norm_gap = min(worst_norm_gap, spanning_sampling_max_norm(m) - (math.sqrt(d) - 1e-9))
    ok = worst_parseval <= 1e-12 and worst_norm_gap >= 0
    report(9, "unbounded model obstruction", ok,
           f"Parseval defect {worst_parseval:.1e}, spanning max norm >= sqrt(d) at every d <= 100")
    assert ok
