import math
from fractions import Fraction

import numpy as np
import pytest

from frameforge.core import Frame, extreme_eigenvalues, frame_bounds, rank_one_sum
from frameforge.errors import InvalidInput
from frameforge.scalable import (
    PIPELINE_EPSILON_LIMIT,
    SamplerConfig,
    ScalableFrame,
    build_block_decomposition,
    cross_term_envelope,
    epsilon_one,
    epsilon_prime,
    find_low_energy_window,
    g_of_epsilon,
    interleaved_sequences,
    orthogonal_patch,
    quantize_scaling,
    sample_scalable,
)
from frameforge.synth import block_groups, rational_scalable, random_onb


def test_constants():
    assert epsilon_prime(0.001) == pytest.approx(6e-3 + 4 * math.sqrt(1e-3) * math.sqrt(1.002))
    assert epsilon_one(0.01) == pytest.approx(0.03 + 2 * math.sqrt(0.02) * math.sqrt(1.01))
    assert g_of_epsilon(0.0) == pytest.approx(0.0, abs=1e-12)


def test_certify_rationals_and_epsilon():
    f = Frame("real", 2, np.vstack([np.eye(2), np.eye(2)]))
    sf = ScalableFrame.certify(f, [0.5, 0.5, 0.5, 0.5])
    assert sf.a_sq == (Fraction(1, 2),) * 4 and sf.epsilon == 0.0
    with pytest.raises(InvalidInput):
        ScalableFrame.certify(Frame("real", 1, [[2.0]]), [0.25])
    with pytest.raises(InvalidInput):
        ScalableFrame.certify(f, [Fraction(1, 11)] * 4, denominator_cap=10)
    # floats are replaced by nearby rationals and the miss is measured
    approx = ScalableFrame.certify(f, [0.453] * 4, denominator_cap=10)
    assert approx.epsilon > 0 and max(q.denominator for q in approx.a_sq) <= 10


def test_quantize_identity():
    rng = np.random.default_rng(0)
    for _ in range(5):
        base, a_sq = rational_scalable(rng)
        q = quantize_scaling(ScalableFrame.certify(base, a_sq), 2)
        owner = np.repeat(np.arange(len(base)), q.multiplicities)
        sub = frame_bounds(Frame("real", base.dim, base.vectors[owner] / 2))
        assert sub.as_pair() == pytest.approx(q.bounds.as_pair(), abs=1e-10)
        assert q.bounds.upper <= 1.5 + 1e-8


def test_quantize_rejects_inexact():
    f = Frame("real", 1, [[0.9]])
    with pytest.raises(InvalidInput):
        quantize_scaling(ScalableFrame.certify(f, [1]), 1)


def test_patch_restores_lower_bound():
    # family is tight on the first axis only; patch lives on the second
    f = Frame("real", 2, [[1.0, 0.0]])
    res = orthogonal_patch(f, np.array([[0.0], [1.0]]), 0.01)
    lo, hi = extreme_eigenvalues(rank_one_sum(np.vstack([f.vectors, res.patch.vectors])))
    assert lo >= 1 - res.epsilon1 and hi <= 1 + res.epsilon1
    assert np.allclose(res.patch.vectors[:, 0], 0)


def test_low_energy_window():
    subspaces = [np.eye(16)[:, [i]] for i in range(16)]
    x = np.ones(16)
    n = find_low_energy_window(subspaces, x, 0.5)
    assert np.abs(x[n]) <= 0.5 * np.linalg.norm(x)
    with pytest.raises(InvalidInput):
        find_low_energy_window(subspaces[:3], x, 0.5)


def test_cross_term_envelope_brackets_energy():
    rng = np.random.default_rng(1)
    f = Frame("real", 3, rng.standard_normal((6, 3)))
    h1 = np.eye(3)[:, :2]
    env = cross_term_envelope(f, h1)
    for _ in range(20):
        x = rng.standard_normal(3)
        e = float(np.sum((f.vectors @ x) ** 2))
        p1, p0 = np.linalg.norm(x[:2]), abs(x[2])
        assert env.lower(p1, p0) - 1e-9 <= e <= env.upper(p1, p0) + 1e-9


def test_interleaved_sequences():
    plan = interleaved_sequences(25)
    assert plan.blocks == [(1, 9), (5, 19), (15, 29)]
    with pytest.raises(InvalidInput):
        interleaved_sequences(10, gap=3)


def test_block_decomposition_covers_frame():
    base, a_sq = block_groups(np.random.default_rng(2), [3, 2])
    dec = build_block_decomposition(ScalableFrame.certify(base, a_sq))
    assert sum(dec.dims()) == 5
    assert all(r.holds for r in dec.records)


def test_sample_onb_returns_each_index_once():
    sf = ScalableFrame.certify(Frame("real", 3, random_onb(np.random.default_rng(3), 3)), [1, 1, 1])
    res = sample_scalable(sf)
    assert res.indices.tolist() == [0, 1, 2] and res.multiplicities.tolist() == [1, 1, 1]
    assert res.bounds.as_pair() == pytest.approx([1, 1])
    js = res.to_json()
    assert set(js) >= {"indices", "multiplicities", "bounds", "epsilon", "certificates"}


def test_sample_with_forced_partition():
    base, a_sq = block_groups(np.random.default_rng(4), [2, 2])
    res = sample_scalable(ScalableFrame.certify(base, a_sq), SamplerConfig(min_duplication=300))
    assert all(r.holds for r in res.records)
    assert res.envelope["blocks"][0]["parts"] > 1
    T = rank_one_sum(base.vectors[res.indices], res.multiplicities.astype(float))
    assert extreme_eigenvalues(T)[0] > 0


def test_sample_rejects_large_epsilon():
    f = Frame("real", 1, [[0.9]])
    sf = ScalableFrame.certify(f, [1])
    assert sf.epsilon > PIPELINE_EPSILON_LIMIT
    with pytest.raises(InvalidInput):
        sample_scalable(sf)
