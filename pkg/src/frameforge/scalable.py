"""Sampling scalable frames: quantized scalings and the block-decomposition sampler."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import (
    DEFAULT_TOLERANCE,
    Frame,
    FrameBounds,
    bessel_bound,
    extreme_eigenvalues,
    frame_bounds,
    hermitian_eigh,
    orthonormal_basis,
    rank_one_sum,
)
from .errors import DecompositionFailure, InvalidInput, ResourceLimit, SamplingFailure
from .partition import A_CONST, B_STAR, multi_level_select, partition_general_frame, subset_tight_frame

DENOMINATOR_CAP = 10 ** 4
PIPELINE_EPSILON_LIMIT = 1.0 / 256.0


# ---------------------------------------------------------------- constants

def epsilon_prime(eps):
    """6 eps + 4 eps^{1/2} (1 + 2 eps)^{1/2}."""
    return 6.0 * eps + 4.0 * math.sqrt(eps) * math.sqrt(1.0 + 2.0 * eps)


def epsilon_one(eps):
    """Patch constant 3 eps + 2 (2 eps)^{1/2} (1 + eps)^{1/2}."""
    return 3.0 * eps + 2.0 * math.sqrt(2.0 * eps) * math.sqrt(1.0 + eps)


def epsilon_two(ep, B=B_STAR):
    """(1+e')/(1-e') - 1 + e' + 2 (B (1+e') (1-e')^{-1} e')^{1/2}."""
    ratio = (1.0 + ep) / (1.0 - ep)
    return ratio - 1.0 + ep + 2.0 * math.sqrt(B * ratio * ep)


def lower_envelopes(ep, e2, A=A_CONST, B=B_STAR):
    """The two lower-bound forms for the sampled frame; certify against the smaller."""
    first = A - A * ep - e2 ** 2 - e2 - 4.0 * B * (1.0 + e2) * e2
    second = A - (A + 2.0) * e2 - 4.0 * B * (1.0 + e2) * math.sqrt(e2)
    return first, second


def upper_envelope(e2, B=B_STAR):
    return 2.0 * B * (1.0 + e2)


def g_of_epsilon(eps, A=A_CONST, B=B_STAR):
    """Relative loss g with bounds A(1 - g) and 2B(1 + g)."""
    ep = epsilon_prime(eps)
    e2 = epsilon_two(ep, B)
    low = min(lower_envelopes(ep, e2, A, B))
    return max(e2, 1.0 - low / A)


# ---------------------------------------------------------------- records

@dataclass
class Inequality:
    """One checked inequality lhs <= rhs; ``rhs`` already includes the tolerance."""

    name: str
    block: int
    index: int
    lhs: float
    rhs: float

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def holds(self):
        return self.slack >= 0

    def to_json(self):
        return {"block": self.block, "index": self.index, "lhs": self.lhs,
                "rhs": self.rhs, "slack": self.slack}


def _group(records):
    out = {}
    for rec in records:
        out.setdefault(rec.name, []).append(rec.to_json())
    return out


# ---------------------------------------------------------------- scalable frames

def _to_fraction(v, cap):
    if isinstance(v, Fraction):
        q = v
    elif isinstance(v, int):
        q = Fraction(v)
    else:
        q = Fraction(float(v)).limit_denominator(cap)
    if q < 0:
        raise InvalidInput("squared scalars must be nonnegative")
    if q.denominator > cap:
        raise InvalidInput(f"denominator {q.denominator} exceeds the cap {cap}")
    return q


@dataclass(frozen=True, eq=False)
class ScalableFrame:
    """Unit-ball vectors x_i with exact rational squared scalars a_i^2.

    ``epsilon`` is the certified distance of the scaled frame from Parseval;
    deviations below the tolerance are recorded as 0.
    """

    base: Frame
    a_sq: tuple
    epsilon: float
    bounds: FrameBounds

    @classmethod
    def certify(cls, base, a_sq, tolerance=DEFAULT_TOLERANCE, denominator_cap=DENOMINATOR_CAP):
        if base.weights is not None:
            raise InvalidInput("base frame must be unweighted; put masses in a_sq")
        if len(a_sq) != len(base):
            raise InvalidInput("one squared scalar per vector is required")
        norms = np.sum(np.abs(base.vectors) ** 2, axis=1)
        if len(norms) and norms.max() > 1.0 + tolerance:
            raise InvalidInput("base vectors must lie in the unit ball")
        q = tuple(_to_fraction(v, denominator_cap) for v in a_sq)
        w = np.array([float(v) for v in q])
        b = frame_bounds(Frame(base.field, base.dim, base.vectors, w), tolerance)
        eps = max(1.0 - b.lower, b.upper - 1.0, 0.0)
        if eps <= tolerance:
            eps = 0.0
        return cls(base, q, eps, b)

    @classmethod
    def from_scalars(cls, base, scalars, **kw):
        return cls.certify(base, [float(s) ** 2 for s in scalars], **kw)

    @property
    def weights(self):
        return np.array([float(v) for v in self.a_sq])

    def scaled_frame(self):
        return Frame(self.base.field, self.base.dim, self.base.vectors, self.weights)


def common_denominator(fracs):
    den = 1
    for q in fracs:
        den = math.lcm(den, q.denominator)
    return den


@dataclass
class QuantizedScaling:
    multiplicities: np.ndarray
    N: int
    bounds: FrameBounds
    subset_bounds: FrameBounds
    copies: int

    @property
    def scalars(self):
        return np.sqrt(self.multiplicities.astype(float)) / self.N


def quantize_scaling(scalable: ScalableFrame, N, tolerance=DEFAULT_TOLERANCE, copy_cap=200_000,
                     exhaustive_limit=20):
    """Scalars c_i = sqrt(m_i)/N making (c_i x_i) a frame with upper bound <= 1 + 1/N."""
    if int(N) != N or N < 1:
        raise InvalidInput("N must be a positive integer")
    if scalable.epsilon > 0:
        raise InvalidInput(f"scalars are not exactly Parseval (epsilon={scalable.epsilon:.3e})")
    Q = common_denominator(scalable.a_sq)
    Q *= max(1, math.ceil(2 / Q))
    counts = [int(N * N * Q * q) for q in scalable.a_sq]
    if any(N * N * Q * q != c for q, c in zip(scalable.a_sq, counts)):
        raise AssertionError("non-integral copy count")
    total = sum(counts)
    if total > copy_cap:
        raise ResourceLimit(f"{total} copies exceed the cap {copy_cap}")
    owner = np.repeat(np.arange(len(counts)), counts)
    y = scalable.base.vectors[owner] / N
    idx, sub_bounds = subset_tight_frame(Frame(scalable.base.field, scalable.base.dim, y), N,
                                         tolerance, exhaustive_limit)
    m = np.bincount(owner[idx], minlength=len(counts)).astype(np.int64)
    scaled = Frame(scalable.base.field, scalable.base.dim, scalable.base.vectors, m / float(N * N))
    b = frame_bounds(scaled, tolerance)
    if abs(b.lower - sub_bounds.lower) > 1e-10 or abs(b.upper - sub_bounds.upper) > 1e-10:
        raise AssertionError("scaled frame bounds differ from the selected sub-multiset")
    return QuantizedScaling(m, int(N), b, sub_bounds, total)


# ---------------------------------------------------------------- patches and windows

@dataclass
class PatchResult:
    patch: Frame
    union_bounds: FrameBounds
    epsilon1: float


def complement_basis(basis, dim):
    """Orthonormal basis of the orthogonal complement of the column span of ``basis``."""
    if basis.shape[1] == 0:
        return np.eye(dim, dtype=basis.dtype)
    if basis.shape[1] >= dim:
        return np.zeros((dim, 0), dtype=basis.dtype)
    P = np.eye(dim) - basis @ basis.conj().T
    vals, vecs = hermitian_eigh(0.5 * (P + P.conj().T))
    return vecs[:, vals > 0.5]


def orthogonal_patch(frame: Frame, h0_basis, epsilon, max_norm=None, tolerance=DEFAULT_TOLERANCE):
    """Vectors in H_0 that turn a (1+eps)-Bessel family, bounded below by 1-eps on
    H_1 = H_0^perp, into a frame with bounds 1 -+ eps_1.

    The deficit (1+eps) Id - T is diagonalized, sqrt(lambda_k) v_k are added,
    and only their H_0-components are kept. With ``max_norm`` each vector is
    split into equal copies of norm at most max_norm.
    """
    d = frame.dim
    y = frame.effective_vectors()
    T = rank_one_sum(y) if len(y) else np.zeros((d, d), dtype=y.dtype)
    T = 0.5 * (T + T.conj().T)
    h0 = np.asarray(h0_basis).reshape(d, -1)
    h1 = complement_basis(h0, d)
    lo_all, hi_all = extreme_eigenvalues(T)
    if hi_all > 1.0 + epsilon + tolerance:
        raise InvalidInput(f"family is not (1+eps)-Bessel (upper {hi_all:.6g})")
    if h1.shape[1]:
        lo1, _ = extreme_eigenvalues(h1.conj().T @ T @ h1)
        if lo1 < 1.0 - epsilon - tolerance:
            raise InvalidInput(f"H_1 lower bound {lo1:.6g} is below 1 - eps")
    vals, vecs = hermitian_eigh((1.0 + epsilon) * np.eye(d) - T)
    if vals[0] < -tolerance:
        raise InvalidInput(f"deficit operator is not PSD (lambda_min={vals[0]:.3e})")
    P0 = h0 @ h0.conj().T
    patch = []
    for lam, v in zip(vals, vecs.T):
        if lam <= tolerance:
            continue
        g = P0 @ (math.sqrt(lam) * v)
        gn = float(np.linalg.norm(g))
        if gn <= math.sqrt(tolerance) * 1e-4:
            continue
        copies = 1 if max_norm is None else max(1, math.ceil((gn / max_norm) ** 2 - 1e-12))
        patch.extend([g / math.sqrt(copies)] * copies)
    dtype = np.result_type(y.dtype, vecs.dtype)
    pv = np.array(patch, dtype=dtype).reshape(-1, d)
    if frame.field == "real":
        pv = pv.real
    eps1 = epsilon_one(epsilon)
    union = np.vstack([y.astype(dtype), pv.astype(dtype)]) if len(pv) else y
    lo, hi = extreme_eigenvalues(rank_one_sum(union))
    if lo < 1.0 - eps1 - tolerance or hi > 1.0 + eps1 + tolerance:
        raise SamplingFailure(f"patched bounds ({lo:.6g}, {hi:.6g}) leave [1-eps1, 1+eps1]")
    return PatchResult(Frame(frame.field, d, pv), FrameBounds(max(lo, 0.0), hi, tolerance), eps1)


def find_low_energy_window(subspaces, x, epsilon, pairs=False):
    """0-based n with ||P_{H_n} x|| <= eps ||x|| (or ||P_{H_n + H_{n+1}} x|| with ``pairs``)."""
    N = len(subspaces)
    if not epsilon > 0:
        raise InvalidInput("epsilon must be positive")
    need = 2.0 * epsilon ** -2 if pairs else epsilon ** -2
    if N < need - 1e-12 or (pairs and N % 2):
        raise InvalidInput(f"{N} subspaces are too few (need {need:.6g}{', even' if pairs else ''})")
    x = np.asarray(x)
    energy = np.array([np.linalg.norm(np.asarray(Hn).conj().T @ x) ** 2 for Hn in subspaces])
    if pairs:
        energy = energy[:-1] + energy[1:]
    n = int(np.argmin(energy))
    if math.sqrt(energy[n]) > epsilon * np.linalg.norm(x) * (1 + 1e-12) + 1e-15:
        raise AssertionError("no window meets the bound; subspaces may not be orthogonal")
    return n


@dataclass
class CrossTermEnvelope:
    K: float
    k: float
    c: float

    def upper(self, p1, p0):
        return self.K * p1 ** 2 + self.c * p0 ** 2 + 2 * math.sqrt(self.K * self.c) * p1 * p0

    def lower(self, p1, p0):
        return self.k * p1 ** 2 - 2 * math.sqrt(self.K * self.c) * p1 * p0


def cross_term_envelope(frame: Frame, h1_basis, K=None, k=None, c=None):
    """Quadratic envelopes in (||P_1 x||, ||P_0 x||) for sum_j |<f_j, x>|^2.

    Missing constants are taken from the eigen bounds of the projections.
    """
    d = frame.dim
    h1 = np.asarray(h1_basis).reshape(d, -1)
    h0 = complement_basis(h1, d)
    y = frame.effective_vectors()
    if K is None or k is None:
        T1 = rank_one_sum(y @ h1.conj()) if h1.shape[1] else np.zeros((0, 0))
        lo, hi = extreme_eigenvalues(T1)
        K = hi if K is None else K
        k = lo if k is None else k
    if c is None:
        c = bessel_bound(y @ h0.conj()) if h0.shape[1] else 0.0
    return CrossTermEnvelope(float(K), float(k), float(c))


# ---------------------------------------------------------------- block decomposition

@dataclass
class BlockDecomposition:
    subspaces: list            # H_1..H_L as d x dim_n orthonormal columns
    cuts: dict                 # K_n for n = -1..L
    leakages: list             # budgets eps_1..eps_L
    measured: list             # measured tail leakage on sum_{j<=n} H_j
    epsilon: float
    epsilon_prime: float
    records: list = field(default_factory=list)
    truncated: bool = False

    @property
    def L(self):
        return len(self.subspaces)

    def cut(self, n):
        if n <= -1:
            return -1
        if n in self.cuts:
            return self.cuts[n]
        return self.cuts[max(self.cuts)]

    def block(self, n):
        d = self.subspaces[0].shape[0]
        if 1 <= n <= self.L:
            return self.subspaces[n - 1]
        return np.zeros((d, 0), dtype=self.subspaces[0].dtype)

    def span(self, lo, hi):
        """Orthonormal basis of sum_{lo <= j <= hi} H_j."""
        d = self.subspaces[0].shape[0]
        cols = [self.block(n) for n in range(max(lo, 1), min(hi, self.L) + 1)]
        cols = [c for c in cols if c.shape[1]]
        if not cols:
            return np.zeros((d, 0), dtype=self.subspaces[0].dtype)
        return np.hstack(cols)

    def dims(self):
        return [b.shape[1] for b in self.subspaces]


def _compressed(vectors, weights, basis):
    c = vectors @ basis.conj()
    return rank_one_sum(c, weights)


def _top(vectors, weights, basis):
    if basis.shape[1] == 0 or len(vectors) == 0:
        return 0.0
    return max(extreme_eigenvalues(_compressed(vectors, weights, basis))[1], 0.0)


def build_block_decomposition(scalable: ScalableFrame, truncation=64, B=B_STAR, rank_tol=1e-9,
                              leak_tol=1e-13, tolerance=DEFAULT_TOLERANCE):
    """Orthogonal blocks H_n, cuts K_n and leakage budgets eps_n.

    H_{k+1} spans the components of x_i, K_{k-1} < i <= K_k, orthogonal to the
    earlier blocks; K_{k+1} is the smallest cut whose tail has leakage at most
    eps_{k+1} on the blocks built so far.
    """
    X = scalable.base.vectors
    w = scalable.weights
    M, d = X.shape
    eps = scalable.epsilon
    ep = epsilon_prime(eps)
    if ep >= 1:
        raise InvalidInput("epsilon too large for the block construction")
    factor = B * (1 + ep) / (1 - ep) ** 2
    blocks = [np.zeros((d, 0), dtype=X.dtype)]
    K = {-1: -1, 0: 0, 1: min(1, M)}
    budgets = [eps / 2.0]
    truncated = False
    k = 1
    while True:
        if k + 1 > truncation:
            truncated = K[k] < M
            break
        prev = np.hstack(blocks) if any(b.shape[1] for b in blocks) else np.zeros((d, 0), dtype=X.dtype)
        chunk = X[max(K[k - 1], 0):K[k]]
        resid = chunk - (chunk @ prev.conj()) @ prev.T if prev.shape[1] else chunk
        new = orthonormal_basis(resid, rank_tol)
        blocks.append(new.astype(X.dtype) if X.dtype == new.dtype else new)
        V = np.hstack([prev, new]) if prev.shape[1] else new
        dim = V.shape[1]
        budgets.append(min(budgets[-1] / 2.0, 0.5 * ep * 8.0 ** -(k + 1) / (factor * max(dim, 1))))
        if K[k] >= M:
            K[k + 1] = M
            k += 1
            break
        lo_c, hi_c = K[k] + 1, M
        while lo_c < hi_c:
            mid = (lo_c + hi_c) // 2
            if _top(X[mid:], w[mid:], V) <= budgets[-1] + leak_tol:
                hi_c = mid
            else:
                lo_c = mid + 1
        K[k + 1] = lo_c
        k += 1
    L = len(blocks)
    for n in range(L + 1, L + 3):
        K[n] = M
    dec = BlockDecomposition(blocks, K, budgets, [], eps, ep, [], truncated)
    recs = dec.records
    rank_abs = max(rank_tol, 1e-7)
    for n in range(1, L + 2):
        V = dec.span(1, n)
        upto = max(dec.cut(n - 1), 0)
        if upto and V.shape[1]:
            r = X[:upto] - (X[:upto] @ V.conj()) @ V.T
            res = float(np.max(np.linalg.norm(r, axis=1)))
        elif upto:
            res = float(np.max(np.linalg.norm(X[:upto], axis=1)))
        else:
            res = 0.0
        recs.append(Inequality("Een", 0, n, res, rank_abs))
    for n in range(1, L + 1):
        V = dec.span(1, n)
        leak = _top(X[dec.cut(n):], w[dec.cut(n):], V)
        dec.measured.append(leak)
        recs.append(Inequality("Drie", 0, n, leak, budgets[n - 1] + leak_tol))
        lhs = budgets[n - 1] * factor * V.shape[1]
        recs.append(Inequality("Vier", 0, n, lhs, ep * 8.0 ** -n))
    for m in range(1, L + 1):
        for n in range(m, L + 1):
            U = dec.span(m, n)
            if U.shape[1] == 0:
                continue
            a, b = max(dec.cut(m - 2), 0), dec.cut(n)
            lo, hi = extreme_eigenvalues(_compressed(X[a:b], w[a:b], U)) if b > a else (0.0, 0.0)
            recs.append(Inequality("Twee-lower", 0, m * 1000 + n, (1 - 2 * eps) - lo, tolerance))
            recs.append(Inequality("Twee-upper", 0, m * 1000 + n, hi, 1 + eps + tolerance))
    bad = [r for r in recs if not r.holds]
    if bad:
        r = bad[0]
        raise DecompositionFailure(f"{r.name} fails at n={r.index}: {r.lhs:.6g} > {r.rhs:.6g}", recs)
    return dec


# ---------------------------------------------------------------- sequences

@dataclass
class SequencePlan:
    M: list
    N: list
    q: list
    p: list
    delta: list
    gap: int

    @property
    def blocks(self):
        return list(zip(self.M, self.N))


def interleaved_sequences(L, gap=4):
    """Odd M_r < N_r with the interleaving constraints, covering blocks 1..L.

    N_r = M_{r+1} + gap, M_{r+1} = N_{r-1} + 6 (M_2 = 5); q_r and p_r are the
    smallest integers in their open/half-open windows. delta_r is the smallest
    value allowed by N_r - M_{r+1} - 4 > 2 delta_r^{-2}, infinite when gap = 4.
    """
    if gap < 4 or gap % 2:
        raise InvalidInput("gap must be an even integer >= 4")
    M, N = [1, 5], []
    while True:
        N.append(M[-1] + gap)
        if N[-1] >= L:
            break
        M.append(N[-1] + 6)
    # M has one extra entry (M_{R+1}) needed for N_R
    R = len(N)
    Ms = M[:R]
    q = [0] + [N[r - 2] + 2 for r in range(2, R + 1)]
    p = [M[r] + 1 for r in range(R)]
    room = gap - 4
    delta = [math.sqrt(2.0 / room) * (1 + 1e-12) if room > 0 else math.inf for _ in range(R)]
    return SequencePlan(Ms, N, q, p, delta, gap)


def _check_sequences(plan):
    recs = []
    M_ext = plan.M + [plan.N[-1] - plan.gap]
    for r in range(len(plan.N)):
        recs.append(Inequality("Vyf", r + 1, 0, M_ext[r + 1] + 1, plan.N[r]))
        if r + 2 < len(M_ext):
            recs.append(Inequality("Vyf", r + 1, 1, plan.N[r] + 4, M_ext[r + 2]))
    return recs


# ---------------------------------------------------------------- sampler

@dataclass
class SamplerConfig:
    tolerance: float = DEFAULT_TOLERANCE
    rank_tol: float = 1e-9
    leak_tol: float = 1e-13
    gap: int = 4
    max_blocks: int = 64
    min_duplication: int = 1
    exhaustive_limit: int = 20
    copy_cap: int = 2_000_000
    A: float = A_CONST
    B: float = B_STAR


@dataclass
class DuplicationMap:
    D: int
    b: np.ndarray

    def counts(self, size):
        return np.bincount(self.b, minlength=size)


@dataclass
class SampledFrame:
    indices: np.ndarray
    multiplicities: np.ndarray
    bounds: FrameBounds
    epsilon: float
    records: list = field(default_factory=list)
    envelope: dict = field(default_factory=dict)
    decomposition: BlockDecomposition | None = None
    points: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def certificates(self):
        return _group(self.records)

    def to_json(self):
        out = {"indices": [int(i) for i in self.indices],
               "multiplicities": [int(m) for m in self.multiplicities],
               "bounds": self.bounds.as_pair(), "epsilon": self.epsilon,
               "certificates": self.certificates}
        if self.points is not None:
            out["points"] = np.asarray(self.points, dtype=float).tolist()
        if self.envelope:
            out["envelope"] = self.envelope
        return out


def _duplication_factor(a_sq, ep, minimum):
    den = common_denominator(a_sq)
    need = max(math.ceil(1.0 / (1.0 - ep) - 1e-15), minimum, 1)
    return den * math.ceil(need / den)


def sample_scalable(scalable: ScalableFrame, config: SamplerConfig | None = None):
    """Index multiset with bounds A(1 - g(eps)) and 2B(1 + g(eps)).

    Runs the finite block pipeline; every inequality is recorded and a failure
    raises SamplingFailure naming the block and inequality.
    """
    cfg = config or SamplerConfig()
    eps = scalable.epsilon
    if not eps < PIPELINE_EPSILON_LIMIT:
        raise InvalidInput(f"epsilon {eps:.6g} must be below 1/256")
    tol = cfg.tolerance
    ep = epsilon_prime(eps)
    cap = cfg.B * (1 + ep) / (1 - ep) + tol
    X = scalable.base.vectors
    Mtot, d = X.shape
    dec = build_block_decomposition(scalable, cfg.max_blocks, cfg.B, cfg.rank_tol, cfg.leak_tol, tol)
    if dec.truncated:
        raise SamplingFailure(f"decomposition truncated after {cfg.max_blocks} blocks", dec.records)
    plan = interleaved_sequences(dec.L, cfg.gap)
    records = list(dec.records) + _check_sequences(plan)
    chosen = Counter()
    blocks_info = []
    for r, (Mr, Nr) in enumerate(plan.blocks, start=1):
        lo_i, hi_i = max(dec.cut(Mr - 2), 0), dec.cut(Nr)
        if hi_i <= lo_i:
            continue
        window = np.arange(lo_i, hi_i)
        a_sq = [scalable.a_sq[i] for i in window]
        D = _duplication_factor(a_sq, ep, cfg.min_duplication)
        counts = np.array([int(D * q) for q in a_sq], dtype=np.int64)
        if counts.sum() > cfg.copy_cap:
            raise ResourceLimit(f"block {r}: {counts.sum()} duplicates exceed the cap {cfg.copy_cap}")
        dup = DuplicationMap(D, np.repeat(window, counts))
        records.append(Inequality("Sewehalf", r, 0, 1.0, D * (1 - ep)))
        f = X[dup.b]
        # the duplicated family reproduces the weighted block frame exactly
        Tf = rank_one_sum(f) / D if len(f) else np.zeros((d, d))
        Tw = rank_one_sum(X[window], scalable.weights[window])
        diff = float(np.max(np.abs(Tf - Tw))) if len(f) else 0.0
        records.append(Inequality("Duplication", r, 0, diff, 1e-12 * max(1.0, float(np.max(np.abs(Tw))))))
        Q_amb = dec.span(1, Nr + 1)
        Q_low = dec.span(Mr, Nr)
        Q_side = np.hstack([dec.span(1, Mr - 1), dec.block(Nr + 1)])
        if len(f) == 0:
            continue
        F = f @ Q_amb.conj()
        side = Q_amb.conj().T @ Q_side
        try:
            patch = orthogonal_patch(Frame(scalable.base.field, F.shape[1], F / math.sqrt(D)), side,
                                     2 * eps, max_norm=1 / math.sqrt(D), tolerance=tol)
        except (InvalidInput, SamplingFailure) as exc:
            raise SamplingFailure(f"block {r}: orthogonal patch failed: {exc}", records) from exc
        records.append(Inequality("Patch-lower", r, 0, (1 - ep) - patch.union_bounds.lower, tol))
        records.append(Inequality("Patch-upper", r, 0, patch.union_bounds.upper, 1 + ep + tol))
        G = patch.patch.vectors * math.sqrt(D)
        combined = np.vstack([F, G.astype(F.dtype)]) if len(G) else F
        nf = len(F)
        try:
            pres = partition_general_frame(Frame(scalable.base.field, F.shape[1], combined), tol,
                                           cfg.exhaustive_limit)
        except Exception as exc:
            raise SamplingFailure(f"block {r}: partition failed: {exc}", records) from exc
        parts = pres.parts
        level_frames, level_k = [], []
        for k in range(max(Mr - 2, 1), Nr + 1):
            U = Q_amb.conj().T @ dec.span(1, k)
            if U.shape[1] == 0:
                continue
            proj = combined @ U.conj()
            keep = np.zeros(len(combined), dtype=bool)
            keep[:nf] = dup.b >= dec.cut(k)
            proj[~keep] = 0
            level_frames.append(Frame(scalable.base.field, U.shape[1], proj))
            level_k.append(k)
        m0 = multi_level_select(level_frames, parts, tolerance=tol) if level_frames and len(parts) > 1 else 0
        part = np.asarray(parts[m0])
        I = part[part < nf]
        bound = ep * 2.0 ** -r + tol
        for k in range(max(Mr - 2, 1), Nr + 1):
            sel = I[dup.b[I] >= dec.cut(k)]
            recs_val = _top(f[sel], None, dec.span(1, k))
            records.append(Inequality("SewePlus", r, k, recs_val, bound))
        records.append(Inequality("Agt", r, 0, _top(f[I], None, dec.span(1, Mr - 2)), bound))
        if Q_low.shape[1]:
            lo, hi = extreme_eigenvalues(_compressed(f[I], None, Q_low)) if len(I) else (0.0, 0.0)
        else:
            lo, hi = cfg.A, 0.0
        records.append(Inequality("Nege-lower", r, 0, cfg.A - lo, tol * max(cfg.A, 1.0)))
        records.append(Inequality("Nege-upper", r, 0, hi, cap))
        records.append(Inequality("Tien", r, 0, _top(f[I], None, dec.span(Mr - 1, Nr)), cap))
        records.append(Inequality("TienPlus", r, 0, _top(f[I], None, Q_amb), cap))
        bad = [x for x in records if not x.holds]
        if bad:
            x = bad[0]
            raise SamplingFailure(f"block {x.block}: {x.name} fails ({x.lhs:.6g} > {x.rhs:.6g})", records)
        chosen.update(int(i) for i in dup.b[I])
        blocks_info.append({"block": r, "M": Mr, "N": Nr, "D": D, "parts": len(parts), "selected": m0,
                            "patch": len(G)})
    if not chosen:
        raise SamplingFailure("no samples were selected", records)
    idx = np.array(sorted(chosen))
    mult = np.array([chosen[i] for i in idx], dtype=np.int64)
    T = rank_one_sum(X[idx], mult.astype(float))
    lo, hi = extreme_eigenvalues(T)
    bounds = FrameBounds(max(lo, 0.0), max(hi, lo, 0.0), tol)
    e2 = epsilon_two(ep, cfg.B)
    low1, low2 = lower_envelopes(ep, e2, cfg.A, cfg.B)
    up = upper_envelope(e2, cfg.B)
    env = {"epsilon_prime": ep, "epsilon_one": epsilon_one(2 * eps), "epsilon_two": e2,
           "lower_first": low1, "lower_second": low2, "upper": up,
           "g": g_of_epsilon(eps, cfg.A, cfg.B), "A": cfg.A, "B": cfg.B,
           "sequences": {"M": plan.M, "N": plan.N, "q": plan.q, "p": plan.p,
                         "delta": [None if math.isinf(v) else v for v in plan.delta]},
           "blocks": blocks_info}
    records.append(Inequality("Final-lower", 0, 0, min(low1, low2) - bounds.lower, 1e-6))
    records.append(Inequality("Final-upper", 0, 0, bounds.upper, up + 1e-6))
    records.append(Inequality("Final-frame", 0, 0, tol, bounds.lower))
    bad = [x for x in records if not x.holds]
    if bad:
        x = bad[0]
        raise SamplingFailure(f"{x.name} fails ({x.lhs:.6g} > {x.rhs:.6g})", records)
    return SampledFrame(idx, mult, bounds, eps, records, env, dec)
