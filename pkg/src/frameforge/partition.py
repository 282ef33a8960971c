"""Two-way Bessel partitions and the recursive partition of tight frames."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_TOLERANCE,
    Frame,
    FrameBounds,
    batched_extremes,
    bessel_bound,
    extreme_eigenvalues,
    frame_bounds,
    frame_operator,
    hermitian_eigh,
    orthonormal_basis,
    psd_power,
    rank_one_sum,
)
from .errors import CertificateFailure, InvalidInput, PartitionFailure, UseHeuristic

EXHAUSTIVE_LIMIT = 20
SPLIT_THRESHOLD = 79.0
STOP_CEILING = 200.0

# Bound on log(upper/lower) of a leaf: sum_m 10 (79/200)^{m/2} 79^{-1/2}.
RATIO_EXPONENT = 10.0 / math.sqrt(79.0) / (1.0 - math.sqrt(79.0 / 200.0))
RATIO_BOUND = math.exp(RATIO_EXPONENT)
# Global upper constant for leaves: every schedule starts below 200 after
# rescaling, and the product of split targets is at most RATIO_BOUND.
B_STAR = STOP_CEILING * RATIO_BOUND
A_CONST = 1.0


def thread_count():
    try:
        n = int(os.environ.get("FRAMEFORGE_THREADS", "1"))
    except ValueError:
        n = 1
    return max(n, 1)


def mss_bound(delta, r=2):
    """(1/sqrt(r) + sqrt(delta))^2 for max squared norm delta."""
    return (1.0 / math.sqrt(r) + math.sqrt(delta)) ** 2


def next_bound(B):
    return 0.5 * B - math.sqrt(2.0 * B) - 1.0


def split_target(B):
    """Bessel target for each half when splitting a Parseval frame at level B."""
    return 0.5 + math.sqrt(2.0 / B) + 1.0 / B


def half_lower_bound(B):
    return 0.5 - math.sqrt(2.0 / B) - 1.0 / B


def bound_schedule(B0):
    """[B_0, ..., B_n] with 79 <= B_n < 200; just [B_0] when B_0 < 200."""
    if B0 < SPLIT_THRESHOLD:
        return [B0]
    seq = [B0]
    while seq[-1] >= STOP_CEILING:
        seq.append(next_bound(seq[-1]))
    return seq


@dataclass
class TwoPartition:
    left: np.ndarray
    right: np.ndarray
    achieved: float
    achieved_left: float
    achieved_right: float
    method: str

    def __iter__(self):
        return iter((self.left, self.right, self.achieved))


def _rank_ones(y):
    return np.einsum("ja,jb->jab", y, y.conj())


def _exact_chunk(R, total, start, stop, m):
    masks = np.arange(start, stop, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(m - 1)) & 1).astype(R.dtype)
    bits = np.concatenate([np.ones((len(masks), 1), dtype=R.dtype), bits], axis=1)
    TL = np.tensordot(bits, R, axes=(1, 0))
    _, hl = batched_extremes(TL)
    _, hr = batched_extremes(total[None] - TL)
    score = np.maximum(hl, hr)
    k = int(np.argmin(score))
    return float(score[k]), int(masks[k])


def exact_two_partition(frame: Frame, limit=EXHAUSTIVE_LIMIT, chunk=1 << 14):
    """Exhaustive 2-partition minimizing the larger Bessel bound.

    Index 0 is always placed on the left, which removes the mirror symmetry.
    Among optimal splits the one with the smallest mask wins.
    """
    y = frame.effective_vectors()
    m = len(frame)
    if m > limit:
        raise UseHeuristic(f"{m} vectors exceed the exhaustive limit {limit}")
    if m == 0:
        empty = np.zeros(0, dtype=np.int64)
        return TwoPartition(empty, empty, 0.0, 0.0, 0.0, "exact")
    R = _rank_ones(y)
    total = R.sum(axis=0)
    n_masks = 1 << (m - 1)
    ranges = [(s, min(s + chunk, n_masks)) for s in range(0, n_masks, chunk)]
    workers = min(thread_count(), len(ranges))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda r: _exact_chunk(R, total, r[0], r[1], m), ranges))
    else:
        results = [_exact_chunk(R, total, a, b, m) for a, b in ranges]
    # min value, then smallest mask; chunk order is fixed so this is deterministic
    best, mask = min(results, key=lambda t: (t[0], t[1]))
    on_left = np.array([True] + [bool((mask >> i) & 1) for i in range(m - 1)])
    left = np.flatnonzero(on_left)
    right = np.flatnonzero(~on_left)
    bl, br = bessel_bound(y[left]), bessel_bound(y[right])
    return TwoPartition(left, right, max(bl, br), bl, br, "exact")


def _greedy_assign(y):
    """Assign vectors in decreasing-norm order to the side with smaller quadratic form."""
    d = y.shape[1]
    TL = np.zeros((d, d), dtype=y.dtype)
    TR = np.zeros((d, d), dtype=y.dtype)
    side = np.zeros(len(y), dtype=bool)
    order = np.argsort(-np.sum(np.abs(y) ** 2, axis=1), kind="stable")
    for j in order:
        v = y[j]
        qL = np.real(v.conj() @ TL @ v)
        qR = np.real(v.conj() @ TR @ v)
        outer = np.outer(v, v.conj())
        if qL <= qR:
            side[j] = True
            TL += outer
        else:
            TR += outer
    return side


def _local_descent(y, side, target, max_rounds=200, swap_width=48):
    """Single moves, then limited swaps, while the larger Bessel bound drops."""
    R = _rank_ones(y)
    TL = R[side].sum(axis=0) if side.any() else np.zeros(R.shape[1:], dtype=R.dtype)
    TR = R[~side].sum(axis=0) if (~side).any() else np.zeros(R.shape[1:], dtype=R.dtype)
    cur = max(extreme_eigenvalues(TL)[1], extreme_eigenvalues(TR)[1])
    for _ in range(max_rounds):
        if cur <= target:
            break
        sgn = np.where(side, -1.0, 1.0)[:, None, None]
        _, hl = batched_extremes(TL[None] + sgn * R)
        _, hr = batched_extremes(TR[None] - sgn * R)
        score = np.maximum(hl, hr)
        j = int(np.argmin(score))
        if score[j] < cur * (1 - 1e-12):
            if side[j]:
                TL, TR = TL - R[j], TR + R[j]
            else:
                TL, TR = TL + R[j], TR - R[j]
            side[j] = not side[j]
            cur = float(score[j])
            continue
        # swaps between the vectors most aligned with the top eigenvector of each side
        heavy_left = extreme_eigenvalues(TL)[1] >= extreme_eigenvalues(TR)[1]
        src = TL if heavy_left else TR
        _, vecs = hermitian_eigh(src)
        top = vecs[:, -1]
        align = np.abs(y @ top.conj()) ** 2
        li = np.flatnonzero(side if heavy_left else ~side)
        ri = np.flatnonzero(~side if heavy_left else side)
        if len(li) == 0 or len(ri) == 0:
            break
        li = li[np.argsort(-align[li], kind="stable")[:swap_width]]
        ri = ri[np.argsort(align[ri], kind="stable")[:swap_width]]
        delta = R[ri][None, :] - R[li][:, None]
        heavy = (TL if heavy_left else TR)[None, None] + delta
        light = (TR if heavy_left else TL)[None, None] - delta
        _, h1 = batched_extremes(heavy)
        _, h2 = batched_extremes(light)
        sc = np.maximum(h1, h2)
        a, b = np.unravel_index(int(np.argmin(sc)), sc.shape)
        if sc[a, b] >= cur * (1 - 1e-12):
            break
        j, k = li[a], ri[b]
        side[j], side[k] = side[k], side[j]
        TL = R[side].sum(axis=0) if side.any() else np.zeros_like(TL)
        TR = R[~side].sum(axis=0) if (~side).any() else np.zeros_like(TR)
        cur = max(extreme_eigenvalues(TL)[1], extreme_eigenvalues(TR)[1])
    return side


def balanced_split(y, target=0.0):
    """Greedy plus local descent; returns (side mask, left bound, right bound)."""
    side = _greedy_assign(y)
    side = _local_descent(y, side, target)
    return side, bessel_bound(y[side]), bessel_bound(y[~side])


def heuristic_two_partition(frame: Frame, target):
    """Greedy spectral assignment plus swap descent, eigen-verified against ``target``.

    Returns a TwoPartition on success and a CertificateFailure otherwise.
    """
    if not target > 0:
        raise InvalidInput("target must be positive")
    y = frame.effective_vectors()
    if len(y) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return TwoPartition(empty, empty, 0.0, 0.0, 0.0, "heuristic")
    side, bl, br = balanced_split(y, target)
    left, right = np.flatnonzero(side), np.flatnonzero(~side)
    achieved = max(bl, br)
    if achieved <= target:
        return TwoPartition(left, right, achieved, bl, br, "heuristic")
    return CertificateFailure(target, achieved, (tuple(left), tuple(right)),
                              "heuristic split above target")


def two_partition(frame, target, limit=EXHAUSTIVE_LIMIT):
    """Exact search when small enough, heuristic otherwise."""
    if len(frame) <= limit:
        return exact_two_partition(frame, limit)
    return heuristic_two_partition(frame, target)


@dataclass
class PartitionStep:
    level: int
    B_m: float
    target: float
    achieved_left: float
    achieved_right: float
    method: str
    certified: bool
    path: str = ""
    size: int = 0
    operator_norm_sq: float = 0.0
    lower_left: float = 0.0
    lower_right: float = 0.0
    lower_target: float = 0.0

    def inequalities(self, tol=DEFAULT_TOLERANCE):
        """Slacks of the three per-step inequalities (nonnegative when they hold)."""
        return {
            "E1": 1.0 / self.B_m - self.operator_norm_sq + tol / self.B_m,
            "E2": self.target * (1 + tol) - max(self.achieved_left, self.achieved_right),
            "E3": min(self.lower_left, self.lower_right) - self.lower_target * (1 - tol),
        }

    def to_json(self):
        return {"level": self.level, "B_m": self.B_m, "target": self.target,
                "achieved_left": self.achieved_left, "achieved_right": self.achieved_right,
                "method": self.method}


@dataclass
class PartitionResult:
    parts: list
    per_part_bounds: list
    certificate: list = field(default_factory=list)
    schedule: list = field(default_factory=list)
    claimed_lower: float = 0.0
    claimed_upper: float = 0.0

    def to_json(self):
        return {"parts": [[int(i) for i in p] for p in self.parts],
                "bounds": [b.as_pair() for b in self.per_part_bounds],
                "certificate": [s.to_json() for s in self.certificate]}

    def labels(self, size):
        lab = np.full(size, -1, dtype=np.int64)
        for k, p in enumerate(self.parts):
            lab[np.asarray(p, dtype=np.int64)] = k
        return lab


def _check_unit_ball(y, tol):
    norms = np.sum(np.abs(y) ** 2, axis=1)
    if len(norms) and norms.max() > 1.0 + tol:
        raise InvalidInput(f"vector with squared norm {norms.max():.6g} outside the unit ball")


def reduce_tight_frame(frame: Frame, tolerance=DEFAULT_TOLERANCE, exhaustive_limit=EXHAUSTIVE_LIMIT,
                       tight_tolerance=None):
    """Partition a tight frame with bound above 1 into well-conditioned parts.

    When the bound is at least 79 both halves are split recursively until the
    scaled bound B_n lands in [79, 200). Each step is verified numerically.
    """
    if len(frame) == 0:
        raise InvalidInput("empty frame")
    tight_tol = tolerance if tight_tolerance is None else tight_tolerance
    y = frame.effective_vectors()
    _check_unit_ball(y, tolerance)
    T0 = frame_operator(frame)
    lo, hi = extreme_eigenvalues(T0)
    if hi - lo > tight_tol * hi:
        raise InvalidInput(f"frame is not tight: bounds ({lo:.12g}, {hi:.12g})")
    B0 = lo
    if not B0 > 1.0:
        raise InvalidInput(f"tight bound {B0:.12g} must exceed 1")
    schedule = bound_schedule(B0)
    everything = np.arange(len(frame))
    if len(schedule) == 1:
        b = FrameBounds(max(lo, 0.0), hi, tolerance)
        return PartitionResult([everything], [b], [], schedule, lo, hi)
    depth = len(schedule) - 1
    steps, leaves = [], []
    S0 = psd_power(T0, -0.5)
    stack = [(everything, S0, 0, "")]
    while stack:
        idx, S, m, path = stack.pop()
        if m == depth:
            leaves.append((path, idx))
            continue
        Bm = schedule[m]
        target = split_target(Bm)
        z = y[idx] @ S.T
        sub = Frame(frame.field, frame.dim, z)
        res = two_partition(sub, target, exhaustive_limit)
        if isinstance(res, CertificateFailure):
            steps.append(PartitionStep(m, Bm, target, res.best_achieved, res.best_achieved,
                                       "heuristic", False, path, len(idx)))
            raise PartitionFailure(
                f"level {m} split at path '{path}' reached {res.best_achieved:.6g} > target {target:.6g}",
                steps)
        halves = []
        lows = []
        for part in (res.left, res.right):
            Th = rank_one_sum(z[part])
            l_h, _ = extreme_eigenvalues(Th) if len(part) else (0.0, 0.0)
            lows.append(l_h)
            halves.append((part, Th))
        norm_sq = extreme_eigenvalues(S.conj().T @ S)[1]
        step = PartitionStep(m, Bm, target, res.achieved_left, res.achieved_right, res.method,
                             True, path, len(idx), norm_sq, lows[0], lows[1], half_lower_bound(Bm))
        steps.append(step)
        slack = step.inequalities(tolerance)
        bad = [k for k, v in slack.items() if v < 0]
        if bad:
            step.certified = False
            raise PartitionFailure(f"inequality {bad[0]} fails at level {m}, path '{path}'", steps)
        # right pushed first so the left subtree is processed first
        for tag, (part, Th) in reversed(list(zip("LR", halves))):
            S_next = psd_power(Th, -0.5) @ S
            stack.append((idx[part], S_next, m + 1, path + tag))
    leaves.sort(key=lambda t: t[0])
    parts, bounds = [], []
    B_leaf = schedule[-1]
    claimed_upper = B0
    for m in range(depth):
        claimed_upper *= split_target(schedule[m])
    for path, idx in leaves:
        b = frame_bounds(frame.subframe(idx), tolerance)
        if b.lower < B_leaf * (1 - tolerance) or b.lower < 1 - tolerance:
            raise PartitionFailure(f"leaf '{path}' lower bound {b.lower:.6g} below {B_leaf:.6g}", steps)
        if b.upper > B_STAR * (1 + tolerance) or b.upper > claimed_upper * (1 + tolerance):
            raise PartitionFailure(f"leaf '{path}' upper bound {b.upper:.6g} above envelope", steps)
        if b.upper > RATIO_BOUND * b.lower * (1 + tolerance):
            raise PartitionFailure(f"leaf '{path}' condition ratio above {RATIO_BOUND:.6g}", steps)
        parts.append(np.sort(idx))
        bounds.append(b)
    steps.sort(key=lambda s: (s.level, s.path))
    return PartitionResult(parts, bounds, steps, schedule, B_leaf, claimed_upper)


def partition_general_frame(frame: Frame, tolerance=DEFAULT_TOLERANCE, exhaustive_limit=EXHAUSTIVE_LIMIT):
    """Partition a frame with lower bound >= 1 via the tight frame A_0^{1/2} T^{-1/2} x_j."""
    if len(frame) == 0:
        raise InvalidInput("empty frame")
    y = frame.effective_vectors()
    _check_unit_ball(y, tolerance)
    T = frame_operator(frame)
    A0, B0 = extreme_eigenvalues(T)
    if A0 < 1.0 - tolerance:
        raise InvalidInput(f"lower frame bound {A0:.12g} is below 1")
    if B0 - A0 <= tolerance * B0:
        if A0 > 1.0:
            return reduce_tight_frame(frame, tolerance, exhaustive_limit)
    if A0 <= 1.0 + tolerance:
        b = FrameBounds(max(A0, 0.0), B0, tolerance)
        return PartitionResult([np.arange(len(frame))], [b], [], [A0], A0, B0)
    z = y @ (math.sqrt(A0) * psd_power(T, -0.5)).T
    tight = Frame(frame.field, frame.dim, z)
    inner = reduce_tight_frame(tight, tolerance, exhaustive_limit, tight_tolerance=1e-6)
    envelope = B_STAR * B0 / A0
    bounds = []
    for p in inner.parts:
        b = frame_bounds(frame.subframe(p), tolerance)
        if b.lower < 1 - tolerance or b.upper > envelope * (1 + tolerance):
            raise PartitionFailure(f"mapped part bounds ({b.lower:.6g}, {b.upper:.6g}) leave the envelope",
                                   inner.certificate)
        bounds.append(b)
    return PartitionResult(inner.parts, bounds, inner.certificate, inner.schedule,
                           1.0, inner.claimed_upper * B0 / A0)


@dataclass
class DualityReport:
    subset_frame: bool
    complement_frame: bool
    both_bessel: bool
    subset_bounds: tuple
    complement_bounds: tuple

    @property
    def agree(self):
        return self.subset_frame == self.complement_frame == self.both_bessel


def complement_duality_check(parseval: Frame, subset, delta, tolerance=DEFAULT_TOLERANCE):
    """Evaluate the three equivalent subset/complement statements for a Parseval frame."""
    b = frame_bounds(parseval, tolerance)
    if abs(b.lower - 1) > tolerance or abs(b.upper - 1) > tolerance:
        raise InvalidInput("input frame is not Parseval within tolerance")
    if not delta > 0:
        raise InvalidInput("delta must be positive")
    sel = np.zeros(len(parseval), dtype=bool)
    idx = np.asarray(subset, dtype=np.int64).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= len(parseval)):
        raise InvalidInput("subset index out of range")
    sel[idx] = True
    y = parseval.effective_vectors()
    s_lo, s_hi = extreme_eigenvalues(rank_one_sum(y[sel])) if sel.any() else (0.0, 0.0)
    c_lo, c_hi = extreme_eigenvalues(rank_one_sum(y[~sel])) if (~sel).any() else (0.0, 0.0)
    lo_ok = lambda v: v >= delta - tolerance
    hi_ok = lambda v: v <= 1 - delta + tolerance
    return DualityReport(lo_ok(s_lo) and hi_ok(s_hi), lo_ok(c_lo) and hi_ok(c_hi),
                         hi_ok(s_hi) and hi_ok(c_hi), (s_lo, s_hi), (c_lo, c_hi))


def _part_traces(y, parts):
    sq = np.sum(np.abs(y) ** 2, axis=1)
    return np.array([sq[np.asarray(p, dtype=np.int64)].sum() if len(p) else 0.0 for p in parts])


def select_low_trace_parts(frame: Frame, parts, K, C=None, N=None, tolerance=DEFAULT_TOLERANCE):
    """The K parts of smallest trace; each is CN/(M+1-K)-Bessel."""
    M = len(parts)
    if not 1 <= K < M:
        raise InvalidInput(f"need 1 <= K < M, got K={K}, M={M}")
    y = frame.effective_vectors()
    C = bessel_bound(y) if C is None else C
    N = frame.dim if N is None else N
    tr = _part_traces(y, parts)
    chosen = [int(i) for i in np.argsort(tr, kind="stable")[:K]]
    bound = C * N / (M + 1 - K)
    for i in chosen:
        got = bessel_bound(y[np.asarray(parts[i], dtype=np.int64)])
        if got > bound + tolerance:
            raise PartitionFailure(f"part {i} Bessel {got:.6g} exceeds {bound:.6g}")
    return chosen


def multi_level_select(frames, parts, C=None, N=None, tolerance=DEFAULT_TOLERANCE):
    """Iterative halving by trace, one frame at a time; returns one part index.

    Part n then satisfies Bessel(frame p restricted to part n) <= 4^p C_p N_p / M
    for p = 1..P.
    """
    M = len(parts)
    if M == 0:
        raise InvalidInput("no parts")
    ys = [f.effective_vectors() for f in frames]
    Cs = [bessel_bound(y) for y in ys] if C is None else list(C)
    Ns = [f.dim for f in frames] if N is None else list(N)
    cand = np.arange(M)
    for y in ys:
        if len(cand) < 2:
            break
        tr = _part_traces(y, [parts[i] for i in cand])
        keep = len(cand) // 2
        cand = cand[np.sort(np.argsort(tr, kind="stable")[:keep])]
    n = int(cand.min())
    for p, y in enumerate(ys, start=1):
        got = bessel_bound(y[np.asarray(parts[n], dtype=np.int64)])
        bound = 4.0 ** p * Cs[p - 1] * Ns[p - 1] / M
        if got > bound + tolerance:
            raise PartitionFailure(f"frame {p}: part {n} Bessel {got:.6g} exceeds {bound:.6g}")
    return n


def _canonical_labels(labels):
    out = np.full(len(labels), -1, dtype=np.int64)
    seen = {}
    for i, lab in enumerate(labels):
        if lab < 0:
            continue
        if lab not in seen:
            seen[lab] = len(seen)
        out[i] = seen[lab]
    return out


def tight_completion(vectors, K, field, rank_tol=1e-9, tolerance=DEFAULT_TOLERANCE):
    """Append unit-ball vectors in the span so the family becomes K-tight there.

    Returns (coordinates of the completed family in an orthonormal basis of
    the span, basis).
    """
    basis = orthonormal_basis(vectors, rank_tol)
    coords = np.asarray(vectors) @ basis.conj()
    T = rank_one_sum(coords)
    vals, vecs = hermitian_eigh(K * np.eye(basis.shape[1]) - T)
    if vals.size and vals[0] < -tolerance * K:
        raise InvalidInput(f"section is not {K}-Bessel (deficit {vals[0]:.3e})")
    extra = []
    for lam, v in zip(vals, vecs.T):
        if lam <= tolerance * K:
            continue
        copies = int(math.ceil(lam - 1e-12))
        extra.extend([math.sqrt(lam / copies) * v] * copies)
    if extra:
        coords = np.vstack([coords, np.array(extra, dtype=coords.dtype)])
    return coords, basis


@dataclass
class FiniteSectionReport:
    assignments: list
    stabilized: list
    part_counts: list
    max_parts: int


def finite_section_partition(sections, K, tolerance=DEFAULT_TOLERANCE, exhaustive_limit=EXHAUSTIVE_LIMIT):
    """Partition each completed section and compare assignments on common prefixes."""
    if not K > 1:
        raise InvalidInput("tight bound K must exceed 1")
    max_parts = int(math.floor(K / A_CONST))
    assigns, stable, counts = [], [], []
    prev = None
    for sec in sections:
        coords, _ = tight_completion(sec.effective_vectors(), K, sec.field, tolerance=tolerance)
        completed = Frame(sec.field, coords.shape[1], coords)
        res = reduce_tight_frame(completed, tolerance, exhaustive_limit, tight_tolerance=1e-6)
        if len(res.parts) > max_parts:
            raise PartitionFailure(f"{len(res.parts)} parts exceed floor(K/A) = {max_parts}")
        labels = _canonical_labels(res.labels(len(completed))[: len(sec)])
        counts.append(len(res.parts))
        if prev is None:
            stable.append(True)
        else:
            n = min(len(prev), len(labels))
            stable.append(bool(np.array_equal(_canonical_labels(labels[:n]), prev[:n])))
        assigns.append(labels)
        prev = labels
    return FiniteSectionReport(assigns, stable, counts, max_parts)


def subset_tight_frame(frame: Frame, N, tolerance=DEFAULT_TOLERANCE, exhaustive_limit=EXHAUSTIVE_LIMIT):
    """Subset with upper bound at most 1 + 1/N and positive lower bound.

    Parts of (N x_j) are refined until each has upper bound <= 1/N at the
    original scale, then combined greedily until the upper bound reaches 1.
    Returns (sorted indices, FrameBounds).
    """
    if N < 1 or int(N) != N:
        raise InvalidInput("N must be a positive integer")
    y = frame.effective_vectors()
    T = frame_operator(frame)
    lo, hi = extreme_eigenvalues(T)
    if hi - lo > tolerance * hi:
        raise InvalidInput("frame is not tight")
    if not lo > 1.0:
        raise InvalidInput(f"tight bound {lo:.12g} must exceed 1")
    norms = np.sum(np.abs(y) ** 2, axis=1)
    if norms.max() > 1.0 / N ** 2 + tolerance:
        raise InvalidInput("vectors must have norm at most 1/N")
    scaled = Frame(frame.field, frame.dim, N * y)
    if N * N * lo > 1.0:
        parts = list(reduce_tight_frame(scaled, tolerance, exhaustive_limit).parts)
    else:
        parts = [np.arange(len(frame))]
    cap = 1.0 / N
    queue, fine = list(parts), []
    while queue:
        p = queue.pop(0)
        if len(p) <= 1 or bessel_bound(y[p]) <= cap:
            fine.append(np.sort(p))
            continue
        side, _, _ = balanced_split(y[p], cap)
        if side.all() or (~side).all():
            side = np.arange(len(p)) < len(p) // 2
        queue.extend([p[side], p[~side]])
    fine.sort(key=lambda p: int(p[0]))
    d = frame.dim
    tau = 1.0 / (N * N * max(len(frame), 1))
    S = np.zeros((d, d), dtype=y.dtype)
    part_ops = [rank_one_sum(y[p]) for p in fine]
    remaining = list(range(len(fine)))
    chosen = []
    while remaining:
        stack = np.array([S + part_ops[i] for i in remaining])
        ev = np.linalg.eigvalsh(stack)
        feasible = ev[:, -1] <= 1.0 + cap + tolerance
        if not feasible.any():
            break
        # log-det gain spreads mass over all directions before the top eigenvalue hits 1
        score = np.sum(np.log(np.clip(ev, 0.0, None) + tau), axis=1)
        score[~feasible] = -np.inf
        k = int(np.argmax(score))
        chosen.append(remaining.pop(k))
        S = S + part_ops[chosen[-1]]
        s_lo, s_hi = extreme_eigenvalues(S)
        if s_hi >= 1.0 - tolerance and s_lo > tolerance:
            break
    idx = np.sort(np.concatenate([fine[i] for i in chosen])) if chosen else np.zeros(0, dtype=np.int64)
    b = frame_bounds(frame.subframe(idx), tolerance) if len(idx) else FrameBounds(0.0, 0.0, tolerance)
    if b.upper > 1.0 + cap + tolerance or not b.lower > tolerance:
        raise PartitionFailure(f"combined subset bounds ({b.lower:.6g}, {b.upper:.6g}) miss the envelope")
    return idx, b
