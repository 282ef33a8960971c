"""Continuous frames over boxes and atoms: quadrature, epsilon-nets and sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .core import (
    DEFAULT_TOLERANCE,
    Frame,
    FrameBounds,
    extreme_eigenvalues,
    hermitian_eigh,
    operator_bounds,
    psd_power,
    rank_one_sum,
)
from .errors import (
    DiscretizationFailure,
    InvalidInput,
    NotAContinuousFrame,
    QuadratureFailure,
    SamplingFailure,
)
from .scalable import (
    PIPELINE_EPSILON_LIMIT,
    SampledFrame,
    SamplerConfig,
    ScalableFrame,
    sample_scalable,
)

MAX_CELLS = 1 << 20


@dataclass
class Box:
    bounds: np.ndarray          # shape (D, 2)
    density: float = 1.0

    def __post_init__(self):
        b = np.array(self.bounds, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(b)) or np.any(b[:, 1] <= b[:, 0]):
            raise InvalidInput(f"invalid box {self.bounds}")
        if not (self.density >= 0 and math.isfinite(self.density)):
            raise InvalidInput("density must be finite and nonnegative")
        self.bounds = b

    @property
    def ndim(self):
        return self.bounds.shape[0]

    @property
    def mass(self):
        return self.density * float(np.prod(self.bounds[:, 1] - self.bounds[:, 0]))


@dataclass
class Atom:
    t: np.ndarray
    mass: Fraction | float

    def __post_init__(self):
        self.t = np.atleast_1d(np.array(self.t, dtype=float))
        if float(self.mass) < 0 or not math.isfinite(float(self.mass)):
            raise InvalidInput("atom mass must be finite and nonnegative")


@dataclass(eq=False)
class ContinuousFrameModel:
    """Map t -> Psi(t) into coordinates of a finite-dimensional subspace.

    ``evaluator`` takes an (n, D) array of points and returns (n, dim)
    coordinates. ``lipschitz(lo, hi)``, when present, returns for each cell a
    rigorous Lipschitz constant of Psi over the cell.
    """

    field: str
    dim: int
    evaluator: Callable
    boxes: list = field(default_factory=list)
    atoms: list = field(default_factory=list)
    norm_bound: float | None = None
    lipschitz: Callable | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.boxes and not self.atoms:
            raise InvalidInput("model domain is empty")
        nd = {b.ndim for b in self.boxes} | {a.t.shape[0] for a in self.atoms}
        if len(nd) > 1:
            raise InvalidInput("boxes and atoms must share the parameter dimension")

    def evaluate(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.asarray(self.evaluator(pts))
        if out.shape != (pts.shape[0], self.dim):
            raise InvalidInput(f"evaluator returned shape {out.shape}")
        if not np.all(np.isfinite(out)):
            raise InvalidInput("evaluator returned non-finite coordinates")
        return out

    def atom_arrays(self):
        if not self.atoms:
            return np.zeros((0, 1)), np.zeros(0)
        pts = np.array([a.t for a in self.atoms])
        return pts, np.array([float(a.mass) for a in self.atoms])

    def dtype(self):
        return np.complex128 if self.field == "complex" else np.float64


@dataclass
class FrameOperatorMatrix:
    entries: np.ndarray
    error: float = 0.0
    cells: int = 0

    @property
    def dim(self):
        return self.entries.shape[0]


# ---------------------------------------------------------------- quadrature

def _grid_midpoints(bounds, n):
    axes = [lo + (np.arange(n) + 0.5) * (hi - lo) / n for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def _midpoint(model, box, n, chunk=1 << 14):
    pts = _grid_midpoints(box.bounds, n)
    w = box.density * float(np.prod(box.bounds[:, 1] - box.bounds[:, 0])) / len(pts)
    T = np.zeros((model.dim, model.dim), dtype=model.dtype())
    for s in range(0, len(pts), chunk):
        y = model.evaluate(pts[s:s + chunk])
        T += rank_one_sum(y)
    return w * T


def _atom_operator(model):
    pts, masses = model.atom_arrays()
    if len(masses) == 0:
        return np.zeros((model.dim, model.dim), dtype=model.dtype())
    return rank_one_sum(model.evaluate(pts), masses)


def quadrature_frame_operator(model: ContinuousFrameModel, resolution=64, tolerance=1e-9,
                              max_cells=MAX_CELLS):
    """Midpoint rule with dyadic refinement and Richardson extrapolation per box;
    atoms are summed exactly."""
    if resolution < 1:
        raise InvalidInput("resolution must be positive")
    T = _atom_operator(model)
    err, cells = 0.0, 0
    for bi, box in enumerate(model.boxes):
        D = box.ndim
        n = int(resolution)
        coarse = _midpoint(model, box, n)
        fine = _midpoint(model, box, 2 * n)
        prev = (4 * fine - coarse) / 3
        n *= 2
        while True:
            if (2 * n) ** D > max_cells:
                raise QuadratureFailure(f"box {bi}: refinement cap of {max_cells} cells reached",
                                        (prev, fine))
            coarse, fine = fine, _midpoint(model, box, 2 * n)
            n *= 2
            rich = (4 * fine - coarse) / 3
            diff = float(np.max(np.abs(rich - prev)))
            prev = rich
            if diff < tolerance:
                break
        T = T + prev
        err = max(err, diff)
        cells += n ** D
    T = 0.5 * (T + T.conj().T)
    return FrameOperatorMatrix(T, err, cells)


def check_continuous_bounds(model, resolution=64, tolerance=1e-9):
    Q = quadrature_frame_operator(model, resolution, tolerance)
    return operator_bounds(Q.entries, max(tolerance, DEFAULT_TOLERANCE), "quadrature")


# ---------------------------------------------------------------- epsilon nets

@dataclass
class DomainPartitionCell:
    lo: np.ndarray | None
    hi: np.ndarray | None
    point: np.ndarray
    mass: Fraction
    radius: float
    budget: float
    value: np.ndarray
    rigorous: bool = True
    atom: bool = False


def _split_longest(lo, hi):
    ax = np.argmax(hi - lo, axis=1)
    rows = np.arange(len(lo))
    mid = 0.5 * (lo[rows, ax] + hi[rows, ax])
    lo2, hi1 = lo.copy(), hi.copy()
    hi1[rows, ax] = mid
    lo2[rows, ax] = mid
    return np.concatenate([lo, lo2]), np.concatenate([hi1, hi])


def _unit_mass_pieces(box):
    lo, hi = box.bounds[None, :, 0].copy(), box.bounds[None, :, 1].copy()
    while box.density * float(np.prod(hi[0] - lo[0])) > 1.0:
        lo, hi = _split_longest(lo, hi)
    order = np.lexsort(lo.T[::-1])
    return lo[order], hi[order]


class _RadiusOracle:
    """Bound on the diameter of Psi over a cell.

    With a Lipschitz callback the bound is L * diam(cell) and rigorous;
    otherwise Psi is probed on a small grid and the spread is scaled by a
    safety factor (not rigorous).
    """

    def __init__(self, model, probes=5, safety=4.0):
        self.model = model
        self.probes = probes
        self.safety = safety
        self.rigorous = model.lipschitz is not None

    def __call__(self, lo, hi):
        diam = np.linalg.norm(hi - lo, axis=1)
        if self.model.lipschitz is not None:
            return np.asarray(self.model.lipschitz(lo, hi), dtype=float) * diam
        D = lo.shape[1]
        grid = np.stack(np.meshgrid(*[np.linspace(0, 1, self.probes)] * D, indexing="ij"), -1).reshape(-1, D)
        centers = self.model.evaluate(0.5 * (lo + hi))
        out = np.zeros(len(lo))
        for g in grid:
            v = self.model.evaluate(lo + g * (hi - lo))
            out = np.maximum(out, np.linalg.norm(v - centers, axis=1))
        return 2.0 * self.safety * out


def _fraction_mass(density, lo, hi):
    m = Fraction(density)
    for a, b in zip(lo, hi):
        m *= Fraction(float(b)) - Fraction(float(a))
    return m


def epsilon_net_discretize(model: ContinuousFrameModel, epsilon, budget="adaptive", max_cells=MAX_CELLS,
                           probes=5, safety=4.0):
    """Partition the domain into cells on which Psi varies by less than a budget.

    ``budget="dyadic"`` gives the j-th unit-mass piece the budget eps 2^{-j};
    ``budget="adaptive"`` refines the cells with the largest mass * radius
    until the total is below eps and every radius is below eps. Atoms are
    their own cells with radius 0.
    """
    if not epsilon > 0:
        raise InvalidInput("epsilon must be positive")
    if budget not in ("dyadic", "adaptive"):
        raise InvalidInput(f"unknown budget scheme {budget!r}")
    oracle = _RadiusOracle(model, probes, safety)
    cells = []
    pts, masses = model.atom_arrays()
    if len(masses):
        vals = model.evaluate(pts)
        for a, p, v in zip(model.atoms, pts, vals):
            m = a.mass if isinstance(a.mass, Fraction) else Fraction(float(a.mass))
            cells.append(DomainPartitionCell(None, None, p, m, 0.0, 0.0, v, True, True))
    box_cells = []
    piece_no = 0
    for bi, box in enumerate(model.boxes):
        lo, hi = _unit_mass_pieces(box)
        dens = np.full(len(lo), box.density)
        if budget == "dyadic":
            for k in range(len(lo)):
                piece_no += 1
                beta = epsilon * 2.0 ** -piece_no
                if beta == 0.0:
                    raise DiscretizationFailure(f"box {bi} piece {k}: budget underflows")
                l, h = lo[k:k + 1], hi[k:k + 1]
                r = oracle(l, h)
                done_l, done_h, done_r = [], [], []
                while len(l):
                    ok = r < beta
                    done_l.append(l[ok]); done_h.append(h[ok]); done_r.append(r[ok])
                    l, h = l[~ok], h[~ok]
                    if len(l) == 0:
                        break
                    if sum(map(len, done_l)) + 2 * len(l) + len(box_cells) > max_cells:
                        raise DiscretizationFailure(
                            f"box {bi} piece {k} [{l[0]}, {h[0]}]: refinement cap exceeded "
                            f"for budget {beta:.3e}")
                    l, h = _split_longest(l, h)
                    r = oracle(l, h)
                for a, b, c in zip(np.concatenate(done_l), np.concatenate(done_h), np.concatenate(done_r)):
                    box_cells.append((a, b, c, beta, box.density))
        else:
            box_cells.extend((a, b, None, None, box.density) for a, b in zip(lo, hi))
    if budget == "adaptive" and box_cells:
        lo = np.array([c[0] for c in box_cells])
        hi = np.array([c[1] for c in box_cells])
        dens = np.array([c[4] for c in box_cells])
        r = oracle(lo, hi)
        while True:
            mass = dens * np.prod(hi - lo, axis=1)
            contrib = mass * r
            atom_part = 0.0
            if contrib.sum() + atom_part < epsilon * (1 - 1e-9) and r.max() < epsilon:
                break
            # a split roughly halves a cell's contribution, so split the largest
            # cells until their contributions cover twice the excess
            excess = contrib.sum() - 0.9 * epsilon
            order = np.argsort(-contrib, kind="stable")
            need = int(np.searchsorted(np.cumsum(contrib[order]), 2.0 * excess)) + 1
            split = r >= epsilon
            split[order[:max(need, 0)]] = True
            if len(lo) + int(split.sum()) > max_cells:
                k = int(np.argmax(contrib))
                raise DiscretizationFailure(
                    f"cell [{lo[k]}, {hi[k]}] still contributes {contrib[k]:.3e}; refinement cap exceeded")
            nl, nh = _split_longest(lo[split], hi[split])
            nd = np.concatenate([dens[split], dens[split]])
            nr = oracle(nl, nh)
            lo = np.concatenate([lo[~split], nl])
            hi = np.concatenate([hi[~split], nh])
            dens = np.concatenate([dens[~split], nd])
            r = np.concatenate([r[~split], nr])
        order = np.lexsort(lo.T[::-1])
        lo, hi, dens, r = lo[order], hi[order], dens[order], r[order]
        mass_total = dens * np.prod(hi - lo, axis=1)
        scale = epsilon / max(mass_total.sum(), 1.0)
        box_cells = [(a, b, c, scale, dd) for a, b, c, dd in zip(lo, hi, r, dens)]
    if box_cells:
        lo = np.array([c[0] for c in box_cells])
        hi = np.array([c[1] for c in box_cells])
        values = np.concatenate([model.evaluate(0.5 * (lo[s:s + 65536] + hi[s:s + 65536]))
                                 for s in range(0, len(lo), 65536)])
        for (a, b, rad, beta, dd), v in zip(box_cells, values):
            cells.append(DomainPartitionCell(a, b, 0.5 * (a + b), _fraction_mass(dd, a, b), float(rad),
                                             float(beta), v, oracle.rigorous, False))
    defect = l1_defect(cells)
    if not defect < epsilon:
        raise DiscretizationFailure(f"L1 defect {defect:.3e} is not below {epsilon:.3e}")
    return cells


def l1_defect(cells):
    """sum_i mass_i * radius_i, the L1 distance between Psi and its cell-wise constant copy."""
    return float(sum(float(c.mass) * c.radius for c in cells))


def discretize_to_weighted_frame(cells, field, dim, envelope=None, tolerance=DEFAULT_TOLERANCE):
    """Frame (Psi(t_i)) with weights mu(X_i); optionally check bounds within 1 -+ envelope."""
    if not cells:
        raise InvalidInput("no cells")
    vecs = np.array([c.value for c in cells])
    w = np.array([float(c.mass) for c in cells])
    frame = Frame(field, dim, vecs, w)
    if envelope is not None:
        lo, hi = extreme_eigenvalues(rank_one_sum(vecs, w))
        if lo < 1 - envelope - tolerance or hi > 1 + envelope + tolerance:
            raise DiscretizationFailure(f"weighted frame bounds ({lo:.6g}, {hi:.6g}) leave 1 -+ {envelope:.3e}")
    return frame


# ---------------------------------------------------------------- rationalization and combining

def rationalize_masses(masses, denominator):
    """Multiples of 1/denominator whose partial sums track the exact partial sums.

    Rounding the cumulative sums (not the individual masses) keeps the error
    of every run of consecutive cells below 1/denominator.
    """
    cum = Fraction(0)
    prev = 0
    out = []
    for m in masses:
        cum += m if isinstance(m, Fraction) else Fraction(float(m))
        k = math.floor(cum * denominator + Fraction(1, 2))
        out.append(Fraction(k - prev, denominator))
        prev = k
    return out


def combine_until_unit_upper(vectors, multiplicities, cap, target=1.0, tolerance=DEFAULT_TOLERANCE):
    """Greedily add sampled copies until the upper bound reaches ``target``.

    Each step adds the copy with the largest log-determinant gain among those
    keeping the upper bound at most ``cap``; it stops once the upper bound is
    at least ``target`` and the lower bound is positive.
    """
    y = np.asarray(vectors)
    left = np.array(multiplicities, dtype=np.int64)
    d = y.shape[1]
    S = np.zeros((d, d), dtype=y.dtype)
    taken = np.zeros(len(y), dtype=np.int64)
    tau = 1e-3 / d
    while True:
        cand = np.flatnonzero(left > 0)
        if len(cand) == 0:
            break
        stack = S[None] + np.einsum("ja,jb->jab", y[cand], y[cand].conj())
        ev = np.linalg.eigvalsh(stack)
        ok = ev[:, -1] <= cap + tolerance
        if not ok.any():
            break
        score = np.sum(np.log(np.clip(ev, 0.0, None) + tau), axis=1)
        score[~ok] = -np.inf
        j = cand[int(np.argmax(score))]
        S = S + np.outer(y[j], y[j].conj())
        taken[j] += 1
        left[j] -= 1
        lo, hi = extreme_eigenvalues(S)
        if hi >= target and lo > tolerance:
            break
    return taken


# ---------------------------------------------------------------- pipelines

def _model_norm_sup(model, resolution=64):
    """Largest ||Psi|| seen on atoms and a midpoint grid (a probe, not a bound)."""
    sup = 0.0
    pts, _ = model.atom_arrays()
    if len(pts):
        sup = float(np.max(np.linalg.norm(model.evaluate(pts), axis=1)))
    for box in model.boxes:
        n = max(2, int(round((1 << 14) ** (1.0 / box.ndim))))
        y = model.evaluate(_grid_midpoints(box.bounds, n))
        sup = max(sup, float(np.max(np.linalg.norm(y, axis=1))))
    return sup


def _scalable_from_cells(cells, field, dim, target_eps, max_denominator, tolerance):
    masses = [c.mass for c in cells]
    exact_den = 1
    for m in masses:
        exact_den = math.lcm(exact_den, m.denominator)
        if exact_den > max_denominator:
            break
    vecs = np.array([c.value for c in cells])
    if exact_den <= max_denominator:
        tries = [(exact_den, masses)]
    else:
        tries = []
        den = 2
        while den <= max_denominator:
            tries.append((den, None))
            den *= 2
    last = None
    for den, a_sq in tries:
        a_sq = a_sq if a_sq is not None else rationalize_masses(masses, den)
        keep = np.array([q > 0 for q in a_sq])
        if not keep.any():
            continue
        sf = ScalableFrame.certify(Frame(field, dim, vecs[keep]), [q for q, k in zip(a_sq, keep) if k],
                                   tolerance, denominator_cap=max(den, 1))
        last = (sf, np.flatnonzero(keep), den)
        if sf.epsilon <= target_eps:
            return last
    if last is None:
        raise SamplingFailure("all masses rounded to zero")
    raise SamplingFailure(f"rational masses reach epsilon {last[0].epsilon:.3e} > {target_eps:.3e} "
                          f"at denominator {last[2]}")


def discretize_parseval(model: ContinuousFrameModel, epsilon, net_epsilon=None, budget="adaptive",
                        resolution=64, quad_tolerance=1e-9, parseval_tolerance=1.0 / 512,
                        max_denominator=4096, sampler=None, combine=True, tolerance=DEFAULT_TOLERANCE,
                        max_cells=MAX_CELLS):
    """Sample a (near-)Parseval continuous frame into a discrete frame.

    epsilon-net -> weighted frame -> rational masses -> block sampler; with
    ``combine`` the sampled copies are then thinned greedily to an upper bound
    just above 1 and at most 2(1 + epsilon) times the quadrature upper bound.
    """
    if not epsilon > 0:
        raise InvalidInput("epsilon must be positive")
    Q = quadrature_frame_operator(model, resolution, quad_tolerance)
    qlo, qhi = extreme_eigenvalues(Q.entries)
    eta = max(1.0 - qlo, qhi - 1.0, 0.0)
    if eta > parseval_tolerance:
        raise InvalidInput(f"model is not Parseval within {parseval_tolerance:.3e} (defect {eta:.3e})")
    rho = model.norm_bound if model.norm_bound is not None else _model_norm_sup(model)
    if rho > 1.0 + tolerance:
        raise InvalidInput(f"norm bound {rho:.6g} exceeds 1")
    net_eps = epsilon / 3.0 if net_epsilon is None else net_epsilon
    cells = epsilon_net_discretize(model, net_eps, budget, max_cells)
    delta1 = l1_defect(cells)
    env0 = eta + 2.0 * rho * delta1 + Q.error * model.dim
    weighted = discretize_to_weighted_frame(cells, model.field, model.dim, env0, tolerance)
    wlo, whi = extreme_eigenvalues(rank_one_sum(weighted.vectors, weighted.weights))
    target = min(PIPELINE_EPSILON_LIMIT / 2, max(2 * max(1 - wlo, whi - 1), tolerance))
    sf, keep, den = _scalable_from_cells(cells, model.field, model.dim, target, max_denominator, tolerance)
    sampled = sample_scalable(sf, sampler or SamplerConfig(tolerance=tolerance))
    cell_idx = keep[sampled.indices]
    mult = sampled.multiplicities
    info = {"quadrature_bounds": [qlo, qhi], "quadrature_defect": eta, "net_epsilon": net_eps,
            "l1_defect": delta1, "cells": len(cells), "weighted_bounds": [wlo, whi],
            "weighted_envelope": env0, "mass_denominator": den, "sampler_epsilon": sf.epsilon,
            "pipeline_bounds": sampled.bounds.as_pair(), "rigorous_radius": all(c.rigorous for c in cells)}
    if combine:
        cap = 2.0 * (1.0 + epsilon) * qhi
        vecs = np.array([cells[i].value for i in cell_idx])
        taken = combine_until_unit_upper(vecs, mult, cap, 1.0, tolerance)
        sel = taken > 0
        cell_idx, mult = cell_idx[sel], taken[sel]
    vecs = np.array([cells[i].value for i in cell_idx])
    lo, hi = extreme_eigenvalues(rank_one_sum(vecs, mult.astype(float)))
    if not lo > tolerance:
        raise DiscretizationFailure(f"sampled family is not a frame (lower bound {lo:.3e})")
    if combine and hi > 2.0 * (1.0 + epsilon) * qhi + 1e-6:
        raise DiscretizationFailure(f"upper bound {hi:.6g} exceeds 2(1+eps) times {qhi:.6g}")
    bounds = FrameBounds(lo, hi, tolerance)
    points = np.array([cells[i].point for i in cell_idx])
    info["sampler_envelope"] = sampled.envelope
    return SampledFrame(cell_idx, mult, bounds, sf.epsilon, sampled.records, info, sampled.decomposition,
                        points, {"cells": cells})


def _transformed_model(model, S, C):
    Sm = S / C

    def evaluator(pts):
        return model.evaluate(pts) @ Sm.T

    lip = None
    if model.lipschitz is not None:
        norm = float(np.linalg.norm(Sm, 2))
        lip = lambda lo, hi: norm * np.asarray(model.lipschitz(lo, hi))
    boxes = [Box(b.bounds, b.density * C * C) for b in model.boxes]
    atoms = [Atom(a.t, float(a.mass) * C * C) for a in model.atoms]
    return ContinuousFrameModel(model.field, model.dim, evaluator, boxes, atoms, 1.0, lip,
                                model.name + "-parseval", dict(model.params))


def discretize_general(model: ContinuousFrameModel, epsilon=0.1, resolution=64, quad_tolerance=1e-9,
                       tolerance=DEFAULT_TOLERANCE, **kw):
    """Sample a bounded continuous frame by sampling T^{-1/2} Psi / C with measure C^2 mu.

    The returned points and multiplicities refer to the original Psi.
    """
    Q = quadrature_frame_operator(model, resolution, quad_tolerance)
    lo, hi = extreme_eigenvalues(Q.entries)
    if lo <= tolerance * max(hi, 1.0):
        raise NotAContinuousFrame(f"quadrature lower bound {lo:.3e} is not positive")
    S = psd_power(Q.entries, -0.5)
    pts, _ = model.atom_arrays()
    C = 0.0
    if len(pts):
        C = float(np.max(np.linalg.norm(model.evaluate(pts) @ S.T, axis=1)))
    if model.boxes:
        if model.norm_bound is None:
            raise InvalidInput("box domains need a finite norm_bound")
        C = max(C, float(np.linalg.norm(S, 2)) * model.norm_bound)
    if not C > 0:
        raise NotAContinuousFrame("transformed frame vanishes")
    parseval = _transformed_model(model, S, C)
    res = discretize_parseval(parseval, epsilon, resolution=resolution, quad_tolerance=quad_tolerance,
                              tolerance=tolerance, **kw)
    vecs = model.evaluate(res.points)
    olo, ohi = extreme_eigenvalues(rank_one_sum(vecs, res.multiplicities.astype(float)))
    if not olo > tolerance:
        raise DiscretizationFailure(f"samples of the original frame have lower bound {olo:.3e}")
    info = dict(res.envelope)
    info.update({"C": C, "parseval_bounds": res.bounds.as_pair(), "original_quadrature_bounds": [lo, hi]})
    return SampledFrame(res.indices, res.multiplicities, FrameBounds(olo, ohi, tolerance), res.epsilon,
                        res.records, info, res.decomposition, res.points, res.extra)


def reverse_direction_measure(points, multiplicities, psi, field, dim, tolerance=DEFAULT_TOLERANCE):
    """Atomic model with mass n_t at every sampled point t (repeated points merged)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 1 and np.ndim(points) == 1 and len(np.atleast_1d(multiplicities)) > 1:
        pts = pts.T
    mult = np.asarray(multiplicities, dtype=np.int64).reshape(-1)
    if len(mult) != len(pts) or np.any(mult < 0):
        raise InvalidInput("one nonnegative multiplicity per point is required")
    merged = {}
    order = []
    for p, m in zip(pts, mult):
        key = tuple(float(v) for v in p)
        if key not in merged:
            merged[key] = 0
            order.append(key)
        merged[key] += int(m)
    atoms = [Atom(np.array(k), Fraction(merged[k])) for k in order if merged[k] > 0]
    model = ContinuousFrameModel(field, dim, psi, [], atoms, name="sampled")
    T = _atom_operator(model)
    lo, hi = extreme_eigenvalues(T)
    if not lo > tolerance * max(hi, 1.0):
        raise InvalidInput(f"samples do not form a frame (lower bound {lo:.3e})")
    return model


# ---------------------------------------------------------------- generators

def atomic_from_frame(frame: Frame):
    vecs = frame.vectors
    w = frame.weight_array

    def evaluator(pts):
        return vecs[np.rint(pts[:, 0]).astype(np.int64)]

    atoms = [Atom(np.array([float(j)]), float(w[j])) for j in range(len(frame))]
    norm = float(np.max(np.linalg.norm(vecs, axis=1))) if len(frame) else 0.0
    model = ContinuousFrameModel(frame.field, frame.dim, evaluator, [], atoms, norm, None, "atomic",
                                 {"frame": frame})
    return model


def unbounded_counterexample(d):
    """Atoms n = 1..d with mass 1/n and Psi(n) = sqrt(n) e_n (Parseval, unbounded as d grows)."""
    if d < 1:
        raise InvalidInput("d must be positive")

    def evaluator(pts):
        n = np.rint(pts[:, 0]).astype(np.int64)
        if np.any((n < 1) | (n > d)):
            raise InvalidInput("atom index out of range")
        out = np.zeros((len(n), d))
        out[np.arange(len(n)), n - 1] = np.sqrt(n)
        return out

    atoms = [Atom(np.array([float(n)]), Fraction(1, n)) for n in range(1, d + 1)]
    return ContinuousFrameModel("real", d, evaluator, [], atoms, None, None, "unbounded", {"d": d})


def spanning_sampling_max_norm(model, tolerance=1e-9):
    """Smallest possible max ||Psi(t)|| over samplings of the atoms that span the space.

    Atoms are added in increasing norm while they raise the rank; the last
    norm needed is optimal by the matroid greedy property.
    """
    pts, _ = model.atom_arrays()
    vecs = model.evaluate(pts)
    norms = np.linalg.norm(vecs, axis=1)
    order = np.argsort(norms, kind="stable")
    basis = np.zeros((0, model.dim), dtype=vecs.dtype)
    need = 0.0
    for j in order:
        cand = np.vstack([basis, vecs[j]])
        if np.linalg.matrix_rank(cand, tol=tolerance) > basis.shape[0]:
            basis = cand
            need = float(norms[j])
            if basis.shape[0] == model.dim:
                return need
    raise InvalidInput("atoms do not span the space")


def _hull(intervals):
    iv = np.array(intervals, dtype=float).reshape(-1, 2)
    if np.any(iv[:, 1] <= iv[:, 0]):
        raise InvalidInput("intervals must have positive length")
    order = np.argsort(iv[:, 0])
    iv = iv[order]
    if np.any(iv[1:, 0] < iv[:-1, 1]):
        raise InvalidInput("intervals must be disjoint")
    return iv


def _interval_transform(iv, omega):
    """int_J exp(2 pi i omega t) dt for an array of frequencies."""
    omega = np.asarray(omega, dtype=float)
    out = np.zeros(omega.shape, dtype=complex)
    for a, b in iv:
        out += (b - a) * np.exp(1j * np.pi * omega * (a + b)) * np.sinc(omega * (b - a))
    return out


def _interval_transform_derivative(iv, omega):
    """d/d omega of the transform: int_J 2 pi i t exp(2 pi i omega t) dt."""
    omega = np.asarray(omega, dtype=float)
    out = np.zeros(omega.shape, dtype=complex)
    for a, b in iv:
        small = np.abs(omega) * max(abs(a), abs(b)) < 1e-3
        w = np.where(small, 1.0, omega)
        z = 2j * np.pi * w
        eb, ea = np.exp(z * b), np.exp(z * a)
        # int t e^{zt} = e^{zt} (t/z - 1/z^2)
        val = 2j * np.pi * ((eb * (b / z - 1 / z ** 2)) - (ea * (a / z - 1 / z ** 2)))
        # Taylor series near 0: sum_k (2 pi i omega)^k / k! * 2 pi i (b^{k+2}-a^{k+2})/(k+2)
        ser = np.zeros(omega.shape, dtype=complex)
        zz = 2j * np.pi * omega
        term = np.ones(omega.shape, dtype=complex)
        for k in range(8):
            ser += term * 2j * np.pi * (b ** (k + 2) - a ** (k + 2)) / (k + 2)
            term = term * zz / (k + 1)
        out += np.where(small, ser, val)
    return out


def exponential_on_set(intervals, degree=3, domain="box", extent=2048.0, lattice_extent=None):
    """Psi(x) = exp(2 pi i x t) restricted to J, projected on trig polynomials.

    The subspace is spanned by exp(2 pi i n t / |hull(J)|), |n| <= degree,
    orthonormalized in L2(J). ``domain="box"`` integrates x over
    [-extent, extent]; ``domain="lattice"`` uses atoms n/|hull| with mass
    1/|hull| for |n| <= lattice_extent.
    """
    iv = _hull(intervals)
    span = float(iv[-1, 1] - iv[0, 0])
    freqs = np.arange(-degree, degree + 1) / span
    G = _interval_transform(iv, freqs[:, None] - freqs[None, :])
    G = 0.5 * (G + G.conj().T)
    vals = np.linalg.eigvalsh(G)
    if vals[0] <= 1e-12 * vals[-1]:
        raise InvalidInput("trig monomials are numerically dependent on J")
    Wc = psd_power(G, -0.5)   # conj(W) with W = conj(G^{-1/2})
    length = float(np.sum(iv[:, 1] - iv[:, 0]))
    fourth = float(np.sum((iv[:, 1] ** 5 - iv[:, 0] ** 5) / 5.0))
    second_bound = 4 * np.pi ** 2 * math.sqrt(fourth)

    def evaluator(pts):
        x = pts[:, 0]
        return _interval_transform(iv, x[:, None] - freqs[None, :]) @ Wc

    def derivative(x):
        return _interval_transform_derivative(iv, x[:, None] - freqs[None, :]) @ Wc

    # per-coefficient bounds on |d^2/dw^2 int_J e^{2 pi i w t} dt|: near zero
    # 4 pi^2 int t^2, and by parts 2 pi (sum a^2 + b^2 + int 2|t|) / |w|
    near = 4 * np.pi ** 2 * float(np.sum((iv[:, 1] ** 3 - iv[:, 0] ** 3) / 3.0))
    far = 2 * np.pi * float(np.sum(iv[:, 0] ** 2 + iv[:, 1] ** 2
                                   + np.abs(np.sign(iv[:, 1]) * iv[:, 1] ** 2 - np.sign(iv[:, 0]) * iv[:, 0] ** 2)))
    w_norm = float(np.linalg.norm(Wc, 2))

    def lipschitz(lo, hi):
        mid = 0.5 * (lo[:, 0] + hi[:, 0])
        w = hi[:, 0] - lo[:, 0]
        dist = np.maximum(np.maximum(lo[:, :1] - freqs[None, :], freqs[None, :] - hi[:, :1]), 0.0)
        with np.errstate(divide="ignore"):
            coef = np.minimum(near, np.where(dist > 0, far / np.where(dist > 0, dist, 1.0), near))
        second = np.minimum(second_bound, w_norm * np.linalg.norm(coef, axis=1))
        return np.linalg.norm(derivative(mid), axis=1) + 0.5 * w * second

    params = {"intervals": iv.tolist(), "degree": degree, "domain": domain, "extent": extent,
              "lattice_extent": lattice_extent}
    if domain == "box":
        boxes, atoms = [Box([[-extent, extent]], 1.0)], []
    elif domain == "lattice":
        n_max = degree if lattice_extent is None else lattice_extent
        boxes = []
        atoms = [Atom(np.array([n / span]), Fraction(1) / Fraction(span).limit_denominator(10 ** 6))
                 for n in range(-n_max, n_max + 1)]
    else:
        raise InvalidInput(f"unknown domain {domain!r}")
    model = ContinuousFrameModel("complex", len(freqs), evaluator, boxes, atoms, math.sqrt(length),
                                 lipschitz, "exponential", params)
    model.notes["derivative"] = derivative
    return model


def gaussian_window(x):
    return 2 ** 0.25 * np.exp(-np.pi * x ** 2)


def hermite_basis(x, count):
    """Hermite functions for the exp(2 pi i) Fourier convention, orthonormalized on the grid."""
    dx = x[1] - x[0]
    s = math.sqrt(2 * math.pi) * x
    h = [np.exp(-np.pi * x ** 2), 2 * s * np.exp(-np.pi * x ** 2)]
    for k in range(2, count):
        h.append(2 * s * h[-1] - 2 * (k - 1) * h[-2])
    H = np.array(h[:count]).T
    Qm, _ = np.linalg.qr(H * math.sqrt(dx))
    return Qm / math.sqrt(dx)


def gabor_stft(window="gaussian", box=((-3.0, 3.0), (-3.0, 3.0)), degree=4, x_extent=8.0, x_points=1601):
    """Psi(a, b) = M_b T_a g projected on the first ``degree`` Hermite functions.

    The window and the Hermite functions are sampled on a uniform grid over
    [-x_extent, x_extent]; the integral over (a, b) is truncated to ``box``.
    The tight bound is ||g||^2, and the truncation defect is the distance of
    the quadrature bounds from it.
    """
    x = np.linspace(-x_extent, x_extent, x_points)
    dx = x[1] - x[0]
    g = gaussian_window if window == "gaussian" else window
    if not callable(g):
        raise InvalidInput("window must be 'gaussian' or a callable")
    gx = np.asarray(g(x), dtype=complex)
    gnorm_sq = float(np.sum(np.abs(gx) ** 2) * dx)
    if not gnorm_sq > 0:
        raise InvalidInput("window must be non-zero")
    Hc = hermite_basis(x, degree).conj() * dx

    def evaluator(pts, chunk=1024):
        out = np.zeros((len(pts), degree), dtype=complex)
        for s in range(0, len(pts), chunk):
            a = pts[s:s + chunk, 0]
            b = pts[s:s + chunk, 1]
            vals = np.asarray(g(x[None, :] - a[:, None]), dtype=complex) * np.exp(2j * np.pi * b[:, None] * x[None, :])
            out[s:s + chunk] = vals @ Hc
        return out

    params = {"window": window if isinstance(window, str) else "custom", "box": [list(b) for b in box],
              "degree": degree, "x_extent": x_extent, "x_points": x_points}
    model = ContinuousFrameModel("complex", degree, evaluator, [Box(box, 1.0)], [], math.sqrt(gnorm_sq),
                                 None, "gabor", params)
    model.notes["window_norm_sq"] = gnorm_sq
    return model
