"""Frames, frame operators and spectral frame bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotAFrame, NumericalFailure

DEFAULT_TOLERANCE = 1e-8
FIELDS = ("real", "complex")


def _dtype(field):
    return np.complex128 if field == "complex" else np.float64


@dataclass(frozen=True, eq=False)
class Frame:
    """Finite indexed family of vectors with optional measure weights.

    Rows of ``vectors`` are the frame vectors. ``weights`` are masses and
    enter the frame operator linearly (amplitude c corresponds to weight c**2).
    """

    field: str
    dim: int
    vectors: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.field not in FIELDS:
            raise InvalidInput(f"field must be one of {FIELDS}, got {self.field!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidInput(f"dim must be a positive integer, got {self.dim!r}")
        vecs = np.asarray(self.vectors)
        if vecs.size == 0:
            vecs = np.zeros((0, self.dim))
        if vecs.ndim != 2 or vecs.shape[1] != self.dim:
            raise InvalidInput(f"vectors must have shape (M, {self.dim}), got {vecs.shape}")
        if self.field == "real" and np.iscomplexobj(vecs):
            if np.any(vecs.imag != 0):
                raise InvalidInput("complex coordinates in a real frame")
            vecs = vecs.real
        vecs = np.array(vecs, dtype=_dtype(self.field))
        if not np.all(np.isfinite(vecs)):
            raise InvalidInput("non-finite coordinate in frame")
        vecs.setflags(write=False)
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "vectors", vecs)
        if self.weights is not None:
            w = np.array(self.weights, dtype=np.float64).reshape(-1)
            if w.shape[0] != vecs.shape[0]:
                raise InvalidInput("weights and vectors differ in length")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise InvalidInput("weights must be finite and nonnegative")
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.vectors.shape[0]

    @classmethod
    def from_vectors(cls, vectors, field=None, weights=None):
        vecs = np.asarray(vectors)
        if vecs.ndim != 2:
            raise InvalidInput("vectors must be a 2-d array")
        if field is None:
            raise InvalidInput("field must be declared explicitly")
        return cls(field, vecs.shape[1], vecs, weights)

    @property
    def weight_array(self):
        if self.weights is None:
            return np.ones(len(self))
        return self.weights

    def effective_vectors(self):
        """Vectors sqrt(w_j) x_j, which carry the weights as amplitudes."""
        if self.weights is None:
            return self.vectors
        return self.vectors * np.sqrt(self.weights)[:, None]

    def weighted_norms_sq(self):
        return self.weight_array * np.sum(np.abs(self.vectors) ** 2, axis=1)

    def subframe(self, indices):
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        w = None if self.weights is None else self.weights[idx]
        return Frame(self.field, self.dim, self.vectors[idx], w)

    def with_vectors(self, vectors):
        return Frame(self.field, self.dim, vectors, self.weights)


@dataclass(frozen=True)
class FrameBounds:
    lower: float
    upper: float
    tolerance: float = DEFAULT_TOLERANCE
    method: str = "eigen"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InvalidInput("tolerance must be positive")
        if self.method not in ("eigen", "rayleigh-probe", "quadrature"):
            raise InvalidInput(f"unknown bounds method {self.method!r}")
        if self.lower < 0 or self.lower > self.upper:
            raise InvalidInput(f"invalid bounds ({self.lower}, {self.upper})")

    def as_pair(self):
        return [self.lower, self.upper]


def rank_one_sum(vectors, weights=None):
    """Return sum_j w_j x_j x_j^* for the rows x_j of ``vectors``."""
    vecs = np.asarray(vectors)
    left = vecs.T if weights is None else vecs.T * weights
    return left @ vecs.conj()


def hermitian_eigvalsh(matrix):
    try:
        return np.linalg.eigvalsh(matrix)
    except np.linalg.LinAlgError as exc:
        resid = float(np.linalg.norm(matrix - matrix.conj().T))
        raise NumericalFailure(f"eigensolver failed: {exc}", residual=resid) from exc


def hermitian_eigh(matrix):
    try:
        return np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        resid = float(np.linalg.norm(matrix - matrix.conj().T))
        raise NumericalFailure(f"eigensolver failed: {exc}", residual=resid) from exc


def extreme_eigenvalues(matrix):
    """(lambda_min, lambda_max) of a self-adjoint matrix; (0, 0) for size zero."""
    if matrix.shape[0] == 0:
        return 0.0, 0.0
    ev = hermitian_eigvalsh(matrix)
    return float(ev[0]), float(ev[-1])


def batched_extremes(stack):
    """Extreme eigenvalues of a stack of self-adjoint matrices."""
    try:
        ev = np.linalg.eigvalsh(stack)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"batched eigensolver failed: {exc}") from exc
    return ev[..., 0], ev[..., -1]


def psd_power(matrix, power, floor=0.0):
    """Matrix power of a PSD matrix via its eigendecomposition."""
    vals, vecs = hermitian_eigh(matrix)
    if power < 0 and vals[0] <= floor:
        raise NotAFrame(f"operator is not invertible (lambda_min={vals[0]:.3e})")
    vals = np.clip(vals, 0.0, None)
    return (vecs * vals ** power) @ vecs.conj().T


def frame_operator(frame: Frame):
    """Self-adjoint d x d matrix sum_j w_j x_j x_j^*."""
    if len(frame) == 0:
        raise InvalidInput("frame operator of an empty frame")
    T = rank_one_sum(frame.vectors, frame.weights)
    return 0.5 * (T + T.conj().T)


def operator_bounds(T, tolerance=DEFAULT_TOLERANCE, method="eigen"):
    lo, hi = extreme_eigenvalues(T)
    lo = max(lo, 0.0)
    return FrameBounds(lo, max(hi, lo), tolerance, method)


def frame_bounds(frame: Frame, tolerance=DEFAULT_TOLERANCE):
    """Eigen bounds (lambda_min, lambda_max) of the frame operator."""
    return operator_bounds(frame_operator(frame), tolerance)


def bessel_bound(vectors, weights=None):
    """Largest eigenvalue of the frame operator; 0 for an empty family."""
    vecs = np.asarray(vectors)
    if vecs.shape[0] == 0:
        return 0.0
    return max(extreme_eigenvalues(rank_one_sum(vecs, weights))[1], 0.0)


def is_parseval(frame, tolerance=DEFAULT_TOLERANCE):
    b = frame_bounds(frame, tolerance)
    return abs(b.lower - 1.0) <= tolerance and abs(b.upper - 1.0) <= tolerance


def parseval_normalize(frame: Frame, tolerance=DEFAULT_TOLERANCE):
    """Apply T^{-1/2} to every vector; the result is Parseval."""
    T = frame_operator(frame)
    lo, hi = extreme_eigenvalues(T)
    if lo <= tolerance * max(hi, 1.0):
        raise NotAFrame(f"lower frame bound {lo:.3e} is not positive")
    S = psd_power(T, -0.5)
    return frame.with_vectors(frame.vectors @ S.T)


def transformed_bounds(frame: Frame, operator, tolerance=DEFAULT_TOLERANCE):
    """Bounds (||T^{-1}||^{-2}, ||T||^2) for the frame (T x_j) of a Parseval frame."""
    T = np.asarray(operator, dtype=_dtype(frame.field))
    if T.shape != (frame.dim, frame.dim):
        raise InvalidInput("operator shape does not match frame dimension")
    scale = max(np.max(np.abs(T)), 1.0)
    if np.max(np.abs(T - T.conj().T)) > 1e-10 * scale:
        raise InvalidInput("operator is not self-adjoint")
    lo, hi = extreme_eigenvalues(T)
    if lo <= tolerance * max(hi, 1.0):
        raise InvalidInput(f"operator is not positive invertible (lambda_min={lo:.3e})")
    if not is_parseval(frame, tolerance):
        raise InvalidInput("frame is not Parseval within tolerance")
    return FrameBounds(lo ** 2, hi ** 2, tolerance, "eigen")


def random_unit_vectors(count, dim, field, rng):
    x = rng.standard_normal((count, dim))
    if field == "complex":
        x = x + 1j * rng.standard_normal((count, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def probe_energies(frame: Frame, probes):
    """sum_j w_j |<x, x_j>|^2 for every row x of ``probes``."""
    inner = np.asarray(probes) @ frame.vectors.conj().T
    return (np.abs(inner) ** 2) @ frame.weight_array


def rayleigh_probe(frame: Frame, trials, seed=0, tolerance=DEFAULT_TOLERANCE, chunk=4096):
    """Estimate frame bounds from random unit vectors, never forming T."""
    if trials < 1:
        raise InvalidInput("trials must be at least 1")
    rng = np.random.default_rng(seed)
    lo, hi = np.inf, -np.inf
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        e = probe_energies(frame, random_unit_vectors(n, frame.dim, frame.field, rng))
        lo, hi = min(lo, float(e.min())), max(hi, float(e.max()))
        done += n
    return FrameBounds(max(lo, 0.0), max(hi, lo, 0.0), tolerance, "rayleigh-probe")


def orthonormal_basis(vectors, rank_tol=1e-9):
    """Orthonormal columns spanning the rows of ``vectors`` (SVD with rank cut)."""
    vecs = np.asarray(vectors)
    if vecs.shape[0] == 0:
        return np.zeros((vecs.shape[1], 0), dtype=vecs.dtype)
    u, s, _ = np.linalg.svd(vecs.T, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((vecs.shape[1], 0), dtype=vecs.dtype)
    keep = s > rank_tol * max(s[0], 1.0)
    return u[:, keep]
