"""Seeded random frame families used by tests, benchmarks and the CLI."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .core import Frame, parseval_normalize


def random_onb(rng, d, field="real"):
    x = rng.standard_normal((d, d))
    if field == "complex":
        x = x + 1j * rng.standard_normal((d, d))
    q, _ = np.linalg.qr(x)
    return q.T


def random_parseval(rng, d, M, field="real", max_norm_sq=None, attempts=200):
    """Parseval frame of M vectors in dimension d (rows of a random isometry).

    With ``max_norm_sq`` the draw is repeated until every squared norm fits;
    when M is a multiple of d a union of scaled ONBs is the fallback.
    """
    for _ in range(attempts):
        x = rng.standard_normal((M, d))
        if field == "complex":
            x = x + 1j * rng.standard_normal((M, d))
        f = parseval_normalize(Frame(field, d, x))
        if max_norm_sq is None or np.max(np.sum(np.abs(f.vectors) ** 2, axis=1)) <= max_norm_sq:
            return f
    if M % d == 0 and max_norm_sq is not None and d / M <= max_norm_sq:
        k = M // d
        return Frame(field, d, np.vstack([random_onb(rng, d, field) for _ in range(k)]) / np.sqrt(k))
    raise ValueError(f"no Parseval frame with squared norms <= {max_norm_sq} after {attempts} draws")


def small_norm_parseval(rng, max_dim=4, max_size=16, max_norm_sq=0.25):
    """Parseval frame with d <= max_dim, M <= max_size and squared norms <= max_norm_sq.

    A random Parseval frame is drawn and its largest vector is replaced by two
    copies scaled by 1/sqrt(2) (which keeps it Parseval) until all norms fit.
    """
    while True:
        d = int(rng.integers(1, max_dim + 1))
        M = int(rng.integers(d, max_size + 1))
        v = list(random_parseval(rng, d, M).vectors)
        while len(v) <= max_size:
            norms = [float(np.sum(np.abs(x) ** 2)) for x in v]
            j = int(np.argmax(norms))
            if norms[j] <= max_norm_sq:
                return Frame("real", d, np.array(v))
            x = v.pop(j) / np.sqrt(2.0)
            v.extend([x, x])


def tight_onb_union(rng, d, bound, field="real"):
    """Tight frame with bound ``bound`` from ceil(bound) ONBs scaled into the unit ball."""
    k = int(np.ceil(bound))
    c = np.sqrt(bound / k)
    return Frame(field, d, c * np.vstack([random_onb(rng, d, field) for _ in range(k)]))


def rational_scalable(rng, max_dim=3, max_bases=3):
    """Unit-ball vectors with exact rational squared scalars making them Parseval.

    Each of k ONBs gets a share p_j of the identity (shares sum to 1); a vector
    shrunk by s (s^2 in {1, 1/2, 1/4}) gets a^2 = p_j / s^2.
    """
    d = int(rng.integers(1, max_dim + 1))
    k = int(rng.integers(1, max_bases + 1))
    cuts = sorted(int(v) for v in rng.choice(np.arange(1, 6), size=k - 1, replace=False)) if k > 1 else []
    edges = [0] + cuts + [6]
    shares = [Fraction(b - a, 6) for a, b in zip(edges, edges[1:])]
    rows, a_sq = [], []
    for p in shares:
        for v in random_onb(rng, d):
            s_sq = Fraction(1, int(rng.choice([1, 2, 4])))
            rows.append(v * np.sqrt(float(s_sq)))
            a_sq.append(p / s_sq)
    return Frame("real", d, np.array(rows)), a_sq


def block_groups(rng, sizes, shrink=0.003, max_copies=3):
    """Near-Parseval frame made of orthogonal coordinate groups.

    Group g holds m random ONBs of its coordinate window with scalar 1/m;
    every vector is shrunk by sqrt(1 - u), u <= shrink, so the frame is
    within epsilon <= shrink of Parseval with exact rational scalars.
    """
    d = sum(sizes)
    rows, a_sq, off = [], [], 0
    for s in sizes:
        m = int(rng.integers(1, max_copies + 1))
        for _ in range(m):
            for row in random_onb(rng, s):
                v = np.zeros(d)
                v[off:off + s] = row * np.sqrt(1 - rng.uniform(0, shrink))
                rows.append(v)
                a_sq.append(Fraction(1, m))
        off += s
    return Frame("real", d, np.array(rows)), a_sq


def random_subset(rng, M, fraction=0.5):
    mask = rng.random(M) < fraction
    return np.flatnonzero(mask)
