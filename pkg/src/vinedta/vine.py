"""Trivariate C-vine structure and sampling.

A three-dimensional C-vine is described by a permutation (which coordinate
sits at the root of the first tree), two unconditional edge copulas joining
the root to each leaf, and one conditional edge joining the leaves given
the root.  Setting the conditional edge to independence truncates the vine
at level one.  This module provides the permutation catalogue, the
Gauss-Legendre grid on (0, 1), the transform taking independent uniforms
to vine-distributed uniforms, and a seeded sampler built on that transform.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .copulas import CopulaFamily, CopulaSpec, _ccdf_inv_raw
from .margins import MarginSpec

DEFAULT_NQ = 15


@dataclass(frozen=True)
class Permutation:
    """Vine role assignment: which data coordinate is the root of tree 1.

    ``leaves`` are the remaining coordinates in the order (leaf1, leaf2);
    the conditional edge couples the leaves given the root.  Coordinates
    are 1-based: 1 = sensitivity, 2 = specificity, 3 = prevalence.
    """

    root: int
    leaves: tuple[int, int]

    def __post_init__(self):
        if sorted((self.root,) + tuple(self.leaves)) != [1, 2, 3]:
            raise ValueError(f"permutation must use coordinates 1, 2, 3 exactly once, got root={self.root}, leaves={self.leaves}")

    @property
    def role_order(self) -> tuple[int, int, int]:
        """Data coordinates in vine role order (root, leaf1, leaf2)."""
        return (self.root, self.leaves[0], self.leaves[1])

    def label(self) -> str:
        r, (a, b) = self.root, self.leaves
        return f"{min(r, a)}{max(r, a)},{min(r, b)}{max(r, b)},{min(a, b)}{max(a, b)}|{r}"


def enumerate_permutations() -> list[Permutation]:
    """The three distinct trivariate C-vine permutations."""
    return [
        Permutation(root=1, leaves=(2, 3)),
        Permutation(root=2, leaves=(1, 3)),
        Permutation(root=3, leaves=(1, 2)),
    ]


@dataclass(frozen=True)
class VineModelSpec:
    """Full model structure: permutation, three edge copulas, three margins.

    ``edge_a`` couples root and leaf1, ``edge_b`` root and leaf2, and
    ``edge_cond`` the two leaves given the root.  ``margins`` are indexed
    by data coordinate (sensitivity, specificity, prevalence), not by vine
    role.
    """

    perm: Permutation
    edge_a: CopulaSpec
    edge_b: CopulaSpec
    edge_cond: CopulaSpec
    margins: tuple[MarginSpec, MarginSpec, MarginSpec]

    def __post_init__(self):
        if len(self.margins) != 3:
            raise ValueError("exactly three margins are required")
        object.__setattr__(self, "margins", tuple(self.margins))

    @property
    def truncated(self) -> bool:
        return self.edge_cond.family == CopulaFamily.INDEPENDENCE


@dataclass(frozen=True)
class QuadGrid:
    nodes: np.ndarray
    weights: np.ndarray
    nq: int


def gauss_legendre_01(nq: int) -> QuadGrid:
    """Gauss-Legendre nodes and weights mapped affinely to (0, 1).

    Weights sum to one, so the grid is a discrete probability measure
    approximating U(0, 1) expectations.
    """
    if nq < 1:
        raise ValueError(f"nq must be at least 1, got {nq}")
    x, w = np.polynomial.legendre.leggauss(int(nq))
    return QuadGrid(nodes=0.5 * (x + 1.0), weights=0.5 * w, nq=int(nq))


def _edge_theta(spec: CopulaSpec) -> float:
    if spec.family == CopulaFamily.INDEPENDENCE:
        return 0.0
    if spec.theta is None:
        raise ValueError(f"{spec.family.name} edge needs a parameter value to evaluate")
    return float(spec.theta)


def vine_transform(u1, u2, u3, spec: VineModelSpec):
    """Map independent uniforms to uniforms with the vine dependence.

    Inputs and outputs are in data-coordinate order.  Internally the triple
    is permuted into vine roles; the root passes through, leaf1 is the
    inverse conditional of edge_a given the root, and leaf2 chains the
    conditional edge (given the raw leaf1 uniform) into edge_b given the
    root.  With a truncated vine leaf2 depends only on the root and its own
    uniform.
    """
    u = [np.asarray(x, dtype=float) for x in (u1, u2, u3)]
    for x in u:
        if np.any(x <= 0.0) or np.any(x >= 1.0):
            raise ValueError("uniforms must lie strictly inside (0, 1)")
    r, l1, l2 = spec.perm.role_order
    ur, ul1, ul2 = u[r - 1], u[l1 - 1], u[l2 - 1]
    vr = ur
    vl1 = _ccdf_inv_raw(int(spec.edge_a.family), _edge_theta(spec.edge_a), ul1, ur)
    inner = _ccdf_inv_raw(int(spec.edge_cond.family), _edge_theta(spec.edge_cond), ul2, ul1)
    vl2 = _ccdf_inv_raw(int(spec.edge_b.family), _edge_theta(spec.edge_b), inner, ur)
    out = [None, None, None]
    out[r - 1], out[l1 - 1], out[l2 - 1] = vr, vl1, vl2
    if all(np.ndim(x) == 0 for x in (u1, u2, u3)):
        return tuple(float(np.asarray(o)) for o in out)
    return tuple(np.asarray(o) for o in out)


def simulate_vine(count: int, spec: VineModelSpec, seed: int, stream: int = 0) -> np.ndarray:
    """Draw vine-distributed uniform triples with a counter-based generator.

    Uses the Philox bit generator keyed by (seed, stream), so distinct
    streams give independent reproducible sequences and identical calls are
    bit-identical.  Returns an array of shape (count, 3) in data-coordinate
    order.
    """
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))
    u = rng.random((int(count), 3))
    u = np.maximum(u, 2.0 ** -53)  # keep the open-interval contract
    v1, v2, v3 = vine_transform(u[:, 0], u[:, 1], u[:, 2], spec)
    return np.column_stack([v1, v2, v3])


def _count_inversions(a: np.ndarray) -> int:
    """Pairs (i < j) with a[i] > a[j], by divide and conquer on sorted halves."""
    n = a.size
    if n < 2:
        return 0
    mid = n // 2
    left, right = a[:mid].copy(), a[mid:].copy()
    inv = _count_inversions(left) + _count_inversions(right)
    left.sort()
    right.sort()
    inv += left.size * right.size - int(np.searchsorted(left, right, side="right").sum())
    return inv


def empirical_tau(pairs) -> float:
    """Sample Kendall tau with ties counted as neither concordant nor discordant."""
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("pairs must be an (n, 2) array of real pairs")
    n = arr.shape[0]
    if n < 2:
        raise ValueError("at least two pairs are required")
    x, y = arr[:, 0], arr[:, 1]
    order = np.lexsort((y, x))
    ys = y[order]
    discordant = _count_inversions(ys)

    def tie_pairs(counts: np.ndarray) -> int:
        return int((counts * (counts - 1) // 2).sum())

    n0 = n * (n - 1) // 2
    ties_x = tie_pairs(np.unique(x, return_counts=True)[1])
    ties_y = tie_pairs(np.unique(y, return_counts=True)[1])
    ties_xy = tie_pairs(np.unique(arr, axis=0, return_counts=True)[1])
    return (n0 - 2 * discordant - ties_x - ties_y + ties_xy) / n0
