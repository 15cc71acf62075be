"""Gasket witness with weighted energy exactly n at every level n.

One refinement step replaces each triangular cell with corner values
(a, b, c) by three children whose new midpoint values are the convex
combinations

    x = alpha*b + alpha*c + (1-2*alpha)*a        (midpoint opposite a)
    y = alpha*c + alpha*a + (1-2*alpha)*b
    z = alpha*a + alpha*b + (1-2*alpha)*c

and multiplies the cell energy by phi(alpha) = 15*alpha^2 - 12*alpha + 3.
phi attains its minimum 3/5 at alpha = 2/5 (the harmonic extension), so
choosing alpha_n with phi(alpha_n) = (3/5)*(n+1)/n drives the weighted
energy from a_1 = 1 to a_n = n. The seed is sqrt(30)/10 at the corner
(0, 0) of the level-1 graph, whose squared value 3/10 makes a_1 exactly 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .energy import EnergyConfig, VertexFunction, raw_energy, weighted_energy
from .errors import ArgumentError, LevelCapError
from .prefractal import PrefractalGraph, SpaceKind, build_graph

SEED_VALUE = math.sqrt(30) / 10  # squared value is exactly 3/10
ALPHA_LIMIT = 0.4  # alpha_n increases to 2/5


def phi(alpha):
    """Energy scale factor of one extension step; exact for Fraction input."""
    return 15 * alpha * alpha - 12 * alpha + 3


@dataclass(frozen=True)
class ExtensionParam:
    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha < 0.5:
            raise ArgumentError(f"alpha={self.alpha} outside (0, 1/2)")

    @property
    def phi(self) -> float:
        return phi(self.alpha)


def solve_alpha(n: int) -> ExtensionParam:
    """Root of phi(alpha) = (3/5)(n+1)/n inside (0, 2/5).

    Closed form alpha_n = 2/5 - 1/(5 sqrt(n)): substituting t = 2/5 - alpha
    gives phi = 3/5 + 15 t^2, so t = 1/(5 sqrt(n)). The quadratic's second
    root lies above 2/5 and is discarded.
    """
    if n < 1:
        raise ArgumentError("n must be a positive integer")
    return ExtensionParam(0.4 - 1.0 / (5.0 * math.sqrt(n)))


def extend_cell(a, b, c, alpha):
    """Child midpoint values (x, y, z) for one cell; affine in (a, b, c)."""
    if isinstance(alpha, ExtensionParam):
        alpha = alpha.alpha
    x = alpha * b + alpha * c + (1 - 2 * alpha) * a
    y = alpha * c + alpha * a + (1 - 2 * alpha) * b
    z = alpha * a + alpha * b + (1 - 2 * alpha) * c
    return x, y, z


def cell_energy_sum(a, b, c):
    return (a - b) ** 2 + (b - c) ** 2 + (c - a) ** 2


def child_energy_sum(a, b, c, alpha):
    """Energy of the three child cells spawned by (a, b, c).

    Equals phi(alpha) * cell_energy_sum(a, b, c); kept as the explicit
    nine-term sum so tests can check the identity independently.
    """
    x, y, z = extend_cell(a, b, c, alpha)
    return (
        (a - z) ** 2 + (b - z) ** 2
        + (a - y) ** 2 + (c - y) ** 2
        + (b - x) ** 2 + (c - x) ** 2
        + (x - y) ** 2 + (y - z) ** 2 + (z - x) ** 2
    )


@dataclass
class SgWitness:
    """Per-level values of the witness plus the extension parameters used."""

    graphs: list[PrefractalGraph]
    values: list[np.ndarray]
    alphas: list[float]

    @property
    def max_level(self) -> int:
        return len(self.graphs)

    def function(self, n: int) -> VertexFunction:
        if not 1 <= n <= self.max_level:
            raise ArgumentError(f"witness holds levels 1..{self.max_level}")
        return VertexFunction(self.graphs[n - 1], self.values[n - 1])

    def weighted_energies(self, cfg: EnergyConfig | None = None) -> list[float]:
        cfg = cfg or EnergyConfig.for_kind(SpaceKind.SG)
        return [
            float(weighted_energy(self.function(n), cfg))
            for n in range(1, self.max_level + 1)
        ]

    def raw_energies(self) -> list[float]:
        return [
            float(raw_energy(self.function(n)))
            for n in range(1, self.max_level + 1)
        ]


def build_witness(levels: int) -> SgWitness:
    """Construct the witness on levels 1..levels.

    Extension from level n to n+1 uses alpha_n from ``solve_alpha``; values
    already assigned on V_n are copied, never modified, so the per-level
    functions are restrictions of each other.
    """
    if levels < 1:
        raise ArgumentError("levels must be >= 1")
    cap = SpaceKind.SG.level_cap
    if levels > cap:
        raise LevelCapError(f"levels {levels} exceeds the gasket cap of {cap}")

    graphs = [build_graph(SpaceKind.SG, n) for n in range(1, levels + 1)]
    g1 = graphs[0]
    vals = np.zeros(g1.n_vertices)
    vals[g1.vertex_index(0, 0)] = SEED_VALUE
    values = [vals]
    alphas: list[float] = []

    for n in range(1, levels):
        parent = graphs[n - 1]
        child = graphs[n]
        alpha = solve_alpha(n).alpha
        alphas.append(alpha)
        pv = values[-1]
        # Parent cell corner values in base-point order.
        a = pv[parent.cells[:, 0]]
        b = pv[parent.cells[:, 1]]
        c = pv[parent.cells[:, 2]]
        x = alpha * b + alpha * c + (1 - 2 * alpha) * a
        y = alpha * c + alpha * a + (1 - 2 * alpha) * b
        z = alpha * a + alpha * b + (1 - 2 * alpha) * c
        nv = np.zeros(child.n_vertices)
        # Child cells of parent cell w are 3w, 3w+1, 3w+2 in index order;
        # child cell i's vertex 0 is the parent corner i, so parent values
        # carry over exactly and the three new midpoints are x, y, z.
        c0 = child.cells[0::3]
        c1 = child.cells[1::3]
        c2 = child.cells[2::3]
        nv[c0[:, 0]] = a
        nv[c1[:, 1]] = b
        nv[c2[:, 2]] = c
        nv[c0[:, 1]] = z
        nv[c0[:, 2]] = y
        nv[c1[:, 2]] = x
        values.append(nv)

    return SgWitness(graphs=graphs, values=values, alphas=alphas)


def oscillation_profile(w: SgWitness) -> list[float]:
    """Max over level-n cells of the value spread on the cell's corners.

    Non-increasing in n because child values are convex combinations of the
    parent corner values.
    """
    out = []
    for g, v in zip(w.graphs, w.values):
        cellvals = v[g.cells]
        out.append(float(np.max(cellvals.max(axis=1) - cellvals.min(axis=1))))
    return out
