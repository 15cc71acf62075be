"""Discrete energy functionals on prefractal graphs.

The raw level-n energy of a vertex function is the sum of squared
differences over the graph's (i, j, cell) edge triples; a pair shared by
two carpet cells is therefore counted once per cell. The weighted energy
multiplies by weight^n with weight 5/3 on the gasket and the resistance
base rho on the carpet. Partial sums of base^((beta-beta*) n) * a_n over a
grid of exponents beta probe membership in the stable-like energy spaces:
bounded partial sums at beta correspond to finite beta-seminorm.

Two arithmetic backends coexist: float64 with numpy's pairwise summation in
a fixed edge order (bit-stable across runs), and exact ``Fraction`` values
for the identities that hold exactly at small levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .errors import ArgumentError
from .prefractal import PrefractalGraph, SpaceKind, Word, restrict_indices, validate_word

DEFAULT_RHO = 1.25148
RHO_MIN = 7 / 6
RHO_MAX = 3 / 2
SG_WEIGHT = Fraction(5, 3)


@dataclass(frozen=True)
class EnergyConfig:
    """Weight base, critical exponent and seminorm base for one space kind.

    For the carpet rho is a configuration value, not a constant: only the
    interval [7/6, 3/2] is certain, with [1.25147, 1.25149] the best
    numerical bracket, and the critical exponent is log(8*rho)/log(3). On
    the gasket the weight is exactly 5/3 and the critical exponent is
    log(5)/log(2).
    """

    kind: SpaceKind
    rho: float
    beta_star: float
    besov_base: float

    def __post_init__(self):
        if self.kind is SpaceKind.SC and not (RHO_MIN <= self.rho <= RHO_MAX):
            raise ArgumentError(
                f"rho={self.rho} outside the resistance interval "
                f"[{RHO_MIN:.6f}, {RHO_MAX:.6f}]"
            )

    @classmethod
    def for_kind(cls, kind: SpaceKind, rho: float = DEFAULT_RHO) -> "EnergyConfig":
        if kind is SpaceKind.SG:
            return cls(
                kind=kind,
                rho=float(SG_WEIGHT),
                beta_star=math.log(5) / math.log(2),
                besov_base=2.0,
            )
        return cls(
            kind=kind,
            rho=float(rho),
            beta_star=math.log(8 * rho) / math.log(3),
            besov_base=3.0,
        )

    @property
    def weight(self):
        """Per-level energy weight: exactly 5/3 on the gasket, rho on the carpet."""
        return SG_WEIGHT if self.kind is SpaceKind.SG else self.rho

    def default_betas(self) -> list[float]:
        b = self.beta_star
        return [b - 0.5, b - 0.2, b - 0.05, b, b + 0.05]


@dataclass(frozen=True)
class VertexFunction:
    """Real values attached to the vertices of one prefractal graph.

    ``values`` is float64 for the fast backend or an object array of
    ``Fraction`` for the exact backend.
    """

    graph: PrefractalGraph
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.graph.n_vertices,):
            raise ArgumentError(
                f"expected {self.graph.n_vertices} values, got {self.values.shape}"
            )

    @property
    def exact(self) -> bool:
        return self.values.dtype == object

    @classmethod
    def from_values(cls, graph: PrefractalGraph, values) -> "VertexFunction":
        arr = np.asarray(values)
        if arr.dtype != object:
            arr = arr.astype(np.float64)
        return cls(graph, arr)

    @classmethod
    def constant(cls, graph: PrefractalGraph, c: float) -> "VertexFunction":
        return cls(graph, np.full(graph.n_vertices, float(c)))

    @classmethod
    def indicator(cls, graph: PrefractalGraph, index: int, scale=1.0) -> "VertexFunction":
        if isinstance(scale, Fraction):
            vals = np.array([Fraction(0)] * graph.n_vertices, dtype=object)
        else:
            vals = np.zeros(graph.n_vertices)
        vals[index] = scale
        return cls(graph, vals)

    def restrict(self, coarse: PrefractalGraph) -> "VertexFunction":
        """Restriction to a coarser level via the nested vertex embedding."""
        idx = restrict_indices(self.graph, coarse)
        return VertexFunction(coarse, self.values[idx])


def raw_energy(u: VertexFunction):
    """Sum of squared edge differences; zero iff u is cellwise constant.

    Float values are reduced with numpy's pairwise summation over the fixed
    edge order, so the result is bit-stable; Fraction values are summed
    exactly.
    """
    g = u.graph
    if u.exact:
        vals = u.values.tolist()
        ei = g.edge_i.tolist()
        ej = g.edge_j.tolist()
        total = Fraction(0)
        for i, j in zip(ei, ej):
            d = vals[i] - vals[j]
            total += d * d
        return total
    d = u.values[g.edge_i] - u.values[g.edge_j]
    return float(np.sum(d * d))


def weighted_energy(u: VertexFunction, cfg: EnergyConfig):
    """weight^level times the raw energy."""
    w = cfg.weight
    if u.exact and isinstance(w, Fraction):
        return w**u.graph.level * raw_energy(u)
    return float(w) ** u.graph.level * float(raw_energy(u))


def restricted_energy(u: VertexFunction, region: Iterable[Word]):
    """Raw energy summed only over cells whose word starts with a region word.

    ``region`` is a set of level-m cell words, m <= level of u; passing all
    of W_m recovers the raw energy and the empty region gives zero.
    """
    g = u.graph
    region = list(region)
    if not region:
        return Fraction(0) if u.exact else 0.0
    levels = {len(w) for w in region}
    if len(levels) != 1:
        raise ArgumentError("region words must share one level")
    m = levels.pop()
    if m > g.level:
        raise ArgumentError(
            f"region words have level {m} > function level {g.level}"
        )
    k = g.kind.alphabet_size
    indices = set()
    for w in region:
        validate_word(w, g.kind)
        idx = 0
        for letter in w:
            idx = idx * k + letter
        indices.add(idx)
    shift = k ** (g.level - m)
    prefix = g.edge_cell // shift
    mask = np.isin(prefix, np.fromiter(indices, dtype=np.int64))
    if u.exact:
        vals = u.values.tolist()
        total = Fraction(0)
        for i, j in zip(g.edge_i[mask].tolist(), g.edge_j[mask].tolist()):
            d = vals[i] - vals[j]
            total += d * d
        return total
    d = u.values[g.edge_i[mask]] - u.values[g.edge_j[mask]]
    return float(np.sum(d * d))


def complement_region(kind: SpaceKind, word: Word) -> list[Word]:
    """All level-m words except the given one; the region off one cell."""
    validate_word(word, kind)
    m = len(word)
    k = kind.alphabet_size
    skip = 0
    for letter in word:
        skip = skip * k + letter
    out = []
    for idx in range(k**m):
        if idx == skip:
            continue
        letters = []
        rest = idx
        for _ in range(m):
            rest, r = divmod(rest, k)
            letters.append(r)
        out.append(tuple(reversed(letters)))
    return out


def besov_partial_sums(
    a_values: Sequence[float], cfg: EnergyConfig, betas: Sequence[float]
) -> dict[float, float]:
    """Partial sums of base^((beta-beta*) n) * a_n for n = 1..N.

    ``a_values[i]`` is a_{i+1}. Linear in the a_n and monotone
    nondecreasing in N for every beta.
    """
    if not a_values:
        raise ArgumentError("need at least one level")
    return {beta: cum[-1] for beta, cum in besov_cumulative(a_values, cfg, betas).items()}


def besov_cumulative(
    a_values: Sequence[float], cfg: EnergyConfig, betas: Sequence[float]
) -> dict[float, np.ndarray]:
    a = np.asarray([float(v) for v in a_values])
    n = np.arange(1, a.shape[0] + 1, dtype=np.float64)
    out = {}
    for beta in betas:
        terms = cfg.besov_base ** ((beta - cfg.beta_star) * n) * a
        out[float(beta)] = np.cumsum(terms)
    return out


def minkowski_product_bound_check(u: VertexFunction, v: VertexFunction):
    """Both sides of the product-energy bound.

    Returns (lhs, rhs) with lhs = sqrt(E(uv)) and
    rhs = max|u| sqrt(E(v)) + max|v| sqrt(E(u)); lhs <= rhs always holds.
    """
    if u.graph is not v.graph and (
        u.graph.kind is not v.graph.kind or u.graph.level != v.graph.level
    ):
        raise ArgumentError("functions must live on the same graph")
    uv = VertexFunction(u.graph, u.values * v.values)
    lhs = math.sqrt(float(raw_energy(uv)))
    rhs = float(np.max(np.abs(u.values.astype(np.float64)))) * math.sqrt(
        float(raw_energy(v))
    ) + float(np.max(np.abs(v.values.astype(np.float64)))) * math.sqrt(
        float(raw_energy(u))
    )
    return lhs, rhs


@dataclass
class EnergyReport:
    """Per-level raw and weighted energies plus cumulative seminorm sums."""

    levels: list[int]
    raw: list[float]
    weighted: list[float]
    besov: Mapping[float, np.ndarray]

    def rows(self) -> list[list]:
        betas = sorted(self.besov)
        out = []
        for pos, n in enumerate(self.levels):
            row = [n, self.raw[pos], self.weighted[pos]]
            row.extend(self.besov[b][pos] for b in betas)
            out.append(row)
        return out

    def header(self) -> list[str]:
        return ["level", "raw_E", "weighted_a"] + [
            f"besov_beta={b:.6f}" for b in sorted(self.besov)
        ]


def energy_report(
    u: VertexFunction, cfg: EnergyConfig, betas: Sequence[float] | None = None,
    graphs: Mapping[int, PrefractalGraph] | None = None,
) -> EnergyReport:
    """Energies of u restricted to every level 1..n plus seminorm sums."""
    from .prefractal import build_graph

    betas = list(betas) if betas is not None else cfg.default_betas()
    n = u.graph.level
    levels = list(range(1, n + 1))
    raw = []
    weighted = []
    for m in levels:
        if m == n:
            um = u
        else:
            gm = graphs[m] if graphs and m in graphs else build_graph(u.graph.kind, m)
            um = u.restrict(gm)
        raw.append(float(raw_energy(um)))
        weighted.append(float(weighted_energy(um, cfg)))
    besov = besov_cumulative(weighted, cfg, betas)
    return EnergyReport(levels=levels, raw=raw, weighted=weighted, besov=besov)


def graph_laplacian(g: PrefractalGraph, dense: bool = False):
    """Laplacian L with u^T L u equal to the raw energy.

    Each (i, j, cell) edge contributes weight one, so a carpet pair owned
    by two cells carries weight two, matching the energy convention.
    """
    n = g.n_vertices
    ones = np.ones(g.n_edges)
    rows = np.concatenate([g.edge_i, g.edge_j, g.edge_i, g.edge_j])
    cols = np.concatenate([g.edge_i, g.edge_j, g.edge_j, g.edge_i])
    data = np.concatenate([ones, ones, -ones, -ones])
    lap = sparse.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    if dense:
        return lap.toarray()
    return lap
