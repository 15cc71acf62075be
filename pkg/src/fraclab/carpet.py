"""Carpet machinery: the self-similar profile f, the product function u2,
resistance potentials, the resistance-scaling estimate, and the gluing
iteration that assembles a function with weighted energy growing like n.

The profile f on [0, 1] is fixed by f(0) = 0, f(1) = 1 and the refinement

    f((3i+1)/3^(n+1)) = (5/7) f(i/3^n) + (2/7) f((i+1)/3^n)
    f((3i+2)/3^(n+1)) = (2/7) f(i/3^n) + (5/7) f((i+1)/3^n)

which pins exact rational values at every triadic point. Carpet vertices
also sit at half-triadic points (i + 1/2)/3^n (cell side midpoints); f is
self-affine on each triadic interval, f((i+t)/3^n) = f(i/3^n) +
(f((i+1)/3^n) - f(i/3^n)) f(t), so its unique continuous extension takes
the average of the two triadic neighbours there. That midpoint rule is
forced: with it the level-n energy of (x, y) -> f(x) is exactly (6/7)^n.

The public ``f_eval``/``u2_eval`` accept triadic rationals only; lattice
evaluation on whole graphs goes through ``profile_table``, which fills the
midpoints by the averaging rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg as sparse_cg

from .energy import (
    EnergyConfig,
    VertexFunction,
    complement_region,
    graph_laplacian,
    raw_energy,
    restricted_energy,
)
from .errors import (
    ArgumentError,
    GlueInfeasibleError,
    LevelCapError,
    NonTriadicError,
    NumericError,
    SolverError,
)
from .prefractal import (
    BoundarySet,
    PrefractalGraph,
    SpaceKind,
    Word,
    boundary_vertices,
    build_graph,
    restrict_indices,
)

RESISTANCE_CAP = 5

F_LOW = Fraction(2, 7)
F_HIGH = Fraction(5, 7)


class TriadicFunction:
    """Memoized exact evaluation of the profile f at triadic rationals."""

    def __init__(self):
        self._memo: dict[Fraction, Fraction] = {
            Fraction(0): Fraction(0),
            Fraction(1): Fraction(1),
        }

    def __call__(self, q) -> Fraction:
        q = Fraction(q)
        if not 0 <= q <= 1:
            raise ArgumentError(f"{q} outside [0, 1]")
        den = q.denominator
        while den % 3 == 0:
            den //= 3
        if den != 1:
            raise NonTriadicError(f"{q} is not of the form i/3^m")
        return self._eval(q)

    def _eval(self, q: Fraction) -> Fraction:
        cached = self._memo.get(q)
        if cached is not None:
            return cached
        # q reduced with denominator 3^m, m >= 1, numerator not divisible by 3
        i, rem = divmod(q.numerator, 3)
        child_den = q.denominator // 3
        left = self._eval(Fraction(i, child_den))
        right = self._eval(Fraction(i + 1, child_den))
        if rem == 1:
            val = F_HIGH * left + F_LOW * right
        else:
            val = F_LOW * left + F_HIGH * right
        self._memo[q] = val
        return val


_f = TriadicFunction()


def f_eval(q) -> Fraction:
    """Profile value at a triadic rational i/3^m; exact."""
    return _f(q)


def u2_eval(p: tuple) -> Fraction:
    """u2(x, y) = f(x) f(1-x) f(y) f(1-y) at a point with triadic coordinates.

    Vanishes whenever a coordinate is 0 or 1, so u2 is zero on the square
    boundary.
    """
    x, y = Fraction(p[0]), Fraction(p[1])
    return f_eval(x) * f_eval(1 - x) * f_eval(y) * f_eval(1 - y)


def profile_table(level: int, exact: bool = False) -> np.ndarray:
    """f at every lattice coordinate k/(2*3^level), k = 0..2*3^level.

    Even k are triadic and use the recursion; odd k are cell side midpoints
    and take the average of their triadic neighbours (the continuous
    extension of f).
    """
    den = 2 * 3**level
    tri = 3**level
    tri_vals = [_f(Fraction(j, tri)) for j in range(tri + 1)]
    vals: list = [None] * (den + 1)
    for j, v in enumerate(tri_vals):
        vals[2 * j] = v
    for j in range(tri):
        vals[2 * j + 1] = (tri_vals[j] + tri_vals[j + 1]) / 2
    if exact:
        return np.array(vals, dtype=object)
    return np.array([float(v) for v in vals])


def coordinate_profile_values(
    g: PrefractalGraph, axis: int = 0, exact: bool = False
) -> VertexFunction:
    """The function (x, y) -> f(x) (axis 0) or f(y) (axis 1) on the graph."""
    table = profile_table(g.level, exact=exact)
    return VertexFunction(g, table[g.verts[:, axis]])


def u2_values(g: PrefractalGraph, exact: bool = False) -> VertexFunction:
    """u2 on every vertex of the graph, midpoints by the averaging rule."""
    table = profile_table(g.level, exact=exact)
    rev = table[::-1]  # f(1 - k/den) = table[den - k]
    fx = table[g.verts[:, 0]] * rev[g.verts[:, 0]]
    fy = table[g.verts[:, 1]] * rev[g.verts[:, 1]]
    return VertexFunction(g, fx * fy)


@dataclass
class ResistanceProblem:
    """Potential with unit drop between the hole boundary S and the square
    boundary L, harmonic elsewhere; resistance is 1/energy."""

    graph: PrefractalGraph
    source: np.ndarray
    ground: np.ndarray
    potential: VertexFunction
    energy: float
    resistance: float
    residual: float


def solve_resistance(
    n: int,
    method: Literal["cg", "dense"] = "cg",
    graph: PrefractalGraph | None = None,
    x0: np.ndarray | None = None,
    rtol: float = 1e-10,
) -> ResistanceProblem:
    """Solve the level-n source/ground potential problem on the carpet.

    Minimises the raw energy over functions equal to 1 on S and 0 on L,
    i.e. solves the free-vertex Laplacian system. ``method='cg'`` runs
    Jacobi-preconditioned conjugate gradients; ``'dense'`` is the direct
    oracle, practical for n <= 2.
    """
    if not 1 <= n <= RESISTANCE_CAP:
        raise LevelCapError(
            f"resistance level {n} outside 1..{RESISTANCE_CAP}"
        )
    g = graph if graph is not None else build_graph(SpaceKind.SC, n)
    if g.kind is not SpaceKind.SC or g.level != n:
        raise ArgumentError("graph must be the level-n carpet")
    source = boundary_vertices(g, BoundarySet.S)
    ground = boundary_vertices(g, BoundarySet.L)

    lap = graph_laplacian(g)
    nv = g.n_vertices
    fixed = np.zeros(nv, dtype=bool)
    fixed[source] = True
    fixed[ground] = True
    free = ~fixed
    u = np.zeros(nv)
    u[source] = 1.0

    a = lap[free][:, free].tocsr()
    b = -lap[free][:, fixed] @ u[fixed]
    rhs_norm = float(np.linalg.norm(b))

    if method == "dense":
        x = np.linalg.solve(a.toarray(), b)
    elif method == "cg":
        diag = a.diagonal()
        precond = sparse.diags(1.0 / diag)
        x_start = x0 if x0 is not None else np.zeros(b.shape[0])
        x, info = sparse_cg(a, b, x0=x_start, rtol=1e-14, atol=0.0, maxiter=20 * nv, M=precond)
        if info > 0:
            res = float(np.linalg.norm(a @ x - b))
            if res > rtol * rhs_norm:
                raise SolverError(
                    f"conjugate gradient stalled at residual {res:.3e} "
                    f"(rhs norm {rhs_norm:.3e})",
                    residual=res,
                    rhs_norm=rhs_norm,
                )
    else:
        raise ArgumentError(f"unknown method {method!r}")

    residual = float(np.linalg.norm(a @ x - b))
    if residual > rtol * max(rhs_norm, 1e-300):
        raise SolverError(
            f"residual {residual:.3e} exceeds {rtol:.1e} * rhs norm {rhs_norm:.3e}",
            residual=residual,
            rhs_norm=rhs_norm,
        )
    u[free] = x
    fn = VertexFunction(g, u)
    energy = float(raw_energy(fn))
    return ResistanceProblem(
        graph=g,
        source=source,
        ground=ground,
        potential=fn,
        energy=energy,
        resistance=1.0 / energy,
        residual=residual,
    )


@dataclass
class RhoEstimate:
    levels: list[int]
    resistances: list[float]
    ratios: list[float]
    extrapolated: float | None
    uncertainty: float | None


def estimate_rho(max_level: int, method: str = "cg") -> RhoEstimate:
    """Successive resistance ratios R_{n+1}/R_n and an Aitken extrapolation.

    The extrapolated value is reported with the ratio spread as its
    uncertainty; it is a desk-scale estimate, never asserted equal to the
    published bracket.
    """
    if not 1 <= max_level <= RESISTANCE_CAP:
        raise LevelCapError(f"max_level {max_level} outside 1..{RESISTANCE_CAP}")
    resistances = [solve_resistance(n, method=method).resistance for n in range(1, max_level + 1)]
    ratios = [resistances[i + 1] / resistances[i] for i in range(len(resistances) - 1)]
    if not ratios:
        return RhoEstimate([1], resistances, [], None, None)
    extrapolated = ratios[-1]
    if len(ratios) >= 3:
        # Aitken delta-squared on the ratio sequence
        r0, r1, r2 = ratios[-3], ratios[-2], ratios[-1]
        denom = (r2 - r1) - (r1 - r0)
        if abs(denom) > 1e-14:
            extrapolated = r2 - (r2 - r1) ** 2 / denom
    uncertainty = max(ratios) - min(ratios) if len(ratios) > 1 else abs(ratios[0]) * 0.1
    return RhoEstimate(
        levels=list(range(1, max_level + 1)),
        resistances=resistances,
        ratios=ratios,
        extrapolated=extrapolated,
        uncertainty=uncertainty,
    )


@dataclass
class U1Surrogate:
    """Finite-level stand-in for the unit-drop potential template.

    The level-m optimal potential rescaled so its level-m raw energy is
    exactly rho^-m. ``fitted_c`` is the smallest constant with
    (1/c) rho^-n <= E_n <= c rho^-n over the computed levels 1..m; it is
    empirical, not a proven constant.
    """

    level: int
    function: VertexFunction
    energies: list[float]
    fitted_c: float
    rho: float


def u1_surrogate(
    m: int, cfg: EnergyConfig, method: str = "cg",
    graphs: dict[int, PrefractalGraph] | None = None,
) -> U1Surrogate:
    if cfg.kind is not SpaceKind.SC:
        raise ArgumentError("the potential template lives on the carpet")
    base_graph = graphs.get(m) if graphs else None
    problem = solve_resistance(m, method=method, graph=base_graph)
    rho = cfg.rho
    scale = math.sqrt(rho ** (-m) / problem.energy)
    fn = VertexFunction(problem.graph, problem.potential.values * scale)
    energies = []
    for n in range(1, m + 1):
        if n == m:
            un = fn
        else:
            gn = graphs.get(n) if graphs else None
            gn = gn if gn is not None else build_graph(SpaceKind.SC, n)
            un = fn.restrict(gn)
        energies.append(float(raw_energy(un)))
    fitted = 1.0
    for n, e in enumerate(energies, start=1):
        ratio = e * rho**n
        fitted = max(fitted, ratio, 1.0 / ratio)
    return U1Surrogate(level=m, function=fn, energies=energies, fitted_c=fitted, rho=rho)


def _zero_word(length: int) -> Word:
    return (0,) * length


@dataclass
class GlueState:
    """Cell-labelled assembly of scaled templates plus its bookkeeping.

    ``assembly`` maps a cell word to (template tag, scale); 'u1' cells hold
    the rescaled potential template, the single 'u2' cell holds the scaled
    product function. All templates vanish on the square boundary, so the
    assembled function is single-valued on shared cell sides. Levels are
    evaluated on the level-``cap`` carpet.
    """

    cfg: EnergyConfig
    cap: int
    c_target: float
    c1_fitted: float
    step: int
    assembly: dict[Word, tuple[str, float]]
    values: np.ndarray
    graphs: dict[int, PrefractalGraph]
    templates: dict[int, U1Surrogate]
    thresholds: list[int] = field(default_factory=list)
    deltas: list[tuple[float, float]] = field(default_factory=list)
    sup_deltas: list[float] = field(default_factory=list)

    def function(self) -> VertexFunction:
        return VertexFunction(self.graphs[self.cap], self.values)

    def energies(self) -> list[float]:
        out = []
        fn = self.function()
        for n in range(1, self.cap + 1):
            out.append(float(raw_energy(fn.restrict(self.graphs[n]))))
        return out

    def bound(self, n: int) -> float:
        return self.c_target * n * self.cfg.rho ** (-n)

    def bounds(self) -> list[float]:
        return [self.bound(n) for n in range(1, self.cap + 1)]

    def off_cell_energy(self, word: Word, n: int) -> float:
        """Energy at level n restricted off the given cell."""
        fn = self.function().restrict(self.graphs[n])
        region = complement_region(SpaceKind.SC, word)
        return float(restricted_energy(fn, region))


def _build_graph_family(cap: int) -> dict[int, PrefractalGraph]:
    return {n: build_graph(SpaceKind.SC, n) for n in range(1, cap + 1)}


def _template_for_level(
    state_templates: dict[int, U1Surrogate],
    level: int,
    cfg: EnergyConfig,
    graphs: dict[int, PrefractalGraph],
) -> U1Surrogate:
    tpl = state_templates.get(level)
    if tpl is None:
        tpl = u1_surrogate(level, cfg, graphs=graphs)
        state_templates[level] = tpl
    return tpl


def _assemble_values(
    assembly: dict[Word, tuple[str, float]],
    graphs: dict[int, PrefractalGraph],
    templates: dict[int, U1Surrogate],
    cfg: EnergyConfig,
    cap: int,
) -> np.ndarray:
    """Vertex values on the level-cap carpet for a cell-labelled assembly."""
    g = graphs[cap]
    values = np.zeros(g.n_vertices)
    for word, (tag, delta) in assembly.items():
        m = cap - len(word)
        if m < 1:
            raise ArgumentError("assembly cell deeper than the level cap")
        tpl_graph = graphs[m]
        if tag == "u1":
            tpl_vals = _template_for_level(templates, m, cfg, graphs).function.values
        elif tag == "u2":
            tpl_vals = u2_values(tpl_graph).values
        else:
            raise ArgumentError(f"unknown template tag {tag!r}")
        # Numerators of f_w^{-1}(p) over 2*3^m for the vertices inside K_w.
        offset = np.zeros(2, dtype=np.int64)
        for letter in word:
            offset = 3 * offset + 2 * SpaceKind.SC.base_numerators[letter]
        scale_pow = 3 ** len(word)
        local = g.verts - offset * np.int64(3 ** (cap - len(word)))
        inside = (
            (local[:, 0] >= 0)
            & (local[:, 0] <= graphs[m].den)
            & (local[:, 1] >= 0)
            & (local[:, 1] <= graphs[m].den)
        )
        # local coordinates relative to K_w are already over 2*3^m because
        # den_cap / 3^(len(word)) = 2*3^m
        idx = tpl_graph.lookup(local[inside])
        values[inside] = delta * tpl_vals[idx]
    return values


def seed_state(
    cfg: EnergyConfig,
    c_target: float,
    cap: int,
    c1_fitted: float,
    graphs: dict[int, PrefractalGraph] | None = None,
    templates: dict[int, U1Surrogate] | None = None,
) -> GlueState:
    """Scaled product-function seed with the level-1 and level-2 bounds.

    delta_2 is scanned downward (halving from 1) until the weighted-bound
    inequalities E_n < C n rho^-n hold at n = 1 and 2.
    """
    if cap < 2 or cap > SpaceKind.SC.level_cap:
        raise LevelCapError(f"cap {cap} outside 2..{SpaceKind.SC.level_cap}")
    graphs = graphs if graphs is not None else _build_graph_family(cap)
    templates = templates if templates is not None else {}
    e_u2 = [float(raw_energy(u2_values(graphs[n]))) for n in (1, 2)]
    delta2 = 1.0
    while any(
        delta2**2 * e >= c_target * n * cfg.rho ** (-n)
        for n, e in zip((1, 2), e_u2)
    ):
        delta2 /= 2
        if delta2 < 1e-300:
            raise NumericError("seed scale underflowed")
    assembly = {(): ("u2", delta2)}
    values = _assemble_values(assembly, graphs, templates, cfg, cap)
    return GlueState(
        cfg=cfg,
        cap=cap,
        c_target=c_target,
        c1_fitted=c1_fitted,
        step=0,
        assembly=assembly,
        values=values,
        graphs=graphs,
        templates=templates,
    )


def find_threshold(state: GlueState) -> tuple[int | None, list[float]]:
    """Smallest level with E_n >= C n rho^-n; scan limited by the cap.

    Returns (level or None, the scanned E_n * rho^n / (C n) ratios).
    """
    energies = state.energies()
    start = state.thresholds[-1] + 1 if state.thresholds else 1
    ratios = [
        energies[n - 1] / state.bound(n) for n in range(1, state.cap + 1)
    ]
    for n in range(start, state.cap + 1):
        if energies[n - 1] >= state.bound(n):
            return n, ratios
    return None, ratios


def glue_step(state: GlueState, force_threshold: int | None = None) -> GlueState:
    """One induction step of the gluing construction.

    Finds the smallest level n_k whose energy violates the strict upper
    bound, repartitions the active cell into potential-template copies with
    the product template kept on the all-zeros child, fixes delta_1 by the
    closed-form half-target equation, and scans delta_2 downward until the
    upper bound holds on every computable level. ``force_threshold``
    substitutes a caller-chosen n_k for the scan; it exists because the
    organic crossing level lies far beyond any buildable graph (see the
    scan table in the cap error), and is reported as forced.
    """
    cfg = state.cfg
    cap = state.cap
    k = state.step + 1
    last = state.thresholds[-1] if state.thresholds else 0

    if force_threshold is not None:
        n_k = int(force_threshold)
        if not last < n_k <= cap:
            raise ArgumentError(
                f"forced threshold {n_k} must lie in ({last}, {cap}]"
            )
    else:
        n_k, ratios = find_threshold(state)
        if n_k is None:
            table = ", ".join(f"{r:.3e}" for r in ratios)
            raise LevelCapError(
                f"no level n <= {cap} violates the upper bound "
                f"(largest checked level {cap}; E_n/(C n rho^-n) = [{table}])"
            )

    if k == 1:
        active = ()
        new_words = _all_words(n_k - 1)
        special = _zero_word(n_k - 1)
        prev_off = 0.0
        n_prev = 1
    else:
        active = _zero_word(state.thresholds[-1] - 1)
        n_prev = state.thresholds[-1]
        suffixes = _all_words(n_k - n_prev)
        new_words = [active + s for s in suffixes]
        special = _zero_word(n_k - 1)
        prev_off = state.off_cell_energy(active, n_k)

    m_t = cap - (n_k - 1)
    if m_t < 1:
        raise LevelCapError(
            f"threshold {n_k} leaves no room for templates below cap {cap}"
        )
    template = _template_for_level(state.templates, m_t, cfg, state.graphs)
    e1_u1 = template.energies[0]

    target_half = (1.0 / (2.0 * state.c_target)) * n_k * cfg.rho ** (-n_k)
    copies = 8 ** (n_k - (1 if k == 1 else n_prev)) - 1
    numerator = target_half - prev_off
    if numerator <= 0:
        raise GlueInfeasibleError(
            f"off-cell energy {prev_off:.3e} at level {n_k} already exceeds "
            f"the half-target {target_half:.3e}; threshold too close to its "
            f"predecessor"
        )
    delta1 = math.sqrt(numerator / (copies * e1_u1))

    assembly = dict(state.assembly)
    assembly.pop(active, None)
    for w in new_words:
        if w == special:
            continue
        assembly[w] = ("u1", delta1)

    delta2_cap = 1.0 if k == 1 else min(1.0 / k**2, state.deltas[-1][1])
    delta2 = delta2_cap
    prev_values = state.values
    while True:
        assembly[special] = ("u2", delta2)
        values = _assemble_values(assembly, state.graphs, state.templates, cfg, cap)
        trial = GlueState(
            cfg=cfg,
            cap=cap,
            c_target=state.c_target,
            c1_fitted=max(state.c1_fitted, template.fitted_c),
            step=k,
            assembly=assembly,
            values=values,
            graphs=state.graphs,
            templates=state.templates,
            thresholds=state.thresholds + [n_k],
            deltas=state.deltas + [(delta1, delta2)],
            sup_deltas=state.sup_deltas,
        )
        energies = trial.energies()
        if all(
            energies[n - 1] < trial.bound(n) for n in range(1, cap + 1)
        ):
            break
        delta2 /= 2
        if delta2 < 1e-300:
            raise NumericError("delta_2 scan exhausted float precision")
    trial.sup_deltas = state.sup_deltas + [
        float(np.max(np.abs(trial.values - prev_values)))
    ]
    return trial


def _all_words(length: int) -> list[Word]:
    if length == 0:
        return [()]
    out = []
    for idx in range(8**length):
        letters = []
        rest = idx
        for _ in range(length):
            rest, r = divmod(rest, 8)
            letters.append(r)
        out.append(tuple(reversed(letters)))
    return out


@dataclass
class GlueRun:
    state: GlueState
    steps_requested: int
    steps_completed: int
    stop_reason: str | None


def run_glue(
    steps: int,
    cap: int,
    cfg: EnergyConfig,
    c_target: float | None = None,
    force_thresholds: list[int] | None = None,
) -> GlueRun:
    """Seed and iterate the gluing construction for up to ``steps`` steps.

    ``c_target=None`` uses fitted-constant-plus-one from the deepest
    template the run will need. Stops early with a recorded reason when the
    threshold scan reaches the cap; raises only if no step at all could
    run and no seed invariant holds.
    """
    graphs = _build_graph_family(cap)
    templates: dict[int, U1Surrogate] = {}
    if c_target is None:
        probe = u1_surrogate(min(cap - 1, RESISTANCE_CAP), cfg, graphs=graphs)
        templates[probe.level] = probe
        c_target = probe.fitted_c + 1.0
        c1 = probe.fitted_c
    else:
        c1 = 1.0
    state = seed_state(cfg, c_target, cap, c1, graphs=graphs, templates=templates)
    completed = 0
    reason = None
    for i in range(steps):
        forced = None
        if force_thresholds is not None and i < len(force_thresholds):
            forced = force_thresholds[i]
        try:
            state = glue_step(state, force_threshold=forced)
        except LevelCapError as exc:
            reason = str(exc)
            break
        completed += 1
    return GlueRun(
        state=state,
        steps_requested=steps,
        steps_completed=completed,
        stop_reason=reason,
    )
