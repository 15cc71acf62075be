"""Finite-dimensional spectral families and subordinated energy forms.

A symmetric positive-semidefinite operator L is decomposed into its full
eigensystem; the spectral measure of a vector u places mass (q_i . u)^2 at
eigenvalue lambda_i. The Dirichlet energy of u is then the first moment
sum(lambda m), the subordinated energy of order delta in (0, 1) is
sum(lambda^delta m), and the same number is reproduced independently by the
Gamma-weighted quadrature

    (delta / Gamma(1-delta)) * integral_0^inf s^(-delta) E_(s)(u, u) ds,

where E_(s)(u, u) = (u - T_s u, u)/s and T_s = exp(-sL). The jump-kernel
reconstruction integrates s^(-1-delta) p_s(x, y) entrywise and must satisfy

    (1/2) sum_xy (u(x)-u(y))^2 J(x, y) = sum lambda^delta m

for conservative L (zero row sums). The dyadic-block measures realise the
unbounded-generator counterexample: first-moment partial sums grow linearly
in the number of blocks while every subordinated sum stays below a closed
geometric bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.special import gamma as gamma_fn

from .errors import ArgumentError, NumericError
from .quadrature import QuadratureResult, integrate_halfline

DIMENSION_CAP = 2500
EIG_CLAMP = 1e-10


@dataclass(frozen=True)
class SpectralMeasure:
    """Mass placed on nonnegative eigenvalues, sorted by eigenvalue."""

    lambdas: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        if self.lambdas.shape != self.masses.shape:
            raise ArgumentError("lambda/mass arrays must align")
        if np.any(self.lambdas < 0) or np.any(self.masses < 0):
            raise ArgumentError("eigenvalues and masses must be nonnegative")
        if np.any(np.diff(self.lambdas) < 0):
            raise ArgumentError("eigenvalues must be sorted")

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    def first_moment(self) -> float:
        """The Dirichlet energy sum(lambda * mass)."""
        return float(np.sum(self.lambdas * self.masses))


@dataclass(frozen=True)
class OperatorSpectrum:
    """Full eigensystem of a symmetric PSD operator."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])


@dataclass(frozen=True)
class SubordinationParams:
    """Order delta in (0, 1) plus quadrature controls.

    ``split`` defaults to the scale 1/median(positive eigenvalues) at which
    the time integrand changes regime.
    """

    delta: float
    split: float | None = None
    rel_tol: float = 1e-9
    max_subdivisions: int = 200_000

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ArgumentError(f"delta={self.delta} outside (0, 1)")


def decompose(matrix: np.ndarray) -> OperatorSpectrum:
    """Eigendecomposition with symmetry and positivity checks.

    Eigenvalues in (-1e-10, 0) are clamped to zero (roundoff from the dense
    solver); anything more negative is a hard error. The reconstruction
    Q diag(lambda) Q^T must match the input to 1e-9 relative in max norm.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ArgumentError("operator must be a square matrix")
    if a.shape[0] > DIMENSION_CAP:
        raise ArgumentError(
            f"dimension {a.shape[0]} exceeds the dense cap {DIMENSION_CAP}"
        )
    scale = max(float(np.max(np.abs(a))), 1e-300)
    asym = float(np.max(np.abs(a - a.T)))
    if asym > 1e-12 * scale:
        raise NumericError(f"operator asymmetry {asym:.3e} exceeds 1e-12 * scale")
    a = 0.5 * (a + a.T)
    lam, q = eigh(a)
    if lam[0] < -EIG_CLAMP * max(1.0, scale):
        raise NumericError(
            f"eigenvalue {lam[0]:.3e} is genuinely negative; operator not PSD"
        )
    lam = np.where(lam < 0.0, 0.0, lam)
    recon = float(np.max(np.abs((q * lam) @ q.T - a)))
    if recon > 1e-9 * max(scale, 1e-30):
        raise NumericError(f"eigendecomposition residual {recon:.3e} too large")
    return OperatorSpectrum(matrix=a, eigenvalues=lam, eigenvectors=q)


def spectral_measure(spec: OperatorSpectrum, u: np.ndarray) -> SpectralMeasure:
    """Masses (q_i . u)^2 at the eigenvalues; total mass is |u|^2."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (spec.dim,):
        raise ArgumentError(f"vector length {u.shape} does not match dim {spec.dim}")
    coeff = spec.eigenvectors.T @ u
    return SpectralMeasure(lambdas=spec.eigenvalues.copy(), masses=coeff**2)


def energy_t(mu: SpectralMeasure, t: float) -> float:
    """The t-approximation (1/t) sum (1 - e^(-t lambda)) mass.

    Monotone non-increasing in t with limit sum(lambda mass) as t -> 0.
    """
    if t <= 0:
        raise ArgumentError("t must be positive")
    return float(np.sum(-np.expm1(-t * mu.lambdas) * mu.masses) / t)


def subordinated_energy(mu: SpectralMeasure, p: SubordinationParams) -> float:
    """Spectral-sum route: sum lambda^delta mass with 0^delta = 0."""
    lam = mu.lambdas
    out = np.zeros_like(lam)
    pos = lam > 0
    out[pos] = lam[pos] ** p.delta
    return float(np.sum(out * mu.masses))


def _default_split(lambdas: np.ndarray) -> float:
    pos = lambdas[lambdas > 0]
    if pos.size == 0:
        return 1.0
    return 1.0 / float(np.median(pos))


def subordinated_energy_quadrature(
    mu: SpectralMeasure, p: SubordinationParams
) -> float:
    """Quadrature route through the t-approximations.

    Evaluates (delta/Gamma(1-delta)) * integral s^(-delta) E_(s) ds by
    adaptive Simpson on the log axis; independent of the spectral-sum route
    except for sharing the measure.
    """
    if mu.total_mass == 0 or mu.first_moment() == 0:
        return 0.0
    lam = mu.lambdas
    masses = mu.masses
    c = p.delta / gamma_fn(1.0 - p.delta)
    split = p.split if p.split is not None else _default_split(lam)

    def integrand(s: float) -> float:
        return c * s ** (-1.0 - p.delta) * float(np.sum(-np.expm1(-s * lam) * masses))

    res = integrate_halfline(
        integrand,
        split=split,
        rel_tol=p.rel_tol,
        max_subdivisions=p.max_subdivisions,
    )
    return float(res.value)


def heat_kernel_matrix(spec: OperatorSpectrum, t: float) -> np.ndarray:
    """Q e^(-t Lambda) Q^T; rows sum to one when L has zero row sums."""
    if t <= 0:
        raise ArgumentError("t must be positive")
    w = np.exp(-t * spec.eigenvalues)
    return (spec.eigenvectors * w) @ spec.eigenvectors.T


def is_conservative(spec: OperatorSpectrum, tol: float = 1e-9) -> bool:
    rows = np.abs(spec.matrix @ np.ones(spec.dim))
    return bool(np.max(rows) <= tol * max(1.0, float(np.max(np.abs(spec.matrix)))))


def jump_kernel(
    spec: OperatorSpectrum, p: SubordinationParams
) -> tuple[np.ndarray, np.ndarray]:
    """Entrywise quadrature of the subordinated jump kernel and killing term.

    J(x, y) = (delta/Gamma(1-delta)) * integral s^(-1-delta) p_s(x, y) ds for
    x != y; the diagonal diverges and is set to zero. Off-diagonal entries
    of p_s are evaluated in the cancellation-free form
    sum_i expm1(-s lambda_i) q_i q_i^T (exact off the diagonal because the
    eigenvector outer products resolve the identity), so the integrand stays
    accurate down to s -> 0. The killing vector integrates the row defect
    1 - sum_y p_s(x, y) the same way and vanishes for conservative L.
    """
    lam = spec.eigenvalues
    q = spec.eigenvectors
    c = p.delta / gamma_fn(1.0 - p.delta)
    split = p.split if p.split is not None else _default_split(lam)
    row_defect = q.T @ np.ones(spec.dim)  # (q_i . 1); ~0 for conservative L

    def integrand(s: float) -> np.ndarray:
        em = np.expm1(-s * lam)
        p_off = (q * em) @ q.T
        np.fill_diagonal(p_off, 0.0)
        kill = -(q * em) @ row_defect
        w = c * s ** (-1.0 - p.delta)
        return w * np.concatenate([p_off.reshape(-1), kill])

    res = integrate_halfline(
        integrand,
        split=split,
        rel_tol=p.rel_tol,
        max_subdivisions=p.max_subdivisions,
    )
    flat = np.asarray(res.value)
    n = spec.dim
    jump = flat[: n * n].reshape(n, n)
    jump = 0.5 * (jump + jump.T)
    killing = flat[n * n :]
    return jump, killing


def jump_reconstruction_energy(jump: np.ndarray, u: np.ndarray) -> float:
    """(1/2) sum_xy (u(x) - u(y))^2 J(x, y)."""
    u = np.asarray(u, dtype=np.float64)
    diff = u[:, None] - u[None, :]
    return 0.5 * float(np.sum(diff * diff * jump))


def dyadic_counterexample(blocks: list[tuple[int, float]]) -> SpectralMeasure:
    """Measure with mass 2^-(k+1) at one eigenvalue inside each dyadic block.

    Each (k, lambda_k) must satisfy 2^k < lambda_k <= 2^(k+1) with distinct
    k. First-moment partial sums grow at least linearly in the number of
    blocks while every subordinated sum stays below the geometric bound
    sum 2^(-(1-delta)(k+1)).
    """
    ks = [k for k, _ in blocks]
    if len(set(ks)) != len(ks):
        raise ArgumentError("block indices must be distinct")
    for k, lam in blocks:
        if k < 0:
            raise ArgumentError(f"block index {k} must be nonnegative")
        if not 2.0**k < lam <= 2.0 ** (k + 1):
            raise ArgumentError(
                f"lambda={lam} outside the dyadic block (2^{k}, 2^{k+1}]"
            )
    pairs = sorted((float(lam), 2.0 ** -(k + 1)) for k, lam in blocks)
    lambdas = np.array([p[0] for p in pairs])
    masses = np.array([p[1] for p in pairs])
    if lambdas.size == 0:
        lambdas = np.zeros(0)
        masses = np.zeros(0)
    return SpectralMeasure(lambdas=lambdas, masses=masses)


def dyadic_subordinated_bound(block_count: int, delta: float) -> float:
    """Closed form sum_{k<K} 2^(-(1-delta)(k+1)) bounding the subordinated sum."""
    k = np.arange(block_count)
    return float(np.sum(2.0 ** (-(1.0 - delta) * (k + 1))))


def tail_monotonicity_check(
    mu: SpectralMeasure, d1: float, d2: float
) -> tuple[float, float]:
    """Tail sums over lambda > 1 for two orders d1 < d2; t1 <= t2 always."""
    if not 0.0 < d1 < d2 < 1.0:
        raise ArgumentError("need 0 < d1 < d2 < 1")
    mask = mu.lambdas > 1.0
    lam = mu.lambdas[mask]
    m = mu.masses[mask]
    return float(np.sum(lam**d1 * m)), float(np.sum(lam**d2 * m))


def domination_check(
    spec: OperatorSpectrum, u: np.ndarray, delta: float
) -> tuple[float, float]:
    """(subordinated energy + |u|^2, 2 * (energy + |u|^2)); lhs <= rhs."""
    p = SubordinationParams(delta=delta)
    mu = spectral_measure(spec, u)
    lhs = subordinated_energy(mu, p) + mu.total_mass
    rhs = 2.0 * (mu.first_moment() + mu.total_mass)
    return lhs, rhs
