"""Adaptive quadrature over (0, infinity) for power-law/exponential integrands.

All the half-line integrals in this package share one shape: a power-law
head, a smooth middle, and an exponentially decaying tail. The engine
substitutes t = e^x, brackets the support by expanding a window around a
caller-supplied split point until the integrand is negligible at both ends,
then runs adaptive Simpson with Richardson error control on the bracket.
Integrands may be scalar or array valued; the error norm is max-abs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, QuadratureError

# exp(x) overflows past ~709; stay clear of it when expanding the window
_X_LIMIT = 700.0


@dataclass
class QuadratureResult:
    value: np.ndarray | float
    error_estimate: float
    evaluations: int
    subdivisions: int


def integrate_halfline(
    f,
    split: float,
    rel_tol: float = 1e-10,
    max_subdivisions: int = 100_000,
    window_step: float = 4.0,
    tail_rtol: float = 1e-13,
    t_max: float | None = None,
) -> QuadratureResult:
    """Integral of f over (0, inf), or (0, t_max) if given, via x = log t.

    ``split`` marks the interesting scale (typically where the integrand
    changes regime); the bracket grows outward from log(split) in steps of
    ``window_step`` until the transformed integrand at both ends falls below
    ``tail_rtol`` times its peak, or hits log(t_max). Raises
    QuadratureError, carrying the best estimate, if the subdivision budget
    runs out.
    """
    if split <= 0:
        raise ArgumentError("split point must be positive")
    evals = [0]

    def g(x: float):
        evals[0] += 1
        t = float(np.exp(x))
        return np.asarray(f(t), dtype=np.float64) * t

    x0 = float(np.log(split))
    x_cap = _X_LIMIT if t_max is None else min(_X_LIMIT, float(np.log(t_max)))
    if x0 > x_cap - 1e-9:
        x0 = x_cap - window_step
    lo, hi = x0 - window_step, min(x0 + window_step, x_cap)
    glo, ghi = g(lo), g(hi)
    gpeak = max(_norm(g(x0)), _norm(glo), _norm(ghi), 1e-300)
    while _norm(glo) > tail_rtol * gpeak and lo > -_X_LIMIT:
        lo -= window_step
        glo = g(lo)
        gpeak = max(gpeak, _norm(glo))
    while hi < x_cap and _norm(ghi) > tail_rtol * gpeak:
        hi = min(hi + window_step, x_cap)
        ghi = g(hi)
        gpeak = max(gpeak, _norm(ghi))

    value, err, nsub = _adaptive_simpson(g, lo, hi, rel_tol, max_subdivisions)
    if value.shape == ():
        value = float(value)
    return QuadratureResult(
        value=value, error_estimate=err, evaluations=evals[0], subdivisions=nsub
    )


def _norm(v) -> float:
    return float(np.max(np.abs(v)))


def _adaptive_simpson(g, lo: float, hi: float, rel_tol: float, budget: int):
    """Globally adaptive Simpson: repeatedly bisect the interval with the
    largest Richardson error estimate until the total meets the tolerance."""
    # interval record: (a, b, fa, fm, fb, simpson, error_estimate)
    def simpson(a, b, fa, fm, fb):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def make(a, b, fa, fb):
        m = 0.5 * (a + b)
        fm = g(m)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = g(lm), g(rm)
        coarse = simpson(a, b, fa, fm, fb)
        fine = simpson(a, m, fa, flm, fm) + simpson(m, b, fm, frm, fb)
        err = _norm(fine - coarse) / 15.0
        return [a, b, fa, fm, fb, fine + (fine - coarse) / 15.0, err]

    first = make(lo, hi, g(lo), g(hi))
    intervals = [first]
    total = np.asarray(first[5]).copy()
    total_err = first[6]
    nsub = 0
    while True:
        scale = max(_norm(total), 1e-300)
        if total_err <= rel_tol * scale:
            return np.asarray(total), total_err, nsub
        if nsub >= budget:
            raise QuadratureError(
                f"subdivision budget {budget} exhausted; achieved relative "
                f"error estimate {total_err / scale:.3e}",
                value=np.asarray(total),
                achieved=total_err / scale,
            )
        worst = max(range(len(intervals)), key=lambda i: intervals[i][6])
        a, b, fa, fm, fb, old_val, old_err = intervals[worst]
        m = 0.5 * (a + b)
        left = make(a, m, fa, fm)
        right = make(m, b, fm, fb)
        intervals[worst] = left
        intervals.append(right)
        total = total + (left[5] + right[5] - old_val)
        total_err += left[6] + right[6] - old_err
        nsub += 1


def integrate_interval(
    f, a: float, b: float, rel_tol: float = 1e-10, max_subdivisions: int = 100_000
) -> QuadratureResult:
    """Adaptive Simpson on a finite interval (no substitution)."""
    if not b > a:
        raise ArgumentError("need b > a")
    evals = [0]

    def g(x: float):
        evals[0] += 1
        return np.asarray(f(x), dtype=np.float64)

    value, err, nsub = _adaptive_simpson(g, a, b, rel_tol, max_subdivisions)
    if value.shape == ():
        value = float(value)
    return QuadratureResult(
        value=value, error_estimate=err, evaluations=evals[0], subdivisions=nsub
    )
