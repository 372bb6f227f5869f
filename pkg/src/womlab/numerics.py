"""Scalar numerics shared by the analytic models.

Principal-branch Lambert W, a bracketing root finder, a grid-plus-refinement
box minimizer and the binary entropy function with its inverse on [0, 1/2].
Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "BRANCH_POINT",
    "BracketError",
    "BracketedInterval",
    "ConvergenceError",
    "DomainError",
    "SolverConfig",
    "binary_entropy",
    "inverse_binary_entropy",
    "lambert_w0",
    "minimize_box",
    "solve_scalar",
]

# -1/e as the nearest double; lambert_w0(BRANCH_POINT) == -1 exactly.
BRANCH_POINT = -math.exp(-1.0)

_EPS = np.finfo(float).eps
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class DomainError(ValueError):
    """Argument outside the domain of a function."""


class BracketError(ValueError):
    """Root-finding interval does not bracket a sign change."""


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted before the tolerance was met."""


@dataclass(frozen=True)
class BracketedInterval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"interval endpoints must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class SolverConfig:
    abs_tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


DEFAULT_CONFIG = SolverConfig()

# Puiseux coefficients of W0 around the branch point in p = sqrt(2(e x + 1)).
_BRANCH_SERIES = (-1.0, 1.0, -1.0 / 3.0, 11.0 / 72.0, -43.0 / 540.0,
                  769.0 / 17280.0, -221.0 / 8505.0, 680863.0 / 43545600.0)


def _branch_series(x: float) -> float:
    # e*x + 1 evaluated relative to the stored branch point to limit cancellation
    q = 2.0 * math.e * (x - BRANCH_POINT) + 2.0 * (1.0 + math.e * BRANCH_POINT)
    p = math.sqrt(max(q, 0.0))
    w = 0.0
    for c in reversed(_BRANCH_SERIES):
        w = w * p + c
    return w


def lambert_w0(x: float, cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """Principal branch W0 of the Lambert W function for real ``x >= -1/e``.

    Halley iteration from a series (near the branch point), ``log1p`` (moderate
    ``x``) or asymptotic (large ``x``) starting guess.  Inputs within
    ``cfg.abs_tol`` below ``-1/e`` are treated as the branch point.

    Raises DomainError below the branch point and ConvergenceError if the
    residual ``|w e^w - x|`` is not within ``abs_tol * max(1, |x|)``.
    """
    x = float(x)
    if math.isnan(x):
        raise DomainError("lambert_w0 of NaN")
    if x < BRANCH_POINT - cfg.abs_tol:
        raise DomainError(f"lambert_w0 undefined for x={x!r} < -1/e")
    if x <= BRANCH_POINT:
        return -1.0
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf

    tol = cfg.abs_tol * max(1.0, abs(x))
    if x - BRANCH_POINT <= 1e-6:
        # Halley stalls as w -> -1; the truncated series is already below 1e-14 here.
        w = _branch_series(x)
        if abs(w * math.exp(w) - x) <= tol:
            return max(w, -1.0)
    elif x < -0.25:
        w = _branch_series(x)
    elif x < 3.0:
        w = math.log1p(x)
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1

    for _ in range(cfg.max_iter):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if abs(dw) <= 4.0 * _EPS * (1.0 + abs(w)):
            break
    w = max(w, -1.0)
    if not abs(w * math.exp(w) - x) <= tol:
        raise ConvergenceError(f"lambert_w0({x!r}) did not converge (w={w!r})")
    return w


def solve_scalar(
    f: Callable[[float], float],
    target: float,
    interval: BracketedInterval,
    cfg: SolverConfig = DEFAULT_CONFIG,
    *,
    xtol: float = 0.0,
) -> float:
    """Find ``x`` in ``interval`` with ``|f(x) - target| <= cfg.abs_tol``.

    Safeguarded bisection: the bracket always holds a sign change, so the
    iteration converges for any continuous ``f``.  With ``xtol > 0`` the
    search also keeps halving until the bracket is narrower than ``xtol``.
    """
    lo, hi = interval.lo, interval.hi
    flo = f(lo) - target
    fhi = f(hi) - target
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if math.isnan(flo) or math.isnan(fhi) or (flo > 0) == (fhi > 0):
        raise BracketError(
            f"f - target has no sign change on [{lo}, {hi}] (values {flo}, {fhi})"
        )
    for _ in range(cfg.max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            # bracket collapsed to adjacent doubles
            best, fbest = (lo, flo) if abs(flo) <= abs(fhi) else (hi, fhi)
            if abs(fbest) <= cfg.abs_tol:
                return best
            raise ConvergenceError(
                f"bracket collapsed at x={best!r} with residual {fbest!r}"
            )
        fm = f(mid) - target
        if fm == 0.0 or (abs(fm) <= cfg.abs_tol and (xtol <= 0.0 or hi - lo <= 2.0 * xtol)):
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    raise ConvergenceError(f"solve_scalar exceeded {cfg.max_iter} iterations")


def _as_scalar_objective(
    f: Callable, vectorized: bool
) -> Callable[[np.ndarray], float]:
    def g(x: np.ndarray) -> float:
        try:
            v = f(x[None, :])[0] if vectorized else f(x)
        except (DomainError, ArithmeticError, ValueError):
            return math.inf
        v = float(v)
        return v if math.isfinite(v) else math.inf

    return g


def _golden(g: Callable[[float], float], a: float, b: float, tol: float) -> tuple[float, float]:
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    gc, gd = g(c), g(d)
    while b - a > tol:
        if gc <= gd:
            b, d, gd = d, c, gc
            c = b - _INV_PHI * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + _INV_PHI * (b - a)
            gd = g(d)
    return (c, gc) if gc <= gd else (d, gd)


def _grid_axes(box: Sequence[BracketedInterval]) -> list[np.ndarray]:
    d = len(box)
    if d == 1:
        pitch = 1e-3
        return [np.linspace(iv.lo, iv.hi, int(round(iv.width / pitch)) + 1) for iv in box]
    per_axis = [int(round(iv.width / 1e-2)) + 1 for iv in box]
    if math.prod(per_axis) > 250_000:
        # keep the scan affordable in higher dimensions
        n = max(3, int(250_000 ** (1.0 / d)))
        per_axis = [n] * d
    return [np.linspace(iv.lo, iv.hi, n) for iv, n in zip(box, per_axis)]


def minimize_box(
    f: Callable,
    box: Sequence[BracketedInterval],
    cfg: SolverConfig = DEFAULT_CONFIG,
    *,
    vectorized: bool = False,
) -> tuple[np.ndarray, float]:
    """Minimize ``f`` over an axis-aligned box.

    A uniform grid scan (pitch 1e-3 in 1-D, 1e-2 per axis in 2-D, coarser
    beyond) is followed by golden-section refinement (1-D) or cyclic
    coordinate descent with golden-section line searches (multi-D) around the
    best grid point.  Evaluations that raise DomainError/ArithmeticError or
    return a non-finite value count as ``+inf``.

    If ``vectorized`` is true, ``f`` maps an ``(n, d)`` array to ``n`` values.
    Returns ``(x_best, f_best)``; ``f_best`` is ``inf`` if nothing was feasible.
    """
    box = list(box)
    d = len(box)
    if d == 0:
        raise ValueError("empty box")
    axes = _grid_axes(box)
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    g = _as_scalar_objective(f, vectorized)
    if vectorized:
        with np.errstate(all="ignore"):
            vals = np.asarray(f(mesh), dtype=float)
        vals = np.where(np.isfinite(vals), vals, np.inf)
    else:
        vals = np.array([g(x) for x in mesh])
    k = int(np.argmin(vals))
    x_best, f_best = mesh[k].copy(), float(vals[k])
    if not math.isfinite(f_best):
        return x_best, f_best

    steps = [
        (ax[1] - ax[0]) if len(ax) > 1 else iv.width for ax, iv in zip(axes, box)
    ]
    xtol = max(cfg.abs_tol, 1e-11)
    if d == 1:
        iv = box[0]
        a = max(iv.lo, x_best[0] - steps[0])
        b = min(iv.hi, x_best[0] + steps[0])
        xc, fc = _golden(lambda s: g(np.array([s])), a, b, xtol)
        if fc < f_best:
            x_best, f_best = np.array([xc]), fc
        return x_best, f_best

    h = list(steps)
    for _ in range(cfg.max_iter):
        improved = False
        for i, iv in enumerate(box):
            a = max(iv.lo, x_best[i] - h[i])
            b = min(iv.hi, x_best[i] + h[i])
            if b - a <= xtol:
                continue
            trial = x_best.copy()

            def line(s: float, i: int = i, trial: np.ndarray = trial) -> float:
                trial[i] = s
                return g(trial)

            xc, fc = _golden(line, a, b, xtol)
            if fc < f_best - 1e-15 * abs(f_best):
                x_best = x_best.copy()
                x_best[i] = xc
                f_best = fc
                improved = True
        if not improved:
            h = [s / 4.0 for s in h]
            if max(h) < 1e-9:
                break
    return x_best, f_best


def binary_entropy(p: float) -> float:
    """h(p) = -p log2 p - (1-p) log2(1-p), with 0 log 0 = 0."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"binary_entropy needs p in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def inverse_binary_entropy(h: float) -> float:
    """The unique p in [0, 1/2] with binary_entropy(p) == h."""
    h = float(h)
    if not 0.0 <= h <= 1.0:
        raise DomainError(f"inverse_binary_entropy needs h in [0, 1], got {h!r}")
    if h == 0.0:
        return 0.0
    if h == 1.0:
        return 0.5
    return solve_scalar(
        binary_entropy, h, BracketedInterval(0.0, 0.5),
        SolverConfig(abs_tol=1e-12, max_iter=2000), xtol=1e-17,
    )
