"""Closed-form erasure-factor models.

Three systems are covered under uniform random page writes and greedy GC:

* ``baseline``  -- page-mapped FTL, no rewriting code;
* ``naive_wom`` -- every page is a fixed-rate t-write WOM codeword, so a block
  holds ``R*Z`` physical pages;
* ``cp_wom``    -- capacity-preserving scheme with rate pair (1, 1/2): blocks are
  filled losslessly, then their invalid pages take a second write at two
  physical pages per logical page.

All models are expressed through the storage rate ``alpha = U/T``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .numerics import (
    BRANCH_POINT,
    BracketedInterval,
    BracketError,
    DomainError,
    SolverConfig,
    inverse_binary_entropy,
    lambert_w0,
    minimize_box,
    solve_scalar,
)

# Per-write rate of the best two-write fixed-rate code and its sum-rate.
FIXED_RATE_T2 = 0.77
FIXED_SUM_RATE_T2 = 1.54

# gamma1 = 0 is evaluated as this limit (the log term diverges at zero).
GAMMA_FLOOR = 1e-9

RESIDUAL_TOL = 1e-9


class InfeasibleError(DomainError):
    """No steady state exists for the requested (alpha, gamma) point."""


class NoCrossoverError(ValueError):
    """Two erasure-factor curves do not cross on the scanned interval."""


class System(str, enum.Enum):
    BASELINE = "baseline"
    NAIVE_WOM = "naive_wom"
    CP_WOM = "cp_wom"

    @classmethod
    def parse(cls, name: "str | System") -> "System":
        if isinstance(name, System):
            return name
        key = name.strip().lower().replace("-", "_")
        aliases = {"base": "baseline", "naive": "naive_wom", "cp": "cp_wom", "cpwom": "cp_wom"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class SystemParams:
    """Device geometry: Z pages per block, T physical and U logical pages."""

    Z: int
    T: int
    U: int

    def __post_init__(self) -> None:
        if self.Z < 1:
            raise ValueError("Z must be >= 1")
        if self.T % self.Z or self.U % self.Z:
            raise ValueError("T and U must be multiples of Z")
        if not 0 < self.U < self.T:
            raise ValueError(f"need 0 < U < T, got U={self.U}, T={self.T}")

    @classmethod
    def from_alpha(cls, alpha: float, Z: int = 256, blocks: int = 2048) -> "SystemParams":
        """Largest block-aligned U not exceeding ``alpha * T`` (at least one block)."""
        if not 0.0 < alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
        logical_blocks = min(max(1, int(math.floor(alpha * blocks + 1e-9))), blocks - 1)
        return cls(Z=Z, T=blocks * Z, U=logical_blocks * Z)

    @property
    def blocks(self) -> int:
        return self.T // self.Z

    @property
    def rho(self) -> float:
        return (self.T - self.U) / self.U

    @property
    def alpha(self) -> float:
        return self.U / self.T


@dataclass(frozen=True)
class AnalyticResult:
    system: System
    t: int
    alpha: float
    ef: float
    solution: dict = field(default_factory=dict)


@dataclass(frozen=True)
class WomCodeSpec:
    """Write count and per-write rates of a binary WOM code."""

    t: int
    rates: tuple
    fixed_rate: bool = False

    def __post_init__(self) -> None:
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "rates", rates)
        if self.t < 1 or len(rates) != self.t:
            raise ValueError(f"need t >= 1 rates, got t={self.t}, rates={rates}")
        if any(r <= 0 for r in rates):
            raise ValueError("rates must be positive")
        if self.fixed_rate and len(set(rates)) != 1:
            raise ValueError("fixed-rate code needs equal rates")
        if sum(rates) > math.log2(self.t + 1) + 1e-12:
            raise ValueError(
                f"sum-rate {sum(rates):.4f} exceeds log2(t+1) = {math.log2(self.t + 1):.4f}"
            )

    @property
    def sum_rate(self) -> float:
        return sum(self.rates)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def _rate_transform(x: float) -> float:
    # -x W(-(1/x) e^{-1/x}): the nontrivial root y of x = (y - 1)/ln y.
    z = -math.exp(-1.0 / x - math.log(x))
    return -x * lambert_w0(z)


def alpha_prime(alpha: float) -> float:
    """Valid-page fraction of a block at erase time in the baseline system.

    Solves ``alpha = (a' - 1)/ln a'`` for the root in (0, 1).
    """
    return _rate_transform(_check_alpha(alpha))


def alpha_prime_bisect(alpha: float) -> float:
    """Same root as :func:`alpha_prime`, found by bisection instead of Lambert W."""
    alpha = _check_alpha(alpha)
    f = lambda y: (y - 1.0) / math.log(y)
    return solve_scalar(f, alpha, BracketedInterval(1e-300, 1.0 - 1e-15),
                        SolverConfig(abs_tol=1e-13, max_iter=2000))


def ef_baseline(alpha: float) -> AnalyticResult:
    ap = alpha_prime(alpha)
    return AnalyticResult(System.BASELINE, 1, float(alpha), 1.0 / (1.0 - ap), {"alpha_prime": ap})


def _default_rate(t: int, R: Optional[float]) -> float:
    if R is not None:
        return float(R)
    if t == 2:
        return FIXED_RATE_T2
    raise ValueError(f"a per-write rate R is required for t={t} (only t=2 has a default)")


def ef_naive(alpha: float, R: Optional[float] = None, t: int = 2) -> AnalyticResult:
    """Naive-WOM erasure factor ``1/(t (1 - beta'))`` with ``beta = alpha/R``.

    ``R`` defaults to 0.77 for ``t == 2`` and is required otherwise.
    """
    alpha = _check_alpha(alpha)
    R = _default_rate(t, R)
    if not 0.0 < R <= 1.0:
        raise DomainError(f"rate R must lie in (0, 1], got {R}")
    if t < 1:
        raise ValueError("t must be >= 1")
    beta = alpha / R
    if beta >= 1.0:
        raise DomainError(f"naive-WOM needs alpha < R (alpha={alpha}, R={R})")
    bp = _rate_transform(beta)
    return AnalyticResult(
        System.NAIVE_WOM, t, alpha, 1.0 / (t * (1.0 - bp)),
        {"R": R, "beta": beta, "beta_prime": bp},
    )


def naive_beats_baseline(alpha: float, R: float = FIXED_RATE_T2) -> bool:
    """Whether the two-write naive-WOM system has EF no worse than the baseline."""
    alpha = _check_alpha(alpha)
    if not 0.0 < alpha <= R:
        raise DomainError(f"need alpha in (0, R], got alpha={alpha}, R={R}")
    lhs = 1.0 + alpha * lambert_w0(-(1.0 / alpha) * math.exp(-1.0 / alpha))
    rhs = 2.0 * (1.0 + (alpha / R) * lambert_w0(-(R / alpha) * math.exp(-R / alpha)))
    return lhs <= rhs


def cp_gamma2(alpha: float, gamma1: float) -> float:
    """Valid-page fraction at erase of second-write blocks in the CP-WOM system.

    Raises InfeasibleError when the Lambert argument falls below -1/e or the
    root exceeds the second-write capacity ``(1 + gamma1)/2``.
    """
    alpha = _check_alpha(alpha)
    if not 0.0 <= gamma1 <= 1.0:
        raise DomainError(f"gamma1 must lie in [0, 1], got {gamma1}")
    g1 = max(gamma1, GAMMA_FLOOR)
    exponent = math.log((1.0 + g1) / (2.0 * g1)) + (g1 - 3.0) / (2.0 * alpha) - math.log(alpha)
    z = -math.exp(exponent)
    if z < BRANCH_POINT - 1e-15:
        raise InfeasibleError(f"no steady state for alpha={alpha}, gamma1={gamma1}")
    g2 = -alpha * lambert_w0(max(z, BRANCH_POINT))
    if g2 > (1.0 + g1) / 2.0:
        raise InfeasibleError(
            f"gamma2={g2:.6g} exceeds second-write capacity for alpha={alpha}, gamma1={gamma1}"
        )
    return g2


def cp_alpha_relation(gamma1: float, gamma2: float) -> float:
    """Storage rate implied by a (gamma1, gamma2) steady state."""
    g1 = max(gamma1, GAMMA_FLOOR)
    return (1.5 - g1 / 2.0 - gamma2) / math.log((1.0 + g1) / (2.0 * g1 * gamma2))


def ef_cp_given_gamma1(alpha: float, gamma1: float) -> AnalyticResult:
    g2 = cp_gamma2(alpha, gamma1)
    g1 = max(gamma1, GAMMA_FLOOR)
    ef = 1.0 / (1.5 - g1 / 2.0 - g2)
    return AnalyticResult(System.CP_WOM, 2, float(alpha), ef, {"gamma1": float(gamma1), "gamma2": g2})


def _cp_ef_or_inf(alpha: float, gamma1: float) -> float:
    try:
        return ef_cp_given_gamma1(alpha, gamma1).ef
    except InfeasibleError:
        return math.inf


def ef_cp_optimal(alpha: float) -> AnalyticResult:
    """Two-write CP-WOM erasure factor at the best GC threshold gamma1 in [0, 1]."""
    alpha = _check_alpha(alpha)
    x, _ = minimize_box(lambda v: _cp_ef_or_inf(alpha, float(v[0])), [BracketedInterval(0.0, 1.0)])
    return ef_cp_given_gamma1(alpha, float(x[0]))


# --- t-write CP-WOM -------------------------------------------------------


def _multiwrite_solve(alpha: float, prefix: np.ndarray, t: int):
    """Recover the last-stage fraction gamma_t for rows of (gamma_1..gamma_{t-1}).

    Bisection in log(gamma_t) on the increasing branch ``gamma_t <= alpha`` of
    ``A - gamma_t - alpha * (K - ln gamma_t)``, where ``A - gamma_t`` is the
    denominator of the erasure factor and ``K - ln gamma_t`` the summed log terms.
    Returns ``(gamma_t, ef)``; infeasible rows get ``nan`` and ``inf``.
    """
    g = np.maximum(np.atleast_2d(np.asarray(prefix, dtype=float)), GAMMA_FLOOR)
    n = g.shape[0]
    feasible = np.all(g <= 1.0, axis=1)
    A = 2.0 - 2.0 ** (1 - t) - g.sum(axis=1) / 2.0
    K = np.zeros(n)
    prev = np.zeros(n)
    with np.errstate(all="ignore"):
        for j in range(1, t):
            term = np.log((1.0 + 2.0 ** (j - 2) * prev) / (2.0 ** (j - 1) * g[:, j - 1]))
            feasible &= term > 0.0
            K += term
            prev = g[:, j - 1]
        upper = (1.0 + 2.0 ** (t - 2) * prev) / 2.0 ** (t - 1)
        K += np.log(upper)
        hi = np.log(np.minimum(alpha, upper))
        lo = np.full(n, math.log(1e-300))

        def h(u):
            return A - np.exp(u) - alpha * (K - u)

        feasible &= h(hi) >= 0.0
        root_below = h(lo) > 0.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            pos = h(mid) > 0.0
            hi = np.where(pos, mid, hi)
            lo = np.where(pos, lo, mid)
        u = np.where(root_below, lo, 0.5 * (lo + hi))
        gt = np.exp(u)
        den = A - gt
        ratio = den / (K - u)
        feasible &= (den > 0.0) & (np.abs(ratio - alpha) <= RESIDUAL_TOL)
        feasible |= root_below & (den > 0.0)
    ef = np.where(feasible, 1.0 / den, np.inf)
    gt = np.where(feasible, gt, np.nan)
    return gt, ef


def ef_cp_multiwrite_given(alpha: float, gammas: Sequence[float], t: Optional[int] = None) -> AnalyticResult:
    """t-write CP-WOM erasure factor for fixed thresholds gamma_1..gamma_{t-1}."""
    alpha = _check_alpha(alpha)
    gammas = [float(v) for v in gammas]
    t = len(gammas) + 1 if t is None else t
    if len(gammas) != t - 1 or t < 2:
        raise ValueError(f"need t-1 thresholds for t={t}, got {len(gammas)}")
    gt, ef = _multiwrite_solve(alpha, np.array([gammas]), t)
    if not math.isfinite(ef[0]):
        raise InfeasibleError(f"no steady state for alpha={alpha}, gammas={gammas}")
    sol = {f"gamma{j + 1}": v for j, v in enumerate(gammas)}
    sol[f"gamma{t}"] = float(gt[0])
    return AnalyticResult(System.CP_WOM, t, alpha, float(ef[0]), sol)


def ef_cp_multiwrite(alpha: float, t: int) -> AnalyticResult:
    """t-write CP-WOM erasure factor, minimized over gamma_1..gamma_{t-1} in [0, 1]."""
    alpha = _check_alpha(alpha)
    if t < 2:
        raise ValueError("t must be >= 2")
    box = [BracketedInterval(0.0, 1.0)] * (t - 1)
    x, _ = minimize_box(lambda G: _multiwrite_solve(alpha, G, t)[1], box, vectorized=True)
    return ef_cp_multiwrite_given(alpha, x, t)


# --- capacity ---------------------------------------------------------------


def capacity_contains(R1: float, R2: float) -> bool:
    """Membership of (R1, R2) in the binary two-write WOM capacity region."""
    if R1 < 0 or R2 < 0:
        raise DomainError("rates must be non-negative")
    if R1 > 1.0:
        return False
    return R2 <= 1.0 - inverse_binary_entropy(R1)


def max_sum_rate(t: int, fixed_rate: bool = False) -> Optional[float]:
    """Largest achievable sum-rate of a binary t-write WOM code.

    Variable-rate codes reach ``log2(t+1)``.  For fixed-rate codes only the
    two-write value (1.54) is known here; other ``t`` return None.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    if t == 1:
        return 1.0
    if not fixed_rate:
        return math.log2(t + 1)
    if t == 2:
        return FIXED_SUM_RATE_T2
    return None


# --- comparisons --------------------------------------------------------------


def evaluate(system: "System | str", alpha: float, t: int = 2, R: Optional[float] = None) -> AnalyticResult:
    """Optimal analytic erasure factor of ``system`` at storage rate ``alpha``."""
    system = System.parse(system)
    if system is System.BASELINE:
        return ef_baseline(alpha)
    if system is System.NAIVE_WOM:
        return ef_naive(alpha, R, t)
    if t == 2:
        return ef_cp_optimal(alpha)
    return ef_cp_multiwrite(alpha, t)


def find_crossover(
    system_a: "System | str",
    system_b: "System | str",
    R: Optional[float] = None,
    t: int = 2,
    step: float = 0.01,
) -> float:
    """Storage rate at which the erasure factors of two systems coincide.

    Scans alpha on a grid of pitch ``step`` over the common domain, then
    bisects the first sign change of ``EF_a - EF_b``.
    """
    a, b = System.parse(system_a), System.parse(system_b)
    hi = 1.0 - step
    if System.NAIVE_WOM in (a, b):
        hi = min(hi, _default_rate(t, R) - 1e-6)

    def diff(x: float) -> float:
        return evaluate(a, x, t, R).ef - evaluate(b, x, t, R).ef

    grid = np.arange(step, hi, step).tolist() + [hi]
    prev_x, prev_d = grid[0], diff(grid[0])
    for x in grid[1:]:
        d = diff(x)
        if (d > 0) != (prev_d > 0) or d == 0.0:
            try:
                return solve_scalar(diff, 0.0, BracketedInterval(prev_x, x),
                                    SolverConfig(abs_tol=1e-9), xtol=1e-9)
            except BracketError:  # pragma: no cover - guarded by the scan
                break
        prev_x, prev_d = x, d
    raise NoCrossoverError(f"{a.value} and {b.value} do not cross on [{step}, {hi:.4f}]")
