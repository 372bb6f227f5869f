"""Page-mapped FTL simulator for the baseline, naive-WOM and CP-WOM systems.

Host writes are uniform over the U logical pages.  Writes fill one open block
at a time; garbage collection runs only when the open block has no writable
slot left and no clean block remains.  Copies made by GC are written back
into the block just erased, which is equivalent to moving them to a clean
block and keeps the device without a spare-block reserve.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import _kernel as K
from .analytic import FIXED_RATE_T2, System, SystemParams, ef_cp_optimal

__all__ = [
    "ConfigError",
    "DeadlockError",
    "FtlState",
    "LifecycleError",
    "SimConfig",
    "SimReport",
    "ValidityHistogram",
    "check_invariants",
    "run",
    "run_baseline",
    "run_cp_wom",
    "run_naive",
    "snapshot_histogram",
    "step_write",
]

CHUNK = 1 << 16


class ConfigError(ValueError):
    pass


class DeadlockError(RuntimeError):
    """GC found no block that can make room for the next write."""


class LifecycleError(RuntimeError):
    """A slot was about to make a transition outside its allowed lifecycle."""


@dataclass(frozen=True)
class SimConfig:
    """One simulation run.

    ``warmup_writes`` counts every write before the counters reset: the
    sequential fill of all U logical pages plus uniform random writes.  It
    defaults to ``U + 2 * measured_writes``.  ``gamma1=None`` for the CP-WOM
    system means the analytically optimal threshold.
    """

    system: System
    params: SystemParams
    R: float = FIXED_RATE_T2
    gamma1: Optional[float] = None
    measured_writes: int = 10_000_000
    warmup_writes: Optional[int] = None
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "system", System.parse(self.system))
        if self.warmup_writes is not None and self.warmup_writes < self.params.U:
            raise ConfigError("warmup_writes must cover every logical page (>= U)")
        if self.measured_writes < 1:
            raise ConfigError("measured_writes must be positive")
        if self.system is System.NAIVE_WOM:
            if not 0.0 < self.R <= 1.0:
                raise ConfigError(f"rate R must lie in (0, 1], got {self.R}")
            if self.slots_per_block < 1:
                raise ConfigError("R*Z rounds to zero pages per block")
            if self.params.U >= self.params.blocks * self.slots_per_block:
                raise ConfigError("naive-WOM needs alpha < R (U < R*T)")
        if self.gamma1 is not None and not 0.0 <= self.gamma1 <= 1.0:
            raise ConfigError("gamma1 must lie in [0, 1]")

    @property
    def slots_per_block(self) -> int:
        if self.system is System.NAIVE_WOM:
            return int(round(self.R * self.params.Z))
        return self.params.Z

    @property
    def total_warmup(self) -> int:
        if self.warmup_writes is None:
            return self.params.U + 2 * self.measured_writes
        return self.warmup_writes

    def to_dict(self) -> dict:
        return {
            "system": self.system.value,
            "Z": self.params.Z,
            "T": self.params.T,
            "U": self.params.U,
            "R": self.R if self.system is System.NAIVE_WOM else None,
            "gamma1": self.gamma1,
            "measured_writes": self.measured_writes,
            "warmup_writes": self.total_warmup,
            "seed": self.seed,
        }


@dataclass
class ValidityHistogram:
    """``counts[s-1, i]`` = number of stage-s blocks holding i valid pages."""

    counts: np.ndarray
    free_blocks: int

    @property
    def total_blocks(self) -> int:
        return int(self.counts.sum()) + self.free_blocks

    def combined(self) -> np.ndarray:
        return self.counts.sum(axis=0)


@dataclass
class SimReport:
    config: dict
    alpha: float
    slots_per_block: int
    E: int
    L: int
    P: int
    ef: float
    wa: float
    ef_logical_block: float
    valid_fraction_at_erase: float
    gamma1_measured: Optional[float]
    gamma2_measured: Optional[float]
    plateau_rel_std: Optional[float]
    seed: int
    wall_time_seconds: float
    histogram: Optional[list] = field(default=None, repr=False)

    def to_dict(self, include_histogram: bool = False) -> dict:
        d = asdict(self)
        if not include_histogram:
            d.pop("histogram")
        return d

    def to_json(self, include_histogram: bool = False) -> str:
        return json.dumps(self.to_dict(include_histogram), sort_keys=True)


_SYSTEM_CODE = {System.BASELINE: K.BASELINE, System.NAIVE_WOM: K.NAIVE, System.CP_WOM: K.CP}


class FtlState:
    """Block array, logical-to-physical map, free-block queue and counters."""

    def __init__(self, cfg: SimConfig):
        p = cfg.params
        self.cfg = cfg
        self.Z = p.Z
        self.Zs = cfg.slots_per_block
        self.nblocks = p.blocks
        self.U = p.U
        self.system_code = _SYSTEM_CODE[cfg.system]
        self.second_slots = 2 if cfg.system is System.CP_WOM else 1
        g1 = cfg.gamma1 if cfg.gamma1 is not None else 1.0
        self.threshold = float(g1 * p.Z)
        nslots = self.nblocks * self.Zs
        self.slot_state = np.zeros(nslots, dtype=np.int8)
        self.slot_owner = np.full(nslots, -1, dtype=np.int64)
        self.slot_partner = np.full(nslots, -1, dtype=np.int64)
        self.lmap = np.full(self.U, -1, dtype=np.int64)
        self.valid = np.zeros(self.nblocks, dtype=np.int64)
        self.stage = np.zeros(self.nblocks, dtype=np.int8)
        self.wlist = np.zeros(self.Zs, dtype=np.int64)
        self.ctl = np.array([-1, 0, 0, 0], dtype=np.int64)
        self.counters = np.zeros(K.N_COUNTERS, dtype=np.int64)
        self.free_q = np.arange(self.nblocks, dtype=np.int64)
        self.erase_count = np.zeros(self.nblocks, dtype=np.int64)
        self._buf = np.zeros(self.Zs, dtype=np.int64)

    @property
    def L(self) -> int:
        return int(self.counters[K.K_L])

    @property
    def P(self) -> int:
        return int(self.counters[K.K_P])

    @property
    def E(self) -> int:
        return int(self.counters[K.K_E])

    @property
    def copies(self) -> int:
        return int(self.counters[K.K_COPIES])

    @property
    def free_blocks(self) -> int:
        return self.nblocks - int(self.ctl[K.C_FREE_HEAD])

    @property
    def open_block(self) -> int:
        return int(self.ctl[K.C_OPEN])

    def writable_slots(self) -> int:
        return int(self.ctl[K.C_WLEN] - self.ctl[K.C_WPOS])

    def reset_counters(self) -> None:
        self.counters[:] = 0

    def write(self, ids) -> None:
        ids = np.ascontiguousarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.U):
            raise ValueError("logical page id out of range [0, U)")
        status, done = K.run_writes(
            ids, self.system_code, self.Zs, self.second_slots, self.threshold,
            self.slot_state, self.slot_owner, self.slot_partner, self.lmap,
            self.valid, self.stage, self.wlist, self.ctl, self.counters,
            self.free_q, self._buf, self.erase_count,
        )
        if status == K.ERR_DEADLOCK:
            raise DeadlockError(f"no GC victim can free space (write #{done} of batch)")
        if status == K.ERR_LIFECYCLE:
            raise LifecycleError(f"slot lifecycle violated at write #{done} of batch")


def step_write(state: FtlState, logical_id: int) -> FtlState:
    state.write(np.array([logical_id], dtype=np.int64))
    return state


def snapshot_histogram(state: FtlState) -> ValidityHistogram:
    t = 1 if state.system_code == K.BASELINE else 2
    counts = np.zeros((t, state.Zs + 1), dtype=np.int64)
    for s in range(1, t + 1):
        counts[s - 1] = np.bincount(state.valid[state.stage == s], minlength=state.Zs + 1)
    return ValidityHistogram(counts, int(np.count_nonzero(state.stage == 0)))


def check_invariants(state: FtlState) -> None:
    """Raise AssertionError if the state is internally inconsistent."""
    Zs = state.Zs
    mapped = np.flatnonzero(state.lmap >= 0)
    slots = state.lmap[mapped]
    assert np.all(state.slot_state[slots] == K.VALID), "mapped slot not valid"
    assert np.all(state.slot_owner[slots] == mapped), "map is not a bijection"
    partners = state.slot_partner[slots]
    paired = partners >= 0
    assert np.all(state.slot_state[partners[paired]] == K.VALID)
    assert np.all(state.slot_owner[partners[paired]] == mapped[paired])
    n_valid_slots = int(np.count_nonzero(state.slot_state == K.VALID))
    assert n_valid_slots == mapped.size + int(paired.sum()), "stray valid slot"
    per_block = np.bincount(slots // Zs, minlength=state.nblocks)
    assert np.array_equal(per_block, state.valid), "valid_count mismatch"
    assert int(state.valid.sum()) == mapped.size
    blk_state = state.slot_state.reshape(state.nblocks, Zs)
    clean = state.stage == 0
    assert np.all(blk_state[clean] == K.FREE), "clean block holds data"
    assert not np.any(blk_state[state.stage == 1] == K.REUSABLE)
    assert not np.any(blk_state[state.stage == 2] == K.FREE)
    assert int(clean.sum()) == state.free_blocks
    hist = snapshot_histogram(state)
    assert hist.total_blocks == state.nblocks


def _random_writes(state: FtlState, rng: np.random.Generator, n: int, on_chunk=None) -> None:
    left = n
    while left > 0:
        k = min(CHUNK, left)
        state.write(rng.integers(0, state.U, size=k, dtype=np.int64))
        left -= k
        if on_chunk is not None:
            on_chunk()


def _plateau_rel_std(mean_hist: np.ndarray, y: float) -> Optional[float]:
    i = np.arange(mean_hist.size)
    sel = (i > y) & (i < mean_hist.size - 1)
    if sel.sum() < 2:
        return None
    flux = i[sel] * mean_hist[sel]
    m = flux.mean()
    return float(flux.std() / m) if m > 0 else None


def run(cfg: SimConfig) -> SimReport:
    """Warm up, reset counters, run the measured writes and report."""
    if cfg.system is System.CP_WOM and cfg.gamma1 is None:
        g1 = ef_cp_optimal(cfg.params.alpha).solution["gamma1"]
        cfg = SimConfig(**{**cfg.__dict__, "gamma1": g1})
    t0 = time.perf_counter()
    state = FtlState(cfg)
    rng = np.random.default_rng(cfg.seed)
    state.write(np.arange(cfg.params.U, dtype=np.int64))
    _random_writes(state, rng, cfg.total_warmup - cfg.params.U)
    state.reset_counters()

    acc = []

    def sample() -> None:
        acc.append(snapshot_histogram(state).counts)

    _random_writes(state, rng, cfg.measured_writes, sample)
    mean_hist = np.mean(acc, axis=0)

    c = state.counters
    E, L, P = state.E, state.L, state.P
    Z, Zs = cfg.params.Z, cfg.slots_per_block
    at_erase = c[K.K_VALID_AT_ERASE] / (E * Zs) if E else math.nan
    g1_meas = g2_meas = plateau = None
    if cfg.system is System.CP_WOM:
        g2_meas = float(at_erase)
        tr = c[K.K_TRANSITIONS]
        g1_meas = float(c[K.K_VALID_AT_TRANSITION] / (tr * Z)) if tr else None
    if cfg.system is System.BASELINE and E:
        plateau = _plateau_rel_std(mean_hist[0], at_erase * Zs)
    return SimReport(
        config=cfg.to_dict(),
        alpha=cfg.params.alpha,
        slots_per_block=Zs,
        E=E,
        L=L,
        P=P,
        ef=E * Zs / L,
        wa=P / L,
        ef_logical_block=E * Z / L,
        valid_fraction_at_erase=float(at_erase),
        gamma1_measured=g1_meas,
        gamma2_measured=g2_meas,
        plateau_rel_std=plateau,
        seed=cfg.seed,
        wall_time_seconds=time.perf_counter() - t0,
        histogram=mean_hist.tolist(),
    )


def _require(cfg: SimConfig, system: System) -> None:
    if cfg.system is not system:
        raise ConfigError(f"expected a {system.value} config, got {cfg.system.value}")


def run_baseline(cfg: SimConfig) -> SimReport:
    _require(cfg, System.BASELINE)
    return run(cfg)


def run_naive(cfg: SimConfig) -> SimReport:
    _require(cfg, System.NAIVE_WOM)
    return run(cfg)


def run_cp_wom(cfg: SimConfig) -> SimReport:
    _require(cfg, System.CP_WOM)
    return run(cfg)
