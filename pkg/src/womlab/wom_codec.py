"""Binary write-once-memory codecs.

``rs_encode``/``rs_decode`` implement the classic two-bits-twice-in-three-cells
code.  ``ideal_codec`` describes a code only by its rates; the FTL simulator
uses it for space accounting and never moves payload bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .analytic import WomCodeSpec, capacity_contains

__all__ = [
    "CellState",
    "CodecDescriptor",
    "WomConstraintError",
    "RS_DESCRIPTOR",
    "ideal_codec",
    "rs_decode",
    "rs_encode",
]


class WomConstraintError(ValueError):
    """A write would need to clear a programmed cell."""


@dataclass(frozen=True)
class CellState:
    cells: tuple

    def __post_init__(self) -> None:
        cells = tuple(int(c) for c in self.cells)
        if any(c not in (0, 1) for c in cells):
            raise ValueError(f"cells must be bits, got {self.cells}")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_str(cls, bits: str) -> "CellState":
        return cls(tuple(int(b) for b in bits))

    @classmethod
    def erased(cls, n: int) -> "CellState":
        return cls((0,) * n)

    @property
    def n(self) -> int:
        return len(self.cells)

    @property
    def weight(self) -> int:
        return sum(self.cells)

    def can_become(self, other: "CellState") -> bool:
        """True if ``other`` is reachable by programming 0 -> 1 only."""
        return self.n == other.n and all(a <= b for a, b in zip(self.cells, other.cells))

    def __str__(self) -> str:
        return "".join(map(str, self.cells))


_FIRST = {0b00: "000", 0b01: "100", 0b10: "010", 0b11: "001"}
_SECOND = {m: "".join("1" if c == "0" else "0" for c in w) for m, w in _FIRST.items()}
_DECODE = {w: m for m, w in _FIRST.items()} | {w: m for m, w in _SECOND.items()}


def rs_decode(state: CellState) -> int:
    if state.n != 3:
        raise ValueError("the Rivest-Shamir code uses 3 cells")
    return _DECODE[str(state)]


def rs_encode(write_index: int, message: int, state: CellState) -> CellState:
    """Write a 2-bit ``message`` on write ``write_index`` (1 or 2) over ``state``."""
    if not 0 <= message <= 3:
        raise ValueError(f"message must be a 2-bit value, got {message}")
    if state.n != 3:
        raise ValueError("the Rivest-Shamir code uses 3 cells")
    if write_index == 1:
        if state.weight != 0:
            raise WomConstraintError("first write needs erased cells")
        return CellState.from_str(_FIRST[message])
    if write_index != 2:
        raise ValueError(f"write_index must be 1 or 2, got {write_index}")
    if state.weight > 1:
        raise WomConstraintError(f"state {state} is not a first-write codeword")
    if rs_decode(state) == message:
        return state
    new = CellState.from_str(_SECOND[message])
    if not state.can_become(new):
        raise WomConstraintError(f"no monotone codeword for {message:02b} over {state}")
    return new


@dataclass(frozen=True)
class CodecDescriptor:
    """Codeword length, write count and message sizes of a WOM code.

    ``slots[i]`` is how many physical page slots one logical page occupies on
    write ``i+1``; ``page_scale`` is the physical page size in units of a
    logical page (above 1 only for fixed-rate codes applied per page).
    """

    n: int
    t: int
    message_sizes: tuple
    slots: tuple = ()
    page_scale: float = 1.0

    @property
    def rates(self) -> tuple:
        return tuple(math.log2(m) / self.n for m in self.message_sizes)

    @property
    def sum_rate(self) -> float:
        return sum(self.rates)


RS_DESCRIPTOR = CodecDescriptor(n=3, t=2, message_sizes=(4, 4), slots=(1, 1))


def ideal_codec(spec: WomCodeSpec, n: int = 4096 * 8) -> CodecDescriptor:
    """Rate-only codec for the simulator (``n`` defaults to a 4 KB page in bits).

    Fixed-rate codes inflate the physical page by ``1/R`` and keep one slot
    per logical page.  Variable-rate codes keep the page size and spend
    ``ceil(1/R_i)`` slots per logical page on write ``i``.
    """
    if spec.t == 2 and not capacity_contains(*spec.rates):
        raise ValueError(f"rates {spec.rates} lie outside the two-write capacity region")
    sizes = tuple(2 ** int(math.floor(r * n + 1e-9)) for r in spec.rates)
    if spec.fixed_rate:
        return CodecDescriptor(n, spec.t, sizes, slots=(1,) * spec.t,
                               page_scale=1.0 / spec.rates[0])
    slots = tuple(int(math.ceil(1.0 / r - 1e-12)) for r in spec.rates)
    return CodecDescriptor(n, spec.t, sizes, slots=slots)
