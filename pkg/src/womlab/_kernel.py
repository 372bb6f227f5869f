"""Compiled FTL state machine.

Flat-array state shared with :class:`womlab.ftl_sim.FtlState`.  Slot states::

    FREE -> VALID -> INVALID -> (erase) -> FREE
                     INVALID -> REUSABLE -> VALID   (second write, WOM systems)

Every transition checks the prior state; a violation aborts the batch with
``ERR_LIFECYCLE``.
"""

import numpy as np
from numba import njit

FREE, VALID, INVALID, REUSABLE = 0, 1, 2, 3

BASELINE, NAIVE, CP = 0, 1, 2

OK, ERR_DEADLOCK, ERR_LIFECYCLE = 0, 1, 2

# ctl layout
C_OPEN, C_WPOS, C_WLEN, C_FREE_HEAD = 0, 1, 2, 3
# counters layout
K_L, K_P, K_E, K_COPIES, K_VALID_AT_ERASE, K_TRANSITIONS, K_VALID_AT_TRANSITION = range(7)
N_COUNTERS = 7


@njit(cache=True)
def _erase(b, Zs, slot_state, slot_owner, slot_partner, lmap, valid, stage,
           wlist, ctl, counters, buf, erase_count):
    base = b * Zs
    c = 0
    for s in range(base, base + Zs):
        st = slot_state[s]
        if st == VALID:
            lid = slot_owner[s]
            if lmap[lid] == s:
                buf[c] = lid
                c += 1
        slot_state[s] = FREE
        slot_owner[s] = -1
        slot_partner[s] = -1
    if c != valid[b]:
        return ERR_LIFECYCLE
    counters[K_E] += 1
    counters[K_VALID_AT_ERASE] += c
    erase_count[b] += 1
    stage[b] = 1
    valid[b] = 0
    for k in range(c):
        s = base + k
        lid = buf[k]
        slot_state[s] = VALID
        slot_owner[s] = lid
        lmap[lid] = s
        valid[b] += 1
    counters[K_P] += c
    counters[K_COPIES] += c
    n = 0
    for s in range(base + c, base + Zs):
        wlist[n] = s
        n += 1
    ctl[C_OPEN] = b
    ctl[C_WPOS] = 0
    ctl[C_WLEN] = n
    return OK


@njit(cache=True)
def _transition(b, Zs, slot_state, valid, stage, wlist, ctl, counters):
    base = b * Zs
    n = 0
    for s in range(base, base + Zs):
        if slot_state[s] == INVALID:
            slot_state[s] = REUSABLE
            wlist[n] = s
            n += 1
        elif slot_state[s] != VALID:
            return ERR_LIFECYCLE
    stage[b] = 2
    counters[K_TRANSITIONS] += 1
    counters[K_VALID_AT_TRANSITION] += valid[b]
    ctl[C_OPEN] = b
    ctl[C_WPOS] = 0
    ctl[C_WLEN] = n
    return OK


@njit(cache=True)
def _collect(system, Zs, threshold, slot_state, slot_owner, slot_partner, lmap,
             valid, stage, wlist, ctl, counters, free_q, buf, erase_count):
    head = ctl[C_FREE_HEAD]
    if head < free_q.shape[0]:
        b = free_q[head]
        ctl[C_FREE_HEAD] = head + 1
        stage[b] = 1
        for k in range(Zs):
            wlist[k] = b * Zs + k
        ctl[C_OPEN] = b
        ctl[C_WPOS] = 0
        ctl[C_WLEN] = Zs
        return OK

    nblocks = valid.shape[0]
    # greedy: minimum valid count per stage, lowest id on ties
    b1 = -1
    b2 = -1
    for b in range(nblocks):
        st = stage[b]
        if st == 1:
            if b1 < 0 or valid[b] < valid[b1]:
                b1 = b
        elif st == 2:
            if b2 < 0 or valid[b] < valid[b2]:
                b2 = b

    if system == BASELINE:
        if b1 < 0:
            return ERR_DEADLOCK
        return _erase(b1, Zs, slot_state, slot_owner, slot_partner, lmap, valid,
                      stage, wlist, ctl, counters, buf, erase_count)
    if system == NAIVE:
        if b1 < 0 and b2 < 0:
            return ERR_DEADLOCK
        if b2 < 0 or (b1 >= 0 and valid[b1] <= valid[b2] and (valid[b1] < valid[b2] or b1 < b2)):
            return _transition(b1, Zs, slot_state, valid, stage, wlist, ctl, counters)
        return _erase(b2, Zs, slot_state, slot_owner, slot_partner, lmap, valid,
                      stage, wlist, ctl, counters, buf, erase_count)
    # CP-WOM threshold rule
    if b1 >= 0 and (valid[b1] <= threshold or b2 < 0):
        return _transition(b1, Zs, slot_state, valid, stage, wlist, ctl, counters)
    if b2 >= 0:
        return _erase(b2, Zs, slot_state, slot_owner, slot_partner, lmap, valid,
                      stage, wlist, ctl, counters, buf, erase_count)
    return ERR_DEADLOCK


@njit(cache=True)
def run_writes(ids, system, Zs, second_slots, threshold, slot_state, slot_owner,
               slot_partner, lmap, valid, stage, wlist, ctl, counters, free_q, buf,
               erase_count):
    """Apply host writes ``ids`` in order.  Returns (status, writes applied)."""
    guard_max = 2 * valid.shape[0] + 2
    for n in range(ids.shape[0]):
        lid = ids[n]
        s = lmap[lid]
        if s >= 0:
            if slot_state[s] != VALID:
                return ERR_LIFECYCLE, n
            slot_state[s] = INVALID
            p = slot_partner[s]
            if p >= 0:
                if slot_state[p] != VALID:
                    return ERR_LIFECYCLE, n
                slot_state[p] = INVALID
            valid[s // Zs] -= 1
            lmap[lid] = -1

        guard = 0
        while True:
            ob = ctl[C_OPEN]
            if ob >= 0:
                need = 1 if stage[ob] == 1 else second_slots
                if ctl[C_WLEN] - ctl[C_WPOS] >= need:
                    break
            guard += 1
            if guard > guard_max:
                return ERR_DEADLOCK, n
            st = _collect(system, Zs, threshold, slot_state, slot_owner, slot_partner,
                          lmap, valid, stage, wlist, ctl, counters, free_q, buf, erase_count)
            if st != OK:
                return st, n

        ob = ctl[C_OPEN]
        first = -1
        for k in range(need):
            sl = wlist[ctl[C_WPOS]]
            ctl[C_WPOS] += 1
            st = slot_state[sl]
            if stage[ob] == 1:
                if st != FREE:
                    return ERR_LIFECYCLE, n
            elif st != REUSABLE:
                return ERR_LIFECYCLE, n
            slot_state[sl] = VALID
            slot_owner[sl] = lid
            if first < 0:
                first = sl
            else:
                slot_partner[first] = sl
                slot_partner[sl] = first
        lmap[lid] = first
        valid[ob] += 1
        counters[K_P] += need
        counters[K_L] += 1
    return OK, ids.shape[0]
