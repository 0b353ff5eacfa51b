"""Pure numpy fallback for the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def _interp(table, a_min, h, x):
    n = table.shape[0]
    s = (x - a_min) / h
    idx = np.clip(s, 0, n - 2).astype(np.int64)
    w = s - idx
    out = table[idx] + w * (table[idx + 1] - table[idx])
    out = np.where(s <= 0.0, table[0], out)
    return np.where(s >= n - 1, table[n - 1], out)


def bellman_rows(values, cons, util, feasible, ruin_value, grid, ynodes, R, beta,
                 a_min, h, start, stop, out_values, out_argmax):
    rows = slice(start, stop)
    saved = grid[rows, None] - cons[rows]
    acc = np.zeros_like(saved)
    for y in ynodes:
        nxt = R * saved + y
        acc = acc + np.where(nxt > 0.0, _interp(values, a_min, h, nxt), 0.0)
    cand = util[rows] + beta * (acc / len(ynodes))
    best_j = np.argmax(cand, axis=1)
    best = cand[np.arange(cand.shape[0]), best_j]
    ok = feasible[rows].astype(bool)
    out_values[rows] = np.where(ok, best, ruin_value[rows])
    out_argmax[rows] = np.where(ok, best_j, -1)


def simulate_rows(income, floor, mode, c_fixed, pcons, p_amin, p_h, c_floor, a0, R, out_ruin):
    n_agents, horizon = income.shape
    a = np.full(n_agents, float(a0))
    alive = np.ones(n_agents, dtype=bool)
    out_ruin[:] = -1
    for t in range(horizon):
        if mode == 0:
            c = np.full(n_agents, float(c_fixed))
        elif mode == 1:
            c = floor[:, t].copy()
        else:
            c = np.minimum(np.maximum(_interp(pcons, p_amin, p_h, a), c_floor), a)
            if mode == 3:
                c = np.maximum(c, floor[:, t])
        short = alive & (c > a)
        out_ruin[short] = t
        alive &= ~short
        a = np.where(alive, R * (a - c) + income[:, t], a)
        hit = alive & (a <= 0.0)
        out_ruin[hit] = t
        alive &= ~hit
        if not alive.any():
            break
