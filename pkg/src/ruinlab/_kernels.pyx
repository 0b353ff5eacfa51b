# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for value iteration and cohort simulation.

Every routine mirrors ``_kernels_py`` operation for operation so both
backends produce the same floating-point results.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _interp(const double[::1] table, Py_ssize_t n, double a_min,
                           double h, double x) noexcept nogil:
    cdef double s = (x - a_min) / h
    cdef Py_ssize_t idx
    cdef double w
    if s <= 0.0:
        return table[0]
    if s >= n - 1:
        return table[n - 1]
    idx = <Py_ssize_t>s
    w = s - idx
    return table[idx] + w * (table[idx + 1] - table[idx])


def bellman_rows(const double[::1] values, const double[:, ::1] cons,
                 const double[:, ::1] util, const unsigned char[::1] feasible,
                 const double[::1] ruin_value, const double[::1] grid,
                 const double[::1] ynodes, double R, double beta, double a_min,
                 double h, Py_ssize_t start, Py_ssize_t stop,
                 double[::1] out_values, long long[::1] out_argmax):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t m = cons.shape[1]
    cdef Py_ssize_t nk = ynodes.shape[0]
    cdef Py_ssize_t i, j, k, best_j
    cdef double a, saved, acc, nxt, cand, best
    with nogil:
        for i in range(start, stop):
            if not feasible[i]:
                out_values[i] = ruin_value[i]
                out_argmax[i] = -1
                continue
            a = grid[i]
            best = 0.0
            best_j = -1
            for j in range(m):
                saved = a - cons[i, j]
                acc = 0.0
                for k in range(nk):
                    nxt = R * saved + ynodes[k]
                    if nxt > 0.0:
                        acc = acc + _interp(values, n, a_min, h, nxt)
                cand = util[i, j] + beta * (acc / nk)
                if best_j < 0 or cand > best:
                    best = cand
                    best_j = j
            out_values[i] = best
            out_argmax[i] = best_j


def simulate_rows(const double[:, ::1] income, const double[:, ::1] floor,
                  int mode, double c_fixed, const double[::1] pcons,
                  double p_amin, double p_h, double c_floor, double a0,
                  double R, long long[::1] out_ruin):
    """Ruin time per agent row, -1 for survivors.

    mode 0: fixed consumption; 1: consume the floor; 2: policy;
    3: max(floor, policy).
    """
    cdef Py_ssize_t n_agents = income.shape[0]
    cdef Py_ssize_t horizon = income.shape[1]
    cdef Py_ssize_t npol = pcons.shape[0]
    cdef Py_ssize_t r, t
    cdef double a, c, pc
    with nogil:
        for r in range(n_agents):
            a = a0
            out_ruin[r] = -1
            for t in range(horizon):
                if mode == 0:
                    c = c_fixed
                elif mode == 1:
                    c = floor[r, t]
                else:
                    pc = _interp(pcons, npol, p_amin, p_h, a)
                    if pc < c_floor:
                        pc = c_floor
                    if pc > a:
                        pc = a
                    c = pc
                    if mode == 3 and floor[r, t] > c:
                        c = floor[r, t]
                if c > a:
                    out_ruin[r] = t
                    break
                a = R * (a - c) + income[r, t]
                if a <= 0.0:
                    out_ruin[r] = t
                    break
