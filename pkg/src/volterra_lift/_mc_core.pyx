# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: cdivision=True
"""Compiled Monte Carlo chunk kernels.

Mirrors _mc_numpy draw for draw and operation for operation; the two
backends must return bit-identical buffers for the same BitGenerator
state.  See the _mc_numpy module docstring for the layout contract.
"""

cimport numpy as cnp
import numpy as np
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport sqrt
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    random_poisson,
    random_standard_exponential,
    random_standard_normal,
    random_standard_uniform,
)

cnp.import_array()

JUMP_NONE = 0
JUMP_EXP = 1
JUMP_ATOMS = 2


cdef inline double _draw_size(bitgen_t *rng, int jkind, double jtheta,
                              double jshift, double[::1] jsizes,
                              double[::1] jcum) noexcept nogil:
    cdef double u
    cdef Py_ssize_t k = 0
    if jkind == 1:
        return jshift + random_standard_exponential(rng) / jtheta
    u = random_standard_uniform(rng)
    while u >= jcum[k]:
        k += 1
    return jsizes[k]


cdef inline double _total(double[:, ::1] lam, Py_ssize_t i) noexcept nogil:
    cdef double v = lam[i, 0]
    cdef Py_ssize_t k
    for k in range(1, lam.shape[1]):
        v += lam[i, k]
    return v


def hybrid_chunk(bit_generator, double[:, ::1] lam, double[::1] decay,
                 double[::1] c, double dt, double beta, double sigma,
                 double m1, double mtot, int jkind, double jtheta,
                 double jshift, double[::1] jsizes, double[::1] jcum,
                 bint damping_end, bint antithetic, int nsteps,
                 cnp.int64_t[::1] rec_idx, double[:, ::1] out_v,
                 double[:, ::1] out_dx, bint want_dx,
                 double[:, :, ::1] out_states, bint want_states,
                 cnp.int64_t[::1] out_njumps, bint want_njumps):
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(
        bit_generator.capsule, "BitGenerator")
    cdef Py_ssize_t n = lam.shape[0]
    cdef Py_ssize_t ncoord = lam.shape[1]
    cdef Py_ssize_t nrec = rec_idx.shape[0]
    cdef bint has_jumps = jkind != 0 and mtot > 0.0
    v_arr = np.empty(n)
    z_arr = np.empty(n)
    vd_arr = np.empty(n)
    vp_arr = np.empty(n)
    js_arr = np.empty(n)
    cnt_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] v = v_arr
    cdef double[::1] z = z_arr
    cdef double[::1] vd = vd_arr
    cdef double[::1] vp = vp_arr
    cdef double[::1] jsum = js_arr
    cdef cnp.int64_t[::1] counts = cnt_arr
    cdef Py_ssize_t i, k, j, rec_pos
    cdef cnp.int64_t cnt, m
    cdef double zv, cum, seg0, dx, upd

    with bit_generator.lock, nogil:
        rec_pos = 0
        for i in range(n):
            v[i] = _total(lam, i)
            if want_states:
                for k in range(ncoord):
                    out_states[i, 0, k] = lam[i, k]
        if nrec > 0 and rec_idx[0] == 0:
            for i in range(n):
                out_v[i, 0] = v[i]
            rec_pos = 1
        for j in range(nsteps):
            for i in range(n):
                vp[i] = v[i] if v[i] > 0.0 else 0.0
                vd[i] = vp[i] * dt
            if sigma > 0.0:
                if antithetic:
                    for i in range(n // 2):
                        zv = random_standard_normal(rng)
                        z[2 * i] = zv
                        z[2 * i + 1] = -zv
                else:
                    for i in range(n):
                        z[i] = random_standard_normal(rng)
            if has_jumps:
                for i in range(n):
                    counts[i] = random_poisson(rng, mtot * vd[i])
                cum = 0.0
                for i in range(n):
                    seg0 = cum
                    cnt = counts[i]
                    for m in range(cnt):
                        cum += _draw_size(rng, jkind, jtheta, jshift, jsizes, jcum)
                    jsum[i] = cum - seg0
                    if want_njumps:
                        out_njumps[i] += cnt
            for i in range(n):
                dx = (beta * vp[i]) * dt
                if sigma > 0.0:
                    dx = dx + (sigma * sqrt(vd[i])) * z[i]
                if has_jumps:
                    dx = dx + jsum[i]
                    dx = dx - vd[i] * m1
                if want_dx:
                    out_dx[i, j] = dx
                if damping_end:
                    for k in range(ncoord):
                        lam[i, k] = decay[k] * lam[i, k] + dx * c[k]
                else:
                    for k in range(ncoord):
                        lam[i, k] = decay[k] * (lam[i, k] + dx * c[k])
                v[i] = _total(lam, i)
                if want_states:
                    for k in range(ncoord):
                        out_states[i, j + 1, k] = lam[i, k]
            if rec_pos < nrec and rec_idx[rec_pos] == j + 1:
                for i in range(n):
                    out_v[i, rec_pos] = v[i]
                rec_pos += 1


def pure_jump_chunk(bit_generator, double[:, ::1] lam, double[::1] decay,
                    double[::1] c, double dt, double drift_coef,
                    double small_coef, double inv_n, double mtrunc,
                    int jkind, double jtheta, double jshift,
                    double[::1] jsizes, double[::1] jcum,
                    bint damping_end, int nsteps,
                    cnp.int64_t[::1] rec_idx, double[:, ::1] out_v,
                    double[:, ::1] out_dx, bint want_dx,
                    double[:, :, ::1] out_states, bint want_states,
                    cnp.int64_t[::1] out_njumps, bint want_njumps):
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(
        bit_generator.capsule, "BitGenerator")
    cdef Py_ssize_t n = lam.shape[0]
    cdef Py_ssize_t ncoord = lam.shape[1]
    cdef Py_ssize_t nrec = rec_idx.shape[0]
    cdef bint has_small = small_coef > 0.0
    cdef bint has_big = jkind != 0 and mtrunc > 0.0
    v_arr = np.empty(n)
    vd_arr = np.empty(n)
    vp_arr = np.empty(n)
    js_arr = np.empty(n)
    cs_arr = np.empty(n, dtype=np.int64)
    cb_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] v = v_arr
    cdef double[::1] vd = vd_arr
    cdef double[::1] vp = vp_arr
    cdef double[::1] jsum = js_arr
    cdef cnp.int64_t[::1] counts_s = cs_arr
    cdef cnp.int64_t[::1] counts_b = cb_arr
    cdef Py_ssize_t i, k, j, rec_pos
    cdef cnp.int64_t cnt, m
    cdef double cum, seg0, dx

    with bit_generator.lock, nogil:
        rec_pos = 0
        for i in range(n):
            v[i] = _total(lam, i)
            if want_states:
                for k in range(ncoord):
                    out_states[i, 0, k] = lam[i, k]
        if nrec > 0 and rec_idx[0] == 0:
            for i in range(n):
                out_v[i, 0] = v[i]
            rec_pos = 1
        for j in range(nsteps):
            for i in range(n):
                vp[i] = v[i] if v[i] > 0.0 else 0.0
                vd[i] = vp[i] * dt
            if has_small:
                for i in range(n):
                    counts_s[i] = random_poisson(rng, small_coef * vd[i])
                    if want_njumps:
                        out_njumps[i] += counts_s[i]
            if has_big:
                for i in range(n):
                    counts_b[i] = random_poisson(rng, mtrunc * vd[i])
                cum = 0.0
                for i in range(n):
                    seg0 = cum
                    cnt = counts_b[i]
                    for m in range(cnt):
                        cum += _draw_size(rng, jkind, jtheta, jshift, jsizes, jcum)
                    jsum[i] = cum - seg0
                    if want_njumps:
                        out_njumps[i] += cnt
            for i in range(n):
                dx = drift_coef * vd[i]
                if has_small:
                    dx = dx + inv_n * counts_s[i]
                if has_big:
                    dx = dx + jsum[i]
                if want_dx:
                    out_dx[i, j] = dx
                if damping_end:
                    for k in range(ncoord):
                        lam[i, k] = decay[k] * lam[i, k] + dx * c[k]
                else:
                    for k in range(ncoord):
                        lam[i, k] = decay[k] * (lam[i, k] + dx * c[k])
                v[i] = _total(lam, i)
                if want_states:
                    for k in range(ncoord):
                        out_states[i, j + 1, k] = lam[i, k]
            if rec_pos < nrec and rec_idx[rec_pos] == j + 1:
                for i in range(n):
                    out_v[i, rec_pos] = v[i]
                rec_pos += 1


def eps_jump_chunk(bit_generator, double[:, ::1] lam, double[::1] decay,
                   double[::1] c, double[::1] jvec, double dt, double w,
                   double mutot, int jkind, double jtheta, double jshift,
                   double[::1] jsizes, double[::1] jcum,
                   bint damping_end, int nsteps,
                   cnp.int64_t[::1] rec_idx, double[:, ::1] out_v,
                   double[:, ::1] out_dx, bint want_dx,
                   double[:, :, ::1] out_states, bint want_states,
                   cnp.int64_t[::1] out_njumps, bint want_njumps):
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(
        bit_generator.capsule, "BitGenerator")
    cdef Py_ssize_t n = lam.shape[0]
    cdef Py_ssize_t ncoord = lam.shape[1]
    cdef Py_ssize_t nrec = rec_idx.shape[0]
    cdef bint has_jumps = jkind != 0 and mutot > 0.0
    v_arr = np.empty(n)
    vd_arr = np.empty(n)
    vp_arr = np.empty(n)
    js_arr = np.empty(n)
    cnt_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] v = v_arr
    cdef double[::1] vd = vd_arr
    cdef double[::1] vp = vp_arr
    cdef double[::1] jsum = js_arr
    cdef cnp.int64_t[::1] counts = cnt_arr
    cdef Py_ssize_t i, k, j, rec_pos
    cdef cnp.int64_t cnt, m
    cdef double cum, seg0, a

    with bit_generator.lock, nogil:
        rec_pos = 0
        for i in range(n):
            v[i] = _total(lam, i)
            if want_states:
                for k in range(ncoord):
                    out_states[i, 0, k] = lam[i, k]
        if nrec > 0 and rec_idx[0] == 0:
            for i in range(n):
                out_v[i, 0] = v[i]
            rec_pos = 1
        for j in range(nsteps):
            for i in range(n):
                vp[i] = v[i] if v[i] > 0.0 else 0.0
                vd[i] = vp[i] * dt
            if has_jumps:
                for i in range(n):
                    counts[i] = random_poisson(rng, mutot * vd[i])
                cum = 0.0
                for i in range(n):
                    seg0 = cum
                    cnt = counts[i]
                    for m in range(cnt):
                        cum += _draw_size(rng, jkind, jtheta, jshift, jsizes, jcum)
                    jsum[i] = cum - seg0
                    if want_njumps:
                        out_njumps[i] += cnt
            else:
                for i in range(n):
                    jsum[i] = 0.0
            for i in range(n):
                if want_dx:
                    out_dx[i, j] = jsum[i]
                a = -w * vd[i]
                if damping_end:
                    for k in range(ncoord):
                        lam[i, k] = decay[k] * lam[i, k] + a * c[k] + jsum[i] * jvec[k]
                else:
                    for k in range(ncoord):
                        lam[i, k] = decay[k] * ((lam[i, k] + a * c[k]) + jsum[i] * jvec[k])
                v[i] = _total(lam, i)
                if want_states:
                    for k in range(ncoord):
                        out_states[i, j + 1, k] = lam[i, k]
            if rec_pos < nrec and rec_idx[rec_pos] == j + 1:
                for i in range(n):
                    out_v[i, rec_pos] = v[i]
                rec_pos += 1
