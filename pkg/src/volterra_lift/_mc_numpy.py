"""numpy backend for the Monte Carlo chunk kernels.

The compiled backend (_mc_core) implements the same three kernels; both
must produce bit-identical output for the same BitGenerator state.  That
pins down, per step, the draw order and the floating-point evaluation
order:

1. Gaussian draws (hybrid only, skipped when sigma = 0): one standard
   normal per path, or one per antithetic pair (even path index +z, odd -z).
2. Poisson counts, one per path in path order, with intensity coef * V+ * dt
   (skipped when the channel's coefficient is zero).  The pure-jump scheme
   draws the small-jump counts first, then the big-jump counts.
3. Jump sizes, flattened in path order: exponential family
   shift + standard_exponential()/theta, atomic family sizes[k] with k the
   first index where cum[k] > random().

Per-path jump sums are prefix-sum differences of the flat size sequence
(one running accumulator), dx is evaluated as
((drift) + (diffusion) + (jumps)) - (compensator), the state update as
decay * ((lam + a*c) + b*jvec) elementwise, and V as the left-to-right sum
over coordinates.  The compiled kernel follows the same associations.
"""

from __future__ import annotations

import numpy as np

JUMP_NONE = 0
JUMP_EXP = 1
JUMP_ATOMS = 2


def _row_total(lam):
    v = lam[:, 0].copy()
    for k in range(1, lam.shape[1]):
        v += lam[:, k]
    return v


def _draw_sizes(gen, total, jkind, jtheta, jshift, jsizes, jcum):
    if jkind == JUMP_EXP:
        return jshift + gen.standard_exponential(total) / jtheta
    uu = gen.random(total)
    idx = np.searchsorted(jcum, uu, side="right")
    return jsizes[idx]


def _segment_sums(counts, sizes):
    cs = np.empty(sizes.size + 1)
    cs[0] = 0.0
    np.cumsum(sizes, out=cs[1:])
    ends = np.cumsum(counts)
    return cs[ends] - cs[ends - counts]


def _record(j, lam, v, rec_idx, out_v, rec_pos, out_states):
    if out_states is not None:
        out_states[:, j, :] = lam
    if rec_pos < rec_idx.size and rec_idx[rec_pos] == j:
        out_v[:, rec_pos] = v
        return rec_pos + 1
    return rec_pos


def hybrid_chunk(bit_generator, lam, decay, c, dt, beta, sigma, m1, mtot,
                 jkind, jtheta, jshift, jsizes, jcum,
                 damping_end, antithetic, nsteps,
                 rec_idx, out_v, out_dx, out_states, out_njumps):
    """Jump-diffusion scheme: dX = beta V+ dt + sigma sqrt(V+ dt) Z + jumps - V+ dt m1."""
    gen = np.random.Generator(bit_generator)
    n = lam.shape[0]
    v = _row_total(lam)
    rec_pos = _record(0, lam, v, rec_idx, out_v, 0, out_states)
    for j in range(nsteps):
        vp = np.where(v > 0.0, v, 0.0)
        vd = vp * dt
        if sigma > 0.0:
            if antithetic:
                zb = gen.standard_normal(n // 2)
                z = np.empty(n)
                z[0::2] = zb
                z[1::2] = -zb
            else:
                z = gen.standard_normal(n)
        if jkind != JUMP_NONE and mtot > 0.0:
            counts = gen.poisson(mtot * vd)
            total = int(counts.sum())
            sizes = _draw_sizes(gen, total, jkind, jtheta, jshift, jsizes, jcum)
            jsum = _segment_sums(counts, sizes)
            if out_njumps is not None:
                out_njumps += counts
        else:
            jsum = None
        dx = beta * vp * dt
        if sigma > 0.0:
            dx = dx + sigma * np.sqrt(vd) * z
        if jsum is not None:
            dx = dx + jsum
            dx = dx - vd * m1
        if out_dx is not None:
            out_dx[:, j] = dx
        if damping_end:
            lam = decay * lam + dx[:, None] * c
        else:
            lam = decay * (lam + dx[:, None] * c)
        v = _row_total(lam)
        rec_pos = _record(j + 1, lam, v, rec_idx, out_v, rec_pos, out_states)
    return lam


def pure_jump_chunk(bit_generator, lam, decay, c, dt, drift_coef, small_coef,
                    inv_n, mtrunc, jkind, jtheta, jshift, jsizes, jcum,
                    damping_end, nsteps,
                    rec_idx, out_v, out_dx, out_states, out_njumps):
    """Pure-jump approximation: the diffusion becomes Poisson jumps of size 1/n."""
    gen = np.random.Generator(bit_generator)
    v = _row_total(lam)
    rec_pos = _record(0, lam, v, rec_idx, out_v, 0, out_states)
    for j in range(nsteps):
        vp = np.where(v > 0.0, v, 0.0)
        vd = vp * dt
        dx = drift_coef * vd
        if small_coef > 0.0:
            counts_s = gen.poisson(small_coef * vd)
            dx = dx + inv_n * counts_s
            if out_njumps is not None:
                out_njumps += counts_s
        if jkind != JUMP_NONE and mtrunc > 0.0:
            counts_b = gen.poisson(mtrunc * vd)
            total = int(counts_b.sum())
            sizes = _draw_sizes(gen, total, jkind, jtheta, jshift, jsizes, jcum)
            dx = dx + _segment_sums(counts_b, sizes)
            if out_njumps is not None:
                out_njumps += counts_b
        if out_dx is not None:
            out_dx[:, j] = dx
        if damping_end:
            lam = decay * lam + dx[:, None] * c
        else:
            lam = decay * (lam + dx[:, None] * c)
        v = _row_total(lam)
        rec_pos = _record(j + 1, lam, v, rec_idx, out_v, rec_pos, out_states)
    return lam


def eps_jump_chunk(bit_generator, lam, decay, c, jvec, dt, w, mutot,
                   jkind, jtheta, jshift, jsizes, jcum,
                   damping_end, nsteps,
                   rec_idx, out_v, out_dx, out_states, out_njumps):
    """Small-jump building block: explicit -w drift, jump marks enter through jvec."""
    gen = np.random.Generator(bit_generator)
    v = _row_total(lam)
    rec_pos = _record(0, lam, v, rec_idx, out_v, 0, out_states)
    for j in range(nsteps):
        vp = np.where(v > 0.0, v, 0.0)
        vd = vp * dt
        if jkind != JUMP_NONE and mutot > 0.0:
            counts = gen.poisson(mutot * vd)
            total = int(counts.sum())
            sizes = _draw_sizes(gen, total, jkind, jtheta, jshift, jsizes, jcum)
            jsum = _segment_sums(counts, sizes)
            if out_njumps is not None:
                out_njumps += counts
        else:
            jsum = np.zeros(lam.shape[0])
        if out_dx is not None:
            out_dx[:, j] = jsum
        a = -w * vd
        if damping_end:
            lam = decay * lam + a[:, None] * c + jsum[:, None] * jvec
        else:
            lam = decay * (lam + a[:, None] * c + jsum[:, None] * jvec)
        v = _row_total(lam)
        rec_pos = _record(j + 1, lam, v, rec_idx, out_v, rec_pos, out_states)
    return lam
