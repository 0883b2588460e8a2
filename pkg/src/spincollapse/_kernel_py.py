"""Pure-numpy stepping kernel (fallback lane).

Vectorizes the Euler-Maruyama update across a batch of trajectories, one
time step at a time, drawing noise in per-trajectory blocks (the draw
sequence of Generator.standard_normal is invariant under chunking, so
this lane consumes exactly the same increments as the compiled lane).
Every arithmetic expression mirrors the compiled kernel (same operation
order, no fused multiply-add), so the two lanes produce bit-identical
trajectories.
"""

from __future__ import annotations

import math

import numpy as np

NAME = "python"

# Steps per noise block; bounds the (batch x chunk) noise buffer.
_CHUNK_STEPS = 4096


def run_batch(
    ar, ai, br, bi,
    omega, gamma,
    seg_steps, seg_dt,
    stride,
    out,
    renormalize, drift_sign,
    dev_max, dev_sumsq, degen,
    gens,
):
    """Integrate a batch over the given (seg_steps, seg_dt) schedule.

    ar/ai/br/bi: (B,) float64 state components, updated in place.
    gens: one numpy Generator per trajectory; one Normal(0, dt) increment
    is consumed per step.  Samples land in out[:, g // stride, :] at every
    global step g divisible by stride (slot 0 holds the initial state and
    is written by the caller).  dev_max/dev_sumsq accumulate the
    pre-renormalization norm deviation |n - 1| per trajectory; degen[j]
    records the first global step at which trajectory j's norm fell below
    1e-6 (-1 if never).
    """
    B = ar.shape[0]
    sg = 2.0 * np.sqrt(gamma)
    dg = drift_sign * (2.0 * gamma)

    a_r, a_i, b_r, b_i = ar, ai, br, bi
    g = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for n_steps, dt in zip(seg_steps, seg_dt):
            sqdt = math.sqrt(dt)
            done = 0
            while done < n_steps:
                c = int(min(_CHUNK_STEPS, n_steps - done))
                buf = np.empty((B, c))
                for j, gen in enumerate(gens):
                    gen.standard_normal(out=buf[j])
                buf *= sqdt
                dwt = np.ascontiguousarray(buf.T)
                for i in range(c):
                    dW = dwt[i]
                    pa = a_r * a_r + a_i * a_i
                    pb = b_r * b_r + b_i * b_i
                    fa = 1.0 - pa
                    fb = 1.0 - pb
                    ka = dg * fa * fa
                    kb = dg * fb * fb
                    ha = sg * fa * dW
                    hb = sg * fb * dW
                    nar = a_r + dt * (omega * b_i - ka * a_r) + ha * a_r
                    nai = a_i + dt * (-omega * b_r - ka * a_i) + ha * a_i
                    nbr = b_r + dt * (omega * a_i - kb * b_r) - hb * b_r
                    nbi = b_i + dt * (-omega * a_r - kb * b_i) - hb * b_i
                    n2 = (nar * nar + nai * nai) + (nbr * nbr + nbi * nbi)
                    nn = np.sqrt(n2)
                    dev = np.abs(nn - 1.0)
                    np.maximum(dev_max, dev, out=dev_max)
                    dev_sumsq += dev * dev
                    g += 1
                    # flags norm collapse and (renormalize=False only)
                    # divergence to inf/nan in one test
                    bad = ~((nn >= 1e-6) & (nn < 1e300))
                    if bad.any():
                        newly = bad & (degen < 0)
                        degen[newly] = g
                    if renormalize:
                        a_r = nar / nn
                        a_i = nai / nn
                        b_r = nbr / nn
                        b_i = nbi / nn
                    else:
                        a_r, a_i, b_r, b_i = nar, nai, nbr, nbi
                    if g % stride == 0:
                        k = g // stride
                        out[:, k, 0] = a_r
                        out[:, k, 1] = a_i
                        out[:, k, 2] = b_r
                        out[:, k, 3] = b_i
                done += c

    ar[:] = a_r
    ai[:] = a_i
    br[:] = b_r
    bi[:] = b_i
