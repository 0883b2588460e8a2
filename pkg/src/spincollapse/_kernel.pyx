# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Euler-Maruyama stepping kernel (hot loop).

Draws the Wiener increments directly from each trajectory's bit generator
via numpy's C distribution functions (same ziggurat implementation that
backs Generator.standard_normal), so trajectories match the pure-numpy
lane bit-for-bit; the build disables floating-point contraction to keep
the arithmetic identical too.  The whole batch runs without the GIL.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport fabs, sqrt
from libc.stdint cimport int64_t

from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal

NAME = "compiled"


def run_batch(double[::1] ar, double[::1] ai, double[::1] br, double[::1] bi,
              double omega, double gamma,
              int64_t[::1] seg_steps, double[::1] seg_dt,
              int64_t stride,
              double[:, :, ::1] out,
              bint renormalize, double drift_sign,
              double[::1] dev_max, double[::1] dev_sumsq,
              int64_t[::1] degen,
              gens):
    """See _kernel_py.run_batch for the contract."""
    cdef Py_ssize_t n_traj = ar.shape[0]
    cdef Py_ssize_t n_segs = seg_steps.shape[0]
    cdef double sg = 2.0 * sqrt(gamma)
    cdef double dg = drift_sign * (2.0 * gamma)
    cdef const char *capsule_name = "BitGenerator"
    cdef bitgen_t *rng
    cdef Py_ssize_t j, s, k
    cdef int64_t i, g, n_steps
    cdef double a_r, a_i, b_r, b_i, pa, pb, fa, fb, ka, kb, ha, hb
    cdef double nar, nai, nbr, nbi, n2, nn, dev, dW, z, dt, sqdt, dmax, dss

    for j in range(n_traj):
        bg = gens[j].bit_generator
        capsule = bg.capsule
        if not PyCapsule_IsValid(capsule, capsule_name):
            raise ValueError("invalid BitGenerator capsule")
        rng = <bitgen_t *> PyCapsule_GetPointer(capsule, capsule_name)
        a_r = ar[j]; a_i = ai[j]; b_r = br[j]; b_i = bi[j]
        dmax = dev_max[j]; dss = dev_sumsq[j]
        with bg.lock, nogil:
            g = 0
            for s in range(n_segs):
                if degen[j] >= 0:
                    break
                n_steps = seg_steps[s]
                dt = seg_dt[s]
                sqdt = sqrt(dt)
                for i in range(n_steps):
                    z = random_standard_normal(rng)
                    dW = z * sqdt
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
                    nn = sqrt(n2)
                    dev = fabs(nn - 1.0)
                    if dev > dmax:
                        dmax = dev
                    dss = dss + dev * dev
                    g = g + 1
                    # flags norm collapse and (renormalize=False only)
                    # divergence to inf/nan in one test
                    if not (1e-6 <= nn < 1e300):
                        degen[j] = g
                        break
                    if renormalize:
                        a_r = nar / nn
                        a_i = nai / nn
                        b_r = nbr / nn
                        b_i = nbi / nn
                    else:
                        a_r = nar; a_i = nai; b_r = nbr; b_i = nbi
                    if g % stride == 0:
                        k = g / stride
                        out[j, k, 0] = a_r
                        out[j, k, 1] = a_i
                        out[j, k, 2] = b_r
                        out[j, k, 3] = b_i
        ar[j] = a_r; ai[j] = a_i; br[j] = b_r; bi[j] = b_i
        dev_max[j] = dmax; dev_sumsq[j] = dss
