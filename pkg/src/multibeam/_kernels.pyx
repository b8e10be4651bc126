# cython: language_level=3
"""Compiled inner loops. ``_kernels_py`` holds the numpy twins of every function here."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, M_PI

cnp.import_array()


def toeplitz_sums(double theta_l, double delta, Py_ssize_t n_steps,
                  double offset, Py_ssize_t m):
    """t[k] = sum_i delta * exp(j*pi*k*sin(theta_l + (i + offset)*delta)), k < m."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] re = np.zeros(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] im = np.zeros(m)
    cdef double[::1] re_v = re
    cdef double[::1] im_v = im
    cdef Py_ssize_t i, k
    cdef double u, br, bi, zr, zi, tmp
    for i in range(n_steps):
        u = M_PI * sin(theta_l + (i + offset) * delta)
        br = cos(u)
        bi = sin(u)
        zr = 1.0
        zi = 0.0
        for k in range(m):
            re_v[k] += zr
            im_v[k] += zi
            tmp = zr * br - zi * bi
            zi = zr * bi + zi * br
            zr = tmp
    return (re + 1j * im) * delta


cdef inline double _ratio(double[:, ::1] c, Py_ssize_t r, double cp, double sp) nogil:
    return (c[r, 0] + c[r, 1] * cp + c[r, 2] * sp) / (c[r, 3] + c[r, 4] * cp + c[r, 5] * sp)


def ratio_grid_argmax(double[::1] objective, double[:, ::1] constraints,
                      double[::1] thresholds, Py_ssize_t resolution):
    """Constrained argmax of a sinusoid ratio over a uniform grid on [-pi, pi).

    Each row holds (a0, a1, a2, b0, b1, b2) for
    (a0 + a1 cos phi + a2 sin phi) / (b0 + b1 cos phi + b2 sin phi).
    Returns (best_index, best_value, feasible_count); best_index is -1 when
    no grid point is feasible.
    """
    cdef Py_ssize_t i, r
    cdef Py_ssize_t n_cons = constraints.shape[0]
    cdef Py_ssize_t best = -1, count = 0
    cdef double best_val = 0.0, phi, cp, sp, val
    cdef double step = 2.0 * M_PI / resolution
    cdef bint ok
    cdef double[:, ::1] obj = np.asarray(objective).reshape(1, 6)
    with nogil:
        for i in range(resolution):
            phi = -M_PI + i * step
            cp = cos(phi)
            sp = sin(phi)
            ok = True
            for r in range(n_cons):
                if _ratio(constraints, r, cp, sp) < thresholds[r]:
                    ok = False
                    break
            if not ok:
                continue
            count += 1
            val = _ratio(obj, 0, cp, sp)
            if best < 0 or val > best_val:
                best = i
                best_val = val
    return best, best_val, count
