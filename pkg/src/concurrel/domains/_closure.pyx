# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tight closure for integer octagon DBMs (hot kernel).

Same contract as ``_closure_py.tight_close_inplace``: in-place, returns 0 on
success and 1 on unsatisfiable input.
"""

from libc.math cimport floor, INFINITY


def tight_close_inplace(double[:, :] m) -> int:
    cdef Py_ssize_t n2 = m.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double mik, v, hi_, hj
    if n2 == 0:
        return 0
    for k in range(n2):
        for i in range(n2):
            mik = m[i, k]
            if mik == INFINITY:
                continue
            for j in range(n2):
                v = mik + m[k, j]
                if v < m[i, j]:
                    m[i, j] = v
    for i in range(n2):
        if m[i, i] < 0:
            return 1
        m[i, i] = 0.0
    for i in range(n2):
        v = m[i, i ^ 1]
        if v != INFINITY:
            m[i, i ^ 1] = 2.0 * floor(v / 2.0)
    for i in range(n2):
        if m[i, i ^ 1] + m[i ^ 1, i] < 0:
            return 1
    for i in range(n2):
        hi_ = m[i, i ^ 1]
        if hi_ == INFINITY:
            continue
        hi_ = floor(hi_ / 2.0)
        for j in range(n2):
            hj = m[j ^ 1, j]
            if hj == INFINITY:
                continue
            v = hi_ + floor(hj / 2.0)
            if v < m[i, j]:
                m[i, j] = v
    return 0
