# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled polynomial evaluation over a block of F_q^m (same contract as ``_scan_py``)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def evaluate_grid(const cnp.int64_t[:, ::1] add, const cnp.int64_t[:, ::1] mul,
                  const cnp.int64_t[:, ::1] powt, Py_ssize_t m, Py_ssize_t start,
                  Py_ssize_t stop, polys):
    cdef Py_ssize_t q = add.shape[0]
    cdef Py_ssize_t npts = stop - start
    cdef Py_ssize_t npoly = len(polys)
    cdef Py_ssize_t total = 0, nfac = 0, p, k, t, v, n, idx, f
    for coeffs, exps in polys:
        total += len(coeffs)
        nfac += int(np.count_nonzero(exps))

    # flatten all polynomials into one term table with sparse factor lists
    cdef cnp.int64_t[::1] offsets = np.zeros(npoly + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] cs = np.zeros(total, dtype=np.int64)
    cdef cnp.int64_t[::1] fstart = np.zeros(total + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] fvar = np.zeros(max(nfac, 1), dtype=np.int64)
    cdef cnp.int64_t[::1] fexp = np.zeros(max(nfac, 1), dtype=np.int64)
    k = 0
    f = 0
    for p in range(npoly):
        coeffs, exps = polys[p]
        for t in range(len(coeffs)):
            cs[k] = coeffs[t]
            for v in range(m):
                if exps[t][v]:
                    fvar[f] = v
                    fexp[f] = exps[t][v]
                    f += 1
            k += 1
            fstart[k] = f
        offsets[p + 1] = k

    out_arr = np.zeros((npts, npoly), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef cnp.int64_t[::1] digit = np.zeros(m, dtype=np.int64)
    cdef cnp.int64_t acc, term

    with nogil:
        idx = start
        for v in range(m - 1, -1, -1):
            digit[v] = idx % q
            idx = idx // q
        for n in range(npts):
            for p in range(npoly):
                acc = 0
                for k in range(offsets[p], offsets[p + 1]):
                    term = cs[k]
                    for f in range(fstart[k], fstart[k + 1]):
                        term = mul[term, powt[digit[fvar[f]], fexp[f]]]
                    acc = add[acc, term]
                out[n, p] = acc
            # odometer increment
            v = m - 1
            while v >= 0:
                digit[v] += 1
                if digit[v] < q:
                    break
                digit[v] = 0
                v -= 1
    return out_arr
