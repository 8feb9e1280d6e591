# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-frame alignment solver.

Frame-by-frame translation of the batched numpy solver: identical
construction, guards, and rotation selection, with small dense complex
linear algebra written out longhand.
"""

import numpy as np

cimport numpy as cnp

from libc.math cimport isfinite, log2, sqrt

cnp.import_array()

ctypedef double complex cplx

cdef double _GAIN_TOL = 1e-6


cdef inline double _abs2(cplx z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef int _mgs(cplx[:, ::1] src, int n, int m, cplx[:, ::1] q,
              double* diag_min, double* diag_max) nogil:
    # two-pass modified Gram-Schmidt; the implicit R diagonal is the
    # residual norm, so the positive-diagonal convention holds by design
    cdef int i, j, col, rep
    cdef cplx acc
    cdef double nrm
    diag_min[0] = 1e300
    diag_max[0] = 0.0
    for col in range(m):
        for i in range(n):
            q[i, col] = src[i, col]
        for rep in range(2):
            for j in range(col):
                acc = 0
                for i in range(n):
                    acc = acc + q[i, j].conjugate() * q[i, col]
                for i in range(n):
                    q[i, col] = q[i, col] - acc * q[i, j]
        nrm = 0.0
        for i in range(n):
            nrm += _abs2(q[i, col])
        nrm = sqrt(nrm)
        if nrm < 1e-150:
            return 1
        if nrm < diag_min[0]:
            diag_min[0] = nrm
        if nrm > diag_max[0]:
            diag_max[0] = nrm
        for i in range(n):
            q[i, col] = q[i, col] / nrm
    return 0


cdef int _complement(cplx[:, ::1] qg, int n, int c, cplx[:, ::1] comp) nogil:
    # orthonormal basis of the complement of c orthonormal columns, built
    # by sweeping the coordinate vectors; the final decoders are invariant
    # to this basis choice
    cdef int found = 0, e, i, j, rep
    cdef cplx acc
    cdef double nrm
    for e in range(n):
        if found == n - c:
            break
        for i in range(n):
            comp[i, found] = 0
        comp[e, found] = 1
        for rep in range(2):
            for j in range(c):
                acc = 0
                for i in range(n):
                    acc = acc + qg[i, j].conjugate() * comp[i, found]
                for i in range(n):
                    comp[i, found] = comp[i, found] - acc * qg[i, j]
            for j in range(found):
                acc = 0
                for i in range(n):
                    acc = acc + comp[i, j].conjugate() * comp[i, found]
                for i in range(n):
                    comp[i, found] = comp[i, found] - acc * comp[i, j]
        nrm = 0.0
        for i in range(n):
            nrm += _abs2(comp[i, found])
        nrm = sqrt(nrm)
        if nrm > 1e-7:
            for i in range(n):
                comp[i, found] = comp[i, found] / nrm
            found += 1
    return 0 if found == n - c else 1


cdef int _inv(cplx[:, ::1] a, int d, cplx[:, ::1] out) nogil:
    # Gauss-Jordan with partial pivoting; clobbers a
    cdef int i, j, k, piv
    cdef double best, mag
    cdef cplx factor, tmp
    for i in range(d):
        for j in range(d):
            out[i, j] = 1 if i == j else 0
    for k in range(d):
        piv = k
        best = _abs2(a[k, k])
        for i in range(k + 1, d):
            mag = _abs2(a[i, k])
            if mag > best:
                best = mag
                piv = i
        if best < 1e-300:
            return 1
        if piv != k:
            for j in range(d):
                tmp = a[k, j]; a[k, j] = a[piv, j]; a[piv, j] = tmp
                tmp = out[k, j]; out[k, j] = out[piv, j]; out[piv, j] = tmp
        factor = a[k, k]
        for j in range(d):
            a[k, j] = a[k, j] / factor
            out[k, j] = out[k, j] / factor
        for i in range(d):
            if i == k:
                continue
            factor = a[i, k]
            if factor != 0:
                for j in range(d):
                    a[i, j] = a[i, j] - factor * a[k, j]
                    out[i, j] = out[i, j] - factor * out[k, j]
    return 0


def solve_frames(w_design, d_alloc, pool, double p):
    """Same contract as the numpy twin: (v, u, ok) per frame."""
    w_arr = np.ascontiguousarray(w_design, dtype=np.complex128)
    cdef Py_ssize_t frames = w_arr.shape[0]
    cdef int n = w_arr.shape[3]
    cdef int q = (n - 1) // 2
    cdef int d0 = d_alloc[0], d1 = d_alloc[1], d2 = d_alloc[2]
    cdef int dmax = max(d_alloc)
    if w_arr.shape[1] != 3 or w_arr.shape[2] != 3:
        raise ValueError("expected design channels of shape (frames, 3, 3, n)")

    if n < 3 or n % 2 == 0:
        raise ValueError("symbol extension must be odd and at least 3")
    cdef int n_cand = np.asarray(pool[0]).shape[0]
    pools = np.zeros((3, n_cand, dmax, dmax), dtype=np.complex128)
    for _k, _mat in enumerate(pool):
        _dk = d_alloc[_k]
        pools[_k, :, :_dk, :_dk] = np.asarray(_mat, dtype=np.complex128)
    cdef cplx[:, :, :, ::1] th = pools

    v_out = np.zeros((frames, 3, n, dmax), dtype=np.complex128)
    u_out = np.zeros((frames, 3, n, dmax), dtype=np.complex128)
    ok_out = np.ones(frames, dtype=np.uint8)
    cdef cplx[:, :, :, ::1] w = w_arr
    cdef cplx[:, :, :, ::1] v = v_out
    cdef cplx[:, :, :, ::1] u = u_out
    cdef cnp.uint8_t[::1] ok = ok_out

    cdef cplx[:, ::1] powers = np.zeros((n, q + 1), dtype=np.complex128)
    cdef cplx[:, ::1] raw = np.zeros((n, q), dtype=np.complex128)
    cdef cplx[:, :, ::1] van = np.zeros((3, n, dmax), dtype=np.complex128)
    cdef cplx[:, ::1] gen = np.zeros((n, q + 1), dtype=np.complex128)
    cdef cplx[:, ::1] qg = np.zeros((n, q + 1), dtype=np.complex128)
    cdef cplx[:, ::1] comp = np.zeros((n, dmax), dtype=np.complex128)
    cdef cplx[:, ::1] c_mat = np.zeros((dmax, dmax), dtype=np.complex128)
    cdef cplx[:, ::1] c_inv = np.zeros((dmax, dmax), dtype=np.complex128)
    cdef cplx[:, ::1] zc = np.zeros((dmax, dmax), dtype=np.complex128)
    z_arr = np.zeros((dmax, dmax), dtype=np.complex128)
    t_arr = np.zeros(n, dtype=np.complex128)
    norm_arr = np.zeros(dmax, dtype=np.float64)
    cdef cplx[:, ::1] z = z_arr
    cdef cplx[::1] t_vec = t_arr
    cdef double[::1] col_norm = norm_arr

    cdef Py_ssize_t f
    cdef int i, j, k, e, dd, dk, gcols, r, sel, bad
    cdef double dmin, dmag, best, obj, n2, scale_k
    cdef cplx acc

    with nogil:
        for f in range(frames):
            bad = 0
            for i in range(3):
                for j in range(3):
                    for e in range(n):
                        dmag = _abs2(w[f, i, j, e])
                        if dmag < 1e-300 or not isfinite(dmag):
                            bad = 1
            if bad:
                ok[f] = 0
                continue

            for e in range(n):
                t_vec[e] = (w[f, 0, 2, e] / w[f, 1, 2, e]) \
                    * (w[f, 1, 0, e] / w[f, 2, 0, e]) \
                    * (w[f, 2, 1, e] / w[f, 0, 1, e])
            for e in range(n):
                powers[e, 0] = 1
            for j in range(1, q + 1):
                for e in range(n):
                    powers[e, j] = powers[e, j - 1] * t_vec[e]

            # user 1: the power chain itself
            if _mgs(powers, n, q + 1, qg, &dmin, &dmag) or dmin <= 1e-10 * dmag:
                ok[f] = 0
                continue
            for e in range(n):
                for j in range(d0):
                    van[0, e, j] = qg[e, j]
            # user 2: scaled chain shifted by one power of t
            for e in range(n):
                acc = w[f, 2, 0, e] / w[f, 2, 1, e]
                for j in range(q):
                    raw[e, j] = acc * powers[e, j + 1]
            if _mgs(raw, n, q, qg, &dmin, &dmag) or dmin <= 1e-10 * dmag:
                ok[f] = 0
                continue
            for e in range(n):
                for j in range(d1):
                    van[1, e, j] = qg[e, j]
            # user 3: scaled chain, lowest q powers
            for e in range(n):
                acc = w[f, 1, 0, e] / w[f, 1, 2, e]
                for j in range(q):
                    raw[e, j] = acc * powers[e, j]
            if _mgs(raw, n, q, qg, &dmin, &dmag) or dmin <= 1e-10 * dmag:
                ok[f] = 0
                continue
            for e in range(n):
                for j in range(d2):
                    van[2, e, j] = qg[e, j]

            for k in range(3):
                if k == 0:
                    dk = d0
                    gcols = d1
                elif k == 1:
                    dk = d1
                    gcols = d0
                else:
                    dk = d2
                    gcols = d0

                # aligned interference generators at receiver k
                for e in range(n):
                    if k == 0:
                        acc = w[f, 0, 1, e]
                        for j in range(gcols):
                            gen[e, j] = acc * van[1, e, j]
                    elif k == 1:
                        acc = w[f, 1, 0, e]
                        for j in range(gcols):
                            gen[e, j] = acc * van[0, e, j]
                    else:
                        acc = w[f, 2, 0, e]
                        for j in range(gcols):
                            gen[e, j] = acc * van[0, e, j]
                if _mgs(gen, n, gcols, qg, &dmin, &dmag):
                    ok[f] = 0
                    break
                if _complement(qg, n, gcols, comp):
                    ok[f] = 0
                    break

                for dd in range(dk):
                    for e in range(dk):
                        acc = 0
                        for i in range(n):
                            acc = acc + comp[i, dd].conjugate() \
                                * w[f, k, k, i] * van[k, i, e]
                        c_mat[dd, e] = acc
                if _inv(c_mat, dk, c_inv):
                    ok[f] = 0
                    break
                for i in range(dk):
                    for j in range(dk):
                        z[i, j] = c_inv[j, i].conjugate()

                scale_k = n * p / dk
                best = -1e300
                sel = 0
                for r in range(n_cand):
                    obj = 0
                    for i in range(dk):
                        n2 = 0
                        for dd in range(dk):
                            acc = 0
                            for e in range(dk):
                                acc = acc + z[dd, e] * th[k, r, e, i]
                            n2 += _abs2(acc)
                        obj += log2(1.0 + scale_k / n2)
                    if obj > best:
                        best = obj
                        sel = r

                for i in range(dk):
                    n2 = 0
                    for dd in range(dk):
                        acc = 0
                        for e in range(dk):
                            acc = acc + z[dd, e] * th[k, sel, e, i]
                        zc[dd, i] = acc
                        n2 += _abs2(acc)
                    col_norm[i] = sqrt(n2)
                bad = 0
                for i in range(dk):
                    if col_norm[i] >= 1.0 / _GAIN_TOL:
                        bad = 1
                if bad:
                    ok[f] = 0
                    break

                for i in range(n):
                    for j in range(dk):
                        acc = 0
                        for e in range(dk):
                            acc = acc + van[k, i, e] * th[k, sel, e, j]
                        v[f, k, i, j] = acc
                        acc = 0
                        for dd in range(dk):
                            acc = acc + comp[i, dd] * zc[dd, j]
                        u[f, k, i, j] = acc / col_norm[j]

    return v_out, u_out, ok_out.astype(bool)
