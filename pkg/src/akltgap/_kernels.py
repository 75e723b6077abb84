"""Numba kernels: matrix-free operator application and VBS tensor sweeps.

All kernels work on packed configuration words (2 bits per site, site i in
bits [2i, 2i+1], word value ascending = basis order).  Operator kernels are
written in gather form: each output amplitude is accumulated from its source
amplitudes, so runs are deterministic and race-free regardless of scheduling.

Index lookup comes in two flavors: a direct word -> sector-index table (one
int32 per point of the full 4^n space, used for n <= 13) and binary search
over the sorted word list (larger n).
"""

from __future__ import annotations

import numpy as np
from numba import njit

_SQ3 = np.sqrt(3.0)
_I3 = np.int64(3)
_I1 = np.int64(1)


@njit(cache=True)
def h_apply_table(words, table, pu, pv, wts, ro, cols, vals, vin, vout):
    D = words.shape[0]
    ne = pu.shape[0]
    for i in range(D):
        x = words[i]
        acc = 0.0
        for e in range(ne):
            su = pu[e] << 1
            sv = pv[e] << 1
            lu = (x >> su) & _I3
            lv = (x >> sv) & _I3
            r = (lu << 2) | lv
            base = x & ~((_I3 << su) | (_I3 << sv))
            we = wts[e]
            for k in range(ro[r], ro[r + 1]):
                c = cols[k]
                y = base | ((c >> 2) << su) | ((c & _I3) << sv)
                acc += we * vals[k] * vin[table[y]]
        vout[i] = acc


@njit(cache=True)
def h_apply_table_block(words, table, pu, pv, wts, ro, cols, vals, vin, vout):
    D = words.shape[0]
    ne = pu.shape[0]
    kc = vin.shape[1]
    for i in range(D):
        x = words[i]
        for q in range(kc):
            vout[i, q] = 0.0
        for e in range(ne):
            su = pu[e] << 1
            sv = pv[e] << 1
            lu = (x >> su) & _I3
            lv = (x >> sv) & _I3
            r = (lu << 2) | lv
            base = x & ~((_I3 << su) | (_I3 << sv))
            we = wts[e]
            for k in range(ro[r], ro[r + 1]):
                c = cols[k]
                y = base | ((c >> 2) << su) | ((c & _I3) << sv)
                j = table[y]
                cf = we * vals[k]
                for q in range(kc):
                    vout[i, q] += cf * vin[j, q]


@njit(cache=True)
def h_count_row_nnz(words, pu, pv, blocklen, counts):
    # blocklen[r] = number of bond-matrix entries in block row r
    D = words.shape[0]
    ne = pu.shape[0]
    for i in range(D):
        x = words[i]
        t = np.int64(0)
        for e in range(ne):
            lu = (x >> (pu[e] << 1)) & _I3
            lv = (x >> (pv[e] << 1)) & _I3
            t += blocklen[(lu << 2) | lv]
        counts[i] = t


@njit(cache=True)
def h_fill_csr(words, table, pu, pv, ro, cols, indptr, out_cols, out_vidx):
    """Freeze the gather pattern of the apply kernels into CSR arrays.

    Column indices are stored as int32 and coefficients as an int16 index
    e * nb + k into the flattened (edge, bond-entry) coefficient table, so
    the frozen action costs 6 bytes per entry instead of 12.
    """
    D = words.shape[0]
    ne = pu.shape[0]
    nb = cols.shape[0]
    for i in range(D):
        x = words[i]
        p = indptr[i]
        for e in range(ne):
            su = pu[e] << 1
            sv = pv[e] << 1
            lu = (x >> su) & _I3
            lv = (x >> sv) & _I3
            r = (lu << 2) | lv
            base = x & ~((_I3 << su) | (_I3 << sv))
            for k in range(ro[r], ro[r + 1]):
                c = cols[k]
                y = base | ((c >> 2) << su) | ((c & _I3) << sv)
                out_cols[p] = table[y]
                out_vidx[p] = e * nb + k
                p += 1


@njit(cache=True)
def csr_vidx_matvec(indptr, cols, vidx, vtab, vin, vout):
    D = vout.shape[0]
    for i in range(D):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += vtab[vidx[k]] * vin[cols[k]]
        vout[i] = acc


@njit(cache=True, inline="always")
def _bisect(words, y):
    lo = 0
    hi = words.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if words[mid] < y:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def h_apply_sorted(words, pu, pv, wts, ro, cols, vals, vin, vout):
    D = words.shape[0]
    ne = pu.shape[0]
    for i in range(D):
        x = words[i]
        acc = 0.0
        for e in range(ne):
            su = pu[e] << 1
            sv = pv[e] << 1
            lu = (x >> su) & _I3
            lv = (x >> sv) & _I3
            r = (lu << 2) | lv
            base = x & ~((_I3 << su) | (_I3 << sv))
            we = wts[e]
            for k in range(ro[r], ro[r + 1]):
                c = cols[k]
                y = base | ((c >> 2) << su) | ((c & _I3) << sv)
                acc += we * vals[k] * vin[_bisect(words, y)]
        vout[i] = acc


@njit(cache=True)
def s2_offdiag_table(words, table, n_sites, vin, vout):
    # sum over ordered site pairs (a, b), a != b, of S+_a S-_b in gather form;
    # the diagonal part is added by the caller.
    D = words.shape[0]
    cp = np.empty(3)
    cp[0] = _SQ3
    cp[1] = 2.0
    cp[2] = _SQ3
    for i in range(D):
        x = words[i]
        acc = 0.0
        for a in range(n_sites):
            sa = a << 1
            la = (x >> sa) & _I3
            if la > 2:
                continue
            ca = cp[la]
            for b in range(n_sites):
                if b == a:
                    continue
                sb = b << 1
                lb = (x >> sb) & _I3
                if lb < 1:
                    continue
                y = x + (_I1 << sa) - (_I1 << sb)
                acc += ca * cp[lb - 1] * vin[table[y]]
        vout[i] = acc


@njit(cache=True)
def s2_offdiag_table_block(words, table, n_sites, vin, vout):
    D = words.shape[0]
    kc = vin.shape[1]
    cp = np.empty(3)
    cp[0] = _SQ3
    cp[1] = 2.0
    cp[2] = _SQ3
    for i in range(D):
        x = words[i]
        for q in range(kc):
            vout[i, q] = 0.0
        for a in range(n_sites):
            sa = a << 1
            la = (x >> sa) & _I3
            if la > 2:
                continue
            ca = cp[la]
            for b in range(n_sites):
                if b == a:
                    continue
                sb = b << 1
                lb = (x >> sb) & _I3
                if lb < 1:
                    continue
                j = table[x + (_I1 << sa) - (_I1 << sb)]
                cf = ca * cp[lb - 1]
                for q in range(kc):
                    vout[i, q] += cf * vin[j, q]


@njit(cache=True)
def s2_offdiag_sorted(words, n_sites, vin, vout):
    D = words.shape[0]
    cp = np.empty(3)
    cp[0] = _SQ3
    cp[1] = 2.0
    cp[2] = _SQ3
    for i in range(D):
        x = words[i]
        acc = 0.0
        for a in range(n_sites):
            sa = a << 1
            la = (x >> sa) & _I3
            if la > 2:
                continue
            ca = cp[la]
            for b in range(n_sites):
                if b == a:
                    continue
                sb = b << 1
                lb = (x >> sb) & _I3
                if lb < 1:
                    continue
                y = x + (_I1 << sa) - (_I1 << sb)
                acc += ca * cp[lb - 1] * vin[_bisect(words, y)]
        vout[i] = acc


@njit(cache=True)
def vbs_sweep(words, site, labmul, olddim, newdim, moff, mats, sel, out, maxwork):
    """Per-word contraction sweep producing selected boundary-label amplitudes.

    Step matrices are flattened as [level, old, new, label] blocks; the
    running vector R is indexed R[label * old_dim + bond].  Results are
    written to ``out`` (rows = label tuples, columns = words) via a small
    transpose buffer so the hot write path stays contiguous.
    """
    D = words.shape[0]
    ns = site.shape[0]
    nsel = sel.shape[0]
    B = 256
    R = np.empty(maxwork)
    R2 = np.empty(maxwork)
    tmp = np.empty((B, nsel))
    i0 = 0
    while i0 < D:
        ib = min(B, D - i0)
        for bi in range(ib):
            x = words[i0 + bi]
            R[0] = 1.0
            labs = 1
            for s in range(ns):
                lev = (x >> (site[s] << 1)) & _I3
                od = olddim[s]
                nd = newdim[s]
                lm = labmul[s]
                base = moff[s] + lev * od * nd * lm
                for lab in range(labs):
                    ro = lab * od
                    for l in range(lm):
                        wo = (lab * lm + l) * nd
                        for nb in range(nd):
                            acc = 0.0
                            for ob in range(od):
                                acc += R[ro + ob] * mats[base + (ob * nd + nb) * lm + l]
                            R2[wo + nb] = acc
                labs *= lm
                sw = R
                R = R2
                R2 = sw
            for t in range(nsel):
                tmp[bi, t] = R[sel[t]]
        for t in range(nsel):
            o = out[t]
            for bi in range(ib):
                o[i0 + bi] = tmp[bi, t]
        i0 += ib
