"""Integer sweep kernels.

Each kernel exists twice: an ``@njit`` loop nest and a pure-numpy version.
``CUBIC_RIGIDITY_NO_NUMBA=1`` (or a missing numba) selects numpy. Both work
on int64 values that are exact after the caller has scaled the grid to a
common denominator, so the two backends must agree bit for bit.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

INT64_SAFE = 2 ** 62


def default_backend() -> str:
    if os.environ.get("CUBIC_RIGIDITY_NO_NUMBA", "").strip() not in ("", "0") or not HAVE_NUMBA:
        return "numpy"
    return "numba"


def resolve_backend(backend=None) -> str:
    backend = backend or default_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        return "numpy"
    return backend


# ---------------------------------------------------------------------------
# exclusion grid
#
# For every cell:  X = k N + eps_p S1p + eps_m S1m + E,  k = 2 Sigma0 + Sigma1
#                  U = 3 N^2 Sigma0 + 4 N E + eps_p Qp + eps_m Qm
#                  D = Sigma0 + Sigma1,   phi = X^2 - D U
# and the cell is feasible (no contradiction) iff phi < 0.
# tup_s1p/tup_qp etc. are the per-lambda-tuple sums already scaled for N.

DUMP_COLS = 7  # tuple index, sigma0, sigma1, eps_p, eps_m, E, phi


@njit(cache=True)
def _exclusion_grid_nb(N, tup_s1p, tup_s1m, tup_qp, tup_qm, sig0, sig1, epsp, epsm, evals, max_dump):
    count = 0
    feasible = 0
    dump = np.zeros((max_dump, DUMP_COLS), dtype=np.int64)
    min_phi = np.int64(2 ** 62)
    N2 = N * N
    for t in range(tup_s1p.shape[0]):
        s1p = tup_s1p[t]
        s1m = tup_s1m[t]
        qp = tup_qp[t]
        qm = tup_qm[t]
        for a in range(sig0.shape[0]):
            s0 = sig0[a]
            for b in range(sig1.shape[0]):
                s1 = sig1[b]
                D = s0 + s1
                if D <= 0:
                    continue
                kN = (2 * s0 + s1) * N
                base_u = 3 * N2 * s0
                for c in range(epsp.shape[0]):
                    ep = epsp[c]
                    for d in range(epsm.shape[0]):
                        em = epsm[d]
                        xa = kN + ep * s1p + em * s1m
                        ua = base_u + ep * qp + em * qm
                        for f in range(evals.shape[0]):
                            E = evals[f]
                            X = xa + E
                            phi = X * X - D * (ua + 4 * N * E)
                            count += 1
                            if phi < min_phi:
                                min_phi = phi
                            if phi < 0:
                                if feasible < max_dump:
                                    dump[feasible, 0] = t
                                    dump[feasible, 1] = s0
                                    dump[feasible, 2] = s1
                                    dump[feasible, 3] = ep
                                    dump[feasible, 4] = em
                                    dump[feasible, 5] = E
                                    dump[feasible, 6] = phi
                                feasible += 1
    return count, feasible, min_phi, dump


def _exclusion_grid_np(N, tup_s1p, tup_s1m, tup_qp, tup_qm, sig0, sig1, epsp, epsm, evals, max_dump):
    s0 = sig0[:, None, None, None, None]
    s1 = sig1[None, :, None, None, None]
    ep = epsp[None, None, :, None, None]
    em = epsm[None, None, None, :, None]
    E = evals[None, None, None, None, :]
    D = s0 + s1
    valid = np.broadcast_to(D > 0, (len(sig0), len(sig1), len(epsp), len(epsm), len(evals)))
    per_tuple = int(valid.sum())
    count = 0
    feasible = 0
    min_phi = np.int64(2 ** 62)
    rows = []
    for t in range(len(tup_s1p)):
        X = (2 * s0 + s1) * N + ep * tup_s1p[t] + em * tup_s1m[t] + E
        U = 3 * N * N * s0 + 4 * N * E + ep * tup_qp[t] + em * tup_qm[t]
        phi = X * X - D * U
        phi = np.where(valid, phi, np.int64(2 ** 62))
        count += per_tuple
        min_phi = min(min_phi, phi.min())
        bad = np.argwhere(phi < 0)
        if len(bad):
            feasible += len(bad)
            for ia, ib, ic, id_, ie in bad:
                if len(rows) < max_dump:
                    rows.append((t, sig0[ia], sig1[ib], epsp[ic], epsm[id_], evals[ie],
                                 phi[ia, ib, ic, id_, ie]))
    dump = np.zeros((max_dump, DUMP_COLS), dtype=np.int64)
    for i, r in enumerate(rows):
        dump[i] = r
    return count, feasible, np.int64(min_phi), dump


def exclusion_grid(N, tup_s1p, tup_s1m, tup_qp, tup_qm, sig0, sig1, epsp, epsm, evals,
                   max_dump=20, backend=None):
    args = [np.ascontiguousarray(a, dtype=np.int64) for a in
            (tup_s1p, tup_s1m, tup_qp, tup_qm, sig0, sig1, epsp, epsm, evals)]
    if resolve_backend(backend) == "numba":
        out = _exclusion_grid_nb(np.int64(N), *args, max_dump)
    else:
        out = _exclusion_grid_np(np.int64(N), *args, max_dump)
    count, feasible, min_phi, dump = out
    return int(count), int(feasible), int(min_phi), dump[:min(int(feasible), max_dump)]


# ---------------------------------------------------------------------------
# line-case sweeps over integer data (entries <= top, threshold T integer)
# returns (instances satisfying the hypotheses, instances with no good line)

@njit(cache=True)
def _two_lines_nb(T, top):
    inst = 0
    fail = 0
    T4 = 4 * T
    T6 = 6 * T
    for k1 in range(top + 1):
        for k2 in range(top + 1):
            for k3 in range(top + 1):
                for d in range(top + 1):
                    if k1 + k2 + k3 + d >= T6:
                        continue
                    for m in range(d // 2 + 1):
                        if k1 + k2 + m < T4:
                            continue
                        for d1 in range(min(d, top) + 1):
                            for d2 in range(min(d - d1, top) + 1):
                                inst += 1
                                if not (k2 + k3 + d1 < T4 or k1 + k3 + d2 < T4):
                                    fail += 1
    return inst, fail


@njit(cache=True)
def _three_lines_nb(T, top):
    inst = 0
    fail = 0
    T4 = 4 * T
    T6 = 6 * T
    for k1 in range(top + 1):
        for k2 in range(top + 1):
            for k3 in range(top + 1):
                for d in range(top + 1):
                    if k1 + k2 + k3 + d >= T6:
                        continue
                    for m in range(d // 3 + 1):
                        if k1 + k2 + k3 + m < T4:
                            continue
                        for d1 in range(min(d, top) + 1):
                            for d2 in range(min(d - d1, top) + 1):
                                d3 = d - d1 - d2
                                if d3 > top:
                                    continue
                                inst += 1
                                if not (k2 + k3 + d1 < T4 or k1 + k3 + d2 < T4
                                        or k1 + k2 + d3 < T4):
                                    fail += 1
    return inst, fail


@njit(cache=True)
def _one_line_nb(T, top):
    inst = 0
    fail = 0
    for k in range(top + 1):
        for c in range(top + 1):
            # k + c/2 >= 4T  and  k + c < 6T, in doubled integers
            if 2 * k + c >= 8 * T and k + c < 6 * T:
                inst += 1
                if not c < 4 * T:
                    fail += 1
    return inst, fail


def _two_lines_np(T, top):
    inst = fail = 0
    d1, d2 = np.meshgrid(np.arange(top + 1), np.arange(top + 1), indexing="ij")
    for k1 in range(top + 1):
        for k2 in range(top + 1):
            for k3 in range(top + 1):
                for d in range(top + 1):
                    if k1 + k2 + k3 + d >= 6 * T:
                        continue
                    ms = np.arange(d // 2 + 1)
                    n_m = int((k1 + k2 + ms >= 4 * T).sum())
                    if not n_m:
                        continue
                    split = (d1 + d2 <= d)
                    good = (k2 + k3 + d1 < 4 * T) | (k1 + k3 + d2 < 4 * T)
                    inst += n_m * int(split.sum())
                    fail += n_m * int((split & ~good).sum())
    return inst, fail


def _three_lines_np(T, top):
    inst = fail = 0
    d1, d2 = np.meshgrid(np.arange(top + 1), np.arange(top + 1), indexing="ij")
    for k1 in range(top + 1):
        for k2 in range(top + 1):
            for k3 in range(top + 1):
                for d in range(top + 1):
                    if k1 + k2 + k3 + d >= 6 * T:
                        continue
                    ms = np.arange(d // 3 + 1)
                    n_m = int((k1 + k2 + k3 + ms >= 4 * T).sum())
                    if not n_m:
                        continue
                    d3 = d - d1 - d2
                    split = (d3 >= 0) & (d3 <= top)
                    good = (k2 + k3 + d1 < 4 * T) | (k1 + k3 + d2 < 4 * T) | (k1 + k2 + d3 < 4 * T)
                    inst += n_m * int(split.sum())
                    fail += n_m * int((split & ~good).sum())
    return inst, fail


def _one_line_np(T, top):
    k, c = np.meshgrid(np.arange(top + 1), np.arange(top + 1), indexing="ij")
    hyp = (2 * k + c >= 8 * T) & (k + c < 6 * T)
    return int(hyp.sum()), int((hyp & ~(c < 4 * T)).sum())


_LINE_KERNELS = {
    "numba": {"one_line": _one_line_nb, "two_lines": _two_lines_nb, "three_lines": _three_lines_nb},
    "numpy": {"one_line": _one_line_np, "two_lines": _two_lines_np, "three_lines": _three_lines_np},
}


def line_sweep(case: str, T: int, top: int, backend=None):
    fn = _LINE_KERNELS[resolve_backend(backend)][case]
    inst, fail = fn(int(T), int(top))
    return int(inst), int(fail)
