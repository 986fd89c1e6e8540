"""Literal dense-matrix reference implementations.

Everything here is written the slow, obvious way: explicit pair rows,
python loops, ``np.linalg.lstsq``.  These serve as independent checks
of the streamed kernels and are only practical for small n; the
validation suites and the test suite compare against them on random
small instances.  Nothing in this module shares code with the
streamed implementations.
"""

from __future__ import annotations

from typing import Dict, List, Tuple

import numpy as np

from .contrasts import Contrast
from .data import ObservedDataset

__all__ = [
    "dense_pair_rows",
    "dense_pair_fit",
    "dense_pair_sandwich",
    "dense_avg_fit",
    "dense_avg_sandwich",
]


def _pair_row(family: str, a: np.ndarray, x: np.ndarray, i: int, j: int) -> List[float]:
    u1 = float(a[i] == 1 and a[j] == 0)
    u2 = float(a[i] == 0 and a[j] == 1)
    xd = list(x[i] - x[j])
    if family == "pairs":
        return [u1, u2]
    if family == "pairs_ancova":
        return [u1, u2] + xd
    if family == "pairs_interacted":
        return [u1, u2] + [u1 * v for v in xd] + [u2 * v for v in xd]
    dij = float(a[i]) - float(a[j])
    if family == "pim":
        return [dij]
    if family == "pim_ancova":
        return [dij] + xd
    if family == "pim_interacted":
        return [dij] + [dij * v for v in xd]
    if family == "pim_full":
        return [dij] + xd + [dij * v for v in xd]
    raise ValueError(f"unknown family {family!r}")


def dense_pair_rows(ds: ObservedDataset, spec: Contrast, family: str):
    """All ordered-pair design rows and responses, row-major order."""
    w = spec.matrix(ds.y, ds.y)
    a = ds.treat
    pairs = []
    z_rows = []
    resp = []
    for i in range(ds.n):
        for j in range(ds.n):
            if i == j:
                continue
            pairs.append((i, j))
            z_rows.append(_pair_row(family, a, ds.x, i, j))
            resp.append(w[i, j])
    return np.asarray(z_rows), np.asarray(resp), pairs


def dense_pair_fit(ds: ObservedDataset, spec: Contrast, family: str) -> np.ndarray:
    z, w, _ = dense_pair_rows(ds, spec, family)
    beta, *_ = np.linalg.lstsq(z, w, rcond=None)
    return beta


def dense_pair_sandwich(ds: ObservedDataset, spec: Contrast, family: str,
                        method: str) -> np.ndarray:
    """Full sandwich matrix of a pair fit under one variance method."""
    z, w, pairs = dense_pair_rows(ds, spec, family)
    beta = dense_pair_fit(ds, spec, family)
    r = w - z @ beta
    n = ds.n
    p = z.shape[1]
    zmap: Dict[Tuple[int, int], int] = {pair: k for k, pair in enumerate(pairs)}
    s_row = [np.zeros(p) for _ in range(n)]
    s_col = [np.zeros(p) for _ in range(n)]
    for k, (i, j) in enumerate(pairs):
        s_row[i] = s_row[i] + z[k] * r[k]
        s_col[j] = s_col[j] + z[k] * r[k]
    m_hr = np.zeros((p, p))
    for k in range(len(pairs)):
        m_hr += np.outer(z[k], z[k]) * r[k] ** 2
    if method == "hr":
        middle = m_hr
    elif method == "cr":
        middle = sum(np.outer(s, s) for s in s_row)
    elif method == "tw":
        middle = (sum(np.outer(s, s) for s in s_row)
                  + sum(np.outer(s, s) for s in s_col) - m_hr)
    elif method == "ctw":
        middle = (sum(np.outer(s, s) for s in s_row)
                  + sum(np.outer(s, s) for s in s_col))
        for i in range(n):
            middle += np.outer(s_row[i], s_col[i]) + np.outer(s_col[i], s_row[i])
        for k, (i, j) in enumerate(pairs):
            krev = zmap[(j, i)]
            middle -= np.outer(z[k], z[krev]) * r[k] * r[krev]
            middle -= np.outer(z[k], z[k]) * r[k] ** 2
    else:
        raise ValueError(f"unknown method {method!r}")
    bread = np.linalg.inv(z.T @ z)
    return bread @ middle @ bread


def _avg_quantities(ds: ObservedDataset, spec: Contrast):
    """Per-unit averages by explicit loops."""
    w = spec.matrix(ds.y, ds.y)
    a = ds.treat
    n = ds.n
    w_row = np.zeros(n)
    w_col = np.zeros(n)
    x_row = np.zeros((n, ds.n_covariates))
    for i in range(n):
        opp = [j for j in range(n) if j != i and a[j] != a[i]]
        w_row[i] = np.mean([w[i, j] for j in opp])
        w_col[i] = np.mean([w[j, i] for j in opp])
        if ds.n_covariates:
            x_row[i] = np.mean([ds.x[i] - ds.x[j] for j in opp], axis=0)
    return w_row, w_col, x_row, -x_row


def _avg_design(ds: ObservedDataset, adjustment: str, submodel: int,
                x_row: np.ndarray, x_col: np.ndarray):
    a = ds.treat
    n = ds.n
    rows_own = []
    rows_opp = []
    for i in range(n):
        ti = float(a[i])
        ci = 1.0 - ti
        if submodel == 1:
            own_ind, own_x = (ti, ci), x_row[i]
            opp_ind, opp_x = (ci, ti), x_col[i]
        else:
            own_ind, own_x = (ci, ti), x_col[i]
            opp_ind, opp_x = (ti, ci), x_row[i]

        def build(ind, xv):
            row = [ind[0], ind[1]]
            if adjustment == "ancova":
                row += list(xv)
            elif adjustment == "interacted":
                row += [ind[0] * v for v in xv] + [ind[1] * v for v in xv]
            return row

        rows_own.append(build(own_ind, own_x))
        rows_opp.append(build(opp_ind, opp_x))
    return np.asarray(rows_own), np.asarray(rows_opp)


def dense_avg_fit(ds: ObservedDataset, spec: Contrast, adjustment: str,
                  submodel: int) -> np.ndarray:
    w_row, w_col, x_row, x_col = _avg_quantities(ds, spec)
    z_own, _ = _avg_design(ds, adjustment, submodel, x_row, x_col)
    resp = w_row if submodel == 1 else w_col
    beta, *_ = np.linalg.lstsq(z_own, resp, rcond=None)
    return beta


def dense_avg_sandwich(ds: ObservedDataset, spec: Contrast, adjustment: str,
                       submodel: int, method: str,
                       missing_residuals: str = "arm"):
    """(se2_tc, se2_ct, cov) of an averaged fit, by the displayed sums.

    The fitted submodel's own residuals come from its least-squares
    fit; the opposite orientation's residuals are formed manually from
    the same coefficients.  Under the default ``"arm"`` convention the
    coefficient blocks attach to the units whose average measures the
    block's estimand; ``"literal"`` swaps the attachment.
    """
    w_row, w_col, x_row, x_col = _avg_quantities(ds, spec)
    z_own, z_opp = _avg_design(ds, adjustment, submodel, x_row, x_col)
    resp_own = w_row if submodel == 1 else w_col
    resp_opp = w_col if submodel == 1 else w_row
    beta, *_ = np.linalg.lstsq(z_own, resp_own, rcond=None)
    r_own = resp_own - z_own @ beta
    n = ds.n
    d = ds.n_covariates
    r_opp = np.zeros(n)
    for i in range(n):
        if missing_residuals == "arm":
            fitted = z_opp[i] @ beta
        else:
            row = z_opp[i]
            swapped = [row[1], row[0]]
            if adjustment == "ancova":
                swapped += list(row[2:])
            else:
                swapped += list(row[2 + d: 2 + 2 * d]) + list(row[2: 2 + d])
            fitted = np.asarray(swapped) @ beta
        r_opp[i] = resp_opp[i] - fitted
    bread_own = np.linalg.inv(z_own.T @ z_own)
    bread_opp = np.linalg.inv(z_opp.T @ z_opp)
    m_own = np.zeros_like(bread_own)
    m_opp = np.zeros_like(bread_own)
    m_cov_a = np.zeros_like(bread_own)
    m_cov_b = np.zeros_like(bread_own)
    for i in range(n):
        m_own += np.outer(z_own[i], z_own[i]) * r_own[i] ** 2
        m_opp += np.outer(z_opp[i], z_opp[i]) * r_opp[i] ** 2
        m_cov_a += np.outer(z_own[i], z_opp[i]) * r_own[i] * r_opp[i]
        m_cov_b += np.outer(z_opp[i], z_own[i]) * r_own[i] * r_opp[i]
    s_own = bread_own @ m_own @ bread_own
    if method == "hr":
        return s_own[0, 0], s_own[1, 1], s_own[0, 1]
    if method != "ctw":
        raise ValueError(f"averaged fits support hr/ctw, got {method!r}")
    s_opp = bread_opp @ m_opp @ bread_opp
    c_a = bread_own @ m_cov_a @ bread_opp
    c_b = bread_opp @ m_cov_b @ bread_own
    se2_tc = s_own[0, 0] + s_opp[0, 0]
    se2_ct = s_own[1, 1] + s_opp[1, 1]
    cov = c_a[0, 1] + c_b[0, 1]
    return se2_tc, se2_ct, cov
