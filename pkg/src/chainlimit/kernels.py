"""Hot inner loops: chain steps, drift evaluation, drift recursion, PDE stepping.

Every kernel exists twice: a numba @njit scalar-loop version and a pure numpy
version with identical semantics. Chain-step kernels consume pre-drawn
uniforms and arrival counts, so the two backends produce bit-identical
trajectories; float kernels share the same expression structure.

Select with ``get_kernel(name)`` which honors the CHAINLIMIT_BACKEND flag.

Index conventions: interior nodes are 0-based arrays of length N (or N1 x N2);
probability tables are node-indexed 0..N+1 per axis; state vectors are padded
with two zero ghosts per side inside drift kernels so sink boundaries and the
paper-style out-of-range-is-zero rule fall out of one formula.
"""

from __future__ import annotations

import numpy as np

from .backend import NUMBA_AVAILABLE, backend_name

if NUMBA_AVAILABLE:
    from numba import njit
else:  # pragma: no cover - numba is a hard dependency in normal installs
    def njit(*args, **kwargs):
        def deco(fn):
            return fn
        return deco(args[0]) if args and callable(args[0]) else deco


# --------------------------------------------------------------------------
# 1D queue-network chain step
# --------------------------------------------------------------------------

def _net1d_chunk_np(counts, u, arrivals, p_right, p_left, capacity):
    steps, n = u.shape
    pr_i = p_right[1 : n + 1]
    pl_i = p_left[1 : n + 1]
    c2 = pr_i + pl_i
    overflow = 0
    fpad = np.zeros(n + 4, dtype=np.bool_)
    for t in range(steps):
        x = counts / capacity
        ut = u[t]
        right = ut < x * pr_i
        left = ~right & (ut < x * c2)
        fpad[2 : n + 2] = ut < x
        # transmission into node j succeeds when j and its other neighbor are
        # silent; ghost flags are never set, so sink receivers always succeed
        succ_r = right & ~fpad[3 : n + 3] & ~fpad[4 : n + 4]
        succ_l = left & ~fpad[1 : n + 1] & ~fpad[0:n]
        delta = -(succ_r.astype(np.int64) + succ_l.astype(np.int64))
        delta[1:] += succ_r[:-1]
        delta[:-1] += succ_l[1:]
        counts += delta + arrivals[t]
        over = counts - capacity
        mask = over > 0
        if mask.any():
            overflow += int(over[mask].sum())
            counts[mask] = capacity
    return overflow


@njit(cache=True)
def _net1d_chunk_nb(counts, u, arrivals, p_right, p_left, capacity):  # pragma: no cover
    steps, n = u.shape
    overflow = 0
    send = np.zeros(n, dtype=np.int8)
    flag = np.zeros(n + 4, dtype=np.bool_)
    delta = np.zeros(n, dtype=np.int64)
    for t in range(steps):
        for i in range(n):
            x = counts[i] / capacity
            ui = u[t, i]
            ar = p_right[i + 1]
            al = p_left[i + 1]
            if ui < x * ar:
                send[i] = 1
                flag[i + 2] = True
            elif ui < x * (ar + al):
                send[i] = -1
                flag[i + 2] = True
            elif ui < x:
                send[i] = 0
                flag[i + 2] = True
            else:
                send[i] = 0
                flag[i + 2] = False
            delta[i] = 0
        for i in range(n):
            if send[i] == 1:
                if not flag[i + 3] and not flag[i + 4]:
                    delta[i] -= 1
                    if i + 1 < n:
                        delta[i + 1] += 1
            elif send[i] == -1:
                if not flag[i + 1] and not flag[i]:
                    delta[i] -= 1
                    if i - 1 >= 0:
                        delta[i - 1] += 1
        for i in range(n):
            c = counts[i] + delta[i] + arrivals[t, i]
            if c > capacity:
                overflow += c - capacity
                c = capacity
            counts[i] = c
    return overflow


# --------------------------------------------------------------------------
# 2D queue-network chain step
# --------------------------------------------------------------------------

def _net2d_chunk_np(counts, u, arrivals, p_east, p_west, p_north, p_south, capacity):
    steps, n1, n2 = u.shape
    pe = p_east[1 : n1 + 1, 1 : n2 + 1]
    pw = p_west[1 : n1 + 1, 1 : n2 + 1]
    pn = p_north[1 : n1 + 1, 1 : n2 + 1]
    ps = p_south[1 : n1 + 1, 1 : n2 + 1]
    c1 = pe
    c2 = c1 + pw
    c3 = c2 + pn
    c4 = c3 + ps
    overflow = 0
    fp = np.zeros((n1 + 2, n2 + 2), dtype=np.bool_)
    rok = np.ones((n1 + 2, n2 + 2), dtype=np.bool_)
    for t in range(steps):
        x = counts / capacity
        ut = u[t]
        east = ut < x * c1
        west = ~east & (ut < x * c2)
        north = ~east & ~west & (ut < x * c3)
        south = ~east & ~west & ~north & (ut < x * c4)
        flag = ut < x
        fp[1:-1, 1:-1] = flag
        # a flagged sender is one of its receiver's neighbors, so "all other
        # neighbors silent" is "exactly one flagged neighbor"
        nbr = (
            fp[:-2, 1:-1].astype(np.int8)
            + fp[2:, 1:-1]
            + fp[1:-1, :-2]
            + fp[1:-1, 2:]
        )
        rok[1:-1, 1:-1] = ~flag & (nbr == 1)
        se = east & rok[2:, 1:-1]
        sw = west & rok[:-2, 1:-1]
        sn = north & rok[1:-1, 2:]
        ss = south & rok[1:-1, :-2]
        delta = -(
            se.astype(np.int64) + sw.astype(np.int64) + sn.astype(np.int64) + ss.astype(np.int64)
        )
        delta[1:, :] += se[:-1, :]
        delta[:-1, :] += sw[1:, :]
        delta[:, 1:] += sn[:, :-1]
        delta[:, :-1] += ss[:, 1:]
        counts += delta + arrivals[t]
        over = counts - capacity
        mask = over > 0
        if mask.any():
            overflow += int(over[mask].sum())
            counts[mask] = capacity
    return overflow


@njit(cache=True)
def _net2d_chunk_nb(counts, u, arrivals, p_east, p_west, p_north, p_south, capacity):  # pragma: no cover
    steps, n1, n2 = u.shape
    overflow = 0
    send = np.zeros((n1, n2), dtype=np.int8)  # 0 idle/silent, 1 e, 2 w, 3 n, 4 s
    flag = np.zeros((n1 + 2, n2 + 2), dtype=np.bool_)
    delta = np.zeros((n1, n2), dtype=np.int64)
    for t in range(steps):
        for i in range(n1):
            for j in range(n2):
                x = counts[i, j] / capacity
                ui = u[t, i, j]
                ae = p_east[i + 1, j + 1]
                aw = p_west[i + 1, j + 1]
                an = p_north[i + 1, j + 1]
                a_s = p_south[i + 1, j + 1]
                code = 0
                flagged = False
                if ui < x * ae:
                    code = 1
                    flagged = True
                elif ui < x * (ae + aw):
                    code = 2
                    flagged = True
                elif ui < x * (ae + aw + an):
                    code = 3
                    flagged = True
                elif ui < x * (ae + aw + an + a_s):
                    code = 4
                    flagged = True
                elif ui < x:
                    code = 0
                    flagged = True
                send[i, j] = code
                flag[i + 1, j + 1] = flagged
                delta[i, j] = 0
        for i in range(n1):
            for j in range(n2):
                code = send[i, j]
                if code == 0:
                    continue
                if code == 1:
                    ri, rj = i + 1, j
                elif code == 2:
                    ri, rj = i - 1, j
                elif code == 3:
                    ri, rj = i, j + 1
                else:
                    ri, rj = i, j - 1
                if ri < 0 or ri >= n1 or rj < 0 or rj >= n2:
                    succ = True  # destination frame always receives
                else:
                    nbr = (
                        int(flag[ri, rj + 1])
                        + int(flag[ri + 2, rj + 1])
                        + int(flag[ri + 1, rj])
                        + int(flag[ri + 1, rj + 2])
                    )
                    succ = (not flag[ri + 1, rj + 1]) and nbr == 1
                if succ:
                    delta[i, j] -= 1
                    if 0 <= ri < n1 and 0 <= rj < n2:
                        delta[ri, rj] += 1
        for i in range(n1):
            for j in range(n2):
                c = counts[i, j] + delta[i, j] + arrivals[t, i, j]
                if c > capacity:
                    overflow += c - capacity
                    c = capacity
                counts[i, j] = c
    return overflow


# --------------------------------------------------------------------------
# Expected drift
# --------------------------------------------------------------------------

def _drift_rw1d_np(x, p_right, p_left):
    n = x.shape[0]
    xp = np.zeros(n + 4)
    xp[2 : n + 2] = x
    return (
        p_right[0 : n] * xp[1 : n + 1]
        + p_left[2 : n + 2] * xp[3 : n + 3]
        - (p_right[1 : n + 1] + p_left[1 : n + 1]) * xp[2 : n + 2]
    )


@njit(cache=True)
def _drift_rw1d_nb(x, p_right, p_left):  # pragma: no cover
    n = x.shape[0]
    xp = np.zeros(n + 4)
    for i in range(n):
        xp[i + 2] = x[i]
    f = np.empty(n)
    for i in range(n):
        f[i] = (
            p_right[i] * xp[i + 1]
            + p_left[i + 2] * xp[i + 3]
            - (p_right[i + 1] + p_left[i + 1]) * xp[i + 2]
        )
    return f


def _drift_net1d_np(x, p_right, p_left, g_step):
    n = x.shape[0]
    xp = np.zeros(n + 4)
    xp[2 : n + 2] = x
    xm2 = xp[0:n]
    xm1 = xp[1 : n + 1]
    x0 = xp[2 : n + 2]
    xq1 = xp[3 : n + 3]
    xq2 = xp[4 : n + 4]
    inc = (1.0 - x0) * (
        p_right[0:n] * xm1 * (1.0 - xq1) + p_left[2 : n + 2] * xq1 * (1.0 - xm1)
    )
    dec = x0 * (
        p_right[1 : n + 1] * (1.0 - xq1) * (1.0 - xq2)
        + p_left[1 : n + 1] * (1.0 - xm1) * (1.0 - xm2)
    )
    return inc - dec + g_step


@njit(cache=True)
def _drift_net1d_nb(x, p_right, p_left, g_step):  # pragma: no cover
    n = x.shape[0]
    xp = np.zeros(n + 4)
    for i in range(n):
        xp[i + 2] = x[i]
    f = np.empty(n)
    for i in range(n):
        xm2 = xp[i]
        xm1 = xp[i + 1]
        x0 = xp[i + 2]
        xq1 = xp[i + 3]
        xq2 = xp[i + 4]
        inc = (1.0 - x0) * (
            p_right[i] * xm1 * (1.0 - xq1) + p_left[i + 2] * xq1 * (1.0 - xm1)
        )
        dec = x0 * (
            p_right[i + 1] * (1.0 - xq1) * (1.0 - xq2)
            + p_left[i + 1] * (1.0 - xm1) * (1.0 - xm2)
        )
        f[i] = inc - dec + g_step[i]
    return f


def _drift_net2d_np(x, p_east, p_west, p_north, p_south, g_step):
    n1, n2 = x.shape
    xp = np.zeros((n1 + 4, n2 + 4))
    xp[2 : n1 + 2, 2 : n2 + 2] = x

    def sh(di, dj):
        return xp[2 + di : n1 + 2 + di, 2 + dj : n2 + 2 + dj]

    x0 = sh(0, 0)
    xe, xw = sh(1, 0), sh(-1, 0)
    xn, xs = sh(0, 1), sh(0, -1)
    xee, xww = sh(2, 0), sh(-2, 0)
    xnn, xss = sh(0, 2), sh(0, -2)
    xen, xes = sh(1, 1), sh(1, -1)
    xwn, xws = sh(-1, 1), sh(-1, -1)

    pe = p_east[1 : n1 + 1, 1 : n2 + 1]
    pw = p_west[1 : n1 + 1, 1 : n2 + 1]
    pn = p_north[1 : n1 + 1, 1 : n2 + 1]
    ps = p_south[1 : n1 + 1, 1 : n2 + 1]
    pe_w = p_east[0:n1, 1 : n2 + 1]
    pw_e = p_west[2 : n1 + 2, 1 : n2 + 1]
    pn_s = p_north[1 : n1 + 1, 0:n2]
    ps_n = p_south[1 : n1 + 1, 2 : n2 + 2]

    inc = (1.0 - x0) * (
        pe_w * xw * (1.0 - xe) * (1.0 - xn) * (1.0 - xs)
        + pw_e * xe * (1.0 - xw) * (1.0 - xn) * (1.0 - xs)
        + pn_s * xs * (1.0 - xn) * (1.0 - xe) * (1.0 - xw)
        + ps_n * xn * (1.0 - xs) * (1.0 - xe) * (1.0 - xw)
    )
    dec = x0 * (
        pe * (1.0 - xe) * (1.0 - xee) * (1.0 - xen) * (1.0 - xes)
        + pw * (1.0 - xw) * (1.0 - xww) * (1.0 - xwn) * (1.0 - xws)
        + pn * (1.0 - xn) * (1.0 - xnn) * (1.0 - xen) * (1.0 - xwn)
        + ps * (1.0 - xs) * (1.0 - xss) * (1.0 - xes) * (1.0 - xws)
    )
    return inc - dec + g_step


@njit(cache=True)
def _drift_net2d_nb(x, p_east, p_west, p_north, p_south, g_step):  # pragma: no cover
    n1, n2 = x.shape
    xp = np.zeros((n1 + 4, n2 + 4))
    for i in range(n1):
        for j in range(n2):
            xp[i + 2, j + 2] = x[i, j]
    f = np.empty((n1, n2))
    for i in range(n1):
        for j in range(n2):
            a, b = i + 2, j + 2
            x0 = xp[a, b]
            xe, xw = xp[a + 1, b], xp[a - 1, b]
            xn, xs = xp[a, b + 1], xp[a, b - 1]
            xee, xww = xp[a + 2, b], xp[a - 2, b]
            xnn, xss = xp[a, b + 2], xp[a, b - 2]
            xen, xes = xp[a + 1, b + 1], xp[a + 1, b - 1]
            xwn, xws = xp[a - 1, b + 1], xp[a - 1, b - 1]
            inc = (1.0 - x0) * (
                p_east[i, j + 1] * xw * (1.0 - xe) * (1.0 - xn) * (1.0 - xs)
                + p_west[i + 2, j + 1] * xe * (1.0 - xw) * (1.0 - xn) * (1.0 - xs)
                + p_north[i + 1, j] * xs * (1.0 - xn) * (1.0 - xe) * (1.0 - xw)
                + p_south[i + 1, j + 2] * xn * (1.0 - xs) * (1.0 - xe) * (1.0 - xw)
            )
            dec = x0 * (
                p_east[i + 1, j + 1] * (1.0 - xe) * (1.0 - xee) * (1.0 - xen) * (1.0 - xes)
                + p_west[i + 1, j + 1] * (1.0 - xw) * (1.0 - xww) * (1.0 - xwn) * (1.0 - xws)
                + p_north[i + 1, j + 1] * (1.0 - xn) * (1.0 - xnn) * (1.0 - xen) * (1.0 - xwn)
                + p_south[i + 1, j + 1] * (1.0 - xs) * (1.0 - xss) * (1.0 - xes) * (1.0 - xws)
            )
            f[i, j] = inc - dec + g_step[i, j]
    return f


# --------------------------------------------------------------------------
# Deterministic drift recursion
# --------------------------------------------------------------------------

def _rec_advance_np(drift_fn, x, args, scale, nsteps, tol):
    for t in range(nsteps):
        x += scale * drift_fn(x, *args)
        lo = x.min()
        hi = x.max()
        if not (lo >= -tol and hi <= 1.0 + tol):
            return t
    return -1


def _rec_rw1d_np(x, p_right, p_left, g_step, scale, nsteps, tol):
    return _rec_advance_np(_drift_rw1d_np, x, (p_right, p_left), scale, nsteps, tol)


def _rec_net1d_np(x, p_right, p_left, g_step, scale, nsteps, tol):
    return _rec_advance_np(_drift_net1d_np, x, (p_right, p_left, g_step), scale, nsteps, tol)


def _rec_net2d_np(x, p_east, p_west, p_north, p_south, g_step, scale, nsteps, tol):
    return _rec_advance_np(
        _drift_net2d_np, x, (p_east, p_west, p_north, p_south, g_step), scale, nsteps, tol
    )


@njit(cache=True)
def _rec_rw1d_nb(x, p_right, p_left, g_step, scale, nsteps, tol):  # pragma: no cover
    for t in range(nsteps):
        f = _drift_rw1d_nb(x, p_right, p_left)
        ok = True
        for i in range(x.shape[0]):
            x[i] += scale * f[i]
            v = x[i]
            if not (v >= -tol and v <= 1.0 + tol):
                ok = False
        if not ok:
            return t
    return -1


@njit(cache=True)
def _rec_net1d_nb(x, p_right, p_left, g_step, scale, nsteps, tol):  # pragma: no cover
    for t in range(nsteps):
        f = _drift_net1d_nb(x, p_right, p_left, g_step)
        ok = True
        for i in range(x.shape[0]):
            x[i] += scale * f[i]
            v = x[i]
            if not (v >= -tol and v <= 1.0 + tol):
                ok = False
        if not ok:
            return t
    return -1


@njit(cache=True)
def _rec_net2d_nb(x, p_east, p_west, p_north, p_south, g_step, scale, nsteps, tol):  # pragma: no cover
    n1, n2 = x.shape
    for t in range(nsteps):
        f = _drift_net2d_nb(x, p_east, p_west, p_north, p_south, g_step)
        ok = True
        for i in range(n1):
            for j in range(n2):
                x[i, j] += scale * f[i, j]
                v = x[i, j]
                if not (v >= -tol and v <= 1.0 + tol):
                    ok = False
        if not ok:
            return t
    return -1


# --------------------------------------------------------------------------
# PDE forward-Euler stepping (z arrays carry zero Dirichlet ghosts)
# --------------------------------------------------------------------------

def _pde_rw1d_np(z, b_face, a_face, inv_ds, dt, nsteps, tol):
    n = z.shape[0] - 2
    for t in range(nsteps):
        flux = b_face * (z[1:] - z[:-1]) * inv_ds + a_face * 0.5 * (z[1:] + z[:-1])
        z[1 : n + 1] += dt * (flux[1:] - flux[:-1]) * inv_ds
        zi = z[1 : n + 1]
        lo = zi.min()
        hi = zi.max()
        if not (lo >= -tol and hi <= 1.0 + tol):
            return t
    return -1


@njit(cache=True)
def _pde_rw1d_nb(z, b_face, a_face, inv_ds, dt, nsteps, tol):  # pragma: no cover
    n = z.shape[0] - 2
    flux = np.empty(n + 1)
    for t in range(nsteps):
        for m in range(n + 1):
            flux[m] = b_face[m] * (z[m + 1] - z[m]) * inv_ds + a_face[m] * 0.5 * (z[m + 1] + z[m])
        ok = True
        for i in range(1, n + 1):
            z[i] += dt * (flux[i] - flux[i - 1]) * inv_ds
            v = z[i]
            if not (v >= -tol and v <= 1.0 + tol):
                ok = False
        if not ok:
            return t
    return -1


def _pde_net1d_np(z, b, b_s, b_ss, c_face, g_rate, inv_ds, dt, nsteps, tol):
    n = z.shape[0] - 2
    for t in range(nsteps):
        zm = 0.5 * (z[1:] + z[:-1])
        grad = (z[1:] - z[:-1]) * inv_ds
        phi = (1.0 - zm) * (1.0 + 3.0 * zm) * grad
        psi = c_face * zm * (1.0 - zm) * (1.0 - zm)
        zi = z[1 : n + 1]
        rhs = (
            b * (phi[1:] - phi[:-1]) * inv_ds
            + 2.0 * (1.0 - zi) * b_s * (z[2 : n + 2] - z[0:n]) * (0.5 * inv_ds)
            + zi * (1.0 - zi) * (1.0 - zi) * b_ss
            + (psi[1:] - psi[:-1]) * inv_ds
            + g_rate
        )
        z[1 : n + 1] = zi + dt * rhs
        zi = z[1 : n + 1]
        lo = zi.min()
        hi = zi.max()
        if not (lo >= -tol and hi <= 1.0 + tol):
            return t
    return -1


@njit(cache=True)
def _pde_net1d_nb(z, b, b_s, b_ss, c_face, g_rate, inv_ds, dt, nsteps, tol):  # pragma: no cover
    n = z.shape[0] - 2
    phi = np.empty(n + 1)
    psi = np.empty(n + 1)
    rhs = np.empty(n)
    for t in range(nsteps):
        for m in range(n + 1):
            zm = 0.5 * (z[m + 1] + z[m])
            grad = (z[m + 1] - z[m]) * inv_ds
            phi[m] = (1.0 - zm) * (1.0 + 3.0 * zm) * grad
            psi[m] = c_face[m] * zm * (1.0 - zm) * (1.0 - zm)
        for i in range(n):
            zi = z[i + 1]
            rhs[i] = (
                b[i] * (phi[i + 1] - phi[i]) * inv_ds
                + 2.0 * (1.0 - zi) * b_s[i] * (z[i + 2] - z[i]) * (0.5 * inv_ds)
                + zi * (1.0 - zi) * (1.0 - zi) * b_ss[i]
                + (psi[i + 1] - psi[i]) * inv_ds
                + g_rate[i]
            )
        ok = True
        for i in range(n):
            z[i + 1] += dt * rhs[i]
            v = z[i + 1]
            if not (v >= -tol and v <= 1.0 + tol):
                ok = False
        if not ok:
            return t
    return -1


def _pde_net2d_np(z, b1, b1_s, b1_ss, b2, b2_s, b2_ss, c1_face, c2_face, g_rate,
                  inv_ds, dt, nsteps, tol):
    n1 = z.shape[0] - 2
    n2 = z.shape[1] - 2
    for t in range(nsteps):
        zi = z[1 : n1 + 1, 1 : n2 + 1]
        zm1 = 0.5 * (z[1:, 1 : n2 + 1] + z[:-1, 1 : n2 + 1])
        g1 = (z[1:, 1 : n2 + 1] - z[:-1, 1 : n2 + 1]) * inv_ds
        one1 = 1.0 - zm1
        phi1 = (1.0 + 5.0 * zm1) * one1 * one1 * one1 * g1
        psi1 = c1_face * zm1 * one1 * one1 * one1 * one1
        zm2 = 0.5 * (z[1 : n1 + 1, 1:] + z[1 : n1 + 1, :-1])
        g2 = (z[1 : n1 + 1, 1:] - z[1 : n1 + 1, :-1]) * inv_ds
        one2 = 1.0 - zm2
        phi2 = (1.0 + 5.0 * zm2) * one2 * one2 * one2 * g2
        psi2 = c2_face * zm2 * one2 * one2 * one2 * one2
        onez = 1.0 - zi
        onez3 = onez * onez * onez
        onez4 = onez3 * onez
        d1 = (z[2 : n1 + 2, 1 : n2 + 1] - z[0:n1, 1 : n2 + 1]) * (0.5 * inv_ds)
        d2 = (z[1 : n1 + 1, 2 : n2 + 2] - z[1 : n1 + 1, 0:n2]) * (0.5 * inv_ds)
        rhs = (
            b1 * (phi1[1:, :] - phi1[:-1, :]) * inv_ds
            + 2.0 * onez3 * d1 * b1_s
            + zi * onez4 * b1_ss
            + (psi1[1:, :] - psi1[:-1, :]) * inv_ds
            + b2 * (phi2[:, 1:] - phi2[:, :-1]) * inv_ds
            + 2.0 * onez3 * d2 * b2_s
            + zi * onez4 * b2_ss
            + (psi2[:, 1:] - psi2[:, :-1]) * inv_ds
            + g_rate
        )
        z[1 : n1 + 1, 1 : n2 + 1] = zi + dt * rhs
        zi = z[1 : n1 + 1, 1 : n2 + 1]
        lo = zi.min()
        hi = zi.max()
        if not (lo >= -tol and hi <= 1.0 + tol):
            return t
    return -1


@njit(cache=True)
def _pde_net2d_nb(z, b1, b1_s, b1_ss, b2, b2_s, b2_ss, c1_face, c2_face, g_rate,
                  inv_ds, dt, nsteps, tol):  # pragma: no cover
    n1 = z.shape[0] - 2
    n2 = z.shape[1] - 2
    phi1 = np.empty((n1 + 1, n2))
    psi1 = np.empty((n1 + 1, n2))
    phi2 = np.empty((n1, n2 + 1))
    psi2 = np.empty((n1, n2 + 1))
    rhs = np.empty((n1, n2))
    for t in range(nsteps):
        for m in range(n1 + 1):
            for j in range(n2):
                zm = 0.5 * (z[m + 1, j + 1] + z[m, j + 1])
                g = (z[m + 1, j + 1] - z[m, j + 1]) * inv_ds
                one = 1.0 - zm
                phi1[m, j] = (1.0 + 5.0 * zm) * one * one * one * g
                psi1[m, j] = c1_face[m, j] * zm * one * one * one * one
        for i in range(n1):
            for m in range(n2 + 1):
                zm = 0.5 * (z[i + 1, m + 1] + z[i + 1, m])
                g = (z[i + 1, m + 1] - z[i + 1, m]) * inv_ds
                one = 1.0 - zm
                phi2[i, m] = (1.0 + 5.0 * zm) * one * one * one * g
                psi2[i, m] = c2_face[i, m] * zm * one * one * one * one
        for i in range(n1):
            for j in range(n2):
                zi = z[i + 1, j + 1]
                onez = 1.0 - zi
                onez3 = onez * onez * onez
                onez4 = onez3 * onez
                d1 = (z[i + 2, j + 1] - z[i, j + 1]) * (0.5 * inv_ds)
                d2 = (z[i + 1, j + 2] - z[i + 1, j]) * (0.5 * inv_ds)
                rhs[i, j] = (
                    b1[i, j] * (phi1[i + 1, j] - phi1[i, j]) * inv_ds
                    + 2.0 * onez3 * d1 * b1_s[i, j]
                    + zi * onez4 * b1_ss[i, j]
                    + (psi1[i + 1, j] - psi1[i, j]) * inv_ds
                    + b2[i, j] * (phi2[i, j + 1] - phi2[i, j]) * inv_ds
                    + 2.0 * onez3 * d2 * b2_s[i, j]
                    + zi * onez4 * b2_ss[i, j]
                    + (psi2[i, j + 1] - psi2[i, j]) * inv_ds
                    + g_rate[i, j]
                )
        ok = True
        for i in range(n1):
            for j in range(n2):
                z[i + 1, j + 1] += dt * rhs[i, j]
                v = z[i + 1, j + 1]
                if not (v >= -tol and v <= 1.0 + tol):
                    ok = False
        if not ok:
            return t
    return -1


# --------------------------------------------------------------------------
# Registry
# --------------------------------------------------------------------------

_REGISTRY = {
    "numpy": {
        "net1d_chunk": _net1d_chunk_np,
        "net2d_chunk": _net2d_chunk_np,
        "drift_rw1d": _drift_rw1d_np,
        "drift_net1d": _drift_net1d_np,
        "drift_net2d": _drift_net2d_np,
        "rec_rw1d": _rec_rw1d_np,
        "rec_net1d": _rec_net1d_np,
        "rec_net2d": _rec_net2d_np,
        "pde_rw1d": _pde_rw1d_np,
        "pde_net1d": _pde_net1d_np,
        "pde_net2d": _pde_net2d_np,
    }
}

if NUMBA_AVAILABLE:
    _REGISTRY["numba"] = {
        "net1d_chunk": _net1d_chunk_nb,
        "net2d_chunk": _net2d_chunk_nb,
        "drift_rw1d": _drift_rw1d_nb,
        "drift_net1d": _drift_net1d_nb,
        "drift_net2d": _drift_net2d_nb,
        "rec_rw1d": _rec_rw1d_nb,
        "rec_net1d": _rec_net1d_nb,
        "rec_net2d": _rec_net2d_nb,
        "pde_rw1d": _pde_rw1d_nb,
        "pde_net1d": _pde_net1d_nb,
        "pde_net2d": _pde_net2d_nb,
    }


def get_kernel(name: str):
    """Return the active-backend implementation of a kernel."""
    return _REGISTRY[backend_name()][name]


def kernel_names():
    return tuple(_REGISTRY["numpy"].keys())
