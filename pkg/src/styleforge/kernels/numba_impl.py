"""Numba kernel backend: @njit twins of the numpy implementations.

Matrix products still go through np.dot (BLAS) inside nopython code; the
speedup over the numpy backend comes from loop-fused gathers/scatters and
the per-pixel ray cast running without temporaries.
"""

import math

import numpy as np
from numba import njit

from .layout import (
    K_A0,
    K_CX,
    K_CY,
    K_DX,
    K_DY,
    K_H0,
    K_KAPPA,
    K_KIND,
    K_LEN,
    K_SSTART,
    K_X0,
    K_Y0,
)

BACKEND = "numba"

TWO_PI = 2.0 * math.pi


@njit(cache=True)
def _nearest(segs, px, py):
    best_d2 = np.inf
    best_s = 0.0
    best_d = 0.0
    best_h = 0.0
    for i in range(segs.shape[0]):
        seg = segs[i]
        if seg[K_KIND] == 0.0:
            wx = px - seg[K_X0]
            wy = py - seg[K_Y0]
            u = wx * seg[K_DX] + wy * seg[K_DY]
            if u < 0.0:
                u = 0.0
            elif u > seg[K_LEN]:
                u = seg[K_LEN]
            ex = wx - u * seg[K_DX]
            ey = wy - u * seg[K_DY]
            d2 = ex * ex + ey * ey
            if d2 < best_d2:
                best_d2 = d2
                best_s = seg[K_SSTART] + u
                best_d = seg[K_DX] * ey - seg[K_DY] * ex
                best_h = seg[K_H0]
        else:
            radius = 1.0 / abs(seg[K_KAPPA])
            rx = px - seg[K_CX]
            ry = py - seg[K_CY]
            rho = math.sqrt(rx * rx + ry * ry)
            ang = math.atan2(ry, rx)
            if seg[K_KAPPA] > 0.0:
                delta = (ang - seg[K_A0]) % TWO_PI
            else:
                delta = (seg[K_A0] - ang) % TWO_PI
            sweep = seg[K_LEN] * abs(seg[K_KAPPA])
            if delta <= sweep:
                u = radius * delta
                dr = rho - radius
                d2 = dr * dr
                if d2 < best_d2:
                    best_d2 = d2
                    best_s = seg[K_SSTART] + u
                    if seg[K_KAPPA] > 0.0:
                        best_d = radius - rho
                        best_h = seg[K_H0] + delta
                    else:
                        best_d = rho - radius
                        best_h = seg[K_H0] - delta
    return best_s, best_d, best_h


def nearest_centerline(segs, px, py):
    return _nearest(segs, px, py)


@njit(cache=True)
def _render(segs, px, py, heading, width, height, focal, cam_height,
            max_draw, lane_half_width, line_half_width):
    img = np.zeros((height, width))
    cy = height / 2.0
    cx = width / 2.0
    cos_h = math.cos(heading)
    sin_h = math.sin(heading)
    for r in range(height):
        dy = (r + 0.5) - cy
        if dy <= 0.0:
            continue
        z = focal * cam_height / dy
        for c in range(width):
            xr = ((c + 0.5) - cx) * z / focal
            wx = px + z * cos_h + xr * sin_h
            wy = py + z * sin_h - xr * cos_h

            best_d2 = np.inf
            best_d = 0.0
            for i in range(segs.shape[0]):
                seg = segs[i]
                if seg[K_KIND] == 0.0:
                    ax = wx - seg[K_X0]
                    ay = wy - seg[K_Y0]
                    u = ax * seg[K_DX] + ay * seg[K_DY]
                    if u < 0.0:
                        u = 0.0
                    elif u > seg[K_LEN]:
                        u = seg[K_LEN]
                    ex = ax - u * seg[K_DX]
                    ey = ay - u * seg[K_DY]
                    d2 = ex * ex + ey * ey
                    d = seg[K_DX] * ey - seg[K_DY] * ex
                else:
                    radius = 1.0 / abs(seg[K_KAPPA])
                    rx = wx - seg[K_CX]
                    ry = wy - seg[K_CY]
                    rho = math.sqrt(rx * rx + ry * ry)
                    ang = math.atan2(ry, rx)
                    if seg[K_KAPPA] > 0.0:
                        delta = (ang - seg[K_A0]) % TWO_PI
                    else:
                        delta = (seg[K_A0] - ang) % TWO_PI
                    sweep = seg[K_LEN] * abs(seg[K_KAPPA])
                    dr = rho - radius
                    if delta <= sweep:
                        d2 = dr * dr
                    else:
                        d2 = np.inf
                    if seg[K_KAPPA] < 0.0:
                        d = dr
                    else:
                        d = -dr
                if d2 < best_d2:
                    best_d2 = d2
                    best_d = d

            shade = 0.1
            if z <= max_draw:
                if (abs(best_d - lane_half_width) <= line_half_width
                        or abs(best_d + lane_half_width) <= line_half_width):
                    shade = 1.0
            img[r, c] = shade
    return img


def render_observation(segs, px, py, heading, width, height, focal, cam_height,
                       max_draw, lane_half_width, line_half_width):
    return _render(segs, px, py, heading, width, height, focal, cam_height,
                   max_draw, lane_half_width, line_half_width)


@njit(cache=True)
def _im2col(x, kh, kw, stride):
    b, c, h, w = x.shape
    ho = (h - kh) // stride + 1
    wo = (w - kw) // stride + 1
    cols = np.empty((b, c * kh * kw, ho * wo))
    for n in range(b):
        for ch in range(c):
            for i in range(kh):
                for j in range(kw):
                    k = (ch * kh + i) * kw + j
                    for oy in range(ho):
                        base = oy * wo
                        row = oy * stride + i
                        for ox in range(wo):
                            cols[n, k, base + ox] = x[n, ch, row, ox * stride + j]
    return cols


def im2col(x, kh, kw, stride):
    return _im2col(x, kh, kw, stride)


@njit(cache=True)
def _conv2d_forward(x, w, bias, stride):
    b = x.shape[0]
    f = w.shape[0]
    c = w.shape[1]
    kh = w.shape[2]
    kw = w.shape[3]
    ho = (x.shape[2] - kh) // stride + 1
    wo = (x.shape[3] - kw) // stride + 1
    cols = _im2col(x, kh, kw, stride)
    wmat = np.ascontiguousarray(w.reshape(f, c * kh * kw))
    y = np.empty((b, f, ho * wo))
    for i in range(b):
        y[i] = np.dot(wmat, cols[i])
    for i in range(b):
        for j in range(f):
            for p in range(ho * wo):
                y[i, j, p] += bias[j]
    return y.reshape(b, f, ho, wo), cols


def conv2d_forward(x, w, bias, stride):
    return _conv2d_forward(x, w, bias, stride)


@njit(cache=True)
def _conv2d_backward(b, c, h, w_in, w, stride, cols, dout):
    f = w.shape[0]
    kh = w.shape[2]
    kw = w.shape[3]
    ho = dout.shape[2]
    wo = dout.shape[3]
    npos = ho * wo
    dflat = np.ascontiguousarray(dout.reshape(b, f, npos))
    wmat = np.ascontiguousarray(w.reshape(f, c * kh * kw))

    dw = np.zeros((f, c * kh * kw))
    dcols = np.empty((b, c * kh * kw, npos))
    for i in range(b):
        dcols[i] = np.dot(wmat.T, dflat[i])
        dw += np.dot(dflat[i], cols[i].T)
    # row sums via dgemv so both backends accumulate in the same order
    ones = np.ones(npos)
    db = np.zeros(f)
    for i in range(b):
        db += np.dot(dflat[i], ones)

    dx = np.zeros((b, c, h, w_in))
    for n in range(b):
        for ch in range(c):
            for i in range(kh):
                for j in range(kw):
                    k = (ch * kh + i) * kw + j
                    for oy in range(ho):
                        base = oy * wo
                        row = oy * stride + i
                        for ox in range(wo):
                            dx[n, ch, row, ox * stride + j] += dcols[n, k, base + ox]
    return dx, dw.reshape(f, c, kh, kw), db


def conv2d_backward(x_shape, w, stride, cols, dout):
    b, c, h, w_in = x_shape
    return _conv2d_backward(b, c, h, w_in, w, stride, cols, dout)
