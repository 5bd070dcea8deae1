"""Pure-numpy kernel backend.

Reference implementation of the hot loops; the numba backend mirrors the
same arithmetic (and both route matrix products through the same BLAS call)
so the two stay numerically interchangeable.
"""

import math

import numpy as np

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

BACKEND = "numpy"

TWO_PI = 2.0 * math.pi


def nearest_centerline(segs, px, py):
    """Nearest point on the centerline to (px, py).

    Returns (s, d_signed, heading) where d_signed is the left-positive
    lateral offset and heading the centerline heading at s.
    """
    best_d2 = math.inf
    best = (0.0, 0.0, 0.0)
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
                d = seg[K_DX] * ey - seg[K_DY] * ex
                best = (seg[K_SSTART] + u, d, seg[K_H0])
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
                    if seg[K_KAPPA] > 0.0:
                        d = radius - rho
                        heading = seg[K_H0] + delta
                    else:
                        d = rho - radius
                        heading = seg[K_H0] - delta
                    best = (seg[K_SSTART] + u, d, heading)
            # Endpoint-clamped candidates are never closer than the
            # adjacent segment's interior on a tangent-continuous track,
            # so they are skipped.
    return best


def render_observation(segs, px, py, heading, width, height, focal, cam_height,
                       max_draw, lane_half_width, line_half_width):
    """Ground-plane ray cast of the lane boundaries into a grayscale image.

    Every pixel below the horizon is unprojected onto the ground plane and
    shaded by its lateral distance to the two boundary offsets of the
    centerline: boundary line 1.0, ground 0.1, sky 0.0.
    """
    img = np.zeros((height, width))
    cy = height / 2.0
    cx = width / 2.0
    cos_h = math.cos(heading)
    sin_h = math.sin(heading)

    rows = np.arange(height) + 0.5
    dys = rows - cy
    ground_rows = np.nonzero(dys > 0.0)[0]
    if ground_rows.size == 0:
        return img

    z = focal * cam_height / dys[ground_rows]            # (R,)
    cols = np.arange(width) + 0.5
    xr = (cols - cx)[None, :] * z[:, None] / focal       # (R, W)
    zz = np.broadcast_to(z[:, None], xr.shape)

    wx = px + zz * cos_h + xr * sin_h
    wy = py + zz * sin_h - xr * cos_h

    best_d2 = np.full(xr.shape, np.inf)
    best_d = np.zeros(xr.shape)
    for i in range(segs.shape[0]):
        seg = segs[i]
        if seg[K_KIND] == 0.0:
            ax = wx - seg[K_X0]
            ay = wy - seg[K_Y0]
            u = np.clip(ax * seg[K_DX] + ay * seg[K_DY], 0.0, seg[K_LEN])
            ex = ax - u * seg[K_DX]
            ey = ay - u * seg[K_DY]
            d2 = ex * ex + ey * ey
            d = seg[K_DX] * ey - seg[K_DY] * ex
        else:
            radius = 1.0 / abs(seg[K_KAPPA])
            rx = wx - seg[K_CX]
            ry = wy - seg[K_CY]
            rho = np.sqrt(rx * rx + ry * ry)
            ang = np.arctan2(ry, rx)
            if seg[K_KAPPA] > 0.0:
                delta = (ang - seg[K_A0]) % TWO_PI
            else:
                delta = (seg[K_A0] - ang) % TWO_PI
            sweep = seg[K_LEN] * abs(seg[K_KAPPA])
            dr = rho - radius
            d2 = np.where(delta <= sweep, dr * dr, np.inf)
            d = dr if seg[K_KAPPA] < 0.0 else -dr
        closer = d2 < best_d2
        best_d2 = np.where(closer, d2, best_d2)
        best_d = np.where(closer, d, best_d)

    visible = zz <= max_draw
    on_line = visible & (
        (np.abs(best_d - lane_half_width) <= line_half_width)
        | (np.abs(best_d + lane_half_width) <= line_half_width)
    )
    shade = np.where(on_line, 1.0, 0.1)
    img[ground_rows, :] = shade
    return img


def im2col(x, kh, kw, stride):
    """Gather convolution patches: (B,C,H,W) -> (B, C*kh*kw, Ho*Wo)."""
    b, c, h, w = x.shape
    ho = (h - kh) // stride + 1
    wo = (w - kw) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]                   # (B,C,Ho,Wo,kh,kw)
    cols = win.transpose(0, 1, 4, 5, 2, 3).reshape(b, c * kh * kw, ho * wo)
    return np.ascontiguousarray(cols)


def conv2d_forward(x, w, bias, stride):
    """Valid cross-correlation: (B,C,H,W) * (F,C,kh,kw) -> (B,F,Ho,Wo)."""
    b = x.shape[0]
    f, c, kh, kw = w.shape
    ho = (x.shape[2] - kh) // stride + 1
    wo = (x.shape[3] - kw) // stride + 1
    cols = im2col(x, kh, kw, stride)
    wmat = w.reshape(f, c * kh * kw)
    y = np.empty((b, f, ho * wo))
    for i in range(b):
        y[i] = np.dot(wmat, cols[i])
    y += bias[None, :, None]
    return y.reshape(b, f, ho, wo), cols


def conv2d_backward(x_shape, w, stride, cols, dout):
    """Gradients of conv2d_forward w.r.t. input, kernel and bias."""
    b, c, h, w_in = x_shape
    f, _, kh, kw = w.shape
    ho, wo = dout.shape[2], dout.shape[3]
    dflat = dout.reshape(b, f, ho * wo)
    wmat = w.reshape(f, c * kh * kw)

    dw = np.zeros((f, c * kh * kw))
    dcols = np.empty((b, c * kh * kw, ho * wo))
    for i in range(b):
        dcols[i] = np.dot(wmat.T, dflat[i])
        dw += np.dot(dflat[i], cols[i].T)
    # row sums via dgemv so both backends accumulate in the same order
    ones = np.ones(ho * wo)
    db = np.zeros(f)
    for i in range(b):
        db += np.dot(dflat[i], ones)

    dx = np.zeros((b, c, h, w_in))
    dcols6 = dcols.reshape(b, c, kh, kw, ho, wo)
    for i in range(kh):
        for j in range(kw):
            dx[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += dcols6[:, :, i, j]
    return dx, dw.reshape(f, c, kh, kw), db
