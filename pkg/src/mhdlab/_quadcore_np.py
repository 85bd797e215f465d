"""
NumPy reference kernels for the free-space quadrature.

A domain is a flat list of square cells (centers, half-widths, filled
area fractions).  Each evaluation point accumulates the cell sums of
the logarithmic kernel (or its perpendicular gradient), recursively
splitting cells that are too close relative to their size until they
are smaller than s_min; the cell finally containing the point
contributes the closed-form integral over the equal-area disc (zero for
the antisymmetric velocity kernel).

Returned values are raw sums of frac * area * kernel; the 1/(2 pi)
normalization is applied by the caller.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "numpy"


def _split(cx, cy, half, frac):
    h2 = half / 2.0
    ox = np.concatenate([cx - h2, cx + h2, cx - h2, cx + h2])
    oy = np.concatenate([cy - h2, cy - h2, cy + h2, cy + h2])
    return ox, oy, np.concatenate([h2] * 4), np.concatenate([frac] * 4)


def _eval_point(px, py, cx, cy, half, frac, s_min, split_factor, want_velocity):
    pot = 0.0
    vx = 0.0
    vy = 0.0
    while cx.size:
        dx = px - cx
        dy = py - cy
        d2 = dx * dx + dy * dy
        need = (d2 < (split_factor * half) ** 2) & (half > s_min)
        if np.any(~need):
            fx, fy, fh, ff, fd2 = dx[~need], dy[~need], half[~need], frac[~need], d2[~need]
            area = ff * (2.0 * fh) ** 2
            inside = (np.abs(fx) <= fh) & (np.abs(fy) <= fh)
            if want_velocity:
                # perpendicular-gradient kernel (x-y)^perp / |x-y|^2;
                # a cell containing the point contributes ~0 by antisymmetry
                safe = np.where(inside, 1.0, fd2)
                vx += float(np.sum(np.where(inside, 0.0, area * (-fy) / safe)))
                vy += float(np.sum(np.where(inside, 0.0, area * fx / safe)))
            else:
                # log(1/r) kernel; containing cell -> equal-area disc integral
                a_eq = 2.0 * fh / np.sqrt(np.pi)
                disc = np.pi * a_eq**2 * (0.5 - np.log(a_eq)) * ff
                safe = np.where(inside, 1.0, fd2)
                pot += float(
                    np.sum(np.where(inside, disc, -0.5 * area * np.log(safe)))
                )
        if not np.any(need):
            break
        cx, cy, half, frac = _split(cx[need], cy[need], half[need], frac[need])
    if want_velocity:
        return vx, vy
    return pot


def _rect_hessian(a1, b1, a2, b2):
    """Exact integrals of K11, K12 over the rectangle [a1,b1]x[a2,b2].

    Boundary-integral forms (K11 = d1(z1/|z|^2), K12 = d1(z2/|z|^2)):
    edge contributions are elementary; when the rectangle contains the
    origin, the principal value of K11 carries the extra -pi from the
    excluded symmetric disc (K12 has none).  Valid for any rectangle
    with the origin off its edges.
    """
    i_right = math.atan(b2 / b1) - math.atan(a2 / b1)
    i_left = -(math.atan(b2 / a1) - math.atan(a2 / a1))
    pv11 = i_right + i_left
    if a1 < 0.0 < b1 and a2 < 0.0 < b2:
        pv11 -= math.pi
    l_right = 0.5 * math.log((b1 * b1 + b2 * b2) / (b1 * b1 + a2 * a2))
    l_left = -0.5 * math.log((a1 * a1 + b2 * b2) / (a1 * a1 + a2 * a2))
    return pv11, l_right + l_left


def _eval_hessian(px, py, cx, cy, half, frac, s_min, split_factor):
    """Principal-value sums of the second-derivative kernels of log r.

    Returns (sum K11, sum K12) with K11 = (zy^2 - zx^2)/|z|^4 and
    K12 = -2 zx zy / |z|^4 (K22 = -K11).  Far cells use the midpoint
    rule (both kernels are harmonic away from the pole).  The kernel is
    scale invariant, so terminal cells adjacent to the point would keep
    an O(1) midpoint error however small they are; every terminal cell
    inside its own splitting radius is therefore integrated exactly by
    the rectangle boundary formula, weighted by its fill fraction.
    """
    h11 = 0.0
    h12 = 0.0
    while cx.size:
        dx = px - cx
        dy = py - cy
        d2 = dx * dx + dy * dy
        near = d2 < (split_factor * half) ** 2
        need = near & (half > s_min)
        far = ~near
        if np.any(far):
            fx, fy, fh, ff, fd2 = dx[far], dy[far], half[far], frac[far], d2[far]
            area = ff * (2.0 * fh) ** 2
            h11 += float(np.sum(area * (fy * fy - fx * fx) / (fd2 * fd2)))
            h12 += float(np.sum(area * (-2.0 * fx * fy) / (fd2 * fd2)))
        terminal = near & ~need
        if np.any(terminal):
            fx, fy, fh, ff = dx[terminal], dy[terminal], half[terminal], frac[terminal]
            for k in range(len(fx)):
                # origin exactly on a cell edge is degenerate; nudge off it
                ox, oy = fx[k], fy[k]
                if abs(abs(ox) - fh[k]) < 1e-12 * fh[k]:
                    ox += 1e-9 * fh[k]
                if abs(abs(oy) - fh[k]) < 1e-12 * fh[k]:
                    oy += 1e-9 * fh[k]
                pv11, pv12 = _rect_hessian(
                    -ox - fh[k], -ox + fh[k], -oy - fh[k], -oy + fh[k]
                )
                h11 += ff[k] * pv11
                h12 += ff[k] * pv12
        if not np.any(need):
            break
        cx, cy, half, frac = _split(cx[need], cy[need], half[need], frac[need])
    return h11, h12


def potential_points(px, py, cx, cy, half, frac, s_min=1e-4, split_factor=6.0):
    out = np.empty(len(px))
    for i in range(len(px)):
        out[i] = _eval_point(
            float(px[i]), float(py[i]), cx, cy, half, frac, s_min, split_factor, False
        )
    return out


def velocity_points(px, py, cx, cy, half, frac, s_min=1e-4, split_factor=6.0):
    outx = np.empty(len(px))
    outy = np.empty(len(px))
    for i in range(len(px)):
        outx[i], outy[i] = _eval_point(
            float(px[i]), float(py[i]), cx, cy, half, frac, s_min, split_factor, True
        )
    return outx, outy


def hessian_points(px, py, cx, cy, half, frac, s_min=1e-4, split_factor=6.0):
    out11 = np.empty(len(px))
    out12 = np.empty(len(px))
    for i in range(len(px)):
        out11[i], out12[i] = _eval_hessian(
            float(px[i]), float(py[i]), cx, cy, half, frac, s_min, split_factor
        )
    return out11, out12
