"""Independent reference implementations used as test oracles.

Nothing here reuses the package's geometry: mirror images, wall distances
and reflection angles are rebuilt from plain vector algebra.
"""

import math

import numpy as np


def _plos_wall_user(beta, lam, m2_sum, d_r, d_ru, psi):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        q = lam * m2_sum / (2.0 * np.tan(psi))
        cap = np.exp(-beta * d_ru + q)
        acute = np.where(d_r >= d_ru, np.minimum(1.0, cap),
                         np.minimum(np.exp(-beta * (d_ru - d_r)), cap))
    return np.where(psi <= math.pi / 2, acute, np.exp(-beta * d_ru))


def reflection_integrand(r, alpha, theta_j, mu_j, ux, uy, d0v, beta, lam, m2_sum):
    """Acceptance indicator times wall-to-user LOS at wall distance r, wall angle alpha."""
    ex, ey = math.cos(theta_j), math.sin(theta_j)
    hx, hy = r * ex, r * ey                      # hit point on the beam axis
    nx, ny = -np.sin(alpha), np.cos(alpha)       # wall normal
    off = (ux - hx) * nx + (uy - hy) * ny
    vx, vy = ux - 2 * off * nx, uy - 2 * off * ny  # image of the user
    d_v = np.sqrt(vx * vx + vy * vy)
    # BS-to-image ray meets the wall at t with (t v - H) . n = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (hx * nx + hy * ny) / (vx * nx + vy * ny)
    d_rv = np.where(np.abs(hx * nx + hy * ny) < 1e-12, 0.0, t * d_v)
    # sector test by the cosine of the angle to the axis
    cos_off = np.clip((vx * ex + vy * ey) / d_v, -1.0, 1.0)
    inside = np.arccos(cos_off) < mu_j / 2 - 1e-12
    ok = inside & (d_rv >= 0) & (d_rv <= d_v) & (d_v <= d0v)
    # reflection angle between the reversed incoming ray and the outgoing ray
    dot = ex * nx + ey * ny
    ox, oy = ex - 2 * dot * nx, ey - 2 * dot * ny
    psi = np.arccos(np.clip(-(ex * ox + ey * oy), -1.0, 1.0))
    d_ru = np.where(ok, d_v - d_rv, 0.0)
    return np.where(ok, _plos_wall_user(beta, lam, m2_sum, r, d_ru, psi), 0.0)


def brute_force_reflected(theta_j, mu_j, ux, uy, d0v, beta, p, lam, m2_sum, n=4000, chunk=200):
    """Plain midpoint Riemann sum of the reflection integral on [0, d0v] x [0, pi]."""
    dr, da = d0v / n, math.pi / n
    alpha = (np.arange(n) + 0.5) * da
    r = (np.arange(n) + 0.5) * dr
    args = (theta_j, mu_j, ux, uy, d0v, beta, lam, m2_sum)
    atom = (1 - math.exp(-p)) * reflection_integrand(0.0, alpha, *args).sum() * da
    cont = 0.0
    for s in range(0, n, chunk):
        rr = r[s:s + chunk, None]
        f = reflection_integrand(rr, alpha[None, :], *args)
        cont += float((f * beta * np.exp(-(beta * rr + p))).sum()) * dr * da
    return (atom + cont) / math.pi


# -- brute-force specular ray sweep ---------------------------------------

from numba import njit  # noqa: E402


@njit(cache=True)
def _edges(rects):
    n = rects.shape[0]
    out = np.empty((4 * n, 4))
    sx = (-1.0, 1.0, 1.0, -1.0)
    sy = (-1.0, -1.0, 1.0, 1.0)
    for i in range(n):
        cx, cy, ln, wd, phi = rects[i]
        c, s = math.cos(phi), math.sin(phi)
        for k in range(4):
            k2 = (k + 1) % 4
            lx0, ly0 = sx[k] * ln / 2, sy[k] * wd / 2
            lx1, ly1 = sx[k2] * ln / 2, sy[k2] * wd / 2
            out[4 * i + k, 0] = cx + lx0 * c - ly0 * s
            out[4 * i + k, 1] = cy + lx0 * s + ly0 * c
            out[4 * i + k, 2] = cx + lx1 * c - ly1 * s
            out[4 * i + k, 3] = cy + lx1 * s + ly1 * c
    return out


@njit(cache=True)
def _first_hit(edges, px, py, dx, dy, skip):
    best, arg = np.inf, -1
    for e in range(edges.shape[0]):
        if e == skip:
            continue
        ax, ay, bx, by = edges[e]
        ex, ey = bx - ax, by - ay
        den = dx * ey - dy * ex
        if abs(den) < 1e-15:
            continue
        wx, wy = ax - px, ay - py
        t = (wx * ey - wy * ex) / den
        s = (wx * dy - wy * dx) / den
        if t > 1e-9 and 0.0 <= s <= 1.0 and t < best:
            best, arg = t, e
    return best, arg


@njit(cache=True)
def specular_sweep(rects, ux, uy, th_lo, th_hi, n_rays, capture, d_max):
    """Launch ``n_rays`` rays across (th_lo, th_hi), bounce once, test the user disk.

    Returns ``(found, wx, wy)`` with ``(wx, wy)`` the closest point to the
    user on the first capturing ray.
    """
    edges = _edges(rects)
    step = (th_hi - th_lo) / n_rays
    for i in range(n_rays):
        th = th_lo + (i + 0.5) * step
        dx, dy = math.cos(th), math.sin(th)
        t1, e = _first_hit(edges, 0.0, 0.0, dx, dy, -1)
        if e < 0:
            continue
        ax, ay, bx, by = edges[e]
        ln = math.hypot(bx - ax, by - ay)
        nx, ny = (by - ay) / ln, -(bx - ax) / ln  # outward for counter-clockwise corners
        dn = dx * nx + dy * ny
        if dn >= 0.0:
            continue  # ray leaves a building: the BS is inside
        px, py = t1 * dx, t1 * dy
        rx, ry = dx - 2 * dn * nx, dy - 2 * dn * ny
        t2, _ = _first_hit(edges, px, py, rx, ry, e)
        s = (ux - px) * rx + (uy - py) * ry
        if s <= 0.0 or s > t2 or t1 + s > d_max:
            continue
        cx, cy = px + s * rx, py + s * ry
        if math.hypot(ux - cx, uy - cy) <= capture:
            return True, cx, cy
    return False, 0.0, 0.0


def random_reflection_case(rng):
    """A scene of one or two buildings with a beam aimed near the first one.

    Half of the cases place the user near the specular ray off a wall that
    faces the BS, so that valid and borderline bounces are common. Returns
    ``(rects, beam_theta, beam_mu, ux, uy)``; the BS and the user are kept at
    least 0.5 m outside every building.
    """
    while True:
        aim = rng.uniform(0, 2 * math.pi)
        dist = rng.uniform(30, 120)
        rects = [(dist * math.cos(aim), dist * math.sin(aim), rng.uniform(10, 60), rng.uniform(10, 60),
                  rng.uniform(0, math.pi))]
        if rng.random() < 0.5:
            rects.append((*rng.uniform(-150, 150, 2), rng.uniform(10, 60), rng.uniform(10, 60),
                          rng.uniform(0, math.pi)))
        rects = np.array(rects)
        mu = math.radians(float(rng.choice([10.0, 30.0])))
        if rng.random() < 0.5:
            theta = aim + rng.uniform(-0.4, 0.4)
            ud = rng.uniform(10, 150)
            ut = aim + rng.uniform(-1.2, 1.2)
            ux, uy = ud * math.cos(ut), ud * math.sin(ut)
        else:
            e = _edges(rects[:1])
            k = int(rng.integers(4))
            ax, ay, bx, by = e[k]
            qx, qy = np.array([ax, ay]) + rng.uniform(0, 1) * np.array([bx - ax, by - ay])
            ln = math.hypot(bx - ax, by - ay)
            nx, ny = (by - ay) / ln, -(bx - ax) / ln
            theta = math.atan2(qy, qx) + rng.uniform(-0.6, 0.6) * mu
            dx, dy = qx / math.hypot(qx, qy), qy / math.hypot(qx, qy)
            dn = dx * nx + dy * ny
            rx, ry = dx - 2 * dn * nx, dy - 2 * dn * ny
            s = rng.uniform(5, 100)
            ux, uy = qx + s * rx + rng.normal(0, 3), qy + s * ry + rng.normal(0, 3)
        if not any(_inside(r, 0.0, 0.0) or _inside(r, ux, uy) for r in rects):
            return rects, theta, mu, ux, uy


def _inside(rect, x, y, margin=0.5):
    cx, cy, ln, wd, phi = rect
    c, s = math.cos(phi), math.sin(phi)
    lx = (x - cx) * c + (y - cy) * s
    ly = -(x - cx) * s + (y - cy) * c
    return abs(lx) < ln / 2 + margin and abs(ly) < wd / 2 + margin
