"""Pure numpy/Python implementations of the hot geometry kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and the same floating-point operation order, so both backends return
bit-identical results.

Obstacle geometry is passed as a flat ``(m, 4)`` array of edges
``(ax, ay, bx, by)`` grouped per polygon, with ``offsets`` giving the
``[start, stop)`` edge range of each polygon.
"""
import math

import numpy as np

# (di, dj) of the 8 neighbours, bit k of a neighbourhood code is neighbour k.
NEIGHBORS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


def clearance(px, py, segs, offsets, bounds):
    xmin, ymin, xmax, ymax = bounds
    d = min(px - xmin, xmax - px, py - ymin, ymax - py)
    if d <= 0.0:
        return 0.0
    if segs.shape[0] == 0:
        return d
    ax = segs[:, 0]
    ay = segs[:, 1]
    bx = segs[:, 2]
    by = segs[:, 3]
    # even-odd crossing test, accumulated per polygon
    straddle = (ay > py) != (by > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = (bx - ax) * (py - ay) / (by - ay) + ax
    hits = (straddle & (px < xcross)).astype(np.int64)
    if np.any(np.add.reduceat(hits, offsets[:-1]) & 1):
        return 0.0
    dx = bx - ax
    dy = by - ay
    t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
    t = np.minimum(np.maximum(t, 0.0), 1.0)
    ex = px - (ax + t * dx)
    ey = py - (ay + t * dy)
    d2 = float(np.min(ex * ex + ey * ey))
    return min(math.sqrt(d2), d)


def clearance_many(pts, segs, offsets, bounds):
    out = np.empty(pts.shape[0], dtype=np.float64)
    for k in range(pts.shape[0]):
        out[k] = clearance(float(pts[k, 0]), float(pts[k, 1]), segs, offsets, bounds)
    return out


def is_free(px, py, radius, segs, offsets, bounds):
    xmin, ymin, xmax, ymax = bounds
    if not (xmin + radius < px < xmax - radius and ymin + radius < py < ymax - radius):
        return False
    return clearance(px, py, segs, offsets, bounds) > radius


def segment_free(ax, ay, bx, by, radius, step, segs, offsets, bounds):
    dx = bx - ax
    dy = by - ay
    n = int(math.ceil(math.sqrt(dx * dx + dy * dy) / step))
    if n < 1:
        n = 1
    for i in range(n + 1):
        t = i / n
        if not is_free(ax + dx * t, ay + dy * t, radius, segs, offsets, bounds):
            return False
    return True


def nearest(xy, count, x, y):
    d = (xy[:count, 0] - x) ** 2 + (xy[:count, 1] - y) ** 2
    return int(np.argmin(d))


def thin(fg, ridge, order, lut):
    """Priority-ordered topology-preserving thinning.

    ``fg`` is modified in place and returned. Cells are visited in ``order``
    (flat indices, ascending clearance). The first phase removes simple
    non-ridge cells; the second walks the order backwards and also removes
    simple ridge cells that are not chain ends. Going from high to low
    clearance there keeps two-cell-wide ridge bands from eroding at the tip.
    """
    nx, ny = fg.shape
    flat = fg.ravel().tolist()
    rid = ridge.ravel().tolist()
    order = order.tolist()
    lut = lut.tolist()
    offs = [(di, dj, 1 << k) for k, (di, dj) in enumerate(NEIGHBORS)]

    def code(idx):
        i, j = divmod(idx, ny)
        c = 0
        for di, dj, bit in offs:
            a = i + di
            b = j + dj
            if 0 <= a < nx and 0 <= b < ny and flat[a * ny + b]:
                c |= bit
        return c

    for phase in (0, 1):
        seq = order if phase == 0 else order[::-1]
        changed = True
        while changed:
            changed = False
            for idx in seq:
                if not flat[idx]:
                    continue
                if rid[idx]:
                    if phase == 0:
                        continue
                    c = code(idx)
                    if lut[c] and bin(c).count("1") >= 2:
                        flat[idx] = 0
                        changed = True
                else:
                    if lut[code(idx)]:
                        flat[idx] = 0
                        changed = True
    fg[...] = np.asarray(flat, dtype=fg.dtype).reshape(nx, ny)
    return fg
