# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_kernels_py``.

Operation order mirrors the Python fallback exactly; keep them in sync.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, ceil

cnp.import_array()

cdef int[8] DI = [1, 1, 0, -1, -1, -1, 0, 1]
cdef int[8] DJ = [0, 1, 1, 1, 0, -1, -1, -1]


cdef inline double _clearance(double px, double py, const double[:, ::1] segs,
                              const long long[::1] offsets, double xmin, double ymin,
                              double xmax, double ymax) noexcept nogil:
    cdef double d = px - xmin
    if xmax - px < d:
        d = xmax - px
    if py - ymin < d:
        d = py - ymin
    if ymax - py < d:
        d = ymax - py
    if d <= 0.0:
        return 0.0
    cdef Py_ssize_t m = segs.shape[0]
    if m == 0:
        return d
    cdef Py_ssize_t npoly = offsets.shape[0] - 1
    cdef Py_ssize_t p, k
    cdef int inside
    cdef double ax, ay, bx, by, dx, dy, t, ex, ey, d2, best
    for p in range(npoly):
        inside = 0
        for k in range(offsets[p], offsets[p + 1]):
            ay = segs[k, 1]
            by = segs[k, 3]
            if (ay > py) != (by > py):
                ax = segs[k, 0]
                bx = segs[k, 2]
                if px < (bx - ax) * (py - ay) / (by - ay) + ax:
                    inside ^= 1
        if inside:
            return 0.0
    best = -1.0
    for k in range(m):
        ax = segs[k, 0]
        ay = segs[k, 1]
        bx = segs[k, 2]
        by = segs[k, 3]
        dx = bx - ax
        dy = by - ay
        t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
        if t < 0.0:
            t = 0.0
        if t > 1.0:
            t = 1.0
        ex = px - (ax + t * dx)
        ey = py - (ay + t * dy)
        d2 = ex * ex + ey * ey
        if best < 0.0 or d2 < best:
            best = d2
    best = sqrt(best)
    return best if best < d else d


cdef inline bint _is_free(double px, double py, double radius, const double[:, ::1] segs,
                          const long long[::1] offsets, double xmin, double ymin,
                          double xmax, double ymax) noexcept nogil:
    if not (xmin + radius < px < xmax - radius and ymin + radius < py < ymax - radius):
        return False
    return _clearance(px, py, segs, offsets, xmin, ymin, xmax, ymax) > radius


def clearance(double px, double py, const double[:, ::1] segs,
              const long long[::1] offsets, bounds):
    xmin, ymin, xmax, ymax = bounds
    return _clearance(px, py, segs, offsets, xmin, ymin, xmax, ymax)


def clearance_many(const double[:, ::1] pts, const double[:, ::1] segs,
                   const long long[::1] offsets, bounds):
    cdef double xmin, ymin, xmax, ymax
    xmin, ymin, xmax, ymax = bounds
    cdef Py_ssize_t n = pts.shape[0], k
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for k in range(n):
            o[k] = _clearance(pts[k, 0], pts[k, 1], segs, offsets, xmin, ymin, xmax, ymax)
    return out


def is_free(double px, double py, double radius, const double[:, ::1] segs,
            const long long[::1] offsets, bounds):
    xmin, ymin, xmax, ymax = bounds
    return bool(_is_free(px, py, radius, segs, offsets, xmin, ymin, xmax, ymax))


def segment_free(double ax, double ay, double bx, double by, double radius, double step,
                 const double[:, ::1] segs, const long long[::1] offsets, bounds):
    cdef double xmin, ymin, xmax, ymax
    xmin, ymin, xmax, ymax = bounds
    cdef double dx = bx - ax, dy = by - ay, t
    cdef long long n = <long long>ceil(sqrt(dx * dx + dy * dy) / step)
    cdef long long i
    if n < 1:
        n = 1
    for i in range(n + 1):
        t = <double>i / <double>n
        if not _is_free(ax + dx * t, ay + dy * t, radius, segs, offsets, xmin, ymin, xmax, ymax):
            return False
    return True


def nearest(const double[:, ::1] xy, Py_ssize_t count, double x, double y):
    cdef Py_ssize_t k, best = 0
    cdef double d, bd = -1.0, ex, ey
    for k in range(count):
        ex = xy[k, 0] - x
        ey = xy[k, 1] - y
        d = ex * ex + ey * ey
        if bd < 0.0 or d < bd:
            bd = d
            best = k
    return best


cdef inline int _code(const unsigned char[:, ::1] fg, Py_ssize_t i, Py_ssize_t j,
                      Py_ssize_t nx, Py_ssize_t ny) noexcept nogil:
    cdef int c = 0, k
    cdef Py_ssize_t a, b
    for k in range(8):
        a = i + DI[k]
        b = j + DJ[k]
        if 0 <= a < nx and 0 <= b < ny and fg[a, b]:
            c |= 1 << k
    return c


cdef inline int _popcount(int c) noexcept nogil:
    cdef int n = 0
    while c:
        n += c & 1
        c >>= 1
    return n


def thin(unsigned char[:, ::1] fg, const unsigned char[:, ::1] ridge,
         const long long[::1] order, const unsigned char[::1] lut):
    cdef Py_ssize_t nx = fg.shape[0], ny = fg.shape[1]
    cdef Py_ssize_t n = order.shape[0], k, i, j
    cdef long long idx
    cdef int phase, c
    cdef bint changed
    with nogil:
        for phase in range(2):
            changed = True
            while changed:
                changed = False
                for k in range(n):
                    idx = order[k] if phase == 0 else order[n - 1 - k]
                    i = idx // ny
                    j = idx % ny
                    if not fg[i, j]:
                        continue
                    if ridge[i, j]:
                        if phase == 0:
                            continue
                        c = _code(fg, i, j, nx, ny)
                        if lut[c] and _popcount(c) >= 2:
                            fg[i, j] = 0
                            changed = True
                    else:
                        if lut[_code(fg, i, j, nx, ny)]:
                            fg[i, j] = 0
                            changed = True
    return np.asarray(fg)
