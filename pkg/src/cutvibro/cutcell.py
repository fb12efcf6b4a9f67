"""Element classification and cut-element quadrature on Q4 elements.

Corner values are given counter-clockwise from the lower-left corner of the
element; local coordinates live on the unit square. Positive level set is
solid, negative is acoustic. Inside a cut element the zero contour is taken as
the chord between the linear edge crossings, so each phase is a union of
convex polygons which are fan-triangulated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACOUSTIC, SOLID, CUT = 0, 1, 2

ZERO_SNAP = 1e-10  # exact zeros move to +ZERO_SNAP * h (solid side)
CORNER_SNAP = 1e-12  # edge crossings this close to a corner land on it

_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])

# degree-4 Dunavant rule on the reference triangle (barycentric, weights sum to 1)
_A, _WA = 0.445948490915964886, 0.223381589678011466
_B, _WB = 0.091576213509770743, 0.109951743655321868
_TRI_BARY = np.array(
    [
        [_A, _A, 1 - 2 * _A],
        [_A, 1 - 2 * _A, _A],
        [1 - 2 * _A, _A, _A],
        [_B, _B, 1 - 2 * _B],
        [_B, 1 - 2 * _B, _B],
        [1 - 2 * _B, _B, _B],
    ]
)
_TRI_W = np.array([_WA, _WA, _WA, _WB, _WB, _WB])

# 3-point Gauss on [0, 1]
_LINE_T = 0.5 + 0.5 * np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
_LINE_W = np.array([5.0, 8.0, 5.0]) / 18.0

# 2x2 Gauss on the unit square, for uncut elements
_g = 0.5 + 0.5 / np.sqrt(3.0) * np.array([-1.0, 1.0])
QUAD_POINTS = np.array([[x, y] for y in _g for x in _g])
QUAD_WEIGHTS = np.full(4, 0.25)


def snap_zeros(values: np.ndarray, h: float) -> np.ndarray:
    out = np.array(values, dtype=float)
    out[out == 0.0] = ZERO_SNAP * h
    return out


def classify(corner_values: np.ndarray) -> np.ndarray:
    """Per-element class from an (n, 4) array of corner level-set values."""
    v = np.atleast_2d(corner_values)
    out = np.full(v.shape[0], CUT, dtype=np.int8)
    out[(v > 0).all(axis=1)] = SOLID
    out[(v < 0).all(axis=1)] = ACOUSTIC
    return out


def bilinear(values: np.ndarray, xi: np.ndarray) -> np.ndarray:
    x, y = xi[..., 0], xi[..., 1]
    v = values
    return v[0] * (1 - x) * (1 - y) + v[1] * x * (1 - y) + v[2] * x * y + v[3] * (1 - x) * y


def cut_case(values: np.ndarray) -> int:
    """Marching-squares case index; saddles get +16 when the centre is solid."""
    bits = int(sum(1 << k for k in range(4) if values[k] > 0))
    if bits in (5, 10) and np.mean(values) >= 0.0:
        bits += 16
    return bits


@dataclass
class CutQuadrature:
    """Quadrature data for one cut element (local unit-square coordinates).

    Volume weights are physical areas (m^2), interface weights physical
    lengths (m). ``normals`` hold n_s, pointing out of the solid.
    """

    solid_points: np.ndarray
    solid_weights: np.ndarray
    acoustic_points: np.ndarray
    acoustic_weights: np.ndarray
    interface_points: np.ndarray
    interface_weights: np.ndarray
    normals: np.ndarray
    triangles: list
    segments: list
    case: int

    @property
    def solid_area(self) -> float:
        return float(self.solid_weights.sum())

    @property
    def acoustic_area(self) -> float:
        return float(self.acoustic_weights.sum())

    @property
    def interface_length(self) -> float:
        return float(self.interface_weights.sum())


def _crossing(va: float, vb: float, pa: np.ndarray, pb: np.ndarray) -> np.ndarray:
    t = va / (va - vb)
    if t < CORNER_SNAP:
        t = 0.0
    elif t > 1.0 - CORNER_SNAP:
        t = 1.0
    return pa + t * (pb - pa)


def _polygons(values: np.ndarray):
    """Phase polygons as lists of (point, is_crossing) in CCW order."""
    pos = values > 0
    ring = []
    for k in range(4):
        ring.append((_CORNERS[k], False, k))
        k1 = (k + 1) % 4
        if pos[k] != pos[k1]:
            ring.append((_crossing(values[k], values[k1], _CORNERS[k], _CORNERS[k1]), True, None))

    crossings = [i for i, r in enumerate(ring) if r[1]]
    polys = {True: [], False: []}
    if len(crossings) == 2:
        a, b = crossings
        for start, stop in ((a, b), (b, a)):
            poly = [ring[start]]
            i = (start + 1) % len(ring)
            while i != stop:
                poly.append(ring[i])
                i = (i + 1) % len(ring)
            poly.append(ring[stop])
            polys[bool(pos[poly[1][2]])].append(poly)
        return polys

    # saddle: corners whose sign differs from the centre are cut off as triangles
    centre_solid = np.mean(values) >= 0.0
    isolated = [k for k in range(4) if pos[k] != centre_solid]
    pos_ring = {r[2]: i for i, r in enumerate(ring) if r[2] is not None}
    connected = []
    for i, r in enumerate(ring):
        if r[2] is not None and r[2] in isolated:
            continue
        connected.append(r)
    polys[centre_solid].append(connected)
    for k in isolated:
        i = pos_ring[k]
        polys[not centre_solid].append(
            [ring[(i - 1) % len(ring)], ring[i], ring[(i + 1) % len(ring)]]
        )
    return polys


def _fan(poly) -> list[np.ndarray]:
    pts = [p[0] for p in poly]
    tris = []
    for i in range(1, len(pts) - 1):
        tri = np.array([pts[0], pts[i], pts[i + 1]])
        if _tri_area(tri) > 1e-300:
            tris.append(tri)
    return tris


def _tri_area(tri: np.ndarray) -> float:
    d1, d2 = tri[1] - tri[0], tri[2] - tri[0]
    return 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])


def _tri_rule(tris: list[np.ndarray], h: float):
    if not tris:
        return np.zeros((0, 2)), np.zeros(0)
    pts, wts = [], []
    for tri in tris:
        pts.append(_TRI_BARY @ tri)
        wts.append(_TRI_W * _tri_area(tri) * h * h)
    return np.vstack(pts), np.concatenate(wts)


def interface_normal(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Unit normal of segment a->b on its right-hand side.

    Solid polygons are traversed counter-clockwise, so for a solid-polygon
    chord the right-hand side is the acoustic side.
    """
    d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    length = np.hypot(d[0], d[1])
    if length == 0.0:
        raise ValueError("zero-length interface segment")
    return np.array([d[1], -d[0]]) / length


def tessellate(values: np.ndarray, h: float) -> CutQuadrature:
    values = np.asarray(values, dtype=float)
    if classify(values)[0] != CUT:
        raise ValueError("element is not cut")
    polys = _polygons(values)
    solid_tris = [t for p in polys[True] for t in _fan(p)]
    acoustic_tris = [t for p in polys[False] for t in _fan(p)]
    sp_, sw = _tri_rule(solid_tris, h)
    ap, aw = _tri_rule(acoustic_tris, h)

    segments = []
    for poly in polys[True]:
        m = len(poly)
        for i in range(m):
            p, q = poly[i], poly[(i + 1) % m]
            if p[1] and q[1]:
                segments.append((p[0], q[0]))
    ip, iw, nrm = [], [], []
    for a, b in segments:
        length = np.hypot(*(b - a))
        if length < CORNER_SNAP:
            continue
        n = interface_normal(a, b)
        ip.append(a[None, :] + _LINE_T[:, None] * (b - a)[None, :])
        iw.append(_LINE_W * length * h)
        nrm.append(np.repeat(n[None, :], _LINE_T.size, axis=0))
    if ip:
        ip, iw, nrm = np.vstack(ip), np.concatenate(iw), np.vstack(nrm)
    else:
        ip, iw, nrm = np.zeros((0, 2)), np.zeros(0), np.zeros((0, 2))
    triangles = [(SOLID, t) for t in solid_tris] + [(ACOUSTIC, t) for t in acoustic_tris]
    return CutQuadrature(sp_, sw, ap, aw, ip, iw, nrm, triangles, segments, cut_case(values))
