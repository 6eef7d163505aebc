"""Discrete closed plane curves and their pointwise/pairwise geometry.

A curve is a closed polygon of N vertices, positively oriented (counter
clockwise, signed area > 0). All derived quantities live on a
:class:`CurveFrame`: edge lengths, arclength coordinates, tangents, outward
normals, signed curvatures, total length and the mean squared curvature.

Conventions
-----------
* Vertex ``i`` connects to vertex ``(i + 1) % N``; edge ``i`` is that segment.
* Curvature at a vertex is the exterior turning angle divided by the average
  of the two adjacent edge lengths, so the discrete total turning identity
  ``sum(k_i * w_i) == 2*pi`` holds exactly for embedded curves.
* The tangent at a vertex is the normalized angle bisector of the adjacent
  edge directions; the outward normal is the tangent rotated by -pi/2.
* Pairwise arc length is always the shorter of the two arcs.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CurveFormatError,
    DegenerateCurve,
    InvalidPair,
    ResampleFailure,
)

TWO_PI = 2.0 * math.pi

# Relative tolerance (fraction of mean edge length) below which two edges are
# considered touching in the embeddedness test.
EMBED_TOL = 1e-12


def _as_vertex_array(vertices) -> np.ndarray:
    arr = np.asarray(vertices, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise CurveFormatError(
            f"vertices must have shape (N, 2), got {arr.shape}", shape=list(arr.shape)
        )
    return arr


def signed_area(vertices: np.ndarray) -> float:
    """Shoelace area; positive for counterclockwise polygons."""
    x, y = vertices[:, 0], vertices[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def polygon_length(curve: "DiscreteCurve") -> float:
    """Total edge length, without building a full frame."""
    v = curve.vertices
    return float(np.sum(np.hypot(*(np.roll(v, -1, axis=0) - v).T)))


@dataclass(frozen=True)
class DiscreteCurve:
    """Closed polygon of N planar vertices, the fundamental flow state.

    Vertices are dimensionless curve coordinates. Use :meth:`from_vertices`
    to build one from raw points: it canonicalizes the orientation (reverses
    clockwise input). The constructor validates the cheap structural
    invariants (N >= 8, no duplicated consecutive vertices, finite
    coordinates); embeddedness is checked separately by :func:`is_embedded`.
    """

    vertices: np.ndarray
    name: str | None = None

    def __post_init__(self):
        arr = _as_vertex_array(self.vertices)
        if arr.shape[0] < 8:
            raise DegenerateCurve(f"need at least 8 vertices, got {arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise DegenerateCurve("non-finite vertex coordinates")
        edges = np.roll(arr, -1, axis=0) - arr
        lengths = np.hypot(edges[:, 0], edges[:, 1])
        if np.any(lengths <= 0.0):
            raise DegenerateCurve("duplicated consecutive vertices")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "vertices", arr)

    @classmethod
    def from_vertices(cls, vertices, name: str | None = None) -> "DiscreteCurve":
        """Build a curve, reversing the vertex order if input is clockwise."""
        arr = _as_vertex_array(vertices)
        if signed_area(arr) < 0.0:
            arr = arr[::-1]
        return cls(arr, name=name)

    @property
    def n(self) -> int:
        return self.vertices.shape[0]

    @property
    def signed_area(self) -> float:
        return signed_area(self.vertices)

    @property
    def positively_oriented(self) -> bool:
        return self.signed_area > 0.0


@dataclass(frozen=True)
class CurveFrame:
    """Derived geometry of a :class:`DiscreteCurve`.

    ``edge_lengths[i]`` is the length of edge i (vertex i to i+1),
    ``arclength[i]`` the cumulative arclength of vertex i from vertex 0,
    ``dual_weights[i] = (edge_lengths[i-1] + edge_lengths[i]) / 2`` the
    vertex quadrature weight, ``turning[i]`` the exterior angle, and
    ``curvature[i] = turning[i] / dual_weights[i]``.
    """

    curve: DiscreteCurve
    edge_lengths: np.ndarray
    arclength: np.ndarray
    length: float
    tangents: np.ndarray
    normals: np.ndarray
    turning: np.ndarray
    dual_weights: np.ndarray
    curvature: np.ndarray
    avg_k2: float
    area: float

    @property
    def n(self) -> int:
        return self.curve.n

    @property
    def vertices(self) -> np.ndarray:
        return self.curve.vertices

    @property
    def k_max(self) -> float:
        return float(np.max(np.abs(self.curvature)))

    @property
    def k_min(self) -> float:
        return float(np.min(self.curvature))


@dataclass(frozen=True)
class ChordArcRecord:
    """One vertex pair with its chord/arc data.

    ``ratio`` and ``comparison_value`` (the functional Z) are filled by the
    comparison module; they stay None for purely geometric queries.
    """

    pair: tuple[int, int]
    chord: float
    arc: float
    chord_direction: tuple[float, float]
    tangent_chord_angle_p: float
    tangent_chord_angle_q: float
    opening_angle: float
    ratio: float | None = None
    comparison_value: float | None = None


def build_frame(curve: DiscreteCurve) -> CurveFrame:
    """Compute all pointwise geometric quantities of a curve.

    Raises DegenerateCurve if any edge is shorter than 1e-12 of the mean
    edge length or adjacent edges exactly reverse direction.
    """
    v = curve.vertices
    edges = np.roll(v, -1, axis=0) - v
    h = np.hypot(edges[:, 0], edges[:, 1])
    mean_h = float(np.mean(h))
    if np.any(h < 1e-12 * mean_h):
        raise DegenerateCurve("edge length below 1e-12 of mean", min_edge=float(h.min()))
    unit = edges / h[:, None]
    unit_prev = np.roll(unit, 1, axis=0)

    bisector = unit_prev + unit
    norm = np.hypot(bisector[:, 0], bisector[:, 1])
    if np.any(norm < 1e-12):
        raise DegenerateCurve("adjacent edges reverse direction (cusp)")
    tangents = bisector / norm[:, None]
    # outward normal for a CCW curve: tangent rotated by -pi/2
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]])

    cross = unit_prev[:, 0] * unit[:, 1] - unit_prev[:, 1] * unit[:, 0]
    dot = np.sum(unit_prev * unit, axis=1)
    turning = np.arctan2(cross, dot)

    h_prev = np.roll(h, 1)
    w = 0.5 * (h_prev + h)
    k = turning / w

    length = float(np.sum(h))
    s = np.concatenate([[0.0], np.cumsum(h[:-1])])
    avg_k2 = float(np.sum(k * k * w) / length)

    return CurveFrame(
        curve=curve,
        edge_lengths=h,
        arclength=s,
        length=length,
        tangents=tangents,
        normals=normals,
        turning=turning,
        dual_weights=w,
        curvature=k,
        avg_k2=avg_k2,
        area=signed_area(v),
    )


def _segments_cross(ax, ay, bx, by, cx, cy, dx, dy, tol_ab, tol_cd):
    """Vectorized segment pair intersection with touch tolerance.

    All arguments are same-shape arrays describing segments AB and CD.
    ``tol_ab``/``tol_cd`` are absolute distance tolerances scaled into the
    cross products. Touching within tolerance counts as crossing.
    """
    # signed areas: position of A, B relative to line CD and C, D to line AB
    cdx, cdy = dx - cx, dy - cy
    abx, aby = bx - ax, by - ay
    d1 = cdx * (ay - cy) - cdy * (ax - cx)
    d2 = cdx * (by - cy) - cdy * (bx - cx)
    d3 = abx * (cy - ay) - aby * (cx - ax)
    d4 = abx * (dy - ay) - aby * (dx - ax)
    e_cd = tol_cd * np.hypot(cdx, cdy)
    e_ab = tol_ab * np.hypot(abx, aby)
    straddle_ab = (np.minimum(d1, d2) <= e_cd) & (np.maximum(d1, d2) >= -e_cd)
    straddle_cd = (np.minimum(d3, d4) <= e_ab) & (np.maximum(d3, d4) >= -e_ab)
    # bounding box overlap rules out collinear-but-disjoint pairs
    pad = np.maximum(tol_ab, tol_cd)
    bb = (
        (np.minimum(ax, bx) <= np.maximum(cx, dx) + pad)
        & (np.maximum(ax, bx) >= np.minimum(cx, dx) - pad)
        & (np.minimum(ay, by) <= np.maximum(cy, dy) + pad)
        & (np.maximum(ay, by) >= np.minimum(cy, dy) - pad)
    )
    return straddle_ab & straddle_cd & bb


def is_embedded(curve: DiscreteCurve, tol: float = EMBED_TOL) -> bool:
    """True iff no two non-adjacent edges intersect.

    Brute-force all-pairs test, vectorized and chunked; two edges closer
    than ``tol`` times the mean edge length count as intersecting.
    """
    v = curve.vertices
    n = curve.n
    edges_to = np.roll(v, -1, axis=0)
    h = np.hypot(*(edges_to - v).T)
    abs_tol = tol * float(np.mean(h))

    ii, jj = np.triu_indices(n, k=2)
    keep = ~((ii == 0) & (jj == n - 1))  # edges 0 and N-1 share vertex 0
    ii, jj = ii[keep], jj[keep]

    chunk = 500_000
    for lo in range(0, ii.size, chunk):
        i = ii[lo : lo + chunk]
        j = jj[lo : lo + chunk]
        hit = _segments_cross(
            v[i, 0], v[i, 1], edges_to[i, 0], edges_to[i, 1],
            v[j, 0], v[j, 1], edges_to[j, 0], edges_to[j, 1],
            abs_tol, abs_tol,
        )
        if np.any(hit):
            return False
    return True


def chord_arc(frame: CurveFrame, i: int, j: int):
    """Chord length, shorter arc length, unit chord direction, opening angle.

    Returns ``(d, ell, w, theta)`` for the vertex pair ``(i, j)`` where ``w``
    points from vertex i to vertex j and ``theta`` is the angle between the
    tangents at i and j, in [0, pi].
    """
    n = frame.n
    if i == j:
        raise InvalidPair("chord_arc requires two distinct vertices", i=i, j=j)
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidPair("vertex index out of range", i=i, j=j, n=n)
    diff = frame.vertices[j] - frame.vertices[i]
    d = float(np.hypot(diff[0], diff[1]))
    arc = abs(frame.arclength[j] - frame.arclength[i])
    ell = float(min(arc, frame.length - arc))
    w = diff / d
    dot = float(np.clip(np.dot(frame.tangents[i], frame.tangents[j]), -1.0, 1.0))
    theta = math.acos(dot)
    return d, ell, (float(w[0]), float(w[1])), theta


def chord_arc_record(frame: CurveFrame, i: int, j: int) -> ChordArcRecord:
    """Full geometric record for one pair (comparison fields left unset)."""
    d, ell, w, theta = chord_arc(frame, i, j)
    ang_p = math.acos(float(np.clip(np.dot(frame.tangents[i], w), -1.0, 1.0)))
    ang_q = math.acos(float(np.clip(np.dot(frame.tangents[j], w), -1.0, 1.0)))
    return ChordArcRecord(
        pair=(i, j),
        chord=d,
        arc=ell,
        chord_direction=w,
        tangent_chord_angle_p=ang_p,
        tangent_chord_angle_q=ang_q,
        opening_angle=theta,
    )


def all_pairs_chord_arc(frame: CurveFrame):
    """Chord and shorter-arc lengths for every unordered vertex pair.

    Returns ``(i_idx, j_idx, d, ell)`` as flat arrays over the
    ``n*(n-1)/2`` pairs with i < j.
    """
    v = frame.vertices
    s = frame.arclength
    i_idx, j_idx = np.triu_indices(frame.n, k=1)
    diff = v[j_idx] - v[i_idx]
    d = np.hypot(diff[:, 0], diff[:, 1])
    arc = s[j_idx] - s[i_idx]
    ell = np.minimum(arc, frame.length - arc)
    return i_idx, j_idx, d, ell


def resample_uniform(curve: DiscreteCurve, n: int) -> DiscreteCurve:
    """Resample to ``n`` vertices at equal arclength spacing.

    Linear interpolation along the polygon; vertex 0 stays fixed, so a curve
    that is already uniform resamples to itself. Total length is preserved
    to O(n^-2).
    """
    if n < 8:
        raise ResampleFailure(f"cannot resample to fewer than 8 vertices, got {n}")
    v = curve.vertices
    closed = np.vstack([v, v[:1]])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    length = s[-1]
    targets = np.arange(n) * (length / n)
    x = np.interp(targets, s, closed[:, 0])
    y = np.interp(targets, s, closed[:, 1])
    out = DiscreteCurve(np.column_stack([x, y]), name=curve.name)
    if not is_embedded(out):
        raise ResampleFailure("resampled polygon self-intersects", n=n)
    return out


def canonical_scale(curve: DiscreteCurve) -> DiscreteCurve:
    """Dilate about the origin so the total length is exactly 2*pi."""
    scale = TWO_PI / polygon_length(curve)
    return DiscreteCurve(curve.vertices * scale, name=curve.name)


# -- curve file I/O ---------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_curve(curve: DiscreteCurve, path: str | Path) -> None:
    """Write a curve as JSON ({"vertices": [[x, y], ...]}) or two-column CSV.

    Format chosen by extension (.json or .csv); floats carry 17 significant
    digits.
    """
    path = Path(path)
    if path.suffix == ".json":
        rows = ",\n    ".join(
            f"[{_fmt(x)}, {_fmt(y)}]" for x, y in curve.vertices
        )
        name_part = f',\n  "name": {json.dumps(curve.name)}' if curve.name else ""
        text = f'{{\n  "vertices": [\n    {rows}\n  ]{name_part}\n}}\n'
        path.write_text(text)
    elif path.suffix == ".csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for x, y in curve.vertices:
            writer.writerow([_fmt(x), _fmt(y)])
        path.write_text(buf.getvalue())
    else:
        raise CurveFormatError(f"unsupported curve file extension: {path.suffix}")


def load_curve(path: str | Path) -> DiscreteCurve:
    """Read a curve file (JSON or headerless two-column CSV).

    Clockwise input is reversed so the result is positively oriented
    whenever its signed area is nonzero.
    """
    path = Path(path)
    if not path.exists():
        raise CurveFormatError(f"curve file not found: {path}")
    if path.suffix == ".json":
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise CurveFormatError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(data, dict) or "vertices" not in data:
            raise CurveFormatError(f'{path}: expected an object with a "vertices" key')
        return DiscreteCurve.from_vertices(data["vertices"], name=data.get("name"))
    if path.suffix == ".csv":
        rows = []
        for line_no, row in enumerate(csv.reader(path.read_text().splitlines()), 1):
            if not row:
                continue
            if len(row) != 2:
                raise CurveFormatError(f"{path}:{line_no}: expected two columns")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError as exc:
                raise CurveFormatError(f"{path}:{line_no}: {exc}") from exc
        return DiscreteCurve.from_vertices(rows, name=path.stem)
    raise CurveFormatError(f"unsupported curve file extension: {path.suffix}")
