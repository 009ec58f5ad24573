"""Iso-curve extraction and Hausdorff integrals along it, d = 2 only.

Marching squares with linear edge interpolation turns a grid field into
closed polylines.  Each polyline edge becomes one segment carrying its
midpoint, its length (the surface-measure weight), and, once attached, the
outward unit normal -grad f / |grad f| at the midpoint.  Integrals along
the curve are midpoint sums of integrand(midpoint) * length.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGradient, EmptyContour
from .levels import EvalGrid, field_values

_DEGENERATE_SEGMENT_FACTOR = 1e-12
_GRADIENT_FLOOR_FACTOR = 1e-8


@dataclass(frozen=True)
class Contour:
    """Polyline approximation of an iso-curve, partitioned into segments."""

    loops: tuple                      # one (k, 2) vertex array per polyline
    closed: tuple                     # per-loop closure flags
    midpoints: np.ndarray             # (m, 2)
    lengths: np.ndarray               # (m,)
    loop_ids: np.ndarray              # (m,) index into loops
    normals: np.ndarray | None = None  # (m, 2) outward unit normals

    def __post_init__(self):
        for arr in (self.midpoints, self.lengths, self.loop_ids) + self.loops:
            np.asarray(arr).setflags(write=False)
        if self.normals is not None:
            np.asarray(self.normals).setflags(write=False)

    @property
    def n_segments(self) -> int:
        return self.lengths.size

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    def with_normals(self, normals: np.ndarray) -> "Contour":
        return Contour(self.loops, self.closed, self.midpoints, self.lengths, self.loop_ids, normals)

    def to_csv(self, path):
        """Write segments as rows (x, y, length, nx, ny, loop_id)."""
        normals = self.normals
        if normals is None:
            normals = np.full_like(self.midpoints, np.nan)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y", "length", "nx", "ny", "loop_id"])
            for i in range(self.n_segments):
                writer.writerow(
                    [
                        repr(float(self.midpoints[i, 0])),
                        repr(float(self.midpoints[i, 1])),
                        repr(float(self.lengths[i])),
                        repr(float(normals[i, 0])),
                        repr(float(normals[i, 1])),
                        int(self.loop_ids[i]),
                    ]
                )


def _interp(p0, p1, v0, v1, level):
    t = (level - v0) / (v1 - v0)
    return p0 + np.clip(t, 0.0, 1.0) * (p1 - p0)


def _cell_segments(ax, ay, V, level, ix, iy):
    """Marching-squares segments for one cell as (edge_key_a, edge_key_b) pairs.

    Edge keys name the grid edge carrying each crossing, so neighboring cells
    share crossing points exactly.  The ambiguous two-diagonal cases are
    resolved by the cell-center (bilinear) value.
    """
    v = (V[ix, iy], V[ix + 1, iy], V[ix + 1, iy + 1], V[ix, iy + 1])
    inside = tuple(val >= level for val in v)
    code = inside[0] | inside[1] << 1 | inside[2] << 2 | inside[3] << 3
    if code in (0, 15):
        return []
    # edges of cell (ix, iy): bottom, right, top, left
    bottom = ("h", ix, iy)
    right = ("v", ix + 1, iy)
    top = ("h", ix, iy + 1)
    left = ("v", ix, iy)
    table = {
        1: [(left, bottom)],
        2: [(bottom, right)],
        3: [(left, right)],
        4: [(right, top)],
        6: [(bottom, top)],
        7: [(left, top)],
        8: [(top, left)],
        9: [(top, bottom)],
        11: [(top, right)],
        12: [(right, left)],
        13: [(right, bottom)],
        14: [(bottom, left)],
    }
    if code in (5, 10):
        center_inside = 0.25 * sum(v) >= level
        if code == 5:  # corners 0 and 2 inside
            same = [(left, bottom), (right, top)]
            other = [(left, top), (right, bottom)]
        else:  # corners 1 and 3 inside
            same = [(bottom, right), (top, left)]
            other = [(bottom, left), (top, right)]
        return same if center_inside else other
    return table[code]


def _edge_point(key, ax, ay, V, level):
    kind, i, j = key
    if kind == "h":
        p0 = np.array([ax[i], ay[j]])
        p1 = np.array([ax[i + 1], ay[j]])
        v0, v1 = V[i, j], V[i + 1, j]
    else:
        p0 = np.array([ax[i], ay[j]])
        p1 = np.array([ax[i], ay[j + 1]])
        v0, v1 = V[i, j], V[i, j + 1]
    return _interp(p0, p1, v0, v1, level)


def _chain_loops(segments):
    """Chain (key_a, key_b) segments into polylines of edge keys."""
    adjacency = {}
    for a, b in segments:
        adjacency.setdefault(a, []).append(b)
        adjacency.setdefault(b, []).append(a)
    unused = {tuple(sorted((a, b))) for a, b in segments}

    def take(a, b):
        unused.discard(tuple(sorted((a, b))))

    def walk(start, nxt):
        path = [start, nxt]
        take(start, nxt)
        while True:
            here = path[-1]
            options = [
                k for k in adjacency[here] if tuple(sorted((here, k))) in unused
            ]
            if not options:
                return path
            nxt = options[0]
            take(here, nxt)
            path.append(nxt)
            if nxt == path[0]:
                return path

    loops = []
    # open chains first: start from keys of odd degree (grid-boundary hits)
    for key in sorted(adjacency, key=repr):
        if len(adjacency[key]) % 2 == 1:
            for other in list(adjacency[key]):
                if tuple(sorted((key, other))) in unused:
                    loops.append(walk(key, other))
    while unused:
        a, b = min(unused, key=repr)
        loops.append(walk(a, b))
    return loops


def extract_contour(field, level: float, grid: EvalGrid) -> Contour:
    """Extract the iso-curve {f = level} from a grid field as polylines.

    Geometry only; normals are attached separately from a gradient field.

    Raises
    ------
    EmptyContour
        If the level lies outside the open range of the field values or no
        crossing survives degeneracy pruning.
    """
    V = field_values(field, grid)
    if grid.d != 2:
        raise ValueError("contour extraction requires a 2-D grid")
    vmin, vmax = float(V.min()), float(V.max())
    if not vmin < level < vmax:
        raise EmptyContour(f"level {level} outside field range ({vmin}, {vmax})")
    ax, ay = grid.axes

    # restrict the cell sweep to cells whose corners straddle the level
    inside = V >= level
    cell_any = inside[:-1, :-1] | inside[1:, :-1] | inside[1:, 1:] | inside[:-1, 1:]
    cell_all = inside[:-1, :-1] & inside[1:, :-1] & inside[1:, 1:] & inside[:-1, 1:]
    segs = []
    for ix, iy in np.argwhere(cell_any & ~cell_all):
        segs.extend(_cell_segments(ax, ay, V, level, ix, iy))
    if not segs:
        raise EmptyContour(f"no crossings found at level {level}")

    chains = _chain_loops(segs)
    point_cache = {}

    def point(key):
        if key not in point_cache:
            point_cache[key] = _edge_point(key, ax, ay, V, level)
        return point_cache[key]

    min_len = _DEGENERATE_SEGMENT_FACTOR * float(np.hypot(*grid.spacing))
    loops, closed_flags, mids, lens, ids = [], [], [], [], []
    for chain in chains:
        is_closed = chain[0] == chain[-1]
        keys = chain[:-1] if is_closed else chain
        pts = np.array([point(k) for k in keys])
        # merge degenerate vertices (coincident interpolation points)
        keep = [0]
        for i in range(1, len(pts)):
            if np.hypot(*(pts[i] - pts[keep[-1]])) > min_len:
                keep.append(i)
        if is_closed and len(keep) > 1 and np.hypot(*(pts[keep[-1]] - pts[keep[0]])) <= min_len:
            keep.pop()
        pts = pts[keep]
        if len(pts) < 2:
            continue
        nxt = np.roll(pts, -1, axis=0) if is_closed else pts[1:]
        cur = pts if is_closed else pts[:-1]
        seg_len = np.hypot(*(nxt - cur).T)
        loop_id = len(loops)
        loops.append(pts)
        closed_flags.append(is_closed)
        mids.append(0.5 * (cur + nxt))
        lens.append(seg_len)
        ids.append(np.full(seg_len.size, loop_id, dtype=int))
    if not loops:
        raise EmptyContour(f"all crossings at level {level} were degenerate")
    return Contour(
        loops=tuple(loops),
        closed=tuple(closed_flags),
        midpoints=np.concatenate(mids),
        lengths=np.concatenate(lens),
        loop_ids=np.concatenate(ids),
    )


def attach_normals(contour: Contour, gradient) -> Contour:
    """Attach outward unit normals -grad f / |grad f| at segment midpoints.

    ``gradient`` maps an (m, 2) array of points to (m, 2) gradients.

    Raises
    ------
    DegenerateGradient
        If any midpoint gradient norm falls below a floor of 1e-8 times the
        largest midpoint gradient norm, signalling that the nonvanishing-
        gradient assumption fails at this level.
    """
    g = np.asarray(gradient(contour.midpoints), dtype=float)
    norms = np.hypot(g[:, 0], g[:, 1])
    floor = _GRADIENT_FLOOR_FACTOR * float(norms.max(initial=0.0))
    if norms.size == 0 or float(norms.min()) <= floor:
        raise DegenerateGradient(
            "gradient vanishes (or nearly so) on the contour; the expansion assumptions fail"
        )
    return contour.with_normals(-g / norms[:, None])


def hausdorff_integral(contour: Contour, integrand) -> float:
    """Midpoint-rule line integral: sum of integrand(midpoint) * segment length.

    ``integrand`` is a callable on (m, 2) points or a length-m value array.
    """
    vals = integrand(contour.midpoints) if callable(integrand) else integrand
    vals = np.asarray(vals, dtype=float)
    if vals.shape != contour.lengths.shape:
        raise ValueError("integrand values must match the number of segments")
    if not np.all(np.isfinite(vals)):
        raise ValueError("integrand is not finite at some contour midpoints")
    return float(np.dot(vals, contour.lengths))
