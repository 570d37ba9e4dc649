"""Triangle meshes with a tagged adhesive interface.

The interface is an oriented polyline of straight segments.  Each segment
couples a node pair on the bonded body (the "plus" side) either to a matched
node pair of a second body or, when ``minus_nodes`` is None, to a rigid
obstacle whose displacement is identically zero.  Segments are ordered so
that the plus body lies to the left of the tangent; the unit normal then
points from the plus body toward the partner:

    tangent = (p2 - p1) / |p2 - p1|,   normal = (tangent_y, -tangent_x)

The displacement jump across a segment is (minus side) - (plus side), so the
non-penetration condition reads jump . normal >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class InterfaceSegment:
    plus_nodes: tuple[int, int]
    minus_nodes: Optional[tuple[int, int]]
    normal: np.ndarray
    tangent: np.ndarray
    length: float


def _segments_from_pairs(nodes: np.ndarray, plus_pairs, minus_pairs) -> tuple[InterfaceSegment, ...]:
    segments = []
    for plus, minus in zip(plus_pairs, minus_pairs):
        p1, p2 = (nodes[plus[0]], nodes[plus[1]])
        d = p2 - p1
        length = float(np.hypot(*d))
        if length > 0.0:
            t = d / length
        else:
            t = np.zeros(2)  # degenerate; reported by validation
        n = np.array([t[1], -t[0]])
        segments.append(
            InterfaceSegment(
                plus_nodes=(int(plus[0]), int(plus[1])),
                minus_nodes=None if minus is None else (int(minus[0]), int(minus[1])),
                normal=n,
                tangent=t,
                length=length,
            )
        )
    return tuple(segments)


@dataclass(eq=False)
class Mesh:
    """P1 triangle mesh, interface segments, and tagged boundary sets.

    ``interface_nodes`` lists the plus-side node ids of the interface
    polyline in chain order; slip fields are indexed by this list.
    ``segment_nodes`` maps each segment to (first, second) indices into
    ``interface_nodes``.
    """

    nodes: np.ndarray                 # (N, 2)
    triangles: np.ndarray             # (M, 3)
    segments: tuple[InterfaceSegment, ...]
    dirichlet_edges: dict[str, np.ndarray] = field(default_factory=dict)
    neumann_edges: dict[str, np.ndarray] = field(default_factory=dict)
    dirichlet_nodes: dict[str, np.ndarray] = field(default_factory=dict)
    interface_nodes: np.ndarray = field(init=False)
    segment_nodes: np.ndarray = field(init=False)
    minus_interface_nodes: np.ndarray = field(init=False)  # -1 for rigid side

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=int)
        order: list[int] = []
        index: dict[int, int] = {}
        minus_of: dict[int, int] = {}
        seg_nodes = np.zeros((len(self.segments), 2), dtype=int)
        for s, seg in enumerate(self.segments):
            for j, p in enumerate(seg.plus_nodes):
                if p not in index:
                    index[p] = len(order)
                    order.append(p)
                seg_nodes[s, j] = index[p]
                if seg.minus_nodes is not None:
                    minus_of[p] = seg.minus_nodes[j]
        self.interface_nodes = np.array(order, dtype=int)
        self.segment_nodes = seg_nodes
        self.minus_interface_nodes = np.array(
            [minus_of.get(p, -1) for p in order], dtype=int
        )

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_dofs(self) -> int:
        return 2 * self.nodes.shape[0]

    def triangle_areas(self) -> np.ndarray:
        """Signed areas; positive for counter-clockwise node order."""
        p = self.nodes[self.triangles]
        return 0.5 * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
        )

    def boundary_edges_of_triangulation(self) -> np.ndarray:
        """Edges that belong to exactly one triangle (outline of each body)."""
        edges = {}
        for tri in self.triangles:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                edges[key] = edges.get(key, 0) + 1
        return np.array([e for e, c in edges.items() if c == 1], dtype=int)

    def validate_into(self, report) -> None:
        """Append geometry violations to a validation report."""
        areas = self.triangle_areas()
        scale = float(np.abs(self.nodes).max()) if self.nodes.size else 1.0
        bad = np.nonzero(areas <= 1e-14 * max(scale, 1.0) ** 2)[0]
        for i in bad[:10]:
            report.violations.append(f"triangle {i} has non-positive area")
        counts = np.zeros(len(self.interface_nodes), dtype=int)
        for s, seg in enumerate(self.segments):
            if seg.length <= 0.0:
                report.violations.append(f"interface segment {s} has zero length")
                continue
            nt = abs(float(seg.normal @ seg.tangent))
            if (abs(np.hypot(*seg.normal) - 1.0) > 1e-12
                    or abs(np.hypot(*seg.tangent) - 1.0) > 1e-12 or nt > 1e-12):
                report.violations.append(
                    f"interface segment {s} frame is not orthonormal")
            counts[self.segment_nodes[s]] += 1
            if seg.minus_nodes is not None:
                for p, m in zip(seg.plus_nodes, seg.minus_nodes):
                    gap = np.hypot(*(self.nodes[p] - self.nodes[m]))
                    if gap > 1e-9 * max(scale, 1.0):
                        report.violations.append(
                            f"interface segment {s} node pair ({p}, {m}) is "
                            "not geometrically matched")
        if np.any(counts > 2):
            report.violations.append(
                "interface segments do not form simple polylines "
                "(a node is shared by more than two segments)")
        d_edges = {tuple(sorted(e)) for tag in self.dirichlet_edges
                   for e in self.dirichlet_edges[tag].tolist()}
        n_edges = {tuple(sorted(e)) for tag in self.neumann_edges
                   for e in self.neumann_edges[tag].tolist()}
        if d_edges & n_edges:
            report.violations.append(
                "Dirichlet and Neumann boundary edge sets overlap")


def structured_rectangle(x0: float, x1: float, y0: float, y1: float,
                         nx: int, ny: int, offset: int = 0):
    """Uniform grid of 2*(nx*ny) right triangles over a rectangle.

    Returns (nodes, triangles, node_id) with node_id(ix, iy) giving the
    global index including ``offset``.  Triangles are counter-clockwise and
    cells are split along the same diagonal so meshes are reproducible.
    """
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    nodes = np.array([(x, y) for y in ys for x in xs])

    def node_id(ix: int, iy: int) -> int:
        return offset + iy * (nx + 1) + ix

    tris = []
    for iy in range(ny):
        for ix in range(nx):
            a = node_id(ix, iy) - offset
            b = node_id(ix + 1, iy) - offset
            c = node_id(ix + 1, iy + 1) - offset
            d = node_id(ix, iy + 1) - offset
            tris.append((a, b, c))
            tris.append((a, c, d))
    return nodes, np.array(tris, dtype=int), node_id


def make_interface(nodes: np.ndarray, plus_chain, minus_chain=None) -> tuple[InterfaceSegment, ...]:
    """Build segments from an ordered node chain on the plus side.

    ``plus_chain`` lists node ids along the interface with the plus body on
    the left of the walking direction.  ``minus_chain`` must be aligned
    index-for-index when a second body is present; None means rigid obstacle.
    """
    plus_pairs = [(plus_chain[i], plus_chain[i + 1]) for i in range(len(plus_chain) - 1)]
    if minus_chain is None:
        minus_pairs = [None] * len(plus_pairs)
    else:
        minus_pairs = [(minus_chain[i], minus_chain[i + 1]) for i in range(len(minus_chain) - 1)]
    return _segments_from_pairs(np.asarray(nodes, dtype=float), plus_pairs, minus_pairs)
