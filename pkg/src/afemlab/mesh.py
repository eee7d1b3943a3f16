"""Conforming 2D triangulations with newest-vertex bisection.

A :class:`Triangulation` is an immutable snapshot: vertices, positively
oriented triangles, a refinement-edge label per triangle, and edge
adjacency.  ``refine`` bisects marked triangles through the midpoint of
their refinement edge, recursively bisecting neighbors first whenever the
shared edge is not the neighbor's refinement edge, so the output is again
conforming (no hanging nodes).  Each bisection splits a triangle into two
children of exactly half the parent area; the newly created midpoint is
the peak of both children and each child's refinement edge is the parent
edge it inherits.  Iterating this rule produces at most four triangle
shapes per initial triangle.

The per-element meshsize is ``h = area**0.5``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CompletionOverflow,
    DegenerateTriangle,
    IncompatibleLabels,
    NonConforming,
)

# Relative tolerances: triangle degeneracy (vs. bounding-box area) and
# point-on-segment detection for the hanging-node scan.
DEGENERACY_RTOL = 1e-14
HANGING_RTOL = 1e-12


@dataclass(frozen=True)
class MeshStats:
    """Local quasi-uniformity summary of a triangulation."""

    min_angle: float
    max_neighbor_area_ratio: float
    max_vertex_valence: int
    h_max: float
    h_min: float


class Triangulation:
    """Immutable conforming triangle mesh snapshot.

    Attributes
    ----------
    vertices : (nv, 2) float array of coordinates.
    on_boundary : (nv,) bool array, flagged from incidence to boundary edges.
    triangles : (nt, 3) int array of CCW vertex indices (the active set).
    ref_edge : (nt,) int array; local index r means the refinement edge is
        the edge opposite vertex ``triangles[t, r]``.
    generation : (nt,) int array of bisection depths.
    parent : (nt,) int array; index of the triangle in the previous snapshot
        this one descends from (its own old index if carried over unchanged,
        -1 on an initial mesh).
    parent_mesh : previous snapshot, or None for an initial mesh.
    vertex_parents : (nv, 2) int array; a refinement vertex stores the two
        endpoint indices of the edge it bisected (indices into this mesh,
        always smaller than its own), an inherited vertex stores (i, i).
    """

    def __init__(self, vertices, on_boundary, triangles, ref_edge,
                 generation, parent, parent_mesh, vertex_parents,
                 n_inherited_vertices, domain_area, bisection_log):
        self.vertices = _frozen(np.asarray(vertices, dtype=float))
        self.on_boundary = _frozen(np.asarray(on_boundary, dtype=bool))
        self.triangles = _frozen(np.asarray(triangles, dtype=np.int64))
        self.ref_edge = _frozen(np.asarray(ref_edge, dtype=np.int64))
        self.generation = _frozen(np.asarray(generation, dtype=np.int64))
        self.parent = _frozen(np.asarray(parent, dtype=np.int64))
        self.parent_mesh = parent_mesh
        self.vertex_parents = _frozen(np.asarray(vertex_parents,
                                                 dtype=np.int64))
        self.n_inherited_vertices = int(n_inherited_vertices)
        self.domain_area = float(domain_area)
        self.bisection_log = _frozen(np.asarray(bisection_log, dtype=float)
                                     .reshape(-1, 3))
        self._build_edges()

    # -- basic queries -----------------------------------------------------

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def generation_bound(self):
        """Largest bisection depth among active triangles."""
        return int(self.generation.max())

    def __repr__(self):
        return (f"Triangulation({self.n_vertices} vertices, "
                f"{self.n_triangles} triangles)")

    def corners(self, t=None):
        """Coordinates of triangle corners, shape (nt, 3, 2)."""
        tri = self.triangles if t is None else self.triangles[t]
        return self.vertices[tri]

    @property
    def areas(self):
        return self._areas

    def _build_edges(self):
        tri = self.triangles
        pts = self.vertices[tri]
        # signed areas; orientation is validated at construction time
        d1 = pts[:, 1] - pts[:, 0]
        d2 = pts[:, 2] - pts[:, 0]
        self._areas = _frozen(0.5 * (d1[:, 0] * d2[:, 1]
                                     - d1[:, 1] * d2[:, 0]))

        # edge k of a triangle is the one opposite local vertex k
        raw = np.stack([tri[:, [1, 2]], tri[:, [2, 0]], tri[:, [0, 1]]],
                       axis=1).reshape(-1, 2)
        und = np.sort(raw, axis=1)
        edges, inverse = np.unique(und, axis=0, return_inverse=True)
        self.edges = _frozen(edges)
        self.tri_edges = _frozen(inverse.reshape(-1, 3).astype(np.int64))

        tri_ids = np.repeat(np.arange(tri.shape[0]), 3)
        self.edge_tris = _frozen(_fill_edge_tris(edges.shape[0], inverse,
                                                 tri_ids))
        self.edge_is_boundary = _frozen(self.edge_tris[:, 1] < 0)

        # vertex -> incident triangles, CSR-style
        flat = tri.ravel()
        order = np.argsort(flat, kind="stable")
        counts = np.bincount(flat, minlength=self.n_vertices)
        self._vt_indptr = _frozen(np.concatenate(
            [[0], np.cumsum(counts)]).astype(np.int64))
        self._vt_data = _frozen((np.repeat(np.arange(tri.shape[0]), 3)
                                 [order]).astype(np.int64))

    def vertex_triangles(self, v):
        """Active triangles incident to vertex ``v``."""
        return self._vt_data[self._vt_indptr[v]:self._vt_indptr[v + 1]]

    def edge_lengths(self):
        p = self.vertices
        d = p[self.edges[:, 1]] - p[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def refinement_edge_vertices(self, t):
        """Global vertex pair of triangle t's refinement edge."""
        r = self.ref_edge[t]
        v = self.triangles[t]
        return v[(r + 1) % 3], v[(r + 2) % 3]


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _fill_edge_tris(ne, edge_ids, tri_ids):
    """Scatter (edge id -> up to two incident triangles); -1 marks none."""
    edge_tris = np.full((ne, 2), -1, dtype=np.int64)
    order = np.argsort(edge_ids, kind="stable")
    eid = edge_ids[order]
    tid = tri_ids[order]
    first = np.r_[True, eid[1:] != eid[:-1]]
    edge_tris[eid[first], 0] = tid[first]
    edge_tris[eid[~first], 1] = tid[~first]
    return edge_tris


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def build_initial(vertices, triangles, ref_edges=None, validate_labels=True):
    """Build a conforming initial triangulation.

    Parameters
    ----------
    vertices : (nv, 2) array of coordinates.
    triangles : (nt, 3) or (nt, 4) int array; an optional 4th column holds
        refinement-edge labels (equivalent to passing ``ref_edges``).
    ref_edges : optional (nt,) int array of labels in {0, 1, 2}.  When
        omitted, the longest edge of each triangle is labeled, followed by
        one tie-breaking sweep that prefers edges already labeled by a
        neighbor; the result is accepted even if no globally compatible
        labeling emerges (a bounded-depth check at refinement time turns a
        genuinely bad labeling into ``CompletionOverflow``).
    validate_labels : when labels are supplied explicitly, walk each
        refinement chain and raise ``IncompatibleLabels`` on a cycle.

    Raises
    ------
    NonConforming, DegenerateTriangle, IncompatibleLabels
    """
    vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(vertices)):
        raise NonConforming("non-finite vertex coordinates")
    triangles = np.asarray(triangles, dtype=np.int64)
    if triangles.ndim != 2 or triangles.shape[1] not in (3, 4):
        raise NonConforming("triangles must be (nt, 3) or (nt, 4)")
    if triangles.shape[1] == 4:
        if ref_edges is not None:
            raise ValueError("labels given both inline and as ref_edges")
        ref_edges = triangles[:, 3].copy()
        triangles = triangles[:, :3].copy()
    else:
        triangles = triangles.copy()

    nv = vertices.shape[0]
    nt = triangles.shape[0]
    if nt == 0:
        raise NonConforming("empty triangle list")
    if triangles.min() < 0 or triangles.max() >= nv:
        raise NonConforming("triangle vertex index out of range")
    if np.any(triangles[:, 0] == triangles[:, 1]) \
            or np.any(triangles[:, 1] == triangles[:, 2]) \
            or np.any(triangles[:, 0] == triangles[:, 2]):
        raise DegenerateTriangle("repeated vertex in a triangle")

    explicit = ref_edges is not None
    if explicit:
        ref_edges = np.asarray(ref_edges, dtype=np.int64).copy()
        if ref_edges.shape != (nt,) or ref_edges.min() < 0 \
                or ref_edges.max() > 2:
            raise IncompatibleLabels("labels must be in {0,1,2}, one per "
                                     "triangle")

    # orient CCW; remap any supplied label through the vertex swap
    pts = vertices[triangles]
    signed = 0.5 * ((pts[:, 1, 0] - pts[:, 0, 0])
                    * (pts[:, 2, 1] - pts[:, 0, 1])
                    - (pts[:, 1, 1] - pts[:, 0, 1])
                    * (pts[:, 2, 0] - pts[:, 0, 0]))
    bbox = vertices.max(axis=0) - vertices.min(axis=0)
    bbox_area = max(bbox[0] * bbox[1], bbox[0] ** 2, bbox[1] ** 2)
    if np.any(np.abs(signed) <= DEGENERACY_RTOL * bbox_area):
        raise DegenerateTriangle("triangle area below tolerance")
    flip = signed < 0
    if np.any(flip):
        triangles[flip] = triangles[flip][:, [0, 2, 1]]
        if explicit:
            swap = ref_edges[flip]
            ref_edges[flip] = np.where(swap == 1, 2,
                                       np.where(swap == 2, 1, 0))

    edges, tri_edges, edge_tris = _adjacency_or_raise(triangles, nt)
    on_boundary = _boundary_flags_checked(vertices, edges,
                                          edge_tris[:, 1] < 0)

    if not explicit:
        ref_edges = _longest_edge_labels(vertices, triangles)
        _label_fixup_sweep(vertices, triangles, ref_edges, tri_edges,
                           edge_tris)
    elif validate_labels:
        _validate_label_chains(triangles, ref_edges, tri_edges, edge_tris)

    total_area = float(np.sum(signed[~flip]) - np.sum(signed[flip]))
    return Triangulation(
        vertices=vertices,
        on_boundary=on_boundary,
        triangles=triangles,
        ref_edge=ref_edges,
        generation=np.zeros(nt, dtype=np.int64),
        parent=np.full(nt, -1, dtype=np.int64),
        parent_mesh=None,
        vertex_parents=np.stack([np.arange(nv), np.arange(nv)], axis=1),
        n_inherited_vertices=nv,
        domain_area=total_area,
        bisection_log=np.zeros((0, 3)),
    )


def _adjacency_or_raise(triangles, nt):
    raw = np.stack([triangles[:, [1, 2]], triangles[:, [2, 0]],
                    triangles[:, [0, 1]]], axis=1).reshape(-1, 2)
    und = np.sort(raw, axis=1)
    edges, inverse, counts = np.unique(und, axis=0, return_inverse=True,
                                       return_counts=True)
    if counts.max() > 2:
        raise NonConforming("edge shared by more than two triangles")
    tri_edges = inverse.reshape(-1, 3)
    tri_ids = np.repeat(np.arange(nt), 3)
    edge_tris = _fill_edge_tris(edges.shape[0], inverse, tri_ids)
    return edges, tri_edges, edge_tris


def _boundary_flags_checked(vertices, edges, single_incidence):
    """Flag boundary vertices; reject hanging nodes.

    A hanging node shows up as a vertex lying strictly inside an edge that
    has only one incident triangle, so only those edges need scanning.
    """
    boundary_edges = edges[single_incidence]
    nv = vertices.shape[0]
    on_boundary = np.zeros(nv, dtype=bool)
    on_boundary[boundary_edges.ravel()] = True

    a = vertices[boundary_edges[:, 0]]
    b = vertices[boundary_edges[:, 1]]
    d = b - a
    lens2 = np.einsum("ij,ij->i", d, d)
    for k in range(boundary_edges.shape[0]):
        rel = vertices - a[k]
        cross = np.abs(rel[:, 0] * d[k, 1] - rel[:, 1] * d[k, 0])
        t = rel @ d[k]
        tol = HANGING_RTOL * lens2[k]
        inside = (cross <= tol * np.sqrt(lens2[k])) \
            & (t > tol) & (t < lens2[k] - tol)
        inside[boundary_edges[k]] = False
        if np.any(inside):
            raise NonConforming(
                f"hanging node: vertex {int(np.flatnonzero(inside)[0])} "
                f"lies inside edge {tuple(boundary_edges[k])}")
    return on_boundary


def _longest_edge_labels(vertices, triangles):
    pts = vertices[triangles]
    # length of edge opposite local vertex k
    lens = np.stack([
        np.hypot(*(pts[:, 2] - pts[:, 1]).T),
        np.hypot(*(pts[:, 0] - pts[:, 2]).T),
        np.hypot(*(pts[:, 1] - pts[:, 0]).T),
    ], axis=1)
    return np.argmax(lens, axis=1).astype(np.int64)


def _label_fixup_sweep(vertices, triangles, ref_edges, tri_edges, edge_tris):
    """One compatibility sweep: move ties toward edges a neighbor labels."""
    pts = vertices[triangles]
    lens = np.stack([
        np.hypot(*(pts[:, 2] - pts[:, 1]).T),
        np.hypot(*(pts[:, 0] - pts[:, 2]).T),
        np.hypot(*(pts[:, 1] - pts[:, 0]).T),
    ], axis=1)
    for t in range(triangles.shape[0]):
        eid = tri_edges[t, ref_edges[t]]
        nb = edge_tris[eid, 0] if edge_tris[eid, 1] == t else edge_tris[eid, 1]
        if nb < 0:
            continue
        nb_local = int(np.flatnonzero(tri_edges[nb] == eid)[0])
        if ref_edges[nb] == nb_local:
            continue
        # relabel the neighbor only when the shared edge ties its longest
        if lens[nb, nb_local] >= (1.0 - 1e-12) * lens[nb].max():
            ref_edges[nb] = nb_local


def _validate_label_chains(triangles, ref_edges, tri_edges, edge_tris):
    nt = triangles.shape[0]
    for start in range(nt):
        seen = set()
        t = start
        while True:
            eid = tri_edges[t, ref_edges[t]]
            nb = edge_tris[eid, 0] if edge_tris[eid, 1] == t \
                else edge_tris[eid, 1]
            if nb < 0:
                break
            if ref_edges[nb] == np.flatnonzero(tri_edges[nb] == eid)[0]:
                break
            if nb in seen or nb == start:
                raise IncompatibleLabels(
                    f"refinement chain from triangle {start} cycles")
            seen.add(t)
            t = nb


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------

def refine(mesh, marked, ell=1):
    """Bisect every marked triangle at least ``ell`` times, then complete.

    Completion bisects additional triangles as needed for conformity (a
    triangle whose refinement edge is not shared as the neighbor's
    refinement edge recursively bisects the neighbor first).  With
    ``ell > 1`` the extra passes re-bisect every active descendant of an
    originally marked triangle; completion-induced triangles are only
    bisected as far as conformity requires.

    Returns a new snapshot; ``mesh`` is untouched.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    marked = np.unique(np.asarray(marked, dtype=np.int64).ravel())
    if marked.size and (marked.min() < 0 or marked.max() >= mesh.n_triangles):
        raise ValueError("marked indices out of range")

    w = _Refiner(mesh)
    if marked.size:
        for t in marked:
            w.flag[t] = True
        for level in range(ell):
            targets = list(marked) if level == 0 else \
                [t for t in range(len(w.tris)) if w.active[t] and w.flag[t]]
            for t in targets:
                if w.active[t]:
                    w.ensure_bisected(t)
        for m in marked:
            assert not w.active[m], "marked triangle survived refinement"
    return w.finalize()


class _Refiner:
    """Mutable working state of a single refine call."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.verts = [tuple(p) for p in mesh.vertices]
        self.vparents = [(i, i) for i in range(mesh.n_vertices)]
        self.tris = [tuple(v) for v in mesh.triangles]
        self.redge = list(mesh.ref_edge)
        self.gen = list(mesh.generation)
        self.origin = list(range(mesh.n_triangles))
        self.flag = [False] * mesh.n_triangles
        self.active = [True] * mesh.n_triangles
        self.n_active = mesh.n_triangles
        self.bisections = []
        # undirected edge -> active incident triangle ids
        self.edge_map = {}
        for t, tri in enumerate(self.tris):
            for k in range(3):
                self._edge_list(tri[(k + 1) % 3], tri[(k + 2) % 3]).append(t)
        self.midpoint = {}

    def _edge_list(self, a, b):
        return self.edge_map.setdefault((a, b) if a < b else (b, a), [])

    def _neighbor(self, t, a, b):
        for other in self._edge_list(a, b):
            if other != t:
                return other
        return None

    def _ref_verts(self, t):
        r = self.redge[t]
        tri = self.tris[t]
        return tri[(r + 1) % 3], tri[(r + 2) % 3]

    def ensure_bisected(self, t0):
        stack = [t0]
        while stack:
            if len(stack) > 2 * self.n_active:
                raise CompletionOverflow(
                    "completion recursion exceeded depth bound; the "
                    "refinement-edge labeling admits no conforming closure")
            t = stack[-1]
            if not self.active[t]:
                stack.pop()
                continue
            a, b = self._ref_verts(t)
            nb = self._neighbor(t, a, b)
            if nb is not None and self._ref_verts(nb) not in ((a, b), (b, a)):
                stack.append(nb)
                continue
            m = self._get_midpoint(a, b)
            self._split(t, m)
            if nb is not None:
                self._split(nb, m)
            stack.pop()

    def _get_midpoint(self, a, b):
        key = (a, b) if a < b else (b, a)
        mid = self.midpoint.get(key)
        if mid is None:
            pa, pb = self.verts[a], self.verts[b]
            self.verts.append((0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])))
            self.vparents.append(key)
            mid = len(self.verts) - 1
            self.midpoint[key] = mid
        return mid

    def _split(self, t, m):
        r = self.redge[t]
        tri = self.tris[t]
        peak, b, c = tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]

        self.active[t] = False
        for k in range(3):
            self._edge_list(tri[(k + 1) % 3], tri[(k + 2) % 3]).remove(t)

        # children are peak-first: new vertex m, refinement edge opposite it
        for child in ((m, peak, b), (m, c, peak)):
            cid = len(self.tris)
            self.tris.append(child)
            self.redge.append(0)
            self.gen.append(self.gen[t] + 1)
            self.origin.append(self.origin[t])
            self.flag.append(self.flag[t])
            self.active.append(True)
            for k in range(3):
                self._edge_list(child[(k + 1) % 3],
                                child[(k + 2) % 3]).append(cid)
        self.n_active += 1
        pa = _tri_area(self.verts, (peak, b, c))
        c1 = _tri_area(self.verts, (m, peak, b))
        c2 = _tri_area(self.verts, (m, c, peak))
        self.bisections.append((pa, c1, c2))

    def finalize(self):
        keep = [t for t in range(len(self.tris)) if self.active[t]]
        triangles = np.array([self.tris[t] for t in keep], dtype=np.int64)
        vertices = np.array(self.verts, dtype=float)

        raw = np.stack([triangles[:, [1, 2]], triangles[:, [2, 0]],
                        triangles[:, [0, 1]]], axis=1).reshape(-1, 2)
        und = np.sort(raw, axis=1)
        edges, counts = np.unique(und, axis=0, return_counts=True)
        assert counts.max() <= 2, "refinement produced a non-manifold edge"
        on_boundary = np.zeros(vertices.shape[0], dtype=bool)
        on_boundary[edges[counts == 1].ravel()] = True

        return Triangulation(
            vertices=vertices,
            on_boundary=on_boundary,
            triangles=triangles,
            ref_edge=np.array([self.redge[t] for t in keep], dtype=np.int64),
            generation=np.array([self.gen[t] for t in keep], dtype=np.int64),
            parent=np.array([self.origin[t] for t in keep], dtype=np.int64),
            parent_mesh=self.mesh,
            vertex_parents=np.array(self.vparents, dtype=np.int64),
            n_inherited_vertices=self.mesh.n_vertices,
            domain_area=self.mesh.domain_area,
            bisection_log=np.array(self.bisections, dtype=float),
        )


def _tri_area(verts, tri):
    (x0, y0), (x1, y1), (x2, y2) = (verts[i] for i in tri)
    return 0.5 * ((x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0))


def uniform_refine(mesh, sweeps=1):
    """Bisect every triangle once per sweep (plus completion)."""
    for _ in range(sweeps):
        mesh = refine(mesh, np.arange(mesh.n_triangles), ell=1)
    return mesh


# ---------------------------------------------------------------------------
# queries
# ---------------------------------------------------------------------------

def meshsize(mesh):
    """Per-element meshsize h = area**(1/2)."""
    return np.sqrt(mesh.areas)


def patch(mesh, tau):
    """All active triangles whose closure meets that of ``tau``.

    For a conforming triangulation this is the set of triangles sharing at
    least one vertex with ``tau`` (``tau`` included).
    """
    out = np.concatenate([mesh.vertex_triangles(v)
                          for v in mesh.triangles[tau]])
    return np.unique(out)


def angles(mesh):
    """Interior angles per triangle, shape (nt, 3), radians."""
    pts = mesh.corners()
    out = np.empty((mesh.n_triangles, 3))
    for k in range(3):
        u = pts[:, (k + 1) % 3] - pts[:, k]
        v = pts[:, (k + 2) % 3] - pts[:, k]
        dot = np.einsum("ij,ij->i", u, v)
        cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
        out[:, k] = np.arctan2(np.abs(cross), dot)
    return out


def mesh_stats(mesh):
    """Minimum angle, neighbor area ratio, valence and h bounds."""
    ang = angles(mesh)
    areas = mesh.areas
    ratio = 1.0
    for t in range(mesh.n_triangles):
        nbrs = patch(mesh, t)
        ratio = max(ratio, float(areas[t] / areas[nbrs].min()))
    valence = int(np.diff(mesh._vt_indptr).max())
    h = meshsize(mesh)
    return MeshStats(
        min_angle=float(ang.min()),
        max_neighbor_area_ratio=ratio,
        max_vertex_valence=valence,
        h_max=float(h.max()),
        h_min=float(h.min()),
    )


def shape_classes(mesh, decimals=9):
    """Distinct triangle shapes as rounded sorted angle triples."""
    triples = np.sort(angles(mesh), axis=1).round(decimals)
    return np.unique(triples, axis=0)


def check_conformity(mesh, rtol=1e-12):
    """Full conformity check: manifold edges, no hanging nodes, covering.

    Raises ``NonConforming`` on failure; returns True otherwise.  Covering
    is tested through total-area conservation against the initial domain
    area carried by every snapshot.
    """
    raw = np.stack([mesh.triangles[:, [1, 2]], mesh.triangles[:, [2, 0]],
                    mesh.triangles[:, [0, 1]]], axis=1).reshape(-1, 2)
    und = np.sort(raw, axis=1)
    edges, counts = np.unique(und, axis=0, return_counts=True)
    if counts.max() > 2:
        raise NonConforming("edge shared by more than two triangles")
    _boundary_flags_checked(mesh.vertices, edges, counts == 1)
    if np.any(mesh.areas <= 0):
        raise NonConforming("non-positive triangle area")
    total = float(mesh.areas.sum())
    if abs(total - mesh.domain_area) > rtol * mesh.domain_area:
        raise NonConforming(
            f"covering violated: area {total} vs domain {mesh.domain_area}")
    return True


# ---------------------------------------------------------------------------
# canonical domains
# ---------------------------------------------------------------------------

def unit_square():
    """Two-triangle unit square, both labeled on the shared diagonal."""
    vertices = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    triangles = [(0, 1, 2), (0, 2, 3)]
    return build_initial(vertices, triangles, ref_edges=[1, 2])


def l_shape():
    """L-shaped domain (-1,1)^2 minus the fourth quadrant, 6 triangles.

    Triangles fan around the reentrant corner at the origin; each pair
    within one unit square shares its diagonal as refinement edge.
    """
    vertices = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0),
                (-1.0, 1.0), (-1.0, 0.0), (-1.0, -1.0), (0.0, -1.0)]
    triangles = [(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5),
                 (0, 5, 6), (0, 6, 7)]
    return build_initial(vertices, triangles, ref_edges=[1, 2, 1, 2, 1, 2])


def single_triangle(corners=((0.0, 0.0), (1.0, 0.0), (0.0, 1.0)),
                    ref_edge=None):
    """One-triangle mesh; defaults to longest-edge labeling."""
    labels = None if ref_edge is None else [ref_edge]
    return build_initial(list(corners), [(0, 1, 2)], ref_edges=labels)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def write_mesh(mesh, path):
    """Write the text format: "NV NT", NV lines "x y bflag", NT lines
    "v0 v1 v2 ref_edge".  Floats use shortest round-trip decimals."""
    lines = [f"{mesh.n_vertices} {mesh.n_triangles}"]
    for (x, y), b in zip(mesh.vertices, mesh.on_boundary):
        lines.append(f"{float(x)!r} {float(y)!r} {int(b)}")
    for tri, r in zip(mesh.triangles, mesh.ref_edge):
        lines.append(f"{int(tri[0])} {int(tri[1])} {int(tri[2])} {int(r)}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path):
    """Read the text format and rebuild adjacency and boundary flags."""
    with open(path) as fh:
        tokens = fh.read().split()
    it = iter(tokens)
    nv, nt = int(next(it)), int(next(it))
    vertices = np.empty((nv, 2))
    for i in range(nv):
        vertices[i, 0] = float(next(it))
        vertices[i, 1] = float(next(it))
        next(it)  # boundary flag is derived, not trusted
    triangles = np.empty((nt, 4), dtype=np.int64)
    for i in range(nt):
        for j in range(4):
            triangles[i, j] = int(next(it))
    return build_initial(vertices, triangles)
