"""Polygonal mesh geometry, DOF enumeration and star-point sub-triangulation.

Conventions used throughout the package:

* polygon vertex loops are stored counter-clockwise,
* the boundary DOF ring of an element (vertices + edge midpoints) is
  enumerated clockwise, which makes every sub-triangle ``(s_i, y, s_{i+1})``
  positively oriented,
* all meshes are immutable after construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    pass


def _polygon_signed_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def _polygon_centroid(pts):
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * np.sum(cross)
    cx = np.sum((x + xn) * cross) / (6.0 * a)
    cy = np.sum((y + yn) * cross) / (6.0 * a)
    return np.array([cx, cy])


def _tri_area(a, b, c):
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))


@dataclass(frozen=True)
class PolyMesh:
    """Polygons, faces and the geometric quantities used by the scheme.

    ``vertex_canon`` maps every stored vertex to its canonical id; it differs
    from the identity only for periodic meshes, where vertices on paired
    boundaries share one canonical id (and hence one DOF) while each polygon
    keeps its own physical coordinates.
    """

    vertices: np.ndarray          # (nv, 2)
    polygons: list                # list of int arrays, CCW loops
    vertex_canon: np.ndarray      # (nv,) canonical vertex id
    face_vertices: np.ndarray     # (nf, 2) directed edge of the left element
    face_canon: np.ndarray        # (nf, 2) canonical vertex pair (sorted)
    face_left: np.ndarray         # (nf,)
    face_right: np.ndarray        # (nf,)  -1 on the boundary
    face_tags: list               # (nf,) '' for interior faces
    face_normal: np.ndarray       # (nf, 2) unit, from left to right
    face_length: np.ndarray       # (nf,)
    face_center: np.ndarray       # (nf, 2)
    centroid: np.ndarray          # (ne, 2)
    star_point: np.ndarray        # (ne, 2)
    area: np.ndarray              # (ne,)
    diameter: np.ndarray          # (ne,)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_elements(self):
        return len(self.polygons)

    @property
    def n_faces(self):
        return len(self.face_left)

    def boundary_faces(self):
        return np.nonzero(self.face_right < 0)[0]


def build_mesh(vertices, polygon_loops, boundary_tags=None, vertex_canon=None) -> PolyMesh:
    """Assemble a :class:`PolyMesh` from vertex coordinates and CCW loops.

    ``boundary_tags`` maps unordered vertex pairs ``(v0, v1)`` to a tag
    string; untagged boundary faces get the tag ``"boundary"``.  Tags that do
    not correspond to a boundary edge of any polygon are rejected (dangling
    face).
    """
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshError("vertices must be an (nv, 2) array")
    nv = len(vertices)
    canon = np.arange(nv) if vertex_canon is None else np.asarray(vertex_canon, dtype=int)

    polygons = []
    for e, loop in enumerate(polygon_loops):
        loop = np.asarray(loop, dtype=int)
        if len(loop) < 3 or len(np.unique(loop)) != len(loop):
            raise MeshError(f"element {e}: invalid vertex loop")
        if loop.min() < 0 or loop.max() >= nv:
            raise MeshError(f"element {e}: vertex index out of range")
        polygons.append(loop)

    ne = len(polygons)
    centroid = np.zeros((ne, 2))
    area = np.zeros(ne)
    diameter = np.zeros(ne)
    for e, loop in enumerate(polygons):
        pts = vertices[loop]
        a = _polygon_signed_area(pts)
        if not a > 0.0:
            raise MeshError(f"element {e}: degenerate or clockwise polygon (signed area {a:g})")
        area[e] = a
        centroid[e] = _polygon_centroid(pts)
        d = pts[:, None, :] - pts[None, :, :]
        diameter[e] = np.sqrt((d ** 2).sum(-1)).max()

    # star point: the centroid, with star-shapedness checked element-wise
    star_point = centroid.copy()
    for e, loop in enumerate(polygons):
        pts = vertices[loop]
        y = star_point[e]
        for k in range(len(loop)):
            # CCW loop: the fan triangle (v_k, v_{k+1}, y) must stay CCW
            if _tri_area(pts[k], pts[(k + 1) % len(loop)], y) <= 0.0:
                raise MeshError(f"element {e}: not star-shaped with respect to its centroid")

    # faces keyed on canonical vertex pairs
    edge_map = {}
    for e, loop in enumerate(polygons):
        for k in range(len(loop)):
            v0, v1 = loop[k], loop[(k + 1) % len(loop)]
            key = tuple(sorted((canon[v0], canon[v1])))
            rec = edge_map.setdefault(key, [])
            rec.append((e, v0, v1))
            if len(rec) > 2:
                raise MeshError(f"edge {key} shared by more than two elements")

    face_vertices, face_canon, face_left, face_right = [], [], [], []
    for key in sorted(edge_map):
        rec = edge_map[key]
        e, v0, v1 = rec[0]
        face_vertices.append((v0, v1))
        face_canon.append(key)
        face_left.append(e)
        face_right.append(rec[1][0] if len(rec) == 2 else -1)
    face_vertices = np.array(face_vertices, dtype=int).reshape(-1, 2)
    face_canon = np.array(face_canon, dtype=int).reshape(-1, 2)
    face_left = np.array(face_left, dtype=int)
    face_right = np.array(face_right, dtype=int)

    p0 = vertices[face_vertices[:, 0]]
    p1 = vertices[face_vertices[:, 1]]
    dxy = p1 - p0
    face_length = np.sqrt((dxy ** 2).sum(-1))
    if np.any(face_length <= 0.0):
        raise MeshError("zero-length face")
    # left element traverses (v0, v1) counter-clockwise, so outward = (dy, -dx)
    face_normal = np.stack([dxy[:, 1], -dxy[:, 0]], axis=-1) / face_length[:, None]
    face_center = 0.5 * (p0 + p1)

    tags = [""] * len(face_left)
    by_canon = {tuple(fc): i for i, fc in enumerate(face_canon)}
    if boundary_tags:
        for (v0, v1), tag in boundary_tags.items():
            key = tuple(sorted((canon[v0], canon[v1])))
            i = by_canon.get(key)
            if i is None:
                raise MeshError(f"dangling face tag on ({v0}, {v1})")
            if face_right[i] >= 0:
                raise MeshError(f"tag on interior face ({v0}, {v1})")
            tags[i] = tag
    for i in np.nonzero(face_right < 0)[0]:
        if not tags[i]:
            tags[i] = "boundary"

    return PolyMesh(
        vertices=vertices, polygons=polygons, vertex_canon=canon,
        face_vertices=face_vertices, face_canon=face_canon,
        face_left=face_left, face_right=face_right, face_tags=tags,
        face_normal=face_normal, face_length=face_length, face_center=face_center,
        centroid=centroid, star_point=star_point, area=area, diameter=diameter,
    )


def generate_structured(nx, ny, domain=((0.0, 1.0), (0.0, 1.0)), kind="quad",
                        periodic=False) -> PolyMesh:
    """Structured quad or criss-cross triangle grid on a rectangle.

    ``domain`` is ``((x0, x1), (y0, y1))``.  With ``periodic=True`` opposite
    boundary vertices share canonical ids, which removes all boundary faces.
    """
    if nx < 1 or ny < 1:
        raise MeshError("grid must have at least one cell per direction")
    (x0, x1), (y0, y1) = domain
    if not (x1 > x0 and y1 > y0):
        raise MeshError("empty domain")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.stack([X.ravel(), Y.ravel()], axis=-1)

    def vid(i, j):
        return i * (ny + 1) + j

    loops = []
    for i in range(nx):
        for j in range(ny):
            q = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
            if kind == "quad":
                loops.append(q)
            elif kind == "tri":
                loops.append((q[0], q[1], q[2]))
                loops.append((q[0], q[2], q[3]))
            else:
                raise MeshError(f"unknown grid kind {kind!r}")

    canon = None
    tags = {}
    if periodic:
        canon = np.arange(len(vertices))
        for j in range(ny + 1):
            canon[vid(nx, j)] = canon[vid(0, j)]
        for i in range(nx + 1):
            canon[vid(i, ny)] = canon[vid(i, 0)]
        canon[vid(nx, ny)] = canon[vid(0, 0)]
    else:
        for j in range(ny):
            tags[(vid(0, j), vid(0, j + 1))] = "left"
            tags[(vid(nx, j), vid(nx, j + 1))] = "right"
        for i in range(nx):
            tags[(vid(i, 0), vid(i + 1, 0))] = "bottom"
            tags[(vid(i, ny), vid(i + 1, ny))] = "top"

    return build_mesh(vertices, loops, boundary_tags=tags, vertex_canon=canon)


def write_mesh_file(mesh: PolyMesh, path):
    """Plain-text format: counts header, vertices, loops, boundary tags."""
    bnd = mesh.boundary_faces()
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_elements} {len(bnd)}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g}\n")
        for loop in mesh.polygons:
            fh.write(f"{len(loop)} " + " ".join(str(v) for v in loop) + "\n")
        for i in bnd:
            v0, v1 = mesh.face_vertices[i]
            fh.write(f"{v0} {v1} {mesh.face_tags[i]}\n")


def read_mesh_file(path) -> PolyMesh:
    with open(path) as fh:
        tokens = fh.read().split("\n")
    lines = [ln for ln in tokens if ln.strip()]
    nv, ne, nf = (int(t) for t in lines[0].split())
    vertices = np.array([[float(t) for t in lines[1 + i].split()] for i in range(nv)])
    loops = []
    for i in range(ne):
        parts = lines[1 + nv + i].split()
        k = int(parts[0])
        loops.append([int(t) for t in parts[1:1 + k]])
    tags = {}
    for i in range(nf):
        parts = lines[1 + nv + ne + i].split()
        tags[(int(parts[0]), int(parts[1]))] = parts[2] if len(parts) > 2 else "boundary"
    return build_mesh(vertices, loops, boundary_tags=tags)


@dataclass(frozen=True)
class DofLayout:
    """Global enumeration of point DOFs (vertices + edge midpoints).

    Boundary rings run clockwise per element and start at the element's
    first loop vertex; even ring slots are vertices, odd slots midpoints.
    """

    n_point_dofs: int
    n_elements: int
    rings: list                   # per element: (2*Nv,) global point-dof ids, clockwise
    ring_pos: list                # per element: (2*Nv, 2) element-local coordinates
    dof_pos: np.ndarray           # (n_point_dofs, 2) canonical position
    face_dofs: np.ndarray         # (nf, 3) dofs of (v0, midpoint, v1)
    dof_elements: list            # per dof: element ids, ascending
    boundary_dof_normal: np.ndarray  # (n_point_dofs, 2) length-weighted outward sum, 0 inside
    is_boundary_dof: np.ndarray   # (n_point_dofs,) bool


def enumerate_dofs(mesh: PolyMesh) -> DofLayout:
    canon = mesh.vertex_canon
    used = np.unique(canon[np.concatenate([np.asarray(l) for l in mesh.polygons])])
    vertex_dof = -np.ones(mesh.n_vertices, dtype=int)
    vertex_dof[used] = np.arange(len(used))
    vertex_dof = vertex_dof[canon]
    n_vdofs = len(used)

    edge_dof = {}
    for fc in mesh.face_canon:
        key = tuple(fc)
        if key not in edge_dof:
            edge_dof[key] = n_vdofs + len(edge_dof)
    n_dofs = n_vdofs + len(edge_dof)

    dof_pos = np.zeros((n_dofs, 2))
    seen = np.zeros(n_dofs, dtype=bool)
    rings, ring_pos = [], []
    for loop in mesh.polygons:
        k = len(loop)
        cw = [loop[0]] + [loop[k - 1 - j] for j in range(k - 1)]
        ring, pos = [], []
        for j in range(k):
            va, vb = cw[j], cw[(j + 1) % k]
            key = tuple(sorted((canon[va], canon[vb])))
            ring.append(vertex_dof[va])
            pos.append(mesh.vertices[va])
            ring.append(edge_dof[key])
            pos.append(0.5 * (mesh.vertices[va] + mesh.vertices[vb]))
        ring = np.array(ring, dtype=int)
        pos = np.array(pos)
        rings.append(ring)
        ring_pos.append(pos)
        fresh = ~seen[ring]
        dof_pos[ring[fresh]] = pos[fresh]
        seen[ring[fresh]] = True

    face_dofs = np.zeros((mesh.n_faces, 3), dtype=int)
    for i in range(mesh.n_faces):
        v0, v1 = mesh.face_vertices[i]
        face_dofs[i] = (vertex_dof[v0], edge_dof[tuple(mesh.face_canon[i])], vertex_dof[v1])

    dof_elements = [[] for _ in range(n_dofs)]
    for e, ring in enumerate(rings):
        for d in np.unique(ring):
            dof_elements[d].append(e)
    dof_elements = [np.array(v, dtype=int) for v in dof_elements]

    bnd_normal = np.zeros((n_dofs, 2))
    for i in mesh.boundary_faces():
        w = mesh.face_length[i] * mesh.face_normal[i]
        for d in face_dofs[i]:
            bnd_normal[d] += w
    is_bnd = (bnd_normal ** 2).sum(-1) > 0.0

    return DofLayout(
        n_point_dofs=n_dofs, n_elements=mesh.n_elements, rings=rings,
        ring_pos=ring_pos, dof_pos=dof_pos, face_dofs=face_dofs,
        dof_elements=dof_elements, boundary_dof_normal=bnd_normal,
        is_boundary_dof=is_bnd,
    )


@dataclass(frozen=True)
class SubTriangulation:
    """Star-point fan of each element plus the dual areas |C_sigma|.

    ``spoke_normal[e][i]`` is the normal of the interior edge ``[y_E, s_i]``
    scaled by its length and oriented outward with respect to the triangle
    ``(s_i, y_E, s_{i+1})``; the opposite orientation (as seen from triangle
    ``(s_{i-1}, y_E, s_i)``) is its exact negation.
    """

    tri_area: list                # per element: (R,) area of (s_i, y, s_{i+1})
    spoke_normal: list            # per element: (R, 2)
    spoke_mid: list               # per element: (R, 2) midpoint of [y, s_i]
    c_sigma: np.ndarray           # (n_point_dofs,) dual areas


def subtriangulate(mesh: PolyMesh, layout: DofLayout) -> SubTriangulation:
    tri_area, spoke_normal, spoke_mid = [], [], []
    c_sigma = np.zeros(layout.n_point_dofs)
    for e in range(mesh.n_elements):
        pos = layout.ring_pos[e]
        y = mesh.star_point[e]
        R = len(pos)
        nxt = np.roll(pos, -1, axis=0)
        ta = 0.5 * ((y[0] - pos[:, 0]) * (nxt[:, 1] - pos[:, 1])
                    - (nxt[:, 0] - pos[:, 0]) * (y[1] - pos[:, 1]))
        if np.any(ta <= 0.0):
            raise MeshError(f"element {e}: non-positive sub-triangle area")
        if abs(ta.sum() - mesh.area[e]) > 1e-12 * mesh.area[e]:
            raise MeshError(f"element {e}: sub-triangle areas do not add up")
        # spoke [s_i -> y] traversed along the CCW boundary of (s_i, y, s_{i+1})
        d = y[None, :] - pos
        nrm = np.stack([d[:, 1], -d[:, 0]], axis=-1)
        tri_area.append(ta)
        spoke_normal.append(nrm)
        spoke_mid.append(0.5 * (pos + y[None, :]))
        contrib = (ta + np.roll(ta, 1)) / 3.0
        np.add.at(c_sigma, layout.rings[e], contrib)
    return SubTriangulation(tri_area=tri_area, spoke_normal=spoke_normal,
                            spoke_mid=spoke_mid, c_sigma=c_sigma)


@dataclass(frozen=True)
class ElementBlock:
    """Homogeneous pack of all elements with the same ring length."""

    elements: np.ndarray      # (nE,)
    ring_dofs: np.ndarray     # (nE, R)
    ring_pos: np.ndarray      # (nE, R, 2)
    star: np.ndarray          # (nE, 2)
    area: np.ndarray          # (nE,)
    diameter: np.ndarray      # (nE,)
    tri_area: np.ndarray      # (nE, R)
    spoke_normal: np.ndarray  # (nE, R, 2)
    spoke_len: np.ndarray     # (nE, R)
    spoke_hat: np.ndarray     # (nE, R, 2) unit spoke normals
    spoke_mid: np.ndarray     # (nE, R, 2)
    n_sigma: np.ndarray       # (nE, R, 2) boundary splitting normal at s_i
    c_sigma: np.ndarray       # (nE, R) dual areas gathered per slot
    inv_six_c: np.ndarray     # (nE, R) 1 / (6 |C_sigma|)

    @property
    def ring_len(self):
        return self.ring_dofs.shape[1]


class StaticScatter:
    """Deterministic segment-sum of per-slot values into global DOF rows.

    The index set is static per mesh, so the permutation and segment starts
    are computed once; ``add_rows`` then costs one take plus one reduceat
    regardless of the number of value columns.
    """

    def __init__(self, idx, n):
        idx = np.asarray(idx, dtype=int).ravel()
        self.n = n
        self.perm = np.argsort(idx, kind="stable")
        sorted_idx = idx[self.perm]
        starts = np.nonzero(np.r_[True, sorted_idx[1:] != sorted_idx[:-1]])[0]
        self.starts = starts
        self.targets = sorted_idx[starts]

    def add_rows(self, out, vals):
        """out[idx[k]] += vals[k] for row blocks of any trailing shape."""
        flat = vals.reshape(len(self.perm), -1)
        summed = np.add.reduceat(flat[self.perm], self.starts, axis=0)
        out_view = out.reshape(self.n, -1)
        out_view[self.targets] += summed
        return out


def build_blocks(mesh: PolyMesh, layout: DofLayout, subtri: SubTriangulation):
    """Group elements by ring length into vectorizable blocks."""
    sizes = {}
    for e, ring in enumerate(layout.rings):
        sizes.setdefault(len(ring), []).append(e)
    blocks = []
    for R in sorted(sizes):
        els = np.array(sizes[R], dtype=int)
        ring_dofs = np.stack([layout.rings[e] for e in els])
        ring_pos = np.stack([layout.ring_pos[e] for e in els])
        tri_area = np.stack([subtri.tri_area[e] for e in els])
        spoke_n = np.stack([subtri.spoke_normal[e] for e in els])
        spoke_m = np.stack([subtri.spoke_mid[e] for e in els])
        # clockwise ring: outward boundary normal of segment (a -> b) is (-dy, dx)
        prv = np.roll(ring_pos, 1, axis=1)
        nxt = np.roll(ring_pos, -1, axis=1)
        seg_in = ring_pos - prv
        seg_out = nxt - ring_pos
        n_sigma = np.stack([-(seg_in[..., 1] + seg_out[..., 1]),
                            seg_in[..., 0] + seg_out[..., 0]], axis=-1)
        spoke_len = np.sqrt((spoke_n ** 2).sum(-1))
        c_slot = subtri.c_sigma[ring_dofs]
        blocks.append(ElementBlock(
            elements=els, ring_dofs=ring_dofs, ring_pos=ring_pos,
            star=mesh.star_point[els], area=mesh.area[els],
            diameter=mesh.diameter[els], tri_area=tri_area,
            spoke_normal=spoke_n, spoke_len=spoke_len,
            spoke_hat=spoke_n / spoke_len[..., None], spoke_mid=spoke_m,
            n_sigma=n_sigma, c_sigma=c_slot, inv_six_c=1.0 / (6.0 * c_slot),
        ))
    return blocks
