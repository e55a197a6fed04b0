"""Tetrahedral meshes of the three-region device stack.

A device occupies an axis-aligned box (or any imported tetrahedralization)
partitioned into a bottom conductor, an active transport layer and a top
conductor stacked along z. Exterior surfaces carry one of the labels
``SIGMA_B`` (bottom contact), ``SIGMA_T`` (top contact), ``SIGMA_LAT``
(lateral wall); the interior region interfaces carry ``GAMMA_B`` and
``GAMMA_T``. When an outer region has zero thickness the corresponding
interface coincides with the contact surface and ``faces_for`` resolves the
gamma label to the contact faces.

Besides topology, the mesh precomputes everything the P1 assembly needs:
element volumes, barycentric gradients, the unique edge list and the
per-element edge stiffness weights (the cotangent-type coefficients whose
edge-wise sum reproduces the exact P1 Laplacian).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

log = logging.getLogger("tecsim")

# Local vertex pairs of the six edges of a tetrahedron, and the vertex
# triples of its four faces (face k is opposite vertex k).
LOCAL_EDGES = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
LOCAL_FACES = np.array([(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)])


class Region(IntEnum):
    BOTTOM = 0
    ACTIVE = 1
    TOP = 2


class Surface(IntEnum):
    SIGMA_B = 0      # exterior bottom contact
    SIGMA_T = 1      # exterior top contact
    SIGMA_LAT = 2    # exterior lateral wall
    GAMMA_B = 3      # bottom/active interface
    GAMMA_T = 4      # active/top interface
    SIGMA_LAT_A = 5  # lateral faces touching active elements


REGION_NAMES = {Region.BOTTOM: "bottom", Region.ACTIVE: "active", Region.TOP: "top"}
SURFACE_NAMES = {
    Surface.SIGMA_B: "sigma_b",
    Surface.SIGMA_T: "sigma_t",
    Surface.SIGMA_LAT: "sigma_lat",
    Surface.GAMMA_B: "gamma_b",
    Surface.GAMMA_T: "gamma_t",
    Surface.SIGMA_LAT_A: "sigma_lat_a",
}
_REGION_BY_NAME = {v: k for k, v in REGION_NAMES.items()}
_SURFACE_BY_NAME = {v: k for k, v in SURFACE_NAMES.items()}


class MeshError(ValueError):
    """Invalid mesh topology or geometry."""


class MeshFormatError(MeshError):
    """Malformed mesh file; the message carries the offending line number."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _face_keys(faces: np.ndarray, num_vertices: int) -> np.ndarray:
    f = np.sort(faces.astype(np.int64), axis=1)
    n = np.int64(num_vertices)
    return (f[:, 0] * n + f[:, 1]) * n + f[:, 2]


@dataclass(frozen=True)
class MeshGeometry:
    """Per-element P1 data and the global edge structure of a mesh."""

    volumes: np.ndarray            # (nt,) element volumes [m^3]
    grads: np.ndarray              # (nt, 4, 3) gradients of barycentric coords
    tet_edge_weights: np.ndarray   # (nt, 6) element share of each edge weight [m]
    edges: np.ndarray              # (ne, 2) vertex pairs, lo < hi
    tet_edges: np.ndarray          # (nt, 6) global edge index per local edge
    edge_lengths: np.ndarray       # (ne,)
    edge_weights: np.ndarray       # (ne,) summed stiffness weights
    lumped_volumes: np.ndarray     # (nv,) quarter-volume vertex shares


@dataclass(frozen=True)
class EdgeGeometry:
    """Edge coefficients of the P1 discretization.

    ``weights[e]`` is the coefficient coupling the two end nodes of edge e in
    the assembled Laplace stiffness matrix; negative values flag edges on
    which the discrete monotonicity guarantee of the exponentially fitted
    scheme is lost.
    """

    edges: np.ndarray
    lengths: np.ndarray
    weights: np.ndarray
    lumped_volumes: np.ndarray
    negative_edge_count: int


@dataclass(frozen=True)
class ActiveSubmesh:
    """The active-region tetrahedra with their own contiguous numbering."""

    tet_ids: np.ndarray        # global tet indices
    node_ids: np.ndarray       # global vertex indices (sorted)
    tets_local: np.ndarray     # (nt_a, 4) in local numbering
    global_to_local: np.ndarray  # (nv,) local index or -1

    @property
    def num_nodes(self) -> int:
        return len(self.node_ids)


class Mesh:
    """Immutable labeled tetrahedral mesh.

    Construction validates every invariant: positive element volumes after
    consistent orientation, conformity (no face shared by more than two
    elements), full labeling of the exterior boundary, and the presence of
    an active region. Interface faces between regions are derived from
    element adjacency, not read from input.
    """

    def __init__(self, vertices, tets, tet_regions, boundary_faces, boundary_labels):
        vertices = np.ascontiguousarray(vertices, dtype=float)
        tets = np.ascontiguousarray(tets, dtype=np.int64)
        tet_regions = np.ascontiguousarray(tet_regions, dtype=np.int8)
        boundary_faces = np.ascontiguousarray(boundary_faces, dtype=np.int64).reshape(-1, 3)
        boundary_labels = np.ascontiguousarray(boundary_labels, dtype=np.int8)

        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise MeshError("vertices must be an (n, 3) array")
        if tets.ndim != 2 or tets.shape[1] != 4:
            raise MeshError("tetrahedra must be an (n, 4) array")
        if len(tets) == 0:
            raise MeshError("mesh has no tetrahedra")
        if tets.min(initial=0) < 0 or tets.max(initial=-1) >= len(vertices):
            bad = int(np.nonzero((tets < 0) | (tets >= len(vertices)))[0][0] // 4)
            raise MeshError(f"tetrahedron {bad} references a vertex index out of range")
        if len(tet_regions) != len(tets):
            raise MeshError("one region label per tetrahedron is required")
        if not np.isin(tet_regions, [int(r) for r in Region]).all():
            raise MeshError("unknown region label")
        if not (tet_regions == Region.ACTIVE).any():
            raise MeshError("mesh must contain an active region")
        if np.any(np.sort(tets, axis=1)[:, :-1] == np.sort(tets, axis=1)[:, 1:]):
            bad = int(np.nonzero(np.any(
                np.sort(tets, axis=1)[:, :-1] == np.sort(tets, axis=1)[:, 1:], axis=1))[0][0])
            raise MeshError(f"tetrahedron {bad} repeats a vertex")

        # Consistent orientation: flip any negatively oriented element.
        vol6 = self._signed_volumes6(vertices, tets)
        scale = float(np.abs(vertices).max() or 1.0)
        degenerate = np.abs(vol6) <= 6.0 * 1e-14 * scale**3
        if degenerate.any():
            raise MeshError(
                f"tetrahedron {int(np.nonzero(degenerate)[0][0])} has zero volume")
        flip = vol6 < 0
        if flip.any():
            tets = tets.copy()
            tets[flip] = tets[flip][:, [0, 1, 3, 2]]

        self.vertices = _freeze(vertices)
        self.tets = _freeze(tets)
        self.tet_regions = _freeze(tet_regions)

        self._classify_faces(boundary_faces, boundary_labels)
        self._geometry = None
        self._active = None
        self._centroids = None

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def _signed_volumes6(vertices, tets):
        v = vertices[tets]
        e = v[:, 1:] - v[:, :1]
        return np.einsum("ti,ti->t", e[:, 0], np.cross(e[:, 1], e[:, 2]))

    def _classify_faces(self, boundary_faces, boundary_labels):
        nv, nt = len(self.vertices), len(self.tets)
        all_faces = self.tets[:, LOCAL_FACES].reshape(-1, 3)
        keys = _face_keys(all_faces, nv)
        order = np.argsort(keys, kind="stable")
        sorted_keys = keys[order]
        group_start = np.flatnonzero(
            np.concatenate(([True], sorted_keys[1:] != sorted_keys[:-1])))
        counts = np.diff(np.append(group_start, len(sorted_keys)))
        if (counts > 2).any():
            g = group_start[counts > 2][0]
            owners = order[g:g + 3] // 4
            raise MeshError(
                "non-conforming mesh: a face is shared by more than two "
                f"tetrahedra (tets {sorted(int(t) for t in owners)})")

        ext_pos = order[group_start[counts == 1]]
        ext_faces = all_faces[ext_pos]
        ext_keys = keys[ext_pos]
        ext_tets = ext_pos // 4

        # Match supplied labels to the computed exterior faces.
        if len(boundary_labels) != len(boundary_faces):
            raise MeshError("one label per boundary face is required")
        if len(boundary_faces) and (
                boundary_faces.min() < 0 or boundary_faces.max() >= nv):
            raise MeshError("boundary face references a vertex index out of range")
        sup_keys = _face_keys(boundary_faces, nv) if len(boundary_faces) else np.empty(0, np.int64)
        if len(np.unique(sup_keys)) != len(sup_keys):
            raise MeshError("duplicate boundary face in input")

        ext_order = np.argsort(ext_keys)
        pos = np.searchsorted(ext_keys[ext_order], sup_keys)
        sigma_mask = np.isin(boundary_labels,
                             [Surface.SIGMA_B, Surface.SIGMA_T, Surface.SIGMA_LAT])
        found = (pos < len(ext_keys))
        found[found] &= ext_keys[ext_order][pos[found]] == sup_keys[found]
        if (sigma_mask & ~found).any():
            bad = int(np.nonzero(sigma_mask & ~found)[0][0])
            raise MeshError(
                f"boundary face {boundary_faces[bad].tolist()} is not an "
                "exterior face of the tetrahedralization")

        labels = np.full(len(ext_faces), -1, dtype=np.int8)
        labels[ext_order[pos[sigma_mask]]] = boundary_labels[sigma_mask]
        if (labels < 0).any():
            miss = ext_faces[labels < 0][0]
            raise MeshError(f"exterior face {miss.tolist()} carries no surface label")

        self.boundary_faces = _freeze(ext_faces)
        self.boundary_labels = _freeze(labels)
        self.boundary_face_tets = _freeze(ext_tets)

        # Region interfaces from element adjacency.
        int_groups = group_start[counts == 2]
        ta = order[int_groups] // 4
        tb = order[int_groups + 1] // 4
        ra, rb = self.tet_regions[ta], self.tet_regions[tb]
        differ = ra != rb
        ta, tb, ra, rb = ta[differ], tb[differ], ra[differ], rb[differ]
        lo = np.minimum(ra, rb)
        hi = np.maximum(ra, rb)
        if ((lo == Region.BOTTOM) & (hi == Region.TOP)).any():
            raise MeshError("bottom and top regions must not touch")
        self.interface_faces = _freeze(all_faces[order[int_groups][differ]].copy())
        self.interface_labels = _freeze(np.where(
            lo == Region.BOTTOM, Surface.GAMMA_B, Surface.GAMMA_T).astype(np.int8))
        self.interface_active_tets = _freeze(
            np.where(ra == Region.ACTIVE, ta, tb).astype(np.int64))

        # Validate supplied gamma faces (optional in input) against adjacency.
        gamma_mask = ~sigma_mask
        if gamma_mask.any():
            comp_keys = _face_keys(self.interface_faces, nv)
            comp_sorted = np.sort(comp_keys)
            for idx in np.nonzero(gamma_mask)[0]:
                k = sup_keys[idx]
                j = np.searchsorted(comp_sorted, k)
                if j >= len(comp_sorted) or comp_sorted[j] != k:
                    raise MeshError(
                        f"face {boundary_faces[idx].tolist()} labeled "
                        f"{SURFACE_NAMES[Surface(int(boundary_labels[idx]))]} is not a "
                        "region interface")

    # -- basic queries ---------------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_tets(self) -> int:
        return len(self.tets)

    @property
    def tet_centroids(self) -> np.ndarray:
        if self._centroids is None:
            self._centroids = _freeze(self.vertices[self.tets].mean(axis=1))
        return self._centroids

    def region_empty(self, region: Region) -> bool:
        return not (self.tet_regions == region).any()

    @property
    def geometry(self) -> MeshGeometry:
        if self._geometry is None:
            self._geometry = self._compute_geometry()
        return self._geometry

    def _compute_geometry(self) -> MeshGeometry:
        v = self.vertices[self.tets]
        e = v[:, 1:] - v[:, :1]
        vol = np.einsum("ti,ti->t", e[:, 0], np.cross(e[:, 1], e[:, 2])) / 6.0
        inv = np.linalg.inv(e)                      # (nt, 3, 3)
        grads = np.empty((self.num_tets, 4, 3))
        grads[:, 1:] = np.swapaxes(inv, 1, 2)
        grads[:, 0] = -grads[:, 1:].sum(axis=1)

        i, j = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
        tet_w = -vol[:, None] * np.einsum("tkd,tkd->tk", grads[:, i], grads[:, j])

        pairs = np.sort(self.tets[:, LOCAL_EDGES], axis=2).reshape(-1, 2)
        ekeys = pairs[:, 0] * np.int64(self.num_vertices) + pairs[:, 1]
        uniq, inverse = np.unique(ekeys, return_inverse=True)
        edges = np.column_stack((uniq // self.num_vertices, uniq % self.num_vertices))
        tet_edges = inverse.reshape(-1, 6)
        lengths = np.linalg.norm(
            self.vertices[edges[:, 1]] - self.vertices[edges[:, 0]], axis=1)
        eweights = np.bincount(tet_edges.ravel(), weights=tet_w.ravel(),
                               minlength=len(edges))
        lumped = np.bincount(self.tets.ravel(),
                             weights=np.repeat(vol / 4.0, 4),
                             minlength=self.num_vertices)
        return MeshGeometry(
            volumes=_freeze(vol), grads=_freeze(grads),
            tet_edge_weights=_freeze(tet_w), edges=_freeze(edges),
            tet_edges=_freeze(tet_edges), edge_lengths=_freeze(lengths),
            edge_weights=_freeze(eweights), lumped_volumes=_freeze(lumped))

    @property
    def total_volume(self) -> float:
        return float(self.geometry.volumes.sum())

    def faces_for(self, surface: Surface) -> np.ndarray:
        """Vertex triples of the faces carrying ``surface``.

        ``GAMMA_B``/``GAMMA_T`` resolve to the corresponding contact faces
        when the adjacent outer region has zero thickness, and
        ``SIGMA_LAT_A`` selects the lateral faces owned by active elements.
        """
        if surface == Surface.SIGMA_LAT_A:
            lat = self.boundary_labels == Surface.SIGMA_LAT
            owners = self.boundary_face_tets[lat]
            return self.boundary_faces[lat][self.tet_regions[owners] == Region.ACTIVE]
        if surface in (Surface.GAMMA_B, Surface.GAMMA_T):
            region = Region.BOTTOM if surface == Surface.GAMMA_B else Region.TOP
            if self.region_empty(region):
                sigma = Surface.SIGMA_B if surface == Surface.GAMMA_B else Surface.SIGMA_T
                return self.boundary_faces[self.boundary_labels == sigma]
            return self.interface_faces[self.interface_labels == surface]
        return self.boundary_faces[self.boundary_labels == surface]

    @property
    def active_submesh(self) -> ActiveSubmesh:
        if self._active is None:
            tet_ids = np.flatnonzero(self.tet_regions == Region.ACTIVE)
            node_ids = np.unique(self.tets[tet_ids])
            g2l = np.full(self.num_vertices, -1, dtype=np.int64)
            g2l[node_ids] = np.arange(len(node_ids))
            self._active = ActiveSubmesh(
                tet_ids=_freeze(tet_ids), node_ids=_freeze(node_ids),
                tets_local=_freeze(g2l[self.tets[tet_ids]]),
                global_to_local=_freeze(g2l))
        return self._active

    def face_areas(self, faces: np.ndarray) -> np.ndarray:
        p = self.vertices[faces]
        return 0.5 * np.linalg.norm(
            np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)


def compute_edge_geometry(mesh: Mesh) -> EdgeGeometry:
    """Edge lengths, stiffness weights and lumped vertex volumes of ``mesh``.

    Edges with a negative weight violate the precondition of the discrete
    monotonicity guarantee; they are counted and reported with a warning,
    but the run continues (the guarantee is conditional, not mandatory).
    """
    g = mesh.geometry
    negative = int(np.count_nonzero(g.edge_weights < -1e-14 * max(
        1.0, float(np.abs(g.edge_weights).max(initial=0.0)))))
    if negative:
        log.warning(
            "%d of %d edges have negative stiffness weights; the discrete "
            "nonnegativity guarantee does not hold on this mesh",
            negative, len(g.edges))
    return EdgeGeometry(edges=g.edges, lengths=g.edge_lengths,
                        weights=g.edge_weights, lumped_volumes=g.lumped_volumes,
                        negative_edge_count=negative)


# -- box meshes ----------------------------------------------------------------

# Vertex orderings of the six tetrahedra subdividing one grid cell; all six
# share the cell diagonal (0,0,0)-(1,1,1), so neighboring cells tile
# conformingly and every element has nonobtuse edge pairs (nonnegative edge
# weights) for any box aspect ratio.
_KUHN_PATHS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]


def build_box_mesh(extents, divisions, layer_breaks=()) -> Mesh:
    """Structured tetrahedral mesh of an axis-aligned box.

    ``extents`` are the box side lengths in meters, ``divisions`` the number
    of grid cells per axis. ``layer_breaks`` is empty (whole box active) or
    two z planes separating the bottom conductor, the active layer and the
    top conductor; each break must coincide with a grid plane, and a break
    at 0 or at the z extent makes the corresponding region empty.
    """
    extents = [float(x) for x in extents]
    divisions = [int(d) for d in divisions]
    if len(extents) != 3 or any(x <= 0 for x in extents):
        raise MeshError(f"extents must be three positive lengths, got {extents}")
    if len(divisions) != 3 or any(d <= 0 for d in divisions):
        raise MeshError(f"divisions must be three positive integers, got {divisions}")
    lx, ly, lz = extents
    nx, ny, nz = divisions
    dz = lz / nz

    breaks = [float(b) for b in layer_breaks]
    if len(breaks) not in (0, 2):
        raise MeshError("layer_breaks must be empty or two z values")
    if breaks:
        b1, b2 = breaks
        if not (0.0 <= b1 < b2 <= lz):
            raise MeshError(
                f"layer breaks must satisfy 0 <= b1 < b2 <= {lz}, got {breaks}")
        k1, k2 = round(b1 / dz), round(b2 / dz)
        for b, k in ((b1, k1), (b2, k2)):
            if abs(b - k * dz) > 1e-6 * dz:
                raise MeshError(
                    f"layer break {b} does not lie on a grid plane "
                    f"(nearest plane {k * dz}, spacing {dz})")
    else:
        k1, k2 = 0, nz

    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    zs = np.linspace(0.0, lz, nz + 1)
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    vertices = np.column_stack((gx.ravel(), gy.ravel(), gz.ravel()))

    def vid(ix, iy, iz):
        return (ix * (ny + 1) + iy) * (nz + 1) + iz

    ci, cj, ck = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz),
                             indexing="ij")
    ci, cj, ck = ci.ravel(), cj.ravel(), ck.ravel()
    corner = {}
    for ox in (0, 1):
        for oy in (0, 1):
            for oz in (0, 1):
                corner[(ox, oy, oz)] = vid(ci + ox, cj + oy, ck + oz)

    tet_list = []
    for path in _KUHN_PATHS:
        offs = [(0, 0, 0)]
        cur = [0, 0, 0]
        for axis in path:
            cur = cur.copy()
            cur[axis] = 1
            offs.append(tuple(cur))
        tet_list.append(np.column_stack([corner[o] for o in offs]))
    tets = np.concatenate(tet_list)

    cell_layer = np.where(ck < k1, Region.BOTTOM,
                          np.where(ck < k2, Region.ACTIVE, Region.TOP))
    regions = np.concatenate([cell_layer] * 6).astype(np.int8)

    mesh_faces, mesh_labels = _box_exterior_faces(vertices, tets, lz)
    return Mesh(vertices, tets, regions, mesh_faces, mesh_labels)


def _box_exterior_faces(vertices, tets, lz):
    """Label the exterior faces of a box tetrahedralization by position."""
    all_faces = tets[:, LOCAL_FACES].reshape(-1, 3)
    keys = _face_keys(all_faces, len(vertices))
    uniq, counts = np.unique(keys, return_counts=True)
    ext_keys = uniq[counts == 1]
    order = np.argsort(keys, kind="stable")
    pos = np.searchsorted(keys[order], ext_keys)
    faces = all_faces[order[pos]]
    z = vertices[faces][:, :, 2]
    tol = 1e-9 * lz
    labels = np.where((z < tol).all(axis=1), Surface.SIGMA_B,
                      np.where((z > lz - tol).all(axis=1), Surface.SIGMA_T,
                               Surface.SIGMA_LAT)).astype(np.int8)
    return faces, labels


# -- mesh file I/O ---------------------------------------------------------------

def read_mesh_file(path) -> Mesh:
    """Load a mesh from the plain-text format (header ``tetmesh 1``).

    The file lists vertices, labeled tetrahedra and labeled boundary faces;
    interface faces may be listed (they are validated against region
    adjacency) or omitted (they are derived). Errors carry line numbers.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    idx = 0

    def next_line():
        nonlocal idx
        while idx < len(lines):
            idx += 1
            stripped = lines[idx - 1].strip()
            if stripped and not stripped.startswith("#"):
                return idx, stripped
        raise MeshFormatError(f"line {len(lines) + 1}: unexpected end of file")

    lineno, header = next_line()
    if header.split() != ["tetmesh", "1"]:
        raise MeshFormatError(f"line {lineno}: expected header 'tetmesh 1', got {header!r}")

    def read_count(what):
        lineno, text = next_line()
        try:
            n = int(text)
        except ValueError:
            raise MeshFormatError(f"line {lineno}: expected {what} count, got {text!r}") from None
        if n < 0:
            raise MeshFormatError(f"line {lineno}: negative {what} count")
        return n

    nv = read_count("vertex")
    vertices = np.empty((nv, 3))
    for i in range(nv):
        lineno, text = next_line()
        parts = text.split()
        if len(parts) != 3:
            raise MeshFormatError(f"line {lineno}: expected 3 coordinates, got {len(parts)}")
        try:
            vertices[i] = [float(p) for p in parts]
        except ValueError:
            raise MeshFormatError(f"line {lineno}: invalid coordinate in {text!r}") from None

    nt = read_count("tetrahedron")
    tets = np.empty((nt, 4), dtype=np.int64)
    regions = np.empty(nt, dtype=np.int8)
    for i in range(nt):
        lineno, text = next_line()
        parts = text.split()
        if len(parts) != 5:
            raise MeshFormatError(
                f"line {lineno}: expected 4 vertex indices and a region name")
        try:
            tets[i] = [int(p) for p in parts[:4]]
        except ValueError:
            raise MeshFormatError(f"line {lineno}: invalid vertex index in {text!r}") from None
        if parts[4] not in _REGION_BY_NAME:
            raise MeshFormatError(
                f"line {lineno}: unknown region {parts[4]!r} "
                f"(expected one of {sorted(_REGION_BY_NAME)})")
        regions[i] = _REGION_BY_NAME[parts[4]]
        if (tets[i] < 0).any() or (tets[i] >= nv).any():
            raise MeshFormatError(
                f"line {lineno}: tetrahedron {i} references a vertex index out of range")

    nbf = read_count("boundary face")
    faces = np.empty((nbf, 3), dtype=np.int64)
    labels = np.empty(nbf, dtype=np.int8)
    for i in range(nbf):
        lineno, text = next_line()
        parts = text.split()
        if len(parts) != 4:
            raise MeshFormatError(
                f"line {lineno}: expected 3 vertex indices and a surface label")
        try:
            faces[i] = [int(p) for p in parts[:3]]
        except ValueError:
            raise MeshFormatError(f"line {lineno}: invalid vertex index in {text!r}") from None
        name = parts[3]
        if name not in _SURFACE_BY_NAME or name == "sigma_lat_a":
            raise MeshFormatError(
                f"line {lineno}: unknown surface label {name!r}")
        labels[i] = _SURFACE_BY_NAME[name]
        if (faces[i] < 0).any() or (faces[i] >= nv).any():
            raise MeshFormatError(
                f"line {lineno}: face references a vertex index out of range")

    try:
        return Mesh(vertices, tets, regions, faces, labels)
    except MeshFormatError:
        raise
    except MeshError as exc:
        raise MeshError(f"{path}: {exc}") from exc


def write_mesh_file(mesh: Mesh, path) -> None:
    """Write ``mesh`` in the plain-text format, interface faces included."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("tetmesh 1\n")
        fh.write(f"{mesh.num_vertices}\n")
        for x, y, z in mesh.vertices:
            fh.write(f"{x!r} {y!r} {z!r}\n")
        fh.write(f"{mesh.num_tets}\n")
        for tet, region in zip(mesh.tets, mesh.tet_regions):
            name = REGION_NAMES[Region(int(region))]
            fh.write(f"{tet[0]} {tet[1]} {tet[2]} {tet[3]} {name}\n")
        nbf = len(mesh.boundary_faces) + len(mesh.interface_faces)
        fh.write(f"{nbf}\n")
        for group, labels in ((mesh.boundary_faces, mesh.boundary_labels),
                              (mesh.interface_faces, mesh.interface_labels)):
            for face, label in zip(group, labels):
                name = SURFACE_NAMES[Surface(int(label))]
                fh.write(f"{face[0]} {face[1]} {face[2]} {name}\n")


# -- field sampling --------------------------------------------------------------

_AXES = {"x": 0, "y": 1, "z": 2}


def extract_line_cut(mesh: Mesh, values, axis: str, anchor, samples: int):
    """Sample a nodal field along an axis-parallel line.

    ``anchor`` fixes the two remaining coordinates. Returns evenly spaced
    ``(coordinates, values)`` arrays spanning the mesh extent along ``axis``;
    sample points falling outside the mesh are omitted, so an anchor outside
    the footprint yields empty arrays.
    """
    if axis not in _AXES:
        raise ValueError(f"axis must be one of {sorted(_AXES)}, got {axis!r}")
    if samples < 2:
        raise ValueError("at least two samples are required")
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.num_vertices,):
        raise ValueError("field must have one value per mesh vertex")
    ax = _AXES[axis]
    others = [d for d in range(3) if d != ax]
    anchor = np.asarray(anchor, dtype=float)

    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    coords = np.linspace(lo[ax], hi[ax], samples)
    scale = float(max(hi - lo))
    tol = 1e-10 * scale

    # Candidate elements: those whose bounding box straddles the line.
    verts = mesh.vertices[mesh.tets]
    cand = np.ones(mesh.num_tets, dtype=bool)
    for d, a in zip(others, anchor):
        cand &= (verts[:, :, d].min(axis=1) <= a + tol)
        cand &= (verts[:, :, d].max(axis=1) >= a - tol)
    cand_ids = np.flatnonzero(cand)
    if len(cand_ids) == 0:
        return np.empty(0), np.empty(0)

    g = mesh.geometry
    out_c, out_v = [], []
    point = np.empty(3)
    point[others[0]], point[others[1]] = anchor
    for c in coords:
        point[ax] = c
        hit = _locate(mesh, g, cand_ids, point, tol)
        if hit is None:
            continue
        tid, bary = hit
        out_c.append(c)
        out_v.append(float(bary @ values[mesh.tets[tid]]))
    return np.asarray(out_c), np.asarray(out_v)


def _locate(mesh, geom, cand_ids, point, tol):
    """Barycentric point location among candidate elements."""
    verts0 = mesh.vertices[mesh.tets[cand_ids, 0]]
    rel = point[None, :] - verts0
    lam = np.einsum("tkd,td->tk", geom.grads[cand_ids, 1:], rel)
    lam0 = 1.0 - lam.sum(axis=1)
    bary = np.column_stack((lam0, lam))
    ok = (bary >= -1e-9).all(axis=1)
    if not ok.any():
        return None
    # Prefer the element containing the point farthest from its faces.
    best = np.argmax(bary.min(axis=1) * ok - (~ok))
    b = np.clip(bary[best], 0.0, None)
    return int(cand_ids[best]), b / b.sum()
