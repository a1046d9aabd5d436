"""Triangle mesh loading, validation, and lumped-mass geometry.

A TriMesh is immutable after construction: vertex positions, triangle
connectivity and all derived fields (face areas and normals, area-weighted
vertex normals, per-vertex Voronoi mass) are computed once and the arrays
are marked read-only, so instances are safe to share between threads.
"""

import hashlib

import numpy as np

from .errors import (
    DegenerateTriangle,
    InconsistentOrientation,
    NonManifoldEdge,
    NonTriangleFace,
    ParseError,
)

# Faces whose area falls below this fraction of the squared bounding-box
# diagonal are rejected as degenerate, so the threshold is unit-free.
DEGENERACY_FACTOR = 1e-12


class TriMesh:
    """Manifold, consistently oriented triangle mesh.

    Parameters
    ----------
    vertices : (n, 3) array_like of float
        Vertex positions. Order is preserved.
    faces : (m, 3) array_like of int
        Vertex-index triples, consistently oriented (counter-clockwise
        seen from the outward normal side).

    Attributes
    ----------
    vertices : (n, 3) float64, read-only
    faces : (m, 3) int64, read-only
    face_areas : (m,) float64
    face_normals : (m, 3) float64, unit length
    vertex_normals : (n, 3) float64, area-weighted average of incident
        face normals, unit length (zero for isolated vertices)
    mass : (n,) float64, mixed-Voronoi cell areas; sums to the total
        surface area
    edges : (e, 2) int64, unique undirected edges, each row sorted
    boundary_edges : (b, 2) int64, edges with exactly one incident face
    """

    def __init__(self, vertices, faces, validate=True):
        vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        faces = np.ascontiguousarray(faces, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise ParseError(f"vertices must be (n, 3), got {vertices.shape}")
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise NonTriangleFace(f"faces must be (m, 3), got {faces.shape}")
        self.vertices = vertices
        self.faces = faces

        if validate:
            self._check_indices()

        tri = vertices[faces]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        double_area = np.linalg.norm(cross, axis=1)
        self.face_areas = 0.5 * double_area
        if validate:
            self._check_degenerate()
        with np.errstate(invalid="ignore", divide="ignore"):
            self.face_normals = np.where(
                double_area[:, None] > 0, cross / double_area[:, None], 0.0
            )

        self.vertex_normals = self._vertex_normals()
        self.edges, self._edge_face_count = self._collect_edges(validate)
        self.boundary_edges = self.edges[self._edge_face_count == 1]
        self.mass = vertex_mass(self)

        for arr in (self.vertices, self.faces, self.face_areas,
                    self.face_normals, self.vertex_normals, self.edges,
                    self.boundary_edges, self.mass):
            arr.setflags(write=False)

    # -- derived quantities ------------------------------------------------

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_faces(self):
        return self.faces.shape[0]

    @property
    def n_edges(self):
        return self.edges.shape[0]

    @property
    def is_closed(self):
        return self.boundary_edges.shape[0] == 0

    @property
    def total_area(self):
        return float(self.face_areas.sum())

    @property
    def bbox_diagonal(self):
        ext = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.linalg.norm(ext))

    def edge_lengths(self):
        d = self.vertices[self.edges[:, 0]] - self.vertices[self.edges[:, 1]]
        return np.linalg.norm(d, axis=1)

    def content_hash(self):
        """Hex digest over vertex and face bytes; stable across runs."""
        h = hashlib.sha256()
        h.update(self.vertices.tobytes())
        h.update(self.faces.tobytes())
        return h.hexdigest()

    # -- validation ----------------------------------------------------------

    def _check_indices(self):
        if self.faces.size and (self.faces.min() < 0
                                or self.faces.max() >= self.n_vertices):
            raise ParseError("face index out of range")
        f = self.faces
        repeated = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
        if repeated.any():
            raise DegenerateTriangle(
                f"face {int(np.nonzero(repeated)[0][0])} repeats a vertex")

    def _check_degenerate(self):
        threshold = DEGENERACY_FACTOR * max(self.bbox_diagonal, 1e-300) ** 2
        bad = self.face_areas <= threshold
        if bad.any():
            raise DegenerateTriangle(
                f"{int(bad.sum())} faces below area threshold {threshold:g}")

    def _vertex_normals(self):
        weighted = self.face_normals * self.face_areas[:, None]
        out = np.zeros_like(self.vertices)
        for c in range(3):
            np.add.at(out, self.faces[:, c], weighted)
        norms = np.linalg.norm(out, axis=1)
        nonzero = norms > 0
        out[nonzero] /= norms[nonzero, None]
        return out

    def _collect_edges(self, validate):
        f = self.faces
        directed = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        und = np.sort(directed, axis=1)
        edges, inverse, counts = np.unique(
            und, axis=0, return_inverse=True, return_counts=True)
        if validate and self.faces.size:
            if counts.max() > 2:
                e = edges[np.argmax(counts)]
                raise NonManifoldEdge(
                    f"edge ({e[0]}, {e[1]}) has {counts.max()} incident faces")
            # On a manifold mesh, consistent orientation means the two faces
            # sharing an edge traverse it in opposite directions.
            key = directed[:, 0] * self.n_vertices + directed[:, 1]
            order = np.argsort(key, kind="stable")
            dup = np.nonzero(np.diff(key[order]) == 0)[0]
            if dup.size:
                e = directed[order[dup[0]]]
                raise InconsistentOrientation(
                    f"edge ({e[0]}, {e[1]}) traversed twice in the same direction")
        return edges, counts


def vertex_mass(mesh):
    """Per-vertex mixed-Voronoi cell areas (lumped mass vector).

    Uses the cotangent Voronoi area inside non-obtuse triangles; obtuse
    triangles contribute area/2 at the obtuse corner and area/4 at the
    other two. Entries are positive for every vertex incident to a face
    and the vector sums to the total surface area.
    """
    v, f = mesh.vertices, mesh.faces
    p0, p1, p2 = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    area = mesh.face_areas
    if (area <= 0).any():
        raise DegenerateTriangle("zero-area face in mass computation")

    # cot of the angle at each corner: dot of the two incident edges over
    # twice the area.
    double = 2.0 * area
    cot = np.empty((len(f), 3))
    cot[:, 0] = np.einsum("ij,ij->i", p1 - p0, p2 - p0) / double
    cot[:, 1] = np.einsum("ij,ij->i", p2 - p1, p0 - p1) / double
    cot[:, 2] = np.einsum("ij,ij->i", p0 - p2, p1 - p2) / double

    # squared length of the edge opposite each corner
    sq = np.empty((len(f), 3))
    sq[:, 0] = np.einsum("ij,ij->i", p2 - p1, p2 - p1)
    sq[:, 1] = np.einsum("ij,ij->i", p0 - p2, p0 - p2)
    sq[:, 2] = np.einsum("ij,ij->i", p1 - p0, p1 - p0)

    contrib = np.empty((len(f), 3))
    # Voronoi area at corner i uses the two incident edges (opposite j and
    # k), each weighted by the cot at the far corner.
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        contrib[:, i] = (sq[:, j] * cot[:, j] + sq[:, k] * cot[:, k]) / 8.0

    obtuse = cot < 0  # an obtuse angle has negative cotangent
    any_obtuse = obtuse.any(axis=1)
    if any_obtuse.any():
        half = area[any_obtuse] / 2.0
        quarter = area[any_obtuse] / 4.0
        at_corner = obtuse[any_obtuse]
        contrib[any_obtuse] = np.where(at_corner, half[:, None], quarter[:, None])

    mass = np.zeros(mesh.n_vertices)
    for c in range(3):
        np.add.at(mass, f[:, c], contrib[:, c])
    return mass


# -- file formats -------------------------------------------------------------

def load_mesh(path, fmt=None):
    """Load an OFF or OBJ triangle mesh; format inferred from the suffix."""
    path = str(path)
    if fmt is None:
        lower = path.lower()
        if lower.endswith(".off"):
            fmt = "off"
        elif lower.endswith(".obj"):
            fmt = "obj"
        else:
            raise ParseError(f"cannot infer format from {path!r}")
    fmt = fmt.lower()
    if fmt == "off":
        return _read_off(path)
    if fmt == "obj":
        return _read_obj(path)
    raise ParseError(f"unsupported format {fmt!r}")


def _significant_lines(path):
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


def _read_off(path):
    lines = _significant_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ParseError("empty file", path, 1) from None
    counts_tok = None
    if header == "OFF":
        pass
    elif header.startswith("OFF"):
        counts_tok = (lineno, header[3:].split())
    else:
        raise ParseError("missing OFF header", path, lineno)
    if counts_tok is None:
        try:
            lineno, counts_line = next(lines)
        except StopIteration:
            raise ParseError("missing counts line", path, lineno) from None
        counts_tok = (lineno, counts_line.split())
    lineno, tok = counts_tok
    if len(tok) < 2:
        raise ParseError("counts line needs vertex and face counts", path, lineno)
    try:
        nv, nf = int(tok[0]), int(tok[1])
    except ValueError:
        raise ParseError("malformed counts line", path, lineno) from None

    vertices = np.empty((nv, 3))
    for i in range(nv):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise ParseError(f"expected {nv} vertices, got {i}", path, lineno) from None
        tok = line.split()
        if len(tok) < 3:
            raise ParseError("vertex line needs 3 coordinates", path, lineno)
        try:
            vertices[i] = [float(t) for t in tok[:3]]
        except ValueError:
            raise ParseError("malformed vertex line", path, lineno) from None

    faces = np.empty((nf, 3), dtype=np.int64)
    for i in range(nf):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise ParseError(f"expected {nf} faces, got {i}", path, lineno) from None
        tok = line.split()
        try:
            count = int(tok[0])
        except (ValueError, IndexError):
            raise ParseError("malformed face line", path, lineno) from None
        if count != 3:
            raise NonTriangleFace(f"{path}:{lineno}: face with {count} vertices")
        if len(tok) < 4:
            raise ParseError("face line needs 3 indices", path, lineno)
        try:
            faces[i] = [int(t) for t in tok[1:4]]
        except ValueError:
            raise ParseError("malformed face index", path, lineno) from None

    return TriMesh(vertices, faces)


def _read_obj(path):
    vertices = []
    faces = []
    for lineno, line in _significant_lines(path):
        tok = line.split()
        if tok[0] == "v":
            if len(tok) < 4:
                raise ParseError("vertex line needs 3 coordinates", path, lineno)
            try:
                vertices.append([float(t) for t in tok[1:4]])
            except ValueError:
                raise ParseError("malformed vertex line", path, lineno) from None
        elif tok[0] == "f":
            refs = tok[1:]
            if len(refs) != 3:
                raise NonTriangleFace(
                    f"{path}:{lineno}: face with {len(refs)} vertices")
            idx = []
            for r in refs:
                head = r.split("/", 1)[0]
                try:
                    k = int(head)
                except ValueError:
                    raise ParseError("malformed face index", path, lineno) from None
                if k < 1:
                    raise ParseError("face indices must be positive", path, lineno)
                idx.append(k - 1)
            faces.append(idx)
        # all other directives (vn, vt, usemtl, ...) are ignored
    if not vertices:
        raise ParseError("no vertices found", path, 1)
    return TriMesh(np.asarray(vertices), np.asarray(faces, dtype=np.int64))


def write_off(mesh, path):
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_faces} 0\n")
        for p in mesh.vertices:
            fh.write(f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r}\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")
