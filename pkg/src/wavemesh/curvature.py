"""Per-vertex principal curvatures and tangent frames.

The estimator fits a 2x2 shape operator per triangle by least squares from
the differences of vertex normals along the three edges (expressed in the
triangle's tangent basis), averages the tensors into vertex tangent planes
with area weights, and eigendecomposes the resulting 2x2 form per vertex.
With outward normals a convex sphere gets positive curvatures.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTriangle, IsolatedVertex

# relative eigenvalue gap below which a vertex counts as umbilic
UMBILIC_RTOL = 1e-6


@dataclass(frozen=True)
class PrincipalFrames:
    """Principal curvatures and directions for every vertex.

    k_min, k_max : (n,) curvatures (1/length units), k_max >= k_min
    dir_max : (n, 3) unit vectors, tangent to the surface; at umbilic
        vertices this is the deterministic fallback direction
    normal : (n, 3) unit vertex normals
    umbilic : (n,) bool
    """

    k_min: np.ndarray
    k_max: np.ndarray
    dir_max: np.ndarray
    normal: np.ndarray
    umbilic: np.ndarray

    def __post_init__(self):
        for arr in (self.k_min, self.k_max, self.dir_max, self.normal, self.umbilic):
            arr.setflags(write=False)

    @property
    def n_vertices(self):
        return self.k_min.shape[0]


def _tangent_fallback(normal):
    """Project +x into the tangent plane; fall back to +y when degenerate."""
    for axis in ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)):
        d = np.asarray(axis) - np.dot(axis, normal) * normal
        n = np.linalg.norm(d)
        if n >= 1e-8:
            return d / n
    # normal is numerically aligned with both axes only if it is garbage
    return np.array([0.0, 0.0, 1.0])


def _canonical_sign(d):
    for c in d:
        if abs(c) > 1e-10:
            return d if c > 0 else -d
    return d


def estimate_frames(mesh, radius=None):
    """Estimate PrincipalFrames for every vertex of ``mesh``.

    By default each vertex averages the shape-operator fits of its
    incident triangles. With ``radius`` (absolute length units) the
    average instead runs over every triangle whose centroid lies within
    that distance, in addition to the incident ones; on shapes with sharp
    creases this makes the estimate stable under remeshing, since the
    averaging scale is metric instead of combinatorial.

    Raises IsolatedVertex if some vertex has no incident face and
    DegenerateTriangle if a face has no usable tangent basis.
    """
    v, f = mesh.vertices, mesh.faces
    n_vert = mesh.n_vertices
    vnormals = mesh.vertex_normals

    incident = np.zeros(n_vert)
    for c in range(3):
        np.add.at(incident, f[:, c], 1.0)
    if (incident == 0).any():
        raise IsolatedVertex(
            f"vertex {int(np.argmin(incident))} has no incident face")

    p0, p1, p2 = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    fn = mesh.face_normals
    e_u = p1 - p0
    norm_u = np.linalg.norm(e_u, axis=1)
    if (norm_u == 0).any():
        raise DegenerateTriangle("zero-length edge")
    u = e_u / norm_u[:, None]
    w = np.cross(fn, u)

    # edges and the normal differences along them (edge k is opposite
    # vertex k, oriented consistently with the vertex order)
    edges = np.stack([p2 - p1, p0 - p2, p1 - p0], axis=1)        # (m, 3, 3)
    nd = np.stack([vnormals[f[:, 2]] - vnormals[f[:, 1]],
                   vnormals[f[:, 0]] - vnormals[f[:, 2]],
                   vnormals[f[:, 1]] - vnormals[f[:, 0]]], axis=1)

    eu = np.einsum("mkj,mj->mk", edges, u)
    ew = np.einsum("mkj,mj->mk", edges, w)
    du = np.einsum("mkj,mj->mk", nd, u)
    dw = np.einsum("mkj,mj->mk", nd, w)

    # Least squares for symmetric S = [[a, b], [b, c]] from
    #   a*eu + b*ew = du   and   b*eu + c*ew = dw   over the 3 edges.
    # Normal equations assembled in closed form.
    se_uu = (eu * eu).sum(axis=1)
    se_ww = (ew * ew).sum(axis=1)
    se_uw = (eu * ew).sum(axis=1)
    ata = np.zeros((len(f), 3, 3))
    ata[:, 0, 0] = se_uu
    ata[:, 0, 1] = ata[:, 1, 0] = se_uw
    ata[:, 1, 1] = se_uu + se_ww
    ata[:, 1, 2] = ata[:, 2, 1] = se_uw
    ata[:, 2, 2] = se_ww
    atb = np.zeros((len(f), 3))
    atb[:, 0] = (eu * du).sum(axis=1)
    atb[:, 1] = (ew * du).sum(axis=1) + (eu * dw).sum(axis=1)
    atb[:, 2] = (ew * dw).sum(axis=1)
    # tiny Tikhonov term keeps collinear-edge triangles solvable
    ata += 1e-12 * np.eye(3) * np.maximum(se_uu + se_ww, 1e-300)[:, None, None]
    abc = np.linalg.solve(ata, atb[..., None])[..., 0]

    # embed each triangle tensor in 3D and accumulate area-weighted
    a, b, c = abc[:, 0], abc[:, 1], abc[:, 2]
    uu = np.einsum("mi,mj->mij", u, u)
    ww = np.einsum("mi,mj->mij", w, w)
    uw = np.einsum("mi,mj->mij", u, w)
    s3 = (a[:, None, None] * uu
          + b[:, None, None] * (uw + uw.transpose(0, 2, 1))
          + c[:, None, None] * ww)
    s3 *= mesh.face_areas[:, None, None]

    acc = np.zeros((n_vert, 3, 3))
    wsum = np.zeros(n_vert)
    for col in range(3):
        np.add.at(acc, f[:, col], s3)
        np.add.at(wsum, f[:, col], mesh.face_areas)
    if radius is not None and radius > 0:
        from scipy.spatial import cKDTree
        centroids = (p0 + p1 + p2) / 3.0
        tree = cKDTree(centroids)
        for i in range(n_vert):
            near = tree.query_ball_point(v[i], radius)
            if near:
                acc[i] += s3[near].sum(axis=0)
                wsum[i] += mesh.face_areas[near].sum()
    acc /= wsum[:, None, None]

    k_min = np.empty(n_vert)
    k_max = np.empty(n_vert)
    dir_max = np.empty((n_vert, 3))
    umbilic = np.empty(n_vert, dtype=bool)

    for i in range(n_vert):
        nrm = vnormals[i]
        t1 = _tangent_fallback(nrm)
        t2 = np.cross(nrm, t1)
        basis = np.stack([t1, t2])                      # (2, 3)
        q = basis @ acc[i] @ basis.T
        q = 0.5 * (q + q.T)
        evals, evecs = np.linalg.eigh(q)                # ascending
        k_min[i], k_max[i] = evals[0], evals[1]
        gap = abs(evals[1] - evals[0])
        umbilic[i] = gap < UMBILIC_RTOL * (abs(evals[0]) + abs(evals[1]) + 1e-12)
        if umbilic[i]:
            d = t1
        else:
            pick = 1 if abs(evals[1]) >= abs(evals[0]) else 0
            coef = evecs[:, pick]
            d = coef[0] * t1 + coef[1] * t2
            d /= np.linalg.norm(d)
        dir_max[i] = _canonical_sign(d)

    return PrincipalFrames(k_min=k_min, k_max=k_max, dir_max=dir_max,
                           normal=vnormals.copy(), umbilic=umbilic)
