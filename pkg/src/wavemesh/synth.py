"""Synthetic shapes with ground-truth correspondence.

Base generators (icosphere, bar, open cylinder) produce deterministic
vertex orderings. Deformations (bend, twist) keep the connectivity, so
the ground-truth map is the identity; midpoint subdivision produces a
remeshed variant whose new vertices map to the nearer (smaller-index)
endpoint of their edge.
"""

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import (
    ConfigInvalid,
    MagnitudeOutOfRange,
    ManifestInvalid,
    ResolutionTooSmall,
)
from .mesh import TriMesh, load_mesh, write_off

MAX_BEND = math.pi / 2
MAX_TWIST_RATE = math.pi


@dataclass(frozen=True)
class ShapePair:
    source: TriMesh
    target: TriMesh
    gt_map: np.ndarray
    isometry_distortion: float = None


def gen_base(kind, resolution, **kwargs):
    if kind == "icosphere":
        mesh = icosphere(resolution)
    elif kind == "bar":
        mesh = bar(resolution)
    elif kind == "cylinder":
        mesh = cylinder(resolution, **kwargs)
    else:
        raise ConfigInvalid(f"unknown base kind {kind!r}")
    if mesh.n_vertices < 12:
        raise ResolutionTooSmall(
            f"{kind} at resolution {resolution} has {mesh.n_vertices} vertices")
    return mesh


def icosphere(subdivisions):
    """Unit sphere by midpoint subdivision of the icosahedron;
    10 * 4**s + 2 vertices."""
    if subdivisions < 0:
        raise ResolutionTooSmall("subdivisions must be >= 0")
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = np.array([
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ], dtype=np.int64)
    verts = [v for v in verts]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                p = verts[i] + verts[j]
                verts.append(p / np.linalg.norm(p))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = np.asarray(new_faces, dtype=np.int64)
    return TriMesh(np.asarray(verts), faces)


def _grid_face(register, origin, du, dv, nu, nv):
    """Triangulate one rectangular box face; du x dv must point outward."""
    faces = []
    idx = {}
    for iu in range(nu + 1):
        for iv in range(nv + 1):
            idx[iu, iv] = register(origin + iu * du + iv * dv)
    for iu in range(nu):
        for iv in range(nv):
            a = idx[iu, iv]
            b = idx[iu + 1, iv]
            c = idx[iu + 1, iv + 1]
            d = idx[iu, iv + 1]
            faces += [(a, b, c), (a, c, d)]
    return faces


def bar(resolution, length=8.0, width=1.0):
    """Closed box of aspect length/width, long axis x, centered at the
    origin; resolution r gives 8r segments along the length and r across."""
    if resolution < 1:
        raise ResolutionTooSmall("bar resolution must be >= 1")
    nx, ny, nz = 8 * resolution, resolution, resolution
    hx, hy, hz = length / 2.0, width / 2.0, width / 2.0
    step = np.array([length / nx, width / ny, width / nz])
    low = np.array([-hx, -hy, -hz])

    verts = []
    lattice = {}

    def register(p):
        key = tuple(int(round(c)) for c in (p - low) / step)
        if key not in lattice:
            lattice[key] = len(verts)
            verts.append(low + np.asarray(key) * step)
        return lattice[key]

    ex = np.array([step[0], 0, 0])
    ey = np.array([0, step[1], 0])
    ez = np.array([0, 0, step[2]])
    c000 = low
    faces = []
    faces += _grid_face(register, low + np.array([length, 0, 0]), ey, ez, ny, nz)
    faces += _grid_face(register, c000, ez, ey, nz, ny)
    faces += _grid_face(register, low + np.array([0, width, 0]), ez, ex, nz, nx)
    faces += _grid_face(register, c000, ex, ez, nx, nz)
    faces += _grid_face(register, low + np.array([0, 0, width]), ex, ey, nx, ny)
    faces += _grid_face(register, c000, ey, ex, ny, nx)
    return TriMesh(np.asarray(verts), np.asarray(faces, dtype=np.int64))


def cylinder(resolution, caps=False, radius=1.0, height=4.0):
    """Cylinder along z; open (boundary rings) unless caps is set."""
    if resolution < 1:
        raise ResolutionTooSmall("cylinder resolution must be >= 1")
    n_theta = 8 * resolution
    n_z = 4 * resolution
    verts = []
    for j in range(n_z + 1):
        z = -height / 2.0 + height * j / n_z
        for i in range(n_theta):
            a = 2.0 * math.pi * i / n_theta
            verts.append((radius * math.cos(a), radius * math.sin(a), z))
    faces = []
    for j in range(n_z):
        for i in range(n_theta):
            a = j * n_theta + i
            b = j * n_theta + (i + 1) % n_theta
            c = (j + 1) * n_theta + (i + 1) % n_theta
            d = (j + 1) * n_theta + i
            faces += [(a, b, c), (a, c, d)]
    if caps:
        bottom = len(verts)
        verts.append((0.0, 0.0, -height / 2.0))
        top = len(verts)
        verts.append((0.0, 0.0, height / 2.0))
        for i in range(n_theta):
            nxt = (i + 1) % n_theta
            faces.append((bottom, nxt, i))
            faces.append((top, n_z * n_theta + i, n_z * n_theta + nxt))
    return TriMesh(np.asarray(verts, dtype=np.float64),
                   np.asarray(faces, dtype=np.int64))


def _deformation_axes(mesh):
    ext = mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)
    u = int(np.argmax(ext))
    rest = [a for a in range(3) if a != u]
    return u, rest[0], rest[1]  # principal, passive, displacement


def deform(mesh, mode, magnitude):
    """Near-isometric pose change with unchanged connectivity."""
    if mode == "bend":
        if abs(magnitude) > MAX_BEND + 1e-12:
            raise MagnitudeOutOfRange(
                f"bend angle {magnitude} outside [-pi/2, pi/2]")
        return _bend(mesh, magnitude)
    if mode == "twist":
        if abs(magnitude) > MAX_TWIST_RATE + 1e-12:
            raise MagnitudeOutOfRange(
                f"twist rate {magnitude} outside [-pi, pi]")
        return _twist(mesh, magnitude)
    raise ConfigInvalid(f"unknown deformation mode {mode!r}")


def _bend(mesh, angle):
    if angle == 0:
        return TriMesh(mesh.vertices.copy(), mesh.faces.copy())
    u, v, w = _deformation_axes(mesh)
    p = mesh.vertices.copy()
    s = p[:, u]
    s0, s1 = s.min(), s.max()
    length = s1 - s0
    mid = 0.5 * (s0 + s1)
    radius = length / angle
    phi = angle * (s - mid) / length
    t = p[:, w]
    p[:, u] = (radius - t) * np.sin(phi)
    p[:, w] = radius - (radius - t) * np.cos(phi)
    return TriMesh(p, mesh.faces.copy())


def _twist(mesh, rate):
    u, v, w = _deformation_axes(mesh)
    p = mesh.vertices.copy()
    s = p[:, u]
    mid = 0.5 * (s.min() + s.max())
    psi = rate * (s - mid)
    cv, sv = np.cos(psi), np.sin(psi)
    pv, pw = p[:, v].copy(), p[:, w].copy()
    p[:, v] = cv * pv - sv * pw
    p[:, w] = sv * pv + cv * pw
    return TriMesh(p, mesh.faces.copy())


def isometry_distortion(source, target):
    """Max relative edge-length change between corresponding edges."""
    if source.n_vertices != target.n_vertices or not np.array_equal(
            source.faces, target.faces):
        raise ValueError("meshes must share connectivity")
    ls = source.edge_lengths()
    lt = target.edge_lengths()
    return float((np.abs(lt - ls) / ls).max()) if len(ls) else 0.0


def remesh(mesh):
    """Midpoint 1-to-4 subdivision.

    Returns the refined mesh plus a map from its vertices to the original:
    kept vertices map to themselves, each edge midpoint to the smaller
    endpoint index (midpoints are equidistant from both ends).
    """
    v, f = mesh.vertices, mesh.faces
    n = mesh.n_vertices
    edges = mesh.edges
    edge_index = {(int(a), int(b)): n + i for i, (a, b) in enumerate(edges)}
    mids = 0.5 * (v[edges[:, 0]] + v[edges[:, 1]])
    new_verts = np.concatenate([v, mids], axis=0)

    def mid(i, j):
        return edge_index[(i, j) if i < j else (j, i)]

    new_faces = []
    for a, b, c in f:
        a, b, c = int(a), int(b), int(c)
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
    refined = TriMesh(new_verts, np.asarray(new_faces, dtype=np.int64))
    gt_map = np.concatenate([np.arange(n, dtype=np.int64),
                             edges.min(axis=1).astype(np.int64)])
    return refined, gt_map


@dataclass(frozen=True)
class DatasetConfig:
    base: str = "bar"
    resolution: int = 4
    deformations: tuple = ()      # sequence of (mode, magnitude)
    holdout: int = 1
    split_seed: int = 0
    remesh_holdout: bool = False
    # also train on subdivided copies of the training poses (labels come
    # from the subdivision map), teaching discretization robustness
    remesh_training: int = 0      # how many training poses to augment

    def validate(self):
        if self.base not in ("icosphere", "bar", "cylinder"):
            raise ConfigInvalid(f"unknown base {self.base!r}")
        if not self.deformations:
            raise ConfigInvalid("need at least one deformation")
        for d in self.deformations:
            if len(d) != 2 or d[0] not in ("bend", "twist"):
                raise ConfigInvalid(f"bad deformation spec {d!r}")
        if not (0 < self.holdout < len(self.deformations)):
            raise ConfigInvalid(
                f"holdout {self.holdout} must leave at least one training shape")


def make_dataset(config, out_dir):
    """Generate meshes, identity labels and held-out pairs; write a
    manifest describing them all. Returns the manifest dict."""
    config.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    template = gen_base(config.base, config.resolution)
    write_off(template, out / "template.off")
    labels = np.arange(template.n_vertices)
    _write_indices(labels, out / "labels_template.txt")

    deformed = []
    for i, (mode, mag) in enumerate(config.deformations):
        m = deform(template, mode, float(mag))
        write_off(m, out / f"deform_{i}.off")
        _write_indices(labels, out / f"labels_{i}.txt")
        deformed.append(m)

    rng = np.random.default_rng(config.split_seed)
    order = rng.permutation(len(deformed))
    train_idx = sorted(int(i) for i in order[:len(deformed) - config.holdout])
    test_idx = sorted(int(i) for i in order[len(deformed) - config.holdout:])

    training = [{"mesh": f"deform_{i}.off", "labels": f"labels_{i}.txt"}
                for i in train_idx]
    for i in train_idx[:config.remesh_training]:
        refined, gt_map = remesh(deformed[i])
        write_off(refined, out / f"deform_{i}_remesh.off")
        _write_indices(gt_map, out / f"labels_{i}_remesh.txt")
        training.append({"mesh": f"deform_{i}_remesh.off",
                         "labels": f"labels_{i}_remesh.txt"})

    pairs = []
    for i in test_idx:
        gt_file = f"gt_{i}.txt"
        _write_indices(labels, out / gt_file)
        pairs.append({"source": "template.off", "target": f"deform_{i}.off",
                      "gt": gt_file, "kind": "deformed",
                      "distortion": isometry_distortion(template, deformed[i])})
        if config.remesh_holdout:
            refined, _ = remesh(deformed[i])
            write_off(refined, out / f"deform_{i}_remesh.off")
            pairs.append({"source": "template.off",
                          "target": f"deform_{i}_remesh.off",
                          "gt": gt_file, "kind": "remeshed"})

    manifest = {
        "template": {"mesh": "template.off", "labels": "labels_template.txt"},
        "training": training,
        "pairs": pairs,
        "config": asdict(config) | {
            "deformations": [list(d) for d in config.deformations]},
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def load_manifest(path):
    path = Path(path)
    try:
        with open(path) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ManifestInvalid(f"{path}: {exc}") from exc
    for key in ("template", "training", "pairs"):
        if key not in manifest:
            raise ManifestInvalid(f"{path}: missing key {key!r}")
    root = path.parent
    for entry in [manifest["template"], *manifest["training"]]:
        for k in ("mesh", "labels"):
            if k not in entry:
                raise ManifestInvalid(f"{path}: entry missing {k!r}")
            if not (root / entry[k]).exists():
                raise ManifestInvalid(f"{path}: missing file {entry[k]}")
    for pair in manifest["pairs"]:
        for k in ("source", "target", "gt"):
            if k not in pair or not (root / pair[k]).exists():
                raise ManifestInvalid(f"{path}: bad pair entry {pair!r}")
    return manifest


def read_indices(path):
    return np.loadtxt(path, dtype=np.int64, ndmin=1)


def _write_indices(indices, path):
    with open(path, "w") as fh:
        for i in indices:
            fh.write(f"{int(i)}\n")
