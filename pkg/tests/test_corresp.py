import numpy as np
import pytest

import wavemesh as wm
from wavemesh.corresp import evaluate, geodesic_from, geodesic_rows, match_nn
from wavemesh.errors import DisconnectedMesh
from wavemesh.mesh import TriMesh

from .conftest import grid_mesh


def bellman_ford(mesh, source):
    """Brute-force shortest paths over the edge graph."""
    n = mesh.n_vertices
    dist = np.full(n, np.inf)
    dist[source] = 0.0
    edges = mesh.edges
    lengths = mesh.edge_lengths()
    for _ in range(n - 1):
        changed = False
        for (a, b), w in zip(edges, lengths):
            if dist[a] + w < dist[b]:
                dist[b] = dist[a] + w
                changed = True
            if dist[b] + w < dist[a]:
                dist[a] = dist[b] + w
                changed = True
        if not changed:
            break
    return dist


class TestMatchNN:
    def test_identical_descriptors_identity(self):
        rng = np.random.default_rng(0)
        d = rng.standard_normal((40, 8))
        assert np.array_equal(match_nn(d, d), np.arange(40))

    def test_hand_distance_table(self):
        source = np.array([[0.0], [1.0]])
        target = np.array([[0.9], [0.1]])
        assert match_nn(source, target).tolist() == [1, 0]

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(1)
        source = rng.standard_normal((10, 4))
        target = rng.standard_normal((15, 4))
        base = match_nn(source, target)
        perm = rng.permutation(15)
        permuted = match_nn(source, target[perm])
        assert np.array_equal(perm[permuted], base)

    def test_tie_breaks_to_smallest_index(self):
        source = np.array([[0.0, 0.0]])
        target = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
        assert match_nn(source, target)[0] == 0

    def test_errors(self):
        with pytest.raises(ValueError):
            match_nn(np.zeros((0, 3)), np.zeros((4, 3)))
        with pytest.raises(ValueError):
            match_nn(np.zeros((4, 3)), np.zeros((4, 2)))


class TestGeodesics:
    def test_three_vertex_path(self):
        # path 0-1-2 with lengths 1 and 2; the apex vertex only offers a
        # much longer detour
        verts = [[0, 0, 0], [1, 0, 0], [3, 0, 0], [1.5, 10, 0]]
        faces = [[0, 1, 3], [1, 2, 3]]
        mesh = TriMesh(verts, faces)
        dist = geodesic_from(mesh, 0)
        assert np.allclose(dist[:3], [0.0, 1.0, 3.0])

    def test_grid_matches_bellman_ford(self):
        mesh = grid_mesh(9, 9)
        got = geodesic_from(mesh, 0)
        want = bellman_ford(mesh, 0)
        assert np.array_equal(got, want)
        corner = mesh.n_vertices - 1
        assert got[corner] == want[corner]

    def test_triangle_inequality(self, ico1):
        rng = np.random.default_rng(2)
        idx = rng.integers(0, ico1.n_vertices, (20, 3))
        rows = geodesic_rows(ico1, np.unique(idx))
        lookup = {v: i for i, v in enumerate(np.unique(idx))}
        for a, b, c in idx:
            dab = rows[lookup[a], b]
            dbc = rows[lookup[b], c]
            dac = rows[lookup[a], c]
            assert dac <= dab + dbc + 1e-12

    def test_disconnected_mesh(self):
        verts = [[0, 0, 0], [1, 0, 0], [0, 1, 0],
                 [10, 10, 10], [11, 10, 10], [10, 11, 10]]
        faces = [[0, 1, 2], [3, 4, 5]]
        mesh = TriMesh(verts, faces)
        with pytest.raises(DisconnectedMesh):
            geodesic_from(mesh, 0)


class TestEvaluate:
    def test_exact_match_zero_error(self, ico1):
        gt = np.arange(ico1.n_vertices)
        result = evaluate(gt, gt, ico1)
        assert result.average_geodesic_error == 0.0
        assert (result.cge[:, 1] == 1.0).all()
        assert result.fraction_at(0.0) == 1.0

    def test_hand_counted_fractions(self):
        # 3x2 strip of unit area: vertex 0 -> 1 is exactly 0.5 after
        # normalization; errors {0, 0, 0.5} against radii {0, 0.25, 1}
        mesh = grid_mesh(2, 1)
        assert abs(mesh.total_area - 1.0) < 1e-12
        corr = np.array([1, 1, 2])
        gt = np.array([0, 1, 2])
        result = evaluate(corr, gt, mesh, radii=[0.0, 0.25, 1.0])
        assert np.allclose(result.geodesic_errors, [0.5, 0.0, 0.0])
        assert np.allclose(result.cge[:, 1], [2 / 3, 2 / 3, 1.0])
        assert abs(result.average_geodesic_error - 100 * 0.5 / 3) < 1e-12

    def test_scale_invariance(self, ico1):
        rng = np.random.default_rng(3)
        gt = np.arange(ico1.n_vertices)
        corr = rng.permutation(ico1.n_vertices)
        r1 = evaluate(corr, gt, ico1)
        scaled = TriMesh(ico1.vertices * 7.3, ico1.faces.copy())
        r2 = evaluate(corr, gt, scaled)
        assert np.abs(r1.geodesic_errors - r2.geodesic_errors).max() < 1e-9

    def test_fraction_at_zero_is_exact_match_rate(self, ico1):
        gt = np.arange(ico1.n_vertices)
        corr = gt.copy()
        corr[:7] = (corr[:7] + 1) % ico1.n_vertices
        result = evaluate(corr, gt, ico1, radii=[0.0, 10.0])
        exact = (corr == gt).mean()
        assert result.cge[0, 1] == exact
        assert result.cge[1, 1] == 1.0

    def test_monotone_fractions(self, ico1):
        rng = np.random.default_rng(4)
        gt = np.arange(ico1.n_vertices)
        corr = rng.permutation(ico1.n_vertices)
        result = evaluate(corr, gt, ico1)
        assert (np.diff(result.cge[:, 1]) >= 0).all()

    def test_index_out_of_range(self, ico1):
        gt = np.arange(ico1.n_vertices)
        bad = gt.copy()
        bad[0] = ico1.n_vertices
        with pytest.raises(IndexError):
            evaluate(bad, gt, ico1)
