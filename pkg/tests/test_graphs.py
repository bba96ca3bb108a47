"""Graph data model and structural descriptors."""

import numpy as np
import pytest

from sentgraph.errors import InputError
from sentgraph.graphs import (
    Graph,
    GraphDescriptors,
    clustering_coefficients,
    complete_graph,
    cycle_graph,
    degree_histogram,
    descriptors,
    eigen_spectrum,
    neighbors,
    orbit_counts,
    path_graph,
    permute,
    star_graph,
    triangle_graph,
)
from sentgraph.rng import substream

from oracles import all_quads_orbit_counts, random_graph, random_permutation


def test_make_rejects_self_loops_and_range():
    with pytest.raises(InputError):
        Graph.make(3, [(1, 1)])
    with pytest.raises(InputError):
        Graph.make(3, [(0, 3)])
    with pytest.raises(InputError):
        Graph.make(2, [(0, 1)], node_labels=[0])


def test_neighbors_triangle():
    g = triangle_graph()
    assert neighbors(g, 0) == {1, 2}


def test_neighbors_path_midpoint():
    g = path_graph(3)
    assert neighbors(g, 1) == {0, 2}


def test_neighbors_isolated_single_node():
    g = Graph.make(1, [])
    assert neighbors(g, 0) == set()


def test_neighbors_out_of_range():
    with pytest.raises(InputError):
        neighbors(triangle_graph(), 3)


def test_degree_histogram_sums_to_one():
    rng = substream(11)
    for _ in range(20):
        g = random_graph(rng, int(rng.integers(1, 30)), 0.3)
        h = degree_histogram(g)
        assert h.min() >= 0
        assert abs(h.sum() - 1.0) < 1e-12


def test_clustering_k4_all_ones():
    g = complete_graph(4)
    d = descriptors(g)
    assert d.clustering[-1] == 1.0
    assert d.clustering[:-1].sum() == 0.0


def test_clustering_star_all_zeros():
    g = star_graph(5)
    d = descriptors(g)
    assert d.clustering[0] == 1.0


def test_orbit_counts_c4():
    # every node of a 4-cycle lies on exactly one cycle graphlet
    g = cycle_graph(4)
    oc = orbit_counts(g)
    expected = all_quads_orbit_counts(g)
    assert np.array_equal(oc, expected)
    cycle_orbit = 4
    assert np.array_equal(oc[:, cycle_orbit], np.ones(4))


def test_orbit_counts_match_all_quads_oracle():
    rng = substream(12)
    for _ in range(25):
        g = random_graph(rng, int(rng.integers(4, 14)), float(rng.uniform(0.15, 0.6)))
        assert np.array_equal(orbit_counts(g), all_quads_orbit_counts(g))


def test_spectrum_k2_closed_form():
    g = path_graph(2)
    vals = eigen_spectrum(g)
    assert np.allclose(vals, [0.0, 2.0], atol=1e-12)


def test_spectrum_c4_hand_computed():
    # normalized Laplacian of C4 = I - A/2, eigenvalues of A/2: 1,0,0,-1
    g = cycle_graph(4)
    vals = eigen_spectrum(g)
    assert np.allclose(vals, [0.0, 1.0, 1.0, 2.0], atol=1e-9)


def test_spectrum_bounds_and_trace():
    rng = substream(13)
    for _ in range(20):
        g = random_graph(rng, int(rng.integers(2, 40)), 0.4)
        vals = eigen_spectrum(g)
        assert vals[0] <= 1e-8
        assert np.all(vals <= 2.0 + 1e-8)
        assert np.all(np.diff(vals) >= -1e-12)
        if all(g.degree(v) > 0 for v in range(g.n)):
            assert abs(vals.sum() - g.n) < 1e-8


def test_descriptors_permutation_invariant():
    rng = substream(14)
    for _ in range(10):
        g = random_graph(rng, int(rng.integers(5, 20)), 0.35)
        sigma = random_permutation(rng, g.n)
        dg = descriptors(g)
        dh = descriptors(permute(g, sigma))
        assert np.array_equal(dg.degree, dh.degree)
        assert np.array_equal(dg.clustering, dh.clustering)
        assert np.array_equal(dg.orbit, dh.orbit)
        assert np.array_equal(dg.spectrum, dh.spectrum)


def test_descriptors_returns_bundle():
    d = descriptors(triangle_graph(), graph_id="t")
    assert isinstance(d, GraphDescriptors)
    assert d.graph_id == "t"
    assert len(d.degree) == 129
    assert len(d.clustering) == 100
    assert len(d.orbit) == 11
    assert len(d.spectrum) == 200


def test_clustering_values():
    g = Graph.make(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
    c = clustering_coefficients(g)
    assert c[0] == 1.0 and c[1] == 1.0
    assert abs(c[2] - 1 / 3) < 1e-12
    assert c[3] == 0.0


def test_permute_roundtrip_labels():
    g = Graph.make(
        3, [(0, 1), (1, 2)], node_labels=[5, 6, 7], edge_labels={(0, 1): 1, (1, 2): 2}
    )
    sigma = [2, 0, 1]
    h = permute(g, sigma)
    assert h.node_labels[sigma[0]] == 5
    assert h.edge_labels[tuple(sorted((sigma[0], sigma[1])))] == 1
