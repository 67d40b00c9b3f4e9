import numpy as np
import pytest

from ctsdome.core import element_lengths
from ctsdome.errors import CTSError, IndivisibleClustering, InfeasibleSign, ZeroForceMember
from ctsdome.levy import (BAR_GROUPS, STRING_GROUPS, LevyParams, design_dome, dome_skeleton,
                          generate_clustering, generate_nodes, generate_topology, node_id,
                          rotate_coords, rotation, size_members, transfer_prestress)
from ctsdome.modal import min_eigenvalue, tangent_stiffness

P = LevyParams()


def test_first_unit_coordinates():
    xyz = generate_nodes(P).xyz
    assert np.allclose(xyz[node_id("PN", 0, 12)], [50, 0, 0], atol=1e-12)
    assert np.allclose(xyz[node_id("OTN", 0, 12)], [31.393, 8.412, 8.663], atol=5e-4)
    assert np.allclose(xyz[node_id("ITN", 0, 12)], [15, 0, 13.458], atol=1e-12)
    assert np.allclose(xyz[node_id("IBN", 0, 12)], [15, 0, -0.960], atol=1e-12)
    assert np.allclose(xyz[node_id("OBN", 0, 12)][:2], xyz[node_id("OTN", 0, 12)][:2])


def test_full_turn_rotation_is_identity():
    T = rotation(2 * np.pi / 12)
    assert np.abs(np.linalg.matrix_power(T, 12) - np.eye(3)).max() < 1e-12


def test_pinned_nodes():
    nodes = generate_nodes(P)
    assert nodes.n_nodes == 60
    assert list(nodes.fixed_idx) == list(range(12))


def test_counts_and_ordering():
    conn, topo = generate_topology(P)
    assert conn.n_elements == 156 and conn.n_bars == 24
    sizes = {g: len(v) for g, v in topo.element_groups.items()}
    assert sizes == {"OB": 12, "IB": 12, "ORS": 24, "ODS": 24, "IRS": 24, "IDS": 24,
                     "OHS": 12, "IHS": 12, "THS": 12}
    assert topo.element_groups["OB"] == list(range(12))


def test_otn_degree():
    conn, topo = generate_topology(P)
    deg = conn.degree(60)
    assert all(deg[n] == 7 for n in topo.node_groups["OTN"])
    assert np.all(deg[12:] >= 3)


def test_string_groups_are_closed_loops():
    conn, topo = generate_topology(P)
    for g in STRING_GROUPS:
        members = topo.loops[g]
        ends = conn.ends[members]
        nodes, counts = np.unique(ends, return_counts=True)
        assert np.all(counts == 2)
        # walk the loop
        adj = {}
        for e, (a, b) in zip(members, ends):
            adj.setdefault(a, []).append((b, e))
            adj.setdefault(b, []).append((a, e))
        start = int(ends[0, 0])
        prev_e, node, seen = None, start, 0
        while True:
            nxt = [(n, e) for n, e in adj[node] if e != prev_e][0]
            node, prev_e = nxt
            seen += 1
            if node == start:
                break
        assert seen == len(members)


def test_element_endpoint_scheme():
    conn, topo = generate_topology(P)
    p = 12
    pairs = {g: {frozenset(map(int, conn.ends[e])) for e in topo.element_groups[g]}
             for g in topo.element_groups}
    for i in range(p):
        n = lambda g, k: node_id(g, k, p)
        assert frozenset((n("OTN", i), n("OBN", i))) in pairs["OB"]
        assert frozenset((n("ITN", i), n("IBN", i))) in pairs["IB"]
        assert frozenset((n("PN", i), n("OTN", i))) in pairs["ORS"]
        assert frozenset((n("PN", i + 1), n("OTN", i))) in pairs["ORS"]
        assert frozenset((n("PN", i), n("OBN", i))) in pairs["ODS"]
        assert frozenset((n("PN", i + 1), n("OBN", i))) in pairs["ODS"]
        assert frozenset((n("ITN", i), n("OTN", i))) in pairs["IRS"]
        assert frozenset((n("ITN", i + 1), n("OTN", i))) in pairs["IRS"]
        assert frozenset((n("IBN", i), n("OTN", i - 1))) in pairs["IDS"]
        assert frozenset((n("IBN", i), n("OTN", i))) in pairs["IDS"]
        assert frozenset((n("OBN", i), n("OBN", i + 1))) in pairs["OHS"]
        assert frozenset((n("IBN", i), n("IBN", i + 1))) in pairs["IHS"]
        assert frozenset((n("ITN", i), n("ITN", i + 1))) in pairs["THS"]


def test_ths_chord_length():
    s, topo = dome_skeleton(P)
    l = element_lengths(s)
    ths = l[topo.element_groups["THS"]]
    assert np.allclose(ths, 2 * 15 * np.sin(np.pi / 12), rtol=1e-12)


def test_rotational_invariance_as_a_set():
    xyz = generate_nodes(P).xyz
    rotated = rotate_coords(xyz.ravel(), 2 * np.pi / 12).reshape(-1, 3)
    d = np.linalg.norm(rotated[:, None, :] - xyz[None, :, :], axis=2)
    assert d.min(axis=1).max() < 1e-10


@pytest.mark.parametrize("n_c,n_ec", [(1, 31), (2, 38), (3, 45), (4, 52), (6, 66), (12, 108)])
def test_cluster_counts(n_c, n_ec):
    _, topo = generate_topology(P)
    cm = generate_clustering(topo, n_c)
    assert cm.n_clusters == n_ec == 2 * 12 + 7 * n_c


def test_clusterings_pass_core_validation():
    for n_c in (1, 2, 3, 4, 6, 12):
        s, _ = dome_skeleton(LevyParams(n_c=n_c))
        s.cluster.validate(s.conn)


def test_indivisible_clustering_names_both_values():
    with pytest.raises(IndivisibleClustering, match="n_c=5.*p=12"):
        LevyParams(n_c=5)
    _, topo = generate_topology(P)
    with pytest.raises(IndivisibleClustering):
        generate_clustering(topo, 7)


def test_params_validation():
    with pytest.raises(CTSError):
        LevyParams(c=1.2)
    with pytest.raises(CTSError):
        LevyParams(R=-1.0)
    assert LevyParams(c=0.3).r_o == pytest.approx(32.5)


def test_design_point_is_feasible_and_stable():
    dome = design_dome(P, mass_scale=50.0)
    assert dome.prestress.n_p == 1
    assert min_eigenvalue(tangent_stiffness(dome.structure).K_Taa) > 0


def test_literal_height_order_is_sign_infeasible():
    with pytest.raises(InfeasibleSign):
        design_dome(LevyParams(z_obn=13.458, z_itn=-9.623))


def test_sizing_examples():
    s, topo = dome_skeleton(P)
    t = np.zeros(s.cluster.n_clusters)
    t[s.mat.is_bar] = -5000.0
    t[~s.mat.is_bar] = 1e4
    mat = size_members(s, t)
    assert mat.area[~s.mat.is_bar] == pytest.approx(9.0909e-4, rel=1e-4)
    doubled = size_members(s, 2 * t)
    assert np.allclose(doubled.area[~s.mat.is_bar], 2 * mat.area[~s.mat.is_bar], rtol=1e-12)


def test_euler_sizing_scales_with_length():
    s, topo = dome_skeleton(P)
    bars = np.flatnonzero(s.mat.is_bar)
    t = np.full(s.cluster.n_clusters, 1.0)
    t[bars] = -1e5
    A = size_members(s, t).area
    l = element_lengths(s)[:24]
    # Euler-governed: I = A^2/(4 pi) scales with l^2
    I = A[bars] ** 2 / (4 * np.pi)
    E = s.mat.modulus[bars]
    assert np.allclose(np.pi**2 * E * I / l**2, 1e5 / 0.1, rtol=1e-12)


def test_zero_force_member():
    s, _ = dome_skeleton(P)
    t = np.ones(s.cluster.n_clusters)
    t[3] = 0.0
    assert size_members(s, t).area[3] == 1e-6
    with pytest.raises(ZeroForceMember):
        size_members(s, t, min_area=None)


def test_unclustered_dome_has_two_modes_and_transfer_works():
    source = design_dome(LevyParams(n_c=1), size=False)
    params = LevyParams(n_c=12)
    t_c = transfer_prestress(source, params)
    dome = design_dome(params, prestress_t_c=t_c)
    assert dome.prestress.n_p == 2
    from ctsdome.statics import static_residual
    assert np.abs(static_residual(dome.structure)).max() < 1e-6


def test_group_labels():
    dome = design_dome(P, size=False)
    assert dome.labels.count("OB") == 12 and dome.labels.count("ORS") == 3
    assert set(dome.labels) == set(BAR_GROUPS + STRING_GROUPS)
