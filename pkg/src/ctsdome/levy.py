"""Parametric Levy cable dome: nodes, topology, clustering and member sizing."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import (ClusterMap, Connectivity, MaterialTable, NodeSet, Structure,
                   cluster_is_bar, cluster_lengths, element_lengths)
from .errors import CTSError, IndivisibleClustering, ZeroForceMember
from .statics import (PrestressState, equilibrium_matrices, prestress_modes,
                      rest_lengths_from_prestress, solve_prestress)

NODE_GROUPS = ("PN", "OTN", "OBN", "ITN", "IBN")
BAR_GROUPS = ("OB", "IB")
STRING_GROUPS = ("ORS", "ODS", "IRS", "IDS", "OHS", "IHS", "THS")
ELEMENT_GROUPS = BAR_GROUPS + STRING_GROUPS

STEEL_BAR = {"modulus": 2.06e11, "density": 7870.0, "capacity": 355e6}
ALUMINIUM_STRING = {"modulus": 6.0e10, "density": 2700.0, "capacity": 110e6}
CAPACITY_FRACTION = 0.1
MIN_GAUGE_AREA = 1e-6
IB_PRESTRESS = -5000.0


@dataclass(frozen=True)
class LevyParams:
    R: float = 50.0
    c: float = 0.3
    p: int = 12
    z_otn: float = 8.663
    z_obn: float = -9.623
    z_itn: float = 13.458
    z_ibn: float = -0.960
    n_c: int = 3

    def __post_init__(self):
        if self.p < 3:
            raise CTSError("p must be at least 3")
        if not 0 < self.c < 1:
            raise CTSError(f"deployment ratio c={self.c} must lie in (0, 1)")
        if self.R <= 0:
            raise CTSError("R must be positive")
        if self.n_c < 1 or self.p % self.n_c:
            raise IndivisibleClustering(self.p, self.n_c)

    @property
    def r_o(self):
        return (self.c + 1) * self.R / 2

    @property
    def heights(self):
        return {"PN": 0.0, "OTN": self.z_otn, "OBN": self.z_obn,
                "ITN": self.z_itn, "IBN": self.z_ibn}

    def with_c(self, c):
        return replace(self, c=c)


@dataclass(frozen=True, eq=False)
class DomeTopology:
    p: int
    node_groups: dict
    element_groups: dict = field(repr=False)
    loops: dict = field(repr=False)


def rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def first_unit(params: LevyParams) -> np.ndarray:
    """3 x 5 coordinates of PN, OTN, OBN, ITN, IBN in unit 1."""
    b = np.pi / params.p
    ro, cR = params.r_o, params.c * params.R
    h = params.heights
    return np.array([
        [params.R, ro * np.cos(b), ro * np.cos(b), cR, cR],
        [0.0, ro * np.sin(b), ro * np.sin(b), 0.0, 0.0],
        [h["PN"], h["OTN"], h["OBN"], h["ITN"], h["IBN"]],
    ])


def node_id(group, i, p):
    return NODE_GROUPS.index(group) * p + i % p


def generate_nodes(params: LevyParams) -> NodeSet:
    """5p nodes, group-major (all PN, then OTN, OBN, ITN, IBN); PN are pinned."""
    p = params.p
    unit = first_unit(params)
    T = rotation(2 * np.pi / p)
    units = [unit]
    for _ in range(p - 1):
        units.append(T @ units[-1])
    xyz = np.stack(units)  # p x 3 x 5
    coords = xyz.transpose(2, 0, 1).reshape(-1)
    fixed = list(range(p))
    return NodeSet(coords, list(range(p, 5 * p)), fixed)


def _zigzag(inner, outer, p, shift):
    """Closed loop inner_0 -> outer_{shift} -> inner_1 -> ... as directed members."""
    members = []
    for i in range(p):
        o = node_id(outer, i + shift, p)
        members.append((o, node_id(inner, i, p)))
        members.append((o, node_id(inner, i + 1, p)))
    return members


def _hoop(group, p):
    return [(node_id(group, i, p), node_id(group, i + 1, p)) for i in range(p)]


def generate_topology(params: LevyParams):
    """Connectivity (bars first) and the member groups of the dome.

    Every string group is listed in walking order around its closed loop; the
    ridge and diagonal loops start at their inner node of unit 1, so the
    arcs produced by ``generate_clustering`` run between inner nodes and pass
    over pulleys at the outer ones.
    """
    p = params.p
    members = {
        "OB": [(node_id("OTN", i, p), node_id("OBN", i, p)) for i in range(p)],
        "IB": [(node_id("ITN", i, p), node_id("IBN", i, p)) for i in range(p)],
        "ORS": _zigzag("OTN", "PN", p, 1),
        "ODS": _zigzag("OBN", "PN", p, 1),
        "IRS": _zigzag("ITN", "OTN", p, 0),
        "IDS": _zigzag("IBN", "OTN", p, 0),
        "OHS": _hoop("OBN", p),
        "IHS": _hoop("IBN", p),
        "THS": _hoop("ITN", p),
    }
    ends, groups, start = [], {}, 0
    for g in ELEMENT_GROUPS:
        groups[g] = list(range(start, start + len(members[g])))
        ends.extend(members[g])
        start += len(members[g])
    n_bars = 2 * p
    conn = Connectivity(np.array(ends), n_bars, len(ends) - n_bars)
    node_groups = {g: [node_id(g, i, p) for i in range(p)] for g in NODE_GROUPS}
    loops = {g: groups[g] for g in STRING_GROUPS}
    return conn, DomeTopology(p=p, node_groups=node_groups, element_groups=groups, loops=loops)


def generate_clustering(topology: DomeTopology, n_c: int) -> ClusterMap:
    """Bars stay single; each string loop is cut into n_c equal contiguous arcs."""
    p = topology.p
    if n_c < 1 or p % n_c:
        raise IndivisibleClustering(p, n_c)
    groups = [(e,) for g in BAR_GROUPS for e in topology.element_groups[g]]
    for g in STRING_GROUPS:
        loop = topology.loops[g]
        k = len(loop) // n_c
        groups.extend(tuple(loop[j * k:(j + 1) * k]) for j in range(n_c))
    return ClusterMap(tuple(groups))


def cluster_labels(topology: DomeTopology, cluster: ClusterMap):
    """Group name of each clustered element."""
    name_of = {}
    for g, elems in topology.element_groups.items():
        for e in elems:
            name_of[e] = g
    return [name_of[grp[0]] for grp in cluster.groups]


def material_from_capacities(is_bar, capacities=None, mass_scale=1.0) -> MaterialTable:
    """Default materials with optional overrides {'bar': {...}, 'string': {...}}."""
    capacities = capacities or {}
    bar = dict(STEEL_BAR, area=1.0, **capacities.get("bar", {}))
    string = dict(ALUMINIUM_STRING, area=1.0, **capacities.get("string", {}))
    return MaterialTable.uniform(is_bar, bar=bar, string=string, mass_scale=mass_scale)


def size_members(structure: Structure, t_c, capacity_fraction=CAPACITY_FRACTION,
                 min_area=MIN_GAUGE_AREA) -> MaterialTable:
    """Areas working every member at ``capacity_fraction`` of its capacity.

    Strings: A = |t| / (f sigma).  Bars: the larger of that strength area and
    the solid circular section whose Euler load is |t| / f.  Members without
    force get ``min_area``; with ``min_area=None`` they raise ZeroForceMember.
    """
    mat = structure.mat
    t = np.abs(np.asarray(t_c, dtype=float))
    area = t / (capacity_fraction * mat.capacity)
    l_c = cluster_lengths(structure.cluster, element_lengths(structure))
    bars = mat.is_bar
    # pi^2 E I / l^2 = |t| / f with I = A^2 / (4 pi)
    euler = np.sqrt(4 * t[bars] * l_c[bars] ** 2 / (capacity_fraction * np.pi * mat.modulus[bars]))
    area[bars] = np.maximum(area[bars], euler)
    zero = t == 0
    if np.any(zero):
        if min_area is None:
            raise ZeroForceMember(f"clusters {np.flatnonzero(zero).tolist()} carry no prestress")
        area[zero] = min_area
    return mat.with_area(area)


@dataclass(frozen=True, eq=False)
class Dome:
    params: LevyParams
    structure: Structure
    topology: DomeTopology
    prestress: PrestressState
    labels: list

    def group_clusters(self, name):
        return [i for i, lab in enumerate(self.labels) if lab == name]

    @property
    def anchor_group(self):
        return self.group_clusters("IB")[0]


def dome_skeleton(params: LevyParams, material: MaterialTable | None = None,
                  mass_scale=1.0):
    """Geometry, topology and clustering with rest lengths equal to current lengths."""
    nodes = generate_nodes(params)
    conn, topo = generate_topology(params)
    cluster = generate_clustering(topo, params.n_c)
    is_bar = cluster_is_bar(cluster, conn.n_bars)
    if material is None:
        material = material_from_capacities(is_bar, mass_scale=mass_scale)
    h = nodes.xyz
    l = np.linalg.norm(h[conn.ends[:, 1]] - h[conn.ends[:, 0]], axis=1)
    s = Structure(nodes, conn, cluster, material, cluster_lengths(cluster, l))
    return s, topo


def design_dome(params: LevyParams, *, anchor_force=IB_PRESTRESS, material=None,
                capacities=None, mass_scale=1.0, size=True, prestress_t_c=None) -> Dome:
    """Generate the dome, solve its prestress and size its members.

    With ``material`` given, areas are kept (trajectory studies); otherwise the
    members are sized from the prestress.  ``prestress_t_c`` bypasses the
    null-space solve (used when the clustering leaves several modes).
    """
    s, topo = dome_skeleton(params)
    if material is None:
        base = material_from_capacities(s.mat.is_bar, capacities, mass_scale)
    else:
        base = material
    s = s.with_material(base)
    labels = cluster_labels(topo, s.cluster)
    anchor = labels.index("IB")
    n_p, basis = prestress_modes(equilibrium_matrices(s))
    if prestress_t_c is None:
        ps = solve_prestress(s, basis, (anchor, anchor_force))
        t_c = ps.t_c
    else:
        t_c = np.asarray(prestress_t_c, dtype=float)
    if material is None and size:
        s = s.with_material(size_members(s, t_c))
    l_c = cluster_lengths(s.cluster, element_lengths(s))
    l0 = rest_lengths_from_prestress(s, t_c)
    s = s.with_rest_lengths(l0)
    ps = PrestressState(x_c=t_c / l_c, t_c=t_c, l_0c=l0, n_p=n_p, mode_basis=basis)
    return Dome(params=params, structure=s, topology=topo, prestress=ps, labels=labels)


def transfer_prestress(source: Dome, params: LevyParams):
    """Clustered forces for another clustering of the same geometry.

    The classic force densities of ``source`` are carried over; every segment of
    a new cluster must share one force density (true for the symmetric mode).
    """
    x = source.prestress.x_c[source.structure.cluster.group_of]
    s, _ = dome_skeleton(params)
    l = element_lengths(s)
    x_c = np.array([x[list(g)].mean() for g in s.cluster.groups])
    spread = np.array([np.ptp(x[list(g)]) for g in s.cluster.groups])
    if np.any(spread > 1e-8 * np.abs(x).max()):
        raise CTSError("source prestress is not uniform over the new clusters")
    return x_c * cluster_lengths(s.cluster, l)


def rotate_coords(coords, angle):
    xyz = np.asarray(coords).reshape(-1, 3)
    return (xyz @ rotation(angle).T).ravel()
