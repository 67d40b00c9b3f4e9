"""Structural data types and the element-level algebra of clustered tensegrity.

Conventions: nodes are 0-based; the coordinate vector is ordered
``(x0, y0, z0, x1, y1, z1, ...)``; element ``m`` runs from node ``ends[m, 0]``
to node ``ends[m, 1]`` and bars precede strings.  Clustered quantities carry a
``_c`` suffix and are indexed by cluster group.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import numpy as np

from .errors import CTSError, DegenerateElement, NonphysicalForce

LENGTH_EPSILON = 1e-12


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NodeSet:
    coords: np.ndarray
    free_idx: tuple
    fixed_idx: tuple

    def __post_init__(self):
        coords = _frozen(self.coords).ravel()
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "free_idx", tuple(int(i) for i in self.free_idx))
        object.__setattr__(self, "fixed_idx", tuple(int(i) for i in self.fixed_idx))
        if coords.size % 3:
            raise CTSError(f"coords length {coords.size} is not a multiple of 3")
        n = coords.size // 3
        both = list(self.free_idx) + list(self.fixed_idx)
        if sorted(both) != list(range(n)):
            raise CTSError("free_idx and fixed_idx must partition the node indices")

    @property
    def n_nodes(self):
        return self.coords.size // 3

    @property
    def xyz(self):
        return self.coords.reshape(-1, 3)

    @property
    def free_dofs(self):
        """Coordinate indices of the free nodes (the action of E_a)."""
        return dof_indices(self.free_idx)

    @property
    def fixed_dofs(self):
        return dof_indices(self.fixed_idx)

    def with_coords(self, coords):
        return replace(self, coords=coords)


def dof_indices(nodes):
    nodes = np.asarray(nodes, dtype=int)
    return (3 * nodes[:, None] + np.arange(3)).ravel()


@dataclass(frozen=True, eq=False)
class Connectivity:
    ends: np.ndarray
    n_bars: int
    n_strings: int

    def __post_init__(self):
        ends = _frozen(self.ends, dtype=int).reshape(-1, 2)
        object.__setattr__(self, "ends", ends)
        if self.n_bars + self.n_strings != len(ends):
            raise CTSError("n_bars + n_strings must equal the number of elements")
        if np.any(ends[:, 0] == ends[:, 1]):
            bad = int(np.flatnonzero(ends[:, 0] == ends[:, 1])[0])
            raise CTSError(f"element {bad} starts and ends at the same node")

    @property
    def n_elements(self):
        return len(self.ends)

    def is_bar(self):
        return np.arange(self.n_elements) < self.n_bars

    def matrix(self, n_nodes):
        """Dense signed connectivity matrix C (n_e x n_n)."""
        C = np.zeros((self.n_elements, n_nodes))
        rows = np.arange(self.n_elements)
        C[rows, self.ends[:, 0]] = -1.0
        C[rows, self.ends[:, 1]] = 1.0
        return C

    def degree(self, n_nodes):
        return np.bincount(self.ends.ravel(), minlength=n_nodes)


@dataclass(frozen=True, eq=False)
class ClusterMap:
    """Row supports of the Boolean cluster matrix S."""

    groups: tuple
    group_of: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        groups = tuple(tuple(int(e) for e in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        n_e = sum(len(g) for g in groups)
        group_of = np.full(n_e, -1, dtype=int)
        for gi, g in enumerate(groups):
            if not g:
                raise CTSError(f"cluster group {gi} is empty")
            for e in g:
                if not 0 <= e < n_e or group_of[e] != -1:
                    raise CTSError(f"element {e} is missing or assigned to more than one cluster")
                group_of[e] = gi
        group_of.setflags(write=False)
        object.__setattr__(self, "group_of", group_of)

    @classmethod
    def identity(cls, n_elements):
        return cls(tuple((e,) for e in range(n_elements)))

    @property
    def n_clusters(self):
        return len(self.groups)

    @property
    def n_elements(self):
        return len(self.group_of)

    @property
    def sizes(self):
        return np.bincount(self.group_of, minlength=self.n_clusters)

    def matrix(self):
        """Dense S (n_ec x n_e); for inspection and tests only."""
        S = np.zeros((self.n_clusters, self.n_elements))
        S[self.group_of, np.arange(self.n_elements)] = 1.0
        return S

    def validate(self, conn: Connectivity):
        if self.n_elements != conn.n_elements:
            raise CTSError("cluster map and connectivity disagree on element count")
        for gi, g in enumerate(self.groups):
            if len(g) == 1:
                continue
            if any(e < conn.n_bars for e in g):
                raise CTSError(f"cluster {gi} mixes a bar into a multi-element group")
            if not _is_chain(conn.ends[list(g)]):
                raise CTSError(f"cluster {gi} is not a connected path or loop of strings")


def _is_chain(ends):
    """True if the members form one connected path or cycle in the node graph."""
    nodes, counts = np.unique(ends, return_counts=True)
    if counts.max() > 2:
        return False
    parent = {int(n): int(n) for n in nodes}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for j, k in ends:
        parent[find(int(j))] = find(int(k))
    return len({find(int(n)) for n in nodes}) == 1


@dataclass(frozen=True, eq=False)
class MaterialTable:
    """Per-cluster section and material data (SI units)."""

    area: np.ndarray
    modulus: np.ndarray
    tangent_modulus: np.ndarray
    density: np.ndarray
    is_bar: np.ndarray
    capacity: np.ndarray
    mass_scale: float = 1.0

    def __post_init__(self):
        for name in ("area", "modulus", "tangent_modulus", "density", "capacity"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(self, "is_bar", _frozen(self.is_bar, dtype=bool))
        n = self.area.size
        for name in ("modulus", "tangent_modulus", "density", "is_bar", "capacity"):
            if getattr(self, name).size != n:
                raise CTSError(f"material field {name} has the wrong length")
        for name in ("area", "modulus", "tangent_modulus", "density"):
            if np.any(getattr(self, name) <= 0):
                raise CTSError(f"material field {name} must be strictly positive")
        if not np.array_equal(self.modulus, self.tangent_modulus):
            raise CTSError("only linear-elastic materials are supported (E must equal E_t)")
        if self.mass_scale <= 0:
            raise CTSError("mass_scale must be positive")

    @property
    def axial_rigidity(self):
        return self.modulus * self.area

    @classmethod
    def uniform(cls, is_bar, *, bar, string, mass_scale=1.0):
        """Build a table from two property dicts keyed like the fields."""
        is_bar = np.asarray(is_bar, dtype=bool)

        def pick(key):
            return np.where(is_bar, bar[key], string[key]).astype(float)

        E = pick("modulus")
        return cls(area=pick("area"), modulus=E, tangent_modulus=E.copy(),
                   density=pick("density"), is_bar=is_bar, capacity=pick("capacity"),
                   mass_scale=mass_scale)

    def with_area(self, area):
        return replace(self, area=area)


@dataclass(frozen=True, eq=False)
class Structure:
    nodes: NodeSet
    conn: Connectivity
    cluster: ClusterMap
    mat: MaterialTable
    rest_lengths_c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rest_lengths_c", _frozen(self.rest_lengths_c))
        n_ec = self.cluster.n_clusters
        if self.rest_lengths_c.size != n_ec or self.mat.area.size != n_ec:
            raise CTSError("rest lengths and materials must have one entry per cluster")
        if np.any(self.rest_lengths_c <= 0):
            raise CTSError("rest lengths must be strictly positive")
        if self.conn.ends.max() >= self.nodes.n_nodes:
            raise CTSError("connectivity references a node that does not exist")
        self.cluster.validate(self.conn)
        bar_c = np.zeros(n_ec, dtype=bool)
        bar_c[self.cluster.group_of[: self.conn.n_bars]] = True
        if not np.array_equal(bar_c, self.mat.is_bar):
            raise CTSError("material kinds disagree with the bar/string ordering")

    @property
    def coords(self):
        return self.nodes.coords

    def with_coords(self, coords):
        return replace(self, nodes=self.nodes.with_coords(coords))

    def with_rest_lengths(self, rest_lengths_c):
        return replace(self, rest_lengths_c=rest_lengths_c)

    def with_material(self, mat):
        return replace(self, mat=mat)


def member_matrix(structure: Structure) -> np.ndarray:
    """H (3 x n_e): column m is coords(to) - coords(from)."""
    xyz = structure.nodes.xyz
    ends = structure.conn.ends
    return (xyz[ends[:, 1]] - xyz[ends[:, 0]]).T


def element_lengths(structure: Structure) -> np.ndarray:
    l = np.linalg.norm(member_matrix(structure), axis=0)
    if np.any(l < LENGTH_EPSILON):
        bad = np.flatnonzero(l < LENGTH_EPSILON).tolist()
        raise DegenerateElement(f"elements {bad} have zero length")
    return l


def cluster_lengths(cluster: ClusterMap, l) -> np.ndarray:
    return np.bincount(cluster.group_of, weights=np.asarray(l, dtype=float),
                       minlength=cluster.n_clusters)


cluster_rest_lengths = cluster_lengths


def expand(cluster: ClusterMap, v_c) -> np.ndarray:
    """Broadcast clustered values back to classic elements (action of S^T)."""
    return np.asarray(v_c, dtype=float)[cluster.group_of]


def _forces_from(structure, l_c):
    mat = structure.mat
    l0 = structure.rest_lengths_c
    t_c = mat.axial_rigidity * (l_c - l0) / l0
    slack = ~mat.is_bar & (l_c < l0)
    t_c[slack] = 0.0
    return t_c


def member_forces(structure: Structure):
    """Clustered and classic axial forces (tension positive)."""
    l_c = cluster_lengths(structure.cluster, element_lengths(structure))
    t_c = _forces_from(structure, l_c)
    return t_c, expand(structure.cluster, t_c)


def force_densities(structure: Structure):
    l_c = cluster_lengths(structure.cluster, element_lengths(structure))
    if np.any(l_c < LENGTH_EPSILON):
        raise DegenerateElement("clustered element of zero length")
    x_c = _forces_from(structure, l_c) / l_c
    return x_c, expand(structure.cluster, x_c)


def element_rest_lengths(structure: Structure, l=None, t=None):
    """Per-element rest lengths recovered from the current length and force."""
    if l is None:
        l = element_lengths(structure)
    if t is None:
        t = member_forces(structure)[1]
    EA = expand(structure.cluster, structure.mat.axial_rigidity)
    denom = t + EA
    if np.any(denom <= 0):
        raise NonphysicalForce("t + EA <= 0: compression exceeds the axial rigidity")
    return EA * l / denom


def mass_vector(structure: Structure, l=None, t=None) -> np.ndarray:
    """Element masses from the rest length each segment currently holds."""
    mat = structure.mat
    rho_a = expand(structure.cluster, mat.density * mat.area)
    return mat.mass_scale * rho_a * element_rest_lengths(structure, l, t)


def build_structure(coords, ends, n_bars, fixed, *, groups=None, material=None,
                    rest_lengths_c=None) -> Structure:
    """Convenience constructor; rest lengths default to current cluster lengths."""
    coords = np.asarray(coords, dtype=float).ravel()
    n = coords.size // 3
    fixed = sorted(int(i) for i in fixed)
    free = [i for i in range(n) if i not in set(fixed)]
    nodes = NodeSet(coords, free, fixed)
    ends = np.asarray(ends, dtype=int).reshape(-1, 2)
    conn = Connectivity(ends, n_bars, len(ends) - n_bars)
    cluster = ClusterMap.identity(len(ends)) if groups is None else ClusterMap(groups)
    if material is None:
        raise CTSError("material table required")
    if rest_lengths_c is None:
        h = coords.reshape(-1, 3)
        l = np.linalg.norm(h[ends[:, 1]] - h[ends[:, 0]], axis=1)
        rest_lengths_c = cluster_lengths(cluster, l)
    return Structure(nodes, conn, cluster, material, rest_lengths_c)


def cluster_is_bar(cluster: ClusterMap, n_bars: int) -> np.ndarray:
    bar_c = np.zeros(cluster.n_clusters, dtype=bool)
    bar_c[cluster.group_of[:n_bars]] = True
    return bar_c
