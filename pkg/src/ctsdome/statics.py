"""Static equilibrium forms, self-stress modes and prestress design."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Structure, cluster_lengths, element_lengths, force_densities, member_matrix
from .errors import InfeasibleSign, MultipleModes, NonphysicalForce

SVD_TOL = 1e-8
RESIDUAL_TOL = 1e-6
FORCE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class EquilibriumMatrices:
    A1ca: np.ndarray  # force-density form
    A2ca: np.ndarray  # force form


@dataclass(frozen=True, eq=False)
class PrestressState:
    x_c: np.ndarray
    t_c: np.ndarray
    l_0c: np.ndarray
    n_p: int
    mode_basis: np.ndarray


def scatter_columns(structure: Structure, vecs) -> np.ndarray:
    """Assemble (C^T (x) I3) b.d.(vecs) S^T as a dense 3n_n x n_ec matrix.

    ``vecs`` is 3 x n_e; element m contributes -vecs[:, m] at its start node
    and +vecs[:, m] at its end node, in the column of its cluster.
    """
    n = structure.nodes.n_nodes
    out = np.zeros((n, 3, structure.cluster.n_clusters))
    ends = structure.conn.ends
    g = structure.cluster.group_of
    v = np.asarray(vecs).T
    np.add.at(out, (ends[:, 0], slice(None), g), -v)
    np.add.at(out, (ends[:, 1], slice(None), g), v)
    return out.reshape(3 * n, -1)


def full_equilibrium_matrix(structure: Structure) -> np.ndarray:
    """A_1c on all 3n_n coordinates."""
    return scatter_columns(structure, member_matrix(structure))


def equilibrium_matrices(structure: Structure) -> EquilibriumMatrices:
    l_c = cluster_lengths(structure.cluster, element_lengths(structure))
    A1ca = full_equilibrium_matrix(structure)[structure.nodes.free_dofs]
    return EquilibriumMatrices(A1ca=A1ca, A2ca=A1ca / l_c)


def prestress_modes(eq: EquilibriumMatrices, svd_tol: float = SVD_TOL):
    """Right null space of A1ca; singular values below svd_tol * s_max count as zero."""
    A = eq.A1ca
    n_ec = A.shape[1]
    if A.shape[0] == 0 or not np.any(A):
        return n_ec, np.eye(n_ec)
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > svd_tol * s[0]))
    basis = vt[rank:].T
    return n_ec - rank, basis


def rest_lengths_from_prestress(structure: Structure, t_c) -> np.ndarray:
    """Invert t = EA (l - l0) / l0 for the clustered rest lengths."""
    t_c = np.asarray(t_c, dtype=float)
    EA = structure.mat.axial_rigidity
    denom = t_c + EA
    if np.any(denom <= 0):
        bad = np.flatnonzero(denom <= 0).tolist()
        raise NonphysicalForce(f"t + EA <= 0 for clusters {bad}")
    l_c = cluster_lengths(structure.cluster, element_lengths(structure))
    return EA * l_c / denom


def solve_prestress(structure: Structure, mode_basis, anchor) -> PrestressState:
    """Scale the single self-stress mode so that ``anchor = (group, force)`` holds.

    Strings must come out tensile; the anchor sign fixes the overall sign.
    """
    mode_basis = np.asarray(mode_basis)
    n_p = mode_basis.shape[1]
    if n_p != 1:
        raise MultipleModes(f"{n_p} prestress modes; anchoring a single member is ambiguous")
    group, target = anchor
    l_c = cluster_lengths(structure.cluster, element_lengths(structure))
    shape = mode_basis[:, 0] * l_c
    if abs(shape[group]) <= FORCE_TOL * np.abs(shape).max():
        raise InfeasibleSign(f"the prestress mode carries no force in anchor group {group}")
    t_c = shape * (target / shape[group])
    strings = ~structure.mat.is_bar
    if np.any(t_c[strings] < -FORCE_TOL * np.abs(t_c).max()):
        bad = np.flatnonzero(strings & (t_c < 0)).tolist()
        raise InfeasibleSign(f"strings {bad} would carry compression")
    x_c = t_c / l_c
    l_0c = rest_lengths_from_prestress(structure, t_c)
    return PrestressState(x_c=x_c, t_c=t_c, l_0c=l_0c, n_p=n_p, mode_basis=mode_basis)


def internal_force(structure: Structure) -> np.ndarray:
    """K n on all coordinates: the nodal resultant of the member forces."""
    x_c, _ = force_densities(structure)
    return full_equilibrium_matrix(structure) @ x_c


def static_residual(structure: Structure, external_load=None, gravity=None) -> np.ndarray:
    """A1ca x_c - w_a on the free coordinates.

    ``external_load`` is a full-length nodal force vector; ``gravity`` a full
    length gravity vector (added with the sign of w_a = E_a^T (f_ex - g)).
    """
    f = internal_force(structure)
    if external_load is not None:
        f = f - np.asarray(external_load, dtype=float)
    if gravity is not None:
        f = f + np.asarray(gravity, dtype=float)
    return f[structure.nodes.free_dofs]
