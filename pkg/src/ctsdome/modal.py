"""Tangent stiffness, global stability and free-vibration analysis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import Structure, cluster_lengths, element_lengths, force_densities, member_matrix
from .errors import EigSolverFailure
from .statics import scatter_columns

STABILITY_TOL = 1e-6
K_MODES = 10


@dataclass(frozen=True, eq=False)
class StiffnessBundle:
    K: np.ndarray
    K_T: np.ndarray
    K_Taa: np.ndarray


@dataclass(frozen=True, eq=False)
class ModalResult:
    lambda_min: float
    stiffness_eigenvalues: np.ndarray
    stiffness_modes: np.ndarray
    frequencies: np.ndarray
    mode_shapes: np.ndarray


def block_expand(node_matrix) -> np.ndarray:
    """node_matrix (x) I3, scattered one axis at a time."""
    n = node_matrix.shape[0]
    K = np.zeros((n, 3, n, 3))
    for d in range(3):
        K[:, d, :, d] = node_matrix
    return K.reshape(3 * n, 3 * n)


def stiffness_matrix(structure: Structure, x=None) -> np.ndarray:
    """K = (C^T diag(x) C) (x) I3 with x the classic force densities."""
    if x is None:
        x = force_densities(structure)[1]
    n = structure.nodes.n_nodes
    j, k = structure.conn.ends.T
    Kn = np.zeros((n, n))
    np.add.at(Kn, (j, j), x)
    np.add.at(Kn, (k, k), x)
    np.add.at(Kn, (j, k), -x)
    np.add.at(Kn, (k, j), -x)
    return block_expand(Kn)


def tangent_stiffness(structure: Structure, consistent: bool = True) -> StiffnessBundle:
    """Geometric plus material stiffness on all coordinates and on the free ones.

    With ``consistent=True`` the material term is the exact derivative of the
    nodal force A_1c x_c, A_1c diag(E_t A / l_c^2) B^T, where column g of B sums
    the unit vectors of the segments of cluster g.  ``consistent=False`` gives
    A_1c diag(E_t A / l_c^3) A_1c^T.  Both coincide for unclustered structures.
    Slack strings contribute nothing.
    """
    H = member_matrix(structure)
    l = element_lengths(structure)
    l_c = cluster_lengths(structure.cluster, l)
    x_c, x = force_densities(structure)
    mat = structure.mat
    K = stiffness_matrix(structure, x)

    coef = mat.tangent_modulus * mat.area / l_c**2
    slack = ~mat.is_bar & (l_c < structure.rest_lengths_c)
    coef[slack] = 0.0
    A1c = scatter_columns(structure, H)
    if consistent:
        B = scatter_columns(structure, H / l)
    else:
        B = A1c / l_c
    K_T = K + (A1c * coef) @ B.T
    free = structure.nodes.free_dofs
    return StiffnessBundle(K=K, K_T=K_T, K_Taa=K_T[np.ix_(free, free)])


def _sym(A):
    return 0.5 * (A + A.T)


def min_eigenvalue(K_Taa) -> float:
    if K_Taa.size == 0:
        return float("inf")
    try:
        return float(np.linalg.eigvalsh(_sym(K_Taa))[0])
    except np.linalg.LinAlgError as exc:
        raise EigSolverFailure(str(exc)) from exc


def is_stable(lambda_min, tol=STABILITY_TOL) -> bool:
    return lambda_min > tol


def natural_frequencies(structure: Structure, k_modes: int = K_MODES, M_aa=None,
                        K_Taa=None) -> ModalResult:
    """Smallest k_modes natural frequencies (Hz) from K_Taa phi = w^2 M_aa phi."""
    if K_Taa is None:
        K_Taa = tangent_stiffness(structure).K_Taa
    if M_aa is None:
        from .dynamics import assemble_mass
        M_aa = assemble_mass(structure)[1]
    K_Taa = _sym(K_Taa)
    k = min(k_modes, K_Taa.shape[0])
    try:
        lam, vec = np.linalg.eigh(K_Taa)
        w2, phi = scipy.linalg.eigh(K_Taa, M_aa, subset_by_index=[0, k - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigSolverFailure(str(exc)) from exc
    freqs = np.sqrt(np.clip(w2, 0.0, None)) / (2 * np.pi)
    return ModalResult(lambda_min=float(lam[0]), stiffness_eigenvalues=lam[:k],
                       stiffness_modes=vec[:, :k], frequencies=freqs, mode_shapes=phi)
