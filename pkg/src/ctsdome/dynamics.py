"""Mass, damping and gravity assembly and the implicit nonlinear integrator."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import Structure, cluster_lengths, element_lengths, mass_vector, member_forces
from .errors import CTSError, InsufficientModes, NewtonDivergence
from .modal import block_expand, natural_frequencies, tangent_stiffness
from .statics import internal_force

STANDARD_GRAVITY = 9.80665
NEWMARK_GAMMA = 0.5
NEWMARK_BETA = 0.25


@dataclass(frozen=True)
class DynamicsConfig:
    dt: float = 0.001
    t_end: float = 1.0
    damping_ratio: float = 0.01
    gravity_on: bool = False
    newton_tol: float = 1e-2
    newton_max_iter: int = 25
    mass_scale: Optional[float] = None
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise CTSError("dt must be positive")
        if not 0 <= self.damping_ratio < 1:
            raise CTSError("damping_ratio must lie in [0, 1)")
        if self.record_every < 1:
            raise CTSError("record_every must be at least 1")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True, eq=False)
class DeployRecord:
    times: np.ndarray
    coords: np.ndarray
    velocities: np.ndarray
    member_forces_c: np.ndarray
    actuation: np.ndarray
    newton_iterations: np.ndarray


def _node_mass_matrix(structure, m):
    n = structure.nodes.n_nodes
    j, k = structure.conn.ends.T
    Mn = np.zeros((n, n))
    np.add.at(Mn, (j, j), m / 3)
    np.add.at(Mn, (k, k), m / 3)
    np.add.at(Mn, (j, k), m / 6)
    np.add.at(Mn, (k, j), m / 6)
    return Mn


def assemble_mass(structure: Structure, m=None):
    """Consistent mass matrix and its free/free, free/fixed partitions."""
    if m is None:
        m = mass_vector(structure)
    M = block_expand(_node_mass_matrix(structure, m))
    a, b = structure.nodes.free_dofs, structure.nodes.fixed_dofs
    return M, M[np.ix_(a, a)], M[np.ix_(a, b)]


def gravity_vector(structure: Structure, m=None, g=STANDARD_GRAVITY) -> np.ndarray:
    """Half of each element's weight lumped on each end node, +z component."""
    if m is None:
        m = mass_vector(structure)
    n = structure.nodes.n_nodes
    per_node = np.zeros(n)
    np.add.at(per_node, structure.conn.ends.ravel(), np.repeat(m, 2))
    out = np.zeros((n, 3))
    out[:, 2] = 0.5 * g * per_node
    return out.ravel()


def rayleigh_coefficients(omegas, damping_ratio):
    """(a0, a1) giving the target ratio at the two lowest distinct nonzero omegas."""
    omegas = np.sort(np.asarray(omegas, dtype=float))
    if damping_ratio == 0:
        return 0.0, 0.0
    if omegas.size == 0:
        raise InsufficientModes("no positive natural frequency to calibrate damping")
    w1 = omegas[0]
    distinct = omegas[omegas > w1 * (1 + 1e-6)]
    if distinct.size == 0:
        return damping_ratio * w1, damping_ratio / w1
    w2 = distinct[0]
    return 2 * damping_ratio * w1 * w2 / (w1 + w2), 2 * damping_ratio / (w1 + w2)


def assemble_damping(structure: Structure, damping_ratio: float, M=None, K_T=None):
    """Rayleigh damping D = a0 M + a1 K_T fixed at the given configuration."""
    if M is None:
        M = assemble_mass(structure)[0]
    if K_T is None:
        K_T = tangent_stiffness(structure).K_T
    a, b = structure.nodes.free_dofs, structure.nodes.fixed_dofs
    if damping_ratio == 0:
        D = np.zeros_like(M)
    else:
        res = natural_frequencies(structure, k_modes=len(a), M_aa=M[np.ix_(a, a)],
                                  K_Taa=K_T[np.ix_(a, a)])
        w = 2 * np.pi * res.frequencies
        positive = w[w > 1e-6 * max(w.max(), 1e-300)]
        a0, a1 = rayleigh_coefficients(positive, damping_ratio)
        D = a0 * M + a1 * 0.5 * (K_T + K_T.T)
    return D, D[np.ix_(a, a)], D[np.ix_(a, b)]


def elastic_energy(structure: Structure) -> float:
    l_c = cluster_lengths(structure.cluster, element_lengths(structure))
    l0 = structure.rest_lengths_c
    e = 0.5 * structure.mat.axial_rigidity * (l_c - l0) ** 2 / l0
    e[~structure.mat.is_bar & (l_c < l0)] = 0.0
    return float(e.sum())


def mechanical_energy(structure: Structure, v_a) -> float:
    """Kinetic plus elastic energy, with the mass refreshed at the current state."""
    M_aa = assemble_mass(structure)[1]
    return 0.5 * float(v_a @ M_aa @ v_a) + elastic_energy(structure)


def _load_at(external_load, t, n):
    if external_load is None:
        return np.zeros(n)
    if callable(external_load):
        return np.asarray(external_load(t), dtype=float)
    return np.asarray(external_load, dtype=float)


def integrate(structure: Structure, config: DynamicsConfig,
              actuation: Optional[Callable[[float], np.ndarray]] = None,
              external_load=None, v0=None, check_equilibrium=True) -> DeployRecord:
    """Average-acceleration Newmark with full Newton iterations.

    ``actuation(t)`` returns the clustered rest lengths at time t; mass, force
    densities and stiffness are refreshed from the trial state every iteration.
    """
    if config.mass_scale is not None:
        from dataclasses import replace
        structure = structure.with_material(replace(structure.mat, mass_scale=config.mass_scale))
    dt, beta, gamma = config.dt, NEWMARK_BETA, NEWMARK_GAMMA
    free = structure.nodes.free_dofs
    n_all = structure.coords.size
    coords = structure.coords.copy()
    if actuation is not None:
        structure = structure.with_rest_lengths(actuation(0.0))

    def loads(s, t):
        w = _load_at(external_load, t, n_all)
        if config.gravity_on:
            w = w - gravity_vector(s)
        return w[free]

    f0 = internal_force(structure)[free] - loads(structure, 0.0)
    if check_equilibrium and np.abs(f0).max(initial=0.0) >= 10 * config.newton_tol and v0 is None:
        raise CTSError(f"initial state is not in static equilibrium (residual {np.abs(f0).max():.3e} N)")

    M, M_aa, _ = assemble_mass(structure)
    K_T = tangent_stiffness(structure).K_T
    _, D_aa, _ = assemble_damping(structure, config.damping_ratio, M=M, K_T=K_T)

    u = coords[free].copy()
    v = np.zeros_like(u) if v0 is None else np.asarray(v0, dtype=float).copy()
    acc = np.linalg.solve(M_aa, -f0 - D_aa @ v)

    n_steps = config.n_steps
    keep = list(range(0, n_steps + 1, config.record_every))
    if keep[-1] != n_steps:
        keep.append(n_steps)
    rec_t, rec_x, rec_v, rec_f, rec_l0, rec_it = [], [], [], [], [], []

    def record(step, s, v, iters):
        rec_t.append(step * dt)
        rec_x.append(s.coords.copy())
        vel = np.zeros(n_all)
        vel[free] = v
        rec_v.append(vel)
        rec_f.append(member_forces(s)[0])
        rec_l0.append(s.rest_lengths_c.copy())
        rec_it.append(iters)

    record(0, structure, v, 0)
    keep_set = set(keep)
    s = structure
    c_acc = 1.0 / (beta * dt * dt)
    for step in range(1, n_steps + 1):
        t = step * dt
        base = s.with_rest_lengths(actuation(t)) if actuation is not None else s
        u_n, v_n, a_n = u, v, acc
        du = dt * v_n + 0.5 * dt * dt * a_n
        for it in range(1, config.newton_max_iter + 1):
            acc_t = c_acc * (du - dt * v_n) - (0.5 / beta - 1.0) * a_n
            v_t = v_n + dt * ((1 - gamma) * a_n + gamma * acc_t)
            coords[free] = u_n + du
            s = base.with_coords(coords)
            M_aa = assemble_mass(s)[1]
            R = M_aa @ acc_t + D_aa @ v_t + internal_force(s)[free] - loads(s, t)
            if np.abs(R).max() <= config.newton_tol:
                break
            J = c_acc * M_aa + (gamma / (beta * dt)) * D_aa + tangent_stiffness(s).K_Taa
            du = du - np.linalg.solve(J, R)
        else:
            raise NewtonDivergence(
                f"Newton did not converge at t={t:.6g}s (residual {np.abs(R).max():.3e} N)")
        u, v, acc = u_n + du, v_t, acc_t
        if step in keep_set:
            record(step, s, v, it)

    return DeployRecord(times=np.array(rec_t), coords=np.array(rec_x),
                        velocities=np.array(rec_v), member_forces_c=np.array(rec_f),
                        actuation=np.array(rec_l0), newton_iterations=np.array(rec_it))
