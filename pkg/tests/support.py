"""Shared builders and an independent classic-tensegrity reference implementation."""
import numpy as np
import scipy.linalg

from ctsdome.core import MaterialTable, build_structure
from ctsdome.statics import equilibrium_matrices, prestress_modes, solve_prestress

BAR = dict(area=1e-4, modulus=2.0e11, density=7800.0, capacity=3e8)
STRING = dict(area=1e-5, modulus=6.0e10, density=2700.0, capacity=1e8)
PRISM_TWIST = 7 * np.pi / 6


def prism_coords(alpha=PRISM_TWIST, r=1.0, h=1.0):
    b = [(r * np.cos(2 * np.pi * i / 3), r * np.sin(2 * np.pi * i / 3), 0.0) for i in range(3)]
    t = [(r * np.cos(2 * np.pi * i / 3 + alpha), r * np.sin(2 * np.pi * i / 3 + alpha), h)
         for i in range(3)]
    return np.array(b + t)


PRISM_ENDS = ([(i, 3 + i) for i in range(3)]
              + [(3 + i, 3 + (i + 1) % 3) for i in range(3)]
              + [(i, 3 + (i + 1) % 3) for i in range(3)])


def prism(anchor_force=-1000.0, mass_scale=1.0):
    """Triangular prism, bottom pinned, prestressed with the bars at anchor_force."""
    is_bar = [True] * 3 + [False] * 6
    mat = MaterialTable.uniform(is_bar, bar=BAR, string=STRING, mass_scale=mass_scale)
    s = build_structure(prism_coords(), PRISM_ENDS, 3, [0, 1, 2], material=mat)
    _, basis = prestress_modes(equilibrium_matrices(s))
    ps = solve_prestress(s, basis, (0, anchor_force))
    return s.with_rest_lengths(ps.l_0c)


def random_structure(rng, n_nodes=6, n_bars=2, chain=4, n_fixed=2, cluster=True):
    """Random nodes, a few bars and a string path clustered into arcs."""
    coords = rng.uniform(-1, 1, size=(n_nodes, 3))
    order = rng.permutation(n_nodes)
    ends = []
    for k in range(n_bars):
        a, b = rng.choice(n_nodes, size=2, replace=False)
        ends.append((int(a), int(b)))
    for k in range(chain):
        ends.append((int(order[k]), int(order[k + 1])))
    for k in range(n_nodes):
        a, b = rng.choice(n_nodes, size=2, replace=False)
        ends.append((int(a), int(b)))
    n_e = len(ends)
    groups = [(e,) for e in range(n_bars)]
    if cluster:
        cut = int(rng.integers(1, chain))
        groups += [tuple(range(n_bars, n_bars + cut)), tuple(range(n_bars + cut, n_bars + chain))]
    else:
        groups += [(e,) for e in range(n_bars, n_bars + chain)]
    groups += [(e,) for e in range(n_bars + chain, n_e)]
    is_bar = np.zeros(len(groups), dtype=bool)
    is_bar[:n_bars] = True
    mat = MaterialTable.uniform(is_bar, bar=BAR, string=STRING)
    s = build_structure(coords, ends, n_bars, list(range(n_fixed)), groups=groups, material=mat)
    # stretch strings and squeeze bars a little so every member carries force
    l0 = s.rest_lengths_c * np.where(is_bar, 1.001, 0.999)
    return s.with_rest_lengths(l0)


# classic (unclustered) formulation, written element by element

class ClassicTensegrity:
    def __init__(self, coords, ends, fixed, EA, rest, rho_a, is_bar):
        self.x0 = np.asarray(coords, dtype=float).reshape(-1, 3).copy()
        self.ends = [tuple(e) for e in ends]
        self.n = len(self.x0)
        self.fixed = set(fixed)
        self.free = [i for i in range(self.n) if i not in self.fixed]
        self.dofs = [3 * i + d for i in self.free for d in range(3)]
        self.EA = np.asarray(EA, dtype=float)
        self.rest = np.asarray(rest, dtype=float)
        self.rho_a = np.asarray(rho_a, dtype=float)
        self.is_bar = np.asarray(is_bar, dtype=bool)

    @classmethod
    def from_structure(cls, s):
        assert all(len(g) == 1 for g in s.cluster.groups)
        m = s.mat
        return cls(s.coords, s.conn.ends, s.nodes.fixed_idx, m.modulus * m.area,
                   s.rest_lengths_c, m.mass_scale * m.density * m.area, m.is_bar)

    def force(self, e, xyz):
        j, k = self.ends[e]
        h = xyz[k] - xyz[j]
        l = np.sqrt(h @ h)
        t = self.EA[e] * (l - self.rest[e]) / self.rest[e]
        if not self.is_bar[e] and t < 0:
            t = 0.0
        return h, l, t

    def nodal_force(self, xyz):
        f = np.zeros((self.n, 3))
        for e, (j, k) in enumerate(self.ends):
            h, l, t = self.force(e, xyz)
            f[j] -= t / l * h
            f[k] += t / l * h
        return f.ravel()

    def tangent(self, xyz):
        K = np.zeros((3 * self.n, 3 * self.n))
        for e, (j, k) in enumerate(self.ends):
            h, l, t = self.force(e, xyz)
            ke = (t / l) * np.eye(3)
            if self.is_bar[e] or t > 0:
                ke = ke + self.EA[e] / l**3 * np.outer(h, h)
            for a, b, sgn in ((j, j, 1), (k, k, 1), (j, k, -1), (k, j, -1)):
                K[3 * a:3 * a + 3, 3 * b:3 * b + 3] += sgn * ke
        return K

    def mass(self):
        M = np.zeros((3 * self.n, 3 * self.n))
        for e, (j, k) in enumerate(self.ends):
            m = self.rho_a[e] * self.rest[e]
            for a, b, w in ((j, j, 1 / 3), (k, k, 1 / 3), (j, k, 1 / 6), (k, j, 1 / 6)):
                for d in range(3):
                    M[3 * a + d, 3 * b + d] += w * m
        return M

    def integrate(self, dt, n_steps, damping_ratio=0.0, v0=None, tol=1e-7):
        """Trapezoidal-rule Newmark with Newton iterations; returns free coords per step."""
        a_idx = self.dofs
        M = self.mass()[np.ix_(a_idx, a_idx)]
        D = np.zeros_like(M)
        if damping_ratio:
            K0 = self.tangent(self.x0)[np.ix_(a_idx, a_idx)]
            w = np.sqrt(np.clip(scipy.linalg.eigh(0.5 * (K0 + K0.T), M, eigvals_only=True), 0, None))
            w = np.unique(np.round(w[w > 1e-9 * w.max()], 9))
            w1, w2 = w[0], w[1]
            D = (2 * damping_ratio * w1 * w2 / (w1 + w2)) * M + (2 * damping_ratio / (w1 + w2)) * 0.5 * (K0 + K0.T)
        xyz = self.x0.copy()
        u = xyz.ravel()[a_idx].copy()
        v = np.zeros_like(u) if v0 is None else np.array(v0, dtype=float)
        acc = np.linalg.solve(M, -self.nodal_force(xyz)[a_idx] - D @ v)
        out = [u.copy()]
        for _ in range(n_steps):
            u_new = u + dt * v + 0.25 * dt * dt * acc
            for _ in range(50):
                a_new = 4 / dt**2 * (u_new - u) - 4 / dt * v - acc
                v_new = v + dt / 2 * (acc + a_new)
                flat = xyz.ravel()
                flat[a_idx] = u_new
                xyz = flat.reshape(-1, 3)
                R = M @ a_new + D @ v_new + self.nodal_force(xyz)[a_idx]
                if np.abs(R).max() < tol:
                    break
                J = 4 / dt**2 * M + 2 / dt * D + self.tangent(xyz)[np.ix_(a_idx, a_idx)]
                u_new = u_new - np.linalg.solve(J, R)
            u, v, acc = u_new, v_new, a_new
            out.append(u.copy())
        return np.array(out)


def finite_difference_tangent(structure, step):
    """Central differences of the free-coordinate nodal force."""
    from ctsdome.statics import internal_force
    free = structure.nodes.free_dofs
    K = np.zeros((free.size, free.size))
    base = structure.coords
    for col, d in enumerate(free):
        xp, xm = base.copy(), base.copy()
        xp[d] += step
        xm[d] -= step
        fp = internal_force(structure.with_coords(xp))[free]
        fm = internal_force(structure.with_coords(xm))[free]
        K[:, col] = (fp - fm) / (2 * step)
    return K
