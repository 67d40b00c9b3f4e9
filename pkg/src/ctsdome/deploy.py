"""Deployment studies: quasi-static trajectory sweeps and dynamic actuation runs."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PchipInterpolator

from .dynamics import DeployRecord, DynamicsConfig, integrate
from .errors import CTSError, InfeasiblePoint, MultipleModes, RangeUncovered
from .levy import (ELEMENT_GROUPS, Dome, LevyParams, design_dome, node_id,
                   transfer_prestress)
from .modal import is_stable, min_eigenvalue, natural_frequencies, tangent_stiffness

DESIGN_C = 0.3
DEFAULT_MASS_SCALE = 50.0
C_GRID = tuple(np.round(np.arange(1, 19) * 0.05, 10))
TRACKED_NODES = ("OTN", "ITN")
TRACKED_BARS = ("OB", "IB")


@dataclass(frozen=True, eq=False)
class TrajectoryPoint:
    c: float
    n_p: int
    lambda_min: float
    f_min: float
    prestress: dict
    rest_lengths_c: np.ndarray


@dataclass(frozen=True, eq=False)
class Sweep:
    """Trajectory points of one sweep plus the labels of the clustered elements."""

    points: tuple
    labels: tuple
    params: LevyParams

    @property
    def c(self):
        return np.array([pt.c for pt in self.points])

    def rest_length_table(self):
        return np.array([pt.rest_lengths_c for pt in self.points])

    def group_rest_lengths(self, name):
        idx = [i for i, lab in enumerate(self.labels) if lab == name]
        return self.rest_length_table()[:, idx]


def design_material(template: LevyParams, mass_scale=DEFAULT_MASS_SCALE, capacities=None):
    """Member sizes fixed once at the design configuration."""
    dome = design_dome(template.with_c(DESIGN_C), capacities=capacities, mass_scale=mass_scale)
    return dome.structure.mat


def evaluate_dome(dome: Dome, k_modes=1):
    """(lambda_min, f_min) of a designed dome."""
    s = dome.structure
    K_Taa = tangent_stiffness(s).K_Taa
    lam = min_eigenvalue(K_Taa)
    f = natural_frequencies(s, k_modes=k_modes, K_Taa=K_Taa).frequencies
    return lam, float(f[0])


def group_forces(dome: Dome):
    """Representative (first-cluster) force of every element group."""
    t_c = dome.prestress.t_c
    return {g: float(t_c[dome.group_clusters(g)[0]]) for g in ELEMENT_GROUPS}


def sweep_point(params: LevyParams, material) -> tuple:
    try:
        dome = design_dome(params, material=material)
    except CTSError as exc:
        raise InfeasiblePoint(params.c, str(exc)) from exc
    lam, f_min = evaluate_dome(dome)
    if not is_stable(lam):
        raise InfeasiblePoint(params.c, f"unstable, lambda_min={lam:.6g} N/m")
    pt = TrajectoryPoint(c=float(params.c), n_p=dome.prestress.n_p, lambda_min=lam,
                         f_min=f_min, prestress=group_forces(dome),
                         rest_lengths_c=dome.structure.rest_lengths_c.copy())
    return pt, dome


def sweep_trajectory(template: LevyParams, c_grid=C_GRID, *, material=None,
                     mass_scale=DEFAULT_MASS_SCALE, capacities=None) -> Sweep:
    """Re-solve the dome at every c with all other parameters held fixed."""
    c_grid = [float(c) for c in c_grid]
    if any(not 0 < c < 0.95 for c in c_grid):
        raise CTSError("c_grid must lie inside (0, 0.95)")
    if sorted(set(c_grid)) != c_grid:
        raise CTSError("c_grid must be strictly increasing")
    if material is None:
        material = design_material(template, mass_scale, capacities)
    points, labels = [], None
    for c in c_grid:
        pt, dome = sweep_point(template.with_c(c), material)
        points.append(pt)
        labels = tuple(dome.labels)
    return Sweep(points=tuple(points), labels=labels, params=template)


@dataclass(frozen=True, eq=False)
class ActuationSchedule:
    c_start: float
    c_end: float
    t_act: float
    t_hold: float
    samples_c: np.ndarray = field(repr=False)
    samples_l0: np.ndarray = field(repr=False)
    is_bar: np.ndarray = field(repr=False)
    bar_rest_lengths: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_interp", PchipInterpolator(self.samples_c, self.samples_l0, axis=0))

    @property
    def t_total(self):
        return self.t_act + self.t_hold

    def ratio(self, t):
        s = min(max(t / self.t_act, 0.0), 1.0)
        return self.c_start + s * (self.c_end - self.c_start)

    def __call__(self, t):
        c = self.ratio(t)
        l0 = self._interp(c)
        l0[self.is_bar] = self.bar_rest_lengths
        return l0


def build_schedule(sweep: Sweep, c_start, c_end, t_total, is_bar=None) -> ActuationSchedule:
    """Linear c(t) over the first half of t_total, hold for the second half.

    Rest lengths follow monotone cubic interpolation of the sweep over c; bars
    keep their rest length at c_start.  Folding uses c_end < c_start.
    """
    c = sweep.c
    lo, hi = min(c_start, c_end), max(c_start, c_end)
    if lo < c[0] - 1e-12 or hi > c[-1] + 1e-12:
        raise RangeUncovered(f"sweep covers [{c[0]}, {c[-1]}], schedule needs [{lo}, {hi}]")
    if t_total <= 0:
        raise CTSError("t_total must be positive")
    table = sweep.rest_length_table()
    if is_bar is None:
        is_bar = np.array([lab in ("OB", "IB") for lab in sweep.labels])
    start = int(np.argmin(np.abs(c - c_start)))
    if abs(c[start] - c_start) > 1e-12:
        raise RangeUncovered(f"c_start={c_start} is not a sweep grid point")
    is_bar = np.asarray(is_bar, dtype=bool)
    return ActuationSchedule(c_start=float(c_start), c_end=float(c_end), t_act=t_total / 2,
                             t_hold=t_total / 2, samples_c=c, samples_l0=table,
                             is_bar=is_bar, bar_rest_lengths=table[start, is_bar].copy())


@dataclass(frozen=True, eq=False)
class DeployRun:
    record: DeployRecord
    schedule: ActuationSchedule
    params: LevyParams

    def node_x(self, group):
        n = node_id(group, 0, self.params.p)
        return self.record.coords[:, 3 * n]

    def static_x(self, group):
        """Quasi-static X of the first node of ``group`` along c(t)."""
        c = np.array([self.schedule.ratio(t) for t in self.record.times])
        R, p = self.params.R, self.params.p
        if group == "OTN":
            return (c + 1) * R / 2 * np.cos(np.pi / p)
        if group == "ITN":
            return c * R
        raise CTSError(f"no closed-form static trace for {group}")

    def bar_force(self, labels, group):
        return self.record.member_forces_c[:, list(labels).index(group)]


def start_dome(template: LevyParams, c_start, material=None, mass_scale=DEFAULT_MASS_SCALE):
    if material is None:
        material = design_material(template, mass_scale)
    return design_dome(template.with_c(c_start), material=material)


def run_dynamic_deploy(dome: Dome, config: DynamicsConfig, schedule: ActuationSchedule,
                       **kwargs) -> DeployRun:
    cfg = replace(config, t_end=schedule.t_total)
    rec = integrate(dome.structure, cfg, actuation=schedule, **kwargs)
    return DeployRun(record=rec, schedule=schedule, params=dome.params)


@dataclass(frozen=True)
class DeviationReport:
    rms: dict
    peak: dict
    peak_force: dict
    force_ratio: dict
    hold_mean_error: dict


def compare_static_dynamic(run: DeployRun, sweep: Sweep) -> DeviationReport:
    """Dynamic traces against the quasi-static ones mapped through c(t)."""
    rms, peak, hold = {}, {}, {}
    t = run.record.times
    in_hold = t >= run.schedule.t_act
    for g in TRACKED_NODES:
        d = run.node_x(g) - run.static_x(g)
        rms[g] = float(np.sqrt(np.mean(d**2)))
        peak[g] = float(np.abs(d).max())
        hold[g] = float(abs(run.node_x(g)[in_hold].mean() - run.static_x(g)[-1]))
    peak_force, ratio = {}, {}
    c = sweep.c
    for g in TRACKED_BARS:
        f = run.bar_force(sweep.labels, g)
        static = np.interp([run.schedule.ratio(ti) for ti in t], c,
                           [pt.prestress[g] for pt in sweep.points])
        peak_force[g] = float(np.abs(f).max())
        ratio[g] = peak_force[g] / float(np.abs(static).max())
    return DeviationReport(rms=rms, peak=peak, peak_force=peak_force, force_ratio=ratio,
                           hold_mean_error=hold)


def cluster_study(template: LevyParams, n_c_values=None, mass_scale=DEFAULT_MASS_SCALE,
                  capacities=None):
    """Rows (n_c, n_p, lambda_min, f_min) at the design configuration.

    Clusterings with several prestress modes take the symmetric prestress of
    the fully clustered dome.
    """
    p = template.p
    if n_c_values is None:
        n_c_values = [n for n in range(1, p + 1) if p % n == 0]
    source = None
    rows = []
    for n_c in n_c_values:
        params = replace(template, n_c=n_c)
        try:
            dome = design_dome(params, capacities=capacities, mass_scale=mass_scale)
        except MultipleModes:
            if source is None:
                source = design_dome(replace(template, n_c=1), capacities=capacities,
                                     mass_scale=mass_scale)
            dome = design_dome(params, capacities=capacities, mass_scale=mass_scale,
                               prestress_t_c=transfer_prestress(source, params))
        lam, f_min = evaluate_dome(dome)
        rows.append((n_c, dome.prestress.n_p, lam, f_min))
    return rows
