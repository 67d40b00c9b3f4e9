"""Run configuration, dome interchange documents and delimited output."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .core import ClusterMap, Connectivity, MaterialTable, NodeSet, Structure
from .errors import ConfigError
from .levy import (ALUMINIUM_STRING, IB_PRESTRESS, STEEL_BAR, Dome, LevyParams)

FORMAT_VERSION = 1


@dataclass
class DomeConfig:
    radius_m: float = 50.0
    deployment_ratio: float = 0.3
    complexity: int = 12
    z_otn_m: float = 8.663
    z_obn_m: float = -9.623
    z_itn_m: float = 13.458
    z_ibn_m: float = -0.960
    n_c: int = 3
    ib_prestress_n: float = IB_PRESTRESS

    def params(self, **overrides) -> LevyParams:
        kw = dict(R=self.radius_m, c=self.deployment_ratio, p=self.complexity,
                  z_otn=self.z_otn_m, z_obn=self.z_obn_m, z_itn=self.z_itn_m,
                  z_ibn=self.z_ibn_m, n_c=self.n_c)
        kw.update(overrides)
        return LevyParams(**kw)


@dataclass
class MemberMaterialConfig:
    modulus_pa: float
    density_kg_m3: float
    capacity_pa: float

    def as_table_entry(self):
        return {"modulus": self.modulus_pa, "density": self.density_kg_m3,
                "capacity": self.capacity_pa}


def _steel():
    return MemberMaterialConfig(STEEL_BAR["modulus"], STEEL_BAR["density"], STEEL_BAR["capacity"])


def _aluminium():
    return MemberMaterialConfig(ALUMINIUM_STRING["modulus"], ALUMINIUM_STRING["density"],
                                ALUMINIUM_STRING["capacity"])


@dataclass
class MaterialsConfig:
    mass_scale: float = 50.0
    bar: MemberMaterialConfig = field(default_factory=_steel)
    string: MemberMaterialConfig = field(default_factory=_aluminium)

    def capacities(self):
        return {"bar": self.bar.as_table_entry(), "string": self.string.as_table_entry()}


@dataclass
class ClusterStudyConfig:
    n_c: list = field(default_factory=lambda: [1, 2, 3, 4, 6, 12])


@dataclass
class SweepConfig:
    c_grid: list = field(default_factory=lambda: [round(0.05 * k, 2) for k in range(1, 19)])


@dataclass
class ModesConfig:
    k_modes: int = 10


@dataclass
class DeployConfig:
    c_start: float = 0.2
    c_end: float = 0.8
    t_total_s: list = field(default_factory=lambda: [1.0, 2.0, 4.0])
    dt_s: float = 0.001
    damping_ratio: float = 0.01
    gravity_on: bool = False
    newton_tol_n: float = 1e-2
    newton_max_iter: int = 25
    record_every: int = 1
    fold: bool = False


@dataclass
class RunConfig:
    dome: DomeConfig = field(default_factory=DomeConfig)
    materials: MaterialsConfig = field(default_factory=MaterialsConfig)
    cluster_study: ClusterStudyConfig = field(default_factory=ClusterStudyConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    modes: ModesConfig = field(default_factory=ModesConfig)
    deploy: DeployConfig = field(default_factory=DeployConfig)


def _coerce(value, default, path):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        item = default[0] if default else 0.0
        return [_coerce(v, item, f"{path}[{i}]") for i, v in enumerate(value)]
    return value


def _build(cls, data, path):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping")
    names = [f.name for f in fields(cls)]
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(f"{path + '.' if path else ''}{unknown[0]}: unknown field")
    template = cls()
    kwargs = {}
    for name in names:
        sub = f"{path}.{name}" if path else name
        default = getattr(template, name)
        if name not in data:
            kwargs[name] = default
        elif hasattr(default, "__dataclass_fields__"):
            kwargs[name] = _build(type(default), data[name], sub)
        else:
            kwargs[name] = _coerce(data[name], default, sub)
    return cls(**kwargs)


def _build_member(data, path, default):
    if data is None:
        return default
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    out = asdict(default)
    for k, v in data.items():
        if k not in out:
            raise ConfigError(f"{path}.{k}: unknown field")
        out[k] = _coerce(v, 0.0, f"{path}.{k}")
    return MemberMaterialConfig(**out)


def config_from_dict(data) -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a mapping")
    materials = dict(data.get("materials") or {})
    defaults = MaterialsConfig()
    bar = _build_member(materials.pop("bar", None), "materials.bar", defaults.bar)
    string = _build_member(materials.pop("string", None), "materials.string", defaults.string)
    rest = dict(data)
    rest["materials"] = materials
    cfg = _build(RunConfig, rest, "")
    cfg.materials.bar, cfg.materials.string = bar, string
    return cfg


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{path}: invalid YAML{where}") from exc
    return config_from_dict(data)


def config_to_dict(cfg: RunConfig) -> dict:
    return asdict(cfg)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


# dome interchange

def dome_document(dome: Dome) -> dict:
    s = dome.structure
    topo = dome.topology
    name_of = {e: g for g, elems in topo.element_groups.items() for e in elems}
    xyz = s.nodes.xyz
    fixed = set(s.nodes.fixed_idx)
    mat = s.mat
    p = dome.params
    return {
        "format_version": FORMAT_VERSION,
        "params": {"radius_m": p.R, "deployment_ratio": p.c, "complexity": p.p,
                   "z_otn_m": p.z_otn, "z_obn_m": p.z_obn, "z_itn_m": p.z_itn,
                   "z_ibn_m": p.z_ibn, "n_c": p.n_c},
        "nodes": [{"id": i, "xyz_m": [float(v) for v in xyz[i]], "fixed": i in fixed}
                  for i in range(s.nodes.n_nodes)],
        "elements": [{"id": m, "ends": [int(a), int(b)],
                      "kind": "bar" if m < s.conn.n_bars else "string",
                      "group": name_of[m]}
                     for m, (a, b) in enumerate(s.conn.ends)],
        "clusters": [{"id": g, "elements": list(grp), "group": dome.labels[g],
                      "rest_length_m": float(s.rest_lengths_c[g]),
                      "area_m2": float(mat.area[g]),
                      "modulus_pa": float(mat.modulus[g]),
                      "tangent_modulus_pa": float(mat.tangent_modulus[g]),
                      "density_kg_m3": float(mat.density[g]),
                      "capacity_pa": float(mat.capacity[g])}
                     for g, grp in enumerate(s.cluster.groups)],
        "mass_scale": float(mat.mass_scale),
    }


def structure_from_document(doc) -> Structure:
    try:
        nodes = doc["nodes"]
        coords = np.array([n["xyz_m"] for n in nodes], dtype=float).ravel()
        fixed = [n["id"] for n in nodes if n["fixed"]]
        free = [n["id"] for n in nodes if not n["fixed"]]
        elems = doc["elements"]
        ends = np.array([e["ends"] for e in elems], dtype=int)
        n_bars = sum(e["kind"] == "bar" for e in elems)
        clusters = doc["clusters"]
        groups = tuple(tuple(c["elements"]) for c in clusters)
        cmap = ClusterMap(groups)
        is_bar = np.zeros(len(clusters), dtype=bool)
        is_bar[cmap.group_of[:n_bars]] = True
        mat = MaterialTable(area=[c["area_m2"] for c in clusters],
                            modulus=[c["modulus_pa"] for c in clusters],
                            tangent_modulus=[c["tangent_modulus_pa"] for c in clusters],
                            density=[c["density_kg_m3"] for c in clusters],
                            is_bar=is_bar,
                            capacity=[c["capacity_pa"] for c in clusters],
                            mass_scale=doc["mass_scale"])
        return Structure(NodeSet(coords, free, fixed), Connectivity(ends, n_bars, len(ends) - n_bars),
                         cmap, mat, [c["rest_length_m"] for c in clusters])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed dome document: missing or invalid {exc}") from exc


def write_dome(dome: Dome, path):
    Path(path).write_text(json.dumps(dome_document(dome), indent=1) + "\n")


def read_structure(path) -> Structure:
    return structure_from_document(json.loads(Path(path).read_text()))


# delimited output

def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
