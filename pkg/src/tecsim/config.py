"""Run description files: a flat, sectioned ``key = value`` format.

A configuration fully determines a simulation: geometry (built-in box or
mesh file), per-region materials (with optional z-stacked active zones),
boundary conditions per equation and surface, initial and optionally
frozen fields, the time grid, solver settings and output requests. Parsing
validates the whole file and reports every violation at once; unknown
sections or keys are rejected. ``SimulationConfig.to_text`` emits a
canonical echo (with the time grid expanded to an explicit list) whose
re-parse reproduces the configuration exactly.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import equations as eq
from .materials import ActiveMaterial, MaterialTable, MetalMaterial
from .mesh import Mesh, Surface, _SURFACE_BY_NAME, build_box_mesh, read_mesh_file
from .solver import FrozenFields, GummelSettings, TimeGrid


class ConfigError(ValueError):
    """Invalid configuration; ``violations`` lists every problem found."""

    def __init__(self, origin: str, violations):
        self.origin = origin
        self.violations = list(violations)
        details = "\n  - ".join(self.violations)
        super().__init__(f"{origin}: invalid configuration:\n  - {details}")


@dataclass(frozen=True)
class ValueSpec:
    """A scalar field over the device: constant, or linear along z.

    Text forms: ``300`` or ``linear_z 970 370`` (values at the lowest and
    highest z of the mesh).
    """

    kind: str
    values: tuple

    @classmethod
    def parse(cls, text: str) -> "ValueSpec":
        parts = text.split()
        if len(parts) == 1:
            return cls("constant", (float(parts[0]),))
        if len(parts) == 3 and parts[0] == "linear_z":
            return cls("linear_z", (float(parts[1]), float(parts[2])))
        raise ValueError(f"expected a number or 'linear_z v0 v1', got {text!r}")

    def evaluate(self, z, z_min: float, z_max: float) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.kind == "constant":
            return np.full(z.shape, self.values[0])
        v0, v1 = self.values
        return v0 + (v1 - v0) * (z - z_min) / (z_max - z_min)

    def to_text(self) -> str:
        if self.kind == "constant":
            return repr(self.values[0])
        return "linear_z " + " ".join(repr(v) for v in self.values)


@dataclass(frozen=True)
class GeometryConfig:
    extents: tuple = ()
    divisions: tuple = ()
    layer_breaks: tuple = ()
    mesh_path: str = ""


@dataclass(frozen=True)
class MetalConfig:
    sigma: float
    alpha: float
    kappa: float
    rho: float
    c: float
    mu_c: float = 0.0
    n_bar: float = 1.0


@dataclass(frozen=True)
class ActiveConfig:
    epsilon: tuple
    alpha: tuple
    kappa: tuple
    rho: tuple
    c: tuple
    mu_el: tuple
    doping: tuple
    zone_breaks: tuple = ()


@dataclass(frozen=True)
class MaterialsConfig:
    n_ref: float
    charge_number: int
    active: ActiveConfig
    bottom: MetalConfig | None = None
    top: MetalConfig | None = None


@dataclass(frozen=True)
class BoundaryConfig:
    poisson: tuple = ()      # ((surface_name, kind, params), ...)
    continuity: tuple = ()
    heat: tuple = ()


@dataclass(frozen=True)
class InitialConfig:
    n: ValueSpec
    T: ValueSpec


@dataclass(frozen=True)
class FrozenConfig:
    phi: ValueSpec | None = None
    n: ValueSpec | None = None
    T: ValueSpec | None = None
    heat_drift: tuple | None = None


@dataclass(frozen=True)
class TimeConfig:
    deltas: tuple = ()
    steady: bool = False


@dataclass(frozen=True)
class SolverConfig:
    toll: float = 1e-3
    max_iterations: int = 100
    linear_tolerance: float = 1e-10
    convergence_scaling: str = "relative"
    damping: float = 1.0


@dataclass(frozen=True)
class CutConfig:
    name: str
    axis: str
    anchor: tuple
    samples: int


@dataclass(frozen=True)
class OutputConfig:
    directory: str = ""
    snapshot_every: int = 0
    cuts: tuple = ()


@dataclass(frozen=True)
class SimulationConfig:
    geometry: GeometryConfig
    materials: MaterialsConfig
    boundary: BoundaryConfig
    initial: InitialConfig
    frozen: FrozenConfig
    time: TimeConfig
    solver: SolverConfig
    output: OutputConfig

    # -- builders -------------------------------------------------------------

    def build_mesh(self) -> Mesh:
        g = self.geometry
        if g.mesh_path:
            return read_mesh_file(g.mesh_path)
        return build_box_mesh(g.extents, g.divisions, g.layer_breaks)

    def build_materials(self) -> MaterialTable:
        m = self.materials
        zones = len(m.active.zone_breaks) + 1

        def widen(values):
            return values * zones if len(values) == 1 else values

        active = tuple(
            ActiveMaterial(epsilon=widen(m.active.epsilon)[i],
                           alpha=widen(m.active.alpha)[i],
                           kappa=widen(m.active.kappa)[i],
                           rho=widen(m.active.rho)[i],
                           c=widen(m.active.c)[i],
                           mu_el=widen(m.active.mu_el)[i],
                           doping=widen(m.active.doping)[i])
            for i in range(zones))

        def metal(cfg):
            if cfg is None:
                return None
            return MetalMaterial(sigma=cfg.sigma, alpha=cfg.alpha,
                                 kappa=cfg.kappa, rho=cfg.rho, c=cfg.c,
                                 mu_c=cfg.mu_c, n_bar=cfg.n_bar)

        return MaterialTable(active=active, active_breaks=m.active.zone_breaks,
                             bottom=metal(m.bottom), top=metal(m.top),
                             n_ref=m.n_ref, charge_number=m.charge_number)

    def build_boundary_spec(self) -> eq.BoundarySpec:
        def table(entries):
            out = {}
            for surface_name, kind, params in entries:
                surface = _SURFACE_BY_NAME[surface_name]
                if kind == "dirichlet":
                    out[surface] = eq.Dirichlet(params[0])
                elif kind == "neumann":
                    out[surface] = eq.Neumann(params[0])
                else:
                    out[surface] = eq.Robin(params[0], params[1])
            return out
        return eq.BoundarySpec(poisson=table(self.boundary.poisson),
                               continuity=table(self.boundary.continuity),
                               heat=table(self.boundary.heat))

    def build_time_grid(self) -> TimeGrid:
        if self.time.steady:
            return TimeGrid.steady()
        return TimeGrid(self.time.deltas)

    def build_solver_settings(self) -> GummelSettings:
        s = self.solver
        return GummelSettings(toll=s.toll, max_iterations=s.max_iterations,
                              linear_tolerance=s.linear_tolerance,
                              scaling=s.convergence_scaling, damping=s.damping)

    def build_frozen_fields(self) -> FrozenFields:
        f = self.frozen
        return FrozenFields(potential=f.phi is not None,
                            density=f.n is not None,
                            temperature=f.T is not None,
                            heat_drift=f.heat_drift)

    # -- canonical echo ---------------------------------------------------------

    def to_text(self) -> str:
        out = io.StringIO()

        def section(name, pairs):
            pairs = [(k, v) for k, v in pairs if v is not None]
            if not pairs:
                return
            out.write(f"[{name}]\n")
            for key, value in pairs:
                out.write(f"{key} = {value}\n")
            out.write("\n")

        def seq(values):
            return " ".join(repr(float(v)) for v in values)

        g = self.geometry
        if g.mesh_path:
            section("geometry", [("mesh_path", g.mesh_path)])
        else:
            section("geometry", [
                ("extents", seq(g.extents)),
                ("divisions", " ".join(str(d) for d in g.divisions)),
                ("layer_breaks", seq(g.layer_breaks) if g.layer_breaks else None)])

        m = self.materials
        section("materials", [("n_ref", repr(m.n_ref)),
                              ("charge_number", m.charge_number)])
        a = m.active
        section("materials.active", [
            ("zone_breaks", seq(a.zone_breaks) if a.zone_breaks else None),
            ("epsilon", seq(a.epsilon)), ("alpha", seq(a.alpha)),
            ("kappa", seq(a.kappa)), ("rho", seq(a.rho)), ("c", seq(a.c)),
            ("mu_el", seq(a.mu_el)), ("doping", seq(a.doping))])
        for name, cfg in (("materials.bottom", m.bottom),
                          ("materials.top", m.top)):
            if cfg is not None:
                section(name, [("sigma", repr(cfg.sigma)), ("alpha", repr(cfg.alpha)),
                               ("kappa", repr(cfg.kappa)), ("rho", repr(cfg.rho)),
                               ("c", repr(cfg.c)), ("mu_c", repr(cfg.mu_c)),
                               ("n_bar", repr(cfg.n_bar))])

        for name, entries in (("boundary.poisson", self.boundary.poisson),
                              ("boundary.continuity", self.boundary.continuity),
                              ("boundary.heat", self.boundary.heat)):
            section(name, [(surface, f"{kind} {seq(params)}")
                           for surface, kind, params in entries])

        section("initial", [("n", self.initial.n.to_text()),
                            ("T", self.initial.T.to_text())])
        f = self.frozen
        section("frozen", [
            ("phi", f.phi.to_text() if f.phi else None),
            ("n", f.n.to_text() if f.n else None),
            ("T", f.T.to_text() if f.T else None),
            ("heat_drift", seq(f.heat_drift) if f.heat_drift else None)])

        if self.time.steady:
            section("time", [("steady", "true")])
        else:
            section("time", [("dt_list", seq(self.time.deltas))])

        s = self.solver
        section("solver", [("toll", repr(s.toll)),
                           ("max_iterations", s.max_iterations),
                           ("linear_tolerance", repr(s.linear_tolerance)),
                           ("convergence_scaling", s.convergence_scaling),
                           ("damping", repr(s.damping))])

        o = self.output
        section("output", [
            ("directory", o.directory or None),
            ("snapshot_every", o.snapshot_every)] + [
            (f"cut_{c.name}", f"{c.axis} {seq(c.anchor)} {c.samples}")
            for c in o.cuts])
        return out.getvalue()


# -- parsing -------------------------------------------------------------------

_METAL_KEYS = {"sigma": True, "alpha": True, "kappa": True, "rho": True,
               "c": True, "mu_c": False, "n_bar": False}
_ACTIVE_KEYS = ("epsilon", "alpha", "kappa", "rho", "c", "mu_el")
_SOLVER_SCALINGS = ("relative", "absolute")


class _Parser:
    """One-shot parser accumulating violations instead of failing fast."""

    def __init__(self, text: str, origin: str):
        self.origin = origin
        self.errors: list[str] = []
        self.parser = configparser.ConfigParser(
            delimiters=("=",), inline_comment_prefixes=("#",),
            interpolation=None, strict=True)
        self.parser.optionxform = str
        try:
            self.parser.read_string(text, source=origin)
        except configparser.Error as exc:
            raise ConfigError(origin, [str(exc)]) from exc
        self.consumed: dict[str, set] = {}

    def fail(self, message: str) -> None:
        self.errors.append(message)

    def has_section(self, name: str) -> bool:
        return self.parser.has_section(name)

    def get(self, section: str, key: str, default=None, required=False):
        self.consumed.setdefault(section, set()).add(key)
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        if required:
            self.fail(f"[{section}] missing required key '{key}'")
        return default

    def get_float(self, section, key, default=None, required=False,
                  positive=False, nonnegative=False):
        raw = self.get(section, key, required=required)
        if raw is None:
            return default
        try:
            value = float(raw)
        except ValueError:
            self.fail(f"[{section}] {key}: expected a number, got {raw!r}")
            return default
        if positive and not value > 0.0:
            self.fail(f"[{section}] {key} must be positive, got {value}")
        if nonnegative and value < 0.0:
            self.fail(f"[{section}] {key} must be nonnegative, got {value}")
        return value

    def get_floats(self, section, key, default=None, required=False, count=None):
        raw = self.get(section, key, required=required)
        if raw is None:
            return default
        try:
            values = tuple(float(p) for p in raw.split())
        except ValueError:
            self.fail(f"[{section}] {key}: expected numbers, got {raw!r}")
            return default
        if count is not None and len(values) != count:
            self.fail(f"[{section}] {key}: expected {count} values, "
                      f"got {len(values)}")
            return default
        return values

    def get_int(self, section, key, default=None, required=False, minimum=None):
        raw = self.get(section, key, required=required)
        if raw is None:
            return default
        try:
            value = int(raw)
        except ValueError:
            self.fail(f"[{section}] {key}: expected an integer, got {raw!r}")
            return default
        if minimum is not None and value < minimum:
            self.fail(f"[{section}] {key} must be at least {minimum}")
        return value

    def get_value_spec(self, section, key, required=False):
        raw = self.get(section, key, required=required)
        if raw is None:
            return None
        try:
            return ValueSpec.parse(raw)
        except ValueError as exc:
            self.fail(f"[{section}] {key}: {exc}")
            return None

    def finish_section(self, section: str) -> None:
        if not self.parser.has_section(section):
            return
        unknown = set(self.parser.options(section)) - self.consumed.get(section, set())
        for key in sorted(unknown):
            self.fail(f"[{section}] unknown key '{key}'")

    def unknown_sections(self, known) -> None:
        for section in self.parser.sections():
            if section not in known:
                self.fail(f"unknown section [{section}]")


def parse_config_text(text: str, origin: str = "<string>") -> SimulationConfig:
    p = _Parser(text, origin)
    known_sections = {"geometry", "materials", "materials.active",
                      "materials.bottom", "materials.top",
                      "boundary.poisson", "boundary.continuity", "boundary.heat",
                      "initial", "frozen", "time", "solver", "output"}
    p.unknown_sections(known_sections)

    geometry = _parse_geometry(p)
    materials = _parse_materials(p)
    boundary = _parse_boundary(p)
    initial = _parse_initial(p)
    frozen = _parse_frozen(p)
    time_cfg = _parse_time(p)
    solver_cfg = _parse_solver(p)
    output = _parse_output(p)

    for section in sorted(known_sections):
        p.finish_section(section)
    if p.errors:
        raise ConfigError(origin, p.errors)
    return SimulationConfig(geometry, materials, boundary, initial, frozen,
                            time_cfg, solver_cfg, output)


def parse_config(path) -> SimulationConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(str(path), [f"cannot read file: {exc}"]) from exc
    return parse_config_text(text, origin=str(path))


def _parse_geometry(p: _Parser) -> GeometryConfig:
    if not p.has_section("geometry"):
        p.fail("missing section [geometry]")
        return GeometryConfig()
    mesh_path = p.get("geometry", "mesh_path")
    extents = p.get_floats("geometry", "extents", count=3)
    divisions = p.get_floats("geometry", "divisions", count=3)
    breaks = p.get_floats("geometry", "layer_breaks", default=())

    box_keys = extents is not None or divisions is not None
    if mesh_path and box_keys:
        p.fail("[geometry] give either a box (extents/divisions) or a "
               "mesh_path, not both (ambiguous)")
    elif mesh_path:
        return GeometryConfig(mesh_path=mesh_path)
    if extents is None or divisions is None:
        p.fail("[geometry] a box needs both 'extents' and 'divisions' "
               "(or use 'mesh_path')")
        return GeometryConfig()
    if any(x <= 0 for x in extents):
        p.fail("[geometry] extents must be positive")
    div = tuple(int(d) for d in divisions)
    if any(d != v for d, v in zip(div, divisions)) or any(d < 1 for d in div):
        p.fail("[geometry] divisions must be positive integers")
    if breaks and len(breaks) != 2:
        p.fail("[geometry] layer_breaks must hold exactly two z planes")
    return GeometryConfig(extents=extents, divisions=div,
                          layer_breaks=tuple(breaks))


def _parse_metal(p: _Parser, section: str) -> MetalConfig | None:
    if not p.has_section(section):
        return None
    values = {}
    for key, required in _METAL_KEYS.items():
        default = {"mu_c": 0.0, "n_bar": 1.0}.get(key)
        positive = key in ("sigma", "kappa", "rho", "c", "n_bar")
        values[key] = p.get_float(section, key, default=default,
                                  required=required, positive=positive,
                                  nonnegative=(key == "alpha"))
    if any(v is None for v in values.values()):
        return None
    return MetalConfig(**values)


def _parse_materials(p: _Parser) -> MaterialsConfig:
    n_ref = p.get_float("materials", "n_ref", default=1.0, positive=True) \
        if p.has_section("materials") else 1.0
    charge = p.get_int("materials", "charge_number", default=-1) \
        if p.has_section("materials") else -1
    if charge == 0:
        p.fail("[materials] charge_number must be nonzero")

    if not p.has_section("materials.active"):
        p.fail("missing section [materials.active]")
        dummy = (1.0,)
        active = ActiveConfig(dummy, dummy, dummy, dummy, dummy, dummy, (0.0,))
        return MaterialsConfig(n_ref or 1.0, charge or -1, active)

    zone_breaks = p.get_floats("materials.active", "zone_breaks", default=())
    zones = len(zone_breaks) + 1
    lists = {}
    for key in _ACTIVE_KEYS:
        values = p.get_floats("materials.active", key, required=True)
        if values is None:
            values = (1.0,)
        elif len(values) not in (1, zones):
            p.fail(f"[materials.active] {key}: expected 1 or {zones} values "
                   f"for {zones} zones, got {len(values)}")
            values = values[:1] or (1.0,)
        if any(v <= 0 for v in values) and key != "alpha":
            p.fail(f"[materials.active] {key} must be positive")
        if key == "alpha" and any(v < 0 for v in values):
            p.fail("[materials.active] alpha must be nonnegative")
        lists[key] = values
    doping = p.get_floats("materials.active", "doping", default=(0.0,))
    if len(doping) not in (1, zones):
        p.fail(f"[materials.active] doping: expected 1 or {zones} values")
        doping = doping[:1]
    if any(v < 0 for v in doping):
        p.fail("[materials.active] doping must be nonnegative")

    active = ActiveConfig(epsilon=lists["epsilon"], alpha=lists["alpha"],
                          kappa=lists["kappa"], rho=lists["rho"], c=lists["c"],
                          mu_el=lists["mu_el"], doping=doping,
                          zone_breaks=zone_breaks)
    return MaterialsConfig(n_ref=n_ref, charge_number=charge, active=active,
                           bottom=_parse_metal(p, "materials.bottom"),
                           top=_parse_metal(p, "materials.top"))


def _parse_boundary(p: _Parser) -> BoundaryConfig:
    tables = {}
    for equation in ("poisson", "continuity", "heat"):
        section = f"boundary.{equation}"
        entries = []
        if p.has_section(section):
            for key in p.parser.options(section):
                raw = p.get(section, key)
                if key not in _SURFACE_BY_NAME:
                    p.fail(f"[{section}] unknown surface '{key}'")
                    continue
                parts = raw.split()
                kind = parts[0] if parts else ""
                try:
                    params = tuple(float(v) for v in parts[1:])
                except ValueError:
                    p.fail(f"[{section}] {key}: bad numbers in {raw!r}")
                    continue
                if kind == "dirichlet" and len(params) == 1:
                    pass
                elif kind == "neumann" and len(params) == 1:
                    pass
                elif kind == "robin" and len(params) == 2:
                    if params[0] < 0:
                        p.fail(f"[{section}] {key}: Robin coefficient must be "
                               "nonnegative")
                else:
                    p.fail(f"[{section}] {key}: expected 'dirichlet v', "
                           f"'neumann flux' or 'robin coeff ref', got {raw!r}")
                    continue
                entries.append((key, kind, params))
        tables[equation] = tuple(entries)
    return BoundaryConfig(poisson=tables["poisson"],
                          continuity=tables["continuity"], heat=tables["heat"])


def _parse_initial(p: _Parser) -> InitialConfig:
    if not p.has_section("initial"):
        p.fail("missing section [initial]")
        one = ValueSpec("constant", (1.0,))
        return InitialConfig(one, ValueSpec("constant", (300.0,)))
    n = p.get_value_spec("initial", "n", required=True)
    temp = p.get_value_spec("initial", "T", required=True)
    return InitialConfig(n or ValueSpec("constant", (1.0,)),
                         temp or ValueSpec("constant", (300.0,)))


def _parse_frozen(p: _Parser) -> FrozenConfig:
    if not p.has_section("frozen"):
        return FrozenConfig()
    drift = p.get_floats("frozen", "heat_drift", default=None, count=3)
    return FrozenConfig(phi=p.get_value_spec("frozen", "phi"),
                        n=p.get_value_spec("frozen", "n"),
                        T=p.get_value_spec("frozen", "T"),
                        heat_drift=drift)


def _parse_time(p: _Parser) -> TimeConfig:
    if not p.has_section("time"):
        p.fail("missing section [time]")
        return TimeConfig(steady=True)
    steady_raw = p.get("time", "steady")
    steady = (steady_raw or "").lower() in ("true", "yes", "1", "on")
    dt_list = p.get_floats("time", "dt_list")
    dt_initial = p.get_float("time", "dt_initial", positive=True)
    dt_growth = p.get_float("time", "dt_growth", default=1.0)
    dt_max = p.get_float("time", "dt_max", default=math.inf, positive=True)
    t_final = p.get_float("time", "t_final", positive=True)

    modes = sum([steady, dt_list is not None, dt_initial is not None])
    if modes != 1:
        p.fail("[time] specify exactly one of: 'steady = true', 'dt_list', "
               "or a ramp (dt_initial [, dt_growth, dt_max] and t_final)")
        return TimeConfig(steady=True)
    if steady:
        return TimeConfig(steady=True)
    if dt_list is not None:
        if any(d <= 0 for d in dt_list):
            p.fail("[time] dt_list entries must be positive")
        return TimeConfig(deltas=tuple(dt_list))
    if t_final is None:
        p.fail("[time] a ramp needs 't_final'")
        return TimeConfig(steady=True)
    if dt_growth < 1.0:
        p.fail("[time] dt_growth must be at least 1")
        return TimeConfig(steady=True)
    grid = TimeGrid.geometric(dt_initial, dt_growth, t_final, dt_max)
    return TimeConfig(deltas=grid.deltas)


def _parse_solver(p: _Parser) -> SolverConfig:
    if not p.has_section("solver"):
        return SolverConfig()
    scaling = p.get("solver", "convergence_scaling", default="relative")
    if scaling not in _SOLVER_SCALINGS:
        p.fail(f"[solver] convergence_scaling must be one of {_SOLVER_SCALINGS}")
        scaling = "relative"
    damping = p.get_float("solver", "damping", default=1.0)
    if damping is not None and not 0.0 < damping <= 1.0:
        p.fail("[solver] damping must lie in (0, 1]")
        damping = 1.0
    return SolverConfig(
        toll=p.get_float("solver", "toll", default=1e-3, positive=True),
        max_iterations=p.get_int("solver", "max_iterations", default=100,
                                 minimum=1),
        linear_tolerance=p.get_float("solver", "linear_tolerance",
                                     default=1e-10, positive=True),
        convergence_scaling=scaling, damping=damping)


def _parse_output(p: _Parser) -> OutputConfig:
    if not p.has_section("output"):
        return OutputConfig()
    directory = p.get("output", "directory", default="")
    every = p.get_int("output", "snapshot_every", default=0, minimum=0)
    cuts = []
    for key in p.parser.options("output"):
        if not key.startswith("cut_"):
            continue
        raw = p.get("output", key)
        parts = raw.split()
        ok = len(parts) == 4 and parts[0] in ("x", "y", "z")
        if ok:
            try:
                anchor = (float(parts[1]), float(parts[2]))
                samples = int(parts[3])
                ok = samples >= 2
            except ValueError:
                ok = False
        if not ok:
            p.fail(f"[output] {key}: expected 'axis anchor1 anchor2 samples', "
                   f"got {raw!r}")
            continue
        cuts.append(CutConfig(name=key[4:], axis=parts[0], anchor=anchor,
                              samples=samples))
    return OutputConfig(directory=directory, snapshot_every=every,
                        cuts=tuple(cuts))
