"""Benchmark case definitions, configuration parsing and batch drivers."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field as dc_field

import numpy as np

from .bc import DirichletInflowBC, TransmissiveBC
from .fields import init_field
from .mesh import generate_structured, read_mesh_file
from .physics import AdvectionModel, EulerModel
from .stepping import Solver, StepRecord
from . import output as out_mod


# -- initial conditions ----------------------------------------------------

def zalesak_initial(x):
    """Three-body rotation data with the squared-radius feature size.

    A cosine hump at (0.25, 0.5), the cone 1 - r^2/0.15 at (0.5, 0.25) and a
    cylinder of height 1 at (0.5, 0.75), each active on |x - c|^2 <= 0.15;
    first matching feature wins where they overlap.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    u = np.zeros(len(x))
    done = np.zeros(len(x), dtype=bool)
    r2 = ((x - np.array([0.25, 0.5])) ** 2).sum(-1)
    sel = (r2 <= 0.15) & ~done
    u[sel] = 0.25 * (1.0 + np.cos(math.pi * r2[sel] / 0.15))
    done |= sel
    r2 = ((x - np.array([0.5, 0.25])) ** 2).sum(-1)
    sel = (r2 <= 0.15) & ~done
    u[sel] = 1.0 - r2[sel] / 0.15
    done |= sel
    r2 = ((x - np.array([0.5, 0.75])) ** 2).sum(-1)
    sel = (r2 <= 0.15) & ~done
    u[sel] = 1.0
    return u[:, None]


def zalesak_classic_initial(x):
    """Classical variant with radius 0.15 features (r, not r^2)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    u = np.zeros(len(x))
    r = np.sqrt(((x - np.array([0.25, 0.5])) ** 2).sum(-1))
    sel = r <= 0.15
    u[sel] = 0.25 * (1.0 + np.cos(math.pi * r[sel] / 0.15))
    r = np.sqrt(((x - np.array([0.5, 0.25])) ** 2).sum(-1))
    sel = r <= 0.15
    u[sel] = 1.0 - r[sel] / 0.15
    r = np.sqrt(((x - np.array([0.5, 0.75])) ** 2).sum(-1))
    u[r <= 0.15] = 1.0
    return u[:, None]


KT_STATES = (
    (1.5, 0.0, 0.0, 1.5),
    (0.5323, 1.206, 0.0, 0.3),
    (0.138, 1.206, 1.206, 0.029),
    (0.5323, 0.0, 1.206, 0.3),
)


def kt_initial(x, gamma=1.4):
    """Four-quadrant Riemann data split at x = 1, y = 1 (configuration 3).

    Quadrants: state 1 for x >= 1, y >= 1; state 2 for x < 1, y >= 1;
    state 3 for x < 1, y < 1; state 4 for x >= 1, y < 1.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    model = EulerModel(gamma)
    right = x[:, 0] >= 1.0
    top = x[:, 1] >= 1.0
    u = np.zeros((len(x), 4))
    for sel, (rho, vx, vy, p) in zip(
            (right & top, ~right & top, ~right & ~top, right & ~top), KT_STATES):
        u[sel] = model.conservative(rho, vx, vy, p)
    return u


def smooth_bump(x, width=0.35):
    """C-infinity periodic bump on the unit square, values in (0, 1]."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    s = (np.sin(math.pi * (x[:, 0] - 0.5)) ** 2
         + np.sin(math.pi * (x[:, 1] - 0.5)) ** 2)
    return np.exp(-s / width ** 2)[:, None]


def euler_smooth_initial(x, gamma=1.4, velocity=(1.0, 0.5)):
    """Density bump advected by a uniform flow at constant pressure."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    rho = 1.0 + 0.5 * smooth_bump(x)[:, 0]
    vx = np.full(len(x), velocity[0])
    vy = np.full(len(x), velocity[1])
    p = np.ones(len(x))
    return EulerModel(gamma).conservative(rho, vx, vy, p)


def zalesak_velocity(x):
    """Rigid rotation about the domain centre, one turn per time unit."""
    x = np.asarray(x, dtype=float)
    return 2.0 * math.pi * np.stack([-x[..., 1], x[..., 0]], axis=-1)


# -- configuration -----------------------------------------------------------

@dataclass
class CaseConfig:
    case: str = "smooth-advection"
    mesh_file: str = ""
    nx: int = 0
    ny: int = 0
    kind: str = ""
    tfinal: float = -1.0
    cfl: float = 0.4
    order: str = "blended"
    bp: str = "on"
    out: str = ""
    format: str = "vtk"
    output_every: int = 0
    gamma: float = 1.4
    velocity: tuple = (1.0, 0.5)
    max_steps: int = 0
    quiet: bool = True

    def effective_order(self):
        if self.order == "blended" and self.bp == "off":
            return "high"
        return self.order

    def validate(self):
        if self.order not in ("low", "high", "blended"):
            raise ValueError(f"order must be low/high/blended, got {self.order!r}")
        if self.bp not in ("on", "off"):
            raise ValueError(f"bp must be on/off, got {self.bp!r}")
        if self.cfl <= 0.0 or self.cfl > 1.0:
            raise ValueError("cfl must be in (0, 1]")
        if self.tfinal == 0.0:
            raise ValueError("tfinal must be positive")


def parse_config_file(path) -> dict:
    """Flat 'key = value' file; '#' starts a comment."""
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            values[key] = val
    return values


def config_from_mapping(values: dict) -> CaseConfig:
    cfg = CaseConfig()
    casts = {
        "nx": int, "ny": int, "output_every": int, "max_steps": int,
        "tfinal": float, "cfl": float, "gamma": float,
        "velocity": lambda s: tuple(float(t) for t in s.replace(",", " ").split()),
    }
    for key, val in values.items():
        if not hasattr(cfg, key):
            raise ValueError(f"unknown config key {key!r}")
        setattr(cfg, key, casts.get(key, str)(val))
    return cfg


_CASE_DEFAULTS = {
    "zalesak": dict(nx=50, ny=50, kind="tri", tfinal=1.0),
    "zalesak-classic": dict(nx=50, ny=50, kind="tri", tfinal=1.0),
    "kt": dict(nx=100, ny=100, kind="quad", tfinal=3.0),
    "smooth-advection": dict(nx=32, ny=32, kind="quad", tfinal=0.4),
    "euler-smooth": dict(nx=32, ny=32, kind="quad", tfinal=0.4),
    "constant": dict(nx=8, ny=8, kind="quad", tfinal=1.0),
}


@dataclass
class CaseSetup:
    mesh: object
    model: object
    bcs: object
    ic: object
    exact: object = None     # exact(x, t) when available


def build_case(cfg: CaseConfig) -> CaseSetup:
    cfg.validate()
    if cfg.case not in _CASE_DEFAULTS:
        raise ValueError(f"unknown case {cfg.case!r}; known: {sorted(_CASE_DEFAULTS)}")
    dft = _CASE_DEFAULTS[cfg.case]
    nx = cfg.nx or dft["nx"]
    ny = cfg.ny or dft["ny"]
    kind = cfg.kind or dft["kind"]
    if cfg.tfinal < 0.0:
        cfg.tfinal = dft["tfinal"]
    cfg.nx, cfg.ny, cfg.kind = nx, ny, kind

    if cfg.case in ("zalesak", "zalesak-classic"):
        mesh = (read_mesh_file(cfg.mesh_file) if cfg.mesh_file else
                generate_structured(nx, ny, ((-1.0, 1.0), (-1.0, 1.0)), kind=kind))
        model = AdvectionModel(velocity=zalesak_velocity)
        ic = zalesak_initial if cfg.case == "zalesak" else zalesak_classic_initial
        bcs = DirichletInflowBC(lambda x: np.zeros((len(np.atleast_2d(x)), 1)))
        return CaseSetup(mesh=mesh, model=model, bcs=bcs, ic=ic)

    if cfg.case == "kt":
        mesh = (read_mesh_file(cfg.mesh_file) if cfg.mesh_file else
                generate_structured(nx, ny, ((-2.0, 2.0), (-2.0, 2.0)), kind=kind))
        model = EulerModel(gamma=cfg.gamma)
        return CaseSetup(mesh=mesh, model=model, bcs=TransmissiveBC(),
                         ic=lambda x: kt_initial(x, gamma=cfg.gamma))

    if cfg.case == "smooth-advection":
        mesh = generate_structured(nx, ny, ((0.0, 1.0), (0.0, 1.0)), kind=kind,
                                   periodic=True)
        vel = np.asarray(cfg.velocity, dtype=float)
        model = AdvectionModel(velocity=tuple(vel))
        exact = lambda x, t: smooth_bump(np.atleast_2d(x) - vel * t)
        return CaseSetup(mesh=mesh, model=model, bcs=TransmissiveBC(),
                         ic=smooth_bump, exact=exact)

    if cfg.case == "euler-smooth":
        mesh = generate_structured(nx, ny, ((0.0, 1.0), (0.0, 1.0)), kind=kind,
                                   periodic=True)
        vel = tuple(cfg.velocity)
        model = EulerModel(gamma=cfg.gamma)
        exact = lambda x, t: euler_smooth_initial(
            np.atleast_2d(x) - np.asarray(vel) * t, gamma=cfg.gamma, velocity=vel)
        return CaseSetup(mesh=mesh, model=model, bcs=TransmissiveBC(),
                         ic=lambda x: euler_smooth_initial(x, gamma=cfg.gamma,
                                                           velocity=vel),
                         exact=exact)

    # constant-state sanity case
    mesh = generate_structured(nx, ny, ((0.0, 1.0), (0.0, 1.0)), kind=kind,
                               periodic=True)
    model = AdvectionModel(velocity=tuple(cfg.velocity))
    ic = lambda x: np.full((len(np.atleast_2d(x)), 1), 0.7)
    return CaseSetup(mesh=mesh, model=model, bcs=TransmissiveBC(), ic=ic)


@dataclass
class RunDiagnostics:
    case: str
    records: list
    files: list = dc_field(default_factory=list)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(StepRecord.HEADER + "\n")
            for rec in self.records:
                fh.write(rec.csv_row() + "\n")


def run_case(cfg: CaseConfig):
    """Advance a configured case to t_final; returns (diagnostics, field, solver)."""
    setup = build_case(cfg)
    solver = Solver(setup.mesh, setup.model, bcs=setup.bcs, nu=cfg.cfl,
                    order=cfg.effective_order())
    f = init_field(solver.layout, solver.blocks, setup.ic, setup.model.m)
    solver.bcs.pin_points(setup.model, solver.layout, f.point)

    diag = RunDiagnostics(case=cfg.case, records=[])
    writer = None
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        names = out_mod.component_names(setup.model)

        def writer(tag, fld):
            diag.files.extend(out_mod.write_field(
                setup.mesh, solver.layout, fld, cfg.out, f"{cfg.case}_{tag}",
                names, fmt=cfg.format))

        writer("0000", f)

    def on_step(step, t, fld):
        if writer is not None and cfg.output_every and step % cfg.output_every == 0:
            writer(f"{step:04d}", fld)

    f, records = solver.advance(f, cfg.tfinal, on_step=on_step,
                                max_steps=cfg.max_steps or None)
    diag.records = records
    if writer is not None:
        writer("final", f)
        diag.write_csv(os.path.join(cfg.out, f"{cfg.case}_diagnostics.csv"))
    return diag, f, solver


# -- convergence harness -------------------------------------------------------

def _norms(weights, err):
    tot = weights.sum()
    a = np.abs(err)
    return (float((weights * a).sum() / tot),
            float(np.sqrt((weights * a ** 2).sum() / tot)),
            float(a.max()))


def convergence_study(cfg: CaseConfig, grids):
    """Self-convergence against the exact solution on a mesh sequence.

    Returns one row per mesh: (n, h, [L1, L2, Linf] averages, [L1, L2, Linf]
    point values) plus observed orders between consecutive rows.
    """
    rows = []
    for n in grids:
        sub = CaseConfig(**{**cfg.__dict__, "nx": int(n), "ny": int(n), "out": ""})
        setup = build_case(sub)
        if setup.exact is None:
            raise ValueError(f"case {cfg.case!r} has no exact solution")
        solver = Solver(setup.mesh, setup.model, bcs=setup.bcs, nu=sub.cfl,
                        order=sub.effective_order())
        f = init_field(solver.layout, solver.blocks, setup.ic, setup.model.m)
        f, _ = solver.advance(f, sub.tfinal)
        exact_end = init_field(solver.layout, solver.blocks,
                               lambda x: setup.exact(x, sub.tfinal), setup.model.m)
        avg_err = _norms(setup.mesh.area, (f.avg - exact_end.avg)[:, 0])
        pt_err = _norms(solver.subtri.c_sigma, (f.point - exact_end.point)[:, 0])
        h = setup.mesh.diameter.max()
        rows.append({"n": int(n), "h": float(h), "avg": avg_err, "point": pt_err})

    for prev, cur in zip(rows, rows[1:]):
        ratio = math.log(prev["h"] / cur["h"])
        cur["avg_order"] = [math.log(p / c) / ratio if c > 0 else float("inf")
                            for p, c in zip(prev["avg"], cur["avg"])]
        cur["point_order"] = [math.log(p / c) / ratio if c > 0 else float("inf")
                              for p, c in zip(prev["point"], cur["point"])]
    return rows


def convergence_table(rows):
    lines = ["n,h,L1_avg,L2_avg,Linf_avg,L2_avg_order,L1_pt,L2_pt,Linf_pt,L2_pt_order"]
    for r in rows:
        ao = r.get("avg_order", [float("nan")] * 3)[1]
        po = r.get("point_order", [float("nan")] * 3)[1]
        lines.append(f"{r['n']},{r['h']!r},{r['avg'][0]!r},{r['avg'][1]!r},"
                     f"{r['avg'][2]!r},{ao!r},{r['point'][0]!r},{r['point'][1]!r},"
                     f"{r['point'][2]!r},{po!r}")
    return "\n".join(lines) + "\n"
