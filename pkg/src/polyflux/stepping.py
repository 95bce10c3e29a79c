"""Time stepping: CFL control, the blended forward-Euler stage, SSP-RK3."""
from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from . import average_update as avg_up
from . import point_update as pt_up
from .bc import TransmissiveBC
from .blending import BlendReport, theta_euler, theta_scalar
from .fields import SolutionField, total_quantities
from .mesh import build_blocks, enumerate_dofs, subtriangulate
from .physics import EulerPositivity, ScalarBounds, internal_energy
from .point_update import CFLError
from .vem import build_projectors


class AdmissibilityError(RuntimeError):
    pass


@dataclass
class StepRecord:
    step: int
    t: float
    dt: float
    min_rho: float
    min_e: float
    min_u: float
    max_u: float
    mass: float
    min_theta: float
    theta_activations: int

    HEADER: ClassVar[str] = ("step,t,dt,min_rho,min_e,min_u,max_u,mass,"
                             "min_theta,theta_activations")

    def csv_row(self):
        return (f"{self.step},{self.t!r},{self.dt!r},{self.min_rho!r},{self.min_e!r},"
                f"{self.min_u!r},{self.max_u!r},{self.mass!r},{self.min_theta!r},"
                f"{self.theta_activations}")


@dataclass
class StepController:
    """CFL number plus a record of which constraint bound the last step."""

    nu: float = 0.4
    last_dt: float = np.nan
    last_binding: str = ""


class Solver:
    """Couples the point-value and cell-average updates on one mesh.

    ``order``: 'blended' (bound-preserving limiter), 'low' (parachute scheme
    only) or 'high' (unlimited high-order scheme, no bound guarantee).
    """

    def __init__(self, mesh, model, bcs=None, nu=0.4, order="blended",
                 eps_rel=1e-13, cond_limit=1e12, bounds=None):
        if order not in ("blended", "low", "high"):
            raise ValueError(f"unknown order {order!r}")
        self.mesh = mesh
        self.model = model
        self.bcs = bcs if bcs is not None else TransmissiveBC()
        self.order = order
        self.eps_rel = eps_rel
        self.cond_limit = cond_limit
        self.controller = StepController(nu=nu)
        self.events = {}

        self.layout = enumerate_dofs(mesh)
        self.subtri = subtriangulate(mesh, self.layout)
        self.blocks = build_blocks(mesh, self.layout, self.subtri)
        self.projectors = [
            build_projectors(blk.ring_pos, blk.star, blk.area, blk.diameter,
                             mesh.centroid[blk.elements])
            for blk in self.blocks
        ]
        self.point_scatters = pt_up.make_scatters(self.blocks,
                                                  self.layout.n_point_dofs)
        self.domain = None
        if bounds is not None:
            self.domain = ScalarBounds(*bounds)

    # -- setup -------------------------------------------------------------
    def init_domain(self, field: SolutionField):
        """Freeze the invariant domain from the data in hand."""
        if self.domain is not None:
            return self.domain
        if self.model.m == 1:
            vals = np.concatenate([field.point[:, 0], field.avg[:, 0]])
            self.domain = self.model.make_domain(vals)
        else:
            self.domain = self.model.make_domain()
        return self.domain

    def check_admissible(self, f: SolutionField, where=""):
        dom = self.domain
        if isinstance(dom, ScalarBounds):
            if not (dom.contains(f.point) and dom.contains(f.avg)):
                raise AdmissibilityError(
                    f"scalar bounds violated {where}: overshoot {dom.violation(f.point):.3e}"
                    f"/{dom.violation(f.avg):.3e}")
        elif isinstance(dom, EulerPositivity):
            if not (dom.contains(f.point) and dom.contains(f.avg)):
                raise AdmissibilityError(f"positivity lost {where}")

    # -- systems and dt -----------------------------------------------------
    def build_systems(self, f: SolutionField):
        ps = pt_up.compute_point_system(self.blocks, self.projectors, self.model,
                                        f, self.subtri.c_sigma, order=self.order,
                                        cond_limit=self.cond_limit,
                                        scatters=self.point_scatters)
        fs = avg_up.compute_face_system(self.mesh, self.layout, self.model, f,
                                        self.bcs, order=self.order)
        return ps, fs

    def compute_dt(self, f: SolutionField, systems=None):
        ps, fs = systems if systems is not None else self.build_systems(f)
        b_pt = ps.dt_bound()
        b_av = avg_up.face_dt_bound(self.mesh, fs)
        dt = self.controller.nu * min(b_pt, b_av)
        if not np.isfinite(dt) or dt <= 0.0:
            raise AdmissibilityError("non-finite time step; speeds are not finite")
        self.controller.last_dt = dt
        self.controller.last_binding = "point" if b_pt <= b_av else "average"
        return dt

    # -- blending ------------------------------------------------------------
    def _thetas(self, ps, fs):
        report = BlendReport()
        report.ho_fallbacks = ps.ho_fallbacks
        if self.order == "low":
            return [0.0] * len(ps.blocks), 0.0, report
        if self.order == "high":
            return [1.0] * len(ps.blocks), 1.0, report

        dom = self.domain
        th_blocks = []
        if isinstance(dom, ScalarBounds):
            for blk, u_star, dphi, alpha in zip(ps.blocks, ps.u_star, ps.dphi, ps.alpha_e):
                scale = alpha[:, None] / blk.c_sigma
                th = theta_scalar(u_star[..., 0], dphi[..., 0], dom.lo, dom.hi, scale)
                th_blocks.append(th)
            th_face = theta_scalar(fs.u_star[:, 0], fs.df[:, 0], dom.lo, dom.hi,
                                   fs.alpha_f)
        else:
            for blk, u_star, dphi, alpha in zip(ps.blocks, ps.u_star, ps.dphi, ps.alpha_e):
                scale = alpha[:, None] / blk.c_sigma
                th_blocks.append(theta_euler(u_star, dphi, scale, self.eps_rel,
                                             events=self.events))
            th_face = theta_euler(fs.u_star, fs.df, fs.alpha_f, self.eps_rel,
                                  events=self.events)
        for th in th_blocks:
            report.add(th)
        report.add(th_face)
        report.spectral_fallbacks = self.events.get("spectral_fallbacks", 0)
        return th_blocks, th_face, report

    # -- stages ---------------------------------------------------------------
    def forward_euler_step(self, f: SolutionField, dt, systems=None):
        """One blended forward-Euler stage; returns (field, BlendReport)."""
        self.init_domain(f)
        ps, fs = systems if systems is not None else self.build_systems(f)
        th_blocks, th_face, report = self._thetas(ps, fs)
        if self.order == "high":
            new_point = pt_up.assemble_point_high(ps, f, dt)
            new_avg = avg_up.assemble_average_high(self.mesh, fs, f, dt)
        else:
            new_point = pt_up.assemble_point_update(ps, f, th_blocks, dt)
            new_avg = avg_up.assemble_average_update(self.mesh, fs, f, th_face, dt)
        out = SolutionField(point=new_point, avg=new_avg)
        self.bcs.pin_points(self.model, self.layout, out.point)
        if self.order != "high":
            self.check_admissible(out, where="after forward-Euler stage")
        return out, report

    def ssprk3_step(self, f: SolutionField, dt, systems=None):
        """Shu-Osher SSP-RK3 built from three forward-Euler stages."""
        f1, r1 = self.forward_euler_step(f, dt, systems=systems)
        f2s, r2 = self.forward_euler_step(f1, dt)
        f2 = f.linear_combination(0.75, f2s, 0.25)
        self.bcs.pin_points(self.model, self.layout, f2.point)
        if self.order != "high":
            self.check_admissible(f2, where="after RK stage 2")
        f3s, r3 = self.forward_euler_step(f2, dt)
        out = f.linear_combination(1.0 / 3.0, f3s, 2.0 / 3.0)
        self.bcs.pin_points(self.model, self.layout, out.point)
        if self.order != "high":
            self.check_admissible(out, where="after RK step")
        r1.merge(r2)
        r1.merge(r3)
        return out, r1

    # -- driver ----------------------------------------------------------------
    def _record(self, step, t, dt, f, report):
        lo0, hi0 = f.component_range(0)
        if self.model.m == 4:
            min_rho = lo0
            min_e = min(float(internal_energy(f.point).min()),
                        float(internal_energy(f.avg).min()))
        else:
            min_rho = float("nan")
            min_e = float("nan")
        mass = float(total_quantities(self.mesh, f)[0])
        return StepRecord(step=step, t=t, dt=dt, min_rho=min_rho, min_e=min_e,
                          min_u=lo0, max_u=hi0, mass=mass,
                          min_theta=report.min_theta,
                          theta_activations=report.activations)

    def advance(self, f: SolutionField, t_end, t0=0.0, max_steps=None,
                on_step=None, use_rk3=True):
        """March to ``t_end``; returns (field, [StepRecord])."""
        self.init_domain(f)
        self.check_admissible(f, where="in the initial data")
        records = []
        t = t0
        step = 0
        while t < t_end - 1e-14 * max(1.0, abs(t_end)):
            systems = self.build_systems(f)
            dt = min(self.compute_dt(f, systems), t_end - t)
            stepper = self.ssprk3_step if use_rk3 else self.forward_euler_step
            for _ in range(45):
                try:
                    f_new, report = stepper(f, dt, systems=systems)
                    break
                except CFLError:
                    dt *= 0.5
            else:
                raise CFLError("time step collapsed while retrying a stage")
            f = f_new
            t += dt
            step += 1
            records.append(self._record(step, t, dt, f, report))
            if on_step is not None:
                on_step(step, t, f)
            if max_steps is not None and step >= max_steps:
                break
        return f, records
