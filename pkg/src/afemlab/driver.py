"""The adaptive loop: solve -> estimate -> mark -> refine.

Each iteration solves the discrete nonlinear problem (Newton, warm
started by prolonging the previous solution), computes the residual
indicator and oscillation, records certificates (bulk-marking margin and
minimality, conformity, mesh condition for cubic problems), marks, and
refines.  Stop rules fire in the order: estimator tolerance, dof cap,
iteration cap; a vanishing estimator always stops.

Reports keep the full history (meshes, solutions, indicator fields), so
convergence diagnostics can be computed after the fact.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dfield
from typing import Optional

import numpy as np

from . import estimate, fem, mesh as msh, nlsolve
from .mark import MarkConfig, dorfler_is_minimal, dorfler_margin


@dataclass
class AfemConfig:
    problem: object
    mesh: object
    mark: MarkConfig = dfield(default_factory=MarkConfig)
    ell: int = 1
    newton: nlsolve.NewtonConfig = dfield(
        default_factory=nlsolve.NewtonConfig)
    tol_eta: Optional[float] = None
    max_dofs: Optional[int] = None
    max_iters: Optional[int] = None
    gamma: Optional[float] = None
    seed: int = 0
    probe_every: int = 5          # dual-probe cadence without an exact sol.
    probe_max_dofs: int = 5000
    check_mesh_condition: bool = True

    def __post_init__(self):
        if self.ell < 1:
            raise ValueError("ell must be >= 1")


@dataclass
class IterationRecord:
    k: int
    n_dofs: int
    n_elems: int
    eta_total: float
    osc_total: float
    energy_error: float
    E_increment: float
    q_error: float
    alpha: float
    newton_iters: int
    dorfler_margin: float
    min_angle: float
    dorfler_minimal: bool = True
    mesh_condition_violations: Optional[int] = None


@dataclass
class AfemReport:
    config: AfemConfig
    records: list
    meshes: list
    solutions: list
    fields: list
    stop_reason: str = ""

    @property
    def etas(self):
        return np.array([r.eta_total for r in self.records])

    @property
    def errors(self):
        return np.array([r.energy_error for r in self.records])

    @property
    def dofs(self):
        return np.array([r.n_dofs for r in self.records])

    @property
    def increments(self):
        return np.array([r.E_increment for r in self.records[1:]])


def afem_run(config):
    """Run the adaptive loop until a stop rule fires."""
    if config.tol_eta is None and config.max_dofs is None \
            and config.max_iters is None:
        raise ValueError("set at least one stop rule "
                         "(tol_eta, max_dofs or max_iters)")
    return _loop(config, mark_all=False, sweeps=None)


def uniform_run(config, sweeps):
    """Same loop with every element marked, for ``sweeps`` refinements."""
    return _loop(config, mark_all=True, sweeps=int(sweeps))


def _loop(config, mark_all, sweeps):
    problem = config.problem
    mesh = config.mesh
    cubic = problem.m == 3 if problem.m is not None else False
    records, meshes, sols, fields = [], [], [], []
    u_prev = None
    gamma = config.gamma
    q_prev = np.nan
    rising = 0
    warned = False
    stop = ""
    k = 0
    while True:
        space = fem.P1Space(mesh)
        u0 = fem.prolong(u_prev, space) if u_prev is not None else None
        out = nlsolve.newton(problem, space, u0=u0, cfg=config.newton)
        field = estimate.indicator_for(out.u, problem)
        eta_tot = estimate.aggregate(field)
        osc_tot = estimate.aggregate(field.osc, p=field.p)

        err = fem.energy_error(out.u, problem.exact_grad) \
            if problem.exact_grad is not None else np.nan
        e_inc = fem.energy_increment(u_prev, out.u) \
            if u_prev is not None else np.nan
        if gamma is None:
            gamma = float(err ** 2 / eta_tot ** 2) \
                if np.isfinite(err) and eta_tot > 1e-14 else 1.0

        q = _quasi_error(config, problem, out.u, err, eta_tot, gamma, k)
        alpha = np.sqrt(q ** 2 / q_prev ** 2) \
            if np.isfinite(q) and np.isfinite(q_prev) and q_prev > 0 \
            else np.nan
        if np.isfinite(q) and np.isfinite(q_prev):
            rising = rising + 1 if q > q_prev else 0
            if rising >= 3 and not warned:
                warnings.warn(
                    f"quasi-error increased over 3 consecutive iterations "
                    f"(k = {k})", RuntimeWarning, stacklevel=3)
                warned = True
        q_prev = q

        marked = np.arange(mesh.n_triangles) if mark_all \
            else config.mark.select(field)
        if config.mark.strategy == "dorfler" or mark_all:
            theta = 1.0 if mark_all else config.mark.theta
            margin = dorfler_margin(field, marked, theta)
            minimal = True if mark_all \
                else dorfler_is_minimal(field, marked, theta)
        else:
            margin, minimal = np.nan, True

        violations = None
        if cubic and config.check_mesh_condition:
            violations = len(nlsolve.check_mesh_condition(space))

        records.append(IterationRecord(
            k=k, n_dofs=space.n_dofs, n_elems=mesh.n_triangles,
            eta_total=eta_tot, osc_total=osc_tot, energy_error=err,
            E_increment=e_inc, q_error=q, alpha=alpha,
            newton_iters=out.iters, dorfler_margin=margin,
            min_angle=float(msh.angles(mesh).min()),
            dorfler_minimal=minimal,
            mesh_condition_violations=violations))
        meshes.append(mesh)
        sols.append(out.u)
        fields.append(field)

        if sweeps is not None:
            if k >= sweeps:
                stop = "sweeps"
                break
        else:
            if config.tol_eta is not None and eta_tot <= config.tol_eta:
                stop = "tol_eta"
                break
            if eta_tot <= 1e-14:
                stop = "eta_zero"
                break
            if config.max_dofs is not None \
                    and space.n_dofs >= config.max_dofs:
                stop = "max_dofs"
                break
            if config.max_iters is not None and k + 1 >= config.max_iters:
                stop = "max_iters"
                break
            if marked.size == 0:
                stop = "nothing_marked"
                break

        mesh = msh.refine(mesh, marked, config.ell)
        u_prev = out.u
        k += 1

    return AfemReport(config=config, records=records, meshes=meshes,
                      solutions=sols, fields=fields, stop_reason=stop)


def _quasi_error(config, problem, u, err, eta_tot, gamma, k):
    if np.isfinite(err):
        return float(np.sqrt(err ** 2 + gamma * eta_tot ** 2))
    if config.probe_every and k % config.probe_every == 0:
        try:
            probe = estimate.dual_residual_probe(
                u, problem, ref_levels=1, max_dofs=config.probe_max_dofs)
        except Exception:
            return np.nan
        return float(np.sqrt(probe ** 2 + gamma * eta_tot ** 2))
    return np.nan


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

CSV_COLUMNS = ("k", "ndof", "nelem", "eta", "osc", "energy_err", "E_inc",
               "q_err", "alpha", "newton_iters", "dorfler_margin",
               "min_angle")


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def report_csv_lines(report):
    lines = [",".join(CSV_COLUMNS)]
    for r in report.records:
        lines.append(",".join(_fmt(v) for v in (
            r.k, r.n_dofs, r.n_elems, r.eta_total, r.osc_total,
            r.energy_error, r.E_increment, r.q_error, r.alpha,
            r.newton_iters, r.dorfler_margin, r.min_angle)))
    return lines


def write_report_csv(report, path):
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(report_csv_lines(report)) + "\n")


def write_indicator_csv(field, path):
    lines = ["elem_id,eta,osc"]
    for i, (e, o) in enumerate(zip(field.eta, field.osc)):
        lines.append(f"{i},{float(e)!r},{float(o)!r}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_vtk(mesh, path, point_data=None, name="u"):
    """Legacy-ASCII VTK export of a triangulation and optional P1 field."""
    lines = ["# vtk DataFile Version 2.0", "afemlab mesh", "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_vertices} double"]
    for x, y in mesh.vertices:
        lines.append(f"{float(x)!r} {float(y)!r} 0.0")
    nt = mesh.n_triangles
    lines.append(f"CELLS {nt} {4 * nt}")
    for tri in mesh.triangles:
        lines.append(f"3 {int(tri[0])} {int(tri[1])} {int(tri[2])}")
    lines.append(f"CELL_TYPES {nt}")
    lines.extend(["5"] * nt)
    if point_data is not None:
        lines.append(f"POINT_DATA {mesh.n_vertices}")
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        for v in np.asarray(point_data, dtype=float):
            lines.append(repr(float(v)))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
