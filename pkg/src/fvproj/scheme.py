"""BDF2 projection time-stepper: momentum prediction, pressure update,
velocity correction, and a hypothesis-compliant start-up.

Each step advances (u^{n-1}, u^n, p^n) to (u_tilde, p^{n+1}, u^{n+1}):

* predictor: (3 u_tilde - 4 u^n + u^{n-1}) / (2k) - (1/Re) lap u_tilde
  + upwind(2 u^n - u^{n-1}, u_tilde) + grad p^n = f^{n+1},
* pressure: (grad dp, grad r) = -(3/(2k)) (div u_tilde, r) on the
  zero-mean subspace,
* correction: u^{n+1} = u_tilde - (2k/3) grad dp,

which leaves u^{n+1} divergence free up to the pressure-solve residual.
Start-up: the initial velocity is the discrete Leray projection of the
cell-averaged data, and u^1 comes from one semi-implicit Euler step (old
pressure zero) followed by one projection.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import vtkio
from .fields import (ScalarP1NC, SolenoidalP0, VectorP0, h_norm, l2_inner,
                     l2_norm, mean_zero, p1nc_mass, project_p0)
from .linalg import SolverConfig, SolverError, solve
from .mesh import Mesh, require_admissible, resolve_mesh
from .operators import (convection_matrix, divergence, gradient,
                        pressure_stiffness, trilinear_form, velocity_stiffness)


class SchemeError(RuntimeError):
    pass


# -- built-in data cases ----------------------------------------------------------

def _a(x):
    return x * x * (1.0 - x) ** 2


def _da(x):
    return 2.0 * x - 6.0 * x**2 + 4.0 * x**3


def _dda(x):
    return 2.0 - 12.0 * x + 12.0 * x**2


def _ddda(x):
    return -12.0 + 24.0 * x


# Amplitude bringing the peak speed of the stream-function field to O(1);
# keeps every relative solver tolerance meaningful against absolute floors.
_VEL_SCALE = 32.0


def _velocity_a(x, y):
    """Scaled curl of (x(1-x)y(1-y))^2: divergence free, zero full trace."""
    return _VEL_SCALE * np.stack([_a(x) * _da(y), -_da(x) * _a(y)], axis=-1)


def _forcing_a(x, y, re):
    """Steady forcing making the scaled curl field an equilibrium of the
    momentum equation with pressure cos(pi x) cos(pi y)."""
    s = _VEL_SCALE
    lap_u = _dda(x) * _da(y) + _a(x) * _ddda(y)
    lap_v = -(_ddda(x) * _a(y) + _da(x) * _dda(y))
    conv_u = _a(x) * _da(x) * _da(y) ** 2 - _a(x) * _da(x) * _a(y) * _dda(y)
    conv_v = -_a(x) * _dda(x) * _a(y) * _da(y) + _da(x) ** 2 * _a(y) * _da(y)
    gp_u = -np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)
    gp_v = -np.pi * np.cos(np.pi * x) * np.sin(np.pi * y)
    return np.stack([-s * lap_u / re + s * s * conv_u + gp_u,
                     -s * lap_v / re + s * s * conv_v + gp_v], axis=-1)


@dataclass(frozen=True)
class DataCase:
    name: str
    u0: callable            # u0(x, y) -> (..., 2)
    forcing: callable        # forcing(x, y, t) -> (..., 2)


def make_case(name: str, re: float) -> DataCase:
    if name == "zero":
        zero = lambda x, y: np.zeros(np.shape(x) + (2,))
        return DataCase("zero", zero, lambda x, y, t: zero(x, y))
    if name == "manufactured-A":
        return DataCase("manufactured-A", _velocity_a,
                        lambda x, y, t: _forcing_a(x, y, re))
    raise ValueError(f"unknown case {name!r} (choose zero or manufactured-A)")


# -- configuration -----------------------------------------------------------------

@dataclass
class RunConfig:
    mesh_spec: str = "acute:2"
    k: float = 1e-2
    n_steps: int = 200
    re: float = 100.0
    case: str = "manufactured-A"
    momentum: SolverConfig = field(
        default_factory=lambda: SolverConfig(method="bicgstab", rtol=1e-12))
    pressure: SolverConfig = field(
        default_factory=lambda: SolverConfig(method="cg", rtol=1e-13))
    out_dir: str | None = None
    cadence: int = 0            # snapshot every this many steps; 0 disables
    quad_order: int = 4
    allow_degenerate: bool = False

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("time step k must be positive")
        if self.n_steps < 2:
            raise ValueError("need at least 2 steps")
        if self.re <= 0:
            raise ValueError("Reynolds number must be positive")

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        pairs = {}
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line (want key=value): {raw!r}")
            key, val = line.split("=", 1)
            pairs[key.strip()] = val.strip()
        return cls().with_overrides(pairs)

    def with_overrides(self, pairs: dict) -> "RunConfig":
        cfg = self
        for key, val in pairs.items():
            if key == "mesh":
                cfg = replace(cfg, mesh_spec=val)
            elif key == "k":
                cfg = replace(cfg, k=float(val))
            elif key in ("steps", "n_steps"):
                cfg = replace(cfg, n_steps=int(val))
            elif key in ("re", "Re"):
                cfg = replace(cfg, re=float(val))
            elif key == "case":
                cfg = replace(cfg, case=val)
            elif key == "solver_rtol":
                cfg = replace(cfg,
                              momentum=replace(cfg.momentum, rtol=float(val)),
                              pressure=replace(cfg.pressure, rtol=float(val)))
            elif key == "momentum_rtol":
                cfg = replace(cfg, momentum=replace(cfg.momentum, rtol=float(val)))
            elif key == "pressure_rtol":
                cfg = replace(cfg, pressure=replace(cfg.pressure, rtol=float(val)))
            elif key == "out":
                cfg = replace(cfg, out_dir=val)
            elif key == "cadence":
                cfg = replace(cfg, cadence=int(val))
            elif key == "quad_order":
                cfg = replace(cfg, quad_order=int(val))
            elif key == "allow_degenerate":
                cfg = replace(cfg, allow_degenerate=val.lower() in ("1", "true", "yes"))
            else:
                raise ValueError(f"unknown config key {key!r}")
        return cfg


@dataclass
class SchemeState:
    u_prev: SolenoidalP0
    u_curr: SolenoidalP0
    p_curr: ScalarP1NC
    t: float
    n: int
    u_tilde: VectorP0 | None = None


@dataclass
class StepRecord:
    step: int
    t: float
    u_l2: float
    ut_hnorm: float
    p_l2: float
    div_residual: float
    increment: float
    orth_residual: float
    pyth_residual: float
    energy_residual: float


@dataclass
class Trajectory:
    config: RunConfig
    mesh: Mesh
    records: list
    init_diagnostics: dict
    state: SchemeState
    elapsed: float

    def monitor_rows(self):
        names = ("step", "t", "u_l2", "ut_hnorm", "p_l2", "div_residual",
                 "increment", "orth_residual", "pyth_residual", "energy_residual")
        return names, [[getattr(r, n) for n in names] for r in self.records]

    def write_monitors(self, path) -> None:
        names, rows = self.monitor_rows()
        with open(path, "w") as f:
            f.write(",".join(names) + "\n")
            for row in rows:
                f.write(f"{row[0]:d}," + ",".join(f"{v:.16e}" for v in row[1:]) + "\n")


class _Workspace:
    """Once-per-run assembled pieces: masses, stiffness, forcing sampler."""

    def __init__(self, config: RunConfig, mesh: Mesh):
        self.mesh = mesh
        self.case = make_case(config.case, config.re)
        self.mass = mesh.tri_area
        self.h_stiff = velocity_stiffness(mesh).matrix
        self.p_stiff = pressure_stiffness(mesh)
        self.p_mass = p1nc_mass(mesh)
        self.quad_order = config.quad_order
        self.cert_tol = 10.0 * config.pressure.rtol

    def forcing_at(self, t: float) -> VectorP0:
        return project_p0(lambda x, y: self.case.forcing(x, y, t),
                          self.mesh, self.quad_order)

    def certify(self, v: VectorP0, where: str, div_scale: float = 0.0) -> SolenoidalP0:
        """Gate a projected field on its remaining divergence.

        The projection solve can only reduce the divergence by its relative
        tolerance, so the gate scales with the larger of the field norm and
        the divergence that was removed.
        """
        div_l2 = l2_norm(divergence(v))
        scale = max(l2_norm(v), div_scale)
        if div_l2 > self.cert_tol * scale:
            raise SchemeError(
                f"{where}: divergence-free certificate failed "
                f"(|div u| = {div_l2:.3e} > {self.cert_tol:.1e} * {scale:.3e})")
        return SolenoidalP0.trusted(v)


def leray_project(v: VectorP0, ws: _Workspace, config: SolverConfig):
    """Remove the discrete gradient part: returns (projected field, potential)."""
    d = divergence(v)
    rhs = -(ws.p_mass * d.values)
    phi, info = solve(ws.p_stiff, rhs, config, zero_mean_weights=ws.p_mass)
    if not info.converged:
        raise SolverError(f"Leray projection solve failed: {info}")
    phi_field = ScalarP1NC(v.mesh, phi)
    return v - gradient(phi_field), phi_field


# -- the three substeps --------------------------------------------------------------

def momentum_step(state: SchemeState, config: RunConfig, ws: _Workspace) -> VectorP0:
    """Solve the predictor system; one matrix, two right-hand sides."""
    k = config.k
    u_star = SolenoidalP0.trusted(
        2.0 * state.u_curr.field - state.u_prev.field)
    A = (sp.diags(1.5 / k * ws.mass) + (1.0 / config.re) * ws.h_stiff
         + convection_matrix(u_star, weighted=True).matrix).tocsr()
    f = ws.forcing_at(state.t + k)
    gp = gradient(state.p_curr)
    rhs_common = (f.values
                  + (4.0 * state.u_curr.values - state.u_prev.values) / (2.0 * k)
                  - gp.values) * ws.mass[:, None]
    out = np.empty_like(rhs_common)
    for c in range(2):
        out[:, c], info = solve(A, rhs_common[:, c], config.momentum)
        if not info.converged:
            raise SolverError(f"momentum solve (component {c}) failed: {info}")
    return VectorP0(state.u_curr.mesh, out)


def pressure_step(state: SchemeState, u_tilde: VectorP0, config: RunConfig,
                  ws: _Workspace):
    """Solve for the pressure increment; returns (p_next, dp)."""
    d = divergence(u_tilde)
    weighted = ws.p_mass * d.values
    compat = abs(float(weighted.sum()))
    scale = float(np.linalg.norm(weighted))
    if compat > 1e-12 * max(scale, 1.0):
        raise SchemeError(
            f"pressure right-hand side incompatible: (div u, 1) = {compat:.3e}")
    rhs = -1.5 / config.k * weighted
    dp_vals, info = solve(ws.p_stiff, rhs, config.pressure,
                          zero_mean_weights=ws.p_mass)
    if not info.converged:
        raise SolverError(f"pressure solve failed: {info}")
    dp = ScalarP1NC(u_tilde.mesh, dp_vals)
    p_next = mean_zero(state.p_curr + dp)
    return p_next, dp


def correction_step(state: SchemeState, u_tilde: VectorP0, p_next: ScalarP1NC,
                    dp: ScalarP1NC, config: RunConfig, ws: _Workspace) -> SchemeState:
    """Subtract the increment gradient and rotate the state."""
    u_next = u_tilde - (2.0 * config.k / 3.0) * gradient(dp)
    cert = ws.certify(u_next, f"correction step {state.n + 1}",
                      div_scale=l2_norm(divergence(u_tilde)))
    return SchemeState(u_prev=state.u_curr, u_curr=cert, p_curr=p_next,
                       t=state.t + config.k, n=state.n + 1, u_tilde=u_tilde)


def advance(state: SchemeState, config: RunConfig, ws: _Workspace):
    """One full BDF2 projection step; returns (new state, StepRecord)."""
    k = config.k
    u_tilde = momentum_step(state, config, ws)
    p_next, dp = pressure_step(state, u_tilde, config, ws)
    new = correction_step(state, u_tilde, p_next, dp, config, ws)

    u_np1, u_n, u_nm1 = new.u_curr.field, state.u_curr.field, state.u_prev.field
    tiny = 1e-300
    gp_next = gradient(p_next)
    orth = abs(l2_inner(u_np1, gp_next)) / (l2_norm(u_np1) * l2_norm(gp_next) + tiny)
    pyth_num = (l2_norm(u_np1) ** 2 - l2_norm(u_tilde) ** 2
                + l2_norm(u_np1 - u_tilde) ** 2)
    pyth = abs(pyth_num) / max(l2_norm(u_tilde) ** 2, tiny)

    u_star = SolenoidalP0.trusted(2.0 * u_n - u_nm1)
    terms = [
        l2_norm(u_np1) ** 2 - l2_norm(u_n) ** 2,
        l2_norm(2.0 * u_np1 - u_n) ** 2 - l2_norm(2.0 * u_n - u_nm1) ** 2,
        l2_norm(u_np1 - 2.0 * u_n + u_nm1) ** 2,
        6.0 * l2_norm(u_tilde - u_np1) ** 2,
        4.0 * k / config.re * h_norm(u_tilde) ** 2,
        4.0 * k * trilinear_form(u_star, u_tilde, u_tilde),
        4.0 * k * l2_inner(gradient(state.p_curr), u_tilde),
        -4.0 * k * l2_inner(ws.forcing_at(new.t), u_tilde),
    ]
    energy = abs(sum(terms)) / max(max(abs(v) for v in terms), tiny)

    rec = StepRecord(
        step=new.n, t=new.t,
        u_l2=l2_norm(u_np1),
        ut_hnorm=h_norm(u_tilde),
        p_l2=l2_norm(p_next),
        div_residual=l2_norm(divergence(u_np1)),
        increment=l2_norm(u_np1 - u_n) / k,
        orth_residual=orth,
        pyth_residual=pyth,
        energy_residual=energy,
    )
    return new, rec


# -- start-up ------------------------------------------------------------------------

def initialize(config: RunConfig, mesh: Mesh):
    """Build (u^0, u^1, p^1) and report the start-up diagnostics.

    u^0 is the discrete Leray projection of the cell-averaged initial
    data; u^1 comes from one semi-implicit Euler step (upwind convection
    by u^0, old pressure zero) followed by one projection with step k.
    Returns (state, diagnostics, workspace).
    """
    ws = _Workspace(config, mesh)
    k = config.k

    u0_raw = project_p0(ws.case.u0, mesh, config.quad_order)
    u0_field, _ = leray_project(u0_raw, ws, config.pressure)
    u0 = ws.certify(u0_field, "initial projection",
                    div_scale=l2_norm(divergence(u0_raw)))

    A = (sp.diags(ws.mass / k) + (1.0 / config.re) * ws.h_stiff
         + convection_matrix(u0, weighted=True).matrix).tocsr()
    f1 = ws.forcing_at(k)
    rhs_common = (f1.values + u0.values / k) * ws.mass[:, None]
    ut1 = np.empty_like(rhs_common)
    for c in range(2):
        ut1[:, c], info = solve(A, rhs_common[:, c], config.momentum)
        if not info.converged:
            raise SolverError(f"start-up momentum solve failed: {info}")
    u_tilde1 = VectorP0(mesh, ut1)

    d = divergence(u_tilde1)
    rhs = -(ws.p_mass * d.values) / k
    dp_vals, info = solve(ws.p_stiff, rhs, config.pressure,
                          zero_mean_weights=ws.p_mass)
    if not info.converged:
        raise SolverError(f"start-up pressure solve failed: {info}")
    p1 = mean_zero(ScalarP1NC(mesh, dp_vals))
    u1_field = u_tilde1 - k * gradient(p1)
    u1 = ws.certify(u1_field, "start-up projection",
                    div_scale=l2_norm(d))

    err0 = _quadrature_error(u0.field, ws.case.u0, config.quad_order)
    diagnostics = {
        "u0_l2": l2_norm(u0.field),
        "u1_l2": l2_norm(u1.field),
        "k_grad_p1_l2": k * l2_norm(gradient(p1)),
        "startup_bound": (l2_norm(u0.field) + l2_norm(u1.field)
                          + k * l2_norm(gradient(p1))),
        "increment_over_k": l2_norm(u1.field - u0.field) / k,
        "u0_projection_error": err0,
        "div_u0": l2_norm(divergence(u0.field)),
        "div_u1": l2_norm(divergence(u1.field)),
    }
    state = SchemeState(u_prev=u0, u_curr=u1, p_curr=p1, t=k, n=1,
                        u_tilde=u_tilde1)
    return state, diagnostics, ws


def _quadrature_error(field: VectorP0, exact, quad_order: int) -> float:
    from . import quadrature

    mesh = field.mesh
    bary, w = quadrature.triangle_rule(max(quad_order, 4))
    pts = quadrature.triangle_points(mesh.vertices[mesh.triangles], bary)
    diff = (np.asarray(exact(pts[..., 0], pts[..., 1]), dtype=float)
            - field.values[:, None, :])
    per_cell = np.einsum("tqd,tqd,q->t", diff, diff, w) * mesh.tri_area
    return float(np.sqrt(max(per_cell.sum(), 0.0)))


# -- driver --------------------------------------------------------------------------

def run(config: RunConfig, mesh: Mesh | None = None) -> Trajectory:
    """Execute the full time loop; optionally write monitors and snapshots."""
    if mesh is None:
        mesh = resolve_mesh(config.mesh_spec)
    require_admissible(mesh, allow_degenerate=config.allow_degenerate)

    t0 = time.perf_counter()
    state, diagnostics, ws = initialize(config, mesh)
    out = Path(config.out_dir) if config.out_dir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)

    records = []
    for _ in range(1, config.n_steps):
        state, rec = advance(state, config, ws)
        records.append(rec)
        if out and config.cadence and (state.n % config.cadence == 0):
            _snapshot(out, state, ws)
    traj = Trajectory(config=config, mesh=mesh, records=records,
                      init_diagnostics=diagnostics, state=state,
                      elapsed=time.perf_counter() - t0)
    if out:
        traj.write_monitors(out / "monitors.csv")
    return traj


def _snapshot(out: Path, state: SchemeState, ws: _Workspace) -> None:
    mesh = state.u_curr.mesh
    div = divergence(state.u_curr.field)
    vtkio.write_unstructured(
        out / f"state_{state.n:06d}.vtk", mesh,
        cell_vectors={"velocity": state.u_curr.values},
        cell_scalars={"speed": np.linalg.norm(state.u_curr.values, axis=1)})
    vtkio.write_point_cloud(
        out / f"pressure_{state.n:06d}.vtk", mesh.edge_midpoint,
        scalars={"pressure": state.p_curr.values,
                 "div_velocity": div.values})
