"""Scenario schema, validation, and run orchestration.

A scenario file is a JSON document describing one beam problem in physical
terms (two-segment stiffness and density, axial force, transversal load,
initial data, time window, mesh, regularization schedule) plus diagnostic
toggles.  Parsing maps it to the standard solver form at once:

    c(x)   = EI1 + H(x - x0) (EI2 - EI1)        (bending stiffness)
    R(x)   = R_left + H(x - x0) R_jump          (line density)
    b(x,t) = P(R(x) t)                          (axial force composition)
    g      = F0 delta(x - x1), optional Winkler forcing -c_w u

The x-dependent time rescaling that would remove R from the equation is
deliberately NOT applied; every report header records this mapping.

Width rules: the scenario's regularization rule governs the time-direction
mollification (where the log-type hypothesis lives).  Spatial atoms (the
stiffness/density jumps and the point load) always use the polynomial
width eps: their mollified sup norms are eps-independent, so no log-type
scaling is needed, and the wider log-rule kernels could not fit inside the
unit interval for the coarse half of the default schedule.  Initial-data
profiles are mollified with width eps/8, which keeps the whole default
schedule inside the quadratic-consistency regime.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .assemble import build_system
from .energy import energy_report, state_growth_inequality, verify_bound
from .fem import build_space, interpolate
from .mollify import (POLYNOMIAL, RULES, MollifyError, RegularizedField,
                      axial_force_field, density_field, epsilon_schedule,
                      load_field, mollify_profile, stiffness_field)
from .newmark import NewmarkParams, solve_ivp, time_derivative_cascade, \
    trajectory_samples
from .sweeps import (ProblemSetup, association_test, bootstrap_check,
                     g_infinity_test, null_test, slow_scale_check, sweep,
                     trajectory_difference_norm)

DATA_WIDTH_SCALE = 0.125


class ScenarioError(ValueError):
    pass


# ---------------------------------------------------------------------------
# named analytic profiles (defined on all of R, clamped-compatible on [0,1])
# ---------------------------------------------------------------------------

def _profile_callables(cfg: "ProfileConfig"):
    a = cfg.amplitude
    if cfg.profile == "zero":
        return (lambda x: np.zeros(np.shape(x)), lambda x: np.zeros(np.shape(x)))
    if cfg.profile == "poly_clamped":
        return (lambda x: a * x**2 * (1.0 - x) ** 2,
                lambda x: a * (2.0 * x - 6.0 * x**2 + 4.0 * x**3))
    if cfg.profile == "sine_sq":
        return (lambda x: a * np.sin(np.pi * x) ** 2,
                lambda x: a * np.pi * np.sin(2.0 * np.pi * x))
    if cfg.profile == "bump":
        c, r = cfg.center, cfg.halfwidth

        def f(x):
            y = (np.asarray(x, dtype=float) - c) / r
            out = np.zeros(np.shape(y))
            m = np.abs(y) < 1.0 - 1e-12
            out[m] = a * np.exp(1.0 - 1.0 / (1.0 - y[m] ** 2))
            return out

        def df(x):
            y = (np.asarray(x, dtype=float) - c) / r
            out = np.zeros(np.shape(y))
            m = np.abs(y) < 1.0 - 1e-9
            ym = y[m]
            out[m] = a * np.exp(1.0 - 1.0 / (1.0 - ym**2)) * \
                (-2.0 * ym / (1.0 - ym**2) ** 2) / r
            return out

        return f, df
    raise ScenarioError(f"unknown profile {cfg.profile!r}")


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

class ProfileConfig(BaseModel):
    profile: Literal["zero", "poly_clamped", "sine_sq", "bump"] = "zero"
    amplitude: float = 1.0
    center: float = Field(default=0.5, gt=0.0, lt=1.0)
    halfwidth: float = Field(default=0.25, gt=0.0)


class BeamConfig(BaseModel):
    EI1: float = Field(gt=0.0)
    EI2: float = Field(gt=0.0)
    x0: float = Field(default=0.5, gt=0.0, lt=1.0)
    R_left: float = Field(default=1.0, gt=0.0)
    R_jump: float = 0.0
    # amplitude of a smooth sin(pi x) stiffness modulation; nonnegative, so
    # min(EI1, EI2) stays an exact lower bound
    stiffness_wobble: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _density_positive(self):
        if self.R_left + self.R_jump <= 0.0:
            raise ValueError("R_left + R_jump must stay positive")
        return self


class AxialConfig(BaseModel):
    P0: float = 0.0
    P1: float = 0.0
    kind: Literal["dirac", "sinusoid"] = "sinusoid"
    t0: Optional[float] = None
    omega: Optional[float] = None


class LoadConfig(BaseModel):
    F0: float = 0.0
    x1: float = Field(default=0.5, gt=0.0, lt=1.0)
    winkler: float = Field(default=0.0, ge=0.0)


class InitialConfig(BaseModel):
    f1: ProfileConfig = ProfileConfig()
    f2: ProfileConfig = ProfileConfig()


class TimeConfig(BaseModel):
    T: float = Field(gt=0.0)
    dt: float = Field(gt=0.0)


class MeshConfig(BaseModel):
    n_elements: int = Field(default=32, ge=2)
    q_pts: int = Field(default=4, ge=4)


class RegularizationConfig(BaseModel):
    rule: Literal["polynomial", "log", "slow_scale"] = "polynomial"
    k_min: int = Field(default=1, ge=1)
    k_max: int = Field(default=10, ge=1)
    mollify_data: bool = True

    @model_validator(mode="after")
    def _ordered(self):
        if self.k_max < self.k_min:
            raise ValueError("k_max must be >= k_min")
        return self


class DiagnosticsConfig(BaseModel):
    l_max: int = Field(default=3, ge=0, le=4)
    verify_energy: bool = True
    require_moderate: bool = True
    association: bool = False
    require_uniform_exponents: bool = False
    spread_tol: float = 1.0
    bootstrap_tol: Optional[float] = None


class Scenario(BaseModel):
    name: str = ""
    beam: BeamConfig
    axial: AxialConfig = AxialConfig()
    load: LoadConfig = LoadConfig()
    initial: InitialConfig = InitialConfig()
    time: TimeConfig
    mesh: MeshConfig = MeshConfig()
    regularization: RegularizationConfig = RegularizationConfig()
    diagnostics: DiagnosticsConfig = DiagnosticsConfig()

    @model_validator(mode="after")
    def _cross_checks(self):
        ax = self.axial
        if ax.P1 != 0.0 and ax.kind == "dirac":
            if ax.t0 is None:
                raise ValueError("dirac axial force requires t0")
            if not 0.0 < ax.t0 < self.time.T:
                raise ValueError("t0 must lie inside (0, T)")
            if self.regularization.rule == "polynomial":
                raise ValueError(
                    "a dirac axial force needs a log-type regularization "
                    "rule (log or slow_scale); with polynomial widths the "
                    "axial sup norm is not log-bounded")
        if ax.P1 != 0.0 and ax.kind == "sinusoid" and (ax.omega is None
                                                       or ax.omega <= 0.0):
            raise ValueError("sinusoid axial force requires omega > 0")
        n = round(self.time.T / self.time.dt)
        if n < 1 or abs(n * self.time.dt - self.time.T) > 1e-9 * self.time.T:
            raise ValueError("dt must divide T")
        return self

    @property
    def schedule(self) -> List[float]:
        return epsilon_schedule(self.regularization.k_min,
                                self.regularization.k_max)

    @property
    def c0(self) -> float:
        return min(self.beam.EI1, self.beam.EI2)

    def params(self) -> NewmarkParams:
        return NewmarkParams(dt=self.time.dt, T=self.time.T)


def resolution_warnings(scenario: Scenario) -> List[str]:
    """Mesh/step resolution checks against the finest-eps kernel widths."""
    out = []
    h = 1.0 / scenario.mesh.n_elements
    eps_min = 2.0 ** (-scenario.regularization.k_max)
    w_x = POLYNOMIAL.width(eps_min)
    if scenario.load.F0 != 0.0 and h > w_x / 4.0:
        out.append(
            f"point load under-resolved at eps_min: h={h:g} > width/4="
            f"{w_x / 4.0:g}; refine the mesh or raise k_min")
    if (scenario.beam.EI1 != scenario.beam.EI2
            or scenario.beam.R_jump != 0.0) and h > w_x:
        out.append(
            f"mollified jump narrower than the mesh at eps_min: h={h:g} > "
            f"width={w_x:g}")
    if scenario.axial.P1 != 0.0 and scenario.axial.kind == "dirac":
        rule = RULES[scenario.regularization.rule]
        w_t = rule.width(eps_min)
        if scenario.time.dt > w_t / 8.0:
            out.append(
                f"axial impulse under-resolved: dt={scenario.time.dt:g} > "
                f"width/8={w_t / 8.0:g}")
    return out


def parse_scenario(path, strict: bool = False) -> Scenario:
    """Load and validate a scenario file; in strict mode resolution
    warnings become errors."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read()
    return parse_scenario_text(raw, strict=strict)


def parse_scenario_text(text: str, strict: bool = False) -> Scenario:
    scenario = Scenario.model_validate_json(text)
    warnings_ = resolution_warnings(scenario)
    if strict and warnings_:
        raise ScenarioError("strict mode: " + "; ".join(warnings_))
    return scenario


def emit_scenario(scenario: Scenario) -> str:
    """Canonical JSON (sorted keys); parse(emit(s)) == s."""
    return json.dumps(scenario.model_dump(), sort_keys=True, indent=2) + "\n"


def builtin_scenario_names() -> List[str]:
    files = resources.files("beamreg").joinpath("scenarios")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_builtin_scenario(name: str) -> Scenario:
    ref = resources.files("beamreg").joinpath(f"scenarios/{name}.json")
    if not ref.is_file():
        raise ScenarioError(
            f"unknown builtin scenario {name!r}; available: "
            f"{', '.join(builtin_scenario_names())}")
    return parse_scenario_text(ref.read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# scenario -> fields -> problem
# ---------------------------------------------------------------------------

def _raw_spatial(value_fn, lower, upper):
    def dt_zero(x, t, order=1):
        return np.zeros(np.shape(np.asarray(x, dtype=float)))

    return RegularizedField(eps=1e-300, value=value_fn, dt_value=dt_zero,
                            sup_norm=max(abs(lower), abs(upper)),
                            lower=lower, upper=upper)


def build_fields(scenario: Scenario, eps: float, mollified: bool = True) -> dict:
    b = scenario.beam
    rule = RULES[scenario.regularization.rule]
    ax = scenario.axial
    if mollified:
        c_field = stiffness_field(b.EI1, b.EI2, b.x0, eps, POLYNOMIAL,
                                  wobble=b.stiffness_wobble)
        r_field = density_field(b.R_left, b.R_jump, b.x0, eps, POLYNOMIAL)
    else:
        # exact coefficient functions, used as coherence references
        def c_value(x, t=0.0):
            x = np.asarray(x, dtype=float)
            out = np.where(x > b.x0, b.EI2, b.EI1).astype(float)
            if b.stiffness_wobble:
                out = out + b.stiffness_wobble * np.sin(np.pi * x)
            return out

        def r_value(x, t=0.0):
            x = np.asarray(x, dtype=float)
            return b.R_left + np.where(x > b.x0, b.R_jump, 0.0)

        c_field = _raw_spatial(c_value, min(b.EI1, b.EI2),
                               max(b.EI1, b.EI2) + b.stiffness_wobble)
        r_field = _raw_spatial(r_value, min(b.R_left, b.R_left + b.R_jump),
                               max(b.R_left, b.R_left + b.R_jump))
    if ax.P0 == 0.0 and ax.P1 == 0.0:
        b_field = None
    elif not mollified and ax.kind == "dirac" and ax.P1 != 0.0:
        raise ScenarioError("a Dirac axial impulse has no unmollified form")
    else:
        b_field = axial_force_field(ax.P0, ax.P1, ax.kind, r_field, eps, rule,
                                    T=scenario.time.T, t0=ax.t0, omega=ax.omega)
    if scenario.load.F0 == 0.0:
        g_field = None
    elif not mollified:
        raise ScenarioError("a point load has no unmollified form")
    else:
        g_field = load_field(scenario.load.F0, scenario.load.x1, eps, POLYNOMIAL)
    return {"c": c_field, "b": b_field, "g": g_field, "density": r_field}


def build_problem(scenario: Scenario, eps: float, space=None,
                  mollify_data: Optional[bool] = None,
                  mollified: bool = True) -> ProblemSetup:
    space = space or build_space(scenario.mesh.n_elements, scenario.mesh.q_pts)
    fields = build_fields(scenario, eps, mollified=mollified)
    system = build_system(space, fields["c"], fields["b"], fields["g"],
                          winkler_coefficient=scenario.load.winkler)
    do_mollify = (scenario.regularization.mollify_data
                  if mollify_data is None else mollify_data)
    f1f, f1d = _profile_callables(scenario.initial.f1)
    f2f, f2d = _profile_callables(scenario.initial.f2)
    if do_mollify:
        f1f, f1d = mollify_profile(f1f, f1d, eps, POLYNOMIAL,
                                   width_scale=DATA_WIDTH_SCALE)
        f2f, f2d = mollify_profile(f2f, f2d, eps, POLYNOMIAL,
                                   width_scale=DATA_WIDTH_SCALE)
    f1 = interpolate(space, f1f, f1d)
    f2 = interpolate(space, f2f, f2d)
    return ProblemSetup(space=space, system=system, c_field=fields["c"],
                        b_field=fields["b"], g_field=fields["g"],
                        f1=f1, f2=f2, params=scenario.params(), c0=scenario.c0)


def report_header(scenario: Scenario, mode: str) -> dict:
    return {
        "mode": mode,
        "scenario": scenario.model_dump(),
        "coefficient_mapping": {
            "stiffness": "c(x) = EI1 + H(x - x0)(EI2 - EI1)",
            "density": "R(x) = R_left + H(x - x0) R_jump",
            "axial_composition": "b(x, t) = P(R(x) t)",
            "time_rescaling_applied": False,
            "spatial_atom_width_rule": "polynomial",
            "data_width_scale": DATA_WIDTH_SCALE,
        },
        "warnings": resolution_warnings(scenario),
    }


# ---------------------------------------------------------------------------
# run modes
# ---------------------------------------------------------------------------

def run_solve(scenario: Scenario, eps: Optional[float] = None,
              sample_points: int = 101, stride: int = 10) -> dict:
    """Single regularized solve; returns the trajectory CSV (t,x,u,ut,uxx)."""
    eps = eps if eps is not None else scenario.schedule[-1]
    setup = build_problem(scenario, eps)
    traj = solve_ivp(setup.space, setup.system, setup.f1, setup.f2,
                     setup.params)
    xs = np.linspace(0.0, 1.0, sample_points)
    rows = trajectory_samples(traj, xs, stride=stride)
    lines = ["t,x,u,ut,uxx"]
    for r in rows:
        lines.append(",".join(repr(float(v)) for v in r))
    out = report_header(scenario, "solve")
    out.update({"eps": eps, "csv": "\n".join(lines) + "\n", "passed": True})
    return out


def run_sweep(scenario: Scenario, l_max: Optional[int] = None) -> dict:
    """Full eps-sweep with cascade norms, exponent fits, and the enabled
    asymptotic gates."""
    diag = scenario.diagnostics
    l_max = diag.l_max if l_max is None else l_max
    space = build_space(scenario.mesh.n_elements, scenario.mesh.q_pts)
    schedule = scenario.schedule
    keep = diag.association

    rep = sweep(lambda eps: build_problem(scenario, eps, space=space),
                schedule, l_max=l_max, with_energy=diag.verify_energy,
                keep_trajectories=keep)

    checks = {}
    finite = all(math.isfinite(r["norm"]) for r in rep.norms)
    checks["norms_finite"] = finite
    if diag.require_moderate:
        checks["moderate_non_diverging"] = finite and not any(
            f["diverging"] for f in rep.fits)
    if diag.verify_energy:
        checks["energy_bound"] = bool(rep.energy_passed)

    report = rep.to_dict()
    if keep and rep.base_trajectories:
        direct = build_problem(scenario, schedule[-1], space=space,
                               mollify_data=False, mollified=False)
        ref_traj = solve_ivp(space, direct.system, direct.f1, direct.f2,
                             direct.params)
        assoc = association_test(space, rep.base_trajectories, schedule,
                                 reference=ref_traj)
        report["association"] = assoc
        checks["cauchy"] = assoc["cauchy"]

    gi = g_infinity_test(rep, spread_tol=diag.spread_tol)
    report["uniform_exponents"] = gi
    if diag.require_uniform_exponents:
        checks["uniform_exponents"] = gi["passed"]

    if scenario.regularization.rule == "slow_scale" and \
            scenario.axial.P1 != 0.0:
        sups = [build_fields(scenario, e)["b"].sup_norm for e in schedule]
        ss = slow_scale_check(schedule, sups)
        report["axial_sup_slow_scale"] = {"values": sups, **ss}
        checks["axial_sup_slow_scale"] = ss["passed"]

    report["null_proxy"] = null_test(rep)

    out = report_header(scenario, "sweep")
    out.update({"report": report, "checks": checks,
                "csv": rep.norms_csv(), "passed": all(checks.values())})
    return out


def run_verify(scenario: Scenario, ft_scale: float = 1.0) -> dict:
    """Per-eps energy verification: Gronwall bound, identity residual, and
    the discrete state-growth inequality."""
    space = build_space(scenario.mesh.n_elements, scenario.mesh.q_pts)
    entries = []
    all_pass = True
    for eps in scenario.schedule:
        setup = build_problem(scenario, eps, space=space)
        traj = solve_ivp(space, setup.system, setup.f1, setup.f2, setup.params)
        rep = energy_report(space, setup.system, traj, setup.c_field,
                            setup.b_field, setup.g_field, setup.c0,
                            setup.f1, setup.f2, ft_scale=ft_scale)
        ok, margin = verify_bound(rep)
        growth = state_growth_inequality(space, traj, setup.f1)
        growth_ok = growth <= 1e-8
        entries.append({"eps": eps, "bound_holds": ok, "min_margin": margin,
                        "sup_identity_residual": rep.sup_residual,
                        "state_growth_violation": growth,
                        "state_growth_ok": growth_ok,
                        "report": rep.to_dict()})
        all_pass = all_pass and ok and growth_ok
    out = report_header(scenario, "verify")
    out.update({"ft_scale": ft_scale, "entries": entries, "passed": all_pass})
    return out


def run_bootstrap(scenario: Scenario, eps_values: Optional[List[float]] = None) -> dict:
    """Reconstruction-identity residuals over the schedule (or a subset)."""
    space = build_space(scenario.mesh.n_elements, scenario.mesh.q_pts)
    eps_values = eps_values if eps_values is not None else scenario.schedule
    tol = scenario.diagnostics.bootstrap_tol
    entries = []
    all_pass = True
    for eps in eps_values:
        setup = build_problem(scenario, eps, space=space)
        traj = solve_ivp(space, setup.system, setup.f1, setup.f2, setup.params)
        rep = bootstrap_check(space, traj, setup.c_field, setup.b_field,
                              setup.g_field, eps=eps)
        ok = math.isfinite(rep.relative_residual)
        if tol is not None:
            ok = ok and rep.relative_residual <= tol
        entries.append({"eps": eps, **rep.to_dict(), "passed": ok})
        all_pass = all_pass and ok
    out = report_header(scenario, "bootstrap")
    out.update({"entries": entries, "passed": all_pass})
    return out


MODES = {"solve": run_solve, "sweep": run_sweep, "verify": run_verify,
         "bootstrap": run_bootstrap}


def run_mode(scenario: Scenario, mode: str, **kwargs) -> dict:
    if mode not in MODES:
        raise ScenarioError(f"unknown mode {mode!r}; choose from {sorted(MODES)}")
    return MODES[mode](scenario, **kwargs)
