"""Time integration of the flow toward blow-up, in curvature and support form.

Curvature form (angle parametrization):  dk/dt = k^2 (Phi(k)_thth + Phi(k))
Support form:                            dh/dt = -Phi((h'' + h)^-1)
with Phi(k) = G(k) * k.

Both are advanced with classical RK4 under an adaptive parabolic CFL bound;
steps that lose positivity anywhere are rejected and retried smaller.  The
equation stiffens as curvature blows up, so runs stop at an area floor (or a
curvature cap) and report a bracket for the blow-up time instead of trying
to cross it.
"""

from __future__ import annotations

import dataclasses
import math
from typing import List, Optional, Union

import numpy as np

from . import geometry
from .errors import (
    ConvexityLossError,
    HypothesisViolationError,
    InsufficientDataError,
    NotClosedError,
    StepRejected,
)
from .geometry import CurvatureProfile, SupportProfile
from .speed_law import check_hypotheses

STOP_AREA_FLOOR = "area-floor"
STOP_CURVATURE_CAP = "curvature-cap"
STOP_STEP_LIMIT = "step-limit"
STOP_CONVEXITY_LOSS = "convexity-loss"
STOP_ANALYTIC = "analytic"  # used by exact reference trajectories only

FORMULATIONS = ("curvature", "support", "both")

# Spectral radius of the discrete second derivative, normalized to the
# Fourier value pi^2/dtheta^2; the CFL bound then gives the same
# lambda_max * dt = c_cfl * pi^2 / 2 for every scheme (RK4 wants c <~ 0.56).
_SCHEME_RADIUS_FACTOR = {"fourier": 1.0, "fd4": 16.0 / (3.0 * math.pi ** 2)}


@dataclasses.dataclass(frozen=True)
class FlowConfig:
    """Run parameters; the grid comes from the initial profile.

    ``area_floor`` is the fraction of the initial area at which the run
    stops; ``k_cap`` is an absolute curvature cap (default 1e6 times the
    initial maximum).  ``snapshot_every`` counts accepted steps.
    """

    law: object
    initial: Union[CurvatureProfile, SupportProfile]
    c_cfl: float = 0.4
    area_floor: float = 1e-3
    k_cap: Optional[float] = None
    max_steps: int = 100_000_000
    snapshot_every: int = 500
    formulation: str = "curvature"
    spatial_scheme: str = "fourier"
    dealias: bool = False

    def __post_init__(self):
        if not (0.0 < self.c_cfl <= 1.0):
            raise ValueError(f"c_cfl must be in (0, 1], got {self.c_cfl}")
        if not (0.0 < self.area_floor < 1.0):
            raise ValueError(f"area_floor must be in (0, 1), got {self.area_floor}")
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}")
        if self.spatial_scheme not in _SCHEME_RADIUS_FACTOR:
            raise ValueError(f"spatial_scheme must be one of "
                             f"{tuple(_SCHEME_RADIUS_FACTOR)}")
        if self.max_steps < 1 or self.snapshot_every < 1:
            raise ValueError("max_steps and snapshot_every must be >= 1")

    @property
    def n(self):
        return self.initial.grid.n


@dataclasses.dataclass(frozen=True)
class BlowUpEstimate:
    """Bracket [omega_lo, omega_hi] for the blow-up time, with point estimate."""

    omega_lo: float
    omega_mid: float
    omega_hi: float
    method: str


@dataclasses.dataclass(frozen=True)
class Snapshot:
    t: float
    curvature: CurvatureProfile
    support: SupportProfile
    summary: geometry.GeometrySummary


@dataclasses.dataclass
class Trajectory:
    """Ordered snapshots of one run plus its metadata."""

    snapshots: List[Snapshot]
    stop_reason: str
    config: FlowConfig
    hypothesis_report: object
    roundness_expected: bool
    omega_estimate: Optional[BlowUpEstimate] = None
    step_count: int = 0
    dt_min: float = float("inf")
    dt_max: float = 0.0
    form_disagreement: Optional[List[float]] = None

    def times(self):
        return [s.t for s in self.snapshots]

    def summaries(self):
        return [s.summary for s in self.snapshots]

    @property
    def last(self):
        return self.snapshots[-1]


# ---------------------------------------------------------------------------
# right-hand sides
# ---------------------------------------------------------------------------

def _rhs_k_arrays(k, grid, law, scheme, dealias):
    # positivity guard is NaN-safe; law.g needs no further validation here
    if not np.min(k) > 0.0:
        raise StepRejected("curvature lost positivity in a stage")
    phi = law.g(k) * k
    if dealias:
        phi = geometry.dealias_two_thirds(phi, grid)
    return k * k * (geometry.second_derivative(phi, grid, scheme) + phi)


def _rhs_h_arrays(h, grid, law, scheme, dealias):
    rho = geometry.second_derivative(h, grid, scheme) + h
    if not np.min(rho) > 0.0:
        raise StepRejected("support profile lost convexity in a stage")
    k = 1.0 / rho
    phi = law.g(k) * k
    if dealias:
        phi = geometry.dealias_two_thirds(phi, grid)
    return -phi


def rhs_curvature(kp, law, scheme="fourier", dealias=False):
    """dk/dt = k^2 (Phi'' + Phi) evaluated on the grid."""
    return _rhs_k_arrays(kp.k, kp.grid, law, scheme, dealias)


def rhs_support(sp, law, scheme="fourier", dealias=False):
    """dh/dt = -Phi(k) with k read off the support profile."""
    rho = geometry.curvature_radius(sp, scheme)  # names the violating node
    phi = law.phi(1.0 / rho)
    if dealias:
        phi = geometry.dealias_two_thirds(phi, sp.grid)
    return -phi


def stable_dt(profile, law, c_cfl, scheme="fourier"):
    """Parabolic CFL bound c_cfl * dtheta^2 / (2 max(k^2 Phi'(k)) * d_scheme)."""
    if isinstance(profile, CurvatureProfile):
        k = profile.k
        grid = profile.grid
    else:
        grid = profile.grid
        k = 1.0 / geometry.curvature_radius(profile, scheme)
    diffusion = float(np.max(k * k * law.phi_prime(k)))
    factor = _SCHEME_RADIUS_FACTOR[scheme]
    return c_cfl * grid.dtheta ** 2 / (2.0 * diffusion * factor)


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

def _rk4(y, dt, f):
    k1 = f(y)
    k2 = f(y + (0.5 * dt) * k1)
    k3 = f(y + (0.5 * dt) * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state, law, dt, scheme="fourier", dealias=False):
    """One classical RK4 step; raises StepRejected instead of mutating anything.

    A step is rejected when any stage, or the result, produces k <= 0
    (curvature form) or h'' + h <= 0 (support form).
    """
    grid = state.grid
    if isinstance(state, CurvatureProfile):
        new_k = _rk4(state.k, dt, lambda y: _rhs_k_arrays(y, grid, law, scheme, dealias))
        if not np.min(new_k) > 0.0:
            raise StepRejected("curvature lost positivity over a full step")
        return CurvatureProfile(grid, new_k, state.t + dt)
    if isinstance(state, SupportProfile):
        new_h = _rk4(state.h, dt, lambda y: _rhs_h_arrays(y, grid, law, scheme, dealias))
        rho = geometry.second_derivative(new_h, grid, scheme) + new_h
        if not np.min(rho) > 0.0:
            raise StepRejected("support profile lost convexity over a full step")
        return SupportProfile(grid, new_h, state.t + dt)
    raise TypeError(f"cannot step a {type(state)}")


# ---------------------------------------------------------------------------
# running to the area floor
# ---------------------------------------------------------------------------

def _support_area_from_k(k, grid):
    """Area of the closed curve with curvature k, without leaving Fourier space.

    With h the spectral solution of h'' + h = 1/k (kernel modes dropped) and
    the solve self-adjoint, A = (1/2) oint h (h''+h) dtheta reduces to a
    weighted sum of |rho_hat|^2 over the Helmholtz symbol.
    """
    n = grid.n
    fh = np.fft.rfft(1.0 / k)
    fh[1] = 0.0
    helm = geometry._fourier_tables(n)[3]
    power = (fh.real * fh.real + fh.imag * fh.imag) / helm
    total = power[0] + 2.0 * float(np.sum(power[1:-1])) + power[-1]
    return 0.5 * grid.dtheta * total / n


def _area_of_support_arrays(h, grid, rho=None):
    if rho is None:
        rho = geometry.second_derivative(h, grid) + h
    return 0.5 * float(h @ rho) * grid.dtheta


class _Clock:
    """Compensated (Kahan) accumulation of the run time."""

    def __init__(self):
        self.t = 0.0
        self._c = 0.0

    def advance(self, dt):
        y = dt - self._c
        s = self.t + y
        self._c = (s - self.t) - y
        self.t = s


def run(config):
    """Advance the flow until a stop criterion fires and return the trajectory.

    Snapshots (with full geometry summaries) are recorded every
    ``snapshot_every`` accepted steps and at the final state.  Stop reasons,
    in tie-break order: area-floor, curvature-cap, step-limit; loss of
    convexity ends the run with reason "convexity-loss" rather than raising.
    With formulation="both" the two forms advance with shared time steps and
    their sup-norm curvature disagreement is recorded per snapshot.
    """
    law = config.law
    grid = config.initial.grid
    scheme = config.spatial_scheme
    dealias = config.dealias

    # initial data in the forms this run evolves
    if isinstance(config.initial, CurvatureProfile):
        kp0 = config.initial
        sp0 = geometry.support_from_curvature(kp0)
    else:
        sp0 = config.initial
        kp0 = geometry.k_from_support(sp0, scheme)
    k_max0 = float(np.max(kp0.k))
    k_min0 = float(np.min(kp0.k))
    k_cap = config.k_cap if config.k_cap is not None else 1e6 * k_max0
    if not k_cap > k_max0:
        raise ValueError(f"k_cap {k_cap} must exceed the initial k_max {k_max0}")

    # validate the law on the curvature range this run can visit
    hyp = check_hypotheses(law, k_min0 / 2.0, k_cap, n_probes=64)
    probes = np.geomspace(k_min0 / 2.0, k_cap, 64)
    if np.min(law.phi_prime(probes)) <= 0.0:
        raise HypothesisViolationError(
            f"{law.label}: Phi'(k) <= 0 on the working range; the flow is not "
            "parabolic and cannot be integrated")
    roundness = hyp.all_ok

    evolve_k = config.formulation in ("curvature", "both")
    evolve_h = config.formulation in ("support", "both")
    k = kp0.k.copy() if evolve_k else None
    h = sp0.h.copy() if evolve_h else None

    clock = _Clock()
    snapshots = []
    disagreement = [] if config.formulation == "both" else None

    def take_snapshot():
        t = clock.t
        if evolve_k:
            kp = CurvatureProfile(grid, k, t)
            sp = SupportProfile(grid, h, t) if evolve_h else geometry.support_from_curvature(kp)
            summary = geometry.summarize(kp, scheme)
        else:
            sp = SupportProfile(grid, h, t)
            kp = geometry.k_from_support(sp, scheme)
            summary = geometry.summarize(sp, scheme)
        snapshots.append(Snapshot(t=t, curvature=kp, support=sp, summary=summary))
        if disagreement is not None:
            rho = geometry.second_derivative(h, grid, scheme) + h
            disagreement.append(float(np.max(np.abs(k - 1.0 / rho))))

    take_snapshot()
    area0 = snapshots[0].summary.area
    traj = Trajectory(snapshots=snapshots, stop_reason=STOP_STEP_LIMIT,
                      config=config, hypothesis_report=hyp,
                      roundness_expected=roundness,
                      form_disagreement=disagreement)

    cfl_base = config.c_cfl * grid.dtheta ** 2 / (2.0 * _SCHEME_RADIUS_FACTOR[scheme])
    rho_h = (geometry.second_derivative(h, grid, scheme) + h) if evolve_h else None
    first_dt = None
    steps = 0
    while True:
        # adaptive CFL bound over the active forms
        dts = []
        if evolve_k:
            dts.append(cfl_base / float(np.max(k * k * law.phi_prime(k))))
        if evolve_h:
            kk = 1.0 / rho_h
            dts.append(cfl_base / float(np.max(kk * kk * law.phi_prime(kk))))
        dt = min(dts)
        if first_dt is None:
            first_dt = dt
        dt_floor = 1e-14 * max(clock.t, first_dt)

        # attempt the step, halving on rejection
        new_k = new_h = new_rho = None
        while True:
            try:
                if evolve_k:
                    new_k = _rk4(k, dt, lambda y: _rhs_k_arrays(y, grid, law, scheme, dealias))
                    if not np.min(new_k) > 0.0:
                        raise StepRejected("curvature lost positivity over a full step")
                if evolve_h:
                    new_h = _rk4(h, dt, lambda y: _rhs_h_arrays(y, grid, law, scheme, dealias))
                    new_rho = geometry.second_derivative(new_h, grid, scheme) + new_h
                    if not np.min(new_rho) > 0.0:
                        raise StepRejected("support lost convexity over a full step")
                break
            except StepRejected:
                dt *= 0.5
                new_k = new_h = new_rho = None
                if dt < dt_floor:
                    break
        if (evolve_k and new_k is None) or (evolve_h and new_h is None):
            # repeated rejection pushed dt below the floor
            traj.stop_reason = STOP_CONVEXITY_LOSS
            break

        if evolve_k:
            k = new_k
        if evolve_h:
            h, rho_h = new_h, new_rho
        clock.advance(dt)
        steps += 1
        traj.dt_min = min(traj.dt_min, dt)
        traj.dt_max = max(traj.dt_max, dt)

        # stop checks read the curvature form when both evolve (tie: area wins)
        if evolve_k:
            area = _support_area_from_k(k, grid)
            k_now = float(np.max(k))
        else:
            area = _area_of_support_arrays(h, grid, rho_h)
            k_now = float(1.0 / np.min(rho_h))
        stop = None
        if area <= config.area_floor * area0:
            stop = STOP_AREA_FLOOR
        elif k_now >= k_cap:
            stop = STOP_CURVATURE_CAP
        elif steps >= config.max_steps:
            stop = STOP_STEP_LIMIT

        if stop is not None:
            traj.stop_reason = stop
            break
        if steps % config.snapshot_every == 0:
            try:
                take_snapshot()
            except (ConvexityLossError, NotClosedError):
                traj.stop_reason = STOP_CONVEXITY_LOSS
                break

    traj.step_count = steps
    if traj.dt_min == float("inf"):
        traj.dt_min = 0.0
    if snapshots[-1].t < clock.t:
        try:
            take_snapshot()
        except (ConvexityLossError, NotClosedError):
            pass  # keep the last good snapshot

    last = snapshots[-1].summary
    if last.k_max >= 10.0 * k_max0:
        traj.omega_estimate = estimate_blowup(traj, law)
    return traj


# ---------------------------------------------------------------------------
# blow-up bracketing and containment
# ---------------------------------------------------------------------------

def estimate_blowup(traj, law):
    """Bracket the blow-up time from the final snapshot.

    omega - t <= tail(k_max(t)) and omega - t >= tail(k_min(t)), with
    tail(k) = int_k^inf dx/(G(x) x^3); the bracket collapses for circles.

    The raw bounds are rigorous for the exact flow but the recorded state
    carries numerical error, so the bracket is widened by an allowance for
    the integrator's accumulated bias, O((lambda dt)^4) per unit of
    log-curvature growth with lambda the smooth-mode linearization rate,
    plus a 1e-11 relative floor for floating-point accumulation in t.
    """
    last = traj.snapshots[-1]
    k_max0 = traj.snapshots[0].summary.k_max
    if last.summary.k_max < 10.0 * k_max0:
        raise InsufficientDataError(
            f"asymptotic regime not reached: k_max grew only "
            f"{last.summary.k_max / k_max0:.2f}x (need 10x)")
    t_last = last.t
    lo_raw = t_last + law.tail_mass(last.summary.k_max)
    hi_raw = t_last + law.tail_mass(last.summary.k_min)

    k_last = last.summary.k_max
    lam_dt = (traj.config.c_cfl * last.curvature.grid.dtheta ** 2 / 2.0
              * (1.0 + 2.0 * law.phi(k_last) / (k_last * law.phi_prime(k_last))))
    bias = 2.0 * lam_dt ** 4 * math.log(max(k_last / k_max0, math.e)) \
        * (hi_raw - t_last)
    pad = max(1e-11 * max(abs(hi_raw), abs(t_last)), bias)
    lo = max(lo_raw - pad, t_last + 0.5 * (lo_raw - t_last))
    hi = hi_raw + pad
    method = "closed-form" if law.tail_integral is not None else "quadrature"
    return BlowUpEstimate(omega_lo=lo, omega_mid=0.5 * (lo + hi), omega_hi=hi,
                          method=method)


@dataclasses.dataclass
class ContainmentReport:
    """Per-snapshot minimum support gap of a co-evolved outer/inner pair."""

    times: List[float]
    min_gap: List[float]
    ok: List[bool]
    tol_contain: float
    stop_reason: str

    @property
    def all_ok(self):
        return all(self.ok)


def _steiner_centered(sp):
    sx, sy = geometry.steiner_point(sp)
    th = sp.grid.theta
    return SupportProfile(sp.grid, sp.h - sx * np.cos(th) - sy * np.sin(th), sp.t)


def containment_run(outer, inner, law, config):
    """Co-evolve two support profiles with shared steps and track their gap.

    Both curves are Steiner-centered first; the pointwise ordering
    h_outer >= h_inner at t = 0 (set containment with a common origin) is a
    precondition.  The run ends when either curve reaches the configured
    area floor (the inner one blows up first for nested initial data); the
    containment contract is min(h_outer - h_inner) >= -1e-8 * L_outer(0).
    """
    if outer.grid.n != inner.grid.n:
        raise ValueError("outer and inner profiles must share a grid")
    grid = outer.grid
    scheme = config.spatial_scheme
    outer = _steiner_centered(outer)
    inner = _steiner_centered(inner)
    gap0 = outer.h - inner.h
    length0 = geometry.periodic_integral(
        geometry.curvature_radius(outer, scheme), grid)
    tol = 1e-8 * length0
    if np.min(gap0) < -tol:
        raise ValueError(
            f"outer profile does not contain inner at t=0 "
            f"(min gap {np.min(gap0):.3e} after Steiner centering)")

    h_out = outer.h.copy()
    h_in = inner.h.copy()
    areas0 = (_area_of_support_arrays(h_out, grid), _area_of_support_arrays(h_in, grid))
    clock = _Clock()
    times = [0.0]
    gaps = [float(np.min(gap0))]
    stop_reason = STOP_STEP_LIMIT
    first_dt = None
    steps = 0
    while steps < config.max_steps:
        try:
            dts = []
            for arr in (h_out, h_in):
                rho = geometry.second_derivative(arr, grid, scheme) + arr
                if not np.min(rho) > 0.0:
                    raise StepRejected("containment state lost convexity")
                kk = 1.0 / rho
                diffusion = float(np.max(kk * kk * law.phi_prime(kk)))
                dts.append(config.c_cfl * grid.dtheta ** 2
                           / (2.0 * diffusion * _SCHEME_RADIUS_FACTOR[scheme]))
            dt = min(dts)
        except StepRejected:
            stop_reason = STOP_CONVEXITY_LOSS
            break
        if first_dt is None:
            first_dt = dt
        dt_floor = 1e-14 * max(clock.t, first_dt)

        while True:
            try:
                new_out = _rk4(h_out, dt, lambda y: _rhs_h_arrays(y, grid, law, scheme, False))
                new_in = _rk4(h_in, dt, lambda y: _rhs_h_arrays(y, grid, law, scheme, False))
                for arr in (new_out, new_in):
                    rho = geometry.second_derivative(arr, grid, scheme) + arr
                    if not np.min(rho) > 0.0:
                        raise StepRejected("containment step lost convexity")
                break
            except StepRejected:
                dt *= 0.5
                if dt < dt_floor:
                    new_out = None
                    break
        if new_out is None:
            stop_reason = STOP_CONVEXITY_LOSS
            break

        h_out, h_in = new_out, new_in
        clock.advance(dt)
        steps += 1

        floor_hit = any(
            _area_of_support_arrays(arr, grid) <= config.area_floor * a0
            for arr, a0 in zip((h_out, h_in), areas0))
        if steps % config.snapshot_every == 0 or floor_hit:
            times.append(clock.t)
            gaps.append(float(np.min(h_out - h_in)))
        if floor_hit:
            stop_reason = STOP_AREA_FLOOR
            break

    ok = [g >= -tol for g in gaps]
    return ContainmentReport(times=times, min_gap=gaps, ok=ok,
                             tol_contain=tol, stop_reason=stop_reason)
