"""Pseudo-spectral integration of the vorticity equation d_t w + u . grad w = 0.

u = grad-perp G w. Products are formed at the nodes from dealiased inputs and
the result is truncated again by the 2/3 rule, so for band-limited data the
retained modes of u . grad w are alias-free and both <rhs, Gw> and <rhs, w>
vanish up to round-off. Time stepping is classical RK4 on the coefficients.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .spectral import (
    ScalarField,
    SpectralField,
    dealias_mask,
    derivatives_array,
    energy,
    forward,
    forward_array,
    inverse,
    lp_norm,
)


class Blowup(RuntimeError):
    pass


@dataclass(frozen=True)
class FlowState:
    t: float
    omega: SpectralField

    def __post_init__(self):
        if not math.isfinite(self.t) or self.t < 0:
            raise ValueError(f"invalid time {self.t}")


@dataclass(frozen=True)
class StepControl:
    t_end: float
    cfl: float = 0.5
    max_steps: int = 1_000_000
    record_every: int = 1
    max_coeff: float = 1e8

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.max_steps < 1 or self.record_every < 1:
            raise ValueError("max_steps and record_every must be >= 1")


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    final: FlowState | None = None
    steps: int = 0


def _rhs_array(coeffs, grid, mask):
    lam = grid.eigenvalues
    w = np.where(mask, coeffs, 0.0)
    psi_x, psi_y = derivatives_array(w / lam, grid)
    w_x, w_y = derivatives_array(w, grid)
    adv = _kernels.advect(psi_y, -psi_x, w_x, w_y)
    return -np.where(mask, forward_array(adv, grid.h), 0.0)


def rhs(omega):
    """Time derivative -P(u . grad w) of the dealiased vorticity."""
    grid = omega.grid
    return SpectralField(grid, _rhs_array(omega.coeffs, grid, dealias_mask(grid)))


def max_speed(omega):
    grid = omega.grid
    psi_x, psi_y = derivatives_array(np.where(dealias_mask(grid), omega.coeffs, 0.0)
                                     / grid.eigenvalues, grid)
    return float(np.sqrt(np.max(psi_x**2 + psi_y**2)))


def cfl_dt(omega, cfl):
    """cfl * h / max nodal speed, or cfl * h for a fluid at rest."""
    speed = max_speed(omega)
    h = omega.grid.h
    return cfl * h / speed if speed > 0 else cfl * h


def _rk4(coeffs, dt, grid, mask):
    k1 = _rhs_array(coeffs, grid, mask)
    k2 = _rhs_array(coeffs + 0.5 * dt * k1, grid, mask)
    k3 = _rhs_array(coeffs + 0.5 * dt * k2, grid, mask)
    k4 = _rhs_array(coeffs + dt * k3, grid, mask)
    return coeffs + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state, ctrl, dt=None):
    """One RK4 step. Without ``dt`` the CFL step is used, clipped at ctrl.t_end."""
    grid = state.omega.grid
    if dt is None:
        dt = cfl_dt(state.omega, ctrl.cfl)
        remaining = ctrl.t_end - state.t
        if remaining > 0:
            dt = min(dt, remaining)
    new = _rk4(state.omega.coeffs, dt, grid, dealias_mask(grid))
    peak = float(np.max(np.abs(new))) if np.all(np.isfinite(new)) else math.inf
    if peak > ctrl.max_coeff:
        raise Blowup(f"coefficient magnitude {peak:.3e} exceeds {ctrl.max_coeff:.3e} "
                     f"at t={state.t + dt:.6g}")
    return FlowState(state.t + dt, SpectralField(grid, new))


def default_observers(omega0, s_values=(2.0,)):
    """Energy, L^s norms and rearrangement drift relative to the initial field."""
    from .stability import rearrangement_drift

    nodal0 = inverse(omega0)
    obs = {"energy": lambda st: energy(st.omega)}
    for s in s_values:
        obs[f"L{s:g}"] = lambda st, s=s: lp_norm(inverse(st.omega), s)
    obs["rearrangement_drift"] = lambda st: rearrangement_drift(inverse(st.omega), nodal0)
    return obs


def evolve(omega0, ctrl, observers=None, s_values=(2.0,), dealias_initial=True):
    """Integrate from t=0 to ctrl.t_end, recording observers every record_every steps.

    ``omega0`` may be nodal or spectral. The initial field is projected onto the
    dealiased band unless ``dealias_initial`` is False; modes outside the band
    are never updated by the scheme. ``observers`` maps names to callables of a
    FlowState; default diagnostics are used when it is None.
    """
    spec0 = forward(omega0) if isinstance(omega0, ScalarField) else omega0
    grid = spec0.grid
    if dealias_initial:
        spec0 = SpectralField(grid, np.where(dealias_mask(grid), spec0.coeffs, 0.0))
    if observers is None:
        observers = default_observers(spec0, s_values)
    state = FlowState(0.0, spec0)
    traj = Trajectory()

    def record(st):
        row = {"t": st.t}
        for name, fn in observers.items():
            row[name] = fn(st)
        traj.records.append(row)

    record(state)
    steps = 0
    while state.t < ctrl.t_end * (1.0 - 1e-14):
        if steps >= ctrl.max_steps:
            break
        try:
            state = step(state, ctrl)
        except Blowup as exc:
            traj.final, traj.steps = state, steps
            exc.trajectory = traj
            raise
        steps += 1
        if steps % ctrl.record_every == 0 or state.t >= ctrl.t_end * (1.0 - 1e-14):
            record(state)
    traj.final = state
    traj.steps = steps
    return traj
