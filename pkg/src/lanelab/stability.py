"""Finite-horizon orbital-stability experiments around Lane-Emden vortices.

On the square the orbit of the ground-state vorticity is {w, -w}, so every
orbit distance is a minimum over two candidates. Experiments perturb the
steady state, evolve it, and log orbit distances next to the drift of every
quantity the Euler flow should conserve. A sampled experiment can corroborate
stability but never establish it; reports carry that caveat in their header.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .euler import Blowup, StepControl, evolve
from .spectral import (
    ScalarField,
    SpectralField,
    basis_mode,
    dealias,
    dealias_mask,
    derivatives_array,
    energy,
    energy_norm,
    forward,
    forward_array,
    inverse,
    inverse_array,
    lp_norm,
)

PERTURBATION_KINDS = ("multiplicative", "random_smooth", "area_preserving")
LIMITATION = ("sampled perturbations over a finite horizon can corroborate "
              "orbital stability but cannot establish it")

# drift tolerances from the conservation study in tests/test_euler.py
ENERGY_DRIFT_TOL = 1e-6
LS_DRIFT_TOL = 1e-4

RANDOM_SMOOTH_KMAX = 6


@dataclass(frozen=True)
class Perturbation:
    kind: str
    delta: float
    norm_s: float = 2.0
    seed: int = 0
    constrain_to_Sp: bool = False

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise ValueError(f"kind must be one of {PERTURBATION_KINDS}, got {self.kind!r}")
        if not self.delta > 0:
            raise ValueError("perturbation size delta must be positive")
        if not self.norm_s >= 1:
            raise ValueError("norm_s must be >= 1")


@dataclass(frozen=True, eq=False)
class OrbitSet:
    representative: ScalarField
    closed_under_sign: bool = True

    def __post_init__(self):
        if not np.any(self.representative.values):
            raise ValueError("orbit representative must be nonzero")

    def members(self):
        rep = self.representative
        return (rep, -rep) if self.closed_under_sign else (rep,)


@dataclass
class StabilityReport:
    times: list = field(default_factory=list)
    dist_Ls: dict = field(default_factory=dict)
    dist_E: list = field(default_factory=list)
    energy_drift: list = field(default_factory=list)
    ls_norm_drift: dict = field(default_factory=dict)
    rearrangement_drift: list = field(default_factory=list)
    delta: float = 0.0
    config: dict = field(default_factory=dict)
    complete: bool = True
    valid: bool = True

    def columns(self):
        """Ordered (name, series) pairs, the CSV column layout."""
        cols = [("t", self.times)]
        cols += [(f"dist_L{s:g}", v) for s, v in self.dist_Ls.items()]
        cols.append(("dist_E", self.dist_E))
        cols.append(("energy_drift", self.energy_drift))
        cols += [(f"ls_drift_L{s:g}", v) for s, v in self.ls_norm_drift.items()]
        cols.append(("rearrangement_drift", self.rearrangement_drift))
        return cols

    def sup(self, which="E"):
        series = self.dist_E if which == "E" else self.dist_Ls[float(which)]
        return max(series) if series else math.nan


def _norm(f, which):
    if which == "E":
        return energy_norm(forward(f))
    s = float(which)
    if not s >= 1:
        raise ValueError(f"L^s distance needs s >= 1, got {s}")
    return lp_norm(f, s)


def orbit_distance(omega, orbit, which=2.0):
    """min over the orbit of ||omega - w|| in L^s (``which`` = s) or energy norm ("E")."""
    return min(_norm(omega - w, which) for w in orbit.members())


def distribution_function(omega, levels):
    """Quadrature measure h^2 * #{nodes with omega > a} for each level a."""
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    if not np.all(np.isfinite(levels)):
        raise ValueError("levels must be finite")
    counts = _kernels.count_above(omega.values, levels)
    return counts * omega.grid.h**2


def rearrangement_drift(omega_t, omega_0):
    """h^2-weighted L1 distance between the sorted nodal values of two fields."""
    if omega_t.grid.n != omega_0.grid.n:
        raise ValueError("rearrangement_drift: grid mismatch")
    return _kernels.sorted_l1(omega_t.values, omega_0.values) * omega_t.grid.h**2


def eddy_time(omega):
    """1 / max|omega|: the turnover time used as the horizon unit."""
    peak = float(np.max(np.abs(omega.values)))
    if peak == 0:
        raise ValueError("eddy time of the zero field")
    return 1.0 / peak


def _multiplier_field(grid):
    x, y = grid.mesh()
    return np.cos(x) * np.cos(2.0 * y)


def _transport_stream(grid):
    # two-cell stream field, scaled to unit peak speed
    psi = forward(basis_mode(grid, 1, 2)) + forward(basis_mode(grid, 2, 1)) * 0.5
    psi_x, psi_y = derivatives_array(psi.coeffs, grid)
    return psi * (1.0 / np.sqrt(np.max(psi_x**2 + psi_y**2)))


def _transport(base, tau, steps_per_unit=None):
    """Advect ``base`` by a fixed divergence-free flow for pseudo-time ``tau``."""
    grid = base.grid
    mask = dealias_mask(grid)
    psi = _transport_stream(grid)
    psi_x, psi_y = derivatives_array(np.where(mask, psi.coeffs, 0.0), grid)
    u, v = psi_y, -psi_x
    if steps_per_unit is None:
        steps_per_unit = 2.0 / grid.h  # dt = h/2 at unit speed
    nsteps = max(1, math.ceil(tau * steps_per_unit))
    dt = tau / nsteps

    def f(c):
        wx, wy = derivatives_array(c, grid)
        return -np.where(mask, forward_array(_kernels.advect(u, v, wx, wy), grid.h), 0.0)

    full = forward_array(base.values, grid.h)
    c = np.where(mask, full, 0.0)
    for _ in range(nsteps):
        k1 = f(c)
        k2 = f(c + 0.5 * dt * k1)
        k3 = f(c + 0.5 * dt * k2)
        k4 = f(c + dt * k3)
        c = c + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    # modes above the cutoff are carried along unchanged
    return ScalarField(grid, inverse_array(np.where(mask, c, full), grid.h))


def perturb(base, pert, mu_p=None, p=None):
    """Perturbed initial vorticity around ``base``.

    multiplicative: (1 + delta*g) base with g = cos x cos 2y.
    random_smooth: base plus random modes up to index 6, scaled so the
    L^norm_s size of the change is exactly delta.
    area_preserving: base transported for pseudo-time delta by a fixed
    unit-speed cellular flow (an approximate rearrangement).
    With constrain_to_Sp the result is pulled back onto the L^(1+1/p) ball
    of radius mu_p when it lands outside.
    """
    if not np.any(base.values):
        raise ValueError("cannot perturb the zero field")
    base_size = lp_norm(base, pert.norm_s)
    if pert.delta > base_size:
        raise ValueError(f"delta={pert.delta} exceeds the base size {base_size:.6g}")
    grid = base.grid
    if pert.kind == "multiplicative":
        vals = (1.0 + pert.delta * _multiplier_field(grid)) * base.values
        result = ScalarField(grid, vals)
    elif pert.kind == "random_smooth":
        rng = np.random.default_rng(pert.seed)
        k = RANDOM_SMOOTH_KMAX
        coeffs = np.zeros((grid.n, grid.n))
        coeffs[:k, :k] = rng.standard_normal((k, k)) / grid.eigenvalues[:k, :k]
        bump = inverse(SpectralField(grid, coeffs))
        bump = bump * (pert.delta / lp_norm(bump, pert.norm_s))
        result = base + bump
    else:
        result = _transport(base, pert.delta)
    if pert.constrain_to_Sp:
        if mu_p is None or p is None:
            raise ValueError("constrain_to_Sp needs mu_p and p")
        q = 1.0 + 1.0 / p
        size = lp_norm(result, q)
        if size > mu_p:
            result = result * (mu_p / size)
    return result


def run_experiment(solution, pert, ctrl, norms=(2.0,), sign=1, config=None):
    """Perturb sign * solution.omega, evolve, and log orbit distances and drifts.

    ``pert=None`` runs the unperturbed steady state. ``norms`` lists the s
    values for L^s orbit distances and drift tracking; the energy-norm
    distance is always recorded.
    """
    grid = solution.grid
    norms = tuple(float(s) for s in norms)
    rep = inverse(dealias(forward(solution.omega)))
    orbit = OrbitSet(rep)
    base = rep if sign > 0 else -rep
    if pert is None:
        omega0, delta = base, 0.0
    else:
        omega0 = perturb(base, pert, mu_p=solution.mu_p, p=solution.p)
        delta = pert.delta

    spec0 = dealias(forward(omega0))
    nodal0 = inverse(spec0)
    e0 = energy(spec0)
    ls0 = {s: lp_norm(nodal0, s) for s in norms}

    def observe(st):
        w = inverse(st.omega)
        row = {f"dist_L{s:g}": orbit_distance(w, orbit, s) for s in norms}
        row["dist_E"] = orbit_distance(w, orbit, "E")
        row["energy"] = energy(st.omega)
        for s in norms:
            row[f"L{s:g}"] = lp_norm(w, s)
        row["rearrangement_drift"] = rearrangement_drift(w, nodal0)
        return row

    complete = True
    try:
        rows = evolve(spec0, ctrl, observers={"row": observe}, dealias_initial=False).records
    except Blowup as exc:
        complete = False
        rows = exc.trajectory.records

    report = StabilityReport(delta=delta, complete=complete)
    report.dist_Ls = {s: [] for s in norms}
    report.ls_norm_drift = {s: [] for s in norms}
    for rec in rows:
        row = rec["row"]
        report.times.append(rec["t"])
        for s in norms:
            report.dist_Ls[s].append(row[f"dist_L{s:g}"])
            report.ls_norm_drift[s].append((row[f"L{s:g}"] - ls0[s]) / ls0[s])
        report.dist_E.append(row["dist_E"])
        report.energy_drift.append((row["energy"] - e0) / e0)
        report.rearrangement_drift.append(row["rearrangement_drift"])

    worst_e = max((abs(x) for x in report.energy_drift), default=0.0)
    worst_s = max((abs(x) for v in report.ls_norm_drift.values() for x in v), default=0.0)
    report.valid = complete and worst_e <= ENERGY_DRIFT_TOL and worst_s <= LS_DRIFT_TOL
    report.config = {
        "p": solution.p,
        "n": grid.n,
        "sign": 1 if sign > 0 else -1,
        "perturbation": None if pert is None else {
            "kind": pert.kind, "delta": pert.delta, "norm_s": pert.norm_s,
            "seed": pert.seed, "constrain_to_Sp": pert.constrain_to_Sp,
        },
        "cfl": ctrl.cfl,
        "t_end": ctrl.t_end,
        "record_every": ctrl.record_every,
        "eddy_time": eddy_time(solution.omega),
        "norms": list(norms),
        "mu_p": solution.mu_p,
        "max_abs_energy_drift": worst_e,
        "max_abs_ls_drift": worst_s,
        "valid": report.valid,
        "complete": complete,
        "limitation": LIMITATION,
    }
    if config:
        report.config.update(config)
    return report


def stability_control(solution, horizon_eddies=10.0, cfl=0.5, record_every=1):
    """StepControl whose horizon is a number of eddy turnover times."""
    return StepControl(t_end=horizon_eddies * eddy_time(solution.omega), cfl=cfl,
                       record_every=record_every)
