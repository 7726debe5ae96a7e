"""Lane-Emden ground states on the square and the associated variational constants.

Two independent routes reach the same vorticity profile for p > 1:

* Nehari route: fixed point u <- beta * G(|u|^(p-1) u), with beta putting each
  iterate back on the Nehari manifold. Gives c_p = I(u) directly.
* Ball route: convex maximization of E over the unit L^(1+1/p) ball,
  w <- normalize(|Gw|^(p-1) Gw). Each step maximizes the linearization of E
  over the ball, so E never decreases.

For 0 < p < 1 the plain iteration w <- (Gw)^p converges monotonically to the
unique positive solution; p = 1 is the principal Dirichlet eigenpair.
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .spectral import (
    ScalarField,
    basis_mode,
    dirichlet_integral,
    energy,
    forward,
    forward_array,
    integral_abs_power,
    inverse_array,
    lp_norm,
)

log = logging.getLogger(__name__)

INITIAL_GUESSES = ("principal_eigenfunction", "constant", "custom")


class NonConvergence(RuntimeError):
    def __init__(self, what, iterations, residual):
        super().__init__(f"{what} did not converge in {iterations} iterations "
                         f"(last residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 2000
    seed: int | None = None
    initial: str = "principal_eigenfunction"
    custom: ScalarField | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.initial not in INITIAL_GUESSES:
            raise ValueError(f"initial must be one of {INITIAL_GUESSES}")
        if self.initial == "custom" and self.custom is None:
            raise ValueError("initial='custom' needs a custom field")


@dataclass(frozen=True, eq=False)
class LaneEmdenSolution:
    p: float
    u: ScalarField
    omega: ScalarField
    c_p: float
    mu_p: float
    M_p: float
    residual: float
    nehari_deficit: float
    iterations: int

    @property
    def grid(self):
        return self.u.grid


class Diagnostics(NamedTuple):
    I_value: float
    nehari_deficit: float
    rayleigh_check: float


class Constants(NamedTuple):
    mu_from_cp: float
    mu_from_e1: float
    M_p: float


def _initial_guess(grid, opts):
    if opts.initial == "custom":
        if opts.custom.grid.n != grid.n:
            raise ValueError("custom initial guess is on a different grid")
        vals = np.array(opts.custom.values)
    elif opts.initial == "constant":
        vals = np.ones((grid.n, grid.n))
    else:
        vals = np.array(basis_mode(grid, 1, 1).values)
    if opts.seed is not None:
        rng = np.random.default_rng(opts.seed)
        vals *= 1.0 + 0.1 * rng.uniform(-1.0, 1.0, vals.shape)
    if not np.any(vals):
        raise ValueError("initial guess is identically zero")
    return vals


def _rel_change(new, old):
    return float(np.linalg.norm(new - old) / np.linalg.norm(new))


def steady_residual(omega, p, scale=1.0):
    """Relative L2 residual of omega = scale * g(G omega) with g(t) = |t|^(p-1) t."""
    vals = omega.values
    norm = math.sqrt(integral_abs_power(omega, 2.0))
    if norm == 0.0:
        raise ValueError("steady_residual of the zero field")
    grid = omega.grid
    psi = inverse_array(forward_array(vals, grid.h) / grid.eigenvalues, grid.h)
    diff = vals - scale * _kernels.signed_power(psi, p)
    return float(np.linalg.norm(diff) * grid.h / norm)


def diagnostics(u, p):
    """Functional value, Nehari deficit and the linearized Rayleigh quotient at u."""
    if not np.any(u.values):
        raise ValueError("diagnostics of the zero field")
    grad2 = dirichlet_integral(forward(u))
    powr = integral_abs_power(u, p + 1.0)
    return Diagnostics(
        I_value=0.5 * grad2 - powr / (p + 1.0),
        nehari_deficit=abs(grad2 - powr),
        rayleigh_check=grad2 - p * powr,
    )


def derive_constants(p, c_p, e1):
    """mu_p from the least energy level and from the unit-ball maximum, plus M_p.

    mu_p = (2 c_p (p+1)/(p-1))^(p/(p+1)); 2 M_p = mu_p^(1+1/p); and since E is
    quadratic, M_p = mu_p^2 e1, which gives mu_p = (2 e1)^(-p/(p-1)).
    """
    if not (p > 1 and c_p > 0 and e1 > 0):
        raise ValueError("derive_constants needs p > 1, c_p > 0 and e1 > 0")
    mu_cp = (2.0 * c_p * (p + 1.0) / (p - 1.0)) ** (p / (p + 1.0))
    mu_e1 = (2.0 * e1) ** (-p / (p - 1.0))
    return Constants(mu_cp, mu_e1, 0.5 * mu_cp ** (1.0 + 1.0 / p))


def solve_ground_state(p, grid, opts=SolverOptions()):
    """Positive least-energy solution of -Lap u = |u|^(p-1) u, p > 1."""
    if not p > 1:
        raise ValueError(f"ground state needs p > 1, got {p}")
    h, lam = grid.h, grid.eigenvalues
    u = _initial_guess(grid, opts)
    change = residual = math.inf
    for it in range(1, opts.max_iter + 1):
        a = forward_array(_kernels.signed_power(u, p), h) / lam
        v = inverse_array(a, h)
        grad2 = float(np.sum(lam * a * a))
        powr = _kernels.abs_power_sum(v, p + 1.0) * h * h
        beta = (grad2 / powr) ** (1.0 / (p - 1.0))
        new = beta * v
        change = _rel_change(new, u)
        u = new
        if change <= opts.tol:
            residual = steady_residual(ScalarField(grid, _kernels.signed_power(u, p)), p)
            if residual <= opts.tol:
                break
    else:
        residual = steady_residual(ScalarField(grid, _kernels.signed_power(u, p)), p)
        raise NonConvergence("ground state iteration", opts.max_iter, max(change, residual))
    if u.flat[np.argmax(np.abs(u))] < 0:
        u = -u
    uf = ScalarField(grid, u)
    omega = ScalarField(grid, _kernels.signed_power(u, p))
    diag = diagnostics(uf, p)
    mu_p = lp_norm(omega, 1.0 + 1.0 / p)
    log.debug("ground state p=%g: %d iterations, c_p=%.12g", p, it, diag.I_value)
    return LaneEmdenSolution(
        p=float(p), u=uf, omega=omega, c_p=diag.I_value, mu_p=mu_p,
        M_p=0.5 * mu_p ** (1.0 + 1.0 / p), residual=residual,
        nehari_deficit=diag.nehari_deficit, iterations=it,
    )


def maximize_energy_ball(p, grid, opts=SolverOptions(), history=None):
    """Maximize E over the unit L^(1+1/p) ball; returns (maximizer, max energy).

    ``history``, if given, is a list that receives E at every iterate; a drop
    beyond round-off raises RuntimeError since the ascent is monotone in exact
    arithmetic.
    """
    if not p > 0:
        raise ValueError(f"ball maximization needs p > 0, got {p}")
    q = 1.0 + 1.0 / p
    h, lam = grid.h, grid.eigenvalues

    def normalize(w):
        return w / (_kernels.abs_power_sum(w, q) * h * h) ** (1.0 / q)

    w = normalize(_initial_guess(grid, opts))
    a = forward_array(w, h)
    e_old = 0.5 * float(np.sum(a * a / lam))
    if history is not None:
        history.append(e_old)
    change = math.inf
    for it in range(1, opts.max_iter + 1):
        psi = inverse_array(a / lam, h)
        new = normalize(_kernels.signed_power(psi, p))
        change = _rel_change(new, w)
        w = new
        a = forward_array(w, h)
        e = 0.5 * float(np.sum(a * a / lam))
        if e < e_old * (1.0 - 1e-13):
            raise RuntimeError(f"energy decreased at iteration {it}: {e_old!r} -> {e!r}")
        e_old = e
        if history is not None:
            history.append(e)
        if change <= opts.tol:
            break
    else:
        raise NonConvergence("ball maximization", opts.max_iter, change)
    wstar = ScalarField(grid, w)
    # Lagrange multiplier of the first-order condition w = lam_p (Gw)^p
    psi = inverse_array(a / lam, h)
    peak = np.argmax(np.abs(psi))
    log.debug("ball maximizer p=%g: %d iterations, e1=%.12g, multiplier=%.12g",
              p, it, e_old, w.flat[peak] / _kernels.signed_power(psi.flat[peak:peak + 1], p)[0])
    return wstar, e_old


def solve_sublinear(p, grid, opts=SolverOptions()):
    """Unique positive solution for 0 < p < 1 via the monotone map w <- (Gw)^p."""
    if not 0 < p < 1:
        raise ValueError(f"sublinear solver needs 0 < p < 1, got {p}")
    h, lam = grid.h, grid.eigenvalues
    w = np.abs(_initial_guess(grid, opts))
    residual = math.inf
    for it in range(1, opts.max_iter + 1):
        psi = inverse_array(forward_array(w, h) / lam, h)
        new = np.abs(psi) ** p
        residual = float(np.max(np.abs(new - w)))
        w = new
        if residual <= opts.tol:
            break
    else:
        raise NonConvergence("sublinear iteration", opts.max_iter, residual)
    psi = inverse_array(forward_array(w, h) / lam, h)
    residual = float(np.max(np.abs(w - np.abs(psi) ** p)))
    omega = ScalarField(grid, w)
    mu_p = lp_norm(omega, 1.0 + 1.0 / p)
    return LaneEmdenSolution(
        p=float(p), u=ScalarField(grid, psi), omega=omega, c_p=math.nan,
        mu_p=mu_p, M_p=energy(forward(omega)), residual=residual,
        nehari_deficit=math.nan, iterations=it,
    )


def principal_eigenpair(grid):
    """lambda_1 = 2 and phi_11 = (2/pi) sin x sin y, unit L2 norm on the grid."""
    return 2.0, basis_mode(grid, 1, 1)


def solve_eigen(grid):
    """p = 1 solution as a LaneEmdenSolution: ||u||_2 = 1/lambda_1, ||omega||_2 = 1."""
    lam1, phi = principal_eigenpair(grid)
    omega = phi
    u = ScalarField(grid, phi.values / lam1)
    return LaneEmdenSolution(
        p=1.0, u=u, omega=omega, c_p=math.nan, mu_p=lp_norm(omega, 2.0),
        M_p=energy(forward(omega)), residual=steady_residual(omega, 1.0, scale=lam1),
        nehari_deficit=math.nan, iterations=0,
    )
