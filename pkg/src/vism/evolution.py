"""Explicit pseudo-time stepping of the generalised surface-evolution flow.

The interface field u moves by gradient descent of the frozen-potential
energy  gamma * sum |grad u|^q h^3 + sum u^p V h^3  on MIXING nodes only:

    du/dt = |grad u|^(2-q) * gamma q div(|grad u|^(q-2) grad u)
            - |grad u|^(2-q) * p u^(p-1) V

expanded into the anisotropic-diffusion form with all |grad u|^2 denominators
floored by ``grad_floor``.  The driving term carries the minus sign so that
fixed points satisfy the coupled elliptic system; steps that raise the
monitored energy are rejected and retried with a halved time step.
"""

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .energy import frozen_interface_energy, gradient_squared
from .errors import ConfigError, NumericalError
from .grid import ScalarField
from .physics import ionic_B


@dataclass
class EvolutionConfig:
    dt_factor: float = 0.1
    grad_floor: float = 1e-10
    steps_per_coupling: int = 50
    max_total_steps: int = 5000
    convergence_tol: float = 1e-6
    init_mode: str = "ramp"  # or "half": constant 0.5 on the mixing band

    def __post_init__(self):
        if not 0.0 < self.dt_factor < 0.5:
            raise ConfigError(f"dt_factor must lie in (0, 0.5), got {self.dt_factor}")
        if self.grad_floor <= 0:
            raise ConfigError(f"grad_floor must be positive, got {self.grad_floor}")
        if self.steps_per_coupling < 1 or self.max_total_steps < 1:
            raise ConfigError("step counts must be positive")
        if self.init_mode not in ("ramp", "half"):
            raise ConfigError(f"unknown init_mode '{self.init_mode}'")


@dataclass
class InterfaceField:
    """Characteristic field u together with the domain masks that pin it."""

    u: ScalarField
    masks: object

    def copy(self):
        return InterfaceField(self.u.copy(), self.masks)

    def feasibility_report(self):
        """Max violations of the box and pinning constraints (all 0 when feasible)."""
        v = self.u.values
        return {
            "below": float(max(0.0, -v.min())),
            "above": float(max(0.0, v.max() - 1.0)),
            "solute": float(np.abs(v[self.masks.solute] - 1.0).max()) if self.masks.solute.any() else 0.0,
            "solvent": float(np.abs(v[self.masks.solvent]).max()) if self.masks.solvent.any() else 0.0,
        }


@dataclass
class EvolveResult:
    field: InterfaceField
    converged: bool
    steps: int
    max_du: float
    dt: float
    energy_trace: list
    descent_violations: int
    invariant_log: list = None


def driving_potential(psi, vdw, params):
    """V = P_h - rho_s U^vdW + B(psi) + (eps_s - eps_m)/(8 pi k_e) |grad psi|^2.

    ``psi`` may be a PotentialField, a ScalarField, or None; None drops the
    electrostatic terms entirely (the nonpolar warm-start mode).
    """
    v = params.p_h - params.rho_s * vdw.values
    if psi is not None:
        psi_field = psi.psi if hasattr(psi, "psi") else psi
        pv = psi_field.values
        v = v + ionic_B(pv, params.ions)
        g2 = gradient_squared(pv, vdw.grid.h)
        v = v + (params.eps_s - params.eps_m) / (8.0 * np.pi * params.k_e) * g2
    return ScalarField(vdw.grid, v)


def stable_dt(cfg, params, h):
    """Default explicit time step dt_factor * h^2 / (gamma q_k)."""
    scale = params.gamma * params.q_k
    if scale <= 0:
        scale = 1.0
    return cfg.dt_factor * h * h / scale


def enforce_constraints(field):
    """Clamp u to [0,1] and re-pin the pure regions; idempotent."""
    out = field.copy()
    _enforce_inplace(out.u.values, out.masks)
    return out


def _enforce_inplace(values, masks):
    np.clip(values, 0.0, 1.0, out=values)
    values[masks.solute] = 1.0
    values[masks.solvent] = 0.0


def _step_rate(u, V, cfg, params, h, dt):
    """Explicit update dt * rate on the interior lattice (nx-2,ny-2,nz-2).

    The driving term's decrement is capped at the current u per node: the
    drive-only dynamics du/dt = -m p u^(p-1) V cannot cross zero, and the
    raw Euler step overshooting into the clamp makes free-boundary nodes
    flip-flop forever.  The cap preserves the rate field's fixed points.
    """
    q = params.q_k
    p = params.p
    gamma = params.gamma
    c = u[1:-1, 1:-1, 1:-1]
    inv2h = 1.0 / (2.0 * h)
    invh2 = 1.0 / (h * h)

    ux = (u[2:, 1:-1, 1:-1] - u[:-2, 1:-1, 1:-1]) * inv2h
    uy = (u[1:-1, 2:, 1:-1] - u[1:-1, :-2, 1:-1]) * inv2h
    uz = (u[1:-1, 1:-1, 2:] - u[1:-1, 1:-1, :-2]) * inv2h
    uxx = (u[2:, 1:-1, 1:-1] - 2.0 * c + u[:-2, 1:-1, 1:-1]) * invh2
    uyy = (u[1:-1, 2:, 1:-1] - 2.0 * c + u[1:-1, :-2, 1:-1]) * invh2
    uzz = (u[1:-1, 1:-1, 2:] - 2.0 * c + u[1:-1, 1:-1, :-2]) * invh2
    inv4h2 = 0.25 * invh2
    uxy = (u[2:, 2:, 1:-1] + u[:-2, :-2, 1:-1] - u[2:, :-2, 1:-1] - u[:-2, 2:, 1:-1]) * inv4h2
    uxz = (u[2:, 1:-1, 2:] + u[:-2, 1:-1, :-2] - u[2:, 1:-1, :-2] - u[:-2, 1:-1, 2:]) * inv4h2
    uyz = (u[1:-1, 2:, 2:] + u[1:-1, :-2, :-2] - u[1:-1, 2:, :-2] - u[1:-1, :-2, 2:]) * inv4h2

    x2, y2, z2 = ux * ux, uy * uy, uz * uz
    g2 = x2 + y2 + z2
    denom = np.maximum(g2, cfg.grad_floor)

    diffusion = (
        gamma
        * q
        * (
            ((q - 1.0) * x2 + y2 + z2) * uxx
            + (x2 + (q - 1.0) * y2 + z2) * uyy
            + (x2 + y2 + (q - 1.0) * z2) * uzz
        )
        / denom
    )
    diffusion -= (
        gamma
        * (2.0 - q)
        * q
        * 2.0
        * (ux * uy * uxy + ux * uz * uxz + uy * uz * uyz)
        / denom
    )
    mobility = denom ** (0.5 * (2.0 - q))
    cc = np.clip(c, 0.0, 1.0)
    drive = -mobility * p * cc ** (p - 1.0) * V[1:-1, 1:-1, 1:-1]
    return dt * diffusion + np.maximum(dt * drive, -cc)


def evolution_step(field, V, cfg, params, dt=None):
    """One explicit Euler update on MIXING nodes; pure regions untouched."""
    grid = field.u.grid
    if dt is None:
        dt = stable_dt(cfg, params, grid.h)
    u = field.u.values
    du = _step_rate(u, V.values, cfg, params, grid.h, dt)
    mix_inner = field.masks.mixing[1:-1, 1:-1, 1:-1]
    if not np.all(np.isfinite(du[mix_inner])):
        bad_local = np.argwhere(~np.isfinite(du) & mix_inner)
        node = tuple(bad_local[0] + 1)
        raise NumericalError(f"non-finite interface update at node {node}")
    new = field.copy()
    inner = new.u.values[1:-1, 1:-1, 1:-1]
    inner[mix_inner] += du[mix_inner]
    return new


def _run(field, V, cfg, params, max_steps, dt, record_invariants):
    """Shared stepping loop with descent-based step control.

    Every candidate step is clamped/pinned and its frozen-potential energy
    compared against the current one; an increase beyond 1e-8 |E| rejects the
    candidate and halves dt.  Accepted energies therefore form a
    non-increasing sequence up to that slack.  Accepted steps let dt recover
    towards the stability limit, and steadiness is judged by the update rate
    rescaled to the full step so a temporarily shrunken dt cannot fake
    convergence.
    """
    grid = field.u.grid
    h = grid.h
    dt_max = stable_dt(cfg, params, h)
    if dt is None:
        dt = dt_max
    dt = min(dt, dt_max)
    mix = field.masks.mixing
    current = field.copy()
    energy = frozen_interface_energy(current.u.values, V.values, params, h, cfg.grad_floor)
    trace = [energy]
    inv_log = [] if record_invariants else None
    violations = 0
    steps = 0
    max_du = np.inf
    converged = False
    # The clamped explicit flow typically ends in a tiny limit cycle rather
    # than an exact fixed point (the driving term is stiff where u -> 0+), so
    # steadiness is judged on the net descent over a trailing window of
    # accepted steps rather than on pointwise updates alone.
    window = 40
    stall_rate = 1e-9

    while steps < max_steps:
        halvings = 0
        while True:
            candidate = evolution_step(current, V, cfg, params, dt)
            _enforce_inplace(candidate.u.values, candidate.masks)
            e_new = frozen_interface_energy(
                candidate.u.values, V.values, params, h, cfg.grad_floor
            )
            slack = 1e-8 * max(abs(energy), 1e-30)
            if e_new <= energy + slack:
                break
            if halvings >= 30:
                violations += 1  # accepted anyway after exhausting dt halvings
                break
            dt *= 0.5
            halvings += 1
        steps += 1
        max_du = (
            float(np.abs(candidate.u.values[mix] - current.u.values[mix]).max())
            if mix.any()
            else 0.0
        )
        current = candidate
        energy = e_new
        trace.append(energy)
        if record_invariants:
            inv_log.append(current.feasibility_report())
        if max_du < cfg.convergence_tol and dt >= 0.5 * dt_max:
            converged = True
            break
        if len(trace) > window and (
            trace[-window - 1] - trace[-1] <= window * stall_rate * max(abs(energy), 1.0)
        ):
            converged = True
            break
        dt = min(dt * 1.1, dt_max)

    return EvolveResult(
        field=current,
        converged=converged,
        steps=steps,
        max_du=max_du,
        dt=dt,
        energy_trace=trace,
        descent_violations=violations,
        invariant_log=inv_log,
    )


def evolve_to_quasi_steady(field, V, cfg, params, dt=None, record_invariants=False):
    """Step until max|du| per step falls below ``cfg.convergence_tol`` or the
    ``cfg.max_total_steps`` budget runs out (converged flag reports which)."""
    return _run(field, V, cfg, params, cfg.max_total_steps, dt, record_invariants)


def evolve_steps(field, V, cfg, params, n_steps=None, dt=None, record_invariants=False):
    """Run at most ``n_steps`` (default steps_per_coupling); early exit on
    steadiness is allowed."""
    n = cfg.steps_per_coupling if n_steps is None else n_steps
    return _run(field, V, cfg, params, n, dt, record_invariants)
