"""Self-consistency driver: alternate surface evolution and PB solves with
under-relaxation until the (u, psi) pair is stationary.

One outer cycle: solve the perturbed PB equation with the previous potential
as initial guess, relax psi, evolve u for a bounded number of steps under the
frozen driving potential, relax u, re-pin, and evaluate the total energy.
Convergence is declared on two consecutive outer iterations with relative
energy change below ``outer_tol`` and a small interface update.
"""

import logging
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .constants import DEFAULT_PAD
from .energy import total_energy
from .errors import ConfigError
from .evolution import (
    EvolutionConfig,
    InterfaceField,
    driving_potential,
    enforce_constraints,
    evolve_steps,
    evolve_to_quasi_steady,
    stable_dt,
)
from .grid import ScalarField, build_grid, classify_domains, interface_ramp
from .pb import boundary_field, solve_ppb, spread_charges
from .physics import vdw_field

log = logging.getLogger(__name__)


@dataclass
class CouplingConfig:
    alpha: float = 0.5          # relaxation weight for u
    alpha_prime: float = 0.5    # relaxation weight for psi
    outer_tol: float = 1e-5     # relative total-energy change threshold
    max_outer: int = 200
    warm_start_nonpolar: bool = True
    du_guard: float = 1e-2      # secondary stationarity guard on max|du|
    record_invariants: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0 or not 0.0 < self.alpha_prime < 1.0:
            raise ConfigError("relaxation weights must lie in (0, 1)")
        if self.max_outer < 1:
            raise ConfigError("max_outer must be positive")


@dataclass
class TraceRow:
    outer_iter: int
    total_energy: float
    max_du: float
    pb_residual: float


@dataclass
class Solution:
    """Converged (or best-effort) state of one molecule's solve."""

    u: InterfaceField
    psi: object            # PotentialField or None for nonpolar solves
    report: object         # EnergyReport
    trace: list
    converged: bool
    grid: object = None
    masks: object = None
    charges: object = None
    vdw: object = None
    invariant_log: list = dataclass_field(default_factory=list)


def _initial_interface(molecule, probe_radius, grid, masks, mode):
    if mode == "half":
        u = np.zeros(grid.dims)
        u[masks.solute] = 1.0
        u[masks.mixing] = 0.5
        return InterfaceField(ScalarField(grid, u), masks)
    return InterfaceField(interface_ramp(molecule, probe_radius, grid, masks), masks)


def self_consistent_solve(
    molecule,
    params,
    coupling=None,
    evolution=None,
    h=0.5,
    pad=DEFAULT_PAD,
    probe_radius=None,
    grid=None,
    nonpolar_only=False,
    initial_state=None,
):
    """Run the full coupled solve for one molecule.

    ``nonpolar_only`` skips the PB equation entirely (driving potential
    P_h - rho_s U_vdw) and returns after one quasi-steady evolution.
    ``initial_state`` may carry a previous (u, psi) pair to restart from.
    """
    from .constants import DEFAULT_PROBE_RADIUS

    coupling = coupling or CouplingConfig()
    evolution = evolution or EvolutionConfig()
    probe_radius = DEFAULT_PROBE_RADIUS if probe_radius is None else probe_radius

    if grid is None:
        grid = build_grid(molecule, h, pad, probe_radius)
    masks = classify_domains(molecule, probe_radius, grid)
    vdw = vdw_field(molecule, params.lj, grid)
    charges = spread_charges(molecule, grid)

    if initial_state is not None:
        field = enforce_constraints(InterfaceField(initial_state[0].copy(), masks))
        psi_prev = initial_state[1]
    else:
        field = _initial_interface(molecule, probe_radius, grid, masks, evolution.init_mode)
        psi_prev = None

    invariant_log = []
    dt = stable_dt(evolution, params, grid.h)

    # Nonpolar driving potential; used for warm start and nonpolar solves.
    v_np = driving_potential(None, vdw, params)

    if nonpolar_only:
        result = evolve_to_quasi_steady(
            field, v_np, evolution, params, dt=dt,
            record_invariants=coupling.record_invariants,
        )
        if coupling.record_invariants:
            invariant_log.extend(result.invariant_log)
        report = total_energy(result.field, None, charges, vdw, params, masks=masks)
        trace = [TraceRow(0, report.total, result.max_du, 0.0)]
        return Solution(
            u=result.field,
            psi=None,
            report=report,
            trace=trace,
            converged=result.converged,
            grid=grid,
            masks=masks,
            charges=charges,
            vdw=vdw,
            invariant_log=invariant_log,
        )

    if initial_state is None and coupling.warm_start_nonpolar:
        warm = evolve_to_quasi_steady(
            field, v_np, evolution, params, dt=dt,
            record_invariants=coupling.record_invariants,
        )
        field = warm.field
        dt = warm.dt
        if coupling.record_invariants:
            invariant_log.extend(warm.invariant_log)

    boundary = boundary_field(molecule, grid, params)

    trace = []
    converged = False
    # Baseline energy of the starting state so a restart from an already
    # converged pair can be recognised within two outer iterations.
    prev_total = total_energy(field, psi_prev, charges, vdw, params, masks=masks).total
    streak = 0
    report = None
    psi = psi_prev

    for outer in range(1, coupling.max_outer + 1):
        guess = psi.psi if psi is not None else None
        psi_new = solve_ppb(
            field.u, molecule, params,
            initial_guess=guess, charges=charges, boundary=boundary,
        )
        if psi is None:
            psi = psi_new
        else:
            blended = (
                coupling.alpha_prime * psi_new.psi.values
                + (1.0 - coupling.alpha_prime) * psi.psi.values
            )
            psi = type(psi_new)(
                ScalarField(grid, blended),
                psi_new.iterations,
                psi_new.final_residual,
                psi_new.newton_iterations,
            )

        v = driving_potential(psi, vdw, params)
        evo = evolve_steps(
            field, v, evolution, params, dt=dt,
            record_invariants=coupling.record_invariants,
        )
        dt = evo.dt
        if coupling.record_invariants:
            invariant_log.extend(evo.invariant_log)

        blended_u = (
            coupling.alpha * evo.field.u.values
            + (1.0 - coupling.alpha) * field.u.values
        )
        new_field = InterfaceField(ScalarField(grid, blended_u), masks)
        new_field = enforce_constraints(new_field)
        if coupling.record_invariants:
            invariant_log.append(new_field.feasibility_report())
        max_du = float(np.abs(new_field.u.values - field.u.values).max())
        field = new_field

        report = total_energy(field, psi, charges, vdw, params, masks=masks)
        trace.append(TraceRow(outer, report.total, max_du, psi_new.final_residual))
        log.info(
            "outer %d total=%.8f max_du=%.3e pb_residual=%.3e",
            outer, report.total, max_du, psi_new.final_residual,
        )

        rel = abs(report.total - prev_total) / max(abs(report.total), 1e-12)
        if rel <= coupling.outer_tol and max_du <= coupling.du_guard:
            streak += 1
        else:
            streak = 0
        prev_total = report.total
        if streak >= 2:
            converged = True
            break

    return Solution(
        u=field,
        psi=psi,
        report=report,
        trace=trace,
        converged=converged,
        grid=grid,
        masks=masks,
        charges=charges,
        vdw=vdw,
        invariant_log=invariant_log,
    )
