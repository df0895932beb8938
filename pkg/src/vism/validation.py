"""Analytical and brute-force oracles backing the acceptance suite.

The Born pipeline isolates the PB solver: the interface is pinned to the
sharp ball indicator (no evolution) and the reaction energy is the pairing
difference between the mixed-dielectric solve and a homogeneous solute-
dielectric reference solve, which cancels the discrete self-energy.

Sharp mode uses interface-aware face coefficients: where an edge crosses the
sphere, the face dielectric is the harmonic combination weighted by the
exact cut fraction (1-D flux matching).  The coupled solver's fields are
smooth and keep the mean-of-u face rule; a crisp 0/1 jump needs the
harmonic treatment to converge to the analytic value at second order.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .constants import DEFAULT_PROBE_RADIUS
from .coupling import self_consistent_solve
from .errors import VismError
from .grid import Grid, Molecule, ScalarField
from .pb import (
    assemble_ppb_system,
    boundary_field,
    jacobi_pcg,
    solve_ppb,
    spread_charges,
)


@dataclass
class SweepResult:
    """Energies along one parameter axis plus successive differences."""

    axis: list
    energies: list
    diffs: list
    errors: list

    @property
    def spread(self):
        vals = [e for e in self.energies if np.isfinite(e)]
        if not vals:
            return np.nan
        mean = np.mean(vals)
        return (max(vals) - min(vals)) / max(abs(mean), 1e-300)


def born_energy_analytical(q, radius, eps_m, eps_s, k_e):
    """Closed-form Born solvation energy -(k_e q^2 / 2)(1/eps_m - 1/eps_s)/R."""
    if radius <= 0:
        raise ValueError(f"Born radius must be positive, got {radius}")
    if eps_m <= 0 or eps_s <= 0:
        raise ValueError("dielectric constants must be positive")
    return -(k_e * q * q / 2.0) * (1.0 / eps_m - 1.0 / eps_s) / radius


def _centered_grid(radius, h, pad):
    """Cubic grid with odd node counts so the origin is exactly a node."""
    margin = radius + DEFAULT_PROBE_RADIUS + pad
    half = int(np.ceil(margin / h))
    dims = (2 * half + 1,) * 3
    origin = -h * half * np.ones(3)
    return Grid(origin=origin, dims=dims, h=h)


def _sharp_face_eps(grid, radius, eps_in, eps_out, axis):
    """Face dielectrics for a centred sphere of the given radius.

    Faces with both endpoint nodes on one side take that side's constant;
    faces whose edge crosses the sphere take the harmonic combination
    weighted by the exact fraction of the edge inside the ball.
    """
    axes = grid.axes()
    x, y, z = axes
    rr = np.sqrt(x[:, None, None] ** 2 + y[None, :, None] ** 2 + z[None, None, :] ** 2)
    lo = [slice(None)] * 3
    hi = [slice(None)] * 3
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    r1 = rr[tuple(lo)]
    r2 = rr[tuple(hi)]
    inside1 = r1 <= radius
    inside2 = r2 <= radius
    eps = np.where(inside1 & inside2, eps_in, eps_out).astype(float)
    cross = inside1 != inside2

    # Along the edge, r(t)^2 = r_perp^2 + (a + t h)^2 with a the low-end
    # coordinate on this axis; solve for the crossing parameter t in [0,1].
    shp = [1, 1, 1]
    shp[axis] = -1
    a = np.broadcast_to(axes[axis][:-1].reshape(shp), r1.shape)
    rp2 = r1**2 - a**2
    root = np.sqrt(np.maximum(radius * radius - rp2, 0.0))
    t1 = (-a - root) / grid.h
    t2 = (-a + root) / grid.h
    t = np.where((t1 >= 0.0) & (t1 <= 1.0), t1, t2)
    t = np.clip(t, 0.0, 1.0)
    theta = np.where(inside1, t, 1.0 - t)  # edge fraction inside the ball
    eps_cross = 1.0 / (theta / eps_in + (1.0 - theta) / eps_out)
    eps[cross] = eps_cross[cross]
    return eps


def born_pipeline(radius, charge, params, h, pad=6.0, sharp_faces=True):
    """Sharp-mode PB solvation energy of a centred point charge in a sphere.

    Two solves share the charge grid: the mixed-dielectric system with the
    ball-indicator interface, and an eps_m-homogeneous reference whose
    Dirichlet data is the plain eps_m Coulomb potential.  Returns
    0.5 * sum q (psi - psi_ref), the discrete reaction-field energy.

    ``sharp_faces=False`` falls back to the coupled solver's mean-of-u face
    rule (first-order only on a crisp jump; useful for diagnostics).
    """
    if params.has_salt:
        raise ValueError("the Born oracle is defined for the salt-free case")
    molecule = Molecule(
        positions=[[0.0, 0.0, 0.0]],
        charges=[charge],
        radii=[radius],
        tags=["c"],
    )
    grid = _centered_grid(radius, h, pad)
    x, y, z = grid.axes()
    r = np.sqrt(
        x[:, None, None] ** 2 + y[None, :, None] ** 2 + z[None, None, :] ** 2
    )
    u = ScalarField(grid, np.where(r <= radius, 1.0, 0.0))
    charges = spread_charges(molecule, grid)

    if not sharp_faces:
        psi = solve_ppb(u, molecule, params, charges=charges)
        psi_vals = psi.psi.values
    else:
        bc = boundary_field(molecule, grid, params)
        system = assemble_ppb_system(u, charges, None, params, bc)
        system.eps_x = _sharp_face_eps(grid, radius, params.eps_m, params.eps_s, 0)
        system.eps_y = _sharp_face_eps(grid, radius, params.eps_m, params.eps_s, 1)
        system.eps_z = _sharp_face_eps(grid, radius, params.eps_m, params.eps_s, 2)
        x0 = np.where(grid.boundary_mask(), bc.values, 0.0)
        psi_vals, _, _, _ = jacobi_pcg(system, x0, params.pb_tol, params.pb_max_iter)

    ref_params = replace(params, ions=None)
    u_ref = ScalarField(grid, np.ones(grid.dims))
    bc_ref = boundary_field(molecule, grid, ref_params, dielectric=params.eps_m)
    psi_ref = solve_ppb(u_ref, molecule, ref_params, charges=charges, boundary=bc_ref)

    qv = charges.values.values
    return 0.5 * float(np.sum(qv * (psi_vals - psi_ref.psi.values)))


def born_refinement(radius, charge, params, h_list, pad=6.0):
    """Reaction energies and absolute errors vs the analytic value per h."""
    exact = born_energy_analytical(charge, radius, params.eps_m, params.eps_s, params.k_e)
    energies = [born_pipeline(radius, charge, params, h, pad) for h in h_list]
    errors = [abs(e - exact) for e in energies]
    return exact, energies, errors


def _one_axis_solve(molecule, params, **solve_kwargs):
    sol = self_consistent_solve(molecule, params, **solve_kwargs)
    if not sol.converged:
        raise VismError("solve did not converge")
    return sol.report.total


def _axis_sweep(molecule, params, values, update, threads=1, **solve_kwargs):
    energies = [np.nan] * len(values)
    errors = [None] * len(values)

    def run(i, v):
        try:
            energies[i] = _one_axis_solve(molecule, update(params, v), **solve_kwargs)
        except VismError as exc:
            errors[i] = str(exc)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(run, i, v) for i, v in enumerate(values)]
            for f in futures:
                f.result()
    else:
        for i, v in enumerate(values):
            run(i, v)

    diffs = []
    for a, b in zip(energies, energies[1:]):
        diffs.append(abs(b - a) if np.isfinite(a) and np.isfinite(b) else np.nan)
    return SweepResult(list(values), energies, diffs, errors)


def q_sweep(molecule, params, q_list, **solve_kwargs):
    """Full self-consistent solves over a decreasing q_k sequence."""
    q_list = list(q_list)
    if any(b >= a for a, b in zip(q_list, q_list[1:])):
        raise ValueError("q_list must be strictly decreasing")
    q_max = params.eps_s / (params.eps_s - params.eps_m)
    if any(not 1.0 < q < q_max for q in q_list):
        raise ValueError(f"q values must lie in (1, {q_max:.6g})")
    return _axis_sweep(
        molecule, params, q_list, lambda p, q: replace(p, q_k=q), **solve_kwargs
    )


def n_sweep(molecule, params, n_list, **solve_kwargs):
    """Full solves over the volume-ratio exponent N (p = 2N/(2N-1))."""
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    return _axis_sweep(
        molecule, params, n_list, lambda p, n: replace(p, n_exponent=n), **solve_kwargs
    )


def richardson_order(h_list, errors):
    """Least-squares slope of log(error) against log(h).

    Non-positive errors are excluded; fewer than two surviving points is an
    estimation error.
    """
    pts = [(h, e) for h, e in zip(h_list, errors) if e > 0 and np.isfinite(e)]
    if len(pts) < 2:
        raise ValueError("need at least two positive errors to estimate an order")
    hs = np.log([p[0] for p in pts])
    es = np.log([p[1] for p in pts])
    slope, _ = np.polyfit(hs, es, 1)
    return float(slope)


def diffuseness_check(solution, lo, hi):
    """Fraction of MIXING nodes whose u lies strictly inside (lo, hi)."""
    if not 0.0 < lo < hi < 1.0:
        raise ValueError(f"need 0 < lo < hi < 1, got ({lo}, {hi})")
    mix = solution.masks.mixing
    n_mix = int(mix.sum())
    if n_mix == 0:
        raise ValueError("empty MIXING set")
    u = solution.u.u.values[mix]
    return float(np.sum((u > lo) & (u < hi))) / n_mix
