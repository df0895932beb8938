"""Perturbed Poisson-Boltzmann solver on the uniform grid.

Continuous problem, in package units (psi in kcal/(mol e), charge densities
in e/A^3):

    div(eps(u) grad psi) - 4 pi k_e (q_k - u^p) B'(psi) = -4 pi k_e rho_m

with Dirichlet data from the screened-Coulomb superposition of the atom
charges.  Discretised with the standard 7-point scheme; face dielectrics are
eps evaluated at the mean of u on the two adjacent nodes.  The assembled
operator is written in positive-definite form

    A(psi)_c = sum_faces eps_f (psi_c - psi_nbr) + c2 psi_c = rhs

so a Jacobi-preconditioned conjugate-gradient solve applies directly; the
salt nonlinearity is handled by a damped Newton outer loop.
"""

from dataclasses import dataclass, field

import numpy as np

from .constants import FOUR_PI_K
from .errors import InputError, SolverError
from .grid import ScalarField
from .physics import (
    debye_kappa,
    dielectric_of_u,
    ionic_B_prime,
    ionic_B_second,
)


@dataclass
class ChargeGrid:
    """Fractional atom charges spread to grid nodes (units: e per node)."""

    values: ScalarField

    @property
    def total(self):
        return float(self.values.values.sum())


@dataclass
class LinearSystem:
    """7-point stencil in face form plus Newton diagonal and right-hand side.

    ``eps_x[i,j,k]`` couples nodes (i,j,k) and (i+1,j,k); likewise y, z.
    ``diag_add`` holds the linearised ionic term, ``rhs`` the source, and
    ``boundary_values`` the Dirichlet data (valid on boundary nodes).
    """

    eps_x: np.ndarray
    eps_y: np.ndarray
    eps_z: np.ndarray
    diag_add: np.ndarray
    rhs: np.ndarray
    boundary_values: np.ndarray
    boundary: np.ndarray
    interior: np.ndarray = field(init=False)

    def __post_init__(self):
        self.interior = ~self.boundary

    def apply(self, v):
        """A(v) with the stencil applied everywhere (callers mask as needed)."""
        out = self.diag_add * v
        d = v[:-1, :, :] - v[1:, :, :]
        t = self.eps_x * d
        out[:-1, :, :] += t
        out[1:, :, :] -= t
        d = v[:, :-1, :] - v[:, 1:, :]
        t = self.eps_y * d
        out[:, :-1, :] += t
        out[:, 1:, :] -= t
        d = v[:, :, :-1] - v[:, :, 1:]
        t = self.eps_z * d
        out[:, :, :-1] += t
        out[:, :, 1:] -= t
        return out

    def diagonal(self):
        diag = self.diag_add.copy()
        diag[:-1, :, :] += self.eps_x
        diag[1:, :, :] += self.eps_x
        diag[:, :-1, :] += self.eps_y
        diag[:, 1:, :] += self.eps_y
        diag[:, :, :-1] += self.eps_z
        diag[:, :, 1:] += self.eps_z
        return diag


@dataclass
class PotentialField:
    """Solved electrostatic potential plus solver diagnostics."""

    psi: ScalarField
    iterations: int
    final_residual: float
    newton_iterations: int = 0


def spread_charges(molecule, grid):
    """Trilinear spreading of every atom charge to its 8 enclosing nodes.

    Weights per atom sum to one, so the grid total equals the molecular
    charge to machine precision.  Atoms must sit strictly inside the
    interior (their cell corners must not be Dirichlet boundary nodes).
    """
    values = np.zeros(grid.dims)
    dims = np.array(grid.dims)
    for a in range(molecule.natoms):
        f = (molecule.positions[a] - grid.origin) / grid.h
        i0 = np.floor(f).astype(int)
        i0 = np.minimum(i0, dims - 2)  # atom exactly on the last node of a cell
        frac = f - i0
        if np.any(i0 < 1) or np.any(i0 + 1 > dims - 2):
            raise InputError(
                f"atom {a} at {molecule.positions[a]} is outside the grid interior"
            )
        wx = (1.0 - frac[0], frac[0])
        wy = (1.0 - frac[1], frac[1])
        wz = (1.0 - frac[2], frac[2])
        q = molecule.charges[a]
        for di in (0, 1):
            for dj in (0, 1):
                for dk in (0, 1):
                    values[i0[0] + di, i0[1] + dj, i0[2] + dk] += (
                        q * wx[di] * wy[dj] * wz[dk]
                    )
    return ChargeGrid(ScalarField(grid, values))


def boundary_potential(molecule, x, params, dielectric=None):
    """Screened-Coulomb potential of the atom charges at point ``x``.

    Uses the Debye parameter of ``params.ions`` (zero without salt) and the
    solvent dielectric unless ``dielectric`` overrides it.
    """
    eps = params.eps_s if dielectric is None else dielectric
    kappa = debye_kappa(params)
    d = np.linalg.norm(molecule.positions - np.asarray(x, dtype=float), axis=1)
    if np.any(d == 0):
        raise ValueError("boundary potential evaluated at an atom centre")
    return float(np.sum(params.k_e * molecule.charges * np.exp(-kappa * d) / (eps * d)))


def boundary_field(molecule, grid, params, dielectric=None):
    """ScalarField holding the Dirichlet data on the grid boundary (0 inside)."""
    eps = params.eps_s if dielectric is None else dielectric
    kappa = debye_kappa(params)
    mask = grid.boundary_mask()
    idx = np.argwhere(mask)
    pos = grid.origin + grid.h * idx
    vals = np.zeros(grid.dims)
    acc = np.zeros(len(idx))
    for a in range(molecule.natoms):
        d = np.linalg.norm(pos - molecule.positions[a], axis=1)
        if np.any(d == 0):
            raise ValueError("atom centre coincides with a boundary node")
        acc += params.k_e * molecule.charges[a] * np.exp(-kappa * d) / (eps * d)
    vals[mask] = acc
    return ScalarField(grid, vals)


def assemble_ppb_system(u, charges, psi_ref, params, boundary_values):
    """Build the linear(ised) system for the perturbed PB equation.

    Without salt this is the perturbed Poisson system.  With salt, the ionic
    term is Newton-linearised around ``psi_ref``: the diagonal gains
    ``4 pi k_e h^2 (q_k - u^p) B''(psi_ref)`` and the right-hand side the
    matching affine part.
    """
    grid = u.grid
    h = grid.h
    uv = np.clip(u.values, 0.0, 1.0)

    def face_eps(axis):
        sl_lo = [slice(None)] * 3
        sl_hi = [slice(None)] * 3
        sl_lo[axis] = slice(0, -1)
        sl_hi[axis] = slice(1, None)
        u_face = 0.5 * (uv[tuple(sl_lo)] + uv[tuple(sl_hi)])
        return dielectric_of_u(u_face, params)

    eps_x, eps_y, eps_z = face_eps(0), face_eps(1), face_eps(2)

    rhs = FOUR_PI_K * charges.values.values / h
    diag_add = np.zeros(grid.dims)
    if params.has_salt:
        if psi_ref is None:
            psi_ref = np.zeros(grid.dims)
        weight = params.q_k - uv ** params.p
        b1 = ionic_B_prime(psi_ref, params.ions)
        b2 = ionic_B_second(psi_ref, params.ions)
        diag_add = FOUR_PI_K * h**2 * weight * b2
        rhs = rhs - FOUR_PI_K * h**2 * weight * (b1 - b2 * psi_ref)

    return LinearSystem(
        eps_x=eps_x,
        eps_y=eps_y,
        eps_z=eps_z,
        diag_add=diag_add,
        rhs=rhs,
        boundary_values=boundary_values.values,
        boundary=grid.boundary_mask(),
    )


def jacobi_pcg(system, x0, tol, max_iter):
    """Preconditioned CG on the interior unknowns; boundary stays pinned.

    Returns (solution, iterations, relative residual, residual history).
    """
    interior = system.interior
    x = x0.copy()
    x[system.boundary] = system.boundary_values[system.boundary]

    r = system.rhs - system.apply(x)
    r[system.boundary] = 0.0

    # Reference scale: residual of the pure boundary-lift start.
    x_bc = np.where(system.boundary, system.boundary_values, 0.0)
    r_ref = system.rhs - system.apply(x_bc)
    r_ref[system.boundary] = 0.0
    ref = float(np.linalg.norm(r_ref))
    if ref == 0.0:
        return x_bc, 0, 0.0, [0.0]

    inv_diag = np.zeros_like(x)
    diag = system.diagonal()
    inv_diag[interior] = 1.0 / diag[interior]

    z = inv_diag * r
    p = z.copy()
    rz = float(np.sum(r * z))
    history = [float(np.linalg.norm(r)) / ref]
    if history[-1] <= tol:
        return x, 0, history[-1], history

    for it in range(1, max_iter + 1):
        Ap = system.apply(p)
        Ap[system.boundary] = 0.0
        alpha = rz / float(np.sum(p * Ap))
        x = x + alpha * p
        r = r - alpha * Ap
        rel = float(np.linalg.norm(r)) / ref
        history.append(rel)
        if rel <= tol:
            return x, it, rel, history
        z = inv_diag * r
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new

    raise SolverError(
        f"conjugate gradient failed to reach tol={tol} within {max_iter} iterations "
        f"(last relative residual {history[-1]:.3e})",
        residuals=history,
    )


def ppb_residual_norm(u, psi_values, charges, params, boundary_values):
    """Relative nonlinear residual of the perturbed PB equation at ``psi``."""
    base = assemble_ppb_system(u, charges, None, _no_salt(params), boundary_values)
    f = base.apply(psi_values) - base.rhs
    if params.has_salt:
        uv = np.clip(u.values, 0.0, 1.0)
        weight = params.q_k - uv ** params.p
        f = f + FOUR_PI_K * u.grid.h**2 * weight * ionic_B_prime(psi_values, params.ions)
    f[base.boundary] = 0.0
    x_bc = np.where(base.boundary, base.boundary_values, 0.0)
    r_ref = base.rhs - base.apply(x_bc)
    r_ref[base.boundary] = 0.0
    ref = float(np.linalg.norm(r_ref))
    if ref == 0.0:
        return float(np.linalg.norm(f))
    return float(np.linalg.norm(f)) / ref


class _NoSalt:
    """Parameter view with the ionic term switched off."""

    def __init__(self, params):
        self._params = params

    def __getattr__(self, name):
        if name == "has_salt":
            return False
        if name == "ions":
            return None
        return getattr(self._params, name)


def _no_salt(params):
    return params if not params.has_salt else _NoSalt(params)


def _sup_bound(molecule, params, grid, boundary_values):
    if params.psi_sup_bound is not None:
        return params.psi_sup_bound
    charge_scale = float(np.sum(np.abs(molecule.charges)))
    self_pot = params.k_e * charge_scale / (params.eps_m * 0.3 * grid.h)
    return 10.0 * (self_pot + float(np.abs(boundary_values.values).max())) + 1.0


def solve_ppb(u, molecule, params, initial_guess=None, charges=None, boundary=None):
    """Solve the perturbed PB equation for the interface field ``u``.

    Salt-free problems take a single PCG solve; with salt a damped Newton
    loop (step halved whenever the nonlinear residual grows) iterates
    assemble/solve until ``params.newton_tol``.  The returned potential
    matches the Dirichlet data exactly.
    """
    grid = u.grid
    if charges is None:
        charges = spread_charges(molecule, grid)
    if boundary is None:
        boundary = boundary_field(molecule, grid, params)

    if initial_guess is not None:
        x0 = initial_guess.values.copy()
    else:
        x0 = np.where(grid.boundary_mask(), boundary.values, 0.0)

    if not params.has_salt:
        system = assemble_ppb_system(u, charges, None, params, boundary)
        x, iters, rel, _ = jacobi_pcg(system, x0, params.pb_tol, params.pb_max_iter)
        result = PotentialField(ScalarField(grid, x), iters, rel)
    else:
        psi = x0
        psi[grid.boundary_mask()] = boundary.values[grid.boundary_mask()]
        res = ppb_residual_norm(u, psi, charges, params, boundary)
        total_iters = 0
        newton_it = 0
        converged = res <= params.newton_tol
        while not converged and newton_it < params.newton_max_outer:
            newton_it += 1
            system = assemble_ppb_system(u, charges, psi, params, boundary)
            x, iters, _, _ = jacobi_pcg(system, psi, params.pb_tol, params.pb_max_iter)
            total_iters += iters
            step = x - psi
            scale = 1.0
            while True:
                trial = psi + scale * step
                res_try = ppb_residual_norm(u, trial, charges, params, boundary)
                if res_try <= res or scale < 1.0 / 1024.0:
                    break
                scale *= 0.5
            psi, res = trial, res_try
            if res <= params.newton_tol:
                converged = True
        if not converged:
            raise SolverError(
                f"Newton loop for the ionic term did not converge in "
                f"{params.newton_max_outer} iterations (residual {res:.3e})"
            )
        result = PotentialField(ScalarField(grid, psi), total_iters, res, newton_it)

    bound = _sup_bound(molecule, params, grid, boundary)
    sup = float(np.abs(result.psi.values).max())
    if sup > bound:
        raise SolverError(
            f"potential sup-norm {sup:.3e} exceeds the sanity bound {bound:.3e}; "
            "the solve is diverging"
        )
    return result
