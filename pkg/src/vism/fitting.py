"""Iterative non-negative least-squares parameterisation.

The fitted parameters are the surface tension, the pressure and the per-tag
dispersion well depths.  At frozen fields the model energy is affine in all
of them, so each fit iteration alternates: (1) solve every molecule with the
current parameters, (2) assemble the affine design matrix from the frozen
fields, (3) NNLS-update the parameters, and repeat until they settle.
"""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field, replace

import numpy as np

from .coupling import self_consistent_solve
from .energy import tv_sum
from .errors import FitError, VismError
from .physics import vdw_field

log = logging.getLogger(__name__)


def nnls(A, b, tol=1e-10, max_iter=None):
    """Lawson-Hanson active-set solver: x >= 0 minimising ||A x - b||_2.

    Stops when the KKT conditions hold to ``tol``: the gradient of the
    objective is <= tol on the active (zero) coordinates and ~0 on the
    passive set.  Zero columns never enter the passive set and stay pinned
    at 0.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise ValueError(f"incompatible shapes {A.shape} and {b.shape}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("nnls requires finite inputs")
    m, n = A.shape
    if max_iter is None:
        max_iter = 3 * n + 30

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = A.T @ b  # gradient of -0.5||Ax-b||^2 at x = 0
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))

    for _ in range(max_iter):
        w = A.T @ (b - A @ x)
        candidates = ~passive & (w > tol * scale)
        if not candidates.any():
            break
        j = int(np.argmax(np.where(candidates, w, -np.inf)))
        passive[j] = True

        while True:
            z = np.zeros(n)
            cols = np.flatnonzero(passive)
            sol, *_ = np.linalg.lstsq(A[:, cols], b, rcond=None)
            z[cols] = sol
            if np.all(z[cols] > 0.0):
                x = z
                break
            # Step to the boundary of the feasible region and drop columns.
            blocking = passive & (z <= 0.0) & (x > z)
            ratios = np.where(blocking, x / np.where(x > z, x - z, 1.0), np.inf)
            alpha = float(ratios.min())
            x = x + alpha * (z - x)
            passive &= x > tol * 1e-2
            x[~passive] = 0.0
            if not passive.any():
                break
    return x


@dataclass
class FitEntry:
    name: str
    molecule: object
    dg_exp: float


@dataclass
class FitDataset:
    entries: list
    nonpolar: bool = False

    def __post_init__(self):
        for e in self.entries:
            if not np.isfinite(e.dg_exp):
                raise FitError(f"non-finite experimental energy for '{e.name}'")


@dataclass
class FitConfig:
    param_tol: float = 1e-3
    max_fit_iters: int = 30
    h: float = 0.5
    pad: float = 6.0
    probe_radius: float = None
    coupling: object = None
    evolution: object = None
    threads: int = 1


@dataclass
class FitState:
    """Current parameter iterate plus fit diagnostics."""

    gamma: float
    p_h: float
    eps_by_tag: dict
    iteration: int = 0
    rms: float = np.nan
    residual_history: list = dataclass_field(default_factory=list)
    solutions: dict = dataclass_field(default_factory=dict)
    predictions: dict = dataclass_field(default_factory=dict)

    def as_vector(self, tags):
        return np.array([self.gamma, self.p_h] + [self.eps_by_tag[t] for t in tags])


def apply_fit_state(params, state):
    """PhysicalParams with the fit state's parameter values substituted in."""
    return replace(
        params,
        gamma=state.gamma,
        p_h=state.p_h,
        lj=params.lj.with_eps(state.eps_by_tag),
    )


def energy_design_row(solution, molecule, params, tags):
    """Affine model of the total energy at frozen fields.

    Returns (coeffs, offset) with coeffs ordered [gamma, p_h, eps_tag...]
    such that  coeffs . theta + offset  reproduces the solved total energy
    at the current parameter vector exactly.
    """
    if not solution.converged:
        raise FitError("cannot build a design row from an unconverged solution")
    u = solution.u.u
    masks = solution.masks
    grid = solution.grid
    h3 = grid.h**3
    uv = np.clip(u.values, 0.0, 1.0)
    up = uv**params.p

    a_tv = tv_sum(u.values, grid.h, params.q_k) * h3
    a_vol = float(np.sum(up)) * h3

    weight = 1.0 - up
    include = (weight > 0.0) & ~masks.solute
    a_eps = []
    for tag in tags:
        unit = vdw_field(molecule, params.lj, grid, unit_eps=True, only_tag=tag)
        a_eps.append(
            params.rho_s * float(np.sum(weight[include] * unit.values[include])) * h3
        )

    offset = solution.report.polar
    return np.array([a_tv, a_vol] + a_eps), offset


def _solve_entry(entry, params, cfg, dataset):
    return self_consistent_solve(
        entry.molecule,
        params,
        coupling=cfg.coupling,
        evolution=cfg.evolution,
        h=cfg.h,
        pad=cfg.pad,
        probe_radius=cfg.probe_radius,
        nonpolar_only=dataset.nonpolar,
    )


def _solve_all(dataset, params, cfg, solver):
    """Solve every dataset entry, optionally on a thread pool.

    Returns [(entry, solution_or_None, error_or_None)] in dataset order.
    """
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = [
                pool.submit(solver, e, params, cfg, dataset) for e in dataset.entries
            ]
            out = []
            for entry, fut in zip(dataset.entries, futures):
                try:
                    out.append((entry, fut.result(), None))
                except VismError as exc:
                    out.append((entry, None, exc))
            return out
    out = []
    for entry in dataset.entries:
        try:
            out.append((entry, solver(entry, params, cfg, dataset), None))
        except VismError as exc:
            out.append((entry, None, exc))
    return out


def fit_parameters(dataset, init, params, cfg=None, solver=None):
    """Iterate solve / design / NNLS until the parameters settle.

    ``solver`` may replace the per-entry solve (tests use this); it gets
    (entry, params, cfg, dataset) and must return a Solution.  Molecules
    whose solves fail are dropped with a warning; if fewer entries than
    parameters remain the fit aborts.
    """
    cfg = cfg or FitConfig()
    solver = solver or _solve_entry
    tags = sorted(init.eps_by_tag)
    n_params = 2 + len(tags)
    state = FitState(init.gamma, init.p_h, dict(init.eps_by_tag))
    rising = 0

    for it in range(1, cfg.max_fit_iters + 1):
        trial_params = apply_fit_state(params, state)

        solved = _solve_all(dataset, trial_params, cfg, solver)

        rows, offsets, targets, names, solutions = [], [], [], [], {}
        for entry, sol, err in solved:
            try:
                if err is not None:
                    raise err
                if not sol.converged:
                    raise VismError("solve did not converge")
                coeffs, offset = energy_design_row(sol, entry.molecule, trial_params, tags)
            except VismError as exc:
                warnings.warn(f"dropping '{entry.name}' from fit: {exc}", RuntimeWarning)
                continue
            rows.append(coeffs)
            offsets.append(offset)
            targets.append(entry.dg_exp - offset)
            names.append(entry.name)
            solutions[entry.name] = sol

        if len(rows) < n_params:
            raise FitError(
                f"only {len(rows)} usable molecules for {n_params} parameters"
            )

        A = np.vstack(rows)
        b = np.asarray(targets)
        theta = nnls(A, b)

        new_state = FitState(
            gamma=float(theta[0]),
            p_h=float(theta[1]),
            eps_by_tag={t: float(v) for t, v in zip(tags, theta[2:])},
            iteration=it,
            solutions=solutions,
        )

        pred = A @ theta + np.asarray(offsets)
        exp = np.array([e.dg_exp for e in dataset.entries if e.name in solutions])
        rms = float(np.sqrt(np.mean((pred - exp) ** 2)))
        new_state.rms = rms
        new_state.residual_history = state.residual_history + [rms]
        new_state.predictions = dict(zip(names, pred))
        log.info("fit iter %d rms=%.6f params=%s", it, rms, theta)

        if state.residual_history and rms > state.residual_history[-1] + 1e-4:
            rising += 1
            if rising >= 2:
                raise FitError(
                    f"RMS increased for two consecutive iterations: "
                    f"{state.residual_history + [rms]}"
                )
        else:
            rising = 0

        old_vec = state.as_vector(tags)
        new_vec = new_state.as_vector(tags)
        state = new_state
        change = np.abs(new_vec - old_vec) / np.maximum(np.abs(new_vec), 1e-12)
        if it > 1 and np.all(change < cfg.param_tol):
            break

    return state
