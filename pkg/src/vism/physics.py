"""Closed-form physical fields: Lennard-Jones / WCA, ionic term B, dielectric.

All functions accept scalars or numpy arrays for their field-like arguments.
"""

import warnings
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import constants
from .errors import ConfigError
from .grid import ScalarField

# Exponent clamp for the ionic Boltzmann factors; |beta q s| beyond this is
# saturated to keep exp() finite.
EXP_CLAMP = 40.0


@dataclass
class LJParams:
    """Per-type-tag Lennard-Jones parameters: tag -> (eps_is, sigma_is)."""

    table: dict

    def __post_init__(self):
        for tag, (eps, sigma) in self.table.items():
            if eps < 0:
                raise ConfigError(f"LJ well depth for tag '{tag}' must be >= 0, got {eps}")
            if sigma <= 0:
                raise ConfigError(f"LJ sigma for tag '{tag}' must be > 0, got {sigma}")

    def eps(self, tag):
        return self._get(tag)[0]

    def sigma(self, tag):
        return self._get(tag)[1]

    def _get(self, tag):
        try:
            return self.table[tag]
        except KeyError:
            raise ConfigError(f"no Lennard-Jones parameters for atom type tag '{tag}'") from None

    def tags(self):
        return list(self.table)

    def with_eps(self, updates):
        """New table with well depths replaced by ``updates`` (tag -> eps)."""
        new = {t: (updates.get(t, e), s) for t, (e, s) in self.table.items()}
        return LJParams(new)


def default_lj_params():
    """Carbon/hydrogen defaults; sigma_is = vdW radius + solvent radius."""
    return LJParams(
        {
            "c": (constants.DEFAULT_EPS_CS, constants.DEFAULT_CARBON_RADIUS + constants.DEFAULT_PROBE_RADIUS),
            "h": (constants.DEFAULT_EPS_HS, 1.20 + constants.DEFAULT_PROBE_RADIUS),
        }
    )


@dataclass
class IonSpecies:
    """Bulk ionic species: number densities (A^-3) and charges (e)."""

    concentrations: np.ndarray
    charges: np.ndarray
    beta: float = constants.BETA_ROOM

    def __post_init__(self):
        self.concentrations = np.atleast_1d(np.asarray(self.concentrations, dtype=float))
        self.charges = np.atleast_1d(np.asarray(self.charges, dtype=float))
        if self.concentrations.shape != self.charges.shape:
            raise ConfigError("ion concentration and charge lists must have equal length")
        if np.any(self.concentrations < 0):
            raise ConfigError("ion concentrations must be non-negative")
        if self.beta <= 0:
            raise ConfigError("beta must be positive")
        net = float(np.sum(self.concentrations * self.charges))
        scale = max(1.0, float(np.sum(self.concentrations * np.abs(self.charges))))
        if abs(net) > 1e-10 * scale:
            raise ConfigError(f"ionic species violate charge neutrality: sum c_j q_j = {net}")

    @classmethod
    def from_molar(cls, molar, charges, beta=constants.BETA_ROOM):
        conc = np.asarray(molar, dtype=float) * constants.MOLAR_TO_PER_A3
        return cls(conc, charges, beta)

    @property
    def is_trivial(self):
        return bool(np.all(self.concentrations == 0))


@dataclass
class PhysicalParams:
    """Every physical constant a solve needs.

    ``n_exponent`` is the integer N > 1 defining the volume-ratio power
    p = 2N/(2N-1); ``q_k`` is the TV-regularising exponent, constrained to
    (1, eps_s/(eps_s - eps_m)).
    """

    gamma: float = constants.DEFAULT_GAMMA
    p_h: float = constants.DEFAULT_PRESSURE
    rho_s: float = constants.DEFAULT_RHO_S
    eps_m: float = constants.DEFAULT_EPS_M
    eps_s: float = constants.DEFAULT_EPS_S
    n_exponent: int = constants.DEFAULT_N_EXPONENT
    q_k: float = constants.DEFAULT_Q_EXPONENT
    ions: IonSpecies = None
    lj: LJParams = dataclass_field(default_factory=default_lj_params)
    k_e: float = constants.COULOMB_K
    beta: float = constants.BETA_ROOM
    pb_tol: float = 1e-6
    pb_max_iter: int = 20000
    newton_max_outer: int = 50
    newton_tol: float = 1e-8
    psi_sup_bound: float = None  # None -> adaptive bound chosen per solve

    def __post_init__(self):
        if self.gamma < 0 or self.p_h < 0:
            raise ConfigError("gamma and p_h must be non-negative")
        if self.rho_s < 0:
            raise ConfigError("rho_s must be non-negative")
        if not 0 < self.eps_m < self.eps_s:
            raise ConfigError(f"need 0 < eps_m < eps_s, got {self.eps_m}, {self.eps_s}")
        if int(self.n_exponent) != self.n_exponent or self.n_exponent <= 1:
            raise ConfigError(f"n_exponent must be an integer > 1, got {self.n_exponent}")
        self.n_exponent = int(self.n_exponent)
        q_max = self.eps_s / (self.eps_s - self.eps_m)
        if not 1.0 < self.q_k < q_max:
            raise ConfigError(
                f"q_k must lie in (1, eps_s/(eps_s-eps_m)) = (1, {q_max:.6g}), got {self.q_k}"
            )
        if self.ions is not None and self.ions.beta != self.beta:
            raise ConfigError("ion species beta disagrees with params beta")

    @property
    def p(self):
        """Volume-ratio exponent p = 2N/(2N-1); always in (1, 3/2)."""
        n = self.n_exponent
        return 2.0 * n / (2.0 * n - 1.0)

    @property
    def has_salt(self):
        return self.ions is not None and not self.ions.is_trivial


def lj_potential(r, eps, sigma):
    """Lennard-Jones 12-6 potential 4 eps [(sigma/r)^12 - (sigma/r)^6]."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("Lennard-Jones potential is singular at r <= 0")
    sr6 = (sigma / r) ** 6
    out = 4.0 * eps * (sr6 * sr6 - sr6)
    return out if out.ndim else float(out)


def wca_attractive(r, eps, sigma):
    """Attractive WCA branch: -eps inside the LJ minimum, the LJ tail beyond."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("WCA potential is singular at r <= 0")
    splice = 2.0 ** (1.0 / 6.0) * sigma
    out = np.where(r < splice, -eps, lj_potential(np.maximum(r, splice), eps, sigma))
    return out if out.ndim else float(out)


def vdw_field(molecule, lj, grid, unit_eps=False, only_tag=None):
    """Attractive dispersion field: sum over atoms of the WCA-attractive term.

    Distances are clamped below at h/2 so nodes coinciding with atom centres
    stay finite; those nodes lie inside the solute where the field is
    multiplied by (1 - u^p) = 0, so the clamp never reaches the energy.

    ``unit_eps`` evaluates with eps_is = 1 (per-tag sensitivity fields for
    the fitting module); ``only_tag`` restricts the sum to atoms of one tag.
    """
    x, y, z = grid.axes()
    total = np.zeros(grid.dims)
    rmin = grid.h / 2.0
    for pos, tag in zip(molecule.positions, molecule.tags):
        if only_tag is not None and tag != only_tag:
            continue
        eps = 1.0 if unit_eps else lj.eps(tag)
        sigma = lj.sigma(tag)
        if eps == 0.0:
            continue
        dx2 = (x - pos[0]) ** 2
        dy2 = (y - pos[1]) ** 2
        dz2 = (z - pos[2]) ** 2
        r = np.sqrt(dx2[:, None, None] + dy2[None, :, None] + dz2[None, None, :])
        np.maximum(r, rmin, out=r)
        total += wca_attractive(r, eps, sigma)
    return ScalarField(grid, total)


def _clamped_exponents(s, ions):
    args = np.multiply.outer(-ions.beta * ions.charges, np.asarray(s, dtype=float))
    clipped = np.clip(args, -EXP_CLAMP, EXP_CLAMP)
    if np.any(args != clipped):
        warnings.warn(
            "ionic Boltzmann factor saturated at |beta q s| = 40", RuntimeWarning, stacklevel=3
        )
    return clipped


def ionic_B(s, ions):
    """B(s) = beta^-1 sum_j c_j (exp(-beta q_j s) - 1); zero without ions."""
    if ions is None or ions.is_trivial:
        return np.zeros_like(np.asarray(s, dtype=float)) if np.ndim(s) else 0.0
    terms = np.expm1(_clamped_exponents(s, ions))
    out = np.tensordot(ions.concentrations, terms, axes=(0, 0)) / ions.beta
    return out if np.ndim(s) else float(out)


def ionic_B_prime(s, ions):
    """B'(s) = -sum_j c_j q_j exp(-beta q_j s); vanishes at s=0 by neutrality."""
    if ions is None or ions.is_trivial:
        return np.zeros_like(np.asarray(s, dtype=float)) if np.ndim(s) else 0.0
    terms = np.exp(_clamped_exponents(s, ions))
    out = -np.tensordot(ions.concentrations * ions.charges, terms, axes=(0, 0))
    return out if np.ndim(s) else float(out)


def ionic_B_second(s, ions):
    """B''(s) = beta sum_j c_j q_j^2 exp(-beta q_j s); strictly positive."""
    if ions is None or ions.is_trivial:
        return np.zeros_like(np.asarray(s, dtype=float)) if np.ndim(s) else 0.0
    terms = np.exp(_clamped_exponents(s, ions))
    coeff = ions.beta * ions.concentrations * ions.charges**2
    out = np.tensordot(coeff, terms, axes=(0, 0))
    return out if np.ndim(s) else float(out)


def dielectric_of_u(u_values, params):
    """Mixture dielectric eps(u) = u^p eps_m + (1 - u^p) eps_s, u clamped to [0,1]."""
    up = np.clip(u_values, 0.0, 1.0) ** params.p
    return params.eps_s + up * (params.eps_m - params.eps_s)


def dielectric(u, params):
    """ScalarField version of :func:`dielectric_of_u`."""
    return ScalarField(u.grid, dielectric_of_u(u.values, params))


def debye_kappa(params):
    """Inverse screening length kappa = sqrt(4 pi k_e beta sum c_j q_j^2 / eps_s)."""
    if not params.has_salt:
        return 0.0
    ions = params.ions
    s = float(np.sum(ions.concentrations * ions.charges**2))
    return float(np.sqrt(4.0 * np.pi * params.k_e * ions.beta * s / params.eps_s))
