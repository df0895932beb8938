"""Grid-based constrained total-variation implicit-solvation solver.

Couples a perturbed Poisson-Boltzmann equation with a generalised surface-
evolution flow to minimise a diffuse-interface solvation free energy, and
fits its parameters by iterative non-negative least squares.
"""

from .constants import COULOMB_K
from .coupling import CouplingConfig, Solution, self_consistent_solve
from .energy import EnergyReport, nonpolar_energy, polar_energy, total_energy
from .errors import (
    ConfigError,
    FitError,
    InputError,
    NumericalError,
    SolverError,
    StalePotentialError,
    VismError,
)
from .evolution import (
    EvolutionConfig,
    InterfaceField,
    driving_potential,
    enforce_constraints,
    evolution_step,
    evolve_to_quasi_steady,
)
from .fitting import FitConfig, FitDataset, FitEntry, FitState, fit_parameters, nnls
from .grid import (
    DomainMasks,
    Grid,
    Molecule,
    ScalarField,
    build_grid,
    classify_domains,
    signed_distance_union_balls,
)
from .pb import (
    ChargeGrid,
    LinearSystem,
    PotentialField,
    assemble_ppb_system,
    boundary_potential,
    solve_ppb,
    spread_charges,
)
from .physics import (
    IonSpecies,
    LJParams,
    PhysicalParams,
    dielectric,
    ionic_B,
    ionic_B_prime,
    lj_potential,
    vdw_field,
    wca_attractive,
)
from .validation import (
    SweepResult,
    born_energy_analytical,
    born_pipeline,
    diffuseness_check,
    n_sweep,
    q_sweep,
    richardson_order,
)

__version__ = "0.1.0"
