"""Physical constants and package-wide defaults.

Unit system: lengths in Angstrom, energies in kcal/mol, charges in units of
the elementary charge e, electrostatic potential in kcal/(mol e).  With these
units the Coulomb potential of a point charge is ``COULOMB_K * q / (eps * r)``
and every field-energy density ``eps |grad psi|^2`` must be divided by
``8 pi COULOMB_K`` to land in kcal/(mol A^3).
"""

import math

# Electrostatic conversion constant, kcal A / (mol e^2).
COULOMB_K = 332.0716

# Thermal energy at 298 K, kcal/mol, and its inverse (mol/kcal).
KT_ROOM = 0.5922
BETA_ROOM = 1.0 / KT_ROOM

# mol/L -> number density in A^-3.
MOLAR_TO_PER_A3 = 6.02214e-4

# Scale factor turning charge densities (e/A^3) into the divergence-form
# source of the Poisson equation: div(eps grad psi) = -FOUR_PI_K * rho.
FOUR_PI_K = 4.0 * math.pi * COULOMB_K

# Published optimal parameters for the alkane calibration set.
DEFAULT_GAMMA = 0.0746        # surface tension, kcal/(mol A^2)
DEFAULT_PRESSURE = 0.0090     # hydrodynamic pressure, kcal/(mol A^3)
DEFAULT_RHO_S = 0.03341       # solvent bulk density, A^-3
DEFAULT_EPS_CS = 0.486        # carbon-solvent LJ well depth, kcal/mol
DEFAULT_EPS_HS = 0.0          # hydrogen-solvent LJ well depth, kcal/mol

# Geometry defaults.
DEFAULT_PROBE_RADIUS = 0.65   # solvent radius, A
DEFAULT_PAD = 6.0             # extra grid padding beyond the SAS, A
DEFAULT_CARBON_RADIUS = 1.87  # vdW radius of carbon, A

# Model exponents.
DEFAULT_N_EXPONENT = 40       # integer N defining p = 2N/(2N-1)
DEFAULT_Q_EXPONENT = 1.00001  # TV-regularising exponent q_k

# Dielectric constants (solute / solvent).
DEFAULT_EPS_M = 1.0
DEFAULT_EPS_S = 80.0
