"""Uniform grid, scalar fields, molecules and the solute/solvent/mixing masks.

Field values are stored as C-contiguous ``(nx, ny, nz)`` arrays, i.e. row
major with the z index running fastest.  All file formats and flat views use
that one layout.
"""

from dataclasses import dataclass, field

import numpy as np

from .constants import DEFAULT_PAD, DEFAULT_PROBE_RADIUS
from .errors import ConfigError, InputError

# Region labels used by DomainMasks.region.
SOLVENT = 0
SOLUTE = 1
MIXING = 2


@dataclass(frozen=True)
class Grid:
    """Uniform axis-aligned lattice: node (i,j,k) sits at origin + h*(i,j,k)."""

    origin: np.ndarray
    dims: tuple
    h: float

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.h <= 0:
            raise ConfigError(f"grid spacing must be positive, got {self.h}")
        if any(d < 3 for d in self.dims):
            raise ConfigError(f"need at least 3 nodes per axis, got dims={self.dims}")
        if not np.all(np.isfinite(self.origin)):
            raise ConfigError("grid origin must be finite")

    @property
    def node_count(self):
        nx, ny, nz = self.dims
        return nx * ny * nz

    def axes(self):
        """Per-axis node coordinate arrays (x, y, z)."""
        return tuple(
            self.origin[a] + self.h * np.arange(self.dims[a]) for a in range(3)
        )

    def meshgrid(self):
        """Full (nx,ny,nz) coordinate arrays; memory-heavy, prefer axes()."""
        x, y, z = self.axes()
        return np.meshgrid(x, y, z, indexing="ij")

    def node_position(self, i, j, k):
        return self.origin + self.h * np.array([i, j, k], dtype=float)

    def boundary_mask(self):
        """Boolean array, True on the six outer faces."""
        m = np.zeros(self.dims, dtype=bool)
        m[0, :, :] = m[-1, :, :] = True
        m[:, 0, :] = m[:, -1, :] = True
        m[:, :, 0] = m[:, :, -1] = True
        return m


@dataclass
class ScalarField:
    """A real-valued field sampled on the nodes of a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.shape != self.grid.dims:
            raise ConfigError(
                f"field shape {self.values.shape} does not match grid dims {self.grid.dims}"
            )

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.dims))

    @classmethod
    def full(cls, grid, value):
        return cls(grid, np.full(grid.dims, float(value)))

    @property
    def flat(self):
        """Flat row-major (z fastest) view of the values."""
        return self.values.ravel()

    def copy(self):
        return ScalarField(self.grid, self.values.copy())


@dataclass
class Molecule:
    """Discrete solute: positions (A), charges (e), vdW radii (A), type tags."""

    positions: np.ndarray
    charges: np.ndarray
    radii: np.ndarray
    tags: list

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        self.charges = np.atleast_1d(np.asarray(self.charges, dtype=float))
        self.radii = np.atleast_1d(np.asarray(self.radii, dtype=float))
        self.tags = list(self.tags)
        n = len(self.positions)
        if n < 1:
            raise InputError("molecule needs at least one atom")
        if self.positions.shape != (n, 3):
            raise InputError(f"positions must be (n,3), got {self.positions.shape}")
        if len(self.charges) != n or len(self.radii) != n or len(self.tags) != n:
            raise InputError("positions, charges, radii and tags must have equal length")
        if not np.all(np.isfinite(self.positions)):
            raise InputError("atom coordinates must be finite")
        if not np.all(np.isfinite(self.charges)):
            raise InputError("atom charges must be finite")
        if np.any(self.radii <= 0) or not np.all(np.isfinite(self.radii)):
            raise InputError("atom radii must be positive and finite")

    @property
    def natoms(self):
        return len(self.positions)

    @property
    def total_charge(self):
        return float(self.charges.sum())

    def translated(self, shift):
        return Molecule(
            self.positions + np.asarray(shift, dtype=float),
            self.charges.copy(),
            self.radii.copy(),
            list(self.tags),
        )


@dataclass
class DomainMasks:
    """Per-node classification into pure solute, pure solvent and mixing band."""

    region: np.ndarray
    solute: np.ndarray = field(init=False)
    solvent: np.ndarray = field(init=False)
    mixing: np.ndarray = field(init=False)

    def __post_init__(self):
        self.region = np.ascontiguousarray(self.region, dtype=np.int8)
        self.solute = self.region == SOLUTE
        self.solvent = self.region == SOLVENT
        self.mixing = self.region == MIXING

    def counts(self):
        return {
            "solute": int(self.solute.sum()),
            "solvent": int(self.solvent.sum()),
            "mixing": int(self.mixing.sum()),
        }


def build_grid(molecule, h, pad=DEFAULT_PAD, probe_radius=DEFAULT_PROBE_RADIUS):
    """Uniform grid covering the molecule's SAS plus ``pad`` on every side.

    The bounding box of the atom centres is expanded by
    ``max(radii) + probe_radius + pad`` in all six directions and the grid is
    centred on that box so that symmetric molecules get symmetric grids.
    """
    if h <= 0:
        raise ConfigError(f"grid spacing must be positive, got {h}")
    if pad < 0:
        raise ConfigError(f"pad must be non-negative, got {pad}")
    lo = molecule.positions.min(axis=0)
    hi = molecule.positions.max(axis=0)
    margin = float(molecule.radii.max()) + probe_radius + pad
    lo = lo - margin
    hi = hi + margin
    # Node counts chosen so the grid spans at least [lo, hi] on each axis.
    dims = tuple(max(3, int(np.ceil((hi[a] - lo[a]) / h)) + 1) for a in range(3))
    center = 0.5 * (lo + hi)
    origin = center - 0.5 * h * (np.array(dims) - 1)
    return Grid(origin=origin, dims=dims, h=h)


def signed_distance_union_balls(molecule, radius_offset, grid):
    """Signed distance to the union of atom balls inflated by ``radius_offset``.

    Negative inside; value at node x is ``min_i |x - x_i| - (r_i + offset)``.
    """
    if radius_offset < 0:
        raise ConfigError(f"radius offset must be non-negative, got {radius_offset}")
    x, y, z = grid.axes()
    dist = np.full(grid.dims, np.inf)
    for pos, r in zip(molecule.positions, molecule.radii):
        dx2 = (x - pos[0]) ** 2
        dy2 = (y - pos[1]) ** 2
        dz2 = (z - pos[2]) ** 2
        d = np.sqrt(dx2[:, None, None] + dy2[None, :, None] + dz2[None, None, :])
        np.minimum(dist, d - (r + radius_offset), out=dist)
    return ScalarField(grid, dist)


def classify_domains(molecule, probe_radius, grid):
    """Split grid nodes into SOLUTE / SOLVENT / MIXING.

    SOLUTE: inside the vdW union; SOLVENT: outside the SAS union (radii
    inflated by the probe); MIXING: the band in between.  Nodes on the grid
    boundary are always SOLVENT.
    """
    if probe_radius <= 0:
        raise ConfigError(f"probe radius must be positive, got {probe_radius}")
    d_vdw = signed_distance_union_balls(molecule, 0.0, grid).values
    d_sas = signed_distance_union_balls(molecule, probe_radius, grid).values

    region = np.full(grid.dims, MIXING, dtype=np.int8)
    region[d_sas >= 0] = SOLVENT
    region[d_vdw <= 0] = SOLUTE

    boundary = grid.boundary_mask()
    if np.any(d_sas[boundary] < 0):
        raise ConfigError(
            "molecule SAS reaches the grid boundary; enlarge the grid (pad) "
            "or shrink the molecule"
        )
    region[boundary] = SOLVENT

    masks = DomainMasks(region)
    if not masks.solute.any():
        raise ConfigError(
            "no SOLUTE nodes: grid spacing too coarse to resolve the vdW balls"
        )
    if not masks.solvent.any():
        raise ConfigError("no SOLVENT nodes: molecule too large for the grid")
    return masks


def interface_ramp(molecule, probe_radius, grid, masks):
    """Feasible initial interface field: 1 on SOLUTE, 0 on SOLVENT, and a
    linear ramp in normalised signed distance across the MIXING band."""
    d_vdw = signed_distance_union_balls(molecule, 0.0, grid).values
    d_sas = signed_distance_union_balls(molecule, probe_radius, grid).values
    u = np.zeros(grid.dims)
    u[masks.solute] = 1.0
    mix = masks.mixing
    width = d_vdw[mix] - d_sas[mix]  # positive: d_sas < 0 < d_vdw in the band
    u[mix] = np.clip(-d_sas[mix] / np.maximum(width, 1e-300), 0.0, 1.0)
    return ScalarField(grid, u)
