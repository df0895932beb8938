import numpy as np
import pytest

from vism.errors import ConfigError, InputError
from vism.grid import (
    MIXING,
    SOLUTE,
    SOLVENT,
    Grid,
    Molecule,
    ScalarField,
    build_grid,
    classify_domains,
    interface_ramp,
    signed_distance_union_balls,
)


def test_build_grid_single_atom_halfwidth():
    mol = Molecule([[0.0, 0.0, 0.0]], [0.0], [2.0], ["c"])
    grid = build_grid(mol, h=0.5, pad=6.0, probe_radius=0.65)
    # half-width must cover radius + probe + pad = 8.65 per side
    for axis in range(3):
        lo = grid.origin[axis]
        hi = grid.origin[axis] + grid.h * (grid.dims[axis] - 1)
        assert lo <= -8.65
        assert hi >= 8.65
    assert grid.dims[0] == grid.dims[1] == grid.dims[2]


def test_build_grid_zero_pad_contains_sas_ball(single_atom):
    grid = build_grid(single_atom, h=0.4, pad=0.0, probe_radius=0.65)
    for axis in range(3):
        lo = grid.origin[axis]
        hi = grid.origin[axis] + grid.h * (grid.dims[axis] - 1)
        assert lo <= -(2.0 + 0.65)
        assert hi >= 2.0 + 0.65


def test_build_grid_two_atom_box_length():
    # atoms 4 A apart along x: box length >= 4 + 2*(r + probe + pad)
    mol = Molecule(
        [[-2.0, 0.0, 0.0], [2.0, 0.0, 0.0]], [0, 0], [1.5, 1.5], ["c", "c"]
    )
    grid = build_grid(mol, h=0.5, pad=3.0, probe_radius=0.65)
    length_x = grid.h * (grid.dims[0] - 1)
    assert length_x >= 4.0 + 2.0 * (1.5 + 0.65 + 3.0)


def test_build_grid_rejects_bad_inputs(single_atom):
    with pytest.raises(ConfigError):
        build_grid(single_atom, h=-0.1)
    with pytest.raises(ConfigError):
        build_grid(single_atom, h=0.5, pad=-1.0)


def test_molecule_validation_errors():
    with pytest.raises(InputError):
        Molecule(np.empty((0, 3)), [], [], [])
    with pytest.raises(InputError):
        Molecule([[0, 0, np.inf]], [0.0], [1.0], ["c"])
    with pytest.raises(InputError):
        Molecule([[0, 0, 0]], [0.0], [-1.0], ["c"])


def test_signed_distance_single_ball(single_atom):
    grid = build_grid(single_atom, h=0.5, pad=4.0)
    sdf = signed_distance_union_balls(single_atom, 0.0, grid)
    x, y, z = grid.axes()
    # node on the x axis at distance 3 from the centre: value 1 (= 3 - 2)
    i = int(np.argmin(np.abs(x - 3.0)))
    j = int(np.argmin(np.abs(y)))
    k = int(np.argmin(np.abs(z)))
    assert sdf.values[i, j, k] == pytest.approx(1.0, abs=1e-12)
    # node at the centre: -(r + offset)
    i0 = int(np.argmin(np.abs(x)))
    assert sdf.values[i0, j, k] == pytest.approx(-2.0, abs=1e-12)
    sdf_off = signed_distance_union_balls(single_atom, 0.65, grid)
    assert sdf_off.values[i0, j, k] == pytest.approx(-2.65, abs=1e-12)


def test_signed_distance_matches_bruteforce(rng):
    mol = Molecule(
        [[-0.8, 0.2, 0.0], [0.9, -0.3, 0.4], [0.0, 1.0, -0.6]],
        [0, 0, 0],
        [1.4, 1.7, 1.1],
        ["c", "c", "c"],
    )
    grid = build_grid(mol, h=0.7, pad=2.0)
    sdf = signed_distance_union_balls(mol, 0.3, grid)
    x, y, z = grid.axes()
    for _ in range(50):
        i = rng.integers(0, grid.dims[0])
        j = rng.integers(0, grid.dims[1])
        k = rng.integers(0, grid.dims[2])
        pos = np.array([x[i], y[j], z[k]])
        expected = min(
            np.linalg.norm(pos - mol.positions[a]) - (mol.radii[a] + 0.3)
            for a in range(mol.natoms)
        )
        assert sdf.values[i, j, k] == pytest.approx(expected, abs=1e-12)


def test_classify_three_zones():
    # r=1.87, probe=0.65: d=1.0 SOLUTE, 2.0 MIXING, 3.0 SOLVENT
    mol = Molecule([[0.0, 0.0, 0.0]], [0.0], [1.87], ["c"])
    grid = build_grid(mol, h=0.5, pad=4.0)
    masks = classify_domains(mol, 0.65, grid)
    x, y, z = grid.axes()
    j = int(np.argmin(np.abs(y)))
    k = int(np.argmin(np.abs(z)))

    def region_at(d):
        i = int(np.argmin(np.abs(x - d)))
        assert abs(x[i] - d) < 1e-9  # exact node for this h
        return masks.region[i, j, k]

    assert region_at(1.0) == SOLUTE
    assert region_at(2.0) == MIXING
    assert region_at(3.0) == SOLVENT


def test_classify_boundary_is_solvent(single_atom):
    grid = build_grid(single_atom, h=0.5, pad=4.0)
    masks = classify_domains(single_atom, 0.65, grid)
    assert masks.region[0, 0, 0] == SOLVENT
    boundary = grid.boundary_mask()
    assert np.all(masks.region[boundary] == SOLVENT)


def test_classify_probe_shrinks_mixing(single_atom):
    grid = build_grid(single_atom, h=0.25, pad=3.0)
    wide = classify_domains(single_atom, 0.65, grid)
    thin = classify_domains(single_atom, 0.05, grid)
    assert thin.mixing.sum() < wide.mixing.sum()


def test_classify_partition_and_band(single_atom):
    grid = build_grid(single_atom, h=0.5, pad=4.0)
    masks = classify_domains(single_atom, 0.65, grid)
    total = masks.solute.sum() + masks.solvent.sum() + masks.mixing.sum()
    assert total == grid.node_count
    assert masks.solute.any() and masks.solvent.any()
    # every MIXING node's vdW signed distance lies in the band
    sdf = signed_distance_union_balls(single_atom, 0.0, grid).values
    band = sdf[masks.mixing]
    assert np.all(band > 0.0)
    assert np.all(band < 0.65 + grid.h * np.sqrt(3.0))


def test_classify_translation_invariance(single_atom):
    grid = build_grid(single_atom, h=0.5, pad=4.0)
    masks = classify_domains(single_atom, 0.65, grid)
    shift = np.array([1.3, -0.7, 2.1])
    mol2 = single_atom.translated(shift)
    grid2 = Grid(origin=grid.origin + shift, dims=grid.dims, h=grid.h)
    masks2 = classify_domains(mol2, 0.65, grid2)
    assert np.array_equal(masks.region, masks2.region)


def test_classify_errors_when_molecule_overflows():
    mol = Molecule([[0.0, 0.0, 0.0]], [0.0], [2.0], ["c"])
    tight = Grid(origin=[-2.0, -2.0, -2.0], dims=(5, 5, 5), h=1.0)
    with pytest.raises(ConfigError):
        classify_domains(mol, 0.65, tight)


def test_interface_ramp_feasible_and_monotone(single_atom):
    grid = build_grid(single_atom, h=0.5, pad=4.0)
    masks = classify_domains(single_atom, 0.65, grid)
    u = interface_ramp(single_atom, 0.65, grid, masks)
    assert np.all(u.values >= 0.0) and np.all(u.values <= 1.0)
    assert np.all(u.values[masks.solute] == 1.0)
    assert np.all(u.values[masks.solvent] == 0.0)
    assert np.all(u.values[masks.mixing] > 0.0)
    assert np.all(u.values[masks.mixing] < 1.0)


def test_scalar_field_layout(single_atom):
    grid = build_grid(single_atom, h=1.0, pad=0.0)
    vals = np.arange(grid.node_count, dtype=float).reshape(grid.dims)
    f = ScalarField(grid, vals)
    # z index runs fastest in the flat view
    assert f.flat[1] == vals[0, 0, 1]
    nx, ny, nz = grid.dims
    assert f.flat[nz] == vals[0, 1, 0]
    with pytest.raises(ConfigError):
        ScalarField(grid, np.zeros((2, 2, 2)))
