import numpy as np
import pytest

from vism.errors import ConfigError
from vism.grid import Molecule, build_grid
from vism.physics import (
    IonSpecies,
    LJParams,
    PhysicalParams,
    debye_kappa,
    dielectric_of_u,
    ionic_B,
    ionic_B_prime,
    ionic_B_second,
    lj_potential,
    vdw_field,
    wca_attractive,
)

BETA = 1.0 / 0.5922


def salt_1_1(molar=0.1):
    return IonSpecies.from_molar([molar, molar], [1.0, -1.0])


class TestLJ:
    def test_zero_crossing_at_sigma(self):
        assert lj_potential(2.52, 0.486, 2.52) == pytest.approx(0.0, abs=1e-14)

    def test_minimum_at_splice_radius(self):
        r_min = 2.0 ** (1.0 / 6.0) * 2.52
        assert lj_potential(r_min, 0.486, 2.52) == pytest.approx(-0.486, rel=1e-12)

    def test_hand_evaluated_value(self):
        # 4*0.486*((2.52/3)^12 - (2.52/3)^6), frozen
        assert lj_potential(3.0, 0.486, 2.52) == pytest.approx(
            -0.44301373661991916, rel=1e-13
        )

    def test_singularity(self):
        with pytest.raises(ValueError):
            lj_potential(0.0, 0.486, 2.52)


class TestWCA:
    def test_flat_inside(self):
        assert wca_attractive(0.5 * 2.52, 0.486, 2.52) == pytest.approx(-0.486)

    def test_continuous_at_splice(self):
        r_min = 2.0 ** (1.0 / 6.0) * 2.52
        left = wca_attractive(r_min * (1 - 1e-9), 0.486, 2.52)
        right = wca_attractive(r_min * (1 + 1e-9), 0.486, 2.52)
        assert left == pytest.approx(-0.486)
        assert right == pytest.approx(-0.486, rel=1e-6)

    def test_tail_decays_from_below(self):
        vals = wca_attractive(np.array([5.0, 10.0, 50.0]), 0.486, 2.52)
        assert np.all(vals < 0)
        assert np.all(np.diff(vals) > 0)
        assert vals[-1] == pytest.approx(0.0, abs=1e-6)

    def test_never_positive(self, rng):
        r = rng.uniform(0.05, 20.0, size=500)
        assert np.all(wca_attractive(r, 0.486, 2.52) <= 0.0)
        beyond = r[r >= 2.0 ** (1 / 6) * 2.52]
        assert np.allclose(
            wca_attractive(beyond, 0.486, 2.52), lj_potential(beyond, 0.486, 2.52)
        )


class TestVdwField:
    def test_far_node_single_atom_tail(self):
        mol = Molecule([[0.0, 0.0, 0.0]], [0.0], [1.8], ["c"])
        lj = LJParams({"c": (0.486, 2.52)})
        grid = build_grid(mol, h=1.0, pad=6.0)
        field = vdw_field(mol, lj, grid)
        x, y, z = grid.axes()
        i = int(np.argmin(np.abs(x - 7.0)))
        j = int(np.argmin(np.abs(y)))
        k = int(np.argmin(np.abs(z)))
        r = np.sqrt(x[i] ** 2 + y[j] ** 2 + z[k] ** 2)
        assert field.values[i, j, k] == pytest.approx(
            lj_potential(r, 0.486, 2.52), rel=1e-12
        )

    def test_superposition_two_identical_atoms(self):
        mol = Molecule(
            [[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]], [0, 0], [1.8, 1.8], ["c", "c"]
        )
        lj = LJParams({"c": (0.486, 2.52)})
        grid = build_grid(mol, h=0.5, pad=5.0)
        field = vdw_field(mol, lj, grid)
        x, y, z = grid.axes()
        j = int(np.argmin(np.abs(y - 3.0)))
        i = int(np.argmin(np.abs(x)))
        k = int(np.argmin(np.abs(z)))
        r = np.sqrt(x[i] ** 2 + y[j] ** 2 + z[k] ** 2 + 1.0)  # wrong on purpose? no:
        r = np.sqrt(1.0 + y[j] ** 2)  # equidistant node on the bisector plane
        assert field.values[i, j, k] == pytest.approx(
            2.0 * wca_attractive(r, 0.486, 2.52), rel=1e-12
        )

    def test_three_atom_bruteforce(self, rng):
        mol = Molecule(
            [[-0.9, 0.1, 0.2], [1.1, -0.4, 0.0], [0.2, 1.3, -0.8]],
            [0, 0, 0],
            [1.5, 1.6, 1.4],
            ["c", "h", "c"],
        )
        lj = LJParams({"c": (0.486, 2.52), "h": (0.1, 1.9)})
        grid = build_grid(mol, h=0.8, pad=3.0)
        field = vdw_field(mol, lj, grid)
        x, y, z = grid.axes()
        for _ in range(40):
            i = rng.integers(0, grid.dims[0])
            j = rng.integers(0, grid.dims[1])
            k = rng.integers(0, grid.dims[2])
            pos = np.array([x[i], y[j], z[k]])
            expected = 0.0
            for a in range(3):
                r = max(np.linalg.norm(pos - mol.positions[a]), grid.h / 2)
                eps, sigma = lj.table[mol.tags[a]]
                expected += wca_attractive(r, eps, sigma)
            assert field.values[i, j, k] == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_unknown_tag_is_config_error(self):
        mol = Molecule([[0.0, 0.0, 0.0]], [0.0], [1.8], ["zz"])
        lj = LJParams({"c": (0.486, 2.52)})
        grid = build_grid(mol, h=1.0, pad=3.0)
        with pytest.raises(ConfigError, match="zz"):
            vdw_field(mol, lj, grid)


class TestIonicB:
    def test_zero_at_zero(self):
        assert ionic_B(0.0, salt_1_1()) == pytest.approx(0.0, abs=1e-18)

    def test_zero_without_ions(self):
        assert ionic_B(3.0, None) == 0.0
        empty = IonSpecies([0.0, 0.0], [1.0, -1.0])
        assert ionic_B(1.5, empty) == 0.0
        assert ionic_B_prime(1.5, empty) == 0.0

    def test_symmetric_salt_even(self):
        ions = salt_1_1()
        for s in (0.1, 0.7, 2.0):
            assert ionic_B(s, ions) == pytest.approx(ionic_B(-s, ions), rel=1e-12)

    def test_direct_two_term_sum(self):
        # frozen from the two-species summation at s=0.7, 0.1 M 1:1 salt
        assert ionic_B(0.7, salt_1_1(0.1)) == pytest.approx(
            5.5907351878763335e-05, rel=1e-12
        )

    def test_prime_neutral_at_zero(self):
        assert ionic_B_prime(0.0, salt_1_1()) == pytest.approx(0.0, abs=1e-18)

    def test_prime_matches_finite_differences(self, rng):
        ions = salt_1_1(0.2)
        for s in rng.uniform(-1.5, 1.5, size=20):
            d = 1e-5
            fd = (ionic_B(s + d, ions) - ionic_B(s - d, ions)) / (2 * d)
            assert ionic_B_prime(s, ions) == pytest.approx(fd, rel=1e-6, abs=1e-14)

    def test_second_matches_finite_differences(self, rng):
        ions = salt_1_1(0.2)
        for s in rng.uniform(-1.0, 1.0, size=10):
            d = 1e-5
            fd = (ionic_B_prime(s + d, ions) - ionic_B_prime(s - d, ions)) / (2 * d)
            assert ionic_B_second(s, ions) == pytest.approx(fd, rel=1e-6, abs=1e-14)
        assert ionic_B_second(0.4, ions) > 0.0

    def test_convexity_random_pairs(self, rng):
        ions = salt_1_1(0.15)
        a = rng.uniform(-2, 2, size=200)
        b = rng.uniform(-2, 2, size=200)
        mid = ionic_B((a + b) / 2, ions)
        avg = (ionic_B(a, ions) + ionic_B(b, ions)) / 2
        assert np.all(mid <= avg + 1e-18)

    def test_nonnegative_min_at_zero(self, rng):
        ions = salt_1_1(0.15)
        s = rng.uniform(-3, 3, size=300)
        assert np.all(ionic_B(s, ions) >= 0.0)

    def test_clamp_warns_but_stays_finite(self):
        ions = salt_1_1(0.1)
        with pytest.warns(RuntimeWarning):
            val = ionic_B(1e6, ions)
        assert np.isfinite(val)

    def test_neutrality_enforced(self):
        with pytest.raises(ConfigError):
            IonSpecies.from_molar([0.1, 0.1], [1.0, -2.0])


class TestDielectric:
    def test_endpoints(self, toy_params):
        assert dielectric_of_u(1.0, toy_params) == pytest.approx(1.0)
        assert dielectric_of_u(0.0, toy_params) == pytest.approx(80.0)

    def test_midpoint_frozen_value(self):
        params = PhysicalParams(n_exponent=40)  # p = 80/79
        assert dielectric_of_u(0.5, params) == pytest.approx(40.84505760634501, rel=1e-12)

    def test_clamps_out_of_range_u(self, toy_params):
        assert dielectric_of_u(1.7, toy_params) == pytest.approx(1.0)
        assert dielectric_of_u(-0.4, toy_params) == pytest.approx(80.0)

    def test_range_and_monotonicity(self, toy_params, rng):
        u = np.sort(rng.uniform(0, 1, size=100))
        eps = dielectric_of_u(u, toy_params)
        assert np.all(eps >= toy_params.eps_m - 1e-12)
        assert np.all(eps <= toy_params.eps_s + 1e-12)
        assert np.all(np.diff(eps) <= 1e-12)


class TestPhysicalParams:
    def test_p_in_range(self):
        for n in (2, 5, 40):
            p = PhysicalParams(n_exponent=n).p
            assert 1.0 < p < 1.5

    def test_rejects_bad_exponents(self):
        with pytest.raises(ConfigError):
            PhysicalParams(n_exponent=1)
        with pytest.raises(ConfigError):
            PhysicalParams(q_k=1.5)  # above eps_s/(eps_s-eps_m)
        with pytest.raises(ConfigError):
            PhysicalParams(q_k=1.0)
        with pytest.raises(ConfigError):
            PhysicalParams(eps_m=80.0, eps_s=80.0)

    def test_debye_kappa_zero_without_salt(self):
        assert debye_kappa(PhysicalParams()) == 0.0

    def test_debye_kappa_value(self):
        params = PhysicalParams(ions=salt_1_1(0.1))
        # kappa^2 = 4 pi k_e beta sum c q^2 / eps_s, evaluated directly
        c = 0.1 * 6.02214e-4
        expected = np.sqrt(4 * np.pi * 332.0716 * BETA * 2 * c / 80.0)
        assert debye_kappa(params) == pytest.approx(expected, rel=1e-12)
