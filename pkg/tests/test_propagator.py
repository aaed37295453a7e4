import math

import numpy as np
import pytest

from weakgordon import measure as me
from weakgordon import propagator as pr
from weakgordon.errors import DomainError

from conftest import random_measure


def random_potential(rng, window=(-3, 3), max_atoms=6, densities=True, unif_cap=5.0):
    return random_measure(
        rng,
        window=window,
        max_atoms=max_atoms,
        max_segments=2 if densities else 0,
        density_degree=0 if densities else 0,
        max_weight=1.0,
        unif_cap=unif_cap,
    )


class TestTransferMatrix:
    def test_free_particle(self):
        T = pr.transfer_matrix(me.zero_measure((-1, 1)), 0.0, 0.0, 0.7)
        assert np.allclose(T.entries, [[1, 0.7], [0, 1]])
        assert T.det_defect == 0.0

    def test_negative_energy_cosh(self):
        T = pr.transfer_matrix(me.zero_measure((-1, 2)), -1.0, 0.0, 1.0)
        ref = [[math.cosh(1), math.sinh(1)], [math.sinh(1), math.cosh(1)]]
        assert np.allclose(T.entries, ref, atol=1e-14)

    def test_atom_factor(self):
        w = 1.7
        T = pr.transfer_matrix(me.dirac(0.0, w, (-0.25, 0.25)), 0.0, -1e-9, 1e-9)
        assert np.allclose(T.entries, [[1, 0], [w, 1]], atol=1e-8)

    def test_inverse_relation(self, rng):
        for _ in range(15):
            mu = random_potential(rng)
            z = complex(rng.uniform(-2, 2), rng.uniform(-1, 1))
            s, t = sorted(rng.uniform(-2.8, 2.8, 2))
            Tf = pr.transfer_matrix(mu, z, s, t)
            Tb = pr.transfer_matrix(mu, z, t, s)
            assert np.max(np.abs(Tf.entries @ Tb.entries - np.eye(2))) < 1e-9

    def test_composition(self, rng):
        for _ in range(15):
            mu = random_potential(rng)
            z = complex(rng.uniform(-2, 2), rng.uniform(-1, 1))
            r, s, t = sorted(rng.uniform(-2.8, 2.8, 3))
            Ta = pr.transfer_matrix(mu, z, r, s)
            Tb = pr.transfer_matrix(mu, z, s, t)
            Tc = pr.transfer_matrix(mu, z, r, t)
            scale = max(1.0, float(np.max(np.abs(Tc.entries))))
            assert (
                np.max(np.abs(Tb.entries @ Ta.entries - Tc.entries)) / scale < 1e-9
            )

    def test_det_certificate(self, rng):
        for _ in range(15):
            mu = random_potential(rng)
            z = complex(rng.uniform(-4, 4), rng.uniform(-1, 1))
            T = pr.transfer_matrix(mu, z, -2.5, 2.5)
            assert T.det_defect <= 1e-10 * 5.0

    def test_dirichlet_neumann_columns(self):
        mu = me.zero_measure((-1, 2))
        uN, duN, uD, duD = pr.dirichlet_neumann(mu, 0.0, 0.0, 1.3)
        assert (uN, duN, uD, duD) == (1.0, 0.0, 1.3, 1.0)

    def test_dirichlet_antisymmetry(self, rng):
        for _ in range(10):
            mu = random_potential(rng)
            z = complex(rng.uniform(-2, 2), 0)
            s, t = rng.uniform(-2.5, 2.5, 2)
            _, _, uD_ts, _ = pr.dirichlet_neumann(mu, z, float(s), float(t))
            _, _, uD_st, _ = pr.dirichlet_neumann(mu, z, float(t), float(s))
            assert abs(uD_ts + uD_st) < 1e-9 * max(1.0, abs(uD_ts))


class TestPropagate:
    def test_constant_solution(self):
        tr = pr.propagate(me.zero_measure((-2, 2)), 0.0, 0.0, (1.0, 0.0), np.linspace(-1.5, 1.5, 7))
        assert np.allclose(tr.u, 1.0)
        assert np.allclose(tr.du, 0.0)

    def test_dirac_kink(self):
        # the mollified oracle: propagate through mollify(w delta_0, n) -> kink
        w = 0.8
        mu = me.dirac(0.0, w, (-2, 2))
        grid = np.linspace(-1.0, 1.0, 9)
        tr = pr.propagate(mu, 0.0, -1.0, (1.0, 0.0), grid)
        for t, u in zip(tr.grid, tr.u):
            expect = 1.0 if t <= 0 else 1.0 + w * t
            assert abs(u - expect) < 1e-12
        mol = me.mollify(mu, 64)
        trm = pr.propagate(mol, 0.0, -1.0, (1.0, 0.0), grid)
        assert np.max(np.abs(trm.u - tr.u)) < 0.05

    def test_jump_log_exactness(self, rng):
        for _ in range(10):
            mu = random_potential(rng, densities=False)
            grid = np.linspace(-2.5, 2.5, 11)
            tr = pr.propagate(mu, 0.3, 0.0, (1.0, 0.5), grid)
            atom_map = dict(mu.atoms)
            for x, w, jump in tr.jump_log:
                assert atom_map[x] == w
                pts = np.array(sorted({x, 0.0}))
                fine = pr.propagate(mu, 0.3, 0.0, (1.0, 0.5), pts)
                u_x = fine.u[list(fine.grid).index(x)]
                assert abs(jump - w * u_x) < 1e-12 * max(1.0, abs(jump))

    def test_mollification_consistency(self, rng):
        # propagate(mollify(mu, n)) is Cauchy toward propagate(mu)
        mu = random_potential(np.random.default_rng(5), window=(-3, 3), max_atoms=4)
        grid = np.linspace(-2.0, 2.0, 9)
        ref = pr.propagate(mu, -0.5, 0.0, (1.0, 0.2), grid)
        errs = []
        for n in (8, 32, 128):
            mol = me.mollify(mu, n)
            tr = pr.propagate(mol, -0.5, 0.0, (1.0, 0.2), grid)
            errs.append(float(np.max(np.abs(tr.u - ref.u))))
        assert errs[2] < errs[1] < errs[0]
        assert errs[2] < 0.02


class TestGrowthBounds:
    def test_gronwall_formula(self):
        mu = me.zero_measure((-2, 2))
        assert pr.gronwall_bound(mu, 1.5, 2.0) == pytest.approx(2.0 * math.exp(2.5))

    def test_gronwall_dominates(self, rng):
        for _ in range(25):
            mu = random_potential(rng)
            z = 0.0
            grid = np.linspace(-2.5, 2.5, 21)
            tr = pr.propagate(mu, z, 0.0, (1.0, -0.3), grid)
            init = abs(1.0) + abs(-0.3)
            for t, u, du in zip(tr.grid, tr.u, tr.du):
                assert abs(u) + abs(du) <= pr.gronwall_bound(mu, t, init) + 1e-9

    def test_sharp_growth_formula(self):
        lam = me.lebesgue((-2, 2))
        got = pr.sharp_growth_bound(lam, 1.0, 1.0, 1.0)
        assert got == pytest.approx(math.sqrt(2.0) * math.exp(1.5))

    def test_sharp_growth_dominates(self, rng):
        for _ in range(25):
            mu = random_potential(rng)
            w = math.sqrt(me.norm_unif(mu))
            grid = np.linspace(-2.5, 2.5, 21)
            tr = pr.propagate(mu, 0.0, 0.0, (0.7, 0.4), grid)
            for t, u, du in zip(tr.grid, tr.u, tr.du):
                measured = math.sqrt(w * w * abs(u) ** 2 + abs(du) ** 2)
                assert measured <= pr.sharp_growth_bound(mu, t, 0.7, 0.4) + 1e-9

    def test_sharp_growth_zero_measure_affine(self):
        mu = me.zero_measure((-2, 2))
        assert pr.sharp_growth_bound(mu, 5.0, 3.0, 0.25) == 0.25

    def test_derivative_chain(self, rng):
        count = 0
        for _ in range(40):
            mu = random_potential(rng, window=(-2, 2), max_atoms=4)
            grid = np.sort(
                np.concatenate(
                    [np.linspace(-1.9, 1.9, 1201), [x for x, _ in mu.atoms]]
                )
            )
            tr = pr.propagate(mu, 0.0, 0.0, (1.0, 0.1), grid)
            chain = pr.derivative_sup_bound(mu, tr, (-0.5, 0.5))
            assert all(chain.holds), chain
            count += 1
        assert count == 40

    def test_cosh_closed_form_chain(self):
        # mu = lambda, z = 0 on [0, 1]: u = cosh, ||u'||_inf = sinh 1 <= 3 cosh 1
        lam = me.lebesgue((-0.5, 1.5))
        grid = np.linspace(0.0, 1.0, 2001)
        tr = pr.propagate(lam, 0.0, 0.0, (1.0, 0.0), grid)
        chain = pr.derivative_sup_bound(lam, tr, (0.0, 1.0))
        assert chain.sup_du == pytest.approx(math.sinh(1.0), abs=1e-6)
        assert chain.m_mu == 3.0
        assert all(chain.holds)


class TestStability:
    def test_identical_measures(self, rng):
        mu = random_potential(rng)
        b = pr.stability_bound(mu, mu, 0.0, -2, 2, u2_sup=1.0)
        assert b(1.0) == 0.0

    def test_dominates_difference(self, rng):
        for _ in range(10):
            mu2 = random_potential(rng, window=(-4, 4), max_atoms=4)
            pert = random_measure(
                rng, window=(-4, 4), max_atoms=2, max_segments=0, max_weight=0.05
            )
            mu1 = me.add_measures(mu2, pert)
            z = 0.0
            grid = np.linspace(-2.0, 2.0, 17)
            sd = pr.solution_difference(mu1, mu2, z, (1.0, 0.0), grid)
            u2_sup = float(
                np.max(np.abs(pr.propagate(mu2, z, 0.0, sd.u2_initial, grid).u))
            )
            bound = pr.stability_bound(mu1, mu2, z, -2, 2, u2_sup, tol=1e-4)
            for t, v in zip(sd.grid, sd.v):
                assert abs(v) <= bound(t) + 1e-9

    def test_default_exponent_admissible(self, rng):
        # |d1 u_D(t+, s)| <= e^omega e^{omega |t - s|}
        for _ in range(10):
            mu = random_potential(rng)
            omega = me.norm_unif(mu) + 1.0
            s, t = rng.uniform(-2.5, 2.5, 2)
            _, _, _, duD = pr.dirichlet_neumann(mu, 0.0, float(s), float(t))
            assert abs(duD) <= math.exp(omega) * math.exp(omega * abs(t - s)) + 1e-9

    def test_interval_validation(self, rng):
        mu = random_potential(rng)
        with pytest.raises(DomainError):
            pr.stability_bound(mu, mu, 0.0, 0, 2, 1.0)


class TestSolutionDifference:
    def test_reconstruction_matches(self, rng):
        for _ in range(10):
            mu1 = random_potential(rng, window=(-4, 4), max_atoms=4)
            mu2 = random_potential(rng, window=(-4, 4), max_atoms=4)
            z = complex(rng.uniform(-1, 1), rng.uniform(-0.5, 0.5))
            grid = np.linspace(-3.0, 3.0, 13)
            sd = pr.solution_difference(mu1, mu2, z, (1.0, 0.3), grid)
            scale = max(1.0, float(np.max(np.abs(sd.v))))
            assert sd.max_mismatch / scale < 1e-6

    def test_matched_initial_condition(self, rng):
        mu1 = random_potential(rng, window=(-4, 4))
        mu2 = random_potential(rng, window=(-4, 4))
        grid = np.linspace(-2.0, 2.0, 9)
        sd = pr.solution_difference(mu1, mu2, 0.0, (1.0, 0.5), grid)
        c = sd.c_matching
        assert sd.u2_initial == (1.0 + 0j, 0.5 + c)
        i0 = int(np.argmin(np.abs(grid)))
        assert abs(sd.v[i0]) < 1e-12

    def test_duhamel_identity_off_zero(self, rng):
        for _ in range(8):
            mu1 = random_potential(rng, window=(-4, 4), max_atoms=3)
            mu2 = random_potential(rng, window=(-4, 4), max_atoms=3)
            z = 0.2
            grid = np.linspace(-3.0, 3.0, 25)
            tr1 = pr.propagate(mu1, z, 0.0, (1.0, 0.1), grid)
            tr2 = pr.propagate(mu2, z, 0.0, (0.8, -0.2), grid)
            s = float(grid[rng.integers(0, len(grid))])
            t = float(grid[rng.integers(0, len(grid))])
            val = pr.variation_of_constants_value(mu1, mu2, z, tr1, tr2, s, t)
            i_t = int(np.argmin(np.abs(grid - t)))
            direct = tr1.u[i_t] - tr2.u[i_t]
            assert abs(val - direct) <= 1e-6 * max(1.0, abs(direct))
