import math

import numpy as np
import pytest

from sflgame import (
    CutCostModel,
    NoParticipation,
    NonConvergence,
    ZeroAggregate,
    best_response,
    br_fixed_point,
    client_utility,
    closed_form_ne,
    marginal_utility,
)
from sflgame.followers import FollowerProblem

from conftest import make_client, make_het_clients, make_params, random_follower

CANONICAL = CutCostModel(0.3779, -0.212, 0.1098, 0.4711)


def direct_problem(h, psi, r, caps=None, i_fixed=None, offsets=None):
    n = len(h)
    return FollowerProblem(
        r=r, l_c=3, h=h, psi=psi,
        i_fixed=i_fixed if i_fixed is not None else np.zeros(n),
        caps=caps if caps is not None else np.full(n, 1e12),
        offsets=offsets if offsets is not None else np.zeros(n),
    )


@pytest.fixture
def homog_problem(cost_model):
    params = make_params()
    clients = [make_client(offset=1e6)] * 5
    return FollowerProblem.from_model(params, clients, cost_model, 200.0, 3)


@pytest.fixture
def het_problem(cost_model):
    params = make_params()
    return FollowerProblem.from_model(params, make_het_clients(), cost_model, 200.0, 3)


class TestClientUtility:
    def test_zero_contribution_pays_fixed_cost(self, homog_problem):
        d = np.array([0.0, 100.0, 100.0, 100.0, 100.0])
        expected = -homog_problem.i_fixed[0] + homog_problem.offsets[0]
        assert client_utility(homog_problem, d, 0) == pytest.approx(expected, rel=1e-12)

    def test_symmetric_split(self):
        problem = direct_problem(h=[2.0, 2.0], psi=[3.0, 3.0], r=10.0,
                                 i_fixed=np.array([1.0, 1.0]),
                                 offsets=np.array([5.0, 5.0]))
        for x in (1.0, 7.5, 42.0):
            u = client_utility(problem, np.array([x, x]), 0)
            assert u == pytest.approx(3.0 * 10.0 / 2 - x * 2.0 - 1.0 + 5.0, rel=1e-12)

    def test_hand_arithmetic(self, homog_problem):
        # five equal contributions of 4700: each share is psi*r/5
        d = np.full(5, 4700.0)
        expected = (2800.0 * 200.0 / 5 - 4700.0 * homog_problem.h[0]
                    - homog_problem.i_fixed[0] + 1e6)
        assert client_utility(homog_problem, d, 2) == pytest.approx(expected, rel=1e-12)

    def test_zero_aggregate(self, homog_problem):
        with pytest.raises(ZeroAggregate):
            client_utility(homog_problem, np.zeros(5), 0)


class TestMarginalUtility:
    def test_matches_finite_difference(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            problem = random_follower(rng, n=int(rng.integers(2, 8)))
            d = rng.uniform(1.0, 1e3, problem.n)
            n = int(rng.integers(problem.n))
            step = 1e-4 * (1.0 + d[n])
            up, down = d.copy(), d.copy()
            up[n] += step
            down[n] -= step
            fd = (client_utility(problem, up, n) - client_utility(problem, down, n)) / (2 * step)
            analytic = marginal_utility(problem, d, n)
            assert analytic == pytest.approx(fd, rel=1e-6, abs=1e-9)

    def test_alone_pays_marginal_cost(self, homog_problem):
        d = np.array([500.0, 0.0, 0.0, 0.0, 0.0])
        assert marginal_utility(homog_problem, d, 0) == pytest.approx(
            -homog_problem.h[0], rel=1e-12)

    def test_vanishes_at_equilibrium(self, het_problem):
        ne = closed_form_ne(het_problem)
        for n in range(het_problem.n):
            assert abs(marginal_utility(het_problem, ne.d_star, n)) < 1e-9


class TestBestResponse:
    def test_drop_out_branch(self):
        problem = direct_problem(h=[1.0, 1.0], psi=[1.0, 1.0], r=1.0)
        assert best_response(problem, 2.0, 0) == 0.0

    def test_interior_branch(self):
        problem = direct_problem(h=[1.0, 1.0], psi=[4.0, 4.0], r=1.0)
        assert best_response(problem, 1.0, 0) == pytest.approx(1.0, rel=1e-12)

    def test_cap_branch(self):
        problem = direct_problem(h=[1.0, 1.0], psi=[1e9, 1e9], r=1.0,
                                 caps=np.array([100.0, 100.0]))
        assert best_response(problem, 1.0, 0) == 100.0

    def test_maximizes_utility(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            problem = random_follower(rng, n=3, cap=1e4)
            others = rng.uniform(0.5, 2e3)
            br = best_response(problem, others, 0)
            grid = np.linspace(0.0, float(problem.caps[0]), 400)

            def utility(x):
                return client_utility(problem, np.array([x, others, 0.0]), 0)

            best_grid = max(utility(x) for x in grid)
            assert utility(br) >= best_grid - 1e-6 * (1 + abs(best_grid))


class TestClosedFormNE:
    def test_reproduces_reported_contributions(self, cost_model):
        # homogeneous five clients, rounds*epochs=100, low cut layer
        params = make_params()
        clients = [make_client()] * 5
        targets = {40: 900.0, 200: 4700.0, 400: 9300.0}
        for r, target in targets.items():
            problem = FollowerProblem.from_model(params, clients, cost_model, float(r), 3)
            ne = closed_form_ne(problem)
            assert ne.method == "closed-form"
            for d in ne.d_star:
                assert abs(d - target) <= 0.10 * target

    def test_two_homogeneous_clients(self):
        problem = direct_problem(h=[1.0, 1.0], psi=[1.0, 1.0], r=4.0)
        ne = closed_form_ne(problem)
        np.testing.assert_allclose(ne.d_star, [1.0, 1.0], rtol=1e-12)

    def test_matches_fixed_point_on_heterogeneous(self, het_problem):
        ne = closed_form_ne(het_problem)
        fp = br_fixed_point(het_problem, tol=1e-9)
        np.testing.assert_allclose(fp.d_star, ne.d_star, rtol=1e-6)
        assert ne.eta == pytest.approx(fp.eta, rel=1e-6)

    def test_aggregate_identity(self, het_problem):
        ne = closed_form_ne(het_problem)
        expected = (het_problem.n - 1) * het_problem.r / float(
            (het_problem.h / het_problem.psi).sum())
        assert ne.eta == pytest.approx(expected, rel=1e-9)

    def test_linear_in_incentive_while_unclamped(self, cost_model):
        params = make_params()
        clients = make_het_clients(dataset_cap=1e12)
        lo = closed_form_ne(FollowerProblem.from_model(params, clients, cost_model, 100.0, 3))
        hi = closed_form_ne(FollowerProblem.from_model(params, clients, cost_model, 300.0, 3))
        np.testing.assert_allclose(hi.d_star, 3.0 * lo.d_star, rtol=1e-12)

    def test_higher_weight_contributes_more_at_equal_speed(self, het_problem):
        ne = closed_form_ne(het_problem)
        # clients 2..4 share the same CPU speed with rising incentive weight
        assert ne.d_star[2] < ne.d_star[3] < ne.d_star[4]

    def test_offset_never_moves_the_equilibrium(self, cost_model):
        params = make_params()
        plain = FollowerProblem.from_model(params, make_het_clients(offset=0.0),
                                           cost_model, 200.0, 3)
        shifted = FollowerProblem.from_model(params, make_het_clients(offset=1e6),
                                             cost_model, 200.0, 3)
        a, b = closed_form_ne(plain), closed_form_ne(shifted)
        assert np.array_equal(a.d_star, b.d_star)
        np.testing.assert_allclose(b.utilities - a.utilities, 1e6, rtol=1e-9)

    def test_single_client_rejected(self):
        with pytest.raises(ValueError):
            direct_problem(h=[1.0], psi=[1.0], r=1.0)


class TestDropOutAndCaps:
    def test_weak_client_drops_to_zero(self):
        # one client far costlier than the rest: its closed-form entry goes negative
        problem = direct_problem(h=[1.0, 1.0, 100.0], psi=[1.0, 1.0, 1.0], r=10.0)
        ne = closed_form_ne(problem)
        assert ne.active == ("interior", "interior", "zero")
        assert ne.d_star[2] == 0.0
        reduced = direct_problem(h=[1.0, 1.0], psi=[1.0, 1.0], r=10.0)
        np.testing.assert_allclose(ne.d_star[:2], closed_form_ne(reduced).d_star, rtol=1e-12)

    def test_fixed_point_agrees_on_drop_out(self):
        problem = direct_problem(h=[1.0, 1.0, 100.0], psi=[1.0, 1.0, 1.0], r=10.0)
        ne = closed_form_ne(problem)
        fp = br_fixed_point(problem)
        np.testing.assert_allclose(fp.d_star, ne.d_star, rtol=1e-6, atol=1e-9)

    def test_dropped_client_cannot_gain_by_entering(self):
        problem = direct_problem(h=[1.0, 1.0, 100.0], psi=[1.0, 1.0, 1.0], r=10.0)
        ne = closed_form_ne(problem)
        u_out = client_utility(problem, ne.d_star, 2)
        for d2 in np.linspace(1e-6, 10.0, 200):
            d = ne.d_star.copy()
            d[2] = d2
            assert client_utility(problem, d, 2) <= u_out + 1e-9

    def test_cap_falls_back_to_fixed_point(self):
        problem = direct_problem(h=[1.0, 1.0], psi=[100.0, 100.0], r=10.0,
                                 caps=np.array([50.0, 1e12]))
        ne = closed_form_ne(problem)
        assert ne.method == "fixed-point"
        assert ne.active[0] == "cap"
        assert ne.d_star[0] == 50.0
        # the uncapped client best-responds to the cap
        assert ne.d_star[1] == pytest.approx(best_response(problem, 50.0, 1), abs=1e-7)

    def test_capped_profile_is_equilibrium(self):
        problem = direct_problem(h=[1.0, 2.0, 1.5], psi=[100.0, 80.0, 90.0], r=10.0,
                                 caps=np.array([120.0, 90.0, 2000.0]))
        ne = closed_form_ne(problem)
        for n in range(3):
            others = ne.eta - ne.d_star[n]
            assert ne.d_star[n] == pytest.approx(best_response(problem, others, n), abs=1e-7)


class TestFixedPoint:
    def test_two_homogeneous(self):
        problem = direct_problem(h=[2.0, 2.0], psi=[8.0, 8.0], r=4.0)
        fp = br_fixed_point(problem)
        np.testing.assert_allclose(fp.d_star, [4.0 * 8.0 / (4 * 2.0)] * 2, rtol=1e-9)
        assert fp.method == "fixed-point"

    def test_random_agreement(self):
        rng = np.random.default_rng(404)
        for _ in range(50):
            problem = random_follower(rng)
            ne = closed_form_ne(problem)
            fp = br_fixed_point(problem)
            np.testing.assert_allclose(
                fp.d_star, ne.d_star,
                rtol=1e-6, atol=1e-6 * max(1.0, float(ne.d_star.max())))

    def test_returned_profile_is_best_response(self):
        rng = np.random.default_rng(77)
        problem = random_follower(rng, n=6)
        fp = br_fixed_point(problem, tol=1e-10)
        for n in range(problem.n):
            others = fp.eta - fp.d_star[n]
            assert fp.d_star[n] == pytest.approx(best_response(problem, others, n),
                                                 abs=1e-6)

    def test_non_convergence_reports_iterate(self):
        # one sweep cannot reach the equilibrium from the interior start
        problem = direct_problem(h=[1.0, 2.0], psi=[100.0, 130.0], r=10.0)
        with pytest.raises(NonConvergence) as excinfo:
            br_fixed_point(problem, tol=1e-12, max_iters=1)
        assert excinfo.value.last_iterate is not None
        assert excinfo.value.residual > 0

    def test_hard_asymmetry_converges_via_restart(self):
        # gains spread ~100x: plain best-response dynamics cycle here
        problem = direct_problem(h=[15.47239, 0.1239026], psi=[571.579, 9323.731],
                                 r=144.2676544121069)
        ne = closed_form_ne(problem)
        fp = br_fixed_point(problem)
        np.testing.assert_allclose(fp.d_star, ne.d_star, rtol=1e-6)

    def test_bad_tol(self, homog_problem):
        with pytest.raises(ValueError):
            br_fixed_point(homog_problem, tol=0.0)


class TestConcavity:
    def test_second_differences_negative(self):
        rng = np.random.default_rng(314)
        for _ in range(200):
            problem = random_follower(rng, n=int(rng.integers(2, 7)))
            d = rng.uniform(0.5, 1e3, problem.n)
            n = int(rng.integers(problem.n))
            step = rng.uniform(1e-2, min(10.0, d[n]))
            u0 = client_utility(problem, d, n)
            up, down = d.copy(), d.copy()
            up[n] += step
            down[n] -= step
            second = client_utility(problem, up, n) - 2 * u0 + client_utility(problem, down, n)
            assert second < 0.0


class TestNoProfitableDeviation:
    def test_grid_scan(self):
        rng = np.random.default_rng(555)
        for _ in range(20):
            problem = random_follower(rng, n=int(rng.integers(2, 7)), cap=2e4)
            ne = closed_form_ne(problem)
            for n in range(problem.n):
                u_star = client_utility(problem, ne.d_star, n)
                grid = np.linspace(0.0, float(problem.caps[n]), 200)
                for x in grid:
                    d = ne.d_star.copy()
                    d[n] = x
                    if d.sum() <= 0:
                        continue
                    assert client_utility(problem, d, n) <= u_star + 1e-6 * (1 + abs(u_star))
