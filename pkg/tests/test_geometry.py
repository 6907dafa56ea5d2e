"""Poincare-ball geometry: exactness, inverses, isometries, aggregators."""

import numpy as np
import pytest

from hypersyn import autodiff as ad
from hypersyn.autodiff import Tensor
from hypersyn.geometry import (
    Curvature,
    GeometryError,
    KleinVector,
    PoincareVector,
    einstein_midpoint,
    exp_map,
    exp_map0,
    frechet_mean,
    from_klein,
    from_lorentz,
    hyp_distance,
    log_map,
    log_map0,
    lorentz_distance,
    mobius_add,
    mobius_matmul,
    mobius_pointwise,
    ops,
    to_klein,
    to_lorentz,
)

from util import check_gradients, finite_difference_grad, random_ball_points


def ball(coords, kappa=-1.0):
    return PoincareVector(np.asarray(coords, dtype=np.float64), Curvature(kappa))


class TestCurvature:
    def test_rejects_nonnegative(self):
        with pytest.raises(GeometryError):
            Curvature(0.0)
        with pytest.raises(GeometryError):
            Curvature(1.0)

    def test_radius(self):
        assert Curvature(-4.0).radius == 0.5


class TestMobiusAdd:
    def test_identity_cases(self):
        rng = np.random.default_rng(0)
        for x in random_ball_points(rng, 20, 4):
            p = ball(x)
            zero = PoincareVector.origin(4)
            np.testing.assert_allclose(mobius_add(p, zero).coords, x, atol=1e-12)
            np.testing.assert_allclose(mobius_add(zero, p).coords, x, atol=1e-12)

    def test_inverse_case(self):
        rng = np.random.default_rng(1)
        for x in random_ball_points(rng, 20, 5):
            out = mobius_add(ball(x), ball(-x))
            np.testing.assert_allclose(out.coords, np.zeros(5), atol=1e-12)

    def test_one_dimensional_hand_value(self):
        # in 1-D the formula collapses to (x + y) / (1 + x y)
        out = mobius_add(ball([0.3]), ball([0.4]))
        np.testing.assert_allclose(out.coords, [0.625], atol=1e-15)

    def test_not_commutative_in_general(self):
        a = ball([0.5, 0.1, 0.0])
        b = ball([-0.2, 0.4, 0.3])
        assert not np.allclose(mobius_add(a, b).coords, mobius_add(b, a).coords)

    def test_small_vector_euclidean_limit(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            x = rng.uniform(-1e-4, 1e-4, size=3)
            y = rng.uniform(-1e-4, 1e-4, size=3)
            out = mobius_add(ball(x), ball(y)).coords
            assert np.linalg.norm(out - (x + y)) <= 1e-7

    def test_mismatch_errors(self):
        with pytest.raises(GeometryError):
            mobius_add(ball([0.1, 0.2]), ball([0.1, 0.2, 0.3]))
        with pytest.raises(GeometryError):
            mobius_add(ball([0.1], -1.0), ball([0.1], -2.0))


class TestMobiusMatmul:
    def test_identity_matrix(self):
        x = ball([0.2, -0.3, 0.1])
        np.testing.assert_allclose(mobius_matmul(np.eye(3), x).coords, x.coords, atol=1e-12)

    def test_zero_matrix_maps_to_origin(self):
        x = ball([0.2, -0.3, 0.1])
        np.testing.assert_allclose(mobius_matmul(np.zeros((3, 3)), x).coords, 0.0, atol=1e-15)

    def test_matches_explicit_composition(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            w = rng.normal(size=(4, 3))
            x = ball(random_ball_points(rng, 1, 3)[0])
            got = mobius_matmul(w, x).coords
            oracle = ops.expmap0(w @ ops.logmap0(x.coords))
            np.testing.assert_allclose(got, oracle, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(GeometryError):
            mobius_matmul(np.eye(4), ball([0.1, 0.2]))


class TestMobiusPointwise:
    def test_origin_absorbs(self):
        x = PoincareVector.origin(3)
        y = ball([0.3, -0.2, 0.5])
        np.testing.assert_allclose(mobius_pointwise(x, y).coords, 0.0, atol=1e-15)

    def test_commutative(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            a = ball(random_ball_points(rng, 1, 4)[0])
            b = ball(random_ball_points(rng, 1, 4)[0])
            np.testing.assert_allclose(
                mobius_pointwise(a, b).coords, mobius_pointwise(b, a).coords, atol=1e-15
            )

    def test_matches_explicit_composition(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            a = random_ball_points(rng, 1, 4)[0]
            b = random_ball_points(rng, 1, 4)[0]
            got = mobius_pointwise(ball(a), ball(b)).coords
            oracle = ops.expmap0(ops.logmap0(a) * ops.logmap0(b))
            np.testing.assert_allclose(got, oracle, atol=1e-12)


class TestExpLog:
    def test_zero_vector_fixed_point(self):
        x = ball([0.3, -0.1, 0.2])
        np.testing.assert_allclose(exp_map(x, np.zeros(3)).coords, x.coords, atol=1e-12)

    def test_origin_roundtrip(self):
        v = np.array([0.1, 0.2])
        back = log_map0(exp_map0(v))
        np.testing.assert_allclose(back, v, atol=1e-9)

    def test_roundtrip_at_arbitrary_bases(self):
        # 1000 random pairs with base radii up to 0.9 and ||v|| up to 5.
        # The tangent length is budgeted so the image stays below the
        # mandated 1e-5 ball margin: beyond it, float64 tanh saturation
        # plus the projection destroy the information the log map needs.
        rng = np.random.default_rng(6)
        bases = random_ball_points(rng, 1000, 4, max_norm=0.9)
        vs = rng.normal(size=(1000, 4))
        vs /= np.linalg.norm(vs, axis=-1, keepdims=True)
        radii = np.linalg.norm(bases, axis=-1)
        budget = (5.5 - np.arctanh(radii)) * (1.0 - radii**2)
        vs *= rng.uniform(0, np.minimum(5.0, budget))[:, None]
        worst = 0.0
        for b, v in zip(bases, vs):
            base = ball(b)
            y = exp_map(base, v)
            back = log_map(base, y)
            worst = max(worst, float(np.max(np.abs(back - v))))
            again = exp_map(base, back)
            worst = max(worst, float(np.max(np.abs(again.coords - y.coords))))
        assert worst < 1e-9, worst

    def test_distance_from_origin_consistency(self):
        # d(0, exp_0(v)) must equal the distance formula evaluated directly
        rng = np.random.default_rng(7)
        for _ in range(20):
            v = rng.normal(size=3)
            p = exp_map0(v)
            direct = 2.0 * np.arctanh(np.linalg.norm(p.coords))
            np.testing.assert_allclose(hyp_distance(PoincareVector.origin(3), p), direct, atol=1e-12)

    def test_roundtrip_other_curvature(self):
        rng = np.random.default_rng(8)
        curv = Curvature(-0.49)
        for b in random_ball_points(rng, 50, 3, max_norm=0.6, c=0.49):
            base = PoincareVector(b, curv)
            v = rng.normal(size=3)
            np.testing.assert_allclose(log_map(base, exp_map(base, v)), v, atol=1e-9)


class TestDistance:
    def test_metric_axioms_on_random_triples(self):
        rng = np.random.default_rng(9)
        pts = random_ball_points(rng, 3 * 200, 4).reshape(200, 3, 4)
        for x, y, z in pts:
            dxy = hyp_distance(ball(x), ball(y))
            dyx = hyp_distance(ball(y), ball(x))
            assert abs(dxy - dyx) < 1e-12
            assert hyp_distance(ball(x), ball(x)) == 0.0
            assert dxy > 0
            dxz = hyp_distance(ball(x), ball(z))
            dyz = hyp_distance(ball(y), ball(z))
            assert dxz <= dxy + dyz + 1e-9

    def test_ray_through_origin_closed_form(self):
        for r in (0.1, 0.5, 0.9):
            p = ball([r, 0.0, 0.0])
            np.testing.assert_allclose(
                hyp_distance(PoincareVector.origin(3), p), 2 * np.arctanh(r), atol=1e-12
            )


class TestModelConversions:
    def test_origin_fixed_points(self):
        o = PoincareVector.origin(3)
        np.testing.assert_allclose(to_klein(o).coords, np.zeros(3), atol=1e-15)
        np.testing.assert_allclose(to_lorentz(o).coords, [1.0, 0.0, 0.0, 0.0], atol=1e-15)
        curv = Curvature(-4.0)
        o2 = PoincareVector.origin(2, curv)
        np.testing.assert_allclose(to_lorentz(o2).coords, [0.5, 0.0, 0.0], atol=1e-15)

    def test_roundtrips_are_identity(self):
        rng = np.random.default_rng(10)
        for x in random_ball_points(rng, 100, 4):
            p = ball(x)
            np.testing.assert_allclose(from_klein(to_klein(p)).coords, x, atol=1e-9)
            np.testing.assert_allclose(from_lorentz(to_lorentz(p)).coords, x, atol=1e-9)

    def test_pairwise_distances_preserved(self):
        rng = np.random.default_rng(11)
        pts = random_ball_points(rng, 2 * 100, 4).reshape(100, 2, 4)
        for x, y in pts:
            d_p = hyp_distance(ball(x), ball(y))
            d_l = lorentz_distance(to_lorentz(ball(x)), to_lorentz(ball(y)))
            assert abs(d_p - d_l) < 1e-9
            from hypersyn.geometry import klein_distance

            d_k = klein_distance(to_klein(ball(x)), to_klein(ball(y)))
            assert abs(d_p - d_k) < 1e-9

    def test_distance_preserved_other_curvature(self):
        rng = np.random.default_rng(12)
        curv = Curvature(-2.25)
        pts = random_ball_points(rng, 40, 3, max_norm=0.8, c=2.25).reshape(20, 2, 3)
        for x, y in pts:
            a, b = PoincareVector(x, curv), PoincareVector(y, curv)
            d_p = hyp_distance(a, b)
            d_l = lorentz_distance(to_lorentz(a), to_lorentz(b))
            assert abs(d_p - d_l) < 1e-9


class TestEinsteinMidpoint:
    def test_identical_points(self):
        k = KleinVector(np.array([0.3, 0.2]))
        out = einstein_midpoint([k, k, k], [0.2, 5.0, 1.0])
        np.testing.assert_allclose(out.coords, k.coords, atol=1e-12)

    def test_antipodal_equal_weights(self):
        k = KleinVector(np.array([0.4, -0.1, 0.2]))
        k_neg = KleinVector(-k.coords)
        out = einstein_midpoint([k, k_neg], [1.0, 1.0])
        np.testing.assert_allclose(out.coords, np.zeros(3), atol=1e-12)

    def test_matches_extended_precision_oracle(self):
        from mpmath import mp, mpf, sqrt as mpsqrt

        mp.dps = 50
        rng = np.random.default_rng(13)
        pts = random_ball_points(rng, 3, 3, max_norm=0.9)
        weights = np.array([1.0, 2.0, 3.0])

        num = [mpf(0)] * 3
        den = mpf(0)
        for p, w in zip(pts, weights):
            gamma = 1 / mpsqrt(1 - sum(mpf(v) ** 2 for v in p))
            den += mpf(w) * gamma
            for i in range(3):
                num[i] += mpf(w) * gamma * mpf(p[i])
        oracle = np.array([float(n / den) for n in num])

        out = einstein_midpoint([KleinVector(p) for p in pts], weights)
        np.testing.assert_allclose(out.coords, oracle, atol=1e-12)

    def test_permutation_and_scale_invariance(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            n = rng.integers(2, 6)
            pts = [KleinVector(p) for p in random_ball_points(rng, n, 3)]
            w = rng.uniform(0.1, 2.0, size=n)
            base = einstein_midpoint(pts, w).coords
            perm = rng.permutation(n)
            shuffled = einstein_midpoint([pts[i] for i in perm], w[perm]).coords
            np.testing.assert_allclose(shuffled, base, atol=1e-12)
            scaled = einstein_midpoint(pts, 37.5 * w).coords
            np.testing.assert_allclose(scaled, base, atol=1e-12)

    def test_contract_violations(self):
        with pytest.raises(GeometryError):
            einstein_midpoint([], [])
        k = KleinVector(np.array([0.1, 0.1]))
        with pytest.raises(GeometryError):
            einstein_midpoint([k, k], [0.0, 0.0])


class TestFrechetMean:
    def test_identical_points(self):
        p = ball([0.2, 0.4])
        out = frechet_mean([p, p, p])
        np.testing.assert_allclose(out.coords, p.coords, atol=1e-9)

    def test_two_point_geodesic_midpoint(self):
        rng = np.random.default_rng(15)
        for _ in range(10):
            x = ball(random_ball_points(rng, 1, 3)[0])
            y = ball(random_ball_points(rng, 1, 3)[0])
            m = frechet_mean([x, y], [1.0, 1.0])
            dx = hyp_distance(m, x)
            dy = hyp_distance(m, y)
            dxy = hyp_distance(x, y)
            assert abs(dx - dy) < 1e-6
            assert abs(dx - dxy / 2) < 1e-6

    def test_objective_gradient_vanishes_at_mean(self):
        rng = np.random.default_rng(16)
        pts = random_ball_points(rng, 5, 3, max_norm=0.6)
        weights = rng.uniform(0.5, 2.0, size=5)
        mean = frechet_mean([ball(p) for p in pts], weights)

        def objective(m):
            return sum(
                w * ops.distance(m, p) ** 2 for w, p in zip(weights / weights.sum(), pts)
            )

        grad = finite_difference_grad(lambda m: objective(m), [mean.coords.copy()])[0]
        assert np.linalg.norm(grad) < 1e-5

    def test_empty_rejected(self):
        with pytest.raises(GeometryError):
            frechet_mean([])


class TestBallContainment:
    def test_all_ops_stay_inside(self):
        rng = np.random.default_rng(17)
        c = 1.0
        for _ in range(50):
            a = random_ball_points(rng, 1, 4, max_norm=0.999)[0]
            b = random_ball_points(rng, 1, 4, max_norm=0.999)[0]
            outputs = [
                ops.mobius_add(a, b),
                ops.expmap0(rng.normal(size=4) * 10),
                ops.mobius_matvec(rng.normal(size=(4, 4)), a),
                ops.mobius_pointwise(a, b),
                ops.from_klein(ops.to_klein(a)),
                ops.from_lorentz(ops.to_lorentz(b)),
            ]
            for out in outputs:
                assert np.linalg.norm(out) * np.sqrt(c) <= 1.0 - ops.BALL_EPS + 1e-12

    def test_projection_gradient_is_identity_inside_zero_outside(self):
        inside = Tensor(np.array([0.1, 0.2]), requires_grad=True)
        ad.sum(ops.project_to_ball(inside)).backward()
        np.testing.assert_array_equal(inside.grad, [1.0, 1.0])

        outside = Tensor(np.array([3.0, 4.0]), requires_grad=True)
        out = ops.project_to_ball(outside)
        assert np.linalg.norm(out.data) <= 1.0 - ops.BALL_EPS + 1e-12
        ad.sum(out).backward()
        np.testing.assert_array_equal(outside.grad, [0.0, 0.0])


class TestGeometryGradients:
    """Every differentiable geometry op against the finite-difference oracle."""

    def test_mobius_add(self):
        rng = np.random.default_rng(18)
        a = random_ball_points(rng, 2, 3, max_norm=0.6)
        b = random_ball_points(rng, 2, 3, max_norm=0.6)
        check_gradients(lambda x, y: ad.sum(ops.mobius_add(x, y) ** 2), [a, b])

    def test_exp_log_chain(self):
        rng = np.random.default_rng(19)
        base = random_ball_points(rng, 1, 3, max_norm=0.4)[0]
        v = rng.normal(size=3) * 0.5
        check_gradients(
            lambda bb, vv: ad.sum(ops.logmap(bb, ops.expmap(bb, vv)) ** 2), [base, v]
        )

    def test_distance(self):
        rng = np.random.default_rng(20)
        a = random_ball_points(rng, 2, 3, max_norm=0.6)
        b = random_ball_points(rng, 2, 3, max_norm=0.6)
        check_gradients(lambda x, y: ad.sum(ops.distance(x, y)), [a, b])

    def test_conversions_and_midpoint(self):
        rng = np.random.default_rng(21)
        pts = random_ball_points(rng, 4, 3, max_norm=0.6)
        w = rng.uniform(0.5, 1.5, size=4)
        check_gradients(lambda p: ad.sum(ops.poincare_midpoint(p, w) ** 2), [pts])

    def test_lorentz_distance(self):
        rng = np.random.default_rng(22)
        a = random_ball_points(rng, 1, 3, max_norm=0.6)
        b = random_ball_points(rng, 1, 3, max_norm=0.6)
        check_gradients(
            lambda x, y: ad.sum(ops.lorentz_distance(ops.to_lorentz(x), ops.to_lorentz(y))),
            [a, b],
        )

    def test_frechet_mean_unrolled(self):
        rng = np.random.default_rng(23)
        pts = random_ball_points(rng, 3, 2, max_norm=0.5)
        w = np.array([1.0, 2.0, 0.5])
        check_gradients(lambda p: ad.sum(ops.frechet_mean(p, w)[0] ** 2), [pts])

    def test_trainable_curvature(self):
        rng = np.random.default_rng(24)
        a = random_ball_points(rng, 2, 3, max_norm=0.5)
        kappa = np.array(-1.3)

        def loss(k):
            return ad.sum(ops.expmap0(ops.logmap0(a, k) * 0.5, k) ** 2)

        check_gradients(loss, [kappa])
