import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import loglog_slope, make_pair
from fixedrank.manifold import (
    FixedRankPoint,
    LowRankSum,
    TangentVector,
    embed,
    embed_tangent,
    random_point,
    tangent_project,
    truncated_svd,
)
from fixedrank.retractions import (
    RetractionKind,
    SingularCoreError,
    inverse_retract_orth,
    retract,
    retract_kls,
    retract_orth,
    retract_svd,
    second_order_defect,
)

KINDS = list(RetractionKind)
TS = np.logspace(-4, -1, 10)


def test_kind_properties():
    assert all(k.second_order for k in KINDS)
    assert [k for k in KINDS if k.has_inverse] == [RetractionKind.ORTH]
    assert [k for k in KINDS if k.extended] == [RetractionKind.SVD]


@pytest.mark.parametrize("kind", KINDS)
def test_zero_step_is_identity(kind, pair):
    X, _ = pair
    Y = retract(kind, X, TangentVector.zeros(X.dims))
    assert np.linalg.norm(embed(Y) - embed(X)) <= 1e-13


@pytest.mark.parametrize("kind", KINDS)
def test_first_order_remainder(kind, pair):
    X, Z = pair
    errs = [np.linalg.norm(embed(retract(kind, X, t * Z)) - embed(X) - t * embed_tangent(X, Z)) for t in TS]
    assert loglog_slope(TS, errs) >= 1.9


@pytest.mark.parametrize("kind", KINDS)
def test_outputs_are_valid_points(kind, pair):
    X, Z = pair
    Y = retract(kind, X, 0.05 * Z)
    Y.check()
    s = np.diag(Y.S)
    np.testing.assert_allclose(Y.S, np.diag(s), atol=0)


@pytest.mark.parametrize("kind", [RetractionKind.SVD, RetractionKind.KSL, RetractionKind.KLS])
def test_second_order_defect_slope(kind, pair):
    X, Z = pair
    ts = np.logspace(-3, -1, 8)
    slope = loglog_slope(ts, [second_order_defect(kind, X, Z, t) for t in ts])
    assert 2.8 <= slope


def test_orth_defect_vanishes_identically(pair):
    # the orthographic residual is normal, so its tangential part is roundoff
    X, Z = pair
    ts = np.logspace(-3, -1, 8)
    defects = [second_order_defect(RetractionKind.ORTH, X, Z, t) for t in ts]
    assert max(defects) < 1e-13
    assert loglog_slope(ts, defects) is None


def test_second_order_defect_zero_direction(pair):
    X, _ = pair
    assert second_order_defect(RetractionKind.KSL, X, TangentVector.zeros(X.dims), 0.1) < 1e-14
    with pytest.raises(ValueError):
        second_order_defect(RetractionKind.KSL, X, TangentVector.zeros(X.dims), 0.0)


class TestSVD:
    def test_matches_dense_metric_projection(self):
        X, Z = make_pair(m=7, n=6, r=2, seed=3)
        Z = 0.3 * Z
        Y = retract_svd(X, Z)
        ref = truncated_svd(embed(X) + embed_tangent(X, Z), 2)
        assert np.linalg.norm(embed(Y) - embed(ref)) <= 1e-11

    def test_lowranksum_argument(self, pair, rng):
        X, _ = pair
        Z = LowRankSum(0.1 * rng.standard_normal((X.shape[0], 4)), rng.standard_normal((X.shape[1], 4)))
        Y = retract(RetractionKind.SVD, X, Z)
        ref = truncated_svd(embed(X) + Z.to_dense(), X.rank)
        assert np.linalg.norm(embed(Y) - embed(ref)) <= 1e-11

    def test_non_extended_kinds_reject_lowranksum(self, pair):
        X, _ = pair
        with pytest.raises(TypeError):
            retract(RetractionKind.KSL, X, LowRankSum.from_point(X))


class TestProjectorSplitting:
    def test_kls_core_identity(self, pair):
        X, Z = pair
        Z = 0.2 * Z
        Y = retract_kls(X, Z, renormalize=False)
        dense = Y.U.T @ (embed(X) + embed_tangent(X, Z)) @ Y.V
        np.testing.assert_allclose(Y.S, dense, atol=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_orth_kls_core_difference(self, seed):
        X, Z = make_pair(seed=seed)
        Z = 0.2 * Z
        Yo = retract_orth(X, Z, renormalize=False)
        Yk = retract_kls(X, Z, renormalize=False)
        np.testing.assert_array_equal(Yo.U, Yk.U)
        rhs = Yo.U.T @ Z.Up @ np.linalg.solve(X.S + Z.M, Z.Vp.T @ Yo.V)
        np.testing.assert_allclose(Yo.S - Yk.S, rhs, atol=1e-12)

    @pytest.mark.parametrize("a,b", [("ksl", "kls"), ("ksl", "orth"), ("kls", "orth")])
    def test_pairwise_third_order_closeness(self, a, b, pair):
        X, Z = pair
        ts = np.logspace(-3, -1, 8)
        d = [np.linalg.norm(embed(retract(a, X, t * Z)) - embed(retract(b, X, t * Z))) for t in ts]
        assert loglog_slope(ts, d) >= 2.8

    def test_ksl_rank_deficient_step(self):
        X = FixedRankPoint(np.eye(4)[:, :2], np.diag([1.0, 0.5]), np.eye(4)[:, :2])
        Z = TangentVector(np.diag([-1.0, 0.0]), np.zeros((4, 2)), np.zeros((4, 2)))
        with pytest.raises(np.linalg.LinAlgError):
            retract(RetractionKind.KSL, X, Z)


class TestOrthographic:
    def test_residual_is_normal(self, pair):
        X, Z = pair
        Z = 0.3 * Z
        Y = retract_orth(X, Z)
        res = embed(Y) - embed(X) - embed_tangent(X, Z)
        assert tangent_project(X, res).norm() <= 1e-11

    def test_singular_core_rejected(self):
        X = FixedRankPoint(np.eye(4)[:, :2], np.diag([1.0, 0.5]), np.eye(4)[:, :2])
        Z = TangentVector(np.diag([0.0, -0.5]), np.zeros((4, 2)), np.zeros((4, 2)))
        with pytest.raises(SingularCoreError):
            retract_orth(X, Z)

    def test_inverse_of_self_is_zero(self, pair):
        X, _ = pair
        assert inverse_retract_orth(X, X).norm() < 1e-14

    def test_inverse_matches_dense_projection(self, pair):
        X, Z = pair
        Y = random_point(X.dims, [1.0, 0.5, 0.2], seed=99)
        T = inverse_retract_orth(X, Y)
        ref = tangent_project(X, embed(Y) - embed(X))
        assert (T - ref).norm() < 1e-13

    @pytest.mark.parametrize("seed", range(5))
    def test_round_trip(self, seed):
        X, Z = make_pair(seed=seed)
        sr = X.singular_values()[-1]
        for scale in (1e-3, 0.05, 0.1):
            Zs = (scale * sr) * Z
            back = inverse_retract_orth(X, retract_orth(X, Zs))
            assert (back - Zs).norm() <= 1e-11

    def test_forward_round_trip(self, pair):
        X, Z = pair
        Y = retract(RetractionKind.SVD, X, 0.05 * Z)
        Y2 = retract_orth(X, inverse_retract_orth(X, Y))
        assert np.linalg.norm(embed(Y2) - embed(Y)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), frac=st.floats(1e-4, 0.1))
def test_orth_round_trip_property(seed, frac):
    X, Z = make_pair(m=8, n=7, r=2, seed=seed)
    Zs = (frac * X.singular_values()[-1]) * Z
    assert (inverse_retract_orth(X, retract_orth(X, Zs)) - Zs).norm() <= 1e-11
