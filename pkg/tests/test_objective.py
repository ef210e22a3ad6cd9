import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import central_difference, ksupport_gauge, prox_grid_1d
from sparsesvm.objective import (
    PenaltySpec,
    UnsupportedProxError,
    Variant,
    hinge_loss,
    hinge_subgradient,
    ksupport_norm,
    ksupport_r,
    ksupport_subgradient,
    multiclass_hinge,
    penalty_value,
    prox_map,
    soft_threshold,
)

vectors = arrays(np.float64, st.integers(1, 8), elements=st.floats(-50, 50))


# --- hinge -------------------------------------------------------------------------------


@pytest.mark.parametrize("y, f, expected", [(1, 0.5, 0.5), (1, 2.0, 0.0), (-1, 1.0, 2.0)])
def test_hinge_loss_examples(y, f, expected):
    assert hinge_loss(y, f) == expected


def test_hinge_loss_vectorized():
    np.testing.assert_array_equal(hinge_loss([1, -1], [0.0, 0.0]), [1.0, 1.0])


def test_hinge_subgradient_branches():
    g0, g = hinge_subgradient(1, [1.0, 0.0], 0.0, [0.0, 0.0])
    assert g0 == -1.0
    np.testing.assert_array_equal(g, [-1.0, 0.0])
    g0, g = hinge_subgradient(1, [1.0, 0.0], 1.5, [0.0, 0.0])
    assert g0 == 0.0 and not g.any()
    # exactly at the kink
    g0, g = hinge_subgradient(-1, [2.0], -1.5, [0.25])
    assert g0 == 0.0 and not g.any()


@given(st.sampled_from([-1, 1]), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_hinge_lipschitz(y, f1, f2):
    assert abs(hinge_loss(y, f1) - hinge_loss(y, f2)) <= abs(f1 - f2) + 1e-9


@pytest.mark.parametrize(
    "f, y, expected", [((2, 0.5, -1), 1, 0.0), ((0.2, 0.5, -1), 1, 1.3), ((1, 0), 1, 0.0)]
)
def test_multiclass_hinge_examples(f, y, expected):
    assert multiclass_hinge(f, y) == pytest.approx(expected, abs=1e-15)


def test_multiclass_hinge_errors():
    with pytest.raises(ValueError):
        multiclass_hinge([1.0], 1)
    with pytest.raises(ValueError):
        multiclass_hinge([1.0, 2.0], 3)


@given(st.floats(-5, 5))
def test_multiclass_two_class_consistency(g):
    # f = (g, -g): the gap for class 1 is 2g, matching the binary margin of 2g
    assert (multiclass_hinge([g, -g], 1) == 0.0) == (hinge_loss(1, 2 * g) == 0.0)
    assert multiclass_hinge([g, -g], 1) == pytest.approx(hinge_loss(1, 2 * g))


# --- PenaltySpec ---------------------------------------------------------------------------


def test_penalty_spec_validation():
    with pytest.raises(ValueError):
        PenaltySpec.l1(-1.0)
    with pytest.raises(ValueError):
        PenaltySpec.ksupport(1.0, 0)
    with pytest.raises(ValueError):
        PenaltySpec(Variant.L2, lam=1.0, k=2)
    with pytest.raises(ValueError):
        PenaltySpec.ksupport(1.0, 5).check_dimension(4)
    assert PenaltySpec.elastic_net(1, 2).params() == {"lambda1": 1.0, "lambda2": 2.0}
    assert PenaltySpec.ksupport(0.5, 3).describe() == "ksupport(lambda=0.5, k=3)"


@pytest.mark.parametrize(
    "spec, beta, expected",
    [
        (PenaltySpec.l1(2), (3, -1), 8.0),
        (PenaltySpec.elastic_net(1, 2), (1, 1), 4.0),
        (PenaltySpec.ksupport(1, 1), (3, 1), 4.0),
        (PenaltySpec.l2(2), (3, 4), 25.0),
    ],
)
def test_penalty_value_examples(spec, beta, expected):
    assert penalty_value(spec, beta) == pytest.approx(expected)


# --- k-support norm ------------------------------------------------------------------------


def test_ksupport_examples():
    assert ksupport_norm([3, 1], 1) == pytest.approx(4.0)
    assert ksupport_norm([3, 4, 0], 3) == pytest.approx(5.0)
    assert ksupport_norm([2, 2, 1], 2) == pytest.approx(5 / math.sqrt(2), abs=1e-12)
    assert ksupport_r([2, 2, 1], 2) == 1
    assert ksupport_norm(np.zeros(4), 2) == 0.0
    with pytest.raises(ValueError):
        ksupport_norm([1.0, 2.0], 3)


def test_ksupport_matches_gauge_oracle(rng):
    # frozen oracle value for the worked example
    assert ksupport_gauge([2, 2, 1], 2) == pytest.approx(5 / math.sqrt(2), abs=1e-6)
    for _ in range(12):
        d = int(rng.integers(2, 6))
        beta = rng.normal(size=d) * rng.uniform(0.1, 5)
        for k in range(1, d + 1):
            assert ksupport_norm(beta, k) == pytest.approx(ksupport_gauge(beta, k), rel=1e-5, abs=1e-7)


def _bracket_holds(z, k, r):
    tail = z[k - r - 1:].sum() / (r + 1)
    upper = math.inf if k - r - 2 < 0 else z[k - r - 2]
    return upper > tail >= z[k - r - 1]


def test_ksupport_extremes_and_order(rng):
    for _ in range(1000):
        d = int(rng.integers(1, 10))
        beta = rng.normal(size=d) * 10 ** rng.uniform(-3, 3)
        l1, l2 = np.abs(beta).sum(), np.linalg.norm(beta)
        assert abs(ksupport_norm(beta, 1) - l1) <= 1e-10 * max(1, l1)
        assert abs(ksupport_norm(beta, d) - l2) <= 1e-10 * max(1, l2)
        vals = [ksupport_norm(beta, k) for k in range(1, d + 1)]
        assert all(a >= b - 1e-10 * max(1, l1) for a, b in zip(vals, vals[1:]))
        assert l2 - 1e-10 * max(1, l2) <= min(vals) and max(vals) <= l1 + 1e-10 * max(1, l1)


def test_ksupport_unique_bracket(rng):
    for _ in range(1000):
        d = int(rng.integers(1, 10))
        z = np.sort(np.abs(rng.normal(size=d)) + 1e-3)[::-1]
        k = int(rng.integers(1, d + 1))
        hits = [r for r in range(k) if _bracket_holds(z, k, r)]
        assert hits == [ksupport_r(z, k)]


def test_ksupport_norm_axioms(rng):
    for _ in range(1000):
        d = int(rng.integers(1, 10))
        k = int(rng.integers(1, d + 1))
        a, b = rng.normal(size=d) * 3, rng.normal(size=d) * 3
        c = float(rng.normal() * 4)
        na, nb = ksupport_norm(a, k), ksupport_norm(b, k)
        assert abs(ksupport_norm(c * a, k) - abs(c) * na) <= 1e-10 * max(1, abs(c) * na)
        assert ksupport_norm(a + b, k) <= na + nb + 1e-10 * max(1, na + nb)


def test_ksupport_subgradient_special_cases(rng):
    beta = rng.normal(size=5)
    np.testing.assert_allclose(ksupport_subgradient(beta, 5), beta / np.linalg.norm(beta))
    np.testing.assert_allclose(ksupport_subgradient(beta, 1), np.sign(beta))
    np.testing.assert_array_equal(ksupport_subgradient(np.zeros(3), 2), 0.0)


def test_ksupport_subgradient_finite_differences(rng):
    for beta in ([2.0, 2.0, 1.0], [2.0, 2.1, 1.0], [-1.3, 0.4, 2.2, 0.9]):
        beta = np.array(beta)
        for k in range(1, beta.size + 1):
            for _ in range(5):
                x = beta + 1e-3 * rng.normal(size=beta.size)
                fd = central_difference(lambda v: ksupport_norm(v, k), x)
                np.testing.assert_allclose(ksupport_subgradient(x, k), fd, atol=1e-5)


@given(vectors, st.integers(1, 8))
def test_ksupport_subgradient_is_dual_unit(beta, k):
    # a subgradient g of a norm satisfies <g, beta> = ||beta|| and has dual norm <= 1
    if k > beta.size:
        return
    g = ksupport_subgradient(beta, k)
    n = ksupport_norm(beta, k)
    assert g @ beta == pytest.approx(n, rel=1e-9, abs=1e-9)
    # dual norm: l2 norm of the k largest magnitudes
    top = np.sort(np.abs(g))[::-1][:k]
    assert np.linalg.norm(top) <= 1 + 1e-9


# --- prox ----------------------------------------------------------------------------------


def test_prox_examples():
    np.testing.assert_allclose(prox_map(PenaltySpec.l1(1), [2, -0.5], 1), [1, 0])
    np.testing.assert_allclose(prox_map(PenaltySpec.l2(1), [2], 1), [1])
    np.testing.assert_allclose(prox_map(PenaltySpec.elastic_net(1, 1), [3], 1), [1])
    np.testing.assert_allclose(soft_threshold([-3, 0.2], 1), [-2, 0])


def test_prox_elastic_net_grid_oracle():
    def en(u):
        return np.abs(u) + 0.5 * u * u

    assert prox_grid_1d(en, 3.0, 1.0) == pytest.approx(1.0, abs=1e-5)


def test_prox_errors():
    with pytest.raises(UnsupportedProxError):
        prox_map(PenaltySpec.ksupport(1, 1), [1.0], 1.0)
    with pytest.raises(ValueError):
        prox_map(PenaltySpec.l1(1), [1.0], 0.0)


@pytest.mark.parametrize(
    "spec", [PenaltySpec.l1(0.7), PenaltySpec.l2(1.3), PenaltySpec.elastic_net(0.4, 2.0)]
)
def test_prox_beats_random_candidates(spec, rng):
    for _ in range(5):
        v = rng.normal(size=3) * 2
        step = float(rng.uniform(0.1, 2))
        u = prox_map(spec, v, step)

        def obj(w):
            return 0.5 * np.sum((w - v) ** 2, axis=-1) + step * np.array(
                [penalty_value(spec, row) for row in np.atleast_2d(w)]
            )

        cand = u + rng.normal(size=(10_000, 3)) * rng.uniform(0.001, 2, size=(10_000, 1))
        assert obj(u)[0] <= obj(cand).min() + 1e-12


@pytest.mark.parametrize(
    "spec", [PenaltySpec.l1(0.7), PenaltySpec.l2(1.3), PenaltySpec.elastic_net(0.4, 2.0)]
)
@pytest.mark.parametrize("v", [-2.5, -0.3, 0.0, 0.6, 4.0])
def test_prox_1d_grid_oracle(spec, v):
    u = prox_map(spec, [v], 0.8)[0]
    ref = prox_grid_1d(lambda t: _pen1d(spec, t), v, 0.8)
    assert u == pytest.approx(ref, abs=2e-5)


def _pen1d(spec, t):
    if spec.variant is Variant.L2:
        return 0.5 * spec.lam * t * t
    if spec.variant is Variant.L1:
        return spec.lam * np.abs(t)
    return spec.lam1 * np.abs(t) + 0.5 * spec.lam2 * t * t


def test_penalty_subgradient_inequality(rng):
    # subgradient inequality p(b') >= p(b) + g'(b' - b) for all four penalties
    from sparsesvm.objective import penalty_subgradient

    specs = [PenaltySpec.l2(1.2), PenaltySpec.l1(0.5), PenaltySpec.elastic_net(0.3, 0.9), PenaltySpec.ksupport(0.8, 2)]
    for spec, _ in itertools.product(specs, range(50)):
        b, b2 = rng.normal(size=4), rng.normal(size=4)
        g = penalty_subgradient(spec, b)
        assert penalty_value(spec, b2) >= penalty_value(spec, b) + g @ (b2 - b) - 1e-10
