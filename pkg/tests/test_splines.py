import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laminate_iga.splines import (
    DomainError,
    KnotVector,
    TensorProductSpace,
    basis_funs_ders,
    element_spans,
    eval_basis,
    uniform_knot_vector,
    uniform_refine,
)
from oracles import all_basis, cox_de_boor, cox_de_boor_derivative


@st.composite
def knot_vectors(draw, max_degree=5):
    p = draw(st.integers(1, max_degree))
    interior = draw(st.lists(st.floats(0.01, 0.99), max_size=6))
    knots = [0.0] * (p + 1) + sorted(interior) + [1.0] * (p + 1)
    # cap multiplicity at p so the space stays continuous
    for x in set(interior):
        if knots.count(x) > p:
            return KnotVector(np.array([0.0] * (p + 1) + [1.0] * (p + 1)), p)
    return KnotVector(np.array(knots), p)


class TestKnotVector:
    def test_clamped_required(self):
        with pytest.raises(ValueError):
            KnotVector(np.array([0, 0.2, 1, 1]), 1)

    def test_decreasing_rejected(self):
        with pytest.raises(ValueError):
            KnotVector(np.array([0, 0, 0.6, 0.4, 1, 1]), 1)

    def test_counts(self):
        kv = KnotVector(np.array([0, 0, 0, 0.5, 1, 1, 1.0]), 2)
        assert kv.n == 4
        assert kv.n_elements == 2

    def test_equality_by_value(self):
        assert uniform_knot_vector(2, 3) == uniform_knot_vector(2, 3)
        assert uniform_knot_vector(2, 3) != uniform_knot_vector(2, 4)


class TestEvalBasis:
    def test_linear_midpoint(self):
        b = eval_basis(KnotVector(np.array([0, 0, 1, 1.0]), 1), 0.5)
        np.testing.assert_allclose(b.values, [0.5, 0.5])
        np.testing.assert_allclose(b.derivs, [-1.0, 1.0])

    def test_clamped_endpoint(self):
        b = eval_basis(KnotVector(np.array([0, 0, 0, 1, 1, 1.0]), 2), 0.0)
        np.testing.assert_allclose(b.values, [1.0, 0.0, 0.0])
        assert b.first_active == 0

    def test_cubic_against_recursion(self):
        knots = np.array([0, 0, 0, 0, 0.5, 1, 1, 1, 1.0])
        b = eval_basis(KnotVector(knots, 3), 0.3)
        ref = [cox_de_boor(knots, 3, b.first_active + a, 0.3) for a in range(4)]
        dref = [cox_de_boor_derivative(knots, 3, b.first_active + a, 0.3) for a in range(4)]
        np.testing.assert_allclose(b.values, ref, atol=1e-15)
        np.testing.assert_allclose(b.derivs, dref, atol=1e-14)

    def test_right_end_belongs_to_last_span(self):
        kv = uniform_knot_vector(2, 3)
        b = eval_basis(kv, 1.0)
        assert b.first_active == kv.n - 3
        np.testing.assert_allclose(b.values, [0, 0, 1.0])

    @pytest.mark.parametrize("x", [-1e-9, 1.0 + 1e-9, 2.0])
    def test_domain_error(self, x):
        with pytest.raises(DomainError):
            eval_basis(uniform_knot_vector(2, 2), x)

    def test_interior_knot_goes_right(self):
        b = eval_basis(KnotVector(np.array([0, 0, 0.5, 1, 1.0]), 1), 0.5)
        assert b.first_active == 1
        np.testing.assert_allclose(b.values, [1.0, 0.0])


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(kv=knot_vectors(), seed=st.integers(0, 2**31))
    def test_partition_of_unity(self, kv, seed):
        x = np.random.default_rng(seed).uniform(0, 1, 1000)
        _, vals, ders = basis_funs_ders(kv, x)
        assert np.max(np.abs(vals.sum(axis=1) - 1.0)) < 1e-13
        assert np.max(np.abs(ders.sum(axis=1))) < 1e-10

    @settings(max_examples=40, deadline=None)
    @given(kv=knot_vectors(), x=st.floats(0.001, 0.999))
    def test_derivative_matches_central_difference(self, kv, x):
        # stay off knots so the FD stencil sees one polynomial piece
        h = 1e-7
        if np.min(np.abs(kv.knots - x)) < 10 * h:
            return
        first, _, ders = basis_funs_ders(kv, np.array([x]))
        n = kv.n
        plus = np.zeros(n)
        minus = np.zeros(n)
        fp, vp, _ = basis_funs_ders(kv, np.array([x + h]))
        fm, vm, _ = basis_funs_ders(kv, np.array([x - h]))
        plus[fp[0] : fp[0] + kv.p + 1] = vp[0]
        minus[fm[0] : fm[0] + kv.p + 1] = vm[0]
        fd = (plus - minus) / (2 * h)
        np.testing.assert_allclose(fd[first[0] : first[0] + kv.p + 1], ders[0], atol=1e-6 * max(1, np.abs(ders).max()))

    @settings(max_examples=30, deadline=None)
    @given(kv=knot_vectors(max_degree=4), x=st.floats(0.0, 1.0))
    def test_local_support_against_dense_oracle(self, kv, x):
        first, vals, _ = basis_funs_ders(kv, np.array([x]))
        dense = all_basis(kv.knots, kv.p, x)
        active = np.zeros(kv.n, bool)
        active[first[0] : first[0] + kv.p + 1] = True
        np.testing.assert_allclose(dense[active], vals[0], atol=1e-13)
        assert np.all(np.abs(dense[~active]) < 1e-14)


class TestElementSpans:
    def test_two_linear_spans(self):
        spans = element_spans(KnotVector(np.array([0, 0, 0.5, 1, 1.0]), 1))
        assert [(s.start, s.end) for s in spans] == [(0.0, 0.5), (0.5, 1.0)]
        assert [list(s.functions) for s in spans] == [[0, 1], [1, 2]]

    def test_single_quadratic_span(self):
        spans = element_spans(KnotVector(np.array([0, 0, 0, 1, 1, 1.0]), 2))
        assert len(spans) == 1
        assert list(spans[0].functions) == [0, 1, 2]

    def test_four_quadratic_spans(self):
        knots = np.array([0, 0, 0, 0.25, 0.5, 0.75, 1, 1, 1])
        spans = element_spans(KnotVector(knots, 2))
        assert len(spans) == 4
        for k, s in enumerate(spans):
            assert list(s.functions) == [k, k + 1, k + 2]
            assert s.end - s.start == pytest.approx(0.25)

    def test_repeated_interior_knot_skipped(self):
        spans = element_spans(KnotVector(np.array([0, 0, 0, 0.5, 0.5, 1, 1, 1.0]), 2))
        assert len(spans) == 2
        assert spans[1].first_active == 2


class TestRefine:
    @pytest.mark.parametrize(
        "p, ne, knots",
        [(2, 2, [0, 0, 0, 0.5, 1, 1, 1]), (1, 4, [0, 0, 0.25, 0.5, 0.75, 1, 1])],
    )
    def test_uniform_knots(self, p, ne, knots):
        np.testing.assert_allclose(uniform_knot_vector(p, ne).knots, knots)

    def test_dimension(self):
        assert uniform_knot_vector(4, 8).n == 12

    def test_refine_keeps_degree(self):
        kv = uniform_refine(uniform_knot_vector(3, 1), 5)
        assert kv.p == 3 and kv.n_elements == 5

    @pytest.mark.parametrize("ne", [0, -2])
    def test_invalid(self, ne):
        with pytest.raises(ValueError):
            uniform_knot_vector(2, ne)


class TestTensorProductSpace:
    @pytest.fixture
    def space(self):
        return TensorProductSpace(uniform_knot_vector(2, 3), uniform_knot_vector(1, 2), uniform_knot_vector(3, 2))

    def test_dimensions(self, space):
        assert (space.n_u, space.n_v, space.n_t) == (5, 3, 5)
        assert space.n == 75 and space.ndofs == 225

    def test_index_round_trip(self, space):
        i = np.arange(space.n)
        assert np.array_equal(space.flat_index(*space.split_index(i)), i)

    def test_layout(self, space):
        assert space.flat_index(1, 2, 3) == 3 * 15 + 2 * 5 + 1
