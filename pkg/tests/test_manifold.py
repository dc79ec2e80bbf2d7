"""Complex-circle manifold primitives and the descent engine."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lisim.manifold import (
    DescentConfig,
    LineSearchError,
    PhaseVector,
    RetractionError,
    ccm_descent,
    retract,
    tangent_project,
)

phase_arrays = st.integers(2, 32).flatmap(
    lambda m: st.lists(st.floats(0.0, 2 * np.pi), min_size=m, max_size=m))


def _vec(phases):
    return PhaseVector(np.exp(1j * np.array(phases)))


def _random_grad(rng, m):
    return rng.normal(size=m) + 1j * rng.normal(size=m)


# -- PhaseVector -------------------------------------------------------------

def test_phase_vector_rejects_off_manifold():
    with pytest.raises(ValueError):
        PhaseVector(np.array([1.0, 0.5 + 0.5j]))
    with pytest.raises(ValueError):
        PhaseVector(np.ones((2, 2), dtype=complex))


# -- tangent projection / retraction -----------------------------------------

@given(phase_arrays, st.integers(0, 2 ** 31 - 1))
def test_tangent_projection_is_tangent(phases, seed):
    v = _vec(phases)
    g = _random_grad(np.random.default_rng(seed), len(v))
    z = tangent_project(v, g)
    # tangent space at v: Re(z .* conj(v)) = 0 entrywise
    np.testing.assert_allclose(np.real(z * v.entries.conj()), 0.0, atol=1e-12)


@given(phase_arrays, st.integers(0, 2 ** 31 - 1))
def test_tangent_projection_idempotent(phases, seed):
    v = _vec(phases)
    g = _random_grad(np.random.default_rng(seed), len(v))
    z = tangent_project(v, g)
    np.testing.assert_allclose(tangent_project(v, z), z, atol=1e-12)


@given(phase_arrays)
def test_retract_fixes_manifold_points(phases):
    v = _vec(phases)
    np.testing.assert_allclose(retract(v.entries).entries, v.entries, atol=1e-12)


def test_retract_normalizes():
    out = retract(np.array([3.0, -4j, 1 + 1j]))
    np.testing.assert_allclose(np.abs(out.entries), 1.0, rtol=1e-12)
    np.testing.assert_allclose(out.entries[0], 1.0)
    np.testing.assert_allclose(out.entries[1], -1j)


def test_retract_zero_entry_raises():
    with pytest.raises(RetractionError):
        retract(np.array([1.0, 0.0], dtype=complex))


def test_projection_shape_mismatch():
    v = _vec([0.0, 1.0])
    with pytest.raises(ValueError):
        tangent_project(v, np.ones(3, dtype=complex))


# -- descent engine ----------------------------------------------------------

def _alignment_problem(m, seed):
    """f(v) = ||v - t||^2 with t on the manifold; unique minimum f = 0 at t."""
    rng = np.random.default_rng(seed)
    t = np.exp(1j * rng.uniform(0, 2 * np.pi, m))

    def f(v):
        d = v - t
        return float(np.real(np.vdot(d, d)))

    def grad(v):
        return 2.0 * (v - t)

    return f, grad, t


def test_descent_reaches_known_minimum():
    f, grad, t = _alignment_problem(16, 0)
    v0 = PhaseVector(np.exp(1j * np.random.default_rng(1).uniform(0, 2 * np.pi, 16)))
    v, trace = ccm_descent(f, grad, v0, DescentConfig(epsilon=1e-10, max_iters=2000))
    assert trace[-1] < 1e-6
    np.testing.assert_allclose(v.entries, t, atol=2e-3)


def test_descent_monotone_and_on_manifold():
    f, grad, _ = _alignment_problem(24, 2)
    v0 = PhaseVector(np.exp(1j * np.random.default_rng(3).uniform(0, 2 * np.pi, 24)))
    v, trace = ccm_descent(f, grad, v0, DescentConfig())
    assert np.max(np.abs(np.abs(v.entries) - 1.0)) < 1e-12
    diffs = np.diff(trace)
    assert np.all(diffs <= 1e-12)


def test_descent_records_start_and_stops_on_gap():
    f, grad, _ = _alignment_problem(8, 4)
    v0 = PhaseVector(np.exp(1j * np.random.default_rng(5).uniform(0, 2 * np.pi, 8)))
    _, trace = ccm_descent(f, grad, v0, DescentConfig(epsilon=1e3))
    # huge epsilon: one accepted step, then the gap test fires
    assert len(trace) == 2
    assert trace[0] == pytest.approx(f(v0.entries))


def test_descent_at_stationary_point():
    # start exactly at the minimum: Riemannian gradient is zero
    f, grad, t = _alignment_problem(6, 6)
    v, trace = ccm_descent(f, grad, PhaseVector(t), DescentConfig())
    np.testing.assert_allclose(v.entries, t)
    assert len(trace) == 2 and trace[0] == trace[1] == 0.0


def test_descent_iteration_budget():
    f, grad, _ = _alignment_problem(16, 7)
    v0 = PhaseVector(np.exp(1j * np.random.default_rng(8).uniform(0, 2 * np.pi, 16)))
    _, trace = ccm_descent(f, grad, v0, DescentConfig(epsilon=1e-30, max_iters=3))
    assert len(trace) <= 4


def test_descent_non_finite_objective_raises():
    def f(v):
        return float("nan")

    def grad(v):
        return np.ones_like(v)

    with pytest.raises(FloatingPointError):
        ccm_descent(f, grad, PhaseVector(np.ones(4, dtype=complex)), DescentConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        DescentConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        DescentConfig(armijo_shrink=1.0)
    with pytest.raises(ValueError):
        DescentConfig(initial_step=-1.0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_descent_deterministic(seed):
    f, grad, _ = _alignment_problem(12, seed)
    v0 = PhaseVector(np.exp(1j * np.random.default_rng(seed + 1).uniform(0, 2 * np.pi, 12)))
    a = ccm_descent(f, grad, v0, DescentConfig())
    b = ccm_descent(f, grad, v0, DescentConfig())
    np.testing.assert_array_equal(a[0].entries, b[0].entries)
    assert a[1] == b[1]
