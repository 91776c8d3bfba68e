import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmch.affine import (AffineElement, affine_bracket, algebra_suite, commutator_suite, derivation,
                         extended_suite, jacobi_residual, k_stability, mixed_suite, random_affine, sign_audit,
                         truncation_detector, truncation_suite)
from cmch.env import Signs, sample_environment
from cmch.laurent import make_field
from cmch.loopmat import Mat

F = make_field("exact", 6)


def _bad(rs):
    return [r for r in rs if not r.passed][:3]


@given(st.integers(0, 10_000))
@settings(max_examples=10, deadline=None)
def test_affine_jacobi(seed):
    rng = np.random.default_rng(seed)
    A, B, C = (random_affine(F, rng, -2, 2) for _ in range(3))
    assert jacobi_residual(A, B, C).is_zero()


@given(st.sampled_from(["s", "sb"]), st.integers(0, 6), st.integers(0, 6))
def test_witt_structure_constants(kind, j, k):
    z = Mat.zeros(F)
    br = affine_bracket(AffineElement(derivation(kind, j, F), z), AffineElement(derivation(kind, k, F), z))
    assert (br.a - derivation(kind, j + k, F) * (2 * j - 2 * k)).is_zero()
    if j == k:
        assert br.a.is_zero()


def test_algebra_suite_passes():
    assert not _bad(algebra_suite(F, np.random.default_rng(0), triples=5, kmax=3))


@pytest.mark.parametrize("N,mode", [(0, "minus"), (0, "plus"), (1, "minus"), (1, "plus")])
def test_extended_suite_both_worlds(env_factory, window, N, mode):
    env = env_factory(N, mode)
    for w in (env.w0, env.w1):
        rs = extended_suite(env, w, window(N))
        assert rs and not _bad(rs), _bad(rs)


@pytest.mark.parametrize("mode", ["minus", "plus"])
def test_mixed_and_commutators(env_factory, window, mode):
    env = env_factory(1, mode)
    rs = mixed_suite(env, env.w0, window(1)) + commutator_suite(env, env.w0, window(1))
    assert not _bad(rs), _bad(rs)


@pytest.mark.parametrize("N", [0, 1, 2])
def test_truncation_detector_thresholds(env_factory, N):
    Y = env_factory(N, "minus").w0.vals["Y"]
    for m in range(N + 1):
        assert truncation_detector(Y, m + 1, m).is_zero()
        assert truncation_detector(Y, m + 5, m).is_zero()
        assert not truncation_detector(Y, m, m).is_zero()


@pytest.mark.parametrize("N", [0, 1])
def test_truncation_violation_breaks_compatibility(N):
    env = sample_environment(N, mode="plus", seed=0, lowest=N)
    rs = truncation_suite(env, N)
    assert any(not r.passed for r in rs if r.identity == "eq:truncationcontr")
    assert any(not r.passed for r in rs if r.identity in ("hbphi+", "d2:Y"))
    ok = sample_environment(N, mode="plus", seed=0)
    assert not _bad(truncation_suite(ok, N + 1))


def test_sign_audit_detects_every_flip():
    rs = sign_audit(0, 0)
    assert len(rs) == len(Signs.names())
    assert all(r.passed for r in rs), [r.note for r in rs if not r.passed]


def test_unflipped_signs_pass(env_factory, window):
    env = env_factory(0, "plus")
    assert Signs().flip(Signs.names()[0]) != Signs()
    assert not _bad(extended_suite(env, env.w0, window(0), with_P=False))


def test_k_stability():
    (r,) = k_stability(0, 1)
    assert r.passed, r.note
    assert set(r.extra["K"]) == {"2", "3"}
