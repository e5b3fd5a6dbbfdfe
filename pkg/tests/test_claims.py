import numpy as np
import pytest

from taukit import claims


def test_claims_pass_on_small_grid():
    for rep in claims.run_all(10_001):
        assert rep.passed, rep
        assert rep.n_points == 10_001


def test_k_function():
    np.testing.assert_allclose(claims.k_function([0.0, 0.25, 0.5, 3.0]), [0.0, 0.1875, 0.25, 0.25])


def test_cosh_identity_error_is_tiny():
    rep = claims.claim_cosh_identity(10_001)
    assert rep.details["max_abs_error"] < 1e-14


def test_exp_linear_fails_beyond_its_range():
    # the chord inequality only holds up to about u = 4.5; the checker must notice
    rep = claims.claim_exp_linear(10_001, hi=6.0)
    assert not rep.passed and rep.worst_point > 4.0


def test_knot_continuity():
    gaps = claims.knot_gaps()
    assert max(gaps.values()) <= 1e-15
