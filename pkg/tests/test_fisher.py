from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tprior.errors import DomainError
from tprior.fisher import (
    fisher_matrix,
    h1_reference,
    pm_D,
    pm_residual,
    pm_terms,
    pm_zeta,
    zeta_from_information,
)
from tprior.priors import PriorSpec, bracket_p2


def test_fisher_entries_at_one():
    f = fisher_matrix(1.0, 0.0, 1.0, 1).entries
    assert f[1, 1] == pytest.approx(0.5)
    assert f[2, 2] == pytest.approx(0.5)
    assert f[0, 2] == pytest.approx(-0.25)
    assert f[2, 0] == f[0, 2]


@given(
    st.floats(min_value=0.05, max_value=1e3),
    st.floats(min_value=-10, max_value=10),
    st.floats(min_value=0.1, max_value=10),
)
def test_fisher_zero_pattern_and_scaling(nu, mu, sigma):
    f1 = fisher_matrix(nu, mu, sigma, 3).entries
    f2 = fisher_matrix(nu, mu, sigma, 6).entries
    assert f1[0, 1] == f1[1, 2] == f1[1, 0] == f1[2, 1] == 0.0
    assert np.allclose(f2, 2 * f1, rtol=1e-15, atol=0)


@pytest.mark.parametrize("nu", np.geomspace(0.05, 1e3, 15))
@pytest.mark.parametrize("sigma", [0.1, 1.0, 10.0])
def test_positive_definite_and_block_det(nu, sigma):
    fm = fisher_matrix(float(nu), 0.0, sigma, 1)
    minors = fm.leading_minors()
    assert all(m > 0 for m in minors)
    assert fm.block_det() > 0
    assert minors[2] == pytest.approx(fm.block_det(), rel=1e-9)


def test_h1_examples():
    assert h1_reference(1.0, 4) == pytest.approx(1.2898681337, abs=1e-9)
    assert 4 * h1_reference(5.0, 1) == pytest.approx(bracket_p2(5.0), rel=1e-10)


@pytest.mark.parametrize("nu", [0.1, 1.0, 5.0, 10.0, 100.0])
@pytest.mark.parametrize("n", [1, 30])
def test_h1_identity(nu, n):
    h1 = h1_reference(nu, n)
    assert abs(h1 - n / 4 * bracket_p2(nu)) <= 1e-10 * abs(h1)


@given(st.floats(min_value=0.05, max_value=500.0), st.floats(min_value=0.1, max_value=10.0), st.integers(1, 100))
def test_pm_D_forms_agree(nu, sigma, n):
    assert pm_D(nu, sigma, n, "two_term") == pytest.approx(pm_D(nu, sigma, n, "simplified"), rel=1e-10)


def test_pm_D_unknown_form():
    with pytest.raises(DomainError):
        pm_D(1.0, 1.0, 1, "other")


@pytest.mark.parametrize("nu", [0.3, 2.0, 10.0, 80.0])
@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_zeta_matches_information_inverse(nu, sigma):
    z = pm_zeta(nu, sigma, 30)
    assert z.components[0] == 0.0
    assert np.allclose(z.components, zeta_from_information(nu, sigma, 30), rtol=1e-9, atol=1e-14)


def test_zeta_sigma_scaling():
    # D carries a 1/sigma^2 factor, so zeta_3 is free of sigma and zeta_2 is linear in it
    _, a2, a3 = pm_zeta(3.0, 0.7, 5).components
    _, b2, b3 = pm_zeta(3.0, 1.4, 5).components
    assert b3 == pytest.approx(a3, rel=1e-13)
    assert b2 == pytest.approx(2 * a2, rel=1e-13)
    oracle = zeta_from_information(3.0, 1.4, 5)
    assert oracle[2] == pytest.approx(a3, rel=1e-10)


@pytest.mark.parametrize("nu, sigma, n", [(2.0, 1.0, 30), (10.0, 0.5, 5)])
def test_pm_residual_examples(nu, sigma, n):
    assert pm_residual(nu, sigma, n) <= 1e-6


@pytest.mark.parametrize("nu", [0.5, 2.0, 10.0])
@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_pm_residual_second_order(nu, sigma):
    r1 = pm_residual(nu, sigma, 30, h=1e-3)
    r2 = pm_residual(nu, sigma, 30, h=5e-4)
    assert r1 <= 1e-5
    assert 3.0 < r1 / r2 < 5.0


def test_pm_terms_nontrivial():
    # cancellation must come from sizeable pieces, not from everything vanishing
    terms = pm_terms(2.0, 1.0, 30)
    assert max(abs(t) for t in terms) > 1e-3


@pytest.mark.parametrize("pid", [1, 5, 6])
def test_pm_negative_controls(pid):
    assert pm_residual(2.0, 1.0, 30, prior=PriorSpec(pid)) > 1e-3


@pytest.mark.parametrize("args", [(0.0, 0.0, 1.0, 1), (1.0, 0.0, -1.0, 1), (1.0, 0.0, 1.0, 0)])
def test_fisher_domain(args):
    with pytest.raises(DomainError):
        fisher_matrix(*args)
