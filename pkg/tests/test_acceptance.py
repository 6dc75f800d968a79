"""Acceptance gate: one test per criterion, each printing its PASS/FAIL
line.

Two tests are faithful to checks the source expressions cannot satisfy
and are expected to fail (analysis in notes/decisions.md at the repo
root and in cellgeom.acceptance):

* criterion 8: the stated sync <= async bound ordering is reversed by
  the monotonicity of the activity factor omega(t);
* criterion 10: the inversion formula evaluates a smoothed surrogate of
  the success event and sits 0.06-0.11 below the simulated truth at
  beta = 0 (the gating half is exact and matches within 0.005).
"""

import pytest

from cellgeom import acceptance


def _check(fn):
    res = fn()
    print()
    print(res.line())
    assert res.passed, res.line()


def test_criterion_01_hypergeometric_identity():
    _check(acceptance.criterion_1)


def test_criterion_02_half_delta_closed_forms():
    _check(acceptance.criterion_2)


def test_criterion_03_transmission_probability_table():
    _check(acceptance.criterion_3)


def test_criterion_04_fpc_threshold_consistency():
    _check(acceptance.criterion_4)


def test_criterion_05_beta_zero_coincidence():
    _check(acceptance.criterion_5)


def test_criterion_06_monte_carlo_vs_constant_interference():
    _check(acceptance.criterion_6)


def test_criterion_07_thinning_bound_dominates_simulation():
    _check(acceptance.criterion_7)


def test_criterion_08_sync_async_ordering():
    # Expected red: the stated inequality contradicts the monotonicity
    # of the activity factor; see module docstring and notes/decisions.md.
    _check(acceptance.criterion_8)


def test_criterion_09_published_rate_spans():
    _check(acceptance.criterion_9)


def test_criterion_10_fixed_rate_monte_carlo_beta_zero():
    # Expected red on the inversion half; see module docstring.
    _check(acceptance.criterion_10)


def test_criterion_11_cli_determinism():
    _check(acceptance.criterion_11)
