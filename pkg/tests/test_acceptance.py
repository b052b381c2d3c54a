"""Acceptance criteria 1-8 at the bounds and tolerances they are stated at.

Every test records a PASS/FAIL line that is printed in the terminal summary.
A criterion that does not hold fails here; the reason is in the measured
values shown in the line.
"""

from __future__ import annotations

import pytest

from nfgrids import verification as V

S = V.SCALES["full"]
TMAX = max(S["c3"], S["c4"][-1], S["c5"], S["c6"], S["c7"][1])

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def families():
    return V.shared_cubic_fields(TMAX)


def _check(result, log):
    log.append(result.line())
    assert result.passed, result.line()


def test_criterion_1_quadratic_closed_form(criterion_log):
    _check(V.criterion_1(S["c1"], tol=1e-9), criterion_log)


def test_criterion_2_two_atom_law(criterion_log):
    _check(V.criterion_2(S["c2"], tol=1e-9, mass_tol=0.005), criterion_log)


def test_criterion_3_cubic_torsion(families, criterion_log):
    _check(V.criterion_3(S["c3"], tol=1e-6, fields_by_sig=families), criterion_log)


def test_criterion_4_cubic_equidistribution(families, criterion_log):
    _check(V.criterion_4(S["c4"], bound=0.05, need_decreasing=7, fields_by_sig=families), criterion_log)


def test_criterion_5_shape_recovery(families, criterion_log):
    _check(V.criterion_5(S["c5"], tv_bound=0.1, alpha=0.01, fields_by_sig=families), criterion_log)


def test_criterion_6_structural_identities(families, criterion_log):
    _check(V.criterion_6(S["c6"], tol=1e-9, fields_by_sig=families), criterion_log)


def test_criterion_7_enumeration(families, criterion_log):
    _check(V.criterion_7(*S["c7"], fields_by_sig=families), criterion_log)


def test_criterion_8_weyl_grid_identities(criterion_log):
    _check(V.criterion_8(tol=1e-12), criterion_log)


# Variants that isolate the convention behind a failing criterion. They are
# not criteria themselves and print no summary line.


def test_torsion_under_trace_embedding(families):
    r = V.criterion_3(S["c3"], tol=1e-6, embedding="trace", fields_by_sig=families)
    assert r.passed, r.line()


def test_quadratic_translation_with_shift_term():
    r = V.criterion_1(S["c1"], tol=1e-9)
    assert max(r.measured["max_dev_with_shift_term"].values()) < 1e-9


def test_structural_identities_apart_from_sign_pattern(families):
    r = V.criterion_6(S["c6"], tol=1e-9, fields_by_sig=families)
    failing = {k for k, v in r.measured["checks"].items() if v != "pass"}
    assert failing <= {"sign_pattern"}, r.line()
    assert all(s == (-1,) * len(s) for s in r.measured["signs_seen"])
