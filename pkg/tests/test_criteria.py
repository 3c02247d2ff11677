import random

import pytest
from hypothesis import given, strategies as st

from nsmorrey.criteria import (CRITERIA, CriterionVerdict, ScanRegion, compute_G_g,
                               estimate_limits, evaluate_criterion, rank, scan, scan_csv,
                               scan_score, verdict_from_ladder)
from nsmorrey.errors import ConfigurationError, DomainError
from nsmorrey.fields import Grid4
from nsmorrey.functionals import LadderConfig, FunctionalLadder, build_ladder
from nsmorrey.generators import gen_constant, gen_near_singular, gen_shear_heat, gen_zero

ORIGIN = ((0.0, 0.0, 0.0), 0.0)
ALL_THRESHOLDS = {"eps0": 0.1, "eps_bar0": 0.1, "M": 10.0, "eps_M": 1e-3, "zero_tol": 1e-12,
                  "eps_hat_M": 1e-3}


def synthetic(values, with_pressure=True):
    """Ladder whose every functional takes ``values`` (largest radius first)."""
    n = len(values)
    radii = [0.5 ** k for k in range(n)]
    names = ("A", "E", "C", "H", "E3") + (("D0",) if with_pressure else ())
    return FunctionalLadder((0.0, 0.0, 0.0), 0.0, radii,
                            **{k: list(values) for k in names},
                            excluded_volume=[0.0] * n)


@pytest.fixture(scope="module")
def grid32():
    return Grid4.cube(32, 49)


def test_limits_use_the_smallest_radii():
    lim = estimate_limits(synthetic([5.0, 1.0, 2.0, 1.0, 2.0]), 4)
    assert lim["A"] == {"limsup": 2.0, "liminf": 1.0, "sup": 5.0}
    lim = estimate_limits(synthetic([5.0, 1.0, 2.0, 1.0, 2.0]), 3)
    assert lim["E"]["limsup"] == 2.0 and lim["E"]["liminf"] == 1.0


def test_limits_reject_bad_tail():
    lad = synthetic([1.0, 2.0, 3.0])
    with pytest.raises(DomainError):
        estimate_limits(lad, 4)
    with pytest.raises(DomainError):
        estimate_limits(lad, 2)


def test_G_g_skip_missing_pressure():
    lad = synthetic([3.0, 2.0, 1.0], with_pressure=False)
    lad.H = [0.5, 0.5, 0.5]
    G, g = compute_G_g(lad, 3)
    assert G == 3.0 and g == 0.5


def test_G_g_of_zero_field(grid32):
    v, p = gen_zero(grid32)
    lad = build_ladder(v, p, (0, 0, 0), 0.0, LadderConfig(1.0, 0.5, 3))
    assert compute_G_g(lad, 3) == (0.0, 0.0)


def test_G_g_of_constant_field_vanish(grid32):
    # E = 0 for constant v, so both minima vanish although A does not
    v, p = gen_constant((1.0, 0.0, 0.0), grid32)
    lad = build_ladder(v, p, (0, 0, 0), 0.0, LadderConfig(1.0, 0.5, 3))
    G, g = compute_G_g(lad, 3)
    assert G == pytest.approx(0.0, abs=1e-12) and g == pytest.approx(0.0, abs=1e-12)
    assert max(lad.A) > 0


@given(st.lists(st.floats(0, 5), min_size=3, max_size=6), st.floats(1e-3, 5), st.floats(1e-3, 5))
def test_verdicts_monotone_in_thresholds(values, a, b):
    lad = synthetic(values)
    lo, hi = sorted((a, b))
    for crit in CRITERIA:
        if crit == "LPS_13":
            continue
        tight = {k: lo for k in ALL_THRESHOLDS}
        loose = {k: hi for k in ALL_THRESHOLDS}
        if verdict_from_ladder(crit, lad, tight, 3).verdict == "satisfied":
            assert verdict_from_ladder(crit, lad, loose, 3).verdict == "satisfied"


def test_short_ladder_is_indeterminate():
    lad = synthetic([0.0, 0.0])
    for crit in ("MAIN_14", "COR_15", "COR_16", "E3_17"):
        assert verdict_from_ladder(crit, lad, ALL_THRESHOLDS, 3).verdict == "indeterminate"
    assert verdict_from_ladder("CKN_12", lad, ALL_THRESHOLDS).verdict == "satisfied"


def test_missing_inputs_are_configuration_errors(grid32):
    v, _ = gen_zero(grid32)
    with pytest.raises(ConfigurationError):
        evaluate_criterion("MAIN_14", v, None, ORIGIN, thresholds=ALL_THRESHOLDS)
    with pytest.raises(ConfigurationError):
        evaluate_criterion("CKN_12", v, None, ORIGIN, thresholds={})
    with pytest.raises(ConfigurationError):
        evaluate_criterion("CKN_12", v, None, ORIGIN, thresholds={"eps0": 0.0})
    with pytest.raises(DomainError):
        evaluate_criterion("NOPE", v, None, ORIGIN, thresholds=ALL_THRESHOLDS)
    with pytest.raises(DomainError):
        CriterionVerdict("CKN_12", {}, {}, "maybe")


def test_ckn_on_zero_and_shear(grid32):
    cfg = LadderConfig(1.0, 0.5, 3)
    v, p = gen_zero(grid32)
    assert evaluate_criterion("CKN_12", v, p, ORIGIN, cfg, {"eps0": 1e-9}).verdict == "satisfied"
    v, p = gen_shear_heat(1.0, 1.0, grid32)
    out = evaluate_criterion("CKN_12", v, p, ORIGIN, cfg, {"eps0": 1.0})
    assert out.quantities["sup_E"] > 1.0 and out.verdict == "not_satisfied"
    assert out.to_json()["schema"] == "verdict-v1"


def test_lps_uses_critical_pair(grid32):
    v, p = gen_constant((1.0, 0.0, 0.0), grid32)
    out = evaluate_criterion("LPS_13", v, p, ORIGIN, LadderConfig(1.0, 0.5, 3),
                             {"eps_bar0": 100.0})
    assert out.quantities["s"] == 5.0 and out.verdict == "satisfied"
    with pytest.raises(ConfigurationError):
        evaluate_criterion("LPS_13", v, p, ORIGIN, LadderConfig(1.0, 0.5, 3, 4.0, 4.0),
                           {"eps_bar0": 1.0})


def test_main_criterion_on_constant_field():
    v, p = gen_constant((1.0, 0.0, 0.0), Grid4.cube(48, 49))
    out = evaluate_criterion("MAIN_14", v, p, ORIGIN, LadderConfig(1.0, 0.5, 4),
                             {"M": 10.0, "eps_M": 1e-3})
    assert out.verdict == "satisfied"
    assert out.quantities["tail_radii"] == 3 and out.quantities["G_est"] < 10.0


def test_strict_mode_can_leave_too_few_radii():
    lad = synthetic([2.0, 1.0, 1.0, 1.0, 1.0])
    loose = verdict_from_ladder("MAIN_14", lad, ALL_THRESHOLDS, 3)
    strict = verdict_from_ladder("MAIN_14", lad, ALL_THRESHOLDS, 3, strict=True)
    # (2^{3/2} + 4)^{-2} ~ 0.021 keeps only r = 1/16
    assert strict.quantities["strict_radius_cut"] == pytest.approx((2 ** 1.5 + 4) ** -2)
    assert loose.verdict != "indeterminate" and strict.verdict == "indeterminate"


def test_scan_region_centers():
    reg = ScanRegion((-0.25, 0.0, 0.0, 0.0), (0.25, 0.0, 0.0, 0.0))
    assert [c[0][0] for c in reg.centers(0.25)] == [-0.25, 0.0, 0.25]
    with pytest.raises(DomainError):
        ScanRegion((1, 0, 0, 0), (0, 0, 0, 0))
    with pytest.raises(DomainError):
        reg.centers(0.0)


def test_rank_breaks_ties_by_center():
    v = CriterionVerdict("CKN_12", {}, {}, "satisfied")
    from nsmorrey.criteria import ScanEntry
    es = [ScanEntry(((0.1, 0, 0), 0.0), v, 1.0), ScanEntry(((-0.1, 0, 0), 0.0), v, 1.0),
          ScanEntry(((0.5, 0, 0), 0.0), v, 2.0)]
    assert [e.center[0][0] for e in rank(es)] == [0.5, -0.1, 0.1]


def test_scan_zero_field_scores_zero():
    v, p = gen_zero(Grid4.cube(24, 25, -1, 1, -0.25, 0))
    centers = ScanRegion((-0.25, 0, 0, 0), (0.25, 0, 0, 0)).centers(0.25)
    entries = scan(v, p, centers, "CKN_12", {"eps0": 0.1}, LadderConfig(0.5, 0.5, 2))
    assert [e.score for e in entries] == [0.0] * 3
    assert scan_csv(entries).splitlines()[0] == "center_x,center_y,center_z,center_t,score,verdict"


def test_scan_is_order_independent():
    v, p = gen_near_singular(0.1, Grid4.cube(48, 25, -1, 1, -0.25, 0)), None
    centers = ScanRegion((-0.25, -0.25, 0, 0), (0.25, 0.25, 0, 0)).centers(0.25)
    cfg = LadderConfig(0.5, 0.5, 2)
    a = scan_csv(scan(v, p, centers, "CKN_12", {"eps0": 0.1}, cfg))
    shuffled = list(centers)
    random.Random(3).shuffle(shuffled)
    b = scan_csv(scan(v, p, shuffled, "CKN_12", {"eps0": 0.1}, cfg))
    assert a == b
    top = scan(v, p, centers, "CKN_12", {"eps0": 0.1}, cfg)[0]
    assert top.center == ((0.0, 0.0, 0.0), 0.0)


def test_scan_rejects_out_of_grid_centers():
    v, p = gen_zero(Grid4.cube(16, 17, -1, 1, -0.25, 0))
    with pytest.raises(DomainError):
        scan(v, p, [((0.9, 0, 0), 0.0)], "CKN_12", {"eps0": 0.1}, LadderConfig(0.5, 0.5, 2))


def test_scan_score_without_pressure():
    lad = synthetic([3.0, 2.0], with_pressure=False)
    assert scan_score(lad) == 2.0
    assert scan_score(synthetic([3.0, 2.0])) == 4.0
