import json
from types import SimpleNamespace

import pytest

from travelsample.errors import ConfigError
from travelsample.montecarlo import BIG_CITY, BIG_CITY_POPULATION, survey_fixture
from travelsample.planner import (
    AugmentTarget,
    RegionProfile,
    TargetPlan,
    combine_plan,
    plan_augment,
    plan_core,
    plan_json,
    plan_study_area,
)
from travelsample.smith import StratificationScheme, smith_plan
from travelsample.stats import SizeSpec

SPEC = SizeSpec(0.95, 0.05)
SCHEME = "size,income,vehicles"


def region(name, population, households=(), trips=(), targets=()):
    return RegionProfile(name, population, households, trips, targets)


def test_core_examples():
    core = plan_core([region("big", 1_000_000), region("tiny", 25), region("odd", 101)])
    assert core == {"big": 40_000, "tiny": 1, "odd": 5}


def test_core_rate_is_uniform():
    pops = [1000, 2000, 12_345, 50_000, 77_777, 1_000_000]
    regions = [region(f"R{i}", p) for i, p in enumerate(pops)]
    core = plan_core(regions, 0.05)
    for r in regions:
        assert core[r.name] / r.household_population == pytest.approx(0.05, abs=1 / r.household_population)


def test_core_rate_bounds():
    with pytest.raises(ConfigError):
        plan_core([region("a", 10)], 0.0)
    with pytest.raises(ConfigError):
        plan_core([region("a", 10)], 1.0)


def test_core_scales_with_population():
    a, b = region("a", 123_457), region("b", 2 * 123_457)
    core = plan_core([a, b], 0.04)
    assert abs(core["b"] - 2 * core["a"]) <= 1


def test_additive_combination():
    plan = SimpleNamespace(final_total_rounded=5344)
    tp = TargetPlan(AugmentTarget("transit", "transit_users"), plan, 100, 0.1)
    r = region("big", 1_000_000)
    out = combine_plan(plan_core([r]), {"big": [tp]}, [r])
    assert out.regions[0].total == 45_344
    assert out.regions[0].augment_contributions == [5344]
    assert out.study_total == 45_344


def test_credit_core_policy():
    r = region("big", 1_000_000)
    core = plan_core([r])
    small = TargetPlan(AugmentTarget("t"), SimpleNamespace(final_total_rounded=5344), 100, 0.1)
    out = combine_plan(core, {"big": [small]}, [r], overlap_policy="credit-core")
    assert out.regions[0].augment_contributions == [5344 - 4000]
    covered = TargetPlan(AugmentTarget("t"), SimpleNamespace(final_total_rounded=5344), 100, 0.5)
    out = combine_plan(core, {"big": [covered]}, [r], overlap_policy="credit-core")
    assert out.regions[0].augment_contributions == [0]
    assert out.regions[0].total == 40_000


def test_unknown_policy_and_cohort():
    r = region("a", 100)
    with pytest.raises(ConfigError, match="overlap"):
        combine_plan(plan_core([r]), {}, [r], overlap_policy="subtract")
    with pytest.raises(ConfigError, match="cohort"):
        AugmentTarget("x", cohort="cyclists")
    with pytest.raises(ConfigError):
        region("a", 0)


@pytest.fixture(scope="module")
def big_city():
    pop = survey_fixture(BIG_CITY, BIG_CITY_POPULATION)
    return pop.household_records(), pop.trip_records()


def test_all_target_equals_smith_plan(big_city):
    hh, trips = big_city
    r = region("big", BIG_CITY_POPULATION, hh, trips, [AugmentTarget("all")])
    (tp,) = plan_augment(r, SPEC)
    direct = smith_plan(hh, StratificationScheme.parse(SCHEME), SPEC, population=BIG_CITY_POPULATION)
    assert tp.plan.final_total_rounded == direct.final_total_rounded == 1445
    assert tp.cohort_share == pytest.approx(1.0)


def test_targets_keep_order_and_transit_is_smaller(big_city):
    hh, trips = big_city
    targets = [AugmentTarget("transit", "transit_users"), AugmentTarget("all")]
    r = region("big", BIG_CITY_POPULATION, hh, trips, targets)
    tps = plan_augment(r, SPEC)
    assert [t.target.name for t in tps] == ["transit", "all"]
    transit, everyone = tps
    assert transit.cohort_households == 3301
    assert transit.cohort_share == pytest.approx(0.412625)
    assert transit.plan.table.c_star == pytest.approx(0.5958687557482831, rel=1e-12)
    assert transit.plan.final_total_rounded == 1227 <= everyone.plan.final_total_rounded


def test_empty_cohort_is_skipped_with_warning(fixture_survey):
    hh, trips, _ = fixture_survey
    r = region("R", 200_000, hh, [t for t in trips if t.mode != "active"],
               [AugmentTarget("active", "active_users"), AugmentTarget("all")])
    warnings = []
    tps = plan_augment(r, SPEC, warnings=warnings)
    assert [t.target.name for t in tps] == ["all"]
    assert warnings and "active_users" in warnings[0]


def test_study_area_plan(fixture_survey):
    hh, trips, _ = fixture_survey
    targets = [AugmentTarget("all"), AugmentTarget("transit", "transit_users"), AugmentTarget("no_car", "no_car")]
    r = region("R", 200_000, hh, trips, targets)
    plan = plan_study_area([r], SPEC)
    rp = plan.regions[0]
    assert rp.core_size == 8000
    assert rp.augment_contributions == [783, 743, 662]
    assert [a.cohort_households for a in rp.augments] == [8000, 2363, 2114]
    assert rp.total == 8000 + 783 + 743 + 662
    assert rp.effective_rate >= plan.core_rate


def test_plan_json_is_deterministic(fixture_survey):
    hh, trips, _ = fixture_survey
    regions = [region("R", 200_000, hh, trips, [AugmentTarget("all")]), region("S", 55_555)]
    a = plan_json(plan_study_area(regions, SPEC))
    b = plan_json(plan_study_area(regions, SPEC))
    assert a == b
    d = json.loads(a)
    assert d["study_area"]["total"] == 8000 + 783 + 2223
    assert d["core_method"] and d["weighting_note"]
    assert plan_study_area(regions, SPEC).to_csv().splitlines()[-1].startswith("STUDY AREA")
