import logging
import math
import random

import pytest

from travelsample.errors import SchemaError, ValidationError
from travelsample.io import fixture_path
from travelsample.montecarlo import audit_sample
from travelsample.records import AUDIT_VARIABLES, household_audit_rows
from travelsample.representativeness import (
    MarginalTable,
    audit,
    build_report,
    percent_rmse,
    read_marginals_csv,
    relative_errors,
    sample_marginals,
    write_marginals_csv,
)


def mt(name, values, labels=None):
    labels = labels or [f"c{i}" for i in range(len(values))]
    return MarginalTable(name, tuple(zip(labels, map(float, values))))


def brute_force_rmse(refs, samples):
    """Straight transcription of the formula with explicit loops."""
    by_name = {s.variable: dict(s.categories) for s in samples}
    per_variable = []
    for r in refs:
        s = by_name[r.variable]
        terms = []
        for label, rv in r.categories:
            if rv > 0:
                terms.append(((rv - s[label]) / rv) ** 2)
        if terms:
            per_variable.append(sum(terms) / len(terms))
    return math.sqrt(sum(per_variable) / len(per_variable)) * 100


def test_relative_errors_examples():
    (e,) = relative_errors(mt("v", [100]), mt("v", [80]))
    assert e.relative_error == pytest.approx(0.20)
    assert [x.relative_error for x in relative_errors(mt("v", [5, 6]), mt("v", [5, 6]))] == [0, 0]
    errs = relative_errors(mt("v", [60, 40]), mt("v", [50, 50]))
    assert [x.relative_error for x in errs] == pytest.approx([1 / 6, -0.25])


def test_percent_rmse_examples():
    assert percent_rmse([mt("a", [3, 4])], [mt("a", [3, 4])]) == 0.0
    assert percent_rmse([mt("a", [100])], [mt("a", [80])]) == 20.0
    two = percent_rmse([mt("A", [60, 40]), mt("B", [10])], [mt("A", [50, 50]), mt("B", [12])])
    exact = math.sqrt((((1 / 6) ** 2 + 0.25 ** 2) / 2 + 0.2 ** 2) / 2) * 100
    assert two == pytest.approx(exact, rel=1e-12)
    assert round(two, 1) == 20.6


def test_matches_brute_force_on_random_sets():
    rng = random.Random(11)
    for _ in range(100):
        refs, samples = [], []
        for v in range(rng.randint(1, 6)):
            k = rng.randint(1, 7)
            r = [rng.uniform(1, 1e5) for _ in range(k)]
            s = [x * rng.uniform(0.5, 1.5) for x in r]
            refs.append(mt(f"v{v}", r))
            samples.append(mt(f"v{v}", s))
        assert percent_rmse(refs, samples) == pytest.approx(brute_force_rmse(refs, samples), rel=1e-9)


def test_report_reproduces_composition():
    refs = [mt("A", [60, 40, 10]), mt("B", [10, 30])]
    samples = [mt("A", [50, 50, 9]), mt("B", [12, 30])]
    rep = build_report(refs, samples)
    per_var = {}
    for e in rep.per_category:
        per_var.setdefault(e.variable, []).append(e.relative_error ** 2)
    for v, sq in per_var.items():
        assert rep.per_variable_rmse[v] == pytest.approx(math.sqrt(sum(sq) / len(sq)) * 100, rel=1e-12)
    overall = math.sqrt(sum((x / 100) ** 2 for x in rep.per_variable_rmse.values()) / 2) * 100
    assert rep.overall_percent_rmse == pytest.approx(overall, rel=1e-12)


def test_zero_reference_categories():
    errs = relative_errors(mt("v", [0, 0, 5]), mt("v", [3, 0, 5]))
    assert [e.status for e in errs] == ["uncoverable", "empty", "ok"]
    rep = build_report([mt("v", [0, 10])], [mt("v", [4, 8])])
    assert rep.excluded_categories == 1
    assert rep.overall_percent_rmse == pytest.approx(20.0)


def test_schema_errors():
    with pytest.raises(SchemaError, match="category sets differ"):
        relative_errors(mt("v", [1, 2], ["a", "b"]), mt("v", [1, 2], ["a", "c"]))
    with pytest.raises(SchemaError):
        percent_rmse([mt("a", [1])], [mt("b", [1])])
    with pytest.raises(ValidationError):
        MarginalTable("v", (("a", 1.0), ("a", 2.0)))
    with pytest.raises(ValidationError):
        mt("v", [-1])


def test_properties():
    rng = random.Random(5)
    refs = [mt("a", [rng.uniform(1, 100) for _ in range(4)]), mt("b", [rng.uniform(1, 100) for _ in range(3)])]
    samples = [mt(r.variable, [v * rng.uniform(0.7, 1.3) for _, v in r.categories]) for r in refs]
    base = percent_rmse(refs, samples)
    assert base > 0
    scaled_r = [mt(r.variable, [v * 7.5 for _, v in r.categories]) for r in refs]
    scaled_s = [mt(s.variable, [v * 7.5 for _, v in s.categories]) for s in samples]
    assert percent_rmse(scaled_r, scaled_s) == pytest.approx(base, rel=1e-12)
    assert percent_rmse(refs[::-1], samples[::-1]) == base
    perfect = mt("c", [5, 6, 7])
    assert percent_rmse(refs + [perfect], samples + [perfect]) <= base


def test_pooled_alternative():
    refs = [mt("A", [60, 40]), mt("B", [10])]
    samples = [mt("A", [50, 50]), mt("B", [12])]
    pooled = percent_rmse(refs, samples, pooled=True)
    assert pooled == pytest.approx(math.sqrt(((1 / 6) ** 2 + 0.25 ** 2 + 0.2 ** 2) / 3) * 100)


def test_sample_marginals_weighting_and_multi_response():
    rows = [{"m": ("auto", "transit"), "s": "1", "weight": 2.0}, {"m": ("auto",), "s": "2", "weight": 3.0}]
    tables, missing, mode = sample_marginals(rows, {"m": ["auto", "transit"], "s": ["1", "2"], "x": ["y"]})
    assert mode == "weighted" and missing == ["x"]
    assert dict(tables[0].categories) == {"auto": 5.0, "transit": 2.0}
    _, _, mode = sample_marginals([{"s": "1"}], {"s": ["1"]})
    assert mode == "unweighted"


def test_audit_skips_missing_variable(caplog):
    rows = [{"a": "x", "region": "R", "weight": 1.0}]
    with caplog.at_level(logging.WARNING):
        rep = audit(rows, [mt("a", [1], ["x"]), mt("b", [3], ["y"])])
    assert rep.skipped_variables == ["b"] and rep.overall_percent_rmse == 0.0
    assert "missing from microdata" in caplog.text
    with pytest.raises(ValidationError):
        audit(rows, [mt("a", [1], ["x"])], geography="elsewhere")


def test_marginals_csv_roundtrip_with_geography():
    study = [mt("a", [1.5, 2], ["x", "y"])]
    region = [mt("a", [0.5, 1], ["x", "y"])]
    text = write_marginals_csv({"": study, "R1": region})
    assert read_marginals_csv(text, is_text=True) == study
    assert read_marginals_csv(text, is_text=True, geography="R1") == region
    plain = write_marginals_csv(study)
    assert read_marginals_csv(plain, is_text=True) == study
    with pytest.raises(SchemaError):
        read_marginals_csv(plain, is_text=True, geography="R1")
    with pytest.raises(ValidationError, match="line 2"):
        read_marginals_csv("variable,category,value\na,x,abc\n", is_text=True)


def test_bundled_survey_audit(fixture_survey):
    households, trips, _ = fixture_survey
    ref = read_marginals_csv(str(fixture_path("reference")))
    rep = audit(household_audit_rows(households, trips), ref)
    assert rep.weighting == "weighted"
    assert set(rep.per_variable_rmse) == set(AUDIT_VARIABLES)
    assert rep.overall_percent_rmse < 5


@pytest.fixture(scope="module")
def audit_demo(small_city):
    ref = read_marginals_csv(str(fixture_path("reference")))
    rows = audit_sample(small_city).household_rows()
    return ref, rows


def test_five_percent_sample_is_representative(audit_demo):
    ref, rows = audit_demo
    rep = audit(rows, ref)
    assert rep.overall_percent_rmse < 3.0


def test_halving_transit_users_raises_mode_rmse(audit_demo):
    ref, rows = audit_demo
    transit = [i for i, r in enumerate(rows) if "transit" in r["mode_users"]]
    dropped = set(transit[::2])
    biased = [r for i, r in enumerate(rows) if i not in dropped]
    base = audit(rows, ref).per_variable_rmse["mode_users"]
    assert audit(biased, ref).per_variable_rmse["mode_users"] > base


def test_regional_audits_mostly_below_20_percent(audit_demo):
    _, rows = audit_demo
    path = str(fixture_path("reference"))
    values = []
    for g in sorted({r["region"] for r in rows}):
        rep = audit(rows, read_marginals_csv(path, geography=g), geography=g)
        values.extend(rep.per_variable_rmse.values())
    assert sum(v < 20 for v in values) > len(values) / 2
