from fractions import Fraction

import pytest

from cti import conglomerate, cti_core
from cti.geo import build_geo_table, classify_nationality
from cti.model import MetricReport, MonitorId, Observation, Prefix

P1 = Prefix.parse("10.0.0.0/24")
P2 = Prefix.parse("10.0.1.0/24")
M1 = MonitorId("m1", 10, "US")


def test_conglomerate_needs_members():
    with pytest.raises(ValueError):
        conglomerate.Conglomerate("state", frozenset(), "CU")


def test_state_conglomerates_filter_by_nationality():
    geo, _ = build_geo_table([(P1, "CU", 256)], [], {P1: 100})
    nationality = classify_nationality(geo)
    groups = conglomerate.state_conglomerates(
        [(100, "CU"), (200, "CU"), (100, "AR")], nationality
    )
    # 200 originates nothing and 100 is not Argentinian, so only CU/100 remains
    assert set(groups) == {"CU"}
    assert groups["CU"].members == frozenset({100})


def test_ctin_uses_minimum_member_distance():
    geo, _ = build_geo_table([(P1, "CU", 256)], [], {P1: 900})
    group = conglomerate.Conglomerate("state", frozenset({20, 15}), "CU")
    observations = [
        Observation(M1, P1, 20, 1),
        Observation(M1, P1, 15, 2),  # second member farther on the same path
    ]
    weights = cti_core.compute_weights(observations)
    ctin = conglomerate.compute_ctin(group, observations, weights, geo, [M1])
    assert ctin == Fraction(1)  # one term at distance 1, not two


def test_ctin_skips_prefixes_originated_by_members():
    geo, _ = build_geo_table([(P1, "CU", 256), (P2, "CU", 256)], [], {P1: 100, P2: 900})
    group = conglomerate.Conglomerate("state", frozenset({100, 20}), "CU")
    observations = [
        Observation(M1, P1, 20, 1),  # toward a member-originated prefix: skipped
        Observation(M1, P2, 20, 1),
    ]
    weights = cti_core.compute_weights(observations)
    ctin = conglomerate.compute_ctin(group, observations, weights, geo, [M1])
    assert ctin == Fraction(1, 2)


def test_footprint_adds_originated_fraction():
    geo, _ = build_geo_table([(P1, "CU", 256), (P2, "CU", 256)], [], {P1: 100, P2: 900})
    group = conglomerate.Conglomerate("state", frozenset({100}), "CU")
    assert conglomerate.originated_fraction(group, geo) == Fraction(1, 2)
    assert conglomerate.compute_footprint(group, geo, Fraction(1, 4)) == Fraction(3, 4)


def test_org_aggregation():
    report = MetricReport("cti")
    report.set("CU", 100, Fraction(30, 100))
    report.set("CU", 101, Fraction(10, 100))
    report.set("CU", 102, Fraction(2, 100))
    report.set("AR", 100, Fraction(1, 100))
    org_of = {100: "org-a", 101: "org-a", 102: "org-b"}
    aggregates = conglomerate.aggregate_org(org_of, report)
    by_key = {(a.org_id, a.country): a for a in aggregates}
    a = by_key[("org-a", "CU")]
    assert a.cti_sum == Fraction(2, 5)
    assert a.top_asn == 100
    assert a.top_share == Fraction(3, 4)
    assert not a.marginal
    assert by_key[("org-b", "CU")].marginal  # 0.02 < 0.05
    assert by_key[("org-a", "AR")].marginal


def test_org_aggregation_ignores_unmapped_and_zero_entries():
    report = MetricReport("cti")
    report.set("CU", 100, Fraction(1, 10))
    report.set("CU", 999, Fraction(1, 10))  # no org mapping
    report.set("CU", 101, Fraction(0))
    aggregates = conglomerate.aggregate_org({100: "org-a", 101: "org-a"}, report)
    assert len(aggregates) == 1
    assert aggregates[0].cti_sum == Fraction(1, 10)
