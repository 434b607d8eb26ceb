"""End-to-end orchestration from a parsed dataset bundle to metric reports.

The substrate (sanitized paths, origin map, geo table) is built once per
bundle; per-country steps (inbound retention, observation extraction,
weights, scores) reuse it. The origin of a prefix is taken from the
sanitized path corpus itself, so the geo table and the scores always agree
on who announces what.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import clh_compare, conglomerate, cti_core, outlier, pathprep, transit_dominance
from .geo import GeoTable, Nationality, build_geo_table, classify_nationality
from .ingest import DatasetBundle, RowRejection
from .model import (
    ComputationError,
    MetricReport,
    MonitorId,
    PathRecord,
    Prefix,
    RelationshipTable,
)


def derive_origins(paths: Sequence[PathRecord]) -> dict[Prefix, int]:
    """Origin map from the sanitized corpus; multi-origin prefixes must have
    been excluded upstream, so disagreement here is a hard error."""
    origins: dict[Prefix, int] = {}
    for path in paths:
        existing = origins.get(path.prefix)
        if existing is None:
            origins[path.prefix] = path.origin
        elif existing != path.origin:
            raise ComputationError(
                f"prefix {path.prefix} announced by AS {existing} and AS {path.origin}; "
                "add it to the multi-origin exclusion list"
            )
    return origins


@dataclass
class Substrate:
    bundle: DatasetBundle
    sanitized: list[PathRecord]
    hygiene_rejections: list[pathprep.PathRejection]
    origins: dict[Prefix, int]
    geo: GeoTable
    geo_rejections: list[RowRejection]

    @property
    def rels(self) -> RelationshipTable:
        return self.bundle.relationships


def build_substrate(bundle: DatasetBundle) -> Substrate:
    sanitized, hygiene_rejections = pathprep.prepare_paths(
        bundle.paths, bundle.aux.clique, bundle.reserved
    )
    origins = derive_origins(sanitized)
    geo, geo_rejections = build_geo_table(bundle.geo_rows, bundle.delegations, origins)
    return Substrate(
        bundle=bundle,
        sanitized=sanitized,
        hygiene_rejections=hygiene_rejections,
        origins=origins,
        geo=geo,
        geo_rejections=geo_rejections,
    )


@dataclass
class CountrySubstrate:
    country: str
    monitors: list[MonitorId]  # active set: every monitor outside the country
    retained: list[pathprep.RetainedPath]
    rejections: list[pathprep.PathRejection]
    observations: list
    weights: cti_core.WeightTable = field(default_factory=dict)


def build_country_substrate(sub: Substrate, country: str) -> CountrySubstrate:
    monitors = sorted(
        (m for m in sub.bundle.monitors.values() if m.country != country),
        key=lambda m: m.id,
    )
    retained, rejections = pathprep.retain_for_country(sub.sanitized, country, sub.geo, sub.rels)
    observations = cti_core.extract_observations(retained)
    weights = cti_core.compute_weights(observations)
    return CountrySubstrate(
        country=country,
        monitors=monitors,
        retained=retained,
        rejections=rejections,
        observations=observations,
        weights=weights,
    )


def cti_report(
    sub: Substrate,
    country: str,
    outlier_min_hosts: int = outlier.DEFAULT_MIN_HOSTS,
    outlier_trim: Fraction = outlier.DEFAULT_TRIM,
    apply_outlier: bool = True,
) -> MetricReport:
    cs = build_country_substrate(sub, country)
    base = cti_core.compute_cti(cs.observations, cs.weights, sub.geo, cs.monitors, country)
    if not apply_outlier:
        return base
    profiles = outlier.per_host_cti(cs.observations, cs.weights, sub.geo, cs.monitors, country)
    report = MetricReport(metric_name="cti")
    for (c, transit), _value in base.entries.items():
        profile = profiles[(transit, c)]
        filtered = outlier.apply_outlier_filter(
            profile,
            cs.observations,
            cs.weights,
            sub.geo,
            cs.monitors,
            min_hosts=outlier_min_hosts,
            trim=outlier_trim,
        )
        report.set(c, transit, filtered.value)
    return report


def state_footprint_reports(
    sub: Substrate, country: str
) -> tuple[MetricReport, MetricReport]:
    """CTIn and footprint reports for the country's state conglomerate; both
    empty when no state-owned AS operates domestically there."""
    nationality = classify_nationality(sub.geo)
    conglomerates = conglomerate.state_conglomerates(sub.bundle.aux.state_owned, nationality)
    ctin_report = MetricReport(metric_name="ctin")
    footprint_report = MetricReport(metric_name="footprint")
    group = conglomerates.get(country)
    if group is None:
        return ctin_report, footprint_report
    cs = build_country_substrate(sub, country)
    ctin = conglomerate.compute_ctin(group, cs.observations, cs.weights, sub.geo, cs.monitors)
    footprint = conglomerate.compute_footprint(group, sub.geo, ctin)
    ctin_report.set(country, group.label, ctin)
    footprint_report.set(country, group.label, footprint)
    return ctin_report, footprint_report


def org_aggregates(
    sub: Substrate,
    country: str,
    marginal_threshold: Fraction = conglomerate.DEFAULT_MARGINAL_THRESHOLD,
    apply_outlier: bool = True,
) -> list[conglomerate.OrgAggregate]:
    report = cti_report(sub, country, apply_outlier=apply_outlier)
    return conglomerate.aggregate_org(sub.bundle.aux.org_of, report, marginal_threshold)


def transit_nationality(sub: Substrate) -> Nationality:
    # transit providers are credited with their direct customers' addresses
    return classify_nationality(sub.geo, sub.rels, include_direct_customers=True)


def transit_fraction(
    sub: Substrate,
    traceroutes: Sequence[transit_dominance.TraceroutePath],
    country: str,
) -> Fraction:
    nationality = transit_nationality(sub)
    return transit_dominance.compute_transit_fraction(
        traceroutes, sub.rels, nationality, sub.geo, country
    )


def candidate_results(
    sub: Substrate,
    country: str,
    origination_floor: Fraction = transit_dominance.DEFAULT_ORIGINATION_FLOOR,
) -> list[transit_dominance.CandidateResult]:
    """Candidate classification for every domestic origin AS holding at
    least the floor fraction of the country's addresses."""
    nationality = transit_nationality(sub)
    total = sub.geo.country_total(country)
    results = []
    for origin in sorted({asn for (asn, c) in sub.geo.originated if c == country}):
        if not nationality.is_domestic(origin, country):
            continue
        if Fraction(sub.geo.originated[(origin, country)], total) < origination_floor:
            continue
        results.append(
            transit_dominance.classify_candidate(
                origin, sub.rels, sub.bundle.aux.memberships, nationality
            )
        )
    return results


def clh_report(sub: Substrate, country: str) -> MetricReport:
    return clh_compare.compute_clh(sub.bundle.aux.hegemony, sub.geo, country)
