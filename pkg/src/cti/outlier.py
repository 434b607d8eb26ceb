"""Per-host-AS outlier filter.

The score of each transit AS in each country is recomputed using the
monitors of every hosting AS independently; when ten or more hosts produce a
value, the hosts in the bottom and top decile are excluded and the score is
recomputed over the surviving monitors.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .cti_core import WeightTable, compute_cti
from .geo import GeoTable
from .model import MetricReport, MonitorId, Observation

DEFAULT_MIN_HOSTS = 10
DEFAULT_TRIM = Fraction(1, 10)


@dataclass
class HostCtiProfile:
    """Per-host scores for one (transit AS, country) subject.

    Hosts appear only when at least one of their monitors observed the
    transit AS toward the country.
    """

    subject: tuple[int, str]
    values: dict[int, Fraction] = field(default_factory=dict)


def per_host_cti(
    observations: Sequence[Observation],
    weights: WeightTable,
    geo: GeoTable,
    monitors: Sequence[MonitorId],
    country: str,
) -> dict[tuple[int, str], HostCtiProfile]:
    """Score each transit AS using each monitor-hosting AS in isolation."""
    by_host: dict[int, list[MonitorId]] = {}
    for monitor in monitors:
        by_host.setdefault(monitor.host_asn, []).append(monitor)

    profiles: dict[tuple[int, str], HostCtiProfile] = {}
    for host, host_monitors in by_host.items():
        host_ids = {m.id for m in host_monitors}
        host_obs = [o for o in observations if o.monitor.id in host_ids]
        report = compute_cti(host_obs, weights, geo, host_monitors, country)
        for (_country, transit), value in report.entries.items():
            subject = (transit, country)
            profiles.setdefault(subject, HostCtiProfile(subject=subject))
            profiles[subject].values[host] = value
    return profiles


@dataclass
class FilteredScore:
    value: Fraction
    excluded: list[tuple[int, Fraction]]  # (host ASN, per-host score)


def apply_outlier_filter(
    profile: HostCtiProfile,
    observations: Sequence[Observation],
    weights: WeightTable,
    geo: GeoTable,
    monitors: Sequence[MonitorId],
    min_hosts: int = DEFAULT_MIN_HOSTS,
    trim: Fraction = DEFAULT_TRIM,
) -> FilteredScore:
    """Trim the per-tail decile of hosts and recompute over the survivors.

    With fewer than ``min_hosts`` hosts the unfiltered score is returned
    unchanged. The per-tail count is floor(trim * H); ties are broken by
    ascending host ASN so the exclusion set is deterministic.
    """
    transit, country = profile.subject
    unfiltered = compute_cti(observations, weights, geo, monitors, country).get(country, transit)
    host_count = len(profile.values)
    if host_count < min_hosts:
        return FilteredScore(value=unfiltered, excluded=[])

    per_tail = int(trim * host_count)
    if per_tail == 0:
        return FilteredScore(value=unfiltered, excluded=[])

    ranked = sorted(profile.values.items(), key=lambda kv: (kv[1], kv[0]))
    excluded_pairs = ranked[:per_tail] + ranked[-per_tail:]
    excluded_hosts = {host for host, _value in excluded_pairs}
    surviving = [m for m in monitors if m.host_asn not in excluded_hosts]
    filtered = compute_cti(observations, weights, geo, surviving, country).get(country, transit)
    return FilteredScore(
        value=filtered,
        excluded=[(host, value) for host, value in excluded_pairs],
    )
