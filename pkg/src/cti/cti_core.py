"""Observation extraction, monitor weights, and the transit-influence score.

The score for a transit AS in a country is an address-weighted,
distance-discounted sum over monitor observations:

    score(t, C) = sum_m ( w(m) / |M| ) * sum_p mass(p, C) / A(C) * 1 / d(t, m, p)

with w(m) = 1/n, n being the number of the host AS's monitors that observe
the prefix. All arithmetic is exact rational; results are independent of
aggregation order.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .geo import GeoTable
from .model import MetricReport, MonitorId, Observation, Prefix
from .pathprep import RetainedPath

WeightTable = dict[tuple[int, Prefix], Fraction]


def extract_observations(retained: Iterable[RetainedPath]) -> list[Observation]:
    """One observation per transit AS on each retained segment; the origin
    (segment index 0) never yields an observation."""
    observations: list[Observation] = []
    for path in retained:
        for distance, transit in enumerate(path.segment[1:], start=1):
            observations.append(
                Observation(
                    monitor=path.monitor,
                    prefix=path.prefix,
                    transit=transit,
                    distance=distance,
                )
            )
    return observations


def compute_weights(observations: Iterable[Observation]) -> WeightTable:
    """w = 1/n per (host AS, prefix), n = that AS's monitors observing the prefix.

    Monitors of an AS that do not observe the prefix do not count toward n,
    so the weights of the observing monitors always sum to 1.
    """
    observers: dict[tuple[int, Prefix], set[str]] = {}
    for obs in observations:
        observers.setdefault((obs.monitor.host_asn, obs.prefix), set()).add(obs.monitor.id)
    return {key: Fraction(1, len(ids)) for key, ids in observers.items()}


def compute_cti(
    observations: Iterable[Observation],
    weights: WeightTable,
    geo: GeoTable,
    monitors: Sequence[MonitorId],
    country: str,
) -> MetricReport:
    """Evaluate the score for every transit AS observed toward one country.

    ``monitors`` is the active set M; its size normalizes every term, so
    monitors that observe no path toward the country still dilute the score.
    """
    total_addresses = geo.country_total(country)
    active_ids = {m.id for m in monitors}
    n_monitors = len(monitors)
    scores: dict[int, Fraction] = {}
    for obs in observations:
        if obs.monitor.id not in active_ids:
            continue
        mass = geo.mass.get((obs.prefix, country), 0)
        if mass == 0:
            continue
        weight = weights[(obs.monitor.host_asn, obs.prefix)]
        term = (
            Fraction(weight, n_monitors)
            * Fraction(mass, total_addresses)
            * Fraction(1, obs.distance)
        )
        scores[obs.transit] = scores.get(obs.transit, Fraction(0)) + term

    report = MetricReport(metric_name="cti")
    for transit, value in scores.items():
        report.set(country, transit, value)
    return report
