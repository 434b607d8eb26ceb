"""Per-prefix, per-country address masses and AS nationality labels.

Raw geolocation counts are rounded up to a /24 (256 addresses) per
(prefix, country) row. Prefixes with no positive geolocation mass fall back
to the RIR delegation record, provided a single country's block covers the
entire prefix. Nationality is a two-thirds majority of originated addresses,
with an optional mode that also credits a transit AS with the addresses
originated by its direct customers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .ingest import DelegationRow, GeoRow, RowRejection
from .model import ComputationError, Prefix, RelationshipTable

ROUND_UP = 256


@dataclass
class GeoTable:
    mass: dict[tuple[Prefix, str], int]
    total: dict[str, int]
    originated: dict[tuple[int, str], int]
    origin_of: dict[Prefix, int]

    def country_total(self, country: str) -> int:
        total = self.total.get(country, 0)
        if total <= 0:
            raise ComputationError(f"country {country} has no address mass")
        return total

    def countries(self) -> list[str]:
        return sorted(self.total)

    def dump_rows(self) -> Iterable[str]:
        """Audit dump as ``prefix,country,mass`` rows."""
        for (prefix, country), mass in sorted(
            self.mass.items(), key=lambda kv: (kv[0][1], kv[0][0])
        ):
            yield f"{prefix},{country},{mass}"


def build_geo_table(
    geo_rows: Iterable[GeoRow],
    delegations: Iterable[DelegationRow],
    origin_of: Mapping[Prefix, int],
) -> tuple[GeoTable, list[RowRejection]]:
    """Apply the round-up and delegation-fallback rules and fold totals."""
    mass: dict[tuple[Prefix, str], int] = {}
    rejections: list[RowRejection] = []

    for prefix, country, count in geo_rows:
        if count == 0:
            continue
        mass[(prefix, country)] = max(count, ROUND_UP)

    # Delegation fallback for observed prefixes without any geolocated mass.
    geolocated = {prefix for (prefix, _country) in mass}
    delegation_list = list(delegations)
    for prefix in sorted(origin_of):
        if prefix in geolocated:
            continue
        covering = {
            country
            for country, base, count in delegation_list
            if base <= prefix.base and prefix.base + prefix.size <= base + count
        }
        if len(covering) > 1:
            rejections.append(
                RowRejection(0, str(prefix), "prefix covered by delegations from multiple countries")
            )
            continue
        if covering:
            mass[(prefix, covering.pop())] = prefix.size

    total: dict[str, int] = {}
    originated: dict[tuple[int, str], int] = {}
    for (prefix, country), value in mass.items():
        total[country] = total.get(country, 0) + value
        origin = origin_of.get(prefix)
        if origin is not None:
            key = (origin, country)
            originated[key] = originated.get(key, 0) + value

    table = GeoTable(mass=mass, total=total, originated=originated, origin_of=dict(origin_of))
    return table, rejections


@dataclass
class Nationality:
    """Asn -> Domestic(country) | Foreign. Foreign is represented as None."""

    label: dict[int, str | None] = field(default_factory=dict)

    def domestic_country(self, asn: int) -> str | None:
        return self.label.get(asn)

    def is_domestic(self, asn: int, country: str) -> bool:
        return self.label.get(asn) == country


def classify_nationality(
    geo: GeoTable,
    rels: RelationshipTable | None = None,
    include_direct_customers: bool = False,
) -> Nationality:
    """Label each AS Domestic(C) iff it has >= 2/3 of its addresses in C.

    With ``include_direct_customers`` the addresses originated by an AS's
    direct p2c customers are credited to it as well (used when classifying
    transit providers). ASes with zero addresses are Foreign.
    """
    if include_direct_customers and rels is None:
        raise ValueError("direct-customer mode requires a relationship table")

    masses: dict[int, dict[str, int]] = {}
    for (asn, country), value in geo.originated.items():
        masses.setdefault(asn, {})
        masses[asn][country] = masses[asn].get(country, 0) + value

    if include_direct_customers:
        assert rels is not None
        combined: dict[int, dict[str, int]] = {}
        for asn in set(masses) | {a for a, _c in geo.originated} | _ases_with_customers(rels):
            vector = dict(masses.get(asn, {}))
            for customer in rels.customers_of(asn):
                for country, value in masses.get(customer, {}).items():
                    vector[country] = vector.get(country, 0) + value
            if vector:
                combined[asn] = vector
        masses = combined

    nationality = Nationality()
    for asn, vector in masses.items():
        total = sum(vector.values())
        if total == 0:
            nationality.label[asn] = None
            continue
        # inclusive two-thirds boundary, exact integer arithmetic
        domestic = [c for c, v in vector.items() if 3 * v >= 2 * total]
        nationality.label[asn] = domestic[0] if domestic else None
    return nationality


def _ases_with_customers(rels: RelationshipTable) -> set[int]:
    providers: set[int] = set()
    for rel in rels:
        if rel.kind.value == "p2c":
            providers.add(rel.a)
    return providers
