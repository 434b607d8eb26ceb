"""Parsers for the six input file families.

All formats are line-oriented UTF-8 text with ``\\n`` endings; lines starting
with ``#`` are comments and blank lines are ignored. Parsers are strict on
structure (malformed lines abort the run) and lenient-with-logging on
semantic rejects (bad country codes, out-of-range scores, excluded prefixes).
"""
from __future__ import annotations

import ipaddress
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Iterable, Mapping

from .model import (
    MAX_PREFIX_LENGTH,
    MonitorId,
    ParseError,
    PathRecord,
    Prefix,
    RelKind,
    Relationship,
    RelationshipTable,
    validate_asn,
    validate_country,
)


@dataclass(frozen=True)
class RowRejection:
    line_no: int
    line: str
    reason: str


GeoRow = tuple[Prefix, str, int]  # prefix, country, raw address count
DelegationRow = tuple[str, int, int]  # country, base address, address count


def _data_lines(reader: Iterable[str]) -> Iterable[tuple[int, str]]:
    for line_no, raw in enumerate(reader, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield line_no, line


def _parse_asn_token(token: str) -> int:
    if not token.isdigit():
        raise ValueError(f"malformed ASN token {token!r}")
    return validate_asn(int(token))


def parse_paths(
    reader: Iterable[str],
    monitors: Mapping[str, MonitorId],
    multi_origin: frozenset[Prefix] = frozenset(),
) -> tuple[list[PathRecord], list[RowRejection]]:
    """Parse ``monitor_id|prefix|asn asn ...`` rows (origin last).

    Rejects (with a log entry) unknown monitors, prefixes longer than /24,
    prefixes on the multi-origin exclusion list, malformed ASN tokens and
    AS-set braces. Identical duplicate (monitor, prefix) rows are silently
    deduplicated; conflicting duplicates are a hard error.
    """
    records: list[PathRecord] = []
    rejections: list[RowRejection] = []
    seen: dict[tuple[str, Prefix], tuple[tuple[int, ...], int]] = {}
    for line_no, line in _data_lines(reader):
        parts = line.split("|")
        if len(parts) != 3:
            raise ParseError(f"line {line_no}: expected monitor_id|prefix|hops, got {line!r}")
        monitor_id, prefix_text, hops_text = parts
        monitor = monitors.get(monitor_id)
        if monitor is None:
            rejections.append(RowRejection(line_no, line, "unknown monitor"))
            continue
        if "{" in hops_text or "}" in hops_text:
            rejections.append(RowRejection(line_no, line, "as-set"))
            continue
        try:
            prefix = Prefix.parse(prefix_text)
        except ValueError as exc:
            if "length" in str(exc):
                rejections.append(RowRejection(line_no, line, "length>24"))
            else:
                rejections.append(RowRejection(line_no, line, "unparsable prefix"))
            continue
        if prefix in multi_origin:
            rejections.append(RowRejection(line_no, line, "multi-origin prefix"))
            continue
        try:
            hops = tuple(_parse_asn_token(tok) for tok in hops_text.split())
        except ValueError:
            rejections.append(RowRejection(line_no, line, "malformed ASN"))
            continue
        if not hops:
            rejections.append(RowRejection(line_no, line, "empty path"))
            continue
        key = (monitor_id, prefix)
        if key in seen:
            prev_hops, prev_line = seen[key]
            if prev_hops != hops:
                raise ParseError(
                    f"conflicting paths for ({monitor_id}, {prefix}) "
                    f"at lines {prev_line} and {line_no}"
                )
            continue  # identical duplicate
        seen[key] = (hops, line_no)
        records.append(PathRecord(monitor=monitor, prefix=prefix, hops=hops))
    return records, rejections


def parse_relationships(reader: Iterable[str]) -> RelationshipTable:
    """Parse ``a|b|-1`` (a provider of b) and ``a|b|0`` (peers) rows."""
    table = RelationshipTable()
    for line_no, line in _data_lines(reader):
        parts = line.split("|")
        if len(parts) != 3:
            raise ParseError(f"line {line_no}: expected a|b|code, got {line!r}")
        try:
            a = _parse_asn_token(parts[0])
            b = _parse_asn_token(parts[1])
        except ValueError as exc:
            raise ParseError(f"line {line_no}: {exc}") from None
        if a == b:
            raise ParseError(f"line {line_no}: self-relationship for AS {a}")
        if parts[2] == "-1":
            kind = RelKind.P2C
        elif parts[2] == "0":
            kind = RelKind.P2P
        else:
            raise ParseError(f"line {line_no}: unknown relationship code {parts[2]!r}")
        try:
            table.add(Relationship(a, b, kind))
        except ParseError as exc:
            raise ParseError(f"line {line_no}: {exc}") from None
    return table


def parse_geo_and_delegations(
    geo_reader: Iterable[str],
    delegation_reader: Iterable[str],
) -> tuple[list[GeoRow], list[DelegationRow], list[RowRejection]]:
    """Parse raw geolocation rows and RIR extended-delegation rows.

    Semantic rules (round-up, delegation fallback) are applied later when the
    geo table is built; this only validates and retains the raw rows.
    """
    geo_rows: list[GeoRow] = []
    rejections: list[RowRejection] = []
    for line_no, line in _data_lines(geo_reader):
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"geo line {line_no}: expected prefix,country,count, got {line!r}")
        try:
            prefix = Prefix.parse(parts[0])
        except ValueError as exc:
            raise ParseError(f"geo line {line_no}: {exc}") from None
        try:
            country = validate_country(parts[1])
        except ValueError:
            rejections.append(RowRejection(line_no, line, "unparsable country code"))
            continue
        try:
            count = int(parts[2])
        except ValueError:
            raise ParseError(f"geo line {line_no}: malformed address count {parts[2]!r}") from None
        if count < 0:
            raise ParseError(f"geo line {line_no}: negative address count")
        if count > prefix.size:
            raise ParseError(
                f"geo line {line_no}: count {count} exceeds capacity {prefix.size} of {prefix}"
            )
        geo_rows.append((prefix, country, count))

    delegation_rows: list[DelegationRow] = []
    for line_no, line in _data_lines(delegation_reader):
        parts = line.split("|")
        if len(parts) < 7:
            raise ParseError(
                f"delegation line {line_no}: expected registry|cc|ipv4|base|count|date|status"
            )
        if parts[2] != "ipv4":
            continue  # asn/ipv6/summary records are irrelevant here
        try:
            country = validate_country(parts[1])
        except ValueError:
            rejections.append(RowRejection(line_no, line, "unparsable country code"))
            continue
        try:
            base = int(ipaddress.IPv4Address(parts[3]))
        except ipaddress.AddressValueError:
            raise ParseError(f"delegation line {line_no}: malformed base address {parts[3]!r}") from None
        try:
            count = int(parts[4])
        except ValueError:
            raise ParseError(f"delegation line {line_no}: malformed count {parts[4]!r}") from None
        if count <= 0:
            raise ParseError(f"delegation line {line_no}: non-positive count")
        delegation_rows.append((country, base, count))
    return geo_rows, delegation_rows, rejections


def parse_monitors(reader: Iterable[str]) -> dict[str, MonitorId]:
    """Parse ``monitor_id,host_asn,country`` rows into a unique inventory."""
    monitors: dict[str, MonitorId] = {}
    for line_no, line in _data_lines(reader):
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"monitor line {line_no}: expected id,host_asn,country")
        monitor_id = parts[0]
        if monitor_id in monitors:
            raise ParseError(f"monitor line {line_no}: duplicate monitor id {monitor_id!r}")
        try:
            host_asn = _parse_asn_token(parts[1])
        except ValueError:
            raise ParseError(f"monitor line {line_no}: invalid ASN {parts[1]!r}") from None
        try:
            country = validate_country(parts[2])
        except ValueError as exc:
            raise ParseError(f"monitor line {line_no}: {exc}") from None
        monitors[monitor_id] = MonitorId(id=monitor_id, host_asn=host_asn, country=country)
    return monitors


@dataclass
class AuxBundle:
    state_owned: list[tuple[int, str]] = field(default_factory=list)
    org_of: dict[int, str] = field(default_factory=dict)
    memberships: list[tuple[str, str, int]] = field(default_factory=list)
    hegemony: dict[tuple[int, int], Fraction] = field(default_factory=dict)
    clique: frozenset[int] = frozenset()
    multi_origin: frozenset[Prefix] = frozenset()
    rejections: list[RowRejection] = field(default_factory=list)


def parse_aux_tables(
    state_owned_reader: Iterable[str] = (),
    org_reader: Iterable[str] = (),
    membership_reader: Iterable[str] = (),
    hegemony_reader: Iterable[str] = (),
    clique_reader: Iterable[str] = (),
    multi_origin_reader: Iterable[str] = (),
) -> AuxBundle:
    """Parse the auxiliary tables; out-of-range hegemony scores are rejected rows."""
    aux = AuxBundle()

    for line_no, line in _data_lines(state_owned_reader):
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"state-owned line {line_no}: expected asn,country")
        try:
            asn = _parse_asn_token(parts[0])
            country = validate_country(parts[1])
        except ValueError as exc:
            raise ParseError(f"state-owned line {line_no}: {exc}") from None
        aux.state_owned.append((asn, country))

    for line_no, line in _data_lines(org_reader):
        parts = line.split("|")
        if len(parts) != 2:
            raise ParseError(f"org line {line_no}: expected asn|org_id")
        try:
            asn = _parse_asn_token(parts[0])
        except ValueError as exc:
            raise ParseError(f"org line {line_no}: {exc}") from None
        aux.org_of[asn] = parts[1]

    for line_no, line in _data_lines(membership_reader):
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"membership line {line_no}: expected facility_id,country,asn")
        try:
            country = validate_country(parts[1])
            asn = _parse_asn_token(parts[2])
        except ValueError as exc:
            raise ParseError(f"membership line {line_no}: {exc}") from None
        aux.memberships.append((parts[0], country, asn))

    for line_no, line in _data_lines(hegemony_reader):
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"hegemony line {line_no}: expected origin_asn,transit_asn,score")
        try:
            origin = _parse_asn_token(parts[0])
            transit = _parse_asn_token(parts[1])
            score = Fraction(parts[2])
        except ValueError as exc:
            raise ParseError(f"hegemony line {line_no}: {exc}") from None
        if not 0 <= score <= 1:
            aux.rejections.append(RowRejection(line_no, line, "hegemony score outside [0,1]"))
            continue
        aux.hegemony[(origin, transit)] = score

    clique: set[int] = set()
    for line_no, line in _data_lines(clique_reader):
        try:
            clique.add(_parse_asn_token(line))
        except ValueError as exc:
            raise ParseError(f"clique line {line_no}: {exc}") from None
    aux.clique = frozenset(clique)

    multi_origin: set[Prefix] = set()
    for line_no, line in _data_lines(multi_origin_reader):
        try:
            multi_origin.add(Prefix.parse(line))
        except ValueError as exc:
            raise ParseError(f"multi-origin line {line_no}: {exc}") from None
    aux.multi_origin = frozenset(multi_origin)

    return aux


def parse_reserved_asns(reader: Iterable[str]) -> frozenset[int]:
    reserved: set[int] = set()
    for line_no, line in _data_lines(reader):
        if not line.isdigit():
            raise ParseError(f"reserved-ASN line {line_no}: malformed ASN {line!r}")
        reserved.add(int(line))
    return frozenset(reserved)


@dataclass
class DatasetBundle:
    """Everything the pipeline consumes, parsed into model types."""

    paths: list[PathRecord]
    relationships: RelationshipTable
    geo_rows: list[GeoRow]
    delegations: list[DelegationRow]
    monitors: dict[str, MonitorId]
    aux: AuxBundle
    reserved: frozenset[int] = frozenset()
    path_rejections: list[RowRejection] = field(default_factory=list)
    geo_rejections: list[RowRejection] = field(default_factory=list)


# Canonical file names inside an input directory.
FILE_NAMES = {
    "paths": "paths.txt",
    "relationships": "relationships.txt",
    "geo": "geo.csv",
    "delegations": "delegations.txt",
    "monitors": "monitors.csv",
    "state_owned": "state_owned.csv",
    "org": "as2org.txt",
    "memberships": "memberships.csv",
    "hegemony": "hegemony.csv",
    "clique": "clique.txt",
    "multi_origin": "multi_origin.txt",
    "reserved": "reserved_asns.txt",
    "traceroutes": "traceroutes.txt",
}

REQUIRED_FILES = ("paths", "relationships", "geo", "monitors")


def load_bundle_from_texts(files: Mapping[str, str]) -> DatasetBundle:
    """Assemble a bundle from in-memory file contents keyed by canonical name.

    Missing required entries raise FileNotFoundError naming the file.
    """
    for key in REQUIRED_FILES:
        if FILE_NAMES[key] not in files:
            raise FileNotFoundError(FILE_NAMES[key])

    def lines(key: str) -> list[str]:
        return files.get(FILE_NAMES[key], "").splitlines()

    monitors = parse_monitors(lines("monitors"))
    aux = parse_aux_tables(
        state_owned_reader=lines("state_owned"),
        org_reader=lines("org"),
        membership_reader=lines("memberships"),
        hegemony_reader=lines("hegemony"),
        clique_reader=lines("clique"),
        multi_origin_reader=lines("multi_origin"),
    )
    reserved = parse_reserved_asns(lines("reserved"))
    paths, path_rejections = parse_paths(lines("paths"), monitors, aux.multi_origin)
    relationships = parse_relationships(lines("relationships"))
    geo_rows, delegations, geo_rejections = parse_geo_and_delegations(
        lines("geo"), lines("delegations")
    )
    return DatasetBundle(
        paths=paths,
        relationships=relationships,
        geo_rows=geo_rows,
        delegations=delegations,
        monitors=monitors,
        aux=aux,
        reserved=reserved,
        path_rejections=path_rejections,
        geo_rejections=geo_rejections,
    )


def load_bundle(directory: str) -> DatasetBundle:
    """Load a bundle from a directory using the canonical file names.

    Missing required files raise FileNotFoundError naming the file.
    """
    for key in REQUIRED_FILES:
        path = os.path.join(directory, FILE_NAMES[key])
        if not os.path.exists(path):
            raise FileNotFoundError(path)

    files: dict[str, str] = {}
    for name in FILE_NAMES.values():
        path = os.path.join(directory, name)
        if os.path.exists(path):
            with open(path, encoding="utf-8") as handle:
                files[name] = handle.read()
    return load_bundle_from_texts(files)
