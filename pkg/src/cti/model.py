"""Shared domain types used across the transit-influence pipeline.

All types are immutable after construction and safe to share between
concurrent workers. Scores are kept as exact rationals internally and
converted to fixed-point decimals only at serialization time.
"""
from __future__ import annotations

import ipaddress
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

MAX_ASN = 2**32 - 1
MAX_PREFIX_LENGTH = 24

Subject = int | str  # ASN, conglomerate label, or org id


class ParseError(ValueError):
    """Structural error in an input file; aborts the run."""


class ComputationError(ValueError):
    """A metric cannot be evaluated on the given inputs (e.g. empty country)."""


def validate_asn(value: int, reserved: frozenset[int] = frozenset()) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValueError(f"ASN must be an integer, got {value!r}")
    if value <= 0 or value > MAX_ASN:
        raise ValueError(f"invalid ASN {value}")
    if value in reserved:
        raise ValueError(f"reserved ASN {value}")
    return value


_COUNTRY_RE = re.compile(r"^[A-Z]{2}$")


def validate_country(code: str) -> str:
    if not _COUNTRY_RE.match(code):
        raise ValueError(f"invalid country code {code!r}")
    return code


@dataclass(frozen=True, order=True)
class Prefix:
    """An IPv4 prefix in canonical form (host bits zero, length <= 24)."""

    base: int
    length: int

    def __post_init__(self) -> None:
        if not 0 <= self.length <= MAX_PREFIX_LENGTH:
            raise ValueError(f"prefix length {self.length} out of range 0..{MAX_PREFIX_LENGTH}")
        if self.base & (self.size - 1):
            raise ValueError("prefix base has host bits set")
        if not 0 <= self.base <= 0xFFFFFFFF:
            raise ValueError("prefix base out of IPv4 range")

    @classmethod
    def parse(cls, text: str) -> "Prefix":
        try:
            net = ipaddress.ip_network(text.strip(), strict=False)
        except ValueError as exc:
            raise ValueError(f"unparsable prefix {text!r}: {exc}") from None
        if net.version != 4:
            raise ValueError(f"not an IPv4 prefix: {text!r}")
        return cls(int(net.network_address), net.prefixlen)

    @property
    def size(self) -> int:
        return 1 << (32 - self.length)

    def __str__(self) -> str:
        return f"{ipaddress.IPv4Address(self.base)}/{self.length}"


@dataclass(frozen=True)
class MonitorId:
    """A BGP monitor: opaque id plus the AS hosting it and its country."""

    id: str
    host_asn: int
    country: str


@dataclass(frozen=True)
class PathRecord:
    """One monitor's preferred AS-level route to one prefix.

    Hops are ordered monitor-nearest first; the origin AS is last.
    """

    monitor: MonitorId
    prefix: Prefix
    hops: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.hops:
            raise ValueError("path must have at least one hop")

    @property
    def origin(self) -> int:
        return self.hops[-1]


class RelKind(Enum):
    P2C = "p2c"  # a is provider of b
    P2P = "p2p"


@dataclass(frozen=True)
class Relationship:
    a: int
    b: int
    kind: RelKind

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValueError(f"self-relationship for AS {self.a}")


class RelationshipTable:
    """Directed p2c and undirected p2p edges with O(1) pair lookup.

    At most one relationship per unordered ASN pair; lookups of (a, b)
    and (b, a) resolve to the same record.
    """

    def __init__(self) -> None:
        self._by_pair: dict[tuple[int, int], Relationship] = {}
        self._peers: dict[int, set[int]] = {}
        self._providers: dict[int, set[int]] = {}
        self._customers: dict[int, set[int]] = {}

    @staticmethod
    def _key(a: int, b: int) -> tuple[int, int]:
        return (a, b) if a < b else (b, a)

    def add(self, rel: Relationship) -> None:
        key = self._key(rel.a, rel.b)
        existing = self._by_pair.get(key)
        if existing is not None:
            if existing != rel:
                raise ParseError(
                    f"conflicting relationship for ASes {rel.a} and {rel.b}: "
                    f"{existing.kind.value} vs {rel.kind.value}"
                )
            return
        self._by_pair[key] = rel
        if rel.kind is RelKind.P2P:
            self._peers.setdefault(rel.a, set()).add(rel.b)
            self._peers.setdefault(rel.b, set()).add(rel.a)
        else:
            self._providers.setdefault(rel.b, set()).add(rel.a)
            self._customers.setdefault(rel.a, set()).add(rel.b)

    def lookup(self, a: int, b: int) -> Relationship | None:
        return self._by_pair.get(self._key(a, b))

    def is_p2c(self, provider: int, customer: int) -> bool:
        rel = self.lookup(provider, customer)
        return rel is not None and rel.kind is RelKind.P2C and rel.a == provider

    def peers_of(self, asn: int) -> frozenset[int]:
        return frozenset(self._peers.get(asn, ()))

    def providers_of(self, asn: int) -> frozenset[int]:
        return frozenset(self._providers.get(asn, ()))

    def customers_of(self, asn: int) -> frozenset[int]:
        return frozenset(self._customers.get(asn, ()))

    def __len__(self) -> int:
        return len(self._by_pair)

    def __iter__(self) -> Iterator[Relationship]:
        return iter(self._by_pair.values())


@dataclass(frozen=True)
class Observation:
    """One (monitor, prefix, transit AS, hop distance) aggregation unit."""

    monitor: MonitorId
    prefix: Prefix
    transit: int
    distance: int

    def __post_init__(self) -> None:
        if self.distance < 1:
            raise ValueError("observation distance must be >= 1")
        if self.transit == self.monitor.host_asn:
            raise ValueError("transit AS must differ from the monitor host AS")


def _subject_key(subject: Subject) -> tuple[int, int | str]:
    # ASNs sort numerically before string labels; keeps report order deterministic.
    if isinstance(subject, int):
        return (0, subject)
    return (1, str(subject))


@dataclass
class MetricReport:
    """country x subject -> score in [0, 1], deterministically serializable."""

    metric_name: str
    entries: dict[tuple[str, Subject], Fraction] = field(default_factory=dict)

    def set(self, country: str, subject: Subject, value: Fraction) -> None:
        value = Fraction(value)
        if not 0 <= value <= 1:
            raise ValueError(f"score {value} for ({country}, {subject}) outside [0, 1]")
        self.entries[(country, subject)] = value

    def get(self, country: str, subject: Subject) -> Fraction:
        return self.entries.get((country, subject), Fraction(0))

    def sorted_items(self) -> list[tuple[tuple[str, Subject], Fraction]]:
        return sorted(self.entries.items(), key=lambda kv: (kv[0][0], _subject_key(kv[0][1])))

    def to_csv(self) -> str:
        lines = [f"# country,subject,{self.metric_name}"]
        for (country, subject), value in self.sorted_items():
            lines.append(f"{country},{subject},{float(value):.12f}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "metric": self.metric_name,
            "entries": [
                {
                    "country": country,
                    "subject": subject,
                    "numerator": value.numerator,
                    "denominator": value.denominator,
                }
                for (country, subject), value in self.sorted_items()
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_csv(cls, lines: Iterable[str], metric_name: str = "") -> "MetricReport":
        report = cls(metric_name=metric_name)
        for raw in lines:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ParseError(f"malformed report row: {line!r}")
            country, subject_text, value_text = parts
            subject: Subject = int(subject_text) if subject_text.isdigit() else subject_text
            try:
                value = Fraction(value_text)
            except ValueError:
                raise ParseError(f"malformed score in report row: {line!r}") from None
            report.set(validate_country(country), subject, value)
        return report

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        payload = json.loads(text)
        report = cls(metric_name=payload["metric"])
        for entry in payload["entries"]:
            report.set(
                entry["country"],
                entry["subject"],
                Fraction(entry["numerator"], entry["denominator"]),
            )
        return report
