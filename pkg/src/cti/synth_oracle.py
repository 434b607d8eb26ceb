"""Synthetic topology generator, valley-free route propagation, anomaly
injection, and the naive score oracle.

The generator builds small seeded AS graphs (clique of peered top ASes,
mid-tier transits, origin stubs) and emits them in the standard input file
formats, so the pipeline consumes a synthetic instance exactly as it would
real data. The naive functions evaluate the same scores by literal
enumeration, sharing only the domain types with the pipeline; exact
equivalence between the two is the correctness oracle.
"""
from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .ingest import DelegationRow, GeoRow
from .model import (
    ComputationError,
    MetricReport,
    MonitorId,
    PathRecord,
    Prefix,
    RelKind,
    Relationship,
    RelationshipTable,
)

GEO_ROUND_UP = 256


@dataclass(frozen=True)
class SynthParams:
    n_clique: int = 2
    n_mid: int = 4
    n_stub: int = 6
    n_monitors: int = 3
    prefixes_per_stub: int = 2
    countries: tuple[str, ...] = ("AA", "BB")
    monitor_countries: tuple[str, ...] = ("MM",)

    def __post_init__(self) -> None:
        if self.n_clique < 1 or self.n_mid < 1 or self.n_stub < 1:
            raise ComputationError("each AS tier needs at least one member")
        if self.n_monitors < 1 or self.prefixes_per_stub < 1:
            raise ComputationError("need at least one monitor and one prefix per stub")
        if not self.countries or not self.monitor_countries:
            raise ComputationError("need at least one country in each pool")


@dataclass
class SynthTopology:
    seed: int
    params: SynthParams
    clique: frozenset[int]
    mids: tuple[int, ...]
    stubs: tuple[int, ...]
    rels: RelationshipTable
    geo_rows: list[GeoRow]
    delegations: list[DelegationRow]
    origin_of: dict[Prefix, int]
    monitors: list[MonitorId]
    state_owned: list[tuple[int, str]] = field(default_factory=list)
    org_of: dict[int, str] = field(default_factory=dict)

    @property
    def ases(self) -> list[int]:
        return sorted(set(self.clique) | set(self.mids) | set(self.stubs))


def generate_topology(seed: int, params: SynthParams | None = None) -> SynthTopology:
    """Deterministic random instance; identical seeds give identical topologies.

    Tiers are strict for provider links (clique above mid above stub), which
    keeps the p2c graph a DAG and every origin reachable from the clique.
    Peering exists inside the clique (full mesh) and sporadically within the
    mid and stub tiers. Some mid ASes originate prefixes too, so state
    conglomerates can contain both originating and pure-transit members.
    """
    params = params or SynthParams()
    rng = random.Random(seed)

    clique = tuple(range(11, 11 + params.n_clique))
    mids = tuple(range(101, 101 + params.n_mid))
    stubs = tuple(range(1001, 1001 + params.n_stub))

    rels = RelationshipTable()
    for i, a in enumerate(clique):
        for b in clique[i + 1 :]:
            rels.add(Relationship(a, b, RelKind.P2P))
    for mid in mids:
        for provider in rng.sample(clique, rng.randint(1, len(clique))):
            rels.add(Relationship(provider, mid, RelKind.P2C))
    for i, a in enumerate(mids):
        for b in mids[i + 1 :]:
            if rng.random() < 0.25:
                rels.add(Relationship(a, b, RelKind.P2P))
    for stub in stubs:
        for provider in rng.sample(mids, rng.randint(1, min(2, len(mids)))):
            rels.add(Relationship(provider, stub, RelKind.P2C))
        if rng.random() < 0.2:
            rels.add(Relationship(rng.choice(clique), stub, RelKind.P2C))
    for i, a in enumerate(stubs):
        for b in stubs[i + 1 :]:
            if rng.random() < 0.1:
                rels.add(Relationship(a, b, RelKind.P2P))

    origin_ases = list(stubs) + [mid for mid in mids if rng.random() < 0.4]
    geo_rows: list[GeoRow] = []
    delegations: list[DelegationRow] = []
    origin_of: dict[Prefix, int] = {}
    block = 0
    for asn in origin_ases:
        for _ in range(params.prefixes_per_stub):
            prefix = Prefix(base=(10 << 24) | (block << 8), length=24)
            block += 1
            origin_of[prefix] = asn
            country = rng.choice(params.countries)
            if rng.random() < 0.2:
                # delegation-fallback prefix: no geolocated mass at all
                delegations.append((country, prefix.base, prefix.size))
                continue
            geo_rows.append((prefix, country, rng.randint(1, prefix.size)))
            if rng.random() < 0.3:
                other = rng.choice(params.countries)
                if other != country:
                    geo_rows.append((prefix, other, rng.randint(0, prefix.size)))

    monitors: list[MonitorId] = []
    host_pool = list(clique) + list(mids)
    for index in range(params.n_monitors):
        host = rng.choice(host_pool)
        if rng.random() < 0.2:
            country = rng.choice(params.countries)
        else:
            country = rng.choice(params.monitor_countries)
        monitors.append(MonitorId(id=f"m{index + 1}", host_asn=host, country=country))

    state_country = params.countries[0]
    state_owned = sorted(
        asn for asn in list(mids) + list(stubs) if rng.random() < 0.35
    )

    org_of = {asn: f"org-{asn // 2}" for asn in origin_ases}

    return SynthTopology(
        seed=seed,
        params=params,
        clique=frozenset(clique),
        mids=mids,
        stubs=stubs,
        rels=rels,
        geo_rows=geo_rows,
        delegations=delegations,
        origin_of=origin_of,
        monitors=monitors,
        state_owned=[(asn, state_country) for asn in state_owned],
        org_of=org_of,
    )


def preset_topology(name: str) -> SynthTopology:
    """Hand-wired fixtures: a country served by three transit ASes under one
    top AS, with the monitor hosted either in the top AS (``toy-fig1``) or in
    a provider above it (``toy-fig1-indirect``)."""
    if name not in ("toy-fig1", "toy-fig1-indirect"):
        raise ComputationError(f"unknown preset {name!r}")

    top, left, center, right = 10, 20, 30, 40
    origins = (101, 102, 103, 104)
    rels = RelationshipTable()
    for transit in (left, center, right):
        rels.add(Relationship(top, transit, RelKind.P2C))
    rels.add(Relationship(left, 101, RelKind.P2C))
    rels.add(Relationship(center, 102, RelKind.P2C))
    rels.add(Relationship(right, 103, RelKind.P2C))
    rels.add(Relationship(right, 104, RelKind.P2C))

    owner_by_block = [101, 101, 101, 102, 103, 103, 104, 104]
    geo_rows: list[GeoRow] = []
    origin_of: dict[Prefix, int] = {}
    for block, owner in enumerate(owner_by_block):
        prefix = Prefix(base=(10 << 24) | (block << 8), length=24)
        origin_of[prefix] = owner
        geo_rows.append((prefix, "CU", 256))

    if name == "toy-fig1":
        clique = frozenset({top})
        mids = (left, center, right)
        monitor_host = top
    else:
        grand = 5
        rels.add(Relationship(grand, top, RelKind.P2C))
        clique = frozenset({grand})
        mids = (top, left, center, right)
        monitor_host = grand

    return SynthTopology(
        seed=0,
        params=SynthParams(n_clique=1, n_mid=len(mids), n_stub=len(origins), n_monitors=1),
        clique=clique,
        mids=mids,
        stubs=origins,
        rels=rels,
        geo_rows=geo_rows,
        delegations=[],
        origin_of=origin_of,
        monitors=[MonitorId(id="m1", host_asn=monitor_host, country="US")],
    )


def _customer_first_order(ases: Sequence[int], rels: RelationshipTable) -> list[int]:
    """Topological order of the p2c DAG with every customer before its
    providers; ties resolve by ascending ASN."""
    pending = {asn: len(rels.customers_of(asn) & set(ases)) for asn in ases}
    heap = [asn for asn, count in pending.items() if count == 0]
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        asn = heapq.heappop(heap)
        order.append(asn)
        for provider in rels.providers_of(asn):
            if provider in pending:
                pending[provider] -= 1
                if pending[provider] == 0:
                    heapq.heappush(heap, provider)
    if len(order) != len(ases):
        raise ComputationError("provider-customer links contain a cycle")
    return order


def _best(
    current: tuple[int, ...] | None,
    candidate: tuple[int, ...],
) -> tuple[int, ...]:
    # shorter path wins; equal lengths resolve by lowest next-hop ASN
    if current is None:
        return candidate
    if (len(candidate), candidate[1]) < (len(current), current[1]):
        return candidate
    return current


def routes_for_prefix(topo: SynthTopology, origin: int) -> dict[int, tuple[int, ...]]:
    """Per-AS preferred route to one origin under standard export policy:
    customer routes beat peer routes beat provider routes, then shortest
    path, then lowest next-hop ASN; customer routes are exported to every
    neighbor, peer and provider routes only to customers."""
    ases = topo.ases
    rels = topo.rels
    order = _customer_first_order(ases, rels)

    from_customer: dict[int, tuple[int, ...]] = {origin: (origin,)}
    for asn in order:
        if asn == origin:
            continue
        chosen = None
        for customer in sorted(rels.customers_of(asn)):
            route = from_customer.get(customer)
            if route is not None:
                chosen = _best(chosen, (asn,) + route)
        if chosen is not None:
            from_customer[asn] = chosen

    from_peer: dict[int, tuple[int, ...]] = {}
    for asn in ases:
        chosen = None
        for peer in sorted(rels.peers_of(asn)):
            route = from_customer.get(peer)
            if route is not None:
                chosen = _best(chosen, (asn,) + route)
        if chosen is not None:
            from_peer[asn] = chosen

    selected: dict[int, tuple[int, ...]] = dict(from_customer)
    for asn, route in from_peer.items():
        selected.setdefault(asn, route)

    from_provider: dict[int, tuple[int, ...]] = {}
    for asn in reversed(order):
        if asn in selected:
            continue
        chosen = None
        for provider in sorted(rels.providers_of(asn)):
            route = selected.get(provider) or from_provider.get(provider)
            if route is not None:
                chosen = _best(chosen, (asn,) + route)
        if chosen is not None:
            from_provider[asn] = chosen
    selected.update(from_provider)
    return selected


def propagate_routes(topo: SynthTopology) -> list[PathRecord]:
    """One preferred path per (monitor, prefix) where the host AS has a route."""
    routes_by_origin: dict[int, dict[int, tuple[int, ...]]] = {}
    paths: list[PathRecord] = []
    for prefix in sorted(topo.origin_of):
        origin = topo.origin_of[prefix]
        if origin not in routes_by_origin:
            routes_by_origin[origin] = routes_for_prefix(topo, origin)
        routes = routes_by_origin[origin]
        for monitor in topo.monitors:
            route = routes.get(monitor.host_asn)
            if route is not None:
                paths.append(PathRecord(monitor=monitor, prefix=prefix, hops=route))
    return paths


def emit_files(topo: SynthTopology, paths: Sequence[PathRecord]) -> dict[str, str]:
    """Render the instance in the standard input file formats."""
    path_lines = [
        f"{p.monitor.id}|{p.prefix}|{' '.join(str(h) for h in p.hops)}" for p in paths
    ]
    rel_lines = sorted(
        f"{rel.a}|{rel.b}|{'-1' if rel.kind is RelKind.P2C else '0'}" for rel in topo.rels
    )
    geo_lines = [f"{prefix},{country},{count}" for prefix, country, count in topo.geo_rows]
    delegation_lines = [
        f"synth|{country}|ipv4|{_base_text(base)}|{count}|20200101|allocated"
        for country, base, count in topo.delegations
    ]
    monitor_lines = [f"{m.id},{m.host_asn},{m.country}" for m in topo.monitors]
    traceroute_lines = [
        f"t-{p.monitor.id}|{p.prefix}|{' '.join(str(h) for h in p.hops)}" for p in paths
    ]
    files = {
        "paths.txt": _joined(path_lines),
        "relationships.txt": _joined(rel_lines),
        "geo.csv": _joined(geo_lines),
        "delegations.txt": _joined(delegation_lines),
        "monitors.csv": _joined(monitor_lines),
        "clique.txt": _joined(str(asn) for asn in sorted(topo.clique)),
        "state_owned.csv": _joined(f"{asn},{country}" for asn, country in topo.state_owned),
        "as2org.txt": _joined(f"{asn}|{org}" for asn, org in sorted(topo.org_of.items())),
        "traceroutes.txt": _joined(traceroute_lines),
    }
    return files


def _base_text(base: int) -> str:
    return ".".join(str((base >> shift) & 0xFF) for shift in (24, 16, 8, 0))


def _joined(lines: Iterable[str]) -> str:
    body = "\n".join(lines)
    return body + "\n" if body else ""


# ---------------------------------------------------------------------------
# Anomaly injection


def inject_path_anomalies(
    paths: Sequence[PathRecord],
    clique: frozenset[int],
    seed: int,
    n_loops: int = 0,
    n_prepends: int = 0,
    n_poisons: int = 0,
) -> tuple[list[PathRecord], dict[str, int]]:
    """Mutate a clean corpus in place of selected paths and return the
    manifest of injected anomaly counts per category.

    Loops repeat the first hop non-consecutively, prepending duplicates a hop
    consecutively (harmless after collapse), and poisoning wedges a
    non-clique AS between two clique ASes. Each path is mutated at most once.
    """
    rng = random.Random(seed)
    mutated = list(paths)
    eligible = [i for i, p in enumerate(mutated) if len(set(p.hops)) >= 2]
    needed = n_loops + n_prepends + n_poisons
    if len(eligible) < needed:
        raise ComputationError(
            f"corpus has {len(eligible)} mutable paths, {needed} anomalies requested"
        )
    if n_poisons and len(clique) < 2:
        raise ComputationError("poisoning needs at least two clique ASes")
    targets = rng.sample(eligible, needed)
    loop_targets = set(targets[:n_loops])
    prepend_targets = set(targets[n_loops : n_loops + n_prepends])
    poison_targets = set(targets[n_loops + n_prepends :])

    for index in sorted(loop_targets):
        path = mutated[index]
        mutated[index] = PathRecord(path.monitor, path.prefix, path.hops + (path.hops[0],))
    for index in sorted(prepend_targets):
        path = mutated[index]
        at = rng.randrange(len(path.hops))
        hops = path.hops[: at + 1] + (path.hops[at],) + path.hops[at + 1 :]
        mutated[index] = PathRecord(path.monitor, path.prefix, hops)
    clique_sorted = sorted(clique)
    for index in sorted(poison_targets):
        path = mutated[index]
        ca, cb = rng.sample(clique_sorted, 2)
        wedge = next(h for h in path.hops if h not in clique)
        tail = tuple(h for h in path.hops if h not in (ca, cb, wedge))
        mutated[index] = PathRecord(path.monitor, path.prefix, (ca, wedge, cb) + tail)

    manifest = {"Loop": n_loops, "Prepending": n_prepends, "Poisoned": n_poisons}
    return mutated, manifest


# ---------------------------------------------------------------------------
# Naive oracle. Deliberately literal re-implementations that share only the
# domain types with the pipeline.


def _oracle_masses(
    topo: SynthTopology,
    origin_of: Mapping[Prefix, int],
) -> dict[tuple[Prefix, str], int]:
    mass: dict[tuple[Prefix, str], int] = {}
    for prefix, country, count in topo.geo_rows:
        if count > 0:
            mass[(prefix, country)] = count if count >= GEO_ROUND_UP else GEO_ROUND_UP
    located = {prefix for prefix, _country in mass}
    for prefix in origin_of:
        if prefix in located:
            continue
        covering = {
            country
            for country, base, count in topo.delegations
            if base <= prefix.base and prefix.base + prefix.size <= base + count
        }
        if len(covering) == 1:
            mass[(prefix, covering.pop())] = prefix.size
    return mass


def _oracle_country_total(mass: Mapping[tuple[Prefix, str], int], country: str) -> int:
    return sum(v for (_prefix, c), v in mass.items() if c == country)


def _oracle_collapse(hops: Sequence[int]) -> list[int]:
    collapsed: list[int] = []
    for asn in hops:
        if not collapsed or collapsed[-1] != asn:
            collapsed.append(asn)
    return collapsed


def _oracle_retained_segment(
    path: PathRecord, rels: RelationshipTable
) -> tuple[int, ...] | None:
    hops = _oracle_collapse(path.hops)
    if hops and hops[0] == path.monitor.host_asn:
        hops = hops[1:]
    reverse = hops[::-1]
    peak = None
    for k in range(1, len(reverse)):
        if rels.is_p2c(reverse[k], reverse[k - 1]):
            peak = k
    if peak is None:
        return None
    return tuple(reverse[: peak + 1])


def _oracle_substrate(
    topo: SynthTopology, paths: Sequence[PathRecord], country: str
) -> tuple[
    dict[tuple[MonitorId, Prefix], tuple[int, ...]],
    dict[tuple[int, Prefix], int],
    dict[tuple[Prefix, str], int],
    int,
    int,
]:
    origin_of = {p.prefix: _oracle_collapse(p.hops)[-1] for p in paths}
    mass = _oracle_masses(topo, origin_of)
    total = _oracle_country_total(mass, country)
    active = [m for m in topo.monitors if m.country != country]
    active_ids = {m.id for m in active}

    retained: dict[tuple[MonitorId, Prefix], tuple[int, ...]] = {}
    for path in paths:
        if path.monitor.id not in active_ids:
            continue
        if mass.get((path.prefix, country), 0) == 0:
            continue
        segment = _oracle_retained_segment(path, topo.rels)
        if segment is not None:
            retained[(path.monitor, path.prefix)] = segment

    observer_counts: dict[tuple[int, Prefix], int] = {}
    seen: dict[tuple[int, Prefix], set[str]] = {}
    for (monitor, prefix) in retained:
        seen.setdefault((monitor.host_asn, prefix), set()).add(monitor.id)
    for key, ids in seen.items():
        observer_counts[key] = len(ids)

    return retained, observer_counts, mass, total, len(active)


def naive_cti(topo: SynthTopology, paths: Sequence[PathRecord], country: str) -> MetricReport:
    """Literal evaluation: for every monitor and prefix, walk the retained
    segment and accumulate each transit AS's weighted, distance-discounted
    address share."""
    retained, observers, mass, total, n_monitors = _oracle_substrate(topo, paths, country)
    report = MetricReport(metric_name="cti")
    if total == 0 or n_monitors == 0:
        return report
    scores: dict[int, Fraction] = {}
    for (monitor, prefix), segment in retained.items():
        n = observers[(monitor.host_asn, prefix)]
        share = Fraction(mass[(prefix, country)], total)
        for distance in range(1, len(segment)):
            transit = segment[distance]
            term = Fraction(1, n) * Fraction(1, n_monitors) * share * Fraction(1, distance)
            scores[transit] = scores.get(transit, Fraction(0)) + term
    for transit, value in scores.items():
        report.set(country, transit, value)
    return report


def naive_ctin(
    topo: SynthTopology,
    paths: Sequence[PathRecord],
    country: str,
    members: frozenset[int],
) -> Fraction:
    """Set-level score: one term per (monitor, prefix) at the minimum member
    distance; prefixes originated by a member contribute nothing."""
    retained, observers, mass, total, n_monitors = _oracle_substrate(topo, paths, country)
    if total == 0 or n_monitors == 0:
        return Fraction(0)
    score = Fraction(0)
    for (monitor, prefix), segment in retained.items():
        if segment[0] in members:
            continue
        distances = [d for d in range(1, len(segment)) if segment[d] in members]
        if not distances:
            continue
        n = observers[(monitor.host_asn, prefix)]
        share = Fraction(mass[(prefix, country)], total)
        score += Fraction(1, n) * Fraction(1, n_monitors) * share * Fraction(1, min(distances))
    return score


def _oracle_nationality(
    topo: SynthTopology, origin_of: Mapping[Prefix, int]
) -> dict[int, str | None]:
    mass = _oracle_masses(topo, origin_of)
    own: dict[int, dict[str, int]] = {}
    for (prefix, country), value in mass.items():
        origin = origin_of.get(prefix)
        if origin is None:
            continue
        own.setdefault(origin, {})
        own[origin][country] = own[origin].get(country, 0) + value

    label: dict[int, str | None] = {}
    providers = {rel.a for rel in topo.rels if rel.kind is RelKind.P2C}
    for asn in set(own) | providers:
        vector = dict(own.get(asn, {}))
        for customer in topo.rels.customers_of(asn):
            for country, value in own.get(customer, {}).items():
                vector[country] = vector.get(country, 0) + value
        total = sum(vector.values())
        label[asn] = None
        if total > 0:
            for country, value in vector.items():
                if 3 * value >= 2 * total:
                    label[asn] = country
    return label


def naive_transit_fraction(
    topo: SynthTopology,
    paths: Sequence[PathRecord],
    traceroutes: Sequence[tuple[str, Prefix, tuple[int, ...]]],
    country: str,
) -> Fraction:
    """Literal border-crossing count: per domestic origin, the share of its
    traceroutes entering through a foreign-provider p2c link, weighted by the
    origin's share of the country's addresses."""
    origin_of = {p.prefix: _oracle_collapse(p.hops)[-1] for p in paths}
    mass = _oracle_masses(topo, origin_of)
    total = _oracle_country_total(mass, country)
    if total == 0:
        return Fraction(0)
    label = _oracle_nationality(topo, origin_of)

    own: dict[int, int] = {}
    for (prefix, c), value in mass.items():
        if c != country:
            continue
        origin = origin_of.get(prefix)
        if origin is not None:
            own[origin] = own.get(origin, 0) + value

    reached: dict[int, int] = {}
    crossed: dict[int, int] = {}
    for _probe, _prefix, raw_hops in traceroutes:
        hops = _oracle_collapse(raw_hops)
        origin = hops[-1]
        if label.get(origin) != country:
            continue
        reached[origin] = reached.get(origin, 0) + 1
        last_foreign = None
        for index, asn in enumerate(hops):
            if label.get(asn) != country:
                last_foreign = index
        if last_foreign is None or last_foreign == len(hops) - 1:
            continue
        if topo.rels.is_p2c(hops[last_foreign], hops[last_foreign + 1]):
            crossed[origin] = crossed.get(origin, 0) + 1

    fraction = Fraction(0)
    for origin, count in reached.items():
        hits = crossed.get(origin, 0)
        if hits:
            fraction += Fraction(hits, count) * Fraction(own.get(origin, 0), total)
    return fraction
