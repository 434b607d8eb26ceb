from fractions import Fraction

import pytest

from cti import synth_oracle as so
from cti.model import ComputationError, MonitorId, PathRecord, Prefix, RelKind


def test_generation_is_deterministic():
    a = so.generate_topology(seed=1)
    b = so.generate_topology(seed=1)
    files_a = so.emit_files(a, so.propagate_routes(a))
    files_b = so.emit_files(b, so.propagate_routes(b))
    assert files_a == files_b


def test_different_seeds_differ():
    a = so.emit_files(so.generate_topology(3), so.propagate_routes(so.generate_topology(3)))
    b = so.emit_files(so.generate_topology(4), so.propagate_routes(so.generate_topology(4)))
    assert a != b


def test_zero_stubs_is_an_error():
    with pytest.raises(ComputationError):
        so.SynthParams(n_stub=0)


def test_p2c_edges_form_a_dag_and_stubs_reach_clique():
    for seed in range(5):
        topo = so.generate_topology(seed)
        order = so._customer_first_order(topo.ases, topo.rels)  # raises on a cycle
        position = {asn: i for i, asn in enumerate(order)}
        for rel in topo.rels:
            if rel.kind is RelKind.P2C:
                assert position[rel.b] < position[rel.a]
        for stub in topo.stubs:
            frontier = {stub}
            reached_clique = False
            while frontier and not reached_clique:
                frontier = set().union(*(topo.rels.providers_of(a) for a in frontier))
                reached_clique = bool(frontier & topo.clique)
            assert reached_clique


def _edge_kind(rels, a, b):
    """Direction of the (a, b) link walking origin -> monitor."""
    if rels.is_p2c(b, a):
        return "up"
    if rels.is_p2c(a, b):
        return "down"
    rel = rels.lookup(a, b)
    assert rel is not None, f"adjacent ASes {a},{b} without a relationship"
    return "peer"


def test_propagated_paths_are_valley_free():
    for seed in range(20):
        topo = so.generate_topology(seed)
        for path in so.propagate_routes(topo):
            walk = path.hops[::-1]  # origin outward
            kinds = [_edge_kind(topo.rels, walk[i], walk[i + 1]) for i in range(len(walk) - 1)]
            pattern = "".join({"up": "u", "peer": "p", "down": "d"}[k] for k in kinds)
            assert "du" not in pattern and "dp" not in pattern and "pu" not in pattern
            assert pattern.count("p") <= 1


def test_single_chain_propagation():
    topo = so.preset_topology("toy-fig1")
    paths = so.propagate_routes(topo)
    by_prefix = {p.prefix: p.hops for p in paths}
    assert by_prefix[Prefix.parse("10.0.0.0/24")] == (10, 20, 101)
    assert by_prefix[Prefix.parse("10.0.4.0/24")] == (10, 40, 103)
    assert len(paths) == 8


def test_equal_length_tie_breaks_on_lowest_next_hop():
    # two providers (20 and 30) both reach origin 101 in one hop; 20 wins at 10
    from cti.model import Relationship, RelationshipTable

    rels = RelationshipTable()
    rels.add(Relationship(10, 30, RelKind.P2C))
    rels.add(Relationship(10, 20, RelKind.P2C))
    rels.add(Relationship(20, 101, RelKind.P2C))
    rels.add(Relationship(30, 101, RelKind.P2C))
    topo = so.preset_topology("toy-fig1")
    topo = so.SynthTopology(
        seed=0,
        params=topo.params,
        clique=frozenset({10}),
        mids=(20, 30),
        stubs=(101,),
        rels=rels,
        geo_rows=[],
        delegations=[],
        origin_of={},
        monitors=[],
    )
    routes = so.routes_for_prefix(topo, 101)
    assert routes[10] == (10, 20, 101)


def test_preset_rejects_unknown_name():
    with pytest.raises(ComputationError):
        so.preset_topology("nope")


def test_emit_files_round_trips_through_parsers():
    from cti import ingest

    topo = so.generate_topology(7)
    paths = so.propagate_routes(topo)
    bundle = ingest.load_bundle_from_texts(so.emit_files(topo, paths))
    assert len(bundle.paths) == len(paths)
    assert bundle.path_rejections == []
    assert len(bundle.relationships) == len(topo.rels)
    assert bundle.aux.clique == topo.clique
    assert {m.id for m in bundle.monitors.values()} == {m.id for m in topo.monitors}


def test_naive_cti_on_empty_paths_is_empty():
    topo = so.preset_topology("toy-fig1")
    assert so.naive_cti(topo, [], "CU").entries == {}


def test_naive_cti_toy_values():
    topo = so.preset_topology("toy-fig1")
    paths = so.propagate_routes(topo)
    report = so.naive_cti(topo, paths, "CU")
    assert report.get("CU", 40) == Fraction(1, 2)
    assert report.get("CU", 20) == Fraction(3, 8)
    assert report.get("CU", 30) == Fraction(1, 8)
    assert report.get("CU", 10) == 0


def test_injection_counts_and_eligibility():
    topo = so.generate_topology(11)
    paths = so.propagate_routes(topo)
    mutated, manifest = so.inject_path_anomalies(
        paths, topo.clique, seed=5, n_loops=2, n_prepends=3, n_poisons=1
    )
    assert manifest == {"Loop": 2, "Prepending": 3, "Poisoned": 1}
    assert len(mutated) == len(paths)
    changed = sum(1 for a, b in zip(mutated, paths) if a.hops != b.hops)
    assert changed == 6
    with pytest.raises(ComputationError):
        so.inject_path_anomalies(paths, topo.clique, seed=5, n_loops=len(paths) + 1)


def test_injection_needs_two_clique_ases_for_poisoning():
    topo = so.preset_topology("toy-fig1")
    paths = so.propagate_routes(topo)
    with pytest.raises(ComputationError):
        so.inject_path_anomalies(paths, topo.clique, seed=1, n_poisons=1)
