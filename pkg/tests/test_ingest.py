from fractions import Fraction

import pytest

from cti import ingest
from cti.model import MonitorId, ParseError, Prefix

MONITORS = {
    "m1": MonitorId("m1", 10, "US"),
    "m2": MonitorId("m2", 20, "DE"),
}


def test_parse_paths_basic():
    records, rejections = ingest.parse_paths(
        ["# comment", "", "m1|10.0.0.0/24|10 20 30"], MONITORS
    )
    assert rejections == []
    assert len(records) == 1
    assert records[0].hops == (10, 20, 30)
    assert records[0].monitor is MONITORS["m1"]


@pytest.mark.parametrize(
    "line,reason",
    [
        ("mX|10.0.0.0/24|10 20", "unknown monitor"),
        ("m1|10.0.0.0/24|10 {20,30}", "as-set"),
        ("m1|10.0.0.0/25|10 20", "length>24"),
        ("m1|bogus|10 20", "unparsable prefix"),
        ("m1|10.0.0.0/24|10 x", "malformed ASN"),
        ("m1|10.0.0.0/24|", "empty path"),
    ],
)
def test_parse_paths_rejections(line, reason):
    records, rejections = ingest.parse_paths([line], MONITORS)
    assert records == []
    assert [r.reason for r in rejections] == [reason]


def test_parse_paths_multi_origin_exclusion():
    excluded = frozenset({Prefix.parse("10.0.0.0/24")})
    records, rejections = ingest.parse_paths(
        ["m1|10.0.0.0/24|10 20", "m1|10.0.1.0/24|10 20"], MONITORS, excluded
    )
    assert [r.reason for r in rejections] == ["multi-origin prefix"]
    assert len(records) == 1


def test_parse_paths_duplicates():
    records, _ = ingest.parse_paths(
        ["m1|10.0.0.0/24|10 20", "m1|10.0.0.0/24|10 20"], MONITORS
    )
    assert len(records) == 1
    with pytest.raises(ParseError, match="lines 1 and 2"):
        ingest.parse_paths(["m1|10.0.0.0/24|10 20", "m1|10.0.0.0/24|10 30"], MONITORS)


def test_parse_paths_malformed_structure():
    with pytest.raises(ParseError):
        ingest.parse_paths(["just one field"], MONITORS)


def test_parse_relationships():
    table = ingest.parse_relationships(["1|2|-1", "2|3|0"])
    assert table.is_p2c(1, 2)
    assert table.lookup(2, 3).kind.value == "p2p"
    with pytest.raises(ParseError):
        ingest.parse_relationships(["1|1|0"])
    with pytest.raises(ParseError):
        ingest.parse_relationships(["1|2|7"])
    with pytest.raises(ParseError):
        ingest.parse_relationships(["1|2|-1", "2|1|-1"])


def test_parse_geo_and_delegations():
    geo_rows, delegations, rejections = ingest.parse_geo_and_delegations(
        ["10.0.0.0/24,CU,256", "10.0.1.0/24,xx,256"],
        [
            "arin|US|ipv4|10.0.0.0|512|20000101|allocated",
            "arin|US|asn|64500|1|20000101|allocated",
            "arin|zz|ipv4|10.1.0.0|256|20000101|allocated",
        ],
    )
    assert geo_rows == [(Prefix.parse("10.0.0.0/24"), "CU", 256)]
    assert delegations == [("US", 10 << 24, 512)]
    assert sorted(r.reason for r in rejections) == ["unparsable country code"] * 2


def test_geo_count_exceeding_capacity_is_hard_error():
    with pytest.raises(ParseError, match="capacity"):
        ingest.parse_geo_and_delegations(["10.0.0.0/24,CU,257"], [])


def test_parse_monitors():
    monitors = ingest.parse_monitors(["m1,10,US", "m2,20,DE"])
    assert monitors["m2"] == MonitorId("m2", 20, "DE")
    with pytest.raises(ParseError, match="duplicate"):
        ingest.parse_monitors(["m1,10,US", "m1,11,US"])
    with pytest.raises(ParseError):
        ingest.parse_monitors(["m1,0,US"])
    with pytest.raises(ParseError):
        ingest.parse_monitors(["m1,10,usa"])


def test_parse_aux_tables():
    aux = ingest.parse_aux_tables(
        state_owned_reader=["100,CU"],
        org_reader=["100|org-1"],
        membership_reader=["fac-1,US,100"],
        hegemony_reader=["100,200,0.25", "100,300,1.5"],
        clique_reader=["10", "20"],
        multi_origin_reader=["10.9.0.0/24"],
    )
    assert aux.state_owned == [(100, "CU")]
    assert aux.org_of == {100: "org-1"}
    assert aux.memberships == [("fac-1", "US", 100)]
    assert aux.hegemony == {(100, 200): Fraction(1, 4)}
    assert [r.reason for r in aux.rejections] == ["hegemony score outside [0,1]"]
    assert aux.clique == frozenset({10, 20})
    assert Prefix.parse("10.9.0.0/24") in aux.multi_origin


def test_parse_reserved_asns():
    assert ingest.parse_reserved_asns(["23456", "0"]) == frozenset({23456, 0})
    with pytest.raises(ParseError):
        ingest.parse_reserved_asns(["abc"])


def test_load_bundle_from_texts_requires_core_files():
    files = {
        "paths.txt": "m1|10.0.0.0/24|10 20\n",
        "relationships.txt": "10|20|-1\n",
        "geo.csv": "10.0.0.0/24,CU,256\n",
        "monitors.csv": "m1,10,US\n",
    }
    bundle = ingest.load_bundle_from_texts(files)
    assert len(bundle.paths) == 1
    assert len(bundle.relationships) == 1
    for required in ("paths.txt", "relationships.txt", "geo.csv", "monitors.csv"):
        broken = dict(files)
        del broken[required]
        with pytest.raises(FileNotFoundError):
            ingest.load_bundle_from_texts(broken)


def test_load_bundle_from_directory(tmp_path):
    (tmp_path / "paths.txt").write_text("m1|10.0.0.0/24|10 20\n")
    (tmp_path / "relationships.txt").write_text("10|20|-1\n")
    (tmp_path / "geo.csv").write_text("10.0.0.0/24,CU,256\n")
    (tmp_path / "monitors.csv").write_text("m1,10,US\n")
    bundle = ingest.load_bundle(str(tmp_path))
    assert bundle.paths[0].hops == (10, 20)
    (tmp_path / "geo.csv").unlink()
    with pytest.raises(FileNotFoundError):
        ingest.load_bundle(str(tmp_path))
