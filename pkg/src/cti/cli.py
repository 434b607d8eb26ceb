"""Command-line surface: one subcommand per metric plus the synthetic
generator and the oracle self-check.

Every run that consumes an input directory writes a manifest next to the
reports, listing the content hash of each consumed file and the effective
configuration. Reports are deterministic: identical inputs and flags give
byte-identical files. Exit codes: 0 success, 2 missing input file, 3 parse
error, 4 computation error.
"""
from __future__ import annotations

import hashlib
import json
import os
import sys
from fractions import Fraction
from typing import Callable

import click

from . import clh_compare, ingest, outlier, pipeline, synth_oracle, transit_dominance
from .conglomerate import Conglomerate, compute_ctin
from .model import ComputationError, MetricReport, ParseError

EXIT_MISSING_FILE = 2
EXIT_PARSE_ERROR = 3
EXIT_COMPUTE_ERROR = 4


def _guarded(action: Callable[[], None]) -> None:
    try:
        action()
    except FileNotFoundError as exc:
        click.echo(f"missing input file: {exc}", err=True)
        sys.exit(EXIT_MISSING_FILE)
    except ParseError as exc:
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(EXIT_PARSE_ERROR)
    except ComputationError as exc:
        click.echo(f"computation error: {exc}", err=True)
        sys.exit(EXIT_COMPUTE_ERROR)


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        digest.update(handle.read())
    return digest.hexdigest()


def _write_manifest(output: str, command: str, input_dir: str | None, config: dict) -> None:
    inputs: dict[str, str] = {}
    if input_dir is not None:
        for name in sorted(ingest.FILE_NAMES.values()):
            path = os.path.join(input_dir, name)
            if os.path.exists(path):
                inputs[name] = _sha256(path)
    manifest = {"command": command, "inputs": inputs, "config": config}
    os.makedirs(output, exist_ok=True)
    with open(os.path.join(output, f"manifest_{command}.json"), "w", encoding="utf-8") as out:
        json.dump(manifest, out, indent=2, sort_keys=True)
        out.write("\n")


def _emit_report(report: MetricReport, output: str, stem: str, fmt: str) -> str:
    os.makedirs(output, exist_ok=True)
    path = os.path.join(output, f"{stem}.{fmt}")
    body = report.to_csv() if fmt == "csv" else report.to_json()
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        out.write(body)
    return path


_INPUT = click.option("--input", "input_dir", required=True, help="Input data directory.")
_COUNTRY = click.option("--country", required=True, help="Destination country (ISO alpha-2).")
_OUTPUT = click.option("--output", default=".", show_default=True, help="Report directory.")
_FORMAT = click.option(
    "--format",
    "fmt",
    type=click.Choice(["csv", "json"]),
    default="csv",
    show_default=True,
    help="csv carries 12-decimal doubles, json exact rationals.",
)


@click.group()
def main() -> None:
    """Country-level transit influence toolkit."""


@main.command("cti")
@_INPUT
@_COUNTRY
@_OUTPUT
@_FORMAT
@click.option("--min-hosts", default=outlier.DEFAULT_MIN_HOSTS, show_default=True)
@click.option("--trim", default="1/10", show_default=True, help="Outlier tail fraction.")
@click.option("--no-outlier", is_flag=True, help="Skip the per-host outlier filter.")
def cti_command(
    input_dir: str, country: str, output: str, fmt: str, min_hosts: int, trim: str, no_outlier: bool
) -> None:
    """Per-AS transit influence toward one country."""

    def action() -> None:
        sub = pipeline.build_substrate(ingest.load_bundle(input_dir))
        report = pipeline.cti_report(
            sub,
            country,
            outlier_min_hosts=min_hosts,
            outlier_trim=Fraction(trim),
            apply_outlier=not no_outlier,
        )
        path = _emit_report(report, output, f"cti_{country}", fmt)
        _write_manifest(
            output,
            "cti",
            input_dir,
            {
                "country": country,
                "format": fmt,
                "min_hosts": min_hosts,
                "trim": trim,
                "outlier": not no_outlier,
            },
        )
        click.echo(path)

    _guarded(action)


@main.command("ctin")
@_INPUT
@_COUNTRY
@_OUTPUT
@_FORMAT
def ctin_command(input_dir: str, country: str, output: str, fmt: str) -> None:
    """State-conglomerate transit score for one country."""

    def action() -> None:
        sub = pipeline.build_substrate(ingest.load_bundle(input_dir))
        ctin_report, _footprint = pipeline.state_footprint_reports(sub, country)
        path = _emit_report(ctin_report, output, f"ctin_{country}", fmt)
        _write_manifest(output, "ctin", input_dir, {"country": country, "format": fmt})
        click.echo(path)

    _guarded(action)


@main.command("footprint")
@_INPUT
@_COUNTRY
@_OUTPUT
@_FORMAT
def footprint_command(input_dir: str, country: str, output: str, fmt: str) -> None:
    """State footprint: conglomerate transit score plus originated share."""

    def action() -> None:
        sub = pipeline.build_substrate(ingest.load_bundle(input_dir))
        _ctin, footprint_report = pipeline.state_footprint_reports(sub, country)
        path = _emit_report(footprint_report, output, f"footprint_{country}", fmt)
        _write_manifest(output, "footprint", input_dir, {"country": country, "format": fmt})
        click.echo(path)

    _guarded(action)


@main.command("org")
@_INPUT
@_COUNTRY
@_OUTPUT
@click.option("--marginal-threshold", default="1/20", show_default=True)
def org_command(input_dir: str, country: str, output: str, marginal_threshold: str) -> None:
    """Organization-level score sums (upper bound over sibling ASes)."""

    def action() -> None:
        sub = pipeline.build_substrate(ingest.load_bundle(input_dir))
        aggregates = pipeline.org_aggregates(
            sub, country, marginal_threshold=Fraction(marginal_threshold)
        )
        os.makedirs(output, exist_ok=True)
        path = os.path.join(output, f"org_{country}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as out:
            out.write("# org_id,country,cti_sum,top_asn,top_share,marginal\n")
            for agg in aggregates:
                out.write(
                    f"{agg.org_id},{agg.country},{float(agg.cti_sum):.12f},"
                    f"{agg.top_asn},{float(agg.top_share):.12f},{int(agg.marginal)}\n"
                )
        _write_manifest(
            output,
            "org",
            input_dir,
            {"country": country, "marginal_threshold": marginal_threshold},
        )
        click.echo(path)

    _guarded(action)


@main.command("transit-fraction")
@_INPUT
@_COUNTRY
@_OUTPUT
@click.option("--threshold", default="12/25", show_default=True, help="Dominance cutoff.")
def transit_fraction_command(input_dir: str, country: str, output: str, threshold: str) -> None:
    """Address-weighted foreign-transit fraction and dominance verdict."""

    def action() -> None:
        traceroute_path = os.path.join(input_dir, ingest.FILE_NAMES["traceroutes"])
        if not os.path.exists(traceroute_path):
            raise FileNotFoundError(traceroute_path)
        sub = pipeline.build_substrate(ingest.load_bundle(input_dir))
        with open(traceroute_path, encoding="utf-8") as handle:
            traceroutes, _rejections = transit_dominance.parse_traceroutes(handle)
        value = pipeline.transit_fraction(sub, traceroutes, country)
        dominant = transit_dominance.classify_transit_dominant(value, Fraction(threshold))
        os.makedirs(output, exist_ok=True)
        path = os.path.join(output, f"transit_fraction_{country}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as out:
            out.write("# country,transit_fraction,dominant\n")
            out.write(f"{country},{float(value):.12f},{int(dominant)}\n")
        _write_manifest(
            output, "transit-fraction", input_dir, {"country": country, "threshold": threshold}
        )
        click.echo(path)

    _guarded(action)


@main.command("candidates")
@_INPUT
@_COUNTRY
@_OUTPUT
@click.option("--origination-floor", default="1/2000", show_default=True)
def candidates_command(
    input_dir: str, country: str, output: str, origination_floor: str
) -> None:
    """Peering-test verdicts for the country's significant domestic origins."""

    def action() -> None:
        sub = pipeline.build_substrate(ingest.load_bundle(input_dir))
        results = pipeline.candidate_results(
            sub, country, origination_floor=Fraction(origination_floor)
        )
        os.makedirs(output, exist_ok=True)
        path = os.path.join(output, f"candidates_{country}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as out:
            out.write("# asn,candidate,failed_tests\n")
            for result in results:
                out.write(
                    f"{result.asn},{int(result.candidate)},{';'.join(result.failed_tests)}\n"
                )
        _write_manifest(
            output,
            "candidates",
            input_dir,
            {"country": country, "origination_floor": origination_floor},
        )
        click.echo(path)

    _guarded(action)


@main.command("clh")
@_INPUT
@_COUNTRY
@_OUTPUT
@_FORMAT
def clh_command(input_dir: str, country: str, output: str, fmt: str) -> None:
    """Origination-weighted hegemony baseline for one country."""

    def action() -> None:
        sub = pipeline.build_substrate(ingest.load_bundle(input_dir))
        report = pipeline.clh_report(sub, country)
        path = _emit_report(report, output, f"clh_{country}", fmt)
        _write_manifest(output, "clh", input_dir, {"country": country, "format": fmt})
        click.echo(path)

    _guarded(action)


@main.command("compare")
@click.option("--a", "path_a", required=True, help="First report (csv or json).")
@click.option("--b", "path_b", required=True, help="Second report (csv or json).")
@_OUTPUT
def compare_command(path_a: str, path_b: str, output: str) -> None:
    """Entrywise absolute differences between two reports."""

    def load(path: str) -> MetricReport:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
        if path.endswith(".json"):
            return MetricReport.from_json(text)
        return MetricReport.from_csv(text.splitlines())

    def action() -> None:
        stats = clh_compare.compare_reports(load(path_a), load(path_b))
        os.makedirs(output, exist_ok=True)
        path = os.path.join(output, "compare.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as out:
            out.write("# n,mean,p25,median,p75\n")
            out.write(
                f"{stats.n},{float(stats.mean):.12f},{float(stats.p25):.12f},"
                f"{float(stats.median):.12f},{float(stats.p75):.12f}\n"
            )
        _write_manifest(output, "compare", None, {"a": path_a, "b": path_b})
        click.echo(path)

    _guarded(action)


@main.command("synth")
@click.option("--seed", default=1, show_default=True, type=int)
@click.option("--preset", default=None, help="toy-fig1 or toy-fig1-indirect.")
@_OUTPUT
@click.option("--loops", default=0, show_default=True, type=int)
@click.option("--prepends", default=0, show_default=True, type=int)
@click.option("--poisons", default=0, show_default=True, type=int)
def synth_command(
    seed: int, preset: str | None, output: str, loops: int, prepends: int, poisons: int
) -> None:
    """Generate a synthetic instance in the standard input formats."""

    def action() -> None:
        if preset is not None:
            topo = synth_oracle.preset_topology(preset)
        else:
            topo = synth_oracle.generate_topology(seed)
        paths = synth_oracle.propagate_routes(topo)
        manifest = {"Loop": 0, "Prepending": 0, "Poisoned": 0}
        if loops or prepends or poisons:
            paths, manifest = synth_oracle.inject_path_anomalies(
                paths, topo.clique, seed, n_loops=loops, n_prepends=prepends, n_poisons=poisons
            )
        files = synth_oracle.emit_files(topo, paths)
        os.makedirs(output, exist_ok=True)
        for name, content in files.items():
            with open(os.path.join(output, name), "w", encoding="utf-8", newline="\n") as out:
                out.write(content)
        with open(
            os.path.join(output, "injection_manifest.json"), "w", encoding="utf-8"
        ) as out:
            json.dump(manifest, out, indent=2, sort_keys=True)
            out.write("\n")
        _write_manifest(
            output,
            "synth",
            None,
            {
                "seed": seed,
                "preset": preset,
                "loops": loops,
                "prepends": prepends,
                "poisons": poisons,
            },
        )
        click.echo(output)

    _guarded(action)


@main.command("oracle-check")
@click.option("--seeds", default=25, show_default=True, type=int)
@click.option("--start-seed", default=1, show_default=True, type=int)
def oracle_check_command(seeds: int, start_seed: int) -> None:
    """Generate, propagate, run the pipeline and the naive oracle, and fail
    on any disagreement."""

    def action() -> None:
        for seed in range(start_seed, start_seed + seeds):
            mismatch = check_one_seed(seed)
            if mismatch:
                raise ComputationError(f"seed {seed}: {mismatch}")
        click.echo(f"ok: {seeds} instances, pipeline matches oracle exactly")

    _guarded(action)


def check_one_seed(seed: int) -> str | None:
    """Compare pipeline and oracle on one generated instance; return a
    description of the first mismatch, or None when they agree exactly."""
    topo = synth_oracle.generate_topology(seed)
    paths = synth_oracle.propagate_routes(topo)
    files = synth_oracle.emit_files(topo, paths)
    bundle = ingest.load_bundle_from_texts(files)
    sub = pipeline.build_substrate(bundle)
    raw_traceroutes = [(f"t-{p.monitor.id}", p.prefix, p.hops) for p in paths]
    parsed_traceroutes, _rej = transit_dominance.parse_traceroutes(
        files["traceroutes.txt"].splitlines()
    )
    members = frozenset(asn for asn, _c in topo.state_owned)
    for country in topo.params.countries:
        if sub.geo.total.get(country, 0) <= 0:
            continue
        pipe_cti = pipeline.cti_report(sub, country, apply_outlier=False)
        oracle_cti = synth_oracle.naive_cti(topo, paths, country)
        if pipe_cti.entries != oracle_cti.entries:
            return f"cti mismatch for {country}"

        cs = pipeline.build_country_substrate(sub, country)
        if members:
            group = Conglomerate(label="state", members=members, country=country)
            pipe_ctin = compute_ctin(group, cs.observations, cs.weights, sub.geo, cs.monitors)
            oracle_ctin = synth_oracle.naive_ctin(topo, paths, country, members)
            if pipe_ctin != oracle_ctin:
                return f"ctin mismatch for {country}"

        pipe_t = pipeline.transit_fraction(sub, parsed_traceroutes, country)
        oracle_t = synth_oracle.naive_transit_fraction(topo, paths, raw_traceroutes, country)
        if pipe_t != oracle_t:
            return f"transit fraction mismatch for {country}"
    return None


if __name__ == "__main__":
    main()
