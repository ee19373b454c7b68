"""Command-line interface wiring ingest -> analytics -> detectors -> reports.

Exit codes form a CI-friendly triage: 0 means clean, 1 means findings were
detected, 2 means the run itself failed (unreadable input, parse error,
invalid bundle). ``analyze`` writes all report files atomically and removes
partial output when a run fails; rerunning with identical inputs and seed
reproduces the output tree byte for byte (run timings therefore go to
stderr, not into the manifest).
"""

from __future__ import annotations

import hashlib
import os
import re
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, NoReturn, Sequence

import click

from . import __version__
from .coreperiphery import (
    cluster_dependency_matrix,
    coreness_ranking,
    cpdm_series,
    people_cluster_matrix,
)
from .detectors import (
    detect_conway,
    detect_coordination,
    detect_ownership,
    dependent_team_pairs,
    pair_key,
)
from .dsmcluster import ClusterParams, cluster
from .ingest import Bundle, BundleParseError, parse_bundle
from .model import (
    Diagnostic,
    StscFinding,
    apply_alias_map,
    split_module_version,
    validate_bundle,
)
from .socialnet import (
    TOTAL_COMM,
    build_thread_graph,
    cumulative_centrality,
    information_centrality,
    interteam_message_counts,
)
from . import report

SEED_ENV_VAR = "STSC_LENS_SEED"
DETECTORS = ("conway", "ownership", "coordination")

_KIND_ORDER = {"conway": 0, "code_ownership": 1, "project_coordination": 2}


@dataclass
class AnalysisResult:
    """Everything one analysis run produced, before serialization."""

    findings: list[StscFinding]
    timelines: dict  # project -> CentralityTimeline
    thread_counts: dict  # project -> int
    graphs: dict  # thread id -> SocialGraph
    graph_scores: dict  # thread id -> CentralityScores
    interteam: dict  # set name -> per-thread counts
    thread_ids: list
    assignments: dict  # "module@version" -> ClusterAssignment
    rankings: dict  # "module@version" -> CorenessRanking
    cdms: dict  # "module@version" -> ClusterDependencyMatrix
    pcms: dict  # "module@version" -> PeopleClusterMatrix
    cpdm_by_module: dict  # module -> CpdmSeries
    diagnostics: list


def _fail(message: str) -> NoReturn:
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(f"cannot read {path}: {exc.strerror or exc}")


def _load_bundle(config: str, threads: str, commits: str, deps: str) -> tuple[Bundle, dict]:
    texts = {
        "config": _read_text(config),
        "threads": _read_text(threads),
        "commits": _read_text(commits),
        "deps": _read_text(deps),
    }
    paths = {"config": config, "threads": threads, "commits": commits, "deps": deps}
    try:
        bundle = parse_bundle(texts["config"], texts["threads"], texts["commits"], texts["deps"])
    except BundleParseError as exc:
        _fail(str(exc))
    inputs = {
        name: {"path": paths[name], "sha256": hashlib.sha256(texts[name].encode()).hexdigest()}
        for name in sorted(texts)
    }
    return bundle, inputs


def _validated(bundle: Bundle) -> tuple[Bundle, list[Diagnostic]]:
    """Apply the alias map, then cross-validate. Errors abort, warnings pass through."""
    threads, commits = apply_alias_map(bundle.threads, bundle.commits, bundle.config.alias_map)
    bundle = Bundle(
        config=bundle.config, threads=tuple(threads), commits=tuple(commits), dsms=bundle.dsms
    )
    diagnostics = validate_bundle(bundle.config, bundle.threads, bundle.commits, bundle.dsms)
    return bundle, diagnostics


def _resolve_seed(cli_seed: int | None, config_seed: int) -> int:
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            return int(env_seed)
        except ValueError:
            _fail(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}")
    if cli_seed is not None:
        return cli_seed
    return config_seed


def run_analysis(
    bundle: Bundle,
    params: ClusterParams,
    detectors: Sequence[str] = DETECTORS,
    *,
    equal_weight_cpdm: bool = False,
    compat_eq4: bool = False,
) -> AnalysisResult:
    """Run the full pipeline on a validated bundle."""
    config = bundle.config
    person_team = config.person_team()

    graphs = {}
    graph_scores = {}
    thread_ids = []
    for thread in bundle.threads:
        graph = build_thread_graph(thread)
        graphs[thread.id] = graph
        graph_scores[thread.id] = information_centrality(graph)
        thread_ids.append(thread.id)

    by_project: dict[str, list] = {}
    for thread in bundle.threads:
        by_project.setdefault(thread.project, []).append(thread)
    timelines = {
        project: cumulative_centrality(threads) for project, threads in by_project.items()
    }
    thread_counts = {project: len(threads) for project, threads in by_project.items()}

    pairs = dependent_team_pairs(config.teams, config.components)
    pair_sets: dict[str, object] = {pair_key(a, b): {(a, b)} for a, b in pairs}
    for name, declared in config.pair_sets.items():
        pair_sets.setdefault(name, set(declared))
    pair_sets[TOTAL_COMM] = set()
    interteam = interteam_message_counts(bundle.threads, person_team, pair_sets)

    assignments = {}
    rankings = {}
    cdms = {}
    pcms = {}
    commits_by_module: dict[str, list] = {}
    for commit in bundle.commits:
        commits_by_module.setdefault(commit.module_name, []).append(commit)
    dsms_by_module: dict[str, dict] = {}
    for key, dsm in bundle.dsms.items():
        name, version = split_module_version(key)
        dsms_by_module.setdefault(name, {})[version] = dsm

    cpdm_by_module = {}
    diagnostics: list[str] = []
    for module in sorted(dsms_by_module):
        versions = dsms_by_module[module]
        version_assignments = {
            version: cluster(dsm, params) for version, dsm in versions.items()
        }
        series = cpdm_series(
            module,
            commits_by_module.get(module, []),
            versions,
            params,
            equal_weight=equal_weight_cpdm,
            literal_distance=compat_eq4,
            assignments=version_assignments,
        )
        cpdm_by_module[module] = series
        diagnostics.extend(series.diagnostics)
        for version, dsm in versions.items():
            key = f"{module}@{version}"
            assignment = version_assignments[version]
            cdm = cluster_dependency_matrix(dsm, assignment)
            ranking = coreness_ranking(cdm)
            version_commits = [
                c for c in commits_by_module.get(module, []) if c.version_tag == version
            ]
            pcm, _notes = people_cluster_matrix(version_commits, dsm, assignment, ranking)
            assignments[key] = assignment
            rankings[key] = ranking
            cdms[key] = cdm
            pcms[key] = pcm

    findings: list[StscFinding] = []
    if "conway" in detectors and bundle.threads:
        findings.extend(
            detect_conway(interteam, config.teams, config.components, config.thresholds)
        )
    if "ownership" in detectors:
        for module in sorted(cpdm_by_module):
            findings.extend(detect_ownership(cpdm_by_module[module], config.thresholds))
    if "coordination" in detectors:
        for project in sorted(timelines):
            expected = config.expected_coordinators.get(project)
            if not expected:
                continue  # no declared expectation, nothing to clash with
            findings.extend(
                detect_coordination(
                    timelines[project], expected, config.thresholds, project=project
                )
            )
    findings.sort(key=lambda f: (_KIND_ORDER[f.kind], f.subject, f.interval or ("", "")))
    return AnalysisResult(
        findings=findings,
        timelines=timelines,
        thread_counts=thread_counts,
        graphs=graphs,
        graph_scores=graph_scores,
        interteam=interteam,
        thread_ids=thread_ids,
        assignments=assignments,
        rankings=rankings,
        cdms=cdms,
        pcms=pcms,
        cpdm_by_module=cpdm_by_module,
        diagnostics=diagnostics,
    )


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9@._-]", "_", name)


def _render_outputs(result: AnalysisResult, manifest: str, ic_display_min: float) -> dict[str, str]:
    files: dict[str, str] = {
        "findings.json": report.findings_json(result.findings),
        "manifest.json": manifest,
        "centrality.csv": report.centrality_csv(
            result.timelines, result.thread_counts, ic_display_min
        ),
        "cpdm.csv": report.cpdm_csv(result.cpdm_by_module),
        "interteam.csv": report.interteam_csv(result.interteam, result.thread_ids),
        "clusters.csv": report.clusters_csv(result.assignments, result.rankings),
    }
    for thread_id, graph in result.graphs.items():
        files[f"dot/thread_{_safe_name(thread_id)}.dot"] = report.thread_dot(
            graph, result.graph_scores[thread_id]
        )
    for key, assignment in result.assignments.items():
        ranking = result.rankings[key]
        pcm = result.pcms[key]
        module, version = split_module_version(key)
        series = result.cpdm_by_module[module]
        values = {dev: series.values.get((dev, version), 0.0) for dev in pcm.developers}
        files[f"dot/clusters_{_safe_name(key)}.dot"] = report.cluster_overlay_dot(
            key, assignment, result.cdms[key], ranking, pcm, values
        )
        files[f"cost_traces/{_safe_name(key)}.csv"] = report.cost_trace_csv(
            assignment.cost_trace
        )
    return files


def _write_tree(out_dir: Path, files: Mapping[str, str]) -> None:
    """Write every file atomically (temp file + rename); clean up on failure."""
    written: list[Path] = []
    try:
        for rel, content in sorted(files.items()):
            target = out_dir / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=".tmp-")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as handle:
                    handle.write(content)
                os.replace(tmp_name, target)
            except BaseException:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
                raise
            written.append(target)
    except BaseException:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise


@click.group()
@click.version_option(version=__version__, prog_name="stsc-lens")
def main() -> None:
    """Detect socio-technical structure clashes in a project bundle."""


def _bundle_options(command):
    for decorator in (
        click.option("--deps", required=True, help="Dependency edge CSV."),
        click.option("--commits", required=True, help="Commit log CSV."),
        click.option("--threads", required=True, help="Thread export JSON."),
        click.option("--config", required=True, help="Project config JSON."),
    ):
        command = decorator(command)
    return command


@main.command()
@_bundle_options
def validate(config: str, threads: str, commits: str, deps: str) -> None:
    """Parse the bundle and report every cross-reference problem."""
    bundle, _inputs = _load_bundle(config, threads, commits, deps)
    _bundle, diagnostics = _validated(bundle)
    for diagnostic in diagnostics:
        click.echo(str(diagnostic))
    sys.exit(1 if diagnostics else 0)


@main.command()
@_bundle_options
@click.option("--out", required=True, help="Output directory for report files.")
@click.option("--seed", type=int, default=None, help="Override the config random seed.")
@click.option("--lambda", "lambda_", type=float, default=2.0, show_default=True, help="Cluster size-penalty exponent.")
@click.option("--k", type=int, default=9, show_default=True, help="Maximum cluster count / CPDM scale.")
@click.option(
    "--detector",
    type=click.Choice(DETECTORS + ("all",)),
    default="all",
    show_default=True,
    help="Run a single detector instead of all three.",
)
@click.option("--compat-eq4", is_flag=True, help="Use the raw column-weighted core distance.")
@click.option("--equal-weight-cpdm", is_flag=True, help="Average CPDM over clusters, not files.")
def analyze(
    config: str,
    threads: str,
    commits: str,
    deps: str,
    out: str,
    seed: int | None,
    lambda_: float,
    k: int,
    detector: str,
    compat_eq4: bool,
    equal_weight_cpdm: bool,
) -> None:
    """Run the full pipeline and write findings plus plot data to --out."""
    started = time.monotonic()
    bundle, inputs = _load_bundle(config, threads, commits, deps)
    bundle, diagnostics = _validated(bundle)
    errors = [d for d in diagnostics if d.severity == "error"]
    for diagnostic in diagnostics:
        click.echo(str(diagnostic), err=True)
    if errors:
        _fail("bundle does not validate; fix the errors above or run `stsc-lens validate`")

    effective_seed = _resolve_seed(seed, bundle.config.random_seed)
    try:
        params = ClusterParams(lambda_=lambda_, max_clusters=k, seed=effective_seed)
    except ValueError as exc:
        _fail(str(exc))
    selected = DETECTORS if detector == "all" else (detector,)

    try:
        result = run_analysis(
            bundle,
            params,
            selected,
            equal_weight_cpdm=equal_weight_cpdm,
            compat_eq4=compat_eq4,
        )
    except ValueError as exc:
        _fail(str(exc))
    for note in result.diagnostics:
        click.echo(f"warning: {note}", err=True)

    manifest = report.manifest_json(
        tool_version=__version__,
        seed=effective_seed,
        inputs=inputs,
        parameters={
            "lambda": lambda_,
            "k": k,
            "detector": detector,
            "compat_eq4": compat_eq4,
            "equal_weight_cpdm": equal_weight_cpdm,
        },
    )
    files = _render_outputs(result, manifest, bundle.config.thresholds.ic_display_min)
    out_dir = Path(out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_tree(out_dir, files)
    except OSError as exc:
        _fail(f"cannot write outputs under {out}: {exc}")
    elapsed = time.monotonic() - started
    click.echo(f"analyzed in {elapsed:.2f}s: {len(result.findings)} finding(s)", err=True)
    sys.exit(1 if result.findings else 0)


@main.command("export-dot")
@_bundle_options
@click.argument("selection")
def export_dot(config: str, threads: str, commits: str, deps: str, selection: str) -> None:
    """Print one analysis graph as DOT.

    SELECTION is ``thread:<thread id>``, ``project:<project id>`` or
    ``clusters:<module>@<version>``.
    """
    bundle, _inputs = _load_bundle(config, threads, commits, deps)
    bundle, diagnostics = _validated(bundle)
    if any(d.severity == "error" for d in diagnostics):
        for diagnostic in diagnostics:
            click.echo(str(diagnostic), err=True)
        _fail("bundle does not validate")

    kind, sep, name = selection.partition(":")
    if not sep or kind not in ("thread", "project", "clusters"):
        _fail(
            f"unknown selection {selection!r}; expected thread:<id>, project:<id> "
            "or clusters:<module>@<version>"
        )

    if kind == "thread":
        for thread in bundle.threads:
            if thread.id == name:
                graph = build_thread_graph(thread)
                click.echo(report.thread_dot(graph, information_centrality(graph)), nl=False)
                return
        _fail(f"unknown thread {name!r}")
    elif kind == "project":
        project_threads = [t for t in bundle.threads if t.project == name]
        graphs = [build_thread_graph(t) for t in project_threads]
        timeline = cumulative_centrality(project_threads)
        click.echo(report.project_dot(name, graphs, timeline), nl=False)
    else:
        if name not in bundle.dsms:
            _fail(f"no dependency matrix for {name!r}")
        try:
            module, _version = split_module_version(name)
        except ValueError as exc:
            _fail(str(exc))
        result = run_analysis(bundle, ClusterParams(seed=bundle.config.random_seed), detectors=())
        key = name
        pcm = result.pcms[key]
        series = result.cpdm_by_module[module]
        version = split_module_version(key)[1]
        values = {dev: series.values.get((dev, version), 0.0) for dev in pcm.developers}
        click.echo(
            report.cluster_overlay_dot(
                key, result.assignments[key], result.cdms[key], result.rankings[key], pcm, values
            ),
            nl=False,
        )


if __name__ == "__main__":
    main()
