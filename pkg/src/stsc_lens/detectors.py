"""The three clash detectors.

Every detector is a pure function from metrics to findings; findings are
candidates for human review, never verdicts, and carry the metric evidence
that triggered them. Severity is advisory.

* conway: a team pair with a declared architectural dependency whose
  per-thread message-count median collapses to (at most) the configured
  ceiling while overall communication is healthy.
* code_ownership: a developer newly working at a module's core while nobody
  from the recent core is still around to hand the knowledge over.
* project_coordination: someone outside the expected coordinator set
  dominating the growth of information centrality for a stretch of weeks.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from .coreperiphery import CpdmSeries
from .model import ArchComponent, DetectorThresholds, StscFinding, Team
from .socialnet import TOTAL_COMM, BoxStats, CentralityTimeline, box_stats

__all__ = [
    "DetectorThresholds",
    "pair_key",
    "dependent_team_pairs",
    "detect_conway",
    "detect_ownership",
    "detect_coordination",
]


def pair_key(team_a: str, team_b: str) -> str:
    """Canonical name for an unordered team pair, e.g. ``bpel|front``."""
    a, b = sorted((team_a, team_b))
    return f"{a}|{b}"


def dependent_team_pairs(
    teams: Sequence[Team], components: Sequence[ArchComponent]
) -> set[tuple[str, str]]:
    """Unordered team pairs connected by an architectural dependency.

    Team A owns component X, X depends on Y, Y is owned by a different
    team B: (A, B) is a dependent pair. Components without owners produce
    no pairs.
    """
    owner: dict[str, str] = {}
    for team in teams:
        for cid in sorted(team.component_ids):
            owner.setdefault(cid, team.id)
    pairs: set[tuple[str, str]] = set()
    for component in components:
        team_a = owner.get(component.id)
        if team_a is None:
            continue
        for dep in sorted(component.depends_on):
            team_b = owner.get(dep)
            if team_b is None or team_b == team_a:
                continue
            pairs.add(tuple(sorted((team_a, team_b))))  # type: ignore[arg-type]
    return pairs


def _box_evidence(prefix: str, stats: BoxStats) -> dict[str, float]:
    return {
        f"{prefix}_median": stats.median,
        f"{prefix}_q1": stats.q1,
        f"{prefix}_q3": stats.q3,
        f"{prefix}_iqr": stats.iqr,
        f"{prefix}_lower_whisker": stats.lower_whisker,
        f"{prefix}_upper_whisker": stats.upper_whisker,
        f"{prefix}_outlier_count": float(len(stats.outliers)),
    }


def detect_conway(
    pair_counts: Mapping[str, Sequence[float]],
    teams: Sequence[Team],
    components: Sequence[ArchComponent],
    thresholds: DetectorThresholds | None = None,
) -> list[StscFinding]:
    """Flag dependent team pairs that stay silent while overall traffic is healthy.

    ``pair_counts`` must contain one distribution per dependent team pair
    (keyed by :func:`pair_key`) plus the ``TotalComm`` distribution, as
    produced by :func:`stsc_lens.socialnet.interteam_message_counts`. A pair
    is flagged when its per-thread median is at most
    ``conway_max_pair_median`` while the total median is at least
    ``conway_min_total_median``. Severity compares the two medians.
    """
    thresholds = thresholds or DetectorThresholds()
    pairs = dependent_team_pairs(teams, components)
    if not pairs:
        return []
    if TOTAL_COMM not in pair_counts:
        raise ValueError(f"pair_counts must include the {TOTAL_COMM!r} distribution")
    total_values = list(pair_counts[TOTAL_COMM])
    if not total_values:
        return []
    total_stats = box_stats(total_values)

    findings: list[StscFinding] = []
    for team_a, team_b in sorted(pairs):
        key = pair_key(team_a, team_b)
        if key not in pair_counts:
            raise ValueError(f"no message-count distribution for dependent team pair {key!r}")
        pair_stats = box_stats(list(pair_counts[key]))
        if (
            pair_stats.median <= thresholds.conway_max_pair_median
            and total_stats.median >= thresholds.conway_min_total_median
        ):
            severity = 1.0 - (pair_stats.median + 1.0) / (total_stats.median + 1.0)
            severity = min(1.0, max(0.0, severity))
            evidence = {
                **_box_evidence("pair", pair_stats),
                **_box_evidence("total", total_stats),
                "thread_count": float(len(total_values)),
            }
            findings.append(
                StscFinding(
                    kind="conway",
                    subject=key,
                    interval=None,
                    evidence=evidence,
                    severity=severity,
                )
            )
    return findings


def detect_ownership(
    series: CpdmSeries, thresholds: DetectorThresholds | None = None
) -> list[StscFinding]:
    """Flag unsupported core turnover in a module's CPDM history.

    A developer is core in a version when their CPDM reaches
    ``ownership_core_cpdm``. A finding is raised for developer d at version
    v when d is core at v for the first time and nobody who was core within
    the previous ``ownership_prior_core_versions`` versions is still core at
    v. The first version has no history and is never flagged.
    """
    thresholds = thresholds or DetectorThresholds()
    versions = series.versions
    if len(versions) < 2:
        return []
    cut = thresholds.ownership_core_cpdm
    window = thresholds.ownership_prior_core_versions

    def core(dev: str, version: str) -> bool:
        return series.values.get((dev, version), 0.0) >= cut

    findings: list[StscFinding] = []
    for vi in range(1, len(versions)):
        version = versions[vi]
        recent = versions[max(0, vi - window) : vi]
        held_over = sorted(
            dev
            for dev in series.developers
            if any(core(dev, prior) for prior in recent) and core(dev, version)
        )
        for dev in sorted(series.developers):
            if not core(dev, version):
                continue
            if any(core(dev, prior) for prior in versions[:vi]):
                continue
            others = [d for d in held_over if d != dev]
            if others:
                continue
            value = series.values[(dev, version)]
            prior_core = sorted(
                d
                for d in series.developers
                if d != dev and any(core(d, prior) for prior in recent)
            )
            evidence: dict[str, float] = {
                "cpdm": value,
                "core_threshold": cut,
                "prior_core_developer_count": float(len(prior_core)),
            }
            for d in prior_core:
                evidence[f"cpdm_now[{d}]"] = series.values.get((d, version), 0.0)
            k_eff = series.scale.get(version, 0)
            severity = min(1.0, value / k_eff) if k_eff else 1.0
            findings.append(
                StscFinding(
                    kind="code_ownership",
                    subject=f"{dev}@{series.module}",
                    interval=(version, version),
                    evidence=evidence,
                    severity=severity,
                )
            )
    return findings


def detect_coordination(
    timeline: CentralityTimeline,
    expected: frozenset[str] | set[str],
    thresholds: DetectorThresholds | None = None,
    project: str | None = None,
) -> list[StscFinding]:
    """Flag stretches where an unexpected person dominates coordination.

    Over every window of ``coordination_window_weeks`` grid steps, the
    dominant coordinator is the person whose cumulative centrality grows the
    most (ties: larger cumulative value at the window end, then smaller
    person id). Windows whose dominant person is outside ``expected`` and
    whose growth reaches ``coordination_margin`` merge into maximal disjoint
    intervals; each yields one finding naming the usurping coordinator.
    """
    thresholds = thresholds or DetectorThresholds()
    if not expected:
        raise ValueError("expected coordinator set must be non-empty")
    weeks = timeline.weeks
    window = thresholds.coordination_window_weeks
    persons = sorted(timeline.series)
    if len(weeks) <= window or not persons:
        return []

    flagged: list[tuple[int, str, float]] = []  # (start index, dominant, increase)
    for start in range(len(weeks) - window):
        end = start + window
        best: tuple[float, float, str] | None = None
        for person in persons:
            values = timeline.series[person]
            increase = values[end] - values[start]
            candidate = (-increase, -values[end], person)
            if best is None or candidate < best:
                best = candidate
        assert best is not None
        increase, dominant = -best[0], best[2]
        if dominant not in expected and increase >= thresholds.coordination_margin:
            flagged.append((start, dominant, increase))

    findings: list[StscFinding] = []
    run: list[tuple[int, str, float]] = []

    def close_run() -> None:
        if not run:
            return
        first, last = run[0][0], run[-1][0]
        span = (first, last + window)
        usurpers = sorted({dominant for _s, dominant, _i in run})
        best_usurper = min(
            usurpers,
            key=lambda p: (
                -(timeline.series[p][span[1]] - timeline.series[p][span[0]]),
                p,
            ),
        )
        increase = timeline.series[best_usurper][span[1]] - timeline.series[best_usurper][span[0]]
        expected_best = max(
            (timeline.series[p][span[1]] - timeline.series[p][span[0]] for p in sorted(expected) if p in timeline.series),
            default=0.0,
        )
        project_span = weeks[-1] - weeks[0]
        length = weeks[span[1]] - weeks[span[0]]
        severity = min(1.0, length / project_span) if project_span > 0 else 1.0
        subject = f"{best_usurper}@{project}" if project else best_usurper
        findings.append(
            StscFinding(
                kind="project_coordination",
                subject=subject,
                interval=(str(weeks[span[0]]), str(weeks[span[1]])),
                evidence={
                    "ic_increase": increase,
                    "expected_best_increase": expected_best,
                    "window_weeks": float(window),
                    "margin": thresholds.coordination_margin,
                },
                severity=severity,
            )
        )
        run.clear()

    for entry in flagged:
        if run and entry[0] - run[-1][0] > window:
            close_run()
        run.append(entry)
    close_run()
    return findings
