"""stsc-lens: mine commit logs, issue threads and dependency matrices for
socio-technical structure clashes.

The package detects three clash patterns: architectural dependencies without
team communication (conway), unsupported core-developer turnover
(code_ownership), and coordination dominated by the wrong people
(project_coordination). See the README for the file formats and CLI.
"""

__version__ = "0.1.0"

from .coreperiphery import (
    ClusterDependencyMatrix,
    CorenessRanking,
    CpdmSeries,
    PeopleClusterMatrix,
    cluster_dependency_matrix,
    coreness_ranking,
    cpdm,
    cpdm_series,
    people_cluster_matrix,
)
from .detectors import (
    dependent_team_pairs,
    detect_conway,
    detect_coordination,
    detect_ownership,
    pair_key,
)
from .dsmcluster import (
    ClusterAssignment,
    ClusterParams,
    DsmClusterer,
    cluster,
    clustered_cost,
    dependency_cost,
    identify_vertical_buses,
)
from .ingest import (
    Bundle,
    BundleParseError,
    BundleSource,
    parse_bundle,
    parse_commit_log,
    parse_config,
    parse_dependency_edges,
    parse_thread_export,
)
from .model import (
    ArchComponent,
    CommitEvent,
    DetectorThresholds,
    Diagnostic,
    Dsm,
    Note,
    Person,
    ProjectConfig,
    StscFinding,
    Team,
    Thread,
    apply_alias_map,
    module_version,
    split_module_version,
    validate_bundle,
    week_index,
)
from .socialnet import (
    TOTAL_COMM,
    BoxStats,
    CentralityScores,
    CentralityTimeline,
    SocialGraph,
    box_stats,
    build_thread_graph,
    cumulative_centrality,
    information_centrality,
    interteam_message_counts,
)

__all__ = [
    "__version__",
    "ArchComponent",
    "BoxStats",
    "Bundle",
    "BundleParseError",
    "BundleSource",
    "CentralityScores",
    "CentralityTimeline",
    "ClusterAssignment",
    "ClusterDependencyMatrix",
    "ClusterParams",
    "CommitEvent",
    "CorenessRanking",
    "CpdmSeries",
    "DetectorThresholds",
    "Diagnostic",
    "Dsm",
    "DsmClusterer",
    "Note",
    "PeopleClusterMatrix",
    "Person",
    "ProjectConfig",
    "SocialGraph",
    "StscFinding",
    "TOTAL_COMM",
    "Team",
    "Thread",
    "apply_alias_map",
    "box_stats",
    "build_thread_graph",
    "cluster",
    "cluster_dependency_matrix",
    "clustered_cost",
    "coreness_ranking",
    "cpdm",
    "cpdm_series",
    "cumulative_centrality",
    "dependency_cost",
    "dependent_team_pairs",
    "detect_conway",
    "detect_coordination",
    "detect_ownership",
    "identify_vertical_buses",
    "information_centrality",
    "interteam_message_counts",
    "module_version",
    "pair_key",
    "parse_bundle",
    "parse_commit_log",
    "parse_config",
    "parse_dependency_edges",
    "parse_thread_export",
    "people_cluster_matrix",
    "split_module_version",
    "validate_bundle",
    "week_index",
]
