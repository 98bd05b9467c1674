"""Diffusion-based author→topic recommendation on bi-layer bibliometric networks."""

from knowtraj.errors import DataError, KnowtrajError, UnknownNodeError
from knowtraj.records import (
    AuthorRef,
    BiblioRecord,
    CorpusSplit,
    ParseResult,
    TopicTag,
    canonicalize_name,
    parse_corpus,
    split_by_year,
)
from knowtraj.network import (
    BiLayerNetwork,
    NetworkStats,
    SemanticLayerConfig,
    build_network,
    build_semantic_layer,
    network_stats,
)
from knowtraj.diffusion import RecommendationList, ResourceState, recommend, recommend_all

__all__ = [
    "AuthorRef",
    "BiLayerNetwork",
    "BiblioRecord",
    "CorpusSplit",
    "DataError",
    "KnowtrajError",
    "NetworkStats",
    "ParseResult",
    "RecommendationList",
    "ResourceState",
    "SemanticLayerConfig",
    "TopicTag",
    "UnknownNodeError",
    "build_network",
    "build_semantic_layer",
    "canonicalize_name",
    "network_stats",
    "parse_corpus",
    "recommend",
    "recommend_all",
    "split_by_year",
]

__version__ = "0.1.0"
