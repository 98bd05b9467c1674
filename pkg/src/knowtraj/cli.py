"""Command-line driver: ingest → split → build → score → evaluate → aggregate.

Every artifact carries the config hash and seed. Worker count and output
location are excluded from the hash because they never change results.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from knowtraj import baselines, checks, community, diffusion, evaluation
from knowtraj._io import atomic_write, header_line
from knowtraj.errors import KnowtrajError
from knowtraj.network import (
    BiLayerNetwork,
    SemanticLayerConfig,
    build_network,
    build_semantic_layer,
    export_tsv,
    import_tsv,
    load_vectors,
    network_stats,
    read_edge_csv,
)
from knowtraj.records import parse_corpus, split_by_year

logger = logging.getLogger("knowtraj")

FORMATS = ("jsonl", "json", "csv", "tsv")
EVAL_METHODS = ("diffusion", "jc", "aa", "pa", "ra", "wra", "content", "cf")
UNHASHED = {"workers", "output", "config", "command", "verbose", "curve_points"}


class ConfigError(KnowtrajError):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors surface as one ConfigError line instead of a usage dump."""

    def error(self, message: str):
        raise ConfigError(f"{message} (see `{self.prog} --help`)")


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    format: str = "jsonl"
    cutoff_year: int | None = None
    method: list[str] = field(default_factory=lambda: ["diffusion"])
    top_n: int = diffusion.DEFAULT_TOP_N
    top_k: list[int] = field(default_factory=lambda: [500, 1000, 1500])
    probe_size: int = 20000
    seed: int = 0
    workers: int = 1
    output: str = "out"
    vectors: str | None = None
    similarity_floor: float = 0.0
    recs: str | None = None
    author_communities: str | None = None
    topic_communities: str | None = None
    targets: str | None = None
    curve_points: int = 0
    config: str | None = None
    verbose: bool = False

    def validate(self) -> None:
        if self.workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {self.workers}")
        if self.format not in FORMATS:
            raise ConfigError(f"--format must be one of {FORMATS}")
        bad = [m for m in self.method if m not in baselines.METHODS]
        if bad:
            raise ConfigError(f"unknown method {bad[0]!r}; choose from {', '.join(baselines.METHODS)}")
        if "semantic" in self.method and not self.vectors:
            raise ConfigError("method 'semantic' needs --vectors")
        if self.top_n < 0:
            raise ConfigError("--top-n must be >= 0")
        if any(k <= 0 for k in self.top_k):
            raise ConfigError("--top-k values must be positive")

    def hash(self) -> str:
        payload = {k: v for k, v in asdict(self).items() if k not in UNHASHED}
        payload["command"] = self.command
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def meta(self) -> dict:
        return {"config_hash": self.hash(), "seed": self.seed}


def _int_list(text: str) -> list[int]:
    return [int(x) for x in str(text).replace(" ", "").split(",") if x]


def _str_list(text: str) -> list[str]:
    return [x.strip().lower() for x in str(text).split(",") if x.strip()]


def read_config_file(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` comments; keys may use dashes or underscores."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _add_common(p: argparse.ArgumentParser, *names: str) -> None:
    p.add_argument("--config", help="key=value file; explicit flags win")
    p.add_argument("--output", "-o", help="output directory")
    p.add_argument("--workers", type=int, help="worker threads (default: $KNOWTRAJ_WORKERS or 1)")
    p.add_argument("--seed", type=int, help="RNG seed recorded in every artifact")
    p.add_argument("-v", "--verbose", action="store_true", default=None)
    opts = {
        "input": lambda: p.add_argument("--input", "-i", help="record file, edge CSV, or exported network dir"),
        "format": lambda: p.add_argument("--format", choices=FORMATS),
        "cutoff": lambda: p.add_argument("--cutoff-year", type=int, dest="cutoff_year"),
        "method": lambda: p.add_argument("--method", type=_str_list, help="comma list of " + "|".join(baselines.METHODS)),
        "top_n": lambda: p.add_argument("--top-n", type=int, dest="top_n"),
        "top_k": lambda: p.add_argument("--top-k", type=_int_list, dest="top_k"),
        "probe": lambda: p.add_argument("--probe-size", type=int, dest="probe_size"),
        "vectors": lambda: (
            p.add_argument("--vectors", help="topic vectors (label<TAB>values per line, or JSON)"),
            p.add_argument("--similarity-floor", type=float, dest="similarity_floor"),
        ),
        "targets": lambda: p.add_argument("--targets", help="file of author identities, one per line"),
        "curve": lambda: p.add_argument(
            "--curve-points", type=int, dest="curve_points", help="thin exported ROC curves (0 keeps all)"
        ),
    }
    for name in names:
        opts[name]()


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="knowtraj", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_common(sub.add_parser("ingest", help="parse records and report the time split"), "input", "format", "cutoff")
    _add_common(sub.add_parser("build", help="build and export bi-layer network(s)"), "input", "format", "cutoff")
    _add_common(
        sub.add_parser("recommend", help="rank unlinked topics per author"),
        "input", "format", "cutoff", "method", "top_n", "vectors", "targets",
    )
    _add_common(
        sub.add_parser("evaluate", help="time-split ROC/AUC over all candidate pairs"),
        "input", "format", "cutoff", "method", "top_k", "vectors", "curve",
    )
    _add_common(
        sub.add_parser("probe", help="sampled probe-set AUC"),
        "input", "format", "cutoff", "method", "probe", "vectors", "curve",
    )
    agg = sub.add_parser("aggregate", help="community digests of a recommendation file")
    _add_common(agg, "top_n")
    agg.add_argument("--recs", help="recommendations JSONL from `recommend`")
    agg.add_argument("--author-communities", dest="author_communities", help="TSV: author<TAB>community")
    agg.add_argument("--topic-communities", dest="topic_communities", help="TSV: topic<TAB>community")
    _add_common(sub.add_parser("selfcheck", help="run built-in traces and invariant checks"))
    return parser


def parse_config(argv: Sequence[str] | None = None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    values: dict = {}
    if ns.config:
        raw = read_config_file(ns.config)
        conv = {
            "method": _str_list, "top_k": _int_list, "cutoff_year": int, "top_n": int, "probe_size": int,
            "seed": int, "workers": int, "similarity_floor": float, "curve_points": int,
        }
        known = set(RunConfig.__dataclass_fields__)
        for key, value in raw.items():
            if key not in known or key in ("command", "config"):
                raise ConfigError(f"{ns.config}: unknown key {key!r}")
            values[key] = conv.get(key, str)(value)
    values.update({k: v for k, v in vars(ns).items() if v is not None})
    if "workers" not in values:
        values["workers"] = diffusion.default_workers()
    if ns.command in ("evaluate", "probe") and "method" not in values:
        values["method"] = list(EVAL_METHODS) + (["semantic"] if values.get("vectors") else [])
    if ns.command in ("evaluate", "probe") and "cutoff_year" not in values:
        values["cutoff_year"] = 2015
    if ns.command == "aggregate" and "top_n" not in values:
        values["top_n"] = 10
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def _need(cfg: RunConfig, attr: str) -> str:
    value = getattr(cfg, attr)
    if not value:
        raise ConfigError(f"`{cfg.command}` needs --{attr.replace('_', '-')}")
    return value


def _load_records(cfg: RunConfig):
    if cfg.format in ("csv", "tsv"):
        raise ConfigError(f"`{cfg.command}` needs bibliographic records (jsonl/json), not --format {cfg.format}")
    return parse_corpus(_need(cfg, "input"), cfg.format)


def _networks(cfg: RunConfig) -> tuple[BiLayerNetwork, BiLayerNetwork | None, dict]:
    """Return (scoring network, testing network or None, info)."""
    if cfg.format == "csv":
        return read_edge_csv(_need(cfg, "input")), None, {}
    if cfg.format == "tsv":
        return import_tsv(_need(cfg, "input")), None, {}
    parsed = _load_records(cfg)
    info = {"records": len(parsed), "skipped": parsed.skipped, "dropped_authors": parsed.dropped_authors}
    if cfg.cutoff_year is None:
        return build_network(parsed.records), None, info
    split = split_by_year(parsed.records, cfg.cutoff_year)
    if not split.train:
        raise ConfigError(f"no records on or before {cfg.cutoff_year}")
    test = build_network(split.test) if split.test else None
    info.update(train_records=len(split.train), test_records=len(split.test))
    return build_network(split.train), test, info


def _semantic(cfg: RunConfig, net: BiLayerNetwork) -> BiLayerNetwork:
    vectors = load_vectors(_need(cfg, "vectors"))
    return build_semantic_layer(net, SemanticLayerConfig(vectors, cfg.similarity_floor))


def _write_json(path: Path, payload: dict) -> None:
    with atomic_write(path) as fh:
        json.dump(payload, fh, indent=1, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def cmd_ingest(cfg: RunConfig, out: Path) -> None:
    parsed = _load_records(cfg)
    payload = {
        "meta": cfg.meta(),
        "records": len(parsed),
        "skipped": parsed.skipped,
        "skip_reasons": parsed.skip_reasons,
        "dropped_authors": parsed.dropped_authors,
    }
    if cfg.cutoff_year is not None and parsed.records:
        split = split_by_year(parsed.records, cfg.cutoff_year)
        payload["split"] = {
            "cutoff_year": cfg.cutoff_year,
            "train": len(split.train),
            "test": len(split.test),
            "train_share": round(split.train_share, 6),
            "test_share": round(split.test_share, 6),
        }
    _write_json(out / "ingest.json", payload)


def cmd_build(cfg: RunConfig, out: Path) -> None:
    meta = cfg.meta()
    if cfg.format in ("csv", "tsv") or cfg.cutoff_year is None:
        net, _, _ = _networks(cfg)
        export_tsv(net, out / "network", meta)
        _write_json(out / "stats.json", {"meta": meta, "network": network_stats(net).as_dict()})
        return
    parsed = _load_records(cfg)
    split = split_by_year(parsed.records, cfg.cutoff_year)
    stats = {"meta": meta}
    for name, recs in (("train", split.train), ("test", split.test)):
        if not recs:
            continue
        net = build_network(recs)
        export_tsv(net, out / name, meta)
        stats[name] = network_stats(net, recs, len(parsed.records)).as_dict()
    _write_json(out / "stats.json", stats)


def cmd_recommend(cfg: RunConfig, out: Path) -> None:
    net, _, _ = _networks(cfg)
    targets = None
    if cfg.targets:
        with open(cfg.targets, encoding="utf-8") as fh:
            targets = [line.strip() for line in fh if line.strip() and not line.startswith("#")]
    for method in cfg.method:
        scoring = _semantic(cfg, net) if method == "semantic" else net
        lists = baselines.recommend_by_method(scoring, method, targets, cfg.top_n, cfg.workers)
        meta = {**cfg.meta(), "method": method, "top_n": cfg.top_n}
        stem = "recommendations" if len(cfg.method) == 1 else f"recommendations_{method}"
        diffusion.write_jsonl(lists, out / f"{stem}.jsonl", meta)
        with atomic_write(out / f"{stem}.tsv") as fh:
            fh.write(header_line(meta))
            fh.write("author\ttopic\tscore\n")
            for rec in lists:
                for topic, score in rec.entries:
                    fh.write(f"{rec.target}\t{topic}\t{score:.12g}\n")


def _eval_networks(cfg: RunConfig) -> tuple[BiLayerNetwork, BiLayerNetwork, dict]:
    if cfg.format in ("csv", "tsv"):
        raise ConfigError(f"`{cfg.command}` needs dated records to split, not --format {cfg.format}")
    train, test, info = _networks(cfg)
    if test is None:
        raise ConfigError(f"no records after {cfg.cutoff_year}; nothing to evaluate against")
    return train, test, info


def _scoring_nets(cfg: RunConfig, train: BiLayerNetwork) -> dict[str, BiLayerNetwork]:
    nets = {}
    for m in cfg.method:
        nets[m] = _semantic(cfg, train) if m == "semantic" else train
    return nets


def cmd_evaluate(cfg: RunConfig, out: Path) -> None:
    train, test, info = _eval_networks(cfg)
    cands = evaluation.enumerate_candidates(train, test)
    summary = {
        "meta": cfg.meta(),
        "data": info,
        "overlap_authors": cands.overlap_authors,
        "overlap_topics": cands.overlap_topics,
        "possible_pairs": cands.possible,
        "existing_train_edges": cands.existing_edges,
        "candidates": len(cands),
        "methods": {},
    }
    reports = []
    for method, net in _scoring_nets(cfg, train).items():
        scores = baselines.score_pairs(net, method, cands.authors, cands.topics, workers=cfg.workers)
        labeled = evaluation.label_candidates(cands, test, scores)
        summary["positives"] = labeled.n_pos
        per_k = {}
        for k in [None, *cfg.top_k]:
            key = "all" if k is None else str(k)
            try:
                rep = evaluation.roc_auc(labeled, k, method)
            except KnowtrajError as exc:
                logger.warning("%s top-%s: %s", method, key, exc)
                per_k[key] = {"auc": None, "reason": str(exc)}
                continue
            per_k[key] = {"auc": rep.auc, "n_pos": rep.n_pos, "n_neg": rep.n_neg}
            reports.append(rep.thinned(cfg.curve_points))
        summary["methods"][method] = per_k
    if reports:
        evaluation.export_report(reports, out / "roc.csv", cfg.meta())
    _write_json(out / "auc_summary.json", summary)


def cmd_probe(cfg: RunConfig, out: Path) -> None:
    train, test, info = _eval_networks(cfg)
    probe = evaluation.make_probe_set(train, test, cfg.probe_size, cfg.seed)
    summary = {"meta": cfg.meta(), "data": info, "probe_size": probe.size, "methods": {}}
    reports = []
    for method, net in _scoring_nets(cfg, train).items():
        rep = evaluation.probe_auc(baselines.make_scorer(net, method, cfg.workers), probe, method)
        summary["methods"][method] = {"auc": rep.auc}
        reports.append(rep.thinned(cfg.curve_points))
    evaluation.export_report(reports, out / "probe_roc.csv", cfg.meta())
    with atomic_write(out / "probe_pairs.tsv") as fh:
        fh.write(header_line(cfg.meta()))
        for label, arr in (("1", probe.positives), ("0", probe.negatives)):
            for a, t in arr.tolist():
                fh.write(f"{train.author_labels[a]}\t{train.topic_labels[t]}\t{label}\n")
    _write_json(out / "probe_summary.json", summary)


def cmd_aggregate(cfg: RunConfig, out: Path) -> None:
    recs = list(diffusion.read_jsonl(_need(cfg, "recs")))
    authors = community.CommunityAssignment.from_tsv(_need(cfg, "author_communities"), "author")
    digests = community.aggregate_by_community(recs, authors, cfg.top_n)
    community.write_digests(digests, out / "digests.json", {**cfg.meta(), "top_n": cfg.top_n})
    if cfg.topic_communities:
        topics = community.CommunityAssignment.from_tsv(cfg.topic_communities, "topic")
        cross = community.cross_distribution(recs, authors, topics, cfg.top_n)
        community.write_cross_csv(cross, out / "cross_distribution.csv", cfg.meta())


def cmd_selfcheck(cfg: RunConfig, out: Path) -> bool:
    return checks.format_results(checks.run_selfcheck(seed=cfg.seed or 2024))


COMMANDS = {
    "ingest": cmd_ingest,
    "build": cmd_build,
    "recommend": cmd_recommend,
    "evaluate": cmd_evaluate,
    "probe": cmd_probe,
    "aggregate": cmd_aggregate,
    "selfcheck": cmd_selfcheck,
}


def run(cfg: RunConfig) -> int:
    out = Path(cfg.output)
    started = time.perf_counter()
    result = COMMANDS[cfg.command](cfg, out)
    logger.info("%s finished in %.2fs", cfg.command, time.perf_counter() - started)
    return 1 if result is False else 0


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except (KnowtrajError, OSError, ValueError) as exc:
        print(f"knowtraj: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(
        level=logging.INFO if cfg.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    np.seterr(all="ignore")
    try:
        return run(cfg)
    except (KnowtrajError, OSError, ValueError) as exc:
        print(f"knowtraj: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
