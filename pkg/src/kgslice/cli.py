"""Command-line interface.

Subcommands: ingest, extract, metrics, compare, validate, export,
diff-versions. Exit codes: 0 success, 1 usage error, 2 runtime failure.
Logs go to stderr; -v/-vv raise verbosity. The default SPARQL endpoint
may be set through the KGSLICE_ENDPOINT environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import export as export_mod
from .endpoint import EndpointConfig, HttpBackend, sparql_extract
from .errors import JobFailed, KgsliceError, ParseError
from .graph import BOTH, RDF_TYPE, KnowledgeGraph, Subgraph, load_ntriples, subgraph_from_triples
from .influence import PprParams, extract_influence
from .metrics import quality_report, render_reports, reports_tsv
from .patterns import LocalBackend, PatternTask, pattern_task_for
from .rgcn import RgcnReferenceModel, prune_outside_reach, random_features, rgcn_forward
from .tasks import (
    NODE_CLASSIFICATION,
    build_labels,
    make_splits,
    read_config,
    resolve_targets,
    split_from_config,
    task_from_config,
)
from .walks import WalkParams, extract_random_walk

log = logging.getLogger("kgslice")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _load_kg(path, type_predicate=RDF_TYPE, strict=False):
    kg, errors = load_ntriples(path, type_predicate_iri=type_predicate, strict=strict)
    for err in errors[:20]:
        log.warning("%s: %s", path, err)
    if len(errors) > 20:
        log.warning("%s: %d more parse errors", path, len(errors) - 20)
    return kg, errors


def _write_subgraph(sg: Subgraph, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "subgraph.nt", "w", encoding="utf-8") as fh:
        sg.write_ntriples(fh)
    with open(outdir / "subgraph.csv", "w", encoding="utf-8", newline="") as fh:
        sg.write_csv(fh)
    manifest = {
        "provenance": sg.provenance,
        "vertices": len(sg.vertices),
        "triples": len(sg.triples),
        "node_types": len(sg.node_type_ids),
        "predicates": len(sg.predicate_ids),
    }
    with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _subgraph_from_file(path, kg: KnowledgeGraph | None):
    """Load an extracted subgraph; map into ``kg``'s id space when given."""
    loaded, _ = _load_kg(path)
    if kg is None:
        return subgraph_from_triples(loaded, loaded.triples), loaded
    rows = [
        (loaded.term(s), loaded.predicate_term(p), loaded.term(o))
        for s, p, o in loaded.triples
    ]
    triples = [
        (kg.vertex_id(s), kg.predicate_id(p), kg.vertex_id(o)) for s, p, o in rows
    ]
    return subgraph_from_triples(kg, triples), kg


def _strip_label_edges(sg: Subgraph, target_type: int, label_predicate: int) -> Subgraph:
    """Drop label-predicate triples whose subject is a target (leakage)."""
    kg = sg.kg
    target_vertices = {
        s
        for s, p, o in sg.type_triples
        if kg.type_id_of_vertex(o) == target_type
    }
    kept = [
        t
        for t in sg.triples
        if not (t[1] == label_predicate and t[0] in target_vertices)
    ]
    # vertices that only carried label edges drop out with them
    out = subgraph_from_triples(kg, kept, provenance=dict(sg.provenance))
    out.provenance["label_edges_excluded"] = len(sg.triples) - len(kept)
    return out


def cmd_ingest(args) -> int:
    kg, errors = _load_kg(args.input, type_predicate=args.type_predicate, strict=args.strict)
    print(f"vertices\t{kg.vertex_count()}")
    print(f"triples\t{kg.triple_count()}")
    print(f"node_types\t{kg.type_count()}")
    print(f"predicates\t{kg.predicate_count()}")
    print(f"parse_errors\t{len(errors)}")
    if args.dict_out:
        with open(args.dict_out, "w", encoding="utf-8") as fh:
            kg.write_dictionary_tsv(fh)
    if args.nt_out:
        with open(args.nt_out, "w", encoding="utf-8") as fh:
            kg.write_ntriples(fh)
    return 0


def cmd_extract(args) -> int:
    cfg = read_config(args.config)
    outdir = Path(args.out)

    if args.engine == "sparql" and args.endpoint:
        task = PatternTask(
            kind=cfg.get("task", NODE_CLASSIFICATION).lower(),
            target_type_iri=cfg["target_type"],
            target_predicate_iri=cfg.get("target_predicate"),
            object_type_iri=cfg.get("object_type"),
        )
        endpoint = EndpointConfig(
            url=args.endpoint,
            graph_iri=args.graph,
            timeout=args.timeout,
            retries=args.retries,
            compression=args.compress,
            workers=args.workers,
        )
        try:
            sg = sparql_extract(
                HttpBackend(endpoint), task, args.d, args.h, args.bs, workers=args.workers
            )
        except JobFailed as exc:
            outdir.mkdir(parents=True, exist_ok=True)
            partial = {
                "failed_job": list(exc.job),
                "completed_jobs": getattr(exc, "completed_jobs", []),
                "cause": str(exc.cause),
            }
            with open(outdir / "partial.json", "w", encoding="utf-8") as fh:
                json.dump(partial, fh, indent=2)
            raise
        _write_subgraph(sg, outdir)
        print(f"extracted {len(sg.triples)} triples to {outdir}")
        return 0

    if not args.kg:
        raise KgsliceError("--kg is required unless --engine sparql uses --endpoint")
    kg, _ = _load_kg(args.kg, type_predicate=args.type_predicate)
    task = task_from_config(kg, cfg)

    if args.engine == "brw":
        params = WalkParams(
            walk_length=args.h,
            batch_size=args.bs,
            walks_per_seed=args.walks_per_seed,
            seed=args.seed,
            direction=args.direction,
        )
        sg = extract_random_walk(kg, task, params)
    elif args.engine == "ibs":
        sg = extract_influence(
            kg,
            task,
            bs=args.bs,
            k=args.k,
            params=PprParams(alpha=args.alpha, epsilon=args.epsilon),
            seed=args.seed,
            workers=args.workers,
        )
    else:
        sg = sparql_extract(
            LocalBackend(kg), pattern_task_for(kg, task), args.d, args.h, args.bs,
            workers=args.workers,
        )

    exclude = task.kind == NODE_CLASSIFICATION and not args.keep_label_edges
    if "exclude_label_edges" in cfg:
        exclude = cfg["exclude_label_edges"].lower() in ("1", "true", "yes")
    if exclude and task.target_predicate is not None:
        sg = _strip_label_edges(sg, task.target_type, task.target_predicate)

    _write_subgraph(sg, outdir)
    print(f"extracted {len(sg.triples)} triples to {outdir}")
    return 0


def _reports_for(args, paths):
    kg = None
    if args.kg:
        kg, _ = _load_kg(args.kg, type_predicate=args.type_predicate)
    named = []
    for path in paths:
        sg, backing = _subgraph_from_file(path, kg)
        cfg = read_config(args.config)
        task = task_from_config(backing, cfg)
        named.append((Path(path).name, quality_report(sg, task, backing)))
    return named


def cmd_metrics(args) -> int:
    named = _reports_for(args, [args.subgraph])
    sys.stdout.write(render_reports(named))
    if args.tsv:
        Path(args.tsv).write_text(reports_tsv(named), encoding="utf-8")
    return 0


def cmd_compare(args) -> int:
    named = _reports_for(args, args.subgraphs)
    sys.stdout.write(render_reports(named))
    if args.tsv:
        Path(args.tsv).write_text(reports_tsv(named), encoding="utf-8")
    return 0


def cmd_validate(args) -> int:
    kg = None
    if args.kg:
        kg, _ = _load_kg(args.kg, type_predicate=args.type_predicate)
    sg, backing = _subgraph_from_file(args.subgraph, kg)
    cfg = read_config(args.config)
    task = task_from_config(backing, cfg)
    targets = set(resolve_targets(backing, task)) & sg.vertices
    model = RgcnReferenceModel(layers=args.layers, dim=args.dim, seed=args.seed)
    feats = random_features(sg.entity_vertices(), args.dim, seed=args.seed)
    full = rgcn_forward(model, sg, feats)
    pruned_sg = prune_outside_reach(sg, targets, hops=args.layers)
    pruned = rgcn_forward(model, pruned_sg, feats)
    deltas = [
        float(np.max(np.abs(full[t] - pruned[t]))) for t in sorted(targets) if t in pruned
    ]
    max_delta = max(deltas, default=0.0)
    removed = len(sg.vertices) - len(pruned_sg.vertices)
    verdict = "PASS" if max_delta == 0.0 else "FAIL"
    print(f"pruning-invariance\t{verdict}")
    print(f"max_embedding_delta\t{max_delta}")
    print(f"pruned_vertices\t{removed}")
    return 0 if verdict == "PASS" else 2


def cmd_export(args) -> int:
    kg = None
    if args.kg:
        kg, _ = _load_kg(args.kg, type_predicate=args.type_predicate)
    sg, backing = _subgraph_from_file(args.subgraph, kg)
    cfg = read_config(args.config)
    task = task_from_config(backing, cfg)
    labels = None
    splits = None
    if task.kind == NODE_CLASSIFICATION:
        labels = build_labels(backing, task)
        targets = resolve_targets(backing, task)
        splits = make_splits(targets, labels, backing, split_from_config(backing, cfg))
    exclude = task.kind == NODE_CLASSIFICATION and not args.keep_label_edges
    bundle = export_mod.export_bundle(
        sg,
        labels,
        splits,
        args.out,
        exclude_label_edges=exclude,
        label_predicate=task.target_predicate,
    )
    print(f"bundle written to {bundle.outdir}")
    return 0


def cmd_diff_versions(args) -> int:
    old_kg, _ = _load_kg(args.old)
    new_kg, _ = _load_kg(args.new)

    def surface(kg):
        return {
            (kg.term(s), kg.predicate_term(p), kg.term(o)) for s, p, o in kg.triples
        }

    old_set, new_set = surface(old_kg), surface(new_kg)
    added = sorted(new_set - old_set)
    removed = sorted(old_set - new_set)
    print(f"added\t{len(added)}")
    print(f"removed\t{len(removed)}")
    if args.added_out:
        with open(args.added_out, "w", encoding="utf-8") as fh:
            for s, p, o in added:
                fh.write(f"{s} {p} {o} .\n")
    if args.removed_out:
        with open(args.removed_out, "w", encoding="utf-8") as fh:
            for s, p, o in removed:
                fh.write(f"{s} {p} {o} .\n")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="kgslice", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_type_predicate(p):
        p.add_argument("--type-predicate", default=RDF_TYPE, metavar="IRI")

    p = sub.add_parser("ingest", help="parse an N-Triples file and report stats")
    p.add_argument("input")
    add_type_predicate(p)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--dict-out", metavar="TSV")
    p.add_argument("--nt-out", metavar="FILE")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract", help="extract a task-relevant subgraph")
    p.add_argument("--engine", choices=("brw", "ibs", "sparql"), required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kg", help="local N-Triples input")
    add_type_predicate(p)
    p.add_argument("--endpoint", default=os.environ.get("KGSLICE_ENDPOINT"))
    p.add_argument("--graph", help="named graph IRI for endpoint extraction")
    p.add_argument("--h", type=int, default=1, help="hops (sparql) / walk length (brw)")
    p.add_argument("--d", type=int, default=1, choices=(1, 2))
    p.add_argument("--bs", type=int, default=20000)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--epsilon", type=float, default=0.0002)
    p.add_argument("--walks-per-seed", type=int, default=1)
    p.add_argument("--direction", choices=("outgoing", "both"), default=BOTH)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--compress", action="store_true")
    p.add_argument("--keep-label-edges", action="store_true")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("metrics", help="quality indicators for one subgraph")
    p.add_argument("--subgraph", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--kg")
    add_type_predicate(p)
    p.add_argument("--tsv", help="also write machine-readable output here")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("compare", help="indicator matrix across subgraphs")
    p.add_argument("subgraphs", nargs="+")
    p.add_argument("--config", required=True)
    p.add_argument("--kg")
    add_type_predicate(p)
    p.add_argument("--tsv")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="message-passing pruning invariance check")
    p.add_argument("--subgraph", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--kg")
    add_type_predicate(p)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("export", help="write a trainer-ready bundle")
    p.add_argument("--subgraph", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--kg")
    add_type_predicate(p)
    p.add_argument("--out", required=True)
    p.add_argument("--keep-label-edges", action="store_true")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("diff-versions", help="triple set difference of two dumps")
    p.add_argument("old")
    p.add_argument("new")
    p.add_argument("--added-out")
    p.add_argument("--removed-out")
    p.set_defaults(func=cmd_diff_versions)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (KgsliceError, ParseError, OSError) as exc:
        sys.stderr.write(f"kgslice: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
