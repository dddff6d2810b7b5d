"""Command-line entry point.

Subcommands: `ontology validate`, `run`, `index build`, `index search`,
`serve`. stdout carries machine-parsable output (TSV lines or status
lines); diagnostics go to stderr. Exit codes: 0 success, 1 operational
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import pipeline as pl
from . import retrieval
from .ontology import MalformedJson, OntologyError, parse_ontology
from .processors import REGISTRY
from .tensorize import EmbeddingConfig


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annopack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ont = sub.add_parser("ontology", help="type system tools")
    ont_sub = p_ont.add_subparsers(dest="ontology_command", required=True)
    p_val = ont_sub.add_parser("validate", help="validate an ontology JSON file")
    p_val.add_argument("file", help="ontology JSON file")

    p_run = sub.add_parser("run", help="run a workflow over its reader")
    p_run.add_argument("workflow", help="workflow JSON file")
    p_run.add_argument("--out", required=True, help="output directory for written packs")

    p_index = sub.add_parser("index", help="retrieval index tools")
    idx_sub = p_index.add_subparsers(dest="index_command", required=True)
    p_build = idx_sub.add_parser("build", help="index a directory of .txt files")
    p_build.add_argument("--input", required=True, help="directory of .txt documents")
    p_build.add_argument("--out", required=True, help="output index file")
    p_build.add_argument("--glob", default="*.txt")
    p_build.add_argument("--dim", type=int, default=32, help="embedding dimension")
    p_build.add_argument("--seed", type=int, default=0, help="embedding seed")
    p_search = idx_sub.add_parser("search", help="query an index file")
    p_search.add_argument("--index", required=True, help="index file from `index build`")
    p_search.add_argument("--query", required=True)
    p_search.add_argument("-k", type=int, default=10)
    p_search.add_argument(
        "--mode", choices=("symbolic", "vector", "hybrid"), default="hybrid"
    )
    p_search.add_argument("--k-coarse", type=int, default=50, help="hybrid coarse stage size")

    p_serve = sub.add_parser("serve", help="start the annotation service")
    p_serve.add_argument("--root", required=True, help="project store root directory")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument(
        "--port",
        type=int,
        default=int(os.environ.get("ANNOPACK_PORT", "8765")),
        help="port (env ANNOPACK_PORT overrides the default)",
    )
    p_serve.add_argument(
        "--cors-origin",
        action="append",
        default=None,
        help="allowed UI origin, repeatable (default: any)",
    )
    return parser


def _cmd_ontology_validate(args: argparse.Namespace) -> int:
    try:
        source = Path(args.file).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        ont = parse_ontology(source)
    except OntologyError as exc:
        print(f"{type(exc).__name__}\t{exc}")
        return 1
    user = ont.user_types
    builtin_count = len(ont.types) - len(user)
    print(f"OK: {len(user)} types")
    print(f"plus {builtin_count} built-in types (roots and standard library)", file=sys.stderr)
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        workflow = pl.load_workflow(args.workflow)
    except pl.PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    # --out overrides every pack writer; append one if the chain has none.
    out_dir = str(Path(args.out))
    procs = []
    has_writer = False
    for cfg in workflow.processors:
        if cfg.name == "pack_writer":
            has_writer = True
            procs.append(pl.ProcessorConfig("pack_writer", {**cfg.params, "out_dir": out_dir}))
        else:
            procs.append(cfg)
    if not has_writer:
        procs.append(pl.ProcessorConfig("pack_writer", {"out_dir": out_dir}))
    workflow.processors = procs
    try:
        pipe = pl.assemble(workflow, REGISTRY)
    except pl.PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    ok = failed = 0
    try:
        for result in pipe.run_workflow_reader(workflow.reader):
            if result.ok:
                ok += 1
                print(f"{result.pack.pack_id}\tok")
            else:
                failed += 1
                print(f"{result.pack.pack_id}\tfailed")
                print(
                    f"{result.pack.pack_id}: {result.failed_processor}: {result.error}",
                    file=sys.stderr,
                )
    except Exception as exc:  # reader abort or fail_fast processor error
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"processed={ok + failed} ok={ok} failed={failed}", file=sys.stderr)
    return 0 if failed == 0 else 1


def _cmd_index_build(args: argparse.Namespace) -> int:
    cfg = EmbeddingConfig(dim=args.dim, seed=args.seed)
    try:
        packs = pl.directory_reader(args.input, args.glob)
        inv, vec = retrieval.index_packs(packs, field=None, cfg=cfg)
        retrieval.save_bundle(args.out, inv, vec, cfg)
    except (pl.ReaderError, retrieval.RetrievalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"indexed {inv.doc_count} documents into {args.out}", file=sys.stderr)
    return 0


def _cmd_index_search(args: argparse.Namespace) -> int:
    try:
        inv, vec, cfg = retrieval.load_bundle(args.index)
    except (OSError, retrieval.RetrievalError, MalformedJson) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.k < 1:
        print("error: -k must be >= 1", file=sys.stderr)
        return 1
    if args.mode == "symbolic":
        hits = inv.search(args.query, args.k)
    elif args.mode == "vector":
        from .tensorize import embed_text

        hits = vec.search(embed_text(args.query, cfg), args.k)
    else:
        k_coarse = max(args.k_coarse, args.k)
        hits = retrieval.hybrid_search(inv, vec, args.query, k_coarse, args.k, cfg)
    for hit in hits:
        print(f"{hit.doc_id}\t{hit.score:.6f}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.root, cors_origins=args.cors_origin)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "ontology":
        return _cmd_ontology_validate(args)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "index":
        if args.index_command == "build":
            return _cmd_index_build(args)
        return _cmd_index_search(args)
    if args.command == "serve":
        return _cmd_serve(args)
    parser.error(f"unknown command {args.command}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
