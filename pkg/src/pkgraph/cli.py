"""Command-line interface. Every subcommand supports --json for scripting."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__, ids
from .engine import Engine, ServiceConfig, resolve_store_path
from .errors import PkgraphError
from .model import node_to_dict
from .portable import export_portable, import_portable


def _engine(ctx, create: bool = True) -> Engine:
    config = ServiceConfig(store_path=ctx.obj["store"])
    return Engine(config, create=create)


def _emit(ctx, payload: dict, human: str):
    if ctx.obj["json"]:
        click.echo(json.dumps(payload, sort_keys=True, default=str))
    else:
        click.echo(human)


@click.group()
@click.option("--store", "-s", default=None,
              help="Store file (default: $RUVA_STORE or ./memory.pkg).")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.version_option(__version__)
@click.pass_context
def main(ctx, store, as_json):
    """Glass-box personal knowledge graph engine."""
    ctx.ensure_object(dict)
    ctx.obj["store"] = resolve_store_path(store)
    ctx.obj["json"] = as_json


def _wrap(fn):
    """Convert domain errors into exit code 1 with a message."""
    import functools

    @functools.wraps(fn)
    def inner(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PkgraphError as exc:
            raise click.ClickException(str(exc))
    return inner


@main.command()
@click.pass_context
@_wrap
def init(ctx):
    """Create a fresh store file."""
    path = Path(ctx.obj["store"])
    if path.exists():
        raise click.ClickException(f"{path} already exists")
    with _engine(ctx) as eng:
        stats = eng.stats()
    _emit(ctx, stats, f"initialized {path} ({stats['nodes']} node)")


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.pass_context
@_wrap
def ingest(ctx, directory):
    """Ingest every record file under DIRECTORY."""
    with _engine(ctx) as eng:
        reports, stats = eng.ingest_directory(directory)
    payload = {
        "reports": [{"record": r.record, "created_nodes": r.created_nodes,
                     "created_edges": r.created_edges,
                     "skipped_duplicate": r.skipped_duplicate,
                     "elapsed_ms": r.elapsed_ms, "error": r.error}
                    for r in reports],
        "stats": {"count": stats.count, "mean_ms": stats.mean_ms,
                  "p50_ms": stats.p50_ms, "p95_ms": stats.p95_ms,
                  "undefined": stats.undefined},
    }
    skipped = sum(1 for r in reports if r.skipped_duplicate)
    failed = sum(1 for r in reports if r.error)
    mean = f"{stats.mean_ms:.1f}" if stats.mean_ms is not None else "n/a"
    _emit(ctx, payload,
          f"ingested {stats.count} records ({skipped} duplicates skipped, "
          f"{failed} failed), mean {mean} ms")
    if failed:
        sys.exit(1)


@main.command()
@click.argument("question")
@click.option("--hops", type=int, default=None, help="Expansion depth N.")
@click.option("--anchors", type=int, default=None, help="Anchor count K.")
@click.option("--max-nodes", type=int, default=None)
@click.option("--include-communities", is_flag=True, default=False)
@click.option("--show-context", is_flag=True, help="Print the serialized subgraph.")
@click.pass_context
@_wrap
def query(ctx, question, hops, anchors, max_nodes, include_communities, show_context):
    """Answer QUESTION from the graph, citing evidence nodes."""
    with _engine(ctx, create=False) as eng:
        result = eng.query(question, n_hops=hops, k_anchors=anchors,
                           max_nodes=max_nodes,
                           include_communities=include_communities or None)
    payload = {
        "answer": {"text": result.answer.text, "citations": result.answer.citations,
                   "refused": result.answer.refused, "engine": result.answer.engine},
        "retrieval_ms": result.retrieval_ms,
        "generation_ms": result.generation_ms,
        "context": result.subgraph.context,
    }
    lines = [result.answer.text]
    if result.answer.citations:
        lines.append("cited: " + ", ".join(result.answer.citations))
    if show_context:
        lines.append(result.subgraph.context)
    _emit(ctx, payload, "\n".join(lines))


@main.command()
@click.argument("node_id")
@click.pass_context
@_wrap
def forget(ctx, node_id):
    """Red Pen: cascade-delete a node and everything derived from it."""
    with _engine(ctx, create=False) as eng:
        receipt = eng.forget(node_id)
    payload = {"receipt": receipt.to_dict()}
    _emit(ctx, payload, json.dumps(receipt.to_dict(), indent=2))


@main.command()
@click.argument("node_id")
@click.pass_context
@_wrap
def inspect(ctx, node_id):
    """Show a node with its properties, provenance, and incident edges."""
    with _engine(ctx, create=False) as eng:
        node = eng.store.get_node(node_id)
        incident = eng.store.neighbors(node_id)
        payload = {
            "node": node_to_dict(node),
            "edges": [{"predicate": e.predicate, "src": e.src, "dst": e.dst,
                       "neighbor": n.display_name} for e, n in incident],
        }
    lines = [f'{node.label} "{node.display_name}" ({node.id})']
    for key, value in sorted(node.properties.items()):
        lines.append(f"  {key} = {value}")
    if node.valid_start:
        end = node.valid_end or node.valid_start
        lines.append(f"  t = {ids.instant_str(node.valid_start)} / {ids.instant_str(end)}")
    lines.append(f"  provenance: {len(node.provenance)} record(s)")
    for edge, neighbor in incident:
        arrow = "->" if edge.src == node_id else "<-"
        lines.append(f'  {arrow} {edge.predicate} "{neighbor.display_name}"')
    _emit(ctx, payload, "\n".join(lines))


@main.command()
@click.option("--level", type=int, default=None)
@click.pass_context
@_wrap
def communities(ctx, level):
    """Show (recomputing if stale) community assignments."""
    with _engine(ctx, create=False) as eng:
        partitions = eng.communities(level)
        names = {nid: eng.store.get_node(nid).display_name
                 for p in partitions for nid in p.assignment}
    payload = {"partitions": [
        {"level": p.level, "quality": p.quality,
         "assignment": dict(sorted(p.assignment.items()))} for p in partitions]}
    lines = []
    for p in partitions:
        groups: dict[int, list[str]] = {}
        for nid, comm in p.assignment.items():
            groups.setdefault(comm, []).append(names[nid])
        lines.append(f"level {p.level} (Q={p.quality:.4f}):")
        for comm in sorted(groups):
            lines.append(f"  [{comm}] " + ", ".join(sorted(groups[comm])))
    _emit(ctx, payload, "\n".join(lines) or "no communities")


@main.command("export")
@click.argument("file", type=click.Path(dir_okay=False))
@click.pass_context
@_wrap
def export_cmd(ctx, file):
    """Write the portable NDJSON dump to FILE."""
    with _engine(ctx, create=False) as eng:
        count = export_portable(eng.store, file)
    _emit(ctx, {"written": file, "lines": count}, f"wrote {count} lines to {file}")


@main.command("import")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@_wrap
def import_cmd(ctx, file):
    """Load a portable dump into a freshly initialized store."""
    with _engine(ctx) as eng:
        count = import_portable(eng.store, file)
    _emit(ctx, {"imported": count}, f"imported {count} objects from {file}")


@main.command()
@click.argument("suite", type=click.Choice(["full", "latency"]))
@click.option("--corpus", type=click.Path(file_okay=False), default=None,
              help="Corpus directory (default: the shipped benchmark).")
@click.option("--items", type=click.Path(dir_okay=False), default=None,
              help="Items NDJSON file (default: the shipped benchmark).")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Also write the JSON report here.")
@click.option("--synthetic-nodes", type=int, default=10_000,
              help="Node count for the synthetic latency store.")
@click.pass_context
@_wrap
def bench(ctx, suite, corpus, items, out, synthetic_nodes):
    """Run the benchmark suite against a fresh throwaway store."""
    from .bench.harness import run_latency_suite, run_suite_cli

    if suite == "full":
        payload, human = run_suite_cli(corpus, items)
    else:
        payload, human = run_latency_suite(corpus, synthetic_nodes)
    if out:
        Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True,
                                        default=str), encoding="utf-8")
    _emit(ctx, payload, human)
    if suite == "full" and payload["failures"]:
        sys.exit(1)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8642)
@click.option("--unsafe-bind", is_flag=True,
              help="Permit binding beyond loopback (drops the sovereignty guard).")
@click.option("--ui", type=click.Path(file_okay=False), default=None,
              help="Serve the curation frontend from this directory.")
@click.pass_context
@_wrap
def serve(ctx, host, port, unsafe_bind, ui):
    """Run the local HTTP service."""
    from .service import serve as run_service

    config = ServiceConfig(store_path=ctx.obj["store"], bind_host=host, port=port,
                           allow_non_loopback=unsafe_bind, ui_dir=ui)
    run_service(config)


if __name__ == "__main__":
    main()
