"""Command-line entry point: ``labelcomp <command> [flags]``.

Exit codes: 0 success, 1 usage error, 2 data/schema error, 3 numeric failure.
Every error is reported as a single ``labelcomp: error[<kind>]: <detail>`` line.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import typing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .composition import CompositionMode, ConfigError, export_embeddings, read_label_embeddings
from .corpus import (CorpusError, SyntheticSpec, frequency_table, generate_synthetic, read_conll,
                     schema_from_corpus, write_synthetic)
from .evaluation import FrequencyBuckets, format_table, frequency_table_text
from .model import CheckpointError, LabelingModel
from .numeric import NumericError
from .projection import ProjectionError, cluster_stats, project, silhouette, write_projection_tsv, write_svg
from .schema import SchemaError, read_schema_file
from .trainer import TrainConfig, evaluate_model, train

COMMANDS = ("gen-corpus", "train", "evaluate", "benchmark", "export-embeddings", "project")
MODES = tuple(m.value for m in CompositionMode)

log = logging.getLogger("labelcomp")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- flat key = value config files ------------------------------------------


def read_config(path) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _coerce(tp, raw: str):
    origin = typing.get_origin(tp)
    args = [a for a in typing.get_args(tp) if a is not type(None)]
    if origin is typing.Union or (origin is not None and type(None) in typing.get_args(tp)):
        if raw.lower() in ("", "none"):
            return None
        return _coerce(args[0], raw)
    if origin is tuple:
        return tuple(int(x) for x in raw.split(",") if x.strip())
    if tp is bool:
        return raw.lower() in ("1", "true", "yes")
    if tp is CompositionMode:
        return CompositionMode(raw)
    return tp(raw)


def build_dataclass(cls, file_values: dict[str, str], flag_values: dict[str, object]):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(file_values) - names
    if unknown:
        raise UsageError(f"unknown config keys for {cls.__name__}: {sorted(unknown)}")
    kwargs = {}
    for name, raw in file_values.items():
        try:
            kwargs[name] = _coerce(hints[name], raw)
        except ValueError as exc:
            raise UsageError(f"config key {name}: {exc}") from None
    for name, val in flag_values.items():
        if name in names and val is not None:
            kwargs[name] = _coerce(hints[name], val) if isinstance(val, str) else val
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _add_dataclass_flags(p: argparse.ArgumentParser, cls, skip=()):
    hints = typing.get_type_hints(cls)
    for f in dataclasses.fields(cls):
        if f.name in skip:
            continue
        tp = hints[f.name]
        default = f.default.value if isinstance(f.default, CompositionMode) else f.default
        kind = "comma-separated ints" if typing.get_origin(tp) is typing.Union else getattr(tp, "__name__", str(tp))
        p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, default=None, metavar="V",
                       help=f"{kind}; default {default}")


def _flags(args, cls) -> dict:
    return {f.name: getattr(args, f.name, None) for f in dataclasses.fields(cls)}


def _train_config(args) -> TrainConfig:
    file_values = read_config(args.config) if getattr(args, "config", None) else {}
    return build_dataclass(TrainConfig, file_values, _flags(args, TrainConfig))


def _spec(args) -> SyntheticSpec:
    file_values = read_config(args.spec) if getattr(args, "spec", None) else {}
    return build_dataclass(SyntheticSpec, file_values, _flags(args, SyntheticSpec))


def _write(path, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _resolve_checkpoint(path) -> Path:
    p = Path(path)
    if p.is_dir():
        p = p / "best.ckpt"
    elif not p.exists() and p.with_suffix(".ckpt").exists():
        p = p.with_suffix(".ckpt")
    if not p.exists():
        raise CheckpointError(f"checkpoint {path} not found")
    return p


def _config_text(obj) -> str:
    lines = []
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, CompositionMode):
            v = v.value
        elif isinstance(v, tuple):
            v = ",".join(map(str, v))
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


# -- commands ----------------------------------------------------------------


def cmd_gen_corpus(args) -> None:
    spec = _spec(args)
    paths = write_synthetic(spec, args.out)
    _write(Path(args.out) / "spec.cfg", _config_text(spec))
    for name, p in paths.items():
        print(f"{name}\t{p}")


def cmd_train(args) -> None:
    cfg = _train_config(args)
    tr = read_conll(args.train)
    dv = read_conll(args.dev)
    schema = read_schema_file(args.schema) if args.schema else schema_from_corpus(tr, dv)
    for corpus, name in ((tr, args.train), (dv, args.dev)):
        for s in corpus:
            for l in s.gold_labels:
                if l not in schema:
                    raise SchemaError(f"{name}: label {l!r} is not in the schema")
    result = train(tr, dv, schema, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result.model.save(out / "best.ckpt", extra={
        "best_epoch": result.best_epoch,
        "train_counts": dict(sorted(result.buckets.counts.items())),
        "seed": cfg.seed,
    })
    _write(out / "metrics.tsv", result.metrics_log())
    _write(out / "config.cfg", _config_text(cfg))
    print(f"best epoch {result.best_epoch}: dev overall F1 {100 * result.best_dev.overall.f1:.2f}")


def cmd_evaluate(args) -> None:
    schema = read_schema_file(args.schema) if args.schema else None
    model = LabelingModel.load(_resolve_checkpoint(args.checkpoint), schema=schema)
    # gold types absent from the schema are legal here; they just count as misses
    test = read_conll(args.test)
    counts = model.meta.get("extra", {}).get("train_counts")
    if args.train:
        buckets = frequency_table(read_conll(args.train, schema=model.schema), model.schema)
    elif counts is not None:
        buckets = FrequencyBuckets(counts)
    else:
        raise CheckpointError("checkpoint carries no training counts; pass --train")
    report = evaluate_model(model, test, buckets)
    if args.out:
        _write(args.out, report.to_tsv())
    else:
        sys.stdout.write(report.to_tsv())
    m = report.metrics()
    print(frequency_table_text({model.mode.value: m}), end="", file=sys.stderr if not args.out else sys.stdout)


def _cell(job):
    mode, seed, cfg, spec = job
    tr, dv, te, schema = generate_synthetic(spec)
    run = train(tr, dv, schema, replace(cfg, mode=mode, seed=seed))
    rep = evaluate_model(run.model, te, run.buckets)
    W = run.model.label_matrix()
    res = project(W, list(schema.labels), "pca")
    return {
        "mode": mode, "seed": seed, "best_epoch": run.best_epoch,
        "metrics": rep.metrics(), "tsv": rep.to_tsv(),
        "silhouette_span_pca": cluster_stats(res, "span")[0],
        "silhouette_top_pca": cluster_stats(res, "top_layer")[0],
        "silhouette_span_raw": silhouette(W, res.span_groups)[0],
        "silhouette_top_raw": silhouette(W, res.top_groups)[0],
        "explained_variance": res.explained_variance.tolist(),
    }


def run_benchmark(cfg: TrainConfig, spec: SyntheticSpec, seeds, modes=MODES, workers: int = 1):
    jobs = [(CompositionMode(m), s, cfg, spec) for m in modes for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            cells = list(ex.map(_cell, jobs))
    else:
        cells = [_cell(j) for j in jobs]
    return cells


def benchmark_tables(cells, modes, depth: int) -> str:
    by_mode = {m: [c for c in cells if c["mode"].value == m] for m in modes}

    def stats(m, key):
        vals = np.array([c["metrics"][key] if key in c["metrics"] else c[key] for c in by_mode[m]])
        return float(vals.mean()), float(vals.std(ddof=1)) if len(vals) > 1 else 0.0

    freq = {m: {k: stats(m, k) for k in ("low", "middle", "high", "overall")} for m in modes}
    layers = [f"layer{d}" for d in range(1, depth + 1)]
    lay = {m: {k: stats(m, k) for k in layers} for m in modes}
    bnd = {m: {"boundary": stats(m, "boundary")} for m in modes}
    clu = {m: {k: stats(m, k) for k in ("silhouette_span_raw", "silhouette_span_pca",
                                        "silhouette_top_raw", "silhouette_top_pca")} for m in modes}
    n = len(by_mode[modes[0]])
    parts = [
        f"F1 by label frequency class (mean±std over {n} seeds, test set)",
        frequency_table_text(freq),
        "F1 by hierarchy depth",
        format_table(lay, layers, [f"Depth{d}" for d in range(1, depth + 1)]),
        "Span boundary F1 (type ignored)",
        format_table(bnd, ["boundary"], ["Boundary"]),
        "Label-embedding silhouette (span / top-layer grouping)",
        format_table(clu, list(clu[modes[0]]), ["SpanRaw", "SpanPCA", "TopRaw", "TopPCA"]),
    ]
    return "\n".join(parts)


def cmd_benchmark(args) -> None:
    cfg = _train_config(args)
    spec = _spec(args)
    seeds = list(range(1, args.seeds + 1)) if args.seed_list is None else [int(s) for s in args.seed_list.split(",")]
    if len(seeds) < 2:
        raise UsageError("benchmark needs at least two seeds")
    modes = tuple(args.modes.split(",")) if args.modes else MODES
    for m in modes:
        if m not in MODES:
            raise UsageError(f"unknown mode {m!r}")
    cells = run_benchmark(cfg, spec, seeds, modes, args.workers)
    depth = 3
    text = benchmark_tables(cells, modes, depth)
    keys = list(cells[0]["metrics"])
    rows = ["mode\tseed\tbest_epoch\t" + "\t".join(keys) +
            "\tsilhouette_span_raw\tsilhouette_span_pca\tsilhouette_top_raw\tsilhouette_top_pca"]
    for c in cells:
        rows.append(f"{c['mode'].value}\t{c['seed']}\t{c['best_epoch']}\t" +
                    "\t".join(f"{c['metrics'][k]:.4f}" for k in keys) + "\t" +
                    "\t".join(f"{c[k]:.6f}" for k in ("silhouette_span_raw", "silhouette_span_pca",
                                                      "silhouette_top_raw", "silhouette_top_pca")))
    if args.out:
        out = Path(args.out)
        _write(out / "table.txt", text)
        _write(out / "per_seed.tsv", "\n".join(rows) + "\n")
        _write(out / "config.cfg", _config_text(cfg))
        _write(out / "spec.cfg", _config_text(spec))
    sys.stdout.write(text)


def cmd_export(args) -> None:
    model = LabelingModel.load(_resolve_checkpoint(args.checkpoint))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    export_embeddings(model.schema, model.store, model.mode, args.out, args.components)


def cmd_project(args) -> None:
    if bool(args.embeddings) == bool(args.checkpoint):
        raise UsageError("give exactly one of --embeddings or --checkpoint")
    if args.embeddings:
        labels, W = read_label_embeddings(args.embeddings)
    else:
        model = LabelingModel.load(_resolve_checkpoint(args.checkpoint))
        labels, W = list(model.schema.labels), model.label_matrix()
    res = project(W, labels, args.method, args.perplexity, args.iterations, args.seed)
    write_projection_tsv(res, args.out)
    if args.svg:
        write_svg(res, args.svg)
    for grouping in ("span", "top_layer"):
        score, per_group = cluster_stats(res, grouping)
        groups = " ".join(f"{k}={v:.4f}" for k, v in per_group.items())
        print(f"silhouette[{grouping}]\t{score:.6f}\t{groups}")


# -- parser ------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="labelcomp", description="Compositional label embeddings for sequence labeling.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen-corpus", help="write a synthetic hierarchical NER corpus")
    g.add_argument("--spec", help="flat key = value file with generator settings")
    g.add_argument("--out", required=True, help="output directory")
    _add_dataclass_flags(g, SyntheticSpec)
    g.set_defaults(func=cmd_gen_corpus)

    t = sub.add_parser("train", help="train one model and keep the best dev epoch")
    t.add_argument("--config", help="flat key = value file with training settings")
    t.add_argument("--train", required=True, help="training corpus (token<TAB>label)")
    t.add_argument("--dev", required=True, help="development corpus")
    t.add_argument("--schema", help="label file; inferred from the corpora when omitted")
    t.add_argument("--out", required=True, help="run directory for best.ckpt and metrics.tsv")
    _add_dataclass_flags(t, TrainConfig)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="score a checkpoint on a test corpus")
    e.add_argument("--checkpoint", required=True, help="checkpoint file or run directory")
    e.add_argument("--test", required=True, help="test corpus")
    e.add_argument("--train", help="training corpus for frequency buckets (default: counts in checkpoint)")
    e.add_argument("--schema", help="label file to verify against the checkpoint")
    e.add_argument("--out", help="report TSV path (default: stdout)")
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("benchmark", help="modes x seeds on a synthetic corpus")
    b.add_argument("--seeds", type=int, default=5, help="number of seeds 1..N (default 5)")
    b.add_argument("--seed-list", dest="seed_list", help="explicit comma-separated seeds")
    b.add_argument("--spec", help="synthetic generator settings file")
    b.add_argument("--config", help="training settings file")
    b.add_argument("--modes", help=f"comma-separated subset of {','.join(MODES)}")
    b.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    b.add_argument("--out", help="directory for table.txt, per_seed.tsv and configs (default: print only)")
    _add_dataclass_flags(b, TrainConfig, skip=("seed",))
    _add_dataclass_flags(b, SyntheticSpec, skip=("seed",))
    b.add_argument("--corpus-seed", dest="corpus_seed", type=int, help="generator seed")
    b.set_defaults(func=cmd_benchmark)

    x = sub.add_parser("export-embeddings", help="write label (and component) embeddings as TSV")
    x.add_argument("--checkpoint", required=True, help="checkpoint file or run directory")
    x.add_argument("--out", required=True, help="label embedding TSV")
    x.add_argument("--components", help="component embedding TSV (composed modes only)")
    x.set_defaults(func=cmd_export)

    j = sub.add_parser("project", help="2-D projection of label embeddings with cluster scores")
    j.add_argument("--embeddings", help="label embedding TSV from export-embeddings")
    j.add_argument("--checkpoint", help="checkpoint file or run directory")
    j.add_argument("--method", choices=("pca", "tsne"), default="pca")
    j.add_argument("--perplexity", type=float, default=None, help="t-SNE perplexity (default min(30, (n-1)/3))")
    j.add_argument("--iterations", type=int, default=1000, help="t-SNE iterations")
    j.add_argument("--seed", type=int, default=0)
    j.add_argument("--out", required=True, help="projection TSV")
    j.add_argument("--svg", help="optional SVG scatter plot")
    j.set_defaults(func=cmd_project)
    return p


_ERRORS = (
    (UsageError, "usage", 1),
    (NumericError, "numeric", 3),
    ((SchemaError, CorpusError, CheckpointError, ConfigError, ProjectionError, OSError), "data", 2),
)


def run(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(message)s", stream=sys.stderr)
        if getattr(args, "corpus_seed", None) is not None:
            args.seed = args.corpus_seed
        args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except Exception as exc:
        for types, kind, code in _ERRORS:
            if isinstance(exc, types):
                detail = str(exc).replace("\n", " ")
                print(f"labelcomp: error[{kind}]: {detail}", file=sys.stderr)
                return code
        raise
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
