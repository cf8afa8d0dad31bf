"""Command-line interface.

Subcommands cover the pipeline end to end: generate synthetic kernels,
harvest AI-generated ones, filter by compilation, ingest profiler dumps,
expand build configurations, label with the analytic oracle, build/export
datasets, evaluate backends, and serve predictions.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus, dataset, evalharness, ingest
from .errors import CounterscopeError
from .kernelsrc import KernelGenSpec, generate, rename_variables
from .kernelsrc.oracle import oracle_counters
from .metrics import NormRanges, load_peaks


def _add_generate(sub):
    p = sub.add_parser("generate", help="emit synthetic kernels plus metadata sidecars")
    p.add_argument("--spec", help="JSON file with generator spec fields")
    p.add_argument("--count", type=int, default=1, help="kernels to emit (seeds seed..seed+N-1)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-inputs", type=int)
    p.add_argument("--num-outputs", type=int)
    p.add_argument("--element-count", type=int)
    p.add_argument("--dtype", choices=("float32", "float64"))
    p.add_argument("--num-loads", type=int)
    p.add_argument("--num-stores", type=int)
    p.add_argument("--num-compute", type=int)
    p.add_argument("--block-size", type=int)
    p.add_argument("--rename-variants", type=int, default=0,
                   help="extra alpha-renamed copies per kernel")
    p.add_argument("--embed-metadata", action="store_true",
                   help="embed the metadata header comment in each source")
    p.add_argument("--compile-check", metavar="TEMPLATE",
                   help="compiler command template with {src}/{out}; failures are marked")
    p.set_defaults(func=cmd_generate)


def cmd_generate(args) -> int:
    doc = {}
    if args.spec:
        doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    for name in ("num_inputs", "num_outputs", "element_count", "dtype",
                 "num_loads", "num_stores", "num_compute", "block_size"):
        value = getattr(args, name)
        if value is not None:
            doc[name] = value
    doc.setdefault("seed", args.seed)
    base = KernelGenSpec.from_dict(doc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    emitted = []
    for i in range(args.count):
        spec = KernelGenSpec.from_dict({**base.to_dict(), "seed": base.seed + i})
        kernel = generate(spec)
        variants = [kernel]
        for v in range(args.rename_variants):
            variants.append(rename_variables(kernel, seed=spec.seed * 1000 + v))
        for j, variant in enumerate(variants):
            stem = f"kernel_{i:05d}" + (f"_r{j}" if j else "")
            if args.embed_metadata:
                variant = variant.with_metadata_header()
            (out / f"{stem}.cpp").write_text(variant.source, encoding="utf-8")
            sidecar = {
                "source_file": f"{stem}.cpp",
                "fingerprint": variant.fingerprint,
                "metadata": variant.metadata.to_dict(),
                "spec": variant.spec.to_dict(),
                "compile_status": "unknown",
            }
            emitted.append((out / f"{stem}.json", sidecar, out / f"{stem}.cpp"))

    if args.compile_check:
        kernels = [
            corpus.HarvestedKernel(src_path.read_text(encoding="utf-8"),
                                   corpus.PromptJob(problem="synthetic"))
            for _, _, src_path in emitted
        ]
        report = corpus.compile_filter(kernels, args.compile_check)
        for (_, sidecar, _), kernel in zip(emitted, kernels):
            sidecar["compile_status"] = kernel.status
            if kernel.failure_log:
                sidecar["compile_log"] = kernel.failure_log
        print(report.summary())

    for path, sidecar, _ in emitted:
        path.write_text(json.dumps(sidecar, indent=2), encoding="utf-8")
    print(f"generated {len(emitted)} kernel file(s) in {out}")
    return 0


def _add_harvest(sub):
    p = sub.add_parser("harvest", help="collect AI-generated kernels from a chat endpoint")
    p.add_argument("--problems", required=True, help="file with one problem per line")
    p.add_argument("--variants", required=True, help="file with one variant per line")
    p.add_argument("--temps", default="0.2,0.7,1.0", help="comma-separated temperatures")
    p.add_argument("--model", default="gpt-4o")
    p.add_argument("--endpoint", default=None,
                   help="chat-completion URL (or env COUNTERSCOPE_ENDPOINT)")
    p.add_argument("--out", required=True, help="corpus JSONL output")
    p.add_argument("--raw-log", default=None, help="append-only raw response log")
    p.add_argument("--concurrency", type=int, default=4)
    p.set_defaults(func=cmd_harvest)


def cmd_harvest(args) -> int:
    import os

    endpoint_url = args.endpoint or os.environ.get("COUNTERSCOPE_ENDPOINT", "")
    if not endpoint_url:
        print("error: no endpoint configured (--endpoint or COUNTERSCOPE_ENDPOINT)",
              file=sys.stderr)
        return 2
    problems = [l.strip() for l in Path(args.problems).read_text().splitlines() if l.strip()]
    variants = [l.strip() for l in Path(args.variants).read_text().splitlines() if l.strip()]
    temps = [float(t) for t in args.temps.split(",") if t]
    jobs = [
        corpus.PromptJob(problem=p, variant=v, temperature=t, model=args.model)
        for p in problems for v in variants for t in temps
    ]
    raw_log = args.raw_log or (str(Path(args.out).with_suffix(".raw.jsonl")))
    result = corpus.harvest(
        jobs, corpus.EndpointConfig(url=endpoint_url),
        concurrency=args.concurrency, log_path=raw_log,
    )
    corpus.write_corpus(result.kernels, args.out)
    print(f"harvested {len(result.kernels)}/{len(jobs)} kernels "
          f"({len(result.errors)} failures, {result.retries} retries) -> {args.out}")
    for err in result.errors:
        print(f"  failed: {err}", file=sys.stderr)
    return 0 if result.kernels or not jobs else 1


def _add_filter(sub):
    p = sub.add_parser("filter", help="compile-filter a harvested corpus")
    p.add_argument("--corpus", required=True, help="corpus JSONL from harvest")
    p.add_argument("--compile-check", required=True, metavar="TEMPLATE",
                   help="compiler command template with {src}/{out}")
    p.add_argument("--out", required=True, help="filtered corpus JSONL (kept kernels)")
    p.add_argument("--concurrency", type=int, default=4)
    p.set_defaults(func=cmd_filter)


def cmd_filter(args) -> int:
    kernels = corpus.read_corpus(args.corpus)
    report = corpus.compile_filter(kernels, args.compile_check, concurrency=args.concurrency)
    print(report.summary())
    if report.skipped:
        corpus.write_corpus(kernels, args.out)
    else:
        corpus.write_corpus(report.kept, args.out)
    return 0


def _add_oracle_label(sub):
    p = sub.add_parser("oracle-label",
                       help="label generated kernels with analytic ground truth")
    p.add_argument("--kernels", required=True, help="directory from 'generate'")
    p.add_argument("--architecture", default="gfx90a")
    p.add_argument("--flags", default="--std=c++17 -O3")
    p.add_argument("--efficiency", type=float, default=1.0)
    p.add_argument("--peaks", default=None, help="peaks table JSON (shipped default)")
    p.add_argument("--out", required=True, help="labeled samples JSONL")
    p.set_defaults(func=cmd_oracle_label)


def cmd_oracle_label(args) -> int:
    peaks_table = load_peaks(args.peaks)
    try:
        peaks = peaks_table[args.architecture]
    except KeyError:
        print(f"error: no peaks for architecture {args.architecture!r}", file=sys.stderr)
        return 2
    kernel_dir = Path(args.kernels)
    samples = []
    for sidecar_path in sorted(kernel_dir.glob("*.json")):
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
        if "metadata" not in sidecar:
            continue
        source = (kernel_dir / sidecar["source_file"]).read_text(encoding="utf-8")
        from .kernelsrc.generator import KernelMetadata

        counters = oracle_counters(
            KernelMetadata.from_dict(sidecar["metadata"]), peaks, efficiency=args.efficiency
        )
        samples.append(
            ingest.LabeledSample(
                source=source,
                config=ingest.BuildConfig.from_flags_string(args.architecture, args.flags),
                counters=counters,
                origin="oracle",
                fingerprint=sidecar["fingerprint"],
            )
        )
    ingest.write_labeled_samples(samples, args.out)
    print(f"labeled {len(samples)} kernels -> {args.out}")
    return 0


def _add_ingest(sub):
    p = sub.add_parser("ingest", help="parse an external profiler dump")
    p.add_argument("--in", dest="input", required=True, help="CSV or JSONL counter dump")
    p.add_argument("--mapping", default=None, help="JSON file: canonical field -> file column")
    p.add_argument("--out", required=True, help="derived records JSONL")
    p.set_defaults(func=cmd_ingest)


def cmd_ingest(args) -> int:
    mapping = json.loads(Path(args.mapping).read_text()) if args.mapping else None
    records, diagnostics = ingest.ingest(args.input, mapping)
    with open(args.out, "w", encoding="utf-8") as fh:
        for record in records:
            counters = ingest.derive_metrics(record)
            fh.write(json.dumps({
                "kernel_id": record.kernel_id,
                "fingerprint": record.fingerprint,
                "architecture": record.config.architecture,
                "compiler_flags": list(record.config.compiler_flags),
                "toolkit_version": record.config.toolkit_version,
                "pre_derived": record.pre_derived,
                "counters": counters.as_dict(),
            }) + "\n")
    print(f"ingested {len(records)} records ({len(diagnostics)} rows rejected) -> {args.out}")
    for diag in diagnostics:
        print(f"  {diag}", file=sys.stderr)
    return 0


def _add_expand(sub):
    p = sub.add_parser("expand-configs",
                       help="emit the kernel x flags x architecture build-job manifest")
    p.add_argument("--kernels", required=True,
                   help="JSONL with {kernel_id, fingerprint} records")
    p.add_argument("--flag-sets", required=True,
                   help='JSON file: list of flag lists, e.g. [[], ["-ffast-math"]]')
    p.add_argument("--architectures", required=True, help="comma-separated list")
    p.add_argument("--out", required=True, help="build-job manifest JSONL")
    p.set_defaults(func=cmd_expand)


def cmd_expand(args) -> int:
    kernels = []
    with open(args.kernels, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                kernels.append(json.loads(line))
    flag_sets = json.loads(Path(args.flag_sets).read_text(encoding="utf-8"))
    archs = [a.strip() for a in args.architectures.split(",") if a.strip()]
    jobs = ingest.expand_configs(kernels, flag_sets, archs)
    ingest.write_jobs_manifest(jobs, args.out)
    print(f"expanded {len(kernels)} kernels x {max(len(flag_sets), 1)} flag sets x "
          f"{len(archs)} architectures = {len(jobs)} jobs -> {args.out}")
    return 0


def _add_build_dataset(sub):
    p = sub.add_parser("build-dataset",
                       help="render labeled samples into chat records with leak-free splits")
    p.add_argument("--labeled", required=True, help="labeled samples JSONL")
    p.add_argument("--out", required=True, help="dataset directory")
    p.add_argument("--ranges", default=None, help="normalization ranges JSON")
    p.add_argument("--train-ratio", type=float, default=0.9)
    p.add_argument("--test-count", type=int, default=4000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_build_dataset)


def cmd_build_dataset(args) -> int:
    ranges = NormRanges.load(args.ranges) if args.ranges else NormRanges.default()
    labeled = ingest.read_labeled_samples(args.labeled)
    rendered = [dataset.render_sample(s, ranges) for s in labeled]
    manifest = dataset.assign_splits(
        rendered, ratios=(args.train_ratio, 1.0 - args.train_ratio),
        test_count=args.test_count, seed=args.seed,
    )
    dataset.write_dataset(rendered, manifest, args.out)
    counts = manifest.counts()
    print(f"wrote {len(rendered)} samples to {args.out} "
          f"(fingerprints: train={counts['train']}, validation={counts['validation']}, "
          f"test={counts['test']})")
    return 0


def _add_export(sub):
    p = sub.add_parser("export", help="stamp model-specific chat framing")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--split", default="train", choices=dataset.SPLITS)
    p.add_argument("--template", default="plain", choices=sorted(dataset.EXPORT_TEMPLATES))
    p.add_argument("--out", required=True, help="output JSONL of {text} records")
    p.set_defaults(func=cmd_export)


def cmd_export(args) -> int:
    samples = [
        s for s in dataset.read_dataset(args.dataset)
        if s.meta.get("split") == args.split
    ]
    dataset.export_dataset(samples, args.template, args.out)
    print(f"exported {len(samples)} {args.split} samples with template "
          f"{args.template!r} -> {args.out}")
    return 0


def _add_eval(sub):
    p = sub.add_parser("eval", help="evaluate a backend against a labeled test set")
    p.add_argument("--backend", default="oracle", help="backend id (oracle|remote)")
    p.add_argument("--test", required=True, help="test split JSONL")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--server-config", default=None, help="server config JSON for backends")
    p.add_argument("--ranges", default=None)
    p.add_argument("--max-workers", type=int, default=8)
    p.set_defaults(func=cmd_eval)


def cmd_eval(args) -> int:
    from .server import ServerConfig, build_registry

    config = ServerConfig.load(args.server_config)
    registry = build_registry(config)
    backend = registry.get(args.backend)
    ranges = NormRanges.load(args.ranges) if args.ranges else NormRanges.default()
    samples = dataset.read_samples_jsonl(args.test)
    report = evalharness.evaluate(backend, samples, ranges, max_workers=args.max_workers)
    report.save(args.out)
    print(report.to_markdown())
    print(f"report written to {args.out}")
    return 0


def _add_serve(sub):
    p = sub.add_parser("serve", help="run the inference server")
    p.add_argument("--config", default=None, help="server config JSON")
    p.set_defaults(func=cmd_serve)


def cmd_serve(args) -> int:
    from .server import ServerConfig, run_server

    run_server(ServerConfig.load(args.config))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="counterscope",
        description="GPU kernel performance-counter prediction toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for add in (_add_generate, _add_harvest, _add_filter, _add_oracle_label, _add_ingest,
                _add_expand, _add_build_dataset, _add_export, _add_eval, _add_serve):
        add(sub)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CounterscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
