"""Operator command line.

Commands: ``gen`` (materialize the deterministic seed corpus), ``serve``
(start the HTTP daemon), ``seed`` (load registries/catalog/data and
print counts), ``run`` (execute a scripted scenario headlessly), ``dump``
(export a session transcript), ``verify`` (structural transcript diff).

Exit codes: 0 success, 1 scenario/verify mismatch, 2 configuration or
parse errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, OrchestraError, ScenarioError


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScenarioError as exc:
        print(f"scenario mismatch: {exc}", file=sys.stderr)
        return 1
    except OrchestraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orchestra-kernel",
        description="Compound-AI orchestration runtime")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate the deterministic seed tree")
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--force", action="store_true",
                       help="overwrite existing files")
    p_gen.set_defaults(handler=cmd_gen)

    p_serve = sub.add_parser("serve", help="start the HTTP daemon")
    p_serve.add_argument("--config", required=True)
    p_serve.set_defaults(handler=cmd_serve)

    p_seed = sub.add_parser("seed", help="load registries and data, print "
                                         "counts")
    p_seed.add_argument("--agents", required=True)
    p_seed.add_argument("--catalog", required=True)
    p_seed.add_argument("--data", required=True)
    p_seed.add_argument("--templates")
    p_seed.add_argument("--mockllm")
    p_seed.set_defaults(handler=cmd_seed)

    p_run = sub.add_parser("run", help="run a scripted scenario")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--seeds", required=True,
                       help="seed tree directory (from gen)")
    p_run.add_argument("--out", help="write the transcript JSONL here")
    p_run.set_defaults(handler=cmd_run)

    p_dump = sub.add_parser("dump", help="export a session transcript")
    p_dump.add_argument("--session", required=True)
    p_dump.add_argument("--store", required=True,
                        help="substrate data directory")
    p_dump.add_argument("--out")
    p_dump.set_defaults(handler=cmd_dump)

    p_verify = sub.add_parser("verify", help="structural transcript diff")
    p_verify.add_argument("--transcript", required=True)
    p_verify.add_argument("--golden", required=True)
    p_verify.set_defaults(handler=cmd_verify)
    return parser


def cmd_gen(args) -> int:
    from .seeds import generate

    counts = generate(args.out, force=args.force)
    for key, value in counts.items():
        print(f"{key}: {value}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .gateway import DEFAULT_TOKEN, create_app
    from .kernel import Kernel
    from .seedio import read_structured

    config = read_structured(args.config) or {}
    kernel = Kernel(config.get("kernel", {}))
    seeds_dir = config.get("seeds")
    if seeds_dir:
        counts = kernel.seed_tree(seeds_dir)
        print("seeded:", json.dumps(counts))
    app = create_app(kernel, auth_token=config.get("auth_token",
                                                   DEFAULT_TOKEN))
    uvicorn.run(app, host=config.get("host", "127.0.0.1"),
                port=int(config.get("port", 8750)),
                log_level=config.get("log_level", "info"))
    return 0


def cmd_seed(args) -> int:
    from .kernel import Kernel

    kernel = Kernel()
    try:
        counts = kernel.seed(agents_file=args.agents,
                             catalog_file=args.catalog,
                             data_dir=args.data,
                             templates_file=args.templates,
                             mockllm_file=args.mockllm)
        for key, value in counts.items():
            print(f"{key}: {value}")
    finally:
        kernel.close()
    return 0


def cmd_run(args) -> int:
    from .kernel import Kernel
    from .scenario import run_scenario
    from .seedio import read_structured
    from .transcript import write_jsonl

    scenario = read_structured(args.scenario)
    kernel = Kernel()
    try:
        kernel.seed_tree(args.seeds)
        session_id, records = run_scenario(kernel, scenario)
        print(f"scenario {scenario.get('name', '?')}: ok "
              f"(session {session_id}, {len(records)} messages)")
        if args.out:
            write_jsonl(args.out, records)
            print(f"transcript written to {args.out}")
    finally:
        kernel.close()
    return 0


def cmd_dump(args) -> int:
    from .transcript import dump_lines, load_jsonl

    path = Path(args.store) / "sessions" / f"{args.session}.jsonl"
    if not path.exists():
        raise ConfigError(f"no transcript for session {args.session} "
                          f"under {args.store}")
    records = load_jsonl(path)
    text = dump_lines(records)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"transcript written to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_verify(args) -> int:
    from .transcript import diff, load_jsonl

    left = load_jsonl(args.transcript)
    right = load_jsonl(args.golden)
    problems = diff(left, right)
    if problems:
        for problem in problems[:20]:
            print(problem)
        print(f"verify: {len(problems)} difference(s)")
        return 1
    print("verify: transcripts are equivalent")
    return 0


if __name__ == "__main__":
    sys.exit(main())
