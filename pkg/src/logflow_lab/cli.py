"""Command line: ``logflow-lab run|verify|list|export``.

Exit codes: 0 success, 1 check failure, 2 configuration error, 3 solver
failure. ``LOGFLOW_WORKERS`` sets how many experiments run side by side.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor

from .errors import ConfigurationError, SelectorError
from .experiments import (ExperimentConfig, RunManifest, builtin_config, export_plot_data,
                          list_experiments, load_config, run_experiment, summary_table, worker_count)

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
DELIM = "=" * 72

log = logging.getLogger("logflow_lab")


def _run_one(args: tuple) -> tuple[str, int, int, str, str]:
    """Run one config; returns (name, failed, status code, table, manifest path)."""
    source, out = args
    try:
        cfg = load_config(source)
        manifest = run_experiment(cfg, out)
    except ConfigurationError as exc:
        return str(source), 0, EXIT_CONFIG, f"configuration error: {exc}\n", ""
    code = EXIT_SOLVER if manifest.status != "ok" else EXIT_OK
    return (cfg.name, manifest.summary["failed"], code, summary_table(manifest.reports),
            str(manifest.root / "manifest.json"))


def _execute(configs, out, verify: bool) -> int:
    jobs = [(c, out) for c in configs]
    n = min(worker_count(), len(jobs))
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    code = EXIT_OK
    for name, failed, status, table, manifest in results:
        print(DELIM)
        print(f"experiment: {name}")
        if manifest:
            print(f"manifest: {manifest}")
        print(DELIM)
        sys.stdout.write(table)
        print(DELIM)
        print(f"failed checks: {failed}")
        code = max(code, status)
        if verify and failed and code < EXIT_CHECK:
            code = EXIT_CHECK
    # configuration errors take precedence over solver and check failures
    if any(r[2] == EXIT_CONFIG for r in results):
        return EXIT_CONFIG
    if any(r[2] == EXIT_SOLVER for r in results):
        return EXIT_SOLVER
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="logflow-lab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "run experiments and write reports"),
                           ("verify", "run experiments; exit 1 if any check fails")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("configs", nargs="+", help="TOML/JSON config files or builtin names")
        sp.add_argument("-o", "--out", default=None, help="output root (default: config outputs.directory)")
    sp = sub.add_parser("list", help="list builtin experiments")
    sp.add_argument("--dump", metavar="NAME", help="print the TOML config of a builtin")
    sp = sub.add_parser("export", help="write plot-ready CSV from a finished run")
    sp.add_argument("manifest", help="manifest.json or its run directory")
    sp.add_argument("selector", nargs="?", default="",
                    help="comma-separated: slices, profile, reports, convergence")
    sp.add_argument("-o", "--out", default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "list":
            if args.dump:
                sys.stdout.write(builtin_config(args.dump).to_toml())
                return EXIT_OK
            for name, desc in list_experiments():
                print(f"{name}\t{desc}")
            return EXIT_OK
        if args.command == "export":
            files = export_plot_data(RunManifest.load(args.manifest), args.selector, args.out)
            for f in files:
                print(f)
            return EXIT_OK
        return _execute(args.configs, args.out, verify=args.command == "verify")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SelectorError as exc:
        print(f"selector error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
