#!/usr/bin/env python3
"""
Command-line entry point.

Exit status: 0 success, 1 a chain or invariant failed, 2 usage or parse error.
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .bounds import BoundKind
from .chain import DegreeDChain, validate_chain, validate_degree_d
from .chainfile import ChainDocument, read_chain_file, write_chain_file
from .config import RunConfig, load_config, parse_range, resolve_table_path, setup_logging
from .constructors import METHODS, construct
from .errors import (
    BoundDependencyError,
    ChainFileError,
    ConfigError,
    ConstructionError,
    ContractViolation,
    DataIntegrityError,
    TableParseError,
)
from .report import (
    AuditSettings,
    audit_csv,
    bounds_csv,
    bounds_table,
    construction_report,
    format_comparison,
    measurement,
    scholz_audit,
)
from .search import IotaResolver, SearchBudget, load_known_values, shortest_chain, shortest_star_chain

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _budget(args: argparse.Namespace, config: RunConfig) -> SearchBudget:
    base = config.budget
    try:
        return SearchBudget(
            max_depth=args.budget_depth if args.budget_depth is not None else base.max_depth,
            max_nodes=args.budget_nodes if args.budget_nodes is not None else base.max_nodes,
            time_limit=args.budget_seconds if args.budget_seconds is not None else base.time_limit,
        )
    except ContractViolation as e:
        raise ConfigError(str(e)) from None


def _settings(args: argparse.Namespace, config: RunConfig) -> AuditSettings:
    return AuditSettings(
        budget=_budget(args, config),
        table_path=resolve_table_path(args.table, config),
        star=getattr(args, "star", False),
    )


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {out}")
    else:
        sys.stdout.write(text)


def cmd_construct(args: argparse.Namespace, config: RunConfig) -> int:
    outcome = construct(args.method, args.n)
    settings = _settings(args, config)
    resolver = IotaResolver(settings.table(), settings.budget)
    report = construction_report(outcome, args.n, resolver)

    out = Path(args.out) if args.out else config.output_dir / f"{args.method}-{args.n}.toml"
    write_chain_file(out, ChainDocument(outcome.chain, measurement(outcome, report)))
    print(format_comparison(outcome.length, report))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, config: RunConfig) -> int:
    document = read_chain_file(args.path)
    chain = document.chain
    report = validate_degree_d(chain) if isinstance(chain, DegreeDChain) else validate_chain(chain)
    if not report.ok:
        print(f"{args.path}: {report.describe()}")
        return EXIT_FAILED
    print(f"{args.path}: ok, length {chain.length} for {chain.target}")
    return EXIT_OK


def cmd_search(args: argparse.Namespace, config: RunConfig) -> int:
    budget = _budget(args, config)
    workers = args.workers or config.workers
    run = shortest_star_chain if args.star else shortest_chain
    result = run(args.n, budget, workers)

    table_path = resolve_table_path(args.table, config)
    if table_path is not None and not args.star:
        load_known_values(table_path).cross_check(result)

    status = "optimal" if result.proven_optimal else "best found (not proven)"
    print(f"{args.n}: length {result.optimal_length} {status}; {result.nodes_expanded} nodes")
    print(" ".join(str(e) for e in result.witness.elements))
    if args.out:
        search_block = {
            "optimal_length": result.optimal_length,
            "proven_optimal": result.proven_optimal,
            "star_only": result.star_only,
        }
        write_chain_file(args.out, ChainDocument(result.witness, search=search_block))
    return EXIT_OK


def cmd_scholz_audit(args: argparse.Namespace, config: RunConfig) -> int:
    settings = _settings(args, config)
    n_max = args.n_max if args.n_max is not None else config.n_range[1]
    rows = scholz_audit(n_max, settings, args.workers or config.workers)
    _emit(audit_csv(rows, args.pretty), args.out)
    return EXIT_OK if all(row.scholz_holds for row in rows) else EXIT_FAILED


def _kinds(text: Optional[str], config: RunConfig) -> List[BoundKind]:
    names = config.kinds if text is None else [k for k in text.split(",") if k.strip()]
    return [BoundKind.parse(name) for name in names]


def cmd_bounds_table(args: argparse.Namespace, config: RunConfig) -> int:
    if args.range:
        n_range = parse_range(args.range)
    elif args.n is not None:
        n_range = (args.n, args.n)
    else:
        n_range = config.n_range
    settings = _settings(args, config)
    reports = bounds_table(n_range, _kinds(args.kinds, config), settings, args.workers or config.workers)
    _emit(bounds_csv(reports, args.pretty), args.out)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace, config: RunConfig) -> int:
    from .server import ChainlabMCPServer

    server = ChainlabMCPServer(table_path=resolve_table_path(args.table, config), config=config)
    asyncio.run(server.run())
    return EXIT_OK


def _add_budget_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--budget-depth", type=int, help="Maximum chain length searched")
    parser.add_argument("--budget-nodes", type=int, help="Node limit per search subtree")
    parser.add_argument("--budget-seconds", type=float, help="Wall-clock limit per search")


def _add_table_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--table", type=str, default=None, help="Known iota values file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chainlab", description="Addition chain laboratory")
    parser.add_argument("--config", type=str, default=None, help="Path to config.toml")
    parser.add_argument("--log-level", type=str, default=None, help="Override [logging].level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="Build a chain with a named construction")
    p.add_argument("--method", required=True, choices=sorted(METHODS))
    p.add_argument("--n", type=int, required=True, help="Exponent")
    p.add_argument("--out", type=str, default=None, help="Chain file to write")
    _add_table_flag(p)
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_construct)

    p = sub.add_parser("verify", help="Validate a chain file")
    p.add_argument("path", type=str)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("search", help="Exact shortest chain for a number")
    p.add_argument("--n", type=int, required=True, help="Target number")
    p.add_argument("--star", action="store_true", help="Restrict to star chains")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", type=str, default=None)
    _add_table_flag(p)
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_search)

    p = sub.add_parser("scholz-audit", help="Compare iota(2^n-1) with n-1+iota(n)")
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--star", action="store_true", help="Also audit star chain lengths")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--out", type=str, default=None)
    _add_table_flag(p)
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_scholz_audit)

    p = sub.add_parser("bounds-table", help="Tabulate bounds against constructions")
    p.add_argument("--range", type=str, default=None, help="Exponent range a..b")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--kinds", type=str, default=None, help="Comma separated bound kinds")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--out", type=str, default=None)
    _add_table_flag(p)
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_bounds_table)

    p = sub.add_parser("serve", help="Run the MCP tool server on stdio")
    _add_table_flag(p)
    p.set_defaults(handler=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if args.log_level:
            config = config.with_overrides(log_level=args.log_level)
        setup_logging(config)
        return args.handler(args, config)
    except (ContractViolation, ConfigError, ChainFileError, TableParseError) as e:
        print(f"chainlab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConstructionError, DataIntegrityError, BoundDependencyError) as e:
        print(f"chainlab: failed: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
