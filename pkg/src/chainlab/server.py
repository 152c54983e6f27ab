#!/usr/bin/env python3
"""
chainlab MCP Server

A Model Context Protocol server exposing the addition chain laboratory:
constructions, chain verification, exact search, bound evaluation and
single rows of the Scholz audit.
"""

import asyncio
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import aiofiles
from mcp.server import Server
from mcp.server.lowlevel import NotificationOptions
from mcp.server.models import InitializationOptions
from mcp.server.stdio import stdio_server
from mcp.types import CallToolResult, Prompt, TextContent, Tool

from .bounds import BoundKind, bound_value
from .chain import DegreeDChain, validate_chain, validate_degree_d
from .chainfile import ChainDocument, dumps, loads
from .config import RunConfig
from .constructors import METHODS, construct
from .errors import ChainlabError
from .report import AuditSettings, AUDIT_HEADER, construction_report, measurement, scholz_row
from .search import IotaResolver, KnownValuesTable, SearchBudget, load_known_values, shortest_chain, shortest_star_chain

logger = logging.getLogger("chainlab.server")

MCP_SEARCH_BUDGET = SearchBudget(max_depth=14, max_nodes=5_000_000, time_limit=60.0)


def _text(text: str) -> CallToolResult:
    return CallToolResult(content=[TextContent(type="text", text=text)])


class ChainlabMCPServer:
    def __init__(self, table_path: Optional[Path] = None, config: Optional[RunConfig] = None):
        self.config = config or RunConfig()
        self.server = Server(self.config.server.name)
        self.table_path = Path(table_path) if table_path else None
        self.table: Optional[KnownValuesTable] = None
        if self.table_path is not None:
            self.table = load_known_values(self.table_path)
            logger.info(f"Loaded {len(self.table)} known values from {self.table_path}")
        else:
            logger.warning("No known values table; iota(n) comes from search only")
        self.resolver = IotaResolver(self.table, MCP_SEARCH_BUDGET)
        self._setup_handlers()

    def _setup_handlers(self):
        """Setup MCP server handlers."""

        @self.server.list_tools()
        async def handle_list_tools() -> List[Tool]:
            """List available tools."""
            return [
                Tool(
                    name="construct_chain",
                    description="Build an addition chain with a named construction and compare it with its bound",
                    inputSchema={
                        "type": "object",
                        "properties": {
                            "method": {"type": "string", "enum": sorted(METHODS)},
                            "n": {"type": "integer", "description": "Exponent"},
                        },
                        "required": ["method", "n"],
                    },
                ),
                Tool(
                    name="verify_chain",
                    description="Validate a chain file, given inline or by path",
                    inputSchema={
                        "type": "object",
                        "properties": {
                            "document": {"type": "string", "description": "Chain file contents (TOML)"},
                            "path": {"type": "string", "description": "Path to a chain file"},
                        },
                    },
                ),
                Tool(
                    name="shortest_chain",
                    description="Exact shortest addition chain (or star chain) for a number",
                    inputSchema={
                        "type": "object",
                        "properties": {
                            "n": {"type": "integer"},
                            "star": {"type": "boolean", "description": "Restrict to star chains"},
                        },
                        "required": ["n"],
                    },
                ),
                Tool(
                    name="bound_value",
                    description="Evaluate a chain length bound",
                    inputSchema={
                        "type": "object",
                        "properties": {
                            "kind": {"type": "string", "enum": [k.value for k in BoundKind]},
                            "n": {"type": "integer"},
                            "iota": {"type": "integer", "description": "iota(n), looked up if omitted"},
                        },
                        "required": ["kind", "n"],
                    },
                ),
                Tool(
                    name="scholz_row",
                    description="Compare iota(2^n-1) with n-1+iota(n) for one exponent",
                    inputSchema={
                        "type": "object",
                        "properties": {"n": {"type": "integer"}},
                        "required": ["n"],
                    },
                ),
            ]

        @self.server.call_tool()
        async def handle_call_tool(name: str, arguments: dict) -> list[TextContent]:
            """Handle tool calls."""
            try:
                if name == "construct_chain":
                    result = await self._construct_chain(arguments.get("method"), arguments.get("n"))
                elif name == "verify_chain":
                    result = await self._verify_chain(arguments.get("document"), arguments.get("path"))
                elif name == "shortest_chain":
                    result = await self._shortest_chain(arguments.get("n"), bool(arguments.get("star", False)))
                elif name == "bound_value":
                    result = await self._bound_value(arguments.get("kind"), arguments.get("n"), arguments.get("iota"))
                elif name == "scholz_row":
                    result = await self._scholz_row(arguments.get("n"))
                else:
                    return [TextContent(type="text", text=f"Unknown tool: {name}")]
                return result.content
            except Exception as e:
                logger.error(f"Error in tool {name}: {e}")
                return [TextContent(type="text", text=f"Error: {str(e)}")]

        @self.server.list_prompts()
        async def handle_list_prompts() -> List[Prompt]:
            """List available prompts."""
            return []

    async def _construct_chain(self, method: Optional[str], n: Optional[int]) -> CallToolResult:
        if not method or n is None:
            return _text("Both method and n are required")
        try:
            outcome = await asyncio.to_thread(construct, method, int(n))
            report = await asyncio.to_thread(construction_report, outcome, int(n), self.resolver)
        except ChainlabError as e:
            return _text(f"Construction failed: {e}")

        lines = [f"# {method} chain for n={n}", "", f"**Length:** {outcome.length}"]
        if report is not None:
            verdict = "satisfied" if report.satisfied else "NOT satisfied"
            lines.append(f"**Bound ({report.kind.value}):** {report.bound.text()} ({verdict})")
        lines += ["", "```toml", dumps(ChainDocument(outcome.chain, measurement(outcome, report))), "```"]
        return _text("\n".join(lines))

    async def _verify_chain(self, document: Optional[str], path: Optional[str]) -> CallToolResult:
        if not document and not path:
            return _text("Provide either a chain document or a path")
        source = path or "<inline>"
        if document is None:
            try:
                async with aiofiles.open(path, "r", encoding="utf-8") as f:
                    document = await f.read()
            except OSError as e:
                return _text(f"Cannot read {path}: {e}")
        try:
            chain = loads(document, source).chain
        except ChainlabError as e:
            return _text(f"Parse error: {e}")
        report = validate_degree_d(chain) if isinstance(chain, DegreeDChain) else validate_chain(chain)
        if report.ok:
            return _text(f"{source}: valid chain of length {chain.length} for {chain.target}")
        return _text(f"{source}: {report.describe()}")

    async def _shortest_chain(self, n: Optional[int], star: bool) -> CallToolResult:
        if n is None:
            return _text("n is required")
        run = shortest_star_chain if star else shortest_chain
        result = await asyncio.to_thread(run, int(n), MCP_SEARCH_BUDGET)
        if self.table is not None:
            self.table.cross_check(result)
        kind = "star chain" if star else "chain"
        status = "proven optimal" if result.proven_optimal else "best found, not proven"
        elements = ", ".join(str(e) for e in result.witness.elements)
        return _text(
            f"Shortest {kind} for {n}: length {result.optimal_length} ({status}, "
            f"{result.nodes_expanded} nodes)\n\n[{elements}]"
        )

    async def _bound_value(self, kind: Optional[str], n: Optional[int], iota: Optional[int]) -> CallToolResult:
        if not kind or n is None:
            return _text("Both kind and n are required")
        try:
            value = await asyncio.to_thread(
                bound_value, kind, int(n), iota, resolver=self.resolver, allow_fallback=True
            )
        except ChainlabError as e:
            return _text(f"Cannot evaluate {kind} at n={n}: {e}")
        text = f"{value.kind.value}({n}) = {value.text()}"
        if value.error:
            text += f" (error <= {value.error:.1e})"
        if value.iota_source is not None:
            text += f"; iota({n}) = {value.iota} from {value.iota_source.value}"
        return _text(text)

    async def _scholz_row(self, n: Optional[int]) -> CallToolResult:
        if n is None or int(n) < 2:
            return _text("n >= 2 is required")
        settings = AuditSettings(budget=MCP_SEARCH_BUDGET, table_path=self.table_path)
        row = await asyncio.to_thread(scholz_row, int(n), settings, self.table)
        pairs: Dict[str, Any] = dict(zip(AUDIT_HEADER, row.cells()))
        return _text("\n".join(f"- {key}: {value}" for key, value in pairs.items()))

    async def run(self):
        """Run the MCP server."""
        async with stdio_server() as (read_stream, write_stream):
            await self.server.run(
                read_stream,
                write_stream,
                InitializationOptions(
                    server_name=self.config.server.name,
                    server_version=self.config.server.version,
                    capabilities=self.server.get_capabilities(
                        notification_options=NotificationOptions(),
                        experimental_capabilities={},
                    ),
                ),
            )
