#!/usr/bin/env python3
# Copyright (c) 2025 expclose contributors
# Licensed under the Apache License, Version 2.0. See LICENSE file for details.
#
# THIS SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND.
"""
expclose MCP Server

Exposes the command pipeline (check, triangularize, solve, audit, sweep) as
MCP tools over stdio. Each tool takes an inline JSON object or a file path
plus run-config fields, and returns the record the CLI would print.
"""

import asyncio
import json

# MCP SDK imports
from mcp.server import Server
from mcp.server.stdio import stdio_server
from mcp.types import Tool, TextContent

from cli import run
from errors import ExpCloseError, InputError
from settings import CONFIG_PATH, build_config, debug_log

# ---------------------------------------------------------------------------
# Tool definitions
# ---------------------------------------------------------------------------

CONFIG_PROPERTIES = {
    "precision_bits": {"type": "integer", "description": "Working precision in bits (>= 64, default 256)"},
    "tol": {"type": "string", "description": "Certificate tolerance as a decimal string, or 'auto'"},
    "height_bound": {"type": "integer", "description": "Relation height bound H (default 100)"},
    "rng_seed": {"type": "integer", "description": "Seed for all sampling (default 0)"},
    "max_iter": {"type": "integer", "description": "Solver iteration cap (default 500)"},
    "workers": {"type": "integer", "description": "Worker threads for sampling and sweeps"},
    "require_both_dominant": {"type": "boolean", "description": "Also require pi2 dominant"},
}

TOOL_COMMANDS = {
    "expclose_check": "check",
    "expclose_triangularize": "triangularize",
    "expclose_solve": "solve",
    "expclose_audit": "audit",
    "expclose_sweep": "sweep",
}


def _schema(input_description, extra=None):
    properties = {
        "input": {"type": "object", "description": input_description},
        "input_path": {"type": "string", "description": "Path to the same document as a JSON file"},
    }
    properties.update(extra or {})
    properties.update(CONFIG_PROPERTIES)
    return {"type": "object", "properties": properties}


def tool_definitions():
    variety = "Variety document: {form: 'variety', n, generators, approx_coeffs?}"
    return [
        Tool(
            name="expclose_check",
            description="Estimate dim V and test dominance of both coordinate projections (the hypothesis gate).",
            inputSchema=_schema(variety, {
                "freeness": {"type": "boolean", "description": "Also search translates of hyperplanes and tori"},
            }),
        ),
        Tool(
            name="expclose_triangularize",
            description="Reduce a variety with dominant pi1 to a triangular system p_i(x, y_i) = 0 through a witness point.",
            inputSchema=_schema(variety),
        ),
        Tool(
            name="expclose_solve",
            description="Solve the Masser system e^z = f(z) for one seed k (nonzero integers), on a variety or triangular system.",
            inputSchema=_schema("Variety or triangular document (form: 'triangular', n, polys)", {
                "seed": {"type": "string", "description": "Comma-separated nonzero integers, e.g. '1,-1'"},
                "branch": {"type": "string", "description": "Comma-separated branch choice per coordinate"},
            }),
        ),
        Tool(
            name="expclose_audit",
            description="Search integer additive and multiplicative relations on a solution up to height H.",
            inputSchema=_schema("Solution record as emitted by expclose_solve", {
                "variety": {"type": "object", "description": "Optional variety, to attach the finite-fiber flag"},
            }),
        ),
        Tool(
            name="expclose_sweep",
            description="Sweep seeds over a box, excluding witnessed tori, and optionally report density evidence.",
            inputSchema=_schema(variety, {
                "seed_box": {"type": "string", "description": "lo..hi, or one interval per coordinate", "default": "-3..3"},
                "budget": {"type": "integer", "description": "Maximum seeds tried", "default": 200},
                "branch_policy": {"type": "string", "enum": ["first", "all"], "default": "first"},
                "density_degree": {"type": "integer", "description": "Density evidence up to this degree"},
                "allow_non_dominant": {"type": "boolean", "description": "Proceed when only pi1 is dominant"},
            }),
        ),
    ]


def execute_tool(name, arguments):
    """Run one tool call synchronously; returns the response dict."""
    if name not in TOOL_COMMANDS:
        return {"success": False, "error": f"Unknown tool: {name}"}
    arguments = dict(arguments or {})
    try:
        source = arguments.pop("input", None) or arguments.pop("input_path", None)
        if source is None:
            raise InputError("either 'input' or 'input_path' is required")
        overrides = {k: arguments.pop(k, None) for k in CONFIG_PROPERTIES}
        overrides["output_format"] = "json"
        config = build_config(overrides)
    except ExpCloseError as e:
        return e.to_dict()
    status, record = run(TOOL_COMMANDS[name], source, config, arguments)
    return {"success": status == 0, "exit_status": status, "record": record}


# ---------------------------------------------------------------------------
# MCP Server Setup
# ---------------------------------------------------------------------------

server = Server("expclose-mcp")


@server.list_tools()
async def handle_list_tools():
    """List available expclose tools."""
    return tool_definitions()


@server.call_tool()
async def handle_call_tool(name: str, arguments: dict):
    """Handle tool calls; the pipeline is CPU-bound so it runs off the event loop."""
    try:
        result = await asyncio.to_thread(execute_tool, name, arguments)
        return [TextContent(type="text", text=json.dumps(result, indent=2, sort_keys=True))]
    except Exception as e:
        debug_log(f"Tool error: {e}", "ERROR")
        return [TextContent(type="text", text=json.dumps({
            "success": False,
            "error": str(e)
        }, indent=2))]


# ---------------------------------------------------------------------------
# Main Entry Point
# ---------------------------------------------------------------------------

async def main():
    """Run the MCP server."""
    debug_log("Starting expclose MCP Server...")
    debug_log(f"Config file: {CONFIG_PATH}")

    async with stdio_server() as (read_stream, write_stream):
        await server.run(read_stream, write_stream, server.create_initialization_options())


if __name__ == "__main__":
    asyncio.run(main())
