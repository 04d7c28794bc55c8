"""Assemble the coupled global system of a decomposed domain."""

from __future__ import annotations

from dataclasses import dataclass

from .assembly import Source, SubdomainSystem, build_subdomain_system
from .coupling import BlockSystem, build_blocks, global_assemble
from .domain import DomainConfig
from .tt import TTMatrix, TTVector


@dataclass
class GlobalProblem:
    config: DomainConfig
    d: int
    tol: float
    systems: list[SubdomainSystem]
    blocks: BlockSystem
    B: TTMatrix
    g: TTVector


def assemble_problem(config: DomainConfig, d: int, tol: float, source: Source | None = None) -> GlobalProblem:
    """Subdomain systems, coupled blocks and the global ``(B, g)`` at level ``d``."""
    systems = [build_subdomain_system(q, d, tol, source) for q in config.quads]
    blocks = build_blocks(systems, config.interfaces, config.dirichlet, d, tol)
    b, g = global_assemble(blocks, config.q, tol)
    return GlobalProblem(config, d, tol, systems, blocks, b, g)
