"""TOML run configuration: domain, grid, scheme, problem and solver blocks."""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Optional

from .domain import BUILTIN_DOMAINS, DomainSpec
from .elliptic import EllipticConfig
from .parabolic import SolverConfig
from .problems import get_problem
from .scheme import Scheme, make_scheme


def load_config(path) -> dict:
    with open(Path(path), "rb") as fh:
        return tomllib.load(fh)


def build_domain(cfg: dict) -> DomainSpec:
    block = cfg.get("domain", {})
    name = block.get("name", "ball")
    if name not in BUILTIN_DOMAINS:
        raise KeyError(f"unknown domain {name!r}; have {sorted(BUILTIN_DOMAINS)}")
    if name == "ellipsoid":
        return BUILTIN_DOMAINS[name](block.get("coeffs", [1.0]))
    return BUILTIN_DOMAINS[name](block.get("n", 1))


def build_scheme(cfg: dict, seed: int = 0) -> Scheme:
    dom = build_domain(cfg)
    grid = cfg.get("grid", {})
    sch = cfg.get("scheme", {})
    return make_scheme(
        dom,
        h=float(grid.get("h", 0.05)),
        K=int(sch.get("K", 1 if dom.n == 1 else 8)),
        seed=int(sch.get("seed", seed)),
        penalty=float(sch.get("penalty", 1.0)),
        eps_ma=float(sch.get("eps_ma", 1e-12)),
        eps_f=float(sch.get("eps_f", 0.0)),
    )


def build_problem(cfg: dict):
    block = cfg.get("problem", {})
    name = block.get("name", "manufactured_linear")
    n = cfg.get("domain", {}).get("n", 1)
    return get_problem(name, n)


def solver_config(cfg: dict) -> SolverConfig:
    block = cfg.get("solver", {})
    kw = {}
    for key in ("T", "dt", "lambda_cfl", "eps_ma", "eps_f", "max_steps",
                "residual_target", "snapshot_dt"):
        if key in block:
            kw[key] = block[key]
    return SolverConfig(**kw)


def elliptic_config(cfg: dict) -> EllipticConfig:
    block = cfg.get("elliptic", {})
    kw = {}
    for key in ("sigma0", "eps_ma", "eps_f", "residual_target", "max_iters",
                "ordering", "gs_block", "sweep_tol", "max_sweeps",
                "bisect_iters"):
        if key in block:
            kw[key] = block[key]
    return EllipticConfig(**kw)
