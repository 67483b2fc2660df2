"""Command-line driver: model -> ground state -> RDM -> ES -> tower -> classification."""

from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .config import RunConfig, parse_config, serialize_config
from .eigensolver import dense_sym_eig, lanczos_lowest
from .entanglement import (discarded_weight, entanglement_entropy, levels_to_csv,
                           reduced_density_matrix, spin_resolved_spectrum)
from .errors import ConfigError, EntowerError, NumericalError
from .grouptheory import format_table, table_csv
from .hamiltonian import apply_h, apply_total_spin_squared, compile_model, sector_matrix
from .hilbert import build_sector_basis
from .tos import classify, degeneracy_report, extract_tower, scatter_csv, tower_csv

logger = logging.getLogger("entower")

FAILURE_MARKER = "FAILED"
DENSE_TOL = 1e-10
SINGLET_TOL = 1e-8


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _dense_check(cfg, terms, basis, e0, psi, cut, levels) -> Dict[str, float]:
    """Compare against dense diagonalization and a full-space partial trace."""
    from .oracles import embed, partial_trace

    evals, _ = dense_sym_eig(sector_matrix(terms, basis).toarray())
    de = abs(evals[0] - e0)
    rho = partial_trace(embed(psi, basis.states, basis.n), basis.n, cut.a_sites)
    ref = np.sort(np.linalg.eigvalsh(rho))[::-1]
    ref = ref[ref > cfg.lambda_floor]
    ours = np.sort([lv.lam for lv in levels])[::-1]
    if len(ref) != len(ours):
        raise NumericalError(
            f"dense check: {len(ours)} levels vs {len(ref)} from the full partial trace")
    dl = float(np.max(np.abs(ref - ours))) if len(ref) else 0.0
    if de > DENSE_TOL or dl > DENSE_TOL:
        raise NumericalError(f"dense check failed: |de0|={de:.2e}, max|dlambda|={dl:.2e}")
    return {"e0_deviation": float(de), "lambda_deviation": dl}


def fit_report(cfg: RunConfig, n: int, size_a: int, results, fit, entropy, singlet_norm,
               reports, extra_energies) -> str:
    spec = cfg.model_spec()
    lines = [
        "# entanglement tower-of-states fit report",
        f"model = {cfg.model}",
        "couplings = " + ", ".join(f"{k}={v!r}" for k, v in spec.couplings().items()),
        f"lattice = {cfg.lx}x{cfg.ly} (n={n})",
        f"cut = {cfg.cut} (|A|={size_a})",
        f"ground_energy = {_fmt(results.e0)}",
        f"lanczos_iterations = {results.iterations}",
        f"lanczos_residual = {results.residual:.3e}",
        f"ground_state_S2_norm = {singlet_norm:.3e}",
    ]
    for k, e in enumerate(extra_energies[1:], 1):
        lines.append(f"energy_{k} = {_fmt(e)}")
    lines.append(f"entanglement_entropy = {_fmt(entropy)}")
    for N, c in fit.candidates.items():
        lines.append(f"candidate N={N} slope={_fmt(c.slope)} residual={_fmt(c.residual)}")
    lines.append(f"chosen_N = {fit.chosen_N}")
    lines.append("N_est = " + ("undefined" if fit.N_est is None else _fmt(fit.N_est)))
    lines.append(f"free_fit alpha={_fmt(fit.alpha)} beta={_fmt(fit.beta)}")
    if fit.warnings:
        lines.extend(f"warning: {w}" for w in fit.warnings)
    else:
        lines.append("warnings = none")
    lines.append(f"note: exact diagonalization on n={n} sites; the chosen N is a "
                 "finite-size observation, not a thermodynamic-limit statement")
    lines.append("# degeneracy check against SO(N) -> SO(3) branching (advisory)")
    for r in reports:
        status = "match" if r.matches else "mismatch"
        lines.append(f"rung J={r.rung} xi={_fmt(r.xi)} expected={r.expected} "
                     f"observed={r.observed} {status}")
    return "\n".join(lines) + "\n"


@dataclass
class Analysis:
    """Everything a pipeline run computed, kept in memory for callers and tests."""
    cfg: RunConfig
    lattice: Any
    cut: Any
    basis: Any
    terms: Any
    states: List[Any]
    singlet_norm: float
    rdm: Any
    levels: List[Any]
    entropy: float
    discarded: float
    tower: Any
    fit: Any
    reports: List[Any]
    dense: Optional[Dict[str, float]] = None
    timings: Dict[str, float] = field(default_factory=dict)
    report: str = ""


def run_pipeline(cfg: RunConfig) -> Analysis:
    """Run the full analysis and write all artifacts into ``cfg.out``.

    Raises the module's :class:`EntowerError` on failure, after leaving a
    ``FAILED`` marker (and no fresh artifact set) in the output directory.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / FAILURE_MARKER
    if marker.exists():
        marker.unlink()
    timings: Dict[str, float] = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        timings[name] = now - clock
        clock = now

    try:
        lat = cfg.lattice()
        cut = cfg.make_cut()
        terms = compile_model(cfg.model_spec(), lat)
        terms.check()
        packed = terms.packed()
        basis = build_sector_basis(lat.n, lat.n // 2)
        lap("setup")
        logger.info("sector dimension %d, %d terms", len(basis), len(terms))

        found = lanczos_lowest(lambda v: apply_h(packed, basis, v), len(basis), cfg.nlow,
                               tol=cfg.tol, max_iter=cfg.max_iter, seed=cfg.seed)
        ground = found[0]
        psi = ground.ground_vector
        singlet_norm = float(np.linalg.norm(apply_total_spin_squared(lat.n, basis, psi)))
        lap("ground_state")

        rdm = reduced_density_matrix(psi, basis, cut)
        levels = spin_resolved_spectrum(rdm, cut, cfg.lambda_floor)
        entropy = entanglement_entropy(rdm, cfg.lambda_floor)
        tail = discarded_weight(rdm, cfg.lambda_floor)
        total = sum(lv.lam for lv in levels) + tail
        if abs(total - 1.0) > 1e-10:
            raise NumericalError(f"entanglement levels sum to {total:.15g}, not 1")
        lap("entanglement")

        tower = extract_tower(levels, cfg.s_max())
        fit = classify(tower, cfg.candidates)
        if singlet_norm > SINGLET_TOL:
            fit.warnings.append(f"ground state is not a singlet (|S^2 psi| = {singlet_norm:.2e})")
        reports = degeneracy_report(levels, tower, fit.chosen_N)
        lap("tower")

        dense = None
        if cfg.dense_check:
            dense = _dense_check(cfg, packed, basis, ground.e0, psi, cut, levels)
            lap("dense_check")

        report = fit_report(cfg, lat.n, cut.size_a, ground, fit, entropy, singlet_norm,
                            reports, [r.e0 for r in found])
        artifacts = {
            "levels.csv": levels_to_csv(levels),
            "tower.csv": tower_csv(tower),
            "fit_report.txt": report,
        }
        for N in fit.candidates:
            artifacts[f"scatter_N{N}.csv"] = scatter_csv(tower, N)
        meta = {
            "config": serialize_config(cfg),
            "versions": _versions(),
            "timings_seconds": timings,
            "sector_dimension": len(basis),
            "discarded_weight": tail,
            "dense_check": dense,
        }
        artifacts["run_meta.json"] = json.dumps(meta, indent=2, sort_keys=True) + "\n"
        for name, text in artifacts.items():
            _write_atomic(out / name, text)
    except EntowerError as exc:
        _write_atomic(marker, f"{exc.category}: {exc}\n")
        raise
    return Analysis(cfg, lat, cut, basis, packed, found, singlet_norm, rdm, levels, entropy,
                    tail, tower, fit, reports, dense, timings, report)


def _versions() -> Dict[str, str]:
    import numba
    import scipy

    return {"entower": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="entower",
        description="Classify the tower of states in a subsystem entanglement spectrum.")
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--model", choices=["dimer", "jq3", "cbjq"])
    p.add_argument("--lx", type=int)
    p.add_argument("--ly", type=int)
    p.add_argument("--j1", type=float)
    p.add_argument("--j2", type=float)
    p.add_argument("--j", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--cut", help="row:<y> or sites:<i,j,...>")
    p.add_argument("--candidates", help="comma-separated candidate N values")
    p.add_argument("--smax")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--lambda-floor", type=float)
    p.add_argument("--out")
    p.add_argument("--dense-check", action="store_true", default=None)
    p.add_argument("--nlow", type=int)
    p.add_argument("--cbjq-single-pairing", action="store_true", default=None)
    p.add_argument("--table1", action="store_true",
                   help="print the SO(N) -> SO(3) branching table and exit")
    p.add_argument("--N", type=int, default=5, help="group rank for --table1")
    p.add_argument("--Jmax", type=int, default=4, help="largest superspin for --table1")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.table1:
            if args.N < 3 or args.Jmax < 0:
                raise ConfigError("--table1 needs N >= 3 and Jmax >= 0")
            sys.stdout.write(format_table(args.N, args.Jmax))
            sys.stdout.write("\n")
            sys.stdout.write(table_csv(args.N, args.Jmax))
            return 0
        keys = ["model", "lx", "ly", "j1", "j2", "j", "q", "cut", "candidates", "smax", "tol",
                "max_iter", "seed", "lambda_floor", "out", "dense_check", "nlow",
                "cbjq_single_pairing"]
        overrides = {k: getattr(args, k) for k in keys}
        cfg = parse_config(args.config, overrides)
        sys.stdout.write(run_pipeline(cfg).report)
        return 0
    except EntowerError as exc:
        message = " ".join(str(exc).split())
        sys.stderr.write(f"error: {exc.category}: {message}\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
