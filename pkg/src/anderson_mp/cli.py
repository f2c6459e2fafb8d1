"""Batch experiment runner.

    anderson-mp <subcommand> --config PATH [--seed N] [--set key=value]... [--out DIR]

Subcommands write CSV files with fixed headers into ``output.dir``.  Worker
threads are capped by ``ANDERSON_MP_THREADS``; output never depends on it.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path
from typing import Iterable, Sequence

from anderson_mp.config import ExperimentConfig, parse_config, parse_overrides
from anderson_mp.disorder import sample_field
from anderson_mp.edge_probe import edge_scan, weyl_grid_side, weyl_probe
from anderson_mp.eigensolve import dense_spectrum
from anderson_mp.errors import AndersonError
from anderson_mp.ids import (
    compare_free_vs_interacting,
    estimate_ids,
    fit_lifshitz,
    select_probe_energy,
)

SUBCOMMANDS = ("spectrum", "ids", "fit", "compare", "weyl", "edge")

HEADERS = {
    "spectrum": ("index", "eigenvalue"),
    "ids": ("L", "E", "N_mean", "N_stderr", "R"),
    "fit": ("slope", "gamma_hat", "window_lo", "window_hi", "residual_rms"),
    "compare": ("L", "E_probe", "N_int", "N_free", "delta", "stderr"),
    "weyl": ("k", "m", "quotient", "residual", "interaction_energy"),
    "edge": ("L", "median_E0", "iqr_E0", "R"),
}


def fmt(value) -> str:
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    return format(float(value), ".12g")


def write_csv(path: Path, kind: str, rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADERS[kind])
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def _label(L: float) -> str:
    return fmt(L).replace(".", "p")


def _ids_rows(curve):
    for rec in curve.records:
        for E, mean, err in zip(curve.energies, rec.mean, rec.stderr):
            yield rec.L, E, mean, err, rec.R


def _run_spectrum(cfg: ExperimentConfig, workers):
    paths = []
    model, spec = cfg.model, cfg.disorder
    for m in cfg.m_list:
        params = model.params(m)
        field = sample_field(spec, params.single_particle_sites, cfg.task.realization)
        spectrum = dense_spectrum(model.hamiltonian(m, field, True))
        rows = ((i, v) for i, v in enumerate(spectrum.values))
        name = f"spectrum_L{_label(m * model.h)}.csv"
        paths.append(write_csv(cfg.output.path(name), "spectrum", rows))
    return paths


def _run_ids(cfg: ExperimentConfig, workers):
    curve = estimate_ids(cfg.model, cfg.L_list, cfg.task.energy_grid("ids"), cfg.disorder, workers=workers)
    return [write_csv(cfg.output.path("ids.csv"), "ids", _ids_rows(curve))]


def _run_fit(cfg: ExperimentConfig, workers):
    task = cfg.task
    L = task.fit_L if task.fit_L is not None else max(cfg.L_list)
    curve = estimate_ids(cfg.model, [L], task.energy_grid("fit"), cfg.disorder, workers=workers)
    fit = fit_lifshitz(curve, E0=task.E0, window=task.fit_window, ntilde_range=task.fit_ntilde)
    row = (fit.slope, fit.gamma_hat, fit.window_lo, fit.window_hi, fit.residual_rms)
    return [
        write_csv(cfg.output.path("fit.csv"), "fit", [row]),
        write_csv(cfg.output.path("fit_ids.csv"), "ids", _ids_rows(curve)),
    ]


def _run_compare(cfg: ExperimentConfig, workers):
    task = cfg.task
    E_probe = task.E_probe
    if E_probe is None:
        free = estimate_ids(
            cfg.model,
            [max(cfg.L_list)],
            task.energy_grid("compare without task.E_probe"),
            cfg.disorder,
            include_interaction=False,
            workers=workers,
        )
        E_probe = select_probe_energy(free, task.probe_ntilde)
    rows = compare_free_vs_interacting(cfg.model, E_probe, cfg.L_list, cfg.disorder, workers=workers)
    out = ((r.L, r.E_probe, r.n_int, r.n_free, r.delta, r.stderr) for r in rows)
    return [write_csv(cfg.output.path("compare.csv"), "compare", out)]


def _run_weyl(cfg: ExperimentConfig, workers):
    model, task = cfg.model, cfg.task
    rows = []
    for m in task.weyl_m_list:
        side = weyl_grid_side(model, task.weyl_k, m)
        field = sample_field(cfg.disorder, side**model.d, task.realization)
        probe = weyl_probe(model, task.weyl_k, m, field)
        rows.append((probe.k, probe.m, probe.quotient, probe.residual, probe.interaction_energy))
    return [write_csv(cfg.output.path("weyl.csv"), "weyl", rows)]


def _run_edge(cfg: ExperimentConfig, workers):
    rows = edge_scan(cfg.model, cfg.L_list, cfg.disorder, tol=cfg.task.tol, workers=workers)
    out = ((r.L, r.median, r.iqr, r.R) for r in rows)
    return [write_csv(cfg.output.path("edge.csv"), "edge", out)]


_RUNNERS = {
    "spectrum": _run_spectrum,
    "ids": _run_ids,
    "fit": _run_fit,
    "compare": _run_compare,
    "weyl": _run_weyl,
    "edge": _run_edge,
}


def run(subcommand: str, config: ExperimentConfig, workers: int | None = None) -> list[Path]:
    """Execute one subcommand and return the CSV files written."""
    if subcommand not in _RUNNERS:
        raise ValueError(f"unknown subcommand {subcommand!r}; choose from {', '.join(SUBCOMMANDS)}")
    return _RUNNERS[subcommand](config, workers)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anderson-mp",
        description="Finite-lattice experiments for the multi-particle Anderson model.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="key = value experiment file")
    parser.add_argument("--seed", type=int, help="override disorder.seed")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )
    parser.add_argument("--out", help="override output.dir")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = parse_overrides(args.overrides)
        if args.seed is not None:
            overrides["disorder.seed"] = str(args.seed)
        if args.out is not None:
            overrides["output.dir"] = args.out
        cfg = parse_config(args.config, overrides)
        paths = run(args.subcommand, cfg)
    except (AndersonError, ValueError, IndexError, KeyError, OSError) as exc:
        print(f"anderson-mp {args.subcommand}: error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
