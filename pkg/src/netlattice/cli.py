"""Command line front end.

Every subcommand takes the same configuration flags: ``--config`` loads a
flat key = value file, repeated ``--set key=value`` flags override single
fields, and ``--seed`` overrides the master seed last. Exit codes follow
the batch-tool convention: 0 all comparisons passed (or nothing was
compared), 1 at least one comparison failed, 2 the run itself broke.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import EnsembleConfig, coerce_field, load_config, save_config
from .errors import GridMismatch, InvalidField, NetLatticeError
from . import experiments, lattice, plotting, sampler, spectral, theory

PASS_EXIT = 0
FAIL_EXIT = 1
ERROR_EXIT = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="configuration file to load")
    parser.add_argument(
        "--set",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        dest="overrides",
        help="override one configuration field (repeatable, wins over --config)",
    )
    parser.add_argument(
        "--seed", type=int, metavar="U64", help="override the master seed"
    )
    parser.add_argument(
        "--out", metavar="DIR", help="output directory (default: current directory)"
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=1,
        metavar="N",
        help="worker processes for ensemble sampling (default 1)",
    )


def _resolve_config(args) -> EnsembleConfig:
    config = load_config(args.config) if args.config else EnsembleConfig()
    updates = {}
    for item in args.overrides:
        if "=" not in item:
            raise InvalidField("--set", f"expected KEY=VALUE, got {item!r}")
        key, _, text = item.partition("=")
        key = key.strip()
        updates[key] = coerce_field(key, text.strip())
    if updates:
        config = config.replace(**updates)
    if args.seed is not None:
        config = config.replace(master_seed=args.seed)
    return config


def _out_dir(args, default: str = ".") -> Path:
    out = Path(args.out) if args.out else Path(default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_theory(args) -> int:
    config = _resolve_config(args)
    out = _out_dir(args)
    prediction = theory.predict(config)

    summary = {"activation": prediction.activation, "q_star": prediction.q_star}
    if prediction.activation == "linear":
        summary["r_star"] = prediction.r_star
        summary["xi"] = prediction.xi
        theory.write_linear_theory_csv(
            prediction.q, prediction.variance, out / "theory_spectrum.csv"
        )
    elif prediction.activation == "relu":
        saddle = prediction.r_star
        summary["r_plus"] = saddle.r_plus
        summary["r_minus"] = saddle.r_minus
        summary["k"] = saddle.k
        theory.write_relu_theory_csv(
            prediction.q, prediction.covariance, out / "theory_cross.csv"
        )
    (out / "theory_summary.json").write_text(json.dumps(summary, indent=2) + "\n")

    for key, value in summary.items():
        print(f"{key} = {value}")
    return PASS_EXIT


def _cmd_simulate(args) -> int:
    config = _resolve_config(args)
    out = _out_dir(args)
    result = sampler.run_ensemble(config, workers=args.threads)
    sampler.write_trajectories_csv(result, out / "trajectories.csv")
    save_config(config, out / "config_used.txt")
    print(f"samples ok: {result.n_ok}/{config.num_samples}")
    if result.failures:
        for index, layer in result.failures:
            print(f"sample {index} overflowed at layer {layer}", file=sys.stderr)
    return PASS_EXIT


def _cmd_spectrum(args) -> int:
    config = _resolve_config(args)
    out = _out_dir(args)
    trajectories = sampler.read_trajectories_csv(args.input, config.fingerprint())
    result = sampler.EnsembleResult(config=config, trajectories=trajectories)
    modes = spectral.ensemble_modes(result)
    if config.activation == "linear":
        est = spectral.estimate_spectrum(modes["eps"], fingerprint=config.fingerprint())
        spectral.write_spectrum_csv(est, out / "spectrum.csv")
        print(f"modes: {len(est.q)}, samples: {est.n}")
    else:
        est = spectral.estimate_cross_spectrum(modes, fingerprint=config.fingerprint())
        spectral.write_cross_spectrum_csv(est, out / "cross_spectrum.csv")
        print(f"modes: {len(est.q)}, samples: {est.n}")
    return PASS_EXIT


def _cmd_mcmc(args) -> int:
    config = _resolve_config(args)
    out = _out_dir(args)
    chain = lattice.metropolis_run(
        config,
        args.model,
        length=args.length,
        sweeps=args.sweeps,
        burn_in=args.burn_in,
        thin=args.thin,
        seed=config.master_seed,
    )
    lattice.write_mcmc_csv(chain, out / "mcmc_samples.csv")
    lattice.write_mcmc_summary(chain, out / "mcmc_summary.json")
    for field_name, rate in sorted(chain.acceptance.items()):
        print(f"acceptance[{field_name}] = {rate:.3f}")
    print(f"recorded samples: {chain.n_samples}")
    return PASS_EXIT


def _cmd_compare(args) -> int:
    out = _out_dir(args)
    measured = spectral.read_spectrum_csv(args.measured)
    table = theory.read_theory_csv(args.theory)
    columns = [name for name in table if name != "q"]
    if len(columns) != 1:
        raise InvalidField(
            "--theory", f"expected a two-column table, found columns {list(table)}"
        )
    # the measured table keeps the constant mode, prediction tables do not;
    # align on the wavevectors both sides actually share
    idx = []
    for q in table["q"]:
        hits = np.flatnonzero(np.isclose(measured.q, q, rtol=1e-9, atol=1e-12))
        if len(hits) != 1:
            raise GridMismatch(f"wavevector {q:g} not found in {args.measured}")
        idx.append(hits[0])
    idx = np.array(idx, dtype=int)
    rows = experiments.compare(
        measured.variance[idx],
        table[columns[0]],
        measured.stderr[idx],
        tolerance=args.tolerance,
        quantity="mode_variance",
        z_window=args.z_window,
        grid=table["q"],
    )
    report = experiments.ComparisonReport(kind="compare", rows=rows, extras={})
    report.to_csv(out / "report.csv")
    report.to_json(out / "report.json")
    failed = sum(not row.passed for row in rows)
    print(f"{len(rows) - failed}/{len(rows)} comparisons passed")
    return PASS_EXIT if report.verdict == "pass" else FAIL_EXIT


def _cmd_run(args) -> int:
    out = args.out or f"runs/{args.kind}"
    sweep = (
        tuple(float(v) for v in args.sweep.split(",")) if args.sweep else None
    )
    # without --config/--set, start from the kind's documented defaults so
    # that --seed alone does not discard them
    base = _resolve_config(args) if (args.config or args.overrides) else None
    if base is None and args.seed is not None:
        base = experiments.make_plan(args.kind, out).base.replace(
            master_seed=args.seed
        )
    plan = experiments.make_plan(
        args.kind,
        out,
        base=base,
        sweep=sweep,
        workers=args.threads,
    )
    report = experiments.run_experiment(plan)
    for row in report.rows:
        state = "pass" if row.passed else "FAIL"
        print(f"[{state}] sw2={row.sweep_value:g} {row.quantity}")
    print(f"verdict: {report.verdict} ({out})")
    return PASS_EXIT if report.verdict == "pass" else FAIL_EXIT


def _read_xy(path) -> tuple:
    table = theory.read_theory_csv(path)
    columns = [name for name in table if name != "q"]
    return table["q"], table[columns[0]]


def _cmd_plot(args) -> int:
    out = _out_dir(args)
    series = []
    x, y = _read_xy(args.input)
    series.append(plotting.PlotSeries("measured", np.asarray(x), np.asarray(y)))
    if args.overlay:
        ox, oy = _read_xy(args.overlay)
        series.append(
            plotting.PlotSeries(
                "theory", np.asarray(ox), np.asarray(oy), color="black", dash="6,3"
            )
        )
    axes = plotting.AxesSpec(
        title=args.title,
        xlabel=args.xlabel,
        ylabel=args.ylabel,
        xscale="log" if args.logx else "linear",
        yscale="log" if args.logy else "linear",
    )
    target = out / args.name
    plotting.emit_plot(series, axes, target)
    print(f"wrote {target}")
    return PASS_EXIT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netlattice",
        description="Simulate deep random network ensembles and check them "
        "against ring-lattice predictions.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="write closed-form prediction tables")
    _add_common(p)
    p.set_defaults(handler=_cmd_theory)

    p = sub.add_parser("simulate", help="sample an ensemble of trajectories")
    _add_common(p)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("spectrum", help="estimate mode statistics from a trajectory dump")
    _add_common(p)
    p.add_argument("--input", required=True, metavar="CSV", help="trajectories.csv to analyse")
    p.set_defaults(handler=_cmd_spectrum)

    p = sub.add_parser("mcmc", help="run a Metropolis chain on the ring model")
    _add_common(p)
    p.add_argument("--model", default="linear_quadratic", choices=lattice.MODELS)
    p.add_argument("--length", type=int, default=64, help="ring sites (default 64)")
    p.add_argument("--sweeps", type=int, default=400_000)
    p.add_argument("--burn-in", type=int, default=10_000, dest="burn_in")
    p.add_argument("--thin", type=int, default=10)
    p.set_defaults(handler=_cmd_mcmc)

    p = sub.add_parser("compare", help="compare a measured spectrum against a prediction table")
    _add_common(p)
    p.add_argument("--measured", required=True, metavar="CSV")
    p.add_argument("--theory", required=True, metavar="CSV")
    p.add_argument("--tolerance", type=float, default=0.0, help="relative tolerance")
    p.add_argument("--z-window", type=float, default=4.0, dest="z_window")
    p.set_defaults(handler=_cmd_compare)

    p = sub.add_parser("run", help="execute a named experiment end to end")
    _add_common(p)
    p.add_argument("--kind", required=True, choices=experiments.KINDS)
    p.add_argument(
        "--sweep", metavar="V1,V2,...", help="override the weight-variance sweep"
    )
    p.set_defaults(handler=_cmd_run)

    p = sub.add_parser("plot", help="render a two-column CSV as an SVG chart")
    _add_common(p)
    p.add_argument("--input", required=True, metavar="CSV")
    p.add_argument("--overlay", metavar="CSV", help="second table drawn dashed black")
    p.add_argument("--name", default="plot.svg", help="output file name")
    p.add_argument("--title", default="")
    p.add_argument("--xlabel", default="q")
    p.add_argument("--ylabel", default="value")
    p.add_argument("--logx", action="store_true")
    p.add_argument("--logy", action="store_true")
    p.set_defaults(handler=_cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except NetLatticeError as err:
        print(f"error: {err}", file=sys.stderr)
        return ERROR_EXIT
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return ERROR_EXIT


if __name__ == "__main__":
    sys.exit(main())
