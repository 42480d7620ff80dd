"""``surgerisk`` command line. Exit status: 0 ok, 2 bad input, 3 numerical failure."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..econometrics import RankDeficientError
from ..surge_sim import CFLError, MeowField, SimConfig, SimulationError, group_moms, run_storm_meow
from .config import OUTPUT_ENV, PipelineConfig
from .formats import (Diagnostic, ValidationError, read_basin, read_field, read_storms, write_diagnostics,
                      write_field)
from .pipeline import STAGES, PipelineError, run_pipeline

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
NUMERICAL = (SimulationError, CFLError, RankDeficientError, np.linalg.LinAlgError, FloatingPointError)


def _common(p):
    p.add_argument("--config", help="pipeline JSON config")
    p.add_argument("--output-dir", help=f"output directory (env {OUTPUT_ENV} takes precedence)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threshold-ft", type=float, help="surge threshold for the headline tables")
    p.add_argument("--category", type=int, choices=range(1, 6))
    p.add_argument("--tide", choices=("high", "mean"))
    p.add_argument("--comparator", choices=("ge", "gt"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="surgerisk", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run each storm over a basin and write MEOW files")
    p.add_argument("--basin", required=True)
    p.add_argument("--storms", required=True)
    p.add_argument("--duration-h", type=float, default=24.0)
    p.add_argument("--output-dir", default="meow")

    p = sub.add_parser("mom", help="reduce MEOW files to per-category/tide MOM files")
    p.add_argument("--basin", required=True)
    p.add_argument("meows", nargs="+")
    p.add_argument("--output-dir", default="mom")

    for name, text in (("classify", "zone flags from surge, SFHA and SLR layers"),
                       ("exposure", "classification plus Tables 1-4"),
                       ("regress", "classification plus price-to-rent trend regressions"),
                       ("pipeline", "every stage")):
        _common(sub.add_parser(name, help=text))

    p = sub.add_parser("synth", help="write a synthetic input bundle and its config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", choices=("small", "medium"), default="small")
    p.add_argument("--output-dir", default="synth")
    return ap


def config_from_args(args) -> PipelineConfig:
    over = dict(output_dir=args.output_dir, seed=args.seed, category=args.category,
                tide=args.tide, comparator=args.comparator)
    cfg = PipelineConfig.from_json(args.config) if args.config else PipelineConfig()
    if args.threshold_ft is not None:
        t = float(args.threshold_ft)
        over["thresholds"] = tuple(sorted(set(cfg.thresholds) | {t}))
        over["primary_threshold_ft"] = t
    return cfg.with_overrides(**over)


def cmd_simulate(args):
    basin = read_basin(args.basin)
    res = read_storms(args.storms)
    res.check()
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    sim = SimConfig(duration_h=args.duration_h)
    for storm in res.records:
        meow = run_storm_meow(basin, storm, sim)
        write_field(out / f"{basin.basin_id}_{storm.storm_id}.meow", meow, basin)
    write_diagnostics(out / "diagnostics.jsonl", res.diagnostics)
    print(f"{len(res.records)} MEOW files in {out}")


def cmd_mom(args):
    basin = read_basin(args.basin)
    meows = []
    for path in args.meows:
        fld = read_field(path)
        if not isinstance(fld, MeowField):
            raise ValidationError(f"{path}: expected a MEOW field, found a MOM")
        meows.append(fld)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for (cat, tide_ft), mom in group_moms(meows).items():
        write_field(out / f"{basin.basin_id}_cat{cat}_{mom.tide}.mom", mom, basin)
        print(f"cat {cat} {mom.tide} tide: {len(mom.members)} storms")


def cmd_stages(args):
    cfg = config_from_args(args)
    state = run_pipeline(cfg, STAGES[args.command])
    print(json.dumps({"output_dir": str(state.out), "outputs": len(state.outputs),
                      "unavailable": sorted(set(state.unavailable))}))


def cmd_synth(args):
    from .synth import synth_generate

    bundle = synth_generate(args.seed, args.scale)
    print(bundle.write(args.output_dir))


COMMANDS = {"simulate": cmd_simulate, "mom": cmd_mom, "synth": cmd_synth}


def exit_code(exc) -> int:
    cause = exc.cause if isinstance(exc, PipelineError) else exc
    return EXIT_NUMERICAL if isinstance(cause, NUMERICAL) else EXIT_INVALID


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS.get(args.command, cmd_stages)(args)
    except (PipelineError, ValidationError, ValueError, OSError, KeyError, *NUMERICAL) as exc:
        code = exit_code(exc)
        stage = exc.stage if isinstance(exc, PipelineError) else args.command
        print(Diagnostic("", 0, str(exc), "fatal", stage).to_json(), file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
