"""Ising-model cost prediction for SNN deployment configurations.

Every command writes a JSON manifest next to its outputs; ``isingdeploy replay
MANIFEST`` reruns the recorded command and reproduces the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from isingdeploy import __version__
from isingdeploy.cost import CostConstants, WeightingMode, expected_cost
from isingdeploy.deployment import (
    CapacityError,
    MachineDescription,
    build_config,
    format_network_config,
    load_network_config,
    occupancy,
)
from isingdeploy.evaluation import (
    CSV_HEADER,
    DESK_SAMPLER,
    AblationMode,
    SweepResult,
    correlations,
    desk_scale_network,
    format_samples,
    format_summary,
    reference_setup,
    run_sweep,
)
from isingdeploy.fitting import DEFAULT_DT, load_raster, write_raster, fit_model
from isingdeploy.ising import SamplerParams, read_model, read_states, sample, write_model, write_states
from isingdeploy.profiler import (
    DEFAULT_WEIGHTS,
    SynapseList,
    instantiate_synapses,
    profile,
    synth_raster_bernoulli,
    synth_raster_from_model,
)

PROG = "isingdeploy"


class UsageError(Exception):
    """Bad command-line usage; exit status 2."""


class MissingInputError(Exception):
    """An input file does not exist; exit status 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _require(path) -> str:
    if path is None or not Path(path).is_file():
        raise MissingInputError(f"input file not found: {path}")
    return str(path)


def _write(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _write_manifest(path, args, argv, inputs, seeds, outputs) -> None:
    params = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    manifest = {
        "tool": PROG,
        "version": __version__,
        "command": args.command,
        "argv": list(argv),
        "cwd": os.getcwd(),
        "params": params,
        "seeds": seeds,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
    }
    _write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _network(args):
    cfg = load_network_config(_require(args.config))
    c = cfg.cost
    defaults = CostConstants()
    values = []
    for name in ("ic", "scdc", "dc"):
        flag = getattr(args, f"cost_{name}", None)
        values.append(flag if flag is not None else c.get(name, getattr(defaults, name)))
    constants = CostConstants(*values)
    return cfg.snn, cfg.machine, constants


def _sampler(args, seed) -> SamplerParams:
    return SamplerParams(args.steps_eq, args.interval, args.count, seed)


def _weights(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--weights expects three comma-separated numbers, got {text!r}") from None
    if len(parts) != 3:
        raise UsageError(f"--weights expects three comma-separated numbers, got {text!r}")
    return parts


def _load_synapses(path, n: int) -> SynapseList:
    pre, post = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                a, b = (int(v) for v in line.split())
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed synapse line {line!r}") from None
            pre.append(a)
            post.append(b)
    return SynapseList(np.array(pre, dtype=np.int64), np.array(post, dtype=np.int64), n)


def cmd_fit(args, argv):
    raster = load_raster(_require(args.raster), args.n, args.horizon)
    model = fit_model(raster, args.dt)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_model(out, model)
    _write_manifest(f"{out}.manifest.json", args, argv, [args.raster], {}, [out])


def cmd_sample(args, argv):
    model = read_model(_require(args.model))
    states = sample(model, _sampler(args, args.seed))
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_states(out, states)
    _write_manifest(f"{out}.manifest.json", args, argv, [args.model], {"sampler": args.seed}, [out])


def cmd_cost(args, argv):
    snn, machine, constants = _network(args)
    weighting = WeightingMode.parse(args.weighting)
    inputs = [args.config]
    model = None
    if args.model is not None:
        model = read_model(_require(args.model))
        inputs.append(args.model)
        if model.n != snn.n:
            raise ValueError(f"model has {model.n} neurons, network has {snn.n}")
    if args.states is not None:
        states = read_states(_require(args.states))
        inputs.append(args.states)
    elif model is not None:
        states = sample(model, _sampler(args, args.seed))
    else:
        raise UsageError("cost needs --model or --states")
    if weighting is WeightingMode.BOLTZMANN_REWEIGHT and model is None:
        raise UsageError("boltzmann_reweight weighting needs --model")
    try:
        config = build_config(snn, machine, args.k)
    except CapacityError as exc:
        raise ValueError(f"fixed size {args.k} is infeasible: {exc}") from None
    cost = expected_cost(config, states, model, machine, snn, constants, weighting)
    slices, chips = len(config.slices), occupancy(config).chips_in_use
    if args.csv:
        report = f"k,slices,chips_in_use,weighting,predicted_cost\n{args.k},{slices},{chips},{weighting.value},{cost:.17g}\n"
    else:
        report = (
            f"predicted_cost: {cost:.17g}\nslices: {slices}\nchips_in_use: {chips}\n"
            f"weighting: {weighting.value}\nsamples: {len(states)}\n"
        )
    sys.stdout.write(report)
    out = Path(args.out)
    _write(out / "cost.txt", report)
    seeds = {"sampler": args.seed} if args.states is None else {}
    _write_manifest(out / "cost.manifest.json", args, argv, inputs, seeds, [out / "cost.txt"])


def cmd_synth(args, argv):
    out = Path(args.output)
    inputs = []
    if args.model is not None:
        model = read_model(_require(args.model))
        inputs.append(args.model)
        raster = synth_raster_from_model(model, args.bins, _sampler(args, args.seed), args.dt)
    else:
        if args.n is None or args.horizon is None:
            raise UsageError("synth needs --model, or --n and --horizon for a Bernoulli raster")
        raster = synth_raster_bernoulli(args.n, args.horizon, args.dt, args.rate, args.seed)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_raster(out, raster)
    _write_manifest(
        f"{out}.manifest.json", args, argv, inputs, {"synth": args.seed}, [out]
    )
    sys.stdout.write(f"events: {len(raster)}\nn: {raster.n}\nhorizon: {raster.horizon!r}\n")


def cmd_profile(args, argv):
    snn, machine, _ = _network(args)
    raster = load_raster(_require(args.raster), snn.n, args.horizon)
    inputs = [args.config, args.raster]
    if args.synapses is not None:
        synapses = _load_synapses(_require(args.synapses), snn.n)
        inputs.append(args.synapses)
        seeds = {}
    else:
        synapses = instantiate_synapses(snn, args.seed)
        seeds = {"synapses": args.seed}
    try:
        config = build_config(snn, machine, args.k)
    except CapacityError as exc:
        raise ValueError(f"fixed size {args.k} is infeasible: {exc}") from None
    result = profile(raster, synapses, config, machine, _weights(args.weights), args.dt)
    report = (
        "config_id,k,energy_chips,energy_packets,time_packets\n"
        f"fixed-{args.k},{args.k},{result.energy_chips:.17g},{result.energy_packets:.17g},{result.time_packets:.17g}\n"
    )
    sys.stdout.write(report)
    out = Path(args.out)
    _write(out / "profile.csv", report)
    _write_manifest(out / "profile.manifest.json", args, argv, inputs, seeds, [out / "profile.csv"])


def _run_and_write_sweep(out: Path, mode, snn, machine, model, sampler, constants, raster, synapses, weights, dt, seed, provenance):
    """Run a sweep, streaming rows to ``sweep.csv`` so an interrupt leaves a valid partial file."""
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    with open(out / "sweep.csv", "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")

        def on_row(row):
            rows.append(row)
            fh.write(row.csv() + "\n")
            fh.flush()

        try:
            result = run_sweep(
                snn, machine, model, sampler, constants, mode, raster, synapses, weights, dt, seed, on_row=on_row
            )
        except KeyboardInterrupt:
            partial = SweepResult(AblationMode(mode), rows, correlations(rows))
            _write(out / "summary.csv", format_summary(partial, {**provenance, "status": "interrupted"}))
            raise
    _write(out / "summary.csv", format_summary(result, provenance))
    _write(out / "samples.txt", format_samples(result.samples))
    return result


def _sweep_provenance(args, sampler, constants, weights, dt, extra=None):
    return {
        "seed": args.seed,
        "steps_eq": sampler.steps_eq,
        "sample_interval": sampler.sample_interval,
        "sample_count": sampler.sample_count,
        "cost_ic": constants.ic,
        "cost_scdc": constants.scdc,
        "cost_dc": constants.dc,
        "profile_weights": ",".join(repr(w) for w in weights),
        "dt": dt,
        **(extra or {}),
    }


def cmd_sweep(args, argv):
    snn, machine, constants = _network(args)
    mode = AblationMode.parse(args.mode)
    model = read_model(_require(args.model))
    raster = load_raster(_require(args.raster), snn.n, args.horizon)
    inputs = [args.config, args.model, args.raster]
    if args.synapses is not None:
        synapses = _load_synapses(_require(args.synapses), snn.n)
        inputs.append(args.synapses)
    else:
        synapses = instantiate_synapses(snn, args.seed)
    sampler = _sampler(args, args.seed)
    weights = _weights(args.weights)
    out = Path(args.out)
    result = _run_and_write_sweep(
        out, mode, snn, machine, model, sampler, constants, raster, synapses, weights, args.dt, args.seed,
        _sweep_provenance(args, sampler, constants, weights, args.dt),
    )
    _print_correlations(result)
    _write_manifest(
        out / "manifest.json", args, argv, inputs, {"master": args.seed},
        [out / "sweep.csv", out / "summary.csv", out / "samples.txt"],
    )


def _print_correlations(result: SweepResult) -> None:
    for metric, value in result.correlations.items():
        shown = "undefined" if value is None else f"{value:.6f}"
        sys.stdout.write(f"{result.mode.value} pearson({metric}) = {shown}\n")


def cmd_eval(args, argv):
    """Desk-scale end-to-end run: generate a reference raster, fit, sweep every ablation mode."""
    try:
        modes = [AblationMode.parse(m) for m in args.modes.split(",")]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    snn, machine = desk_scale_network()
    if args.chips is not None:
        machine = MachineDescription(args.chips, machine.cores_per_chip, machine.core_capacity)
    constants = CostConstants(
        *(v if v is not None else d for v, d in zip((args.cost_ic, args.cost_scdc, args.cost_dc), (0.1, 0.2, 1.0)))
    )
    out = Path(args.out)
    setup = reference_setup(snn, machine, args.seed, args.bins, args.dt)
    _write(out / "network.cfg", format_network_config(snn, machine))
    write_raster(out / "raster.txt", setup.raster)
    write_model(out / "generator_model.txt", setup.generator)
    write_model(out / "model.txt", setup.model)
    sampler = _sampler(args, args.seed)
    weights = _weights(args.weights)
    lines = ["mode,metric,pearson"]
    outputs = [out / "network.cfg", out / "raster.txt", out / "generator_model.txt", out / "model.txt"]
    for mode in modes:
        provenance = _sweep_provenance(args, sampler, constants, weights, args.dt, {"bins": args.bins})
        result = _run_and_write_sweep(
            out / mode.value, mode, snn, machine, setup.model, sampler, constants,
            setup.raster, setup.synapses, weights, args.dt, args.seed, provenance,
        )
        _print_correlations(result)
        for metric, value in result.correlations.items():
            lines.append(f"{mode.value},{metric},{'undefined' if value is None else f'{value:.17g}'}")
        outputs += [out / mode.value / name for name in ("sweep.csv", "summary.csv", "samples.txt")]
    _write(out / "eval_summary.csv", "\n".join(lines) + "\n")
    outputs.append(out / "eval_summary.csv")
    _write_manifest(out / "manifest.json", args, argv, [], {"master": args.seed}, outputs)


def cmd_replay(args, argv):
    manifest = json.loads(Path(_require(args.manifest)).read_text())
    if manifest.get("tool") != PROG or "argv" not in manifest:
        raise ValueError(f"{args.manifest} is not an {PROG} manifest")
    if manifest["argv"] and manifest["argv"][0] == "replay":
        raise ValueError("refusing to replay a replay manifest")
    os.chdir(manifest["cwd"])
    return main(manifest["argv"])


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed for all randomness (default 0)")
    common.add_argument("--config", help="network/machine config file")
    common.add_argument("--csv", action="store_true", help="machine-readable output")
    common.add_argument("--out", default=".", help="output directory (default: current directory)")

    costs = _Parser(add_help=False)
    costs.add_argument("--cost-ic", type=float, help="intra-core unit cost (default 0.1)")
    costs.add_argument("--cost-scdc", type=float, help="same-chip inter-core unit cost (default 0.2)")
    costs.add_argument("--cost-dc", type=float, help="inter-chip unit cost (default 1.0)")

    def sampler_flags(defaults: SamplerParams):
        p = _Parser(add_help=False)
        p.add_argument("--steps-eq", type=int, default=defaults.steps_eq, help="burn-in moves")
        p.add_argument("--interval", type=int, default=defaults.sample_interval, help="moves between samples")
        p.add_argument("--count", type=int, default=defaults.sample_count, help="number of samples")
        return p

    basic_sampler = sampler_flags(SamplerParams())
    desk_sampler = sampler_flags(DESK_SAMPLER)

    parser = _Parser(prog=PROG, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", parents=[common], help="fit an Ising model to a spike raster")
    p.add_argument("raster")
    p.add_argument("--n", type=int, required=True, help="neuron count")
    p.add_argument("--horizon", type=float, required=True, help="observation end time (ms)")
    p.add_argument("--dt", type=float, default=DEFAULT_DT, help="bin width (ms)")
    p.add_argument("-o", "--output", required=True, help="model file to write")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sample", parents=[common, basic_sampler], help="draw Metropolis samples from a model")
    p.add_argument("model")
    p.add_argument("-o", "--output", required=True, help="states file to write")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("cost", parents=[common, costs, basic_sampler], help="predicted cost of one fixed-size configuration")
    p.add_argument("--model", help="model file (sampled unless --states is given)")
    p.add_argument("--states", help="states file")
    p.add_argument("--k", type=int, required=True, help="fixed slice size")
    p.add_argument("--weighting", default=WeightingMode.MONTECARLO.value, choices=[m.value for m in WeightingMode])
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("sweep", parents=[common, costs, desk_sampler], help="predict and profile every fixed size")
    p.add_argument("--model", required=True)
    p.add_argument("--raster", required=True, help="reference raster for profiling")
    p.add_argument("--horizon", type=float, required=True, help="reference raster horizon (ms)")
    p.add_argument("--synapses", help="synapse file (default: instantiate from --seed)")
    p.add_argument("--mode", default=AblationMode.FULL.value, choices=[m.value for m in AblationMode])
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--weights", default=",".join(map(str, DEFAULT_WEIGHTS)), help="profiler class weights")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", parents=[common, basic_sampler], help="generate a synthetic spike raster")
    p.add_argument("-o", "--output", required=True, help="raster file to write")
    p.add_argument("--model", help="sample the raster from this model (one state per bin)")
    p.add_argument("--bins", type=int, default=1000, help="bins to draw from --model")
    p.add_argument("--n", type=int, help="neuron count (Bernoulli raster)")
    p.add_argument("--horizon", type=float, help="horizon in ms (Bernoulli raster)")
    p.add_argument("--rate", type=float, default=0.05, help="per-bin firing probability (Bernoulli raster)")
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("profile", parents=[common], help="reference profile of one fixed-size configuration")
    p.add_argument("--raster", required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--synapses", help="synapse file (default: instantiate from --seed)")
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--weights", default=",".join(map(str, DEFAULT_WEIGHTS)))
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("eval", parents=[common, costs, desk_sampler], help="desk-scale evaluation over ablation modes")
    p.add_argument("--modes", default=",".join(m.value for m in AblationMode))
    p.add_argument("--bins", type=int, default=2000, help="reference raster length in bins")
    p.add_argument("--chips", type=int, help="override machine chip count")
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--weights", default=",".join(map(str, DEFAULT_WEIGHTS)))
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        status = args.func(args, argv)
    except UsageError as exc:
        print(f"{PROG}: usage error: {exc}", file=sys.stderr)
        return 2
    except MissingInputError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print(f"{PROG}: interrupted; partial results flushed", file=sys.stderr)
        return 130
    except (ValueError, IndexError, KeyError, OSError) as exc:
        print(f"{PROG}: error: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}", file=sys.stderr)
        return 1
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
