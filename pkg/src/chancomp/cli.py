"""Command-line entry point wiring all modules.

Subcommands: train, compile, decompose-channel, bench, bound, build-net.
Exit codes: 0 completed (including reported compile failures), 1 usage or
configuration error, 2 I/O error.  Every artifact embeds the effective
configuration; see FORMATS.md for the field-by-field file formats.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

from .channel import AffineChannel, from_kraus, is_cptp
from .config import Config, ConfigError
from .decomposer import decompose_channel, length_bound, t_count_lower_bound
from .gates import GateSequence, evaluate, sequence_from_tokens, sequence_to_tokens, \
    t_count
from .linalg import fidelity_distance

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2


def _parse_overrides(pairs):
    overrides = []
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        overrides.append((key.strip(), value.strip()))
    return overrides


def _config_from_args(args) -> Config:
    return Config(
        file=getattr(args, "config", None),
        overrides=_parse_overrides(getattr(args, "set", None)),
        preset=getattr(args, "preset", None),
    )


def _write_csv(path: Path, config: Config, fieldnames, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for line in config.echo_lines():
            fh.write(line + "\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _read_matrix_file(path) -> np.ndarray:
    """2x2 complex unitary from 8 floats (row-major re, im interleaved)."""
    values = _read_floats(path)
    if len(values) != 8:
        raise ValueError(f"expected 8 floats (re, im per entry), got {len(values)}")
    flat = np.array(values[0::2]) + 1j * np.array(values[1::2])
    return flat.reshape(2, 2)


def _read_floats(path):
    text = Path(path).read_text()
    values = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0]
        values.extend(float(tok) for tok in line.split())
    return values


def _read_transfer_file(path) -> AffineChannel:
    values = _read_floats(path)
    if len(values) != 12:
        raise ValueError(f"expected 12 floats (row-major T then t), got {len(values)}")
    return AffineChannel.from_flat(values)


def _read_kraus_file(path):
    values = _read_floats(path)
    if not values or len(values) % 8 != 0:
        raise ValueError("expected a multiple of 8 floats (one 2x2 operator per 8)")
    ops = []
    for lo in range(0, len(values), 8):
        chunk = values[lo : lo + 8]
        ops.append((np.array(chunk[0::2]) + 1j * np.array(chunk[1::2])).reshape(2, 2))
    return ops


def cmd_train(args) -> int:
    config = _config_from_args(args)
    settings = config.train_settings()
    out_dir = Path(config["io.out_dir"]) / "train"
    from .ppo.agent import train

    if settings.normalization == "batch":
        print(f"network: {len(settings.hidden)} hidden layers "
              f"{'x'.join(str(h) for h in settings.hidden)} with batch normalization")
    else:
        print(f"network: {len(settings.hidden)} hidden layers "
              f"{'x'.join(str(h) for h in settings.hidden)}")
    model, log_path, ckpt_path = train(settings, out_dir, resume_from=args.resume)
    print(f"log: {log_path}")
    print(f"checkpoint: {ckpt_path}")
    return EXIT_OK


def _load_target(args) -> np.ndarray:
    if args.tokens is not None:
        return evaluate(sequence_from_tokens(args.tokens))
    return _read_matrix_file(args.matrix_file)


def cmd_compile(args) -> int:
    config = _config_from_args(args)
    target = _load_target(args)
    eps_t = config["environment.tolerance"]

    t0 = time.perf_counter()
    if args.method == "sk":
        from .sk import load_or_build_net, sk_compile

        net = load_or_build_net(config["sk.depth"], config["io.cache_dir"])
        result = sk_compile(net, target, config["sk.level"])
        seq, dist = result.sequence, result.achieved_distance
    else:
        from .ppo.agent import compile_target, load_checkpoint

        if args.checkpoint is None or not Path(args.checkpoint).exists():
            raise FileNotFoundError(
                f"ppo method needs an existing checkpoint (got {args.checkpoint})"
            )
        model = load_checkpoint(args.checkpoint)
        seq, dist, _ = compile_target(
            model, target, tolerance=eps_t,
            max_steps=config["environment.max_steps"],
            retries=config["bench.retries"],
            rng=np.random.default_rng(config["seed"]),
        )
    wall_ms = (time.perf_counter() - t0) * 1e3

    success = dist < eps_t
    print(f"sequence: {sequence_to_tokens(seq)}")
    print(f"distance: {dist:.6e}")
    print(f"t_count: {t_count(seq)}")
    print(f"length: {len(seq)}")
    print(f"wall_ms: {wall_ms:.3f}")
    print(f"success: {str(success).lower()}")
    if args.out is not None:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w") as fh:
            for line in config.echo_lines():
                fh.write(line + "\n")
            fh.write(f"sequence = {sequence_to_tokens(seq)}\n")
            fh.write(f"distance = {dist:.17g}\n")
            fh.write(f"t_count = {t_count(seq)}\n")
            fh.write(f"success = {str(success).lower()}\n")
    return EXIT_OK


def write_plan_file(plan, config: Config, path) -> None:
    from .decomposer import plan_record_lines

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for line in config.echo_lines():
            fh.write(line + "\n")
        for line in plan_record_lines(plan):
            fh.write(line + "\n")


def cmd_decompose_channel(args) -> int:
    config = _config_from_args(args)
    if args.kraus_file is not None:
        channel = from_kraus(_read_kraus_file(args.kraus_file))
    else:
        channel = _read_transfer_file(args.transfer_file)
    check = is_cptp(channel)
    if not check.ok:
        print(f"input is not CPTP: Choi minimum eigenvalue {check.min_eigenvalue:.6e}",
              file=sys.stderr)
        return EXIT_USAGE
    epsilon = args.epsilon if args.epsilon is not None else config["decomposer.epsilon"]
    plan = decompose_channel(channel, epsilon)
    out = Path(args.out) if args.out else Path(config["io.out_dir"]) / "plan.txt"
    write_plan_file(plan, config, out)
    print(f"plan: {out}")
    print(f"elementary_count: {len(plan.elementary_ids)} (bound {length_bound(epsilon)})")
    print(f"certified_error: {plan.certified_error:.6e} (epsilon {epsilon})")
    print(f"orientation_reversing: {str(plan.orientation_reversing).lower()}")
    if args.compile_final and not plan.orientation_reversing:
        from .linalg import bloch_to_su2
        from .sk import load_or_build_net, sk_compile

        net = load_or_build_net(config["sk.depth"], config["io.cache_dir"])
        unitary = bloch_to_su2(plan.final_map)
        result = sk_compile(net, unitary, config["sk.level"])
        print(f"final_map_sequence: {sequence_to_tokens(result.sequence)}")
        print(f"final_map_distance: {result.achieved_distance:.6e}")
    return EXIT_OK


def cmd_bench(args) -> int:
    config = _config_from_args(args)
    from .bench import (PPOCompilerAdapter, SKCompilerAdapter, histogram,
                        make_dataset, run_benchmark, save_dataset, summarize)

    compilers = []
    if args.sk:
        from .sk import load_or_build_net

        net = load_or_build_net(config["sk.depth"], config["io.cache_dir"])
        compilers.append(SKCompilerAdapter(net, config["sk.level"]))
    for ckpt in args.ppo_checkpoint or ():
        from .ppo.agent import load_checkpoint

        model = load_checkpoint(ckpt)
        compilers.append(PPOCompilerAdapter(
            model, tolerance=config["bench.eps_t"],
            max_steps=config["environment.max_steps"],
            retries=config["bench.retries"], retry_seed=config["seed"],
        ))
    if not compilers:
        print("no compilers selected: pass --sk and/or --ppo-checkpoint", file=sys.stderr)
        return EXIT_USAGE

    dataset = make_dataset(
        config["bench.count"], config["bench.min_len"], config["bench.max_len"],
        config["bench.seed"],
    )
    out_dir = Path(config["io.out_dir"]) / "bench"
    save_dataset(dataset, out_dir / "dataset.txt")
    records = run_benchmark(dataset, compilers, config["bench.eps_t"],
                            workers=config["workers"])
    _write_csv(
        out_dir / "records.csv", config,
        ["target_index", "compiler", "achieved_distance", "sequence_length",
         "t_count", "wall_time_ms", "success"],
        [{
            "target_index": r.target_index,
            "compiler": r.compiler,
            "achieved_distance": f"{r.achieved_distance:.12g}",
            "sequence_length": r.sequence_length,
            "t_count": r.t_count,
            "wall_time_ms": f"{r.wall_time_ms:.3f}",
            "success": int(r.success),
        } for r in records],
    )
    summary = summarize(records)
    _write_csv(
        out_dir / "summary.csv", config,
        list(summary[0].keys()),
        [{k: (f"{v:.9g}" if isinstance(v, float) else v) for k, v in row.items()}
         for row in summary],
    )
    hist = histogram(records)
    _write_csv(out_dir / "histogram.csv", config, ["compiler", "bin_left", "count"], hist)
    for row in summary:
        print(f"{row['compiler']}: success {row['success_rate']:.3f}, "
              f"mean distance {row['mean_distance']:.4e}, "
              f"mean T proportion {row['mean_t_proportion']:.3f}")
    print(f"artifacts: {out_dir}")
    return EXIT_OK


def cmd_bound(args) -> int:
    value = t_count_lower_bound(args.dim, args.group_order, args.epsilon)
    print(f"dim = {args.dim}, group_order = {args.group_order}, epsilon = {args.epsilon}")
    print(f"t_count_lower_bound = {value:.6f}")
    return EXIT_OK


def cmd_build_net(args) -> int:
    config = _config_from_args(args)
    from .sk import load_or_build_net

    depth = args.depth if args.depth is not None else config["sk.depth"]
    t0 = time.perf_counter()
    net = load_or_build_net(depth, config["io.cache_dir"])
    print(f"net depth {depth}: {len(net)} entries "
          f"({time.perf_counter() - t0:.2f}s, cache {config['io.cache_dir']})")
    return EXIT_OK


def _add_config_args(parser):
    parser.add_argument("--config", help="config file of 'key = value' lines")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    parser.add_argument("--preset", choices=["smoke", "paper"],
                        help="named configuration preset")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chancomp",
        description="Single-qubit channel decomposition and braid+T compilation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the PPO compiler")
    _add_config_args(p)
    p.add_argument("--resume", help="checkpoint to resume from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compile", help="compile a unitary to a gate sequence")
    _add_config_args(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--tokens", help="target as sequence tokens, e.g. 'B12 T B23'")
    src.add_argument("--matrix-file", help="target as 8 floats (re,im row-major)")
    p.add_argument("--method", choices=["ppo", "sk"], required=True)
    p.add_argument("--checkpoint", help="policy checkpoint (ppo method)")
    p.add_argument("--out", help="also write the result to this file")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("decompose-channel", help="decompose a channel into a plan")
    _add_config_args(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--kraus-file", help="Kraus operators, 8 floats per operator")
    src.add_argument("--transfer-file", help="12 floats: row-major T then t")
    p.add_argument("--epsilon", type=float, help="accuracy (default decomposer.epsilon)")
    p.add_argument("--out", help="plan file path")
    p.add_argument("--compile-final", action="store_true",
                   help="also compile the final map with SK when orientation is +1")
    p.set_defaults(func=cmd_decompose_channel)

    p = sub.add_parser("bench", help="run the benchmark harness")
    _add_config_args(p)
    p.add_argument("--sk", action="store_true", help="include the SK compiler")
    p.add_argument("--ppo-checkpoint", action="append",
                   help="include a PPO compiler from this checkpoint (repeatable)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("bound", help="report the indispensable-gate lower bound")
    p.add_argument("dim", type=int)
    p.add_argument("group_order", type=int)
    p.add_argument("epsilon", type=float)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("build-net", help="build and cache an epsilon-net")
    _add_config_args(p)
    p.add_argument("--depth", type=int, help="net depth (default sk.depth)")
    p.set_defaults(func=cmd_build_net)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FileNotFoundError) as exc:
        if isinstance(exc, FileNotFoundError):
            print(f"i/o error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
