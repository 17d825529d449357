"""Command line entry point: ``train``, ``sweep``, ``calibrate`` and ``report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..estimator import load_model, save_model
from ..impairments import CalibrationError, HpaModel, calibrate_drive, evm_at_drive
from .config import ConfigError, SweepConfig, from_mapping, load_config
from .pipeline import calibration_probe
from .sweep import format_report, read_results, run_sweep
from .training import generate_training_set, save_training_set, train_networks

log = logging.getLogger("ris_ofdm_ce")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML config file")
    common.add_argument("--seed", type=_u64)
    common.add_argument("--out", type=Path, default=Path("runs"), help="output directory")
    common.add_argument("--estimators", type=_str_list, help="e.g. ls_only,eelm,elm_no_std")
    common.add_argument("--snr", type=_float_list, help="SNR grid in dB, e.g. 0,10,20")
    common.add_argument("--evm", type=float, help="target EVM in percent (0 bypasses the HPA)")
    common.add_argument("--paths", type=int, help="channel taps L")
    common.add_argument("--cp", type=int, help="cyclic prefix length")
    common.add_argument("--trials", type=int, help="Monte Carlo trials per SNR point")
    common.add_argument("--train-samples", type=int, help="training set size N_d")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ris-ce", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="generate training data and fit networks")
    sp = sub.add_parser("sweep", parents=[common], help="run an NMSE-vs-SNR sweep")
    sp.add_argument("--models", type=Path, help="directory with model_*.bin (default: --out)")
    sub.add_parser("calibrate", parents=[common], help="find the HPA drive for the target EVM")
    rp = sub.add_parser("report", parents=[common], help="summarize a results CSV")
    rp.add_argument("results", nargs="?", type=Path, help="results.csv (default: OUT/results.csv)")
    return p


def config_from_args(args) -> SweepConfig:
    cfg = load_config(args.config) if args.config else SweepConfig()
    overrides = {
        "seed": args.seed,
        "estimators": args.estimators,
        "snr_grid_db": args.snr,
        "evm_target": args.evm,
        "n_paths": args.paths,
        "cp_len": args.cp,
        "n_trials": args.trials,
        "n_train": args.train_samples,
    }
    return from_mapping({k: v for k, v in overrides.items() if v is not None}, base=cfg)


def _model_path(out: Path, name: str) -> Path:
    return out / f"model_{name}.bin"


def cmd_train(cfg: SweepConfig, args) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    data = generate_training_set(cfg)
    save_training_set(args.out / "dataset.bin", data)
    nets = train_networks(cfg, data)
    for name, net in nets.items():
        save_model(_model_path(args.out, name), net)
    (args.out / "train.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    print(f"trained {', '.join(nets) or 'no networks'} on {len(data)} samples -> {args.out}")
    return 0


def _load_networks(cfg: SweepConfig, model_dir: Path):
    nets = {}
    for name in cfg.estimators:
        if name == "ls_only":
            continue
        path = _model_path(model_dir, name)
        if not path.exists():
            return None
        net = load_model(path)
        if net.n_inputs != 2 * cfg.n_subcarriers or net.n_links != cfg.n_links:
            raise ConfigError(f"{path} was trained for a different N or M")
        nets[name] = net
    return nets


def cmd_sweep(cfg: SweepConfig, args) -> int:
    nets = None
    if cfg.needs_network:
        nets = _load_networks(cfg, args.models or args.out)
        if nets is None:
            log.info("no trained models found; training in-process")
            args.out.mkdir(parents=True, exist_ok=True)
            nets = train_networks(cfg, generate_training_set(cfg))
            for name, net in nets.items():
                save_model(_model_path(args.out, name), net)
    result = run_sweep(cfg, nets, out_dir=args.out)
    print(format_report(result.rows()))
    print(f"wrote {args.out / 'results.csv'} ({result.metadata['wall_time_s']:.1f} s)")
    return 0


def cmd_calibrate(cfg: SweepConfig, args) -> int:
    if not cfg.hpa_enabled:
        print("evm_target = 0: amplifier bypassed, nothing to calibrate")
        return 0
    probe = calibration_probe(cfg)
    g = calibrate_drive(HpaModel(), cfg.evm_target, probe)
    achieved = evm_at_drive(HpaModel(), g, probe)
    print(f"target EVM {cfg.evm_target:g}%  drive scale {g:.6g}  achieved {achieved:.4f}%")
    return 0


def cmd_report(cfg: SweepConfig, args) -> int:
    path = args.results or args.out / "results.csv"
    print(format_report(read_results(path)))
    return 0


COMMANDS = {"train": cmd_train, "sweep": cmd_sweep, "calibrate": cmd_calibrate, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = config_from_args(args)
    except FileNotFoundError as exc:
        print(f"error: config file not found: {exc.filename}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg, args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CalibrationError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
