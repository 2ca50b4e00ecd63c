"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
#!python

import argparse
import csv
import logging
import os
import sys
from typing import Dict, List, Optional

import numpy as np
import torch
from tabulate import tabulate

from app import App
from channel.entity import ChannelSample
from channel.measurement import SPLITS, observe_sample
from channel.model import generate_dataset
from channel.storage import DatasetReader, DatasetWriter, split_path
from common.errors import DivergenceError, ManifestError, VrNetError
from common.io import atomic_write
from common.seed import derive_seed
from config import Config, ConfigError
from evaluation.acceptance import (
    AcceptanceError,
    AcceptanceReport,
    AcceptanceTargets,
    check_accuracy,
    check_loss_trend,
    check_pruning,
    check_sweep_trends,
)
from evaluation.baselines import Method, NetworkMethod, ls_blind_method, ls_oracle_method
from evaluation.entity import EvalResult
from evaluation.metrics import nmse, sdr, to_db
from evaluation.plot import plot_result
from evaluation.sweep import sweep_pilots, sweep_snr
from network.vrnet import VrNet
from training.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from training.pruning import count_params
from training.trainer import EpochRecord, PilotBatches, Trainer, TrainingLog

logger = logging.getLogger("vrnet")

NETWORK_METHODS = ["dugc", "mdisr"]
BASELINES: Dict[str, Method] = {"ls_oracle": ls_oracle_method, "ls": ls_blind_method}

LOG_FORMAT = "%(asctime)s %(levelname)s %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


class UsageError(VrNetError):
    prefix = "Usage error"


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def build_model(config: Config) -> VrNet:
    torch.manual_seed(config.train.seed)
    return VrNet(config.architecture)


def restore_model(checkpoint: Checkpoint) -> VrNet:
    model = build_model(Config.from_dict(checkpoint.config))
    model.load_state_dict(checkpoint.state)
    if checkpoint.mask is not None:
        checkpoint.mask.apply(model)

    return model.eval()


class VrNetCli:
    def __init__(self) -> None:
        self.parser = self._build_parser()

    def run(self, argv: Optional[List[str]] = None) -> int:
        args = self.parser.parse_args(argv)
        if args.command is None:
            raise UsageError("No command given, see --help.")

        logging.basicConfig(format=LOG_FORMAT, datefmt=LOG_DATE_FORMAT, level=logging.DEBUG if args.verbose else logging.INFO)

        if not App.on_notify:
            App.on_notify.append(print_notification)

        config = App.configure(Config.load(args.config) if args.config else Config())
        logger.debug(f"vrnet version {App.version}, config {config.hash[:12]}")

        return getattr(self, f"cmd_{args.command}")(args, config) or 0

    def cmd_gen(self, args, config: Config) -> int:
        data_dir = args.out or os.path.join(config.output_root, "data")
        os.makedirs(data_dir, exist_ok=True)
        writer = DatasetWriter(config.array)

        for index, split in enumerate(SPLITS):
            if (count := config.dataset[split]) == 0:
                App.notify(f"Skipping empty split '{split}'")
                continue

            seed = derive_seed(config.seed, index)
            samples = generate_dataset(config.array, count, seed)
            path = split_path(data_dir, split)
            manifest = writer.write_channels(path, split, samples, seed, config.data_hash)
            writer.write_observations(path, manifest, samples, config.pilot)
            App.notify(f"{split}: {count} records, checksum {manifest.checksum[:16]}")

    def cmd_train(self, args, config: Config) -> int:
        config = self._training_config(config, args.variant, args.epochs)
        out = args.out or os.path.join(config.output_root, f"{config.architecture.variant}.npz")
        self._train(config, args.data, out, args.log, args.resume)

    def cmd_prune(self, args, config: Config) -> int:
        out = args.out or f"{os.path.splitext(args.checkpoint)[0]}.pruned.npz"
        self._prune(args.checkpoint, args.data, args.rho, args.epochs, out)

    def cmd_eval(self, args, config: Config) -> int:
        evaluation = config.evaluation
        models = dict(self._parse_model_spec(spec) for spec in args.model or [])

        methods: Dict[str, Method] = {}
        skipped = []
        for name in evaluation.methods:
            if name in BASELINES:
                methods[name] = BASELINES[name]
            elif name in models:
                checkpoint = load_checkpoint(models[name])
                if checkpoint.data_hash != config.data_hash:
                    raise ManifestError(f"Model '{models[name]}' was trained on differently generated data.")
                methods[name] = NetworkMethod(restore_model(checkpoint))
            else:
                skipped.append(name)

        if skipped:
            logger.warning(f"Skipping methods without a model or implementation: {', '.join(skipped)}")
        if not methods:
            raise UsageError("No method left to evaluate.")

        axes = ["snr", "pilots"] if args.axis == "both" else [args.axis]
        if "snr" in axes and not evaluation.snr_db:
            raise UsageError("The SNR sweep list is empty.")
        if "pilots" in axes and not evaluation.pilots:
            raise UsageError("The pilot sweep list is empty.")

        samples = self._read_split(config, args.data, args.split)
        if evaluation.samples is not None:
            samples = samples[: evaluation.samples]

        results_dir = args.out or os.path.join(config.output_root, "results")
        os.makedirs(results_dir, exist_ok=True)

        for axis in axes:
            if axis == "snr":
                result = sweep_snr(
                    methods,
                    config.array,
                    samples,
                    evaluation.snr_db,
                    config.pilot,
                    evaluation.sweep_seed,
                    evaluation.batch_size,
                    split=args.split,
                )
            else:
                result = sweep_pilots(
                    methods,
                    config.array,
                    samples,
                    evaluation.pilots,
                    evaluation.pilot_snr_db,
                    config.pilot,
                    evaluation.sweep_seed,
                    evaluation.batch_size,
                    split=args.split,
                )

            path = os.path.join(results_dir, f"{axis}.csv")
            result.to_csv(path, config.hash, config.seed)
            App.notify(f"{result}\nResults written to '{path}'")

    def cmd_accept(self, args, config: Config) -> int:
        root = args.out or os.path.join(config.output_root, "acceptance")
        data_dir = os.path.join(root, "data")
        evaluation = config.evaluation
        targets = AcceptanceTargets(snr_db=config.pilot.snr_db)

        self.cmd_gen(argparse.Namespace(out=data_dir), config)

        dense = config.replace(train={"prune_start_epoch": None})
        dugc_path = os.path.join(root, "dugc.npz")
        mdisr_path = os.path.join(root, "mdisr.npz")
        pruned_path = os.path.join(root, "dugc.pruned.npz")
        dugc_log = self._train(dense, data_dir, dugc_path)
        self._train(self._training_config(dense, "mdisr", None), data_dir, mdisr_path)
        self._prune(dugc_path, data_dir, config.train.prune_rho, config.train.finetune_epochs, pruned_path)

        methods: Dict[str, Method] = {
            "dugc": NetworkMethod(restore_model(load_checkpoint(dugc_path))),
            "mdisr": NetworkMethod(restore_model(load_checkpoint(mdisr_path))),
            "dugc_pruned": NetworkMethod(restore_model(load_checkpoint(pruned_path))),
            "ls_oracle": ls_oracle_method,
        }
        samples = self._read_split(config, data_dir, "test")
        if evaluation.samples is not None:
            samples = samples[: evaluation.samples]

        snr_points = sorted(set(evaluation.snr_db) | {targets.snr_db})
        snr = sweep_snr(
            methods, config.array, samples, snr_points, config.pilot, evaluation.sweep_seed, evaluation.batch_size
        )
        pilots = None
        if evaluation.pilots:
            pilots = sweep_pilots(
                {"dugc": methods["dugc"]},
                config.array,
                samples,
                evaluation.pilots,
                evaluation.pilot_snr_db,
                config.pilot,
                evaluation.sweep_seed,
                evaluation.batch_size,
            )

        snr.to_csv(os.path.join(root, "snr.csv"), config.hash, config.seed)
        if pilots is not None:
            pilots.to_csv(os.path.join(root, "pilots.csv"), config.hash, config.seed)

        report = AcceptanceReport(config.hash, config.seed)
        report.criteria.extend(check_accuracy(snr, targets))
        report.criteria.append(check_loss_trend(dugc_log, targets))
        report.criteria.extend(check_pruning(snr, snr, targets, pruned_method="dugc_pruned"))
        report.criteria.extend(check_sweep_trends(snr, pilots, targets))

        path = os.path.join(root, "acceptance.yaml")
        report.write(path)
        App.notify(f"{snr}\n{report}\nAcceptance report written to '{path}'")

        if not report.passed:
            raise AcceptanceError(", ".join(report.failed))

    def cmd_plot(self, args, config: Config) -> int:
        result = EvalResult.from_csv(args.results)
        out = args.out or f"{os.path.splitext(args.results)[0]}.svg"
        plot_result(result, out)
        App.notify(f"Plot written to '{out}'")

    def cmd_params(self, args, config: Config) -> int:
        checkpoint = load_checkpoint(args.checkpoint)
        model = restore_model(checkpoint)
        census = count_params(model, checkpoint.mask)

        if args.csv:
            writer = csv.DictWriter(sys.stdout, fieldnames=["module", "total", "nonzero", "prunable"])
            writer.writeheader()
            writer.writerows(census.as_records())
            return 0

        config = Config.from_dict(checkpoint.config)
        observations = config.pilot.observations(config.array)
        multiplies = config.architecture.layers * (observations * config.array.antennas + census.nonzero)
        App.notify(f"{census}\nEstimated multiplies per inference: T(P N_RF N + C_net) = {multiplies:,}")

    def cmd_trace(self, args, config: Config) -> int:
        checkpoint = load_checkpoint(args.checkpoint)
        config = Config.from_dict(checkpoint.config)
        model = restore_model(checkpoint)

        samples = self._read_split(config, args.data, args.split)
        if not 0 <= args.index < len(samples):
            raise UsageError(f"Sample index {args.index} is outside 0..{len(samples) - 1}.")

        sample = samples[args.index]
        snr_db = config.pilot.snr_db if args.snr is None else args.snr
        block = observe_sample(
            config.array,
            config.pilot,
            sample.h,
            args.index,
            snr_db,
            noise_key=config.evaluation.sweep_seed,
            split=args.split,
        )
        with torch.no_grad():
            output = model(
                torch.from_numpy(block.y[None]).to(torch.complex64),
                torch.from_numpy(block.A[None]).to(torch.complex64),
                trace=True,
            )

        arrays = {
            "config_hash": np.array(config.hash),
            "master_seed": np.array(config.seed),
            "h": sample.h,
            "u": sample.u,
            "y": block.y,
            "A": block.A,
            "h_hat": output.h[0].numpy(),
        }
        rows = []
        for t, (layer, iterate) in enumerate(zip(model.layers, output.iterates)):
            for name in ["h_dun", "h_gcn", "u", "z"]:
                arrays[f"layer{t}/{name}"] = getattr(iterate, name)[0].numpy()

            zeta = float(layer.graph.threshold.zeta) if layer.graph is not None else float("nan")

            rows.append(
                [
                    t + 1,
                    f"{to_db(nmse(iterate.h_dun[0].numpy(), sample.h)):.2f}",
                    f"{sdr(iterate.u[0].numpy() >= 0.5, sample.u):.4f}" if layer.graph is not None else "-",
                    f"{zeta:.4g}",
                    int(output.edges[t][0]) if t < len(output.edges) else "-",
                ]
            )

        out = args.out or os.path.join(config.output_root, f"trace_{args.split}_{args.index}.npz")
        with atomic_write(out) as stream:
            np.savez(stream, **arrays)

        table = tabulate(rows, headers=["layer", "NMSE h_DUN (dB)", "SDR", "zeta / mean energy", "edges"], tablefmt="pretty")
        App.notify(f"{table}\nFinal NMSE {to_db(nmse(arrays['h_hat'], sample.h)):.2f} dB, trace written to '{out}'")

    @staticmethod
    def _training_config(config: Config, variant: Optional[str], epochs: Optional[int]) -> Config:
        if variant == "mdisr":
            config = config.replace(architecture={"variant": "mdisr", "beta": 0.0}, train={"alpha": 0.0})
        if epochs is not None:
            prune_start = config.train.prune_start_epoch
            if prune_start is not None and prune_start > epochs:
                App.notify(f"Pruning at epoch {prune_start} disabled for a {epochs} epoch run")
                prune_start = None
            config = config.replace(train={"epochs": epochs, "prune_start_epoch": prune_start})

        return config

    def _train(
        self, config: Config, data_dir: Optional[str], out: str, log_path: Optional[str] = None, resume: bool = False
    ) -> List[EpochRecord]:
        log_path = log_path or f"{os.path.splitext(out)[0]}.csv"

        train_samples = self._read_split(config, data_dir, "train")
        model = build_model(config)
        trainer = Trainer(
            model,
            config.train,
            PilotBatches(config.array, config.pilot, train_samples, config.train.snr_db, config.train.seed),
        )

        start_epoch = 0
        if resume and os.path.exists(out):
            checkpoint = load_checkpoint(out)
            if checkpoint.config_hash != config.hash:
                raise ManifestError(f"Checkpoint '{out}' was written with a different configuration.")

            model.load_state_dict(checkpoint.state)
            trainer.restore(checkpoint.optimizer_state, checkpoint.mask)
            if checkpoint.torch_rng is not None:
                torch.set_rng_state(checkpoint.torch_rng)
            start_epoch = checkpoint.epoch
            App.notify(f"Resuming '{out}' after epoch {start_epoch}")

        def save(record: EpochRecord, trainer: Trainer) -> None:
            save_checkpoint(
                out, model, config.to_dict(), config.hash, config.data_hash, record.epoch, trainer.mask, trainer.optimizer
            )

        trainer.on_epoch_end.append(TrainingLog(log_path, config.hash, config.seed))
        trainer.on_epoch_end.append(save)
        trainer.on_prune.append(lambda mask, _: App.notify(f"Pruned {mask.total - mask.kept} of {mask.total} weights"))

        prune_at = config.train.prune_start_epoch if config.train.prunes else None
        try:
            result = trainer.run(config.train.epochs, start_epoch=start_epoch, prune_at=prune_at)
        except DivergenceError:
            snapshot = f"{os.path.splitext(out)[0]}.diverged.npz"
            save_checkpoint(snapshot, model, config.to_dict(), config.hash, config.data_hash, mask=trainer.mask)
            App.notify(f"Diagnostic snapshot written to '{snapshot}'")
            raise

        if config.train.epochs <= start_epoch:
            save_checkpoint(
                out, model, config.to_dict(), config.hash, config.data_hash, start_epoch, trainer.mask, trainer.optimizer
            )

        self._report_validation(config, data_dir, model)
        App.notify(f"Checkpoint written to '{out}'")

        return result.log

    def _prune(self, path: str, data_dir: Optional[str], rho: Optional[float], epochs: Optional[int], out: str) -> None:
        checkpoint = load_checkpoint(path)
        config = Config.from_dict(checkpoint.config)
        if rho is not None:
            config = config.replace(train={"prune_rho": rho})

        model = restore_model(checkpoint)
        samples = self._read_split(config, data_dir, "train")
        trainer = Trainer(
            model,
            config.train,
            PilotBatches(config.array, config.pilot, samples, config.train.snr_db, config.train.seed),
        )
        trainer.prune(config.train.prune_rho)
        App.notify(f"Pruned at rho={config.train.prune_rho}: sparsity {trainer.mask.sparsity:.3f}")

        epochs = config.train.finetune_epochs if epochs is None else epochs
        trainer.run(checkpoint.epoch + epochs, start_epoch=checkpoint.epoch)

        save_checkpoint(
            out,
            model,
            config.to_dict(),
            config.hash,
            config.data_hash,
            checkpoint.epoch + epochs,
            trainer.mask,
            trainer.optimizer,
        )
        self._report_validation(config, data_dir, model)
        App.notify(f"Pruned checkpoint written to '{out}'")

    def _read_split(self, config: Config, data_dir: Optional[str], split: str) -> List[ChannelSample]:
        path = split_path(data_dir or os.path.join(config.output_root, "data"), split)
        return DatasetReader(config.array).read_channels(path, config_hash=config.data_hash)

    def _report_validation(self, config: Config, data_dir: Optional[str], model: VrNet) -> None:
        if config.dataset["val"] == 0:
            return

        samples = self._read_split(config, data_dir, "val")
        result = sweep_snr(
            {str(config.architecture.variant): NetworkMethod(model)},
            config.array,
            samples,
            [config.pilot.snr_db],
            config.pilot,
            config.evaluation.sweep_seed,
            config.evaluation.batch_size,
            split="val",
        )
        row = result.rows[0]
        App.notify(f"Validation at {config.pilot.snr_db:g} dB: NMSE {row.nmse_db:.2f} dB, SDR {row.sdr:.4f}")

    @staticmethod
    def _parse_model_spec(spec: str) -> tuple:
        name, separator, path = spec.partition("=")
        if not separator or not name or not path:
            raise UsageError(f"Expected --model NAME=PATH, got '{spec}'.")

        return name, path

    @staticmethod
    def _build_parser() -> ArgumentParser:
        parser = ArgumentParser(prog="vrnet", description="Joint VR recognition and channel estimation for XL-MIMO.")
        parser.add_argument("-c", "--config", help="YAML config file (desk-scale defaults when omitted)")
        parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
        commands = parser.add_subparsers(dest="command")

        gen = commands.add_parser("gen", help="generate train/val/test datasets")
        gen.add_argument("--out", help="dataset directory")

        train = commands.add_parser("train", help="train a network, pruning per the schedule")
        train.add_argument("--data", help="dataset directory")
        train.add_argument("--out", help="checkpoint path")
        train.add_argument("--log", help="CSV training log path")
        train.add_argument("--variant", choices=NETWORK_METHODS, help="override the configured variant")
        train.add_argument("--epochs", type=int, help="override the configured epoch count")
        train.add_argument("--resume", action="store_true", help="continue from the checkpoint at --out")

        prune = commands.add_parser("prune", help="prune a checkpoint and fine-tune it")
        prune.add_argument("checkpoint")
        prune.add_argument("--data", help="dataset directory")
        prune.add_argument("--rho", type=float, help="pruning ratio")
        prune.add_argument("--epochs", type=int, help="fine-tuning epochs")
        prune.add_argument("--out", help="pruned checkpoint path")

        evaluate = commands.add_parser("eval", help="run SNR and pilot sweeps")
        evaluate.add_argument("--model", action="append", metavar="NAME=PATH", help="checkpoint for a method")
        evaluate.add_argument("--data", help="dataset directory")
        evaluate.add_argument("--split", default="test", choices=SPLITS)
        evaluate.add_argument("--axis", default="both", choices=["snr", "pilots", "both"])
        evaluate.add_argument("--out", help="results directory")

        plot = commands.add_parser("plot", help="plot a results CSV as SVG")
        plot.add_argument("results")
        plot.add_argument("--out", help="SVG path")

        params = commands.add_parser("params", help="parameter census of a checkpoint")
        params.add_argument("checkpoint")
        params.add_argument("--csv", action="store_true", help="machine-readable output")

        trace = commands.add_parser("trace", help="dump per-layer iterates for one sample")
        trace.add_argument("checkpoint")
        trace.add_argument("--data", help="dataset directory")
        trace.add_argument("--split", default="test", choices=SPLITS)
        trace.add_argument("--index", type=int, default=0)
        trace.add_argument("--snr", type=float, help="SNR in dB (configured pilot SNR when omitted)")
        trace.add_argument("--out", help="npz path")

        accept = commands.add_parser("accept", help="generate, train, prune and evaluate, then check the pass marks")
        accept.add_argument("--out", help="working directory for data, checkpoints and results")

        return parser


def print_notification(message: str) -> None:
    print("> ", end="")
    for m in message.split("\n"):
        print(m)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        return VrNetCli().run(argv)

    except (ConfigError, ManifestError, UsageError) as e:
        print(e, file=sys.stderr)
        return 1

    except (VrNetError, OSError) as e:
        print(e, file=sys.stderr)
        return 2

    except Exception:
        print("\n\n:-(\n", file=sys.stderr)
        print(sys.exc_info()[1], file=sys.stderr)

        handler = logging.FileHandler("error.log")
        handler.setFormatter(logging.Formatter(LOG_FORMAT, LOG_DATE_FORMAT))
        logger.addHandler(handler)
        logger.exception("vrnet crashed")
        logger.removeHandler(handler)
        handler.close()

        return 2


if __name__ == "__main__":
    sys.exit(main())
