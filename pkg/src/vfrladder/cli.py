"""Command-line entry point: ``vfrladder <subcommand> ...``.

Exit codes: 0 ok, 1 usage error, 2 data or format error, 3 internal error.
Every subcommand writing files also writes ``<first output>.manifest.json``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, metrics, pipeline, synthetic, tables
from .domain import ConfigError, default_config, load_config
from .forest import Hyperparams, cross_validate, design_matrix
from .models import ForestOracle, load_model, train_models
from .video_io import VideoFormatError, FrameY


class UsageError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.cause = exc


DATA_ERRORS = (ValueError, OSError, KeyError, VideoFormatError, ConfigError, tables.TableError,
               metrics.CurveError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write(path, data) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode("utf-8") if isinstance(data, str) else data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(writer, payload) -> str:
    import io
    buf = io.StringIO()
    writer(buf, payload)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


class Run:
    """Collects inputs, outputs and stage timings for the manifest."""

    def __init__(self, args, config):
        self.args = args
        self.config = config
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self.stages: dict[str, float] = {}

    def input(self, path):
        if path is not None:
            self.inputs[str(path)] = sha256_file(path)
        return path

    def output(self, path, text):
        atomic_write(path, text)
        self.outputs[str(path)] = sha256_file(path)

    def stage(self, name, fn, *a, **kw):
        t0 = time.perf_counter()
        try:
            return fn(*a, **kw)
        except DATA_ERRORS as exc:
            raise StageError(name, exc) from exc
        finally:
            self.stages[name] = round(time.perf_counter() - t0, 6)

    def manifest(self) -> dict:
        args = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(self.args).items()
                if k not in ("func",)}
        return {"tool": "vfrladder", "version": __version__, "command": self.args.command,
                "arguments": args, "config": self.config.to_dict() if self.config else None,
                "inputs": self.inputs, "outputs": self.outputs, "stage_wall_time_s": self.stages}

    def write_manifest(self):
        if not self.outputs:
            return
        first = next(iter(self.outputs))
        atomic_write(f"{first}.manifest.json", _json_text(self.manifest()))


def _config(args):
    config = load_config(args.config) if args.config else default_config()
    jnd = getattr(args, "jnd", None)
    vt = getattr(args, "vmaf_threshold", None)
    if jnd is not None or vt is not None:
        jnd = config.jnd_vJ if jnd is None else float(jnd)
        config = replace(config, jnd_vJ=jnd, vmaf_threshold_vT=100.0 - jnd if vt is None else float(vt))
    return config


def _threads(args):
    return args.threads if args.threads else (os.cpu_count() or 1)


def _oracle(args, run):
    if args.oracle:
        params = synthetic.SurfaceParams.load(run.input(args.params)) if args.params else synthetic.SurfaceParams()
        return synthetic.SyntheticOracle(params)
    if not (args.vmaf_model and args.speed_model):
        raise UsageError("either --oracle or both --vmaf-model and --speed-model are required")
    return ForestOracle(load_model(run.input(args.vmaf_model)), load_model(run.input(args.speed_model)))


def _raw(args):
    if not args.raw:
        return None
    try:
        w, h = (int(x) for x in args.raw.lower().split("x"))
    except ValueError:
        raise UsageError(f"--raw expects WIDTHxHEIGHT, got {args.raw!r}") from None
    if args.fps is None:
        raise UsageError("--raw requires --fps")
    return {"width": w, "height": h, "fps": args.fps, "bitdepth": args.bitdepth, "chroma": args.chroma}


def _features_from_input(args, run):
    path = Path(args.input)
    run.input(path)
    if path.suffix.lower() == ".csv":
        return run.stage("analyze", tables.read_features, path)
    return run.stage("analyze", pipeline.analyze_video, path, args.segment_duration, _raw(args),
                     _threads(args))


# subcommands -----------------------------------------------------------------

def cmd_analyze(args):
    run = Run(args, None)
    rows = _features_from_input(args, run)
    run.output(args.out, _csv_text(tables.write_features, rows))
    return run


def cmd_synth(args):
    config = _config(args)
    run = Run(args, config)
    params = synthetic.SurfaceParams.load(run.input(args.params)) if args.params else synthetic.SurfaceParams()
    if args.ladder:
        ladders = run.stage("read", tables.read_ladders, run.input(args.ladder))
        feats = {r.segment_id: r.features for r in run.stage("read", tables.read_features, run.input(args.features))}

        def realize():
            out = []
            for k, (seg, entries) in enumerate(ladders):
                if seg not in feats:
                    raise ValueError(f"segment {seg} missing from {args.features}")
                rng = synthetic.segment_rng(args.seed, k) if args.noise else None
                out.extend(synthetic.realize(params, seg, feats[seg],
                                             [(e.representation, e.framerate, e.preset) for e in entries], rng))
            return out
        records = run.stage("realize", realize)
    else:
        if args.segments is None:
            raise UsageError("synth needs --segments, or --ladder with --features")
        records = run.stage("synth", synthetic.generate_dataset, params, args.segments, config, args.seed)
    run.output(args.out, _csv_text(tables.write_records, records))
    if args.features_out and not args.ladder:
        seen = {}
        for r in records:
            seen.setdefault(r.segment_id, r.features)
        frames = int(round(params.segment_duration_s * params.source_fps))
        rows = [tables.FeatureRow(s, f, params.source_fps, frames) for s, f in seen.items()]
        run.output(args.features_out, _csv_text(tables.write_features, rows))
    return run


def cmd_train(args):
    config = _config(args)
    run = Run(args, config)
    records = run.stage("read", tables.read_records, run.input(args.data))
    hp = Hyperparams(n_estimators=args.trees, max_depth=args.depth, min_samples_split=args.min_split,
                     min_samples_leaf=args.min_leaf, features_per_split=args.features_per_split, seed=args.seed)
    vm, sm = run.stage("train", train_models, records, hp, args.per_preset, _threads(args))
    out = Path(args.out_dir)
    run.output(out / "vmaf_model.json", json.dumps(vm.to_dict(), separators=(",", ":")))
    run.output(out / "speed_model.json", json.dumps(sm.to_dict(), separators=(",", ":")))
    if args.cv:
        X = design_matrix(records)
        groups = [r.segment_id for r in records]
        report = {}
        for name, y in (("vmaf", [r.measured_vmaf for r in records]), ("speed", [r.measured_speed for r in records])):
            res = run.stage(f"cv_{name}", cross_validate, X, np.asarray(y), groups, hp, args.cv,
                            args.cv_group, threads=_threads(args))
            report[name] = {"r2": res.r2, "mae": res.mae, "mean_r2": res.mean_r2, "mean_mae": res.mean_mae}
        run.output(out / "cv_report.json", _json_text(report))
    return run


def cmd_ladder(args):
    config = _config(args)
    run = Run(args, config)
    oracle = _oracle(args, run)
    rows = run.stage("read", tables.read_features, run.input(args.features))
    ladders = run.stage("ladder", pipeline.build_ladders, rows, oracle, config, args.mode, args.bruteforce)
    run.output(args.out, _csv_text(tables.write_ladders, ladders))
    return run


def cmd_prune(args):
    config = _config(args)
    run = Run(args, config)
    ladders = run.stage("read", tables.read_ladders, run.input(args.ladder))
    pruned = run.stage("prune", pipeline.prune_ladders, ladders, config.jnd_vJ, config.vmaf_threshold_vT)
    run.output(args.out, _csv_text(tables.write_ladders, pruned))
    return run


def _rd_plot(opt, ref, directory, run):
    lines = ["segment_id,scheme,height,bitrate,vmaf,psnr"]
    for scheme, recs in (("optimized", opt), ("reference", ref)):
        for r in recs:
            b = r.measured_bitrate if r.measured_bitrate is not None else r.representation.target_bitrate
            lines.append(",".join([r.segment_id, scheme, tables.fmt(r.representation.resolution_height),
                                   tables.fmt(b), tables.fmt(r.measured_vmaf), tables.fmt(r.measured_psnr)]))
    directory = Path(directory)
    run.output(directory / "rd_points.csv", "\n".join(lines) + "\n")
    mean_lines = ["scheme,bitrate,mean_vmaf,n"]
    for scheme, recs in (("optimized", opt), ("reference", ref)):
        by_rate: dict[float, list[float]] = {}
        for r in recs:
            by_rate.setdefault(float(r.representation.target_bitrate), []).append(r.measured_vmaf)
        for b in sorted(by_rate):
            mean_lines.append(f"{scheme},{tables.fmt(b)},{tables.fmt(float(np.mean(by_rate[b])))},{len(by_rate[b])}")
    run.output(directory / "rd_mean.csv", "\n".join(mean_lines) + "\n")
    gp = "set datafile separator ','\nset logscale x\nset xlabel 'bitrate (bps)'\nset ylabel 'VMAF'\nplot "
    gp += ", \\\n     ".join(
        f"'rd_mean.csv' using (strcol(1) eq '{s}' ? $2 : 1/0):3 with linespoints title '{s}'"
        for s in ("optimized", "reference")) + "\n"
    run.output(directory / "rd_mean.gp", gp)


def cmd_evaluate(args):
    run = Run(args, None)
    opt = run.stage("read", tables.read_records, run.input(args.optimized))
    ref = run.stage("read", tables.read_records, run.input(args.reference))
    report = run.stage("evaluate", metrics.compare_ladders, opt, ref, args.duration)
    run.output(args.out, _json_text(report))
    if args.plot:
        _rd_plot(opt, ref, args.plot, run)
    return run


def cmd_pipeline(args):
    config = _config(args)
    run = Run(args, config)
    oracle = run.stage("models", _oracle, args, run)
    rows = _features_from_input(args, run)
    ladders = run.stage("ladder", pipeline.build_ladders, rows, oracle, config, args.mode, args.bruteforce)
    pruned = run.stage("prune", pipeline.prune_ladders, ladders, config.jnd_vJ, config.vmaf_threshold_vT)
    run.output(args.out, _csv_text(tables.write_ladders, pruned))
    if args.features_out:
        run.output(args.features_out, _csv_text(tables.write_features, rows))
    return run


def bench(width: int, height: int, n_frames: int, seed: int = 0, workers=None) -> dict:
    """Throughput of complexity feature extraction on random 8-bit frames."""
    rng = np.random.default_rng(seed)
    frames = [FrameY(rng.integers(0, 256, (height, width), dtype=np.uint8), 8) for _ in range(n_frames)]
    t0 = time.perf_counter()
    pipeline.analyze_frames(frames, 30, "bench", segment_duration=max(1, n_frames) / 30, workers=workers)
    wall = time.perf_counter() - t0
    return {"width": width, "height": height, "frames": n_frames, "wall_time_s": wall,
            "fps": n_frames / wall if wall > 0 else float("inf")}


_NAMED_RES = {"2160p": (3840, 2160), "1080p": (1920, 1080), "720p": (1280, 720), "540p": (960, 540),
              "360p": (640, 360)}


def cmd_bench(args):
    res = args.resolution.lower()
    if res in _NAMED_RES:
        w, h = _NAMED_RES[res]
    else:
        try:
            w, h = (int(x) for x in res.split("x"))
        except ValueError:
            raise UsageError(f"--resolution expects WIDTHxHEIGHT or one of {sorted(_NAMED_RES)}") from None
    run = Run(args, None)
    report = run.stage("bench", bench, w, h, args.frames, args.seed, _threads(args))
    text = _json_text(report)
    if args.out:
        run.output(args.out, text)
    else:
        sys.stdout.write(text)
    return run


# parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="ladder config (TOML or JSON)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker cap (default: hardware count)")

    p = _Parser(prog="vfrladder", description="Energy-aware variable-framerate ladder construction.")
    p.add_argument("--version", action="version", version=f"vfrladder {__version__}")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def video_opts(sp):
        sp.add_argument("--segment-duration", type=float, default=4.0)
        sp.add_argument("--raw", metavar="WxH", help="treat input as headerless planar YUV")
        sp.add_argument("--fps", type=float, help="source framerate for --raw input")
        sp.add_argument("--bitdepth", type=int, choices=(8, 10), default=8)
        sp.add_argument("--chroma", choices=("420", "422", "444"), default="420")

    def oracle_opts(sp):
        sp.add_argument("--vmaf-model")
        sp.add_argument("--speed-model")
        sp.add_argument("--oracle", action="store_true", help="use the noise-free synthetic surface")
        sp.add_argument("--params", help="surface parameters for --oracle / synth (TOML or JSON)")
        sp.add_argument("--mode", choices=("eco", "hq", "default"), default="eco")
        sp.add_argument("--bruteforce", action="store_true", help="exhaustive pointwise scan")

    sp = sub.add_parser("analyze", parents=[common], help="extract segment complexity features")
    sp.add_argument("input")
    video_opts(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("synth", parents=[common], help="generate or realize synthetic encodings")
    sp.add_argument("--segments", type=int)
    sp.add_argument("--params")
    sp.add_argument("--out", required=True)
    sp.add_argument("--features-out", help="also write the sampled segment features")
    sp.add_argument("--ladder", help="realize the configurations of this ladder CSV instead")
    sp.add_argument("--features", help="feature CSV matching --ladder segments")
    sp.add_argument("--noise", action="store_true", help="add measurement noise when realizing")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("train", parents=[common], help="fit VMAF and speed forests")
    sp.add_argument("data")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--per-preset", action="store_true")
    sp.add_argument("--trees", type=int, default=100)
    sp.add_argument("--depth", type=int, default=14)
    sp.add_argument("--min-split", type=int, default=2)
    sp.add_argument("--min-leaf", type=int, default=1)
    sp.add_argument("--features-per-split", default="all")
    sp.add_argument("--cv", type=int, default=0, metavar="K", help="also report grouped K-fold CV")
    sp.add_argument("--cv-group", choices=("segment_id", "sequence"), default="segment_id")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("ladder", parents=[common], help="predict optimized ladders")
    sp.add_argument("features")
    oracle_opts(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_ladder)

    sp = sub.add_parser("prune", parents=[common], help="JND-based representation elimination")
    sp.add_argument("ladder")
    sp.add_argument("--jnd", type=float)
    sp.add_argument("--vmaf-threshold", type=float)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_prune)

    sp = sub.add_parser("evaluate", parents=[common], help="compare optimized and reference ladders")
    sp.add_argument("optimized")
    sp.add_argument("reference")
    sp.add_argument("--duration", type=float, default=4.0, help="segment duration in seconds")
    sp.add_argument("--out", required=True)
    sp.add_argument("--plot", metavar="DIR", help="write RD-curve data files")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("pipeline", parents=[common], help="analyze, ladder and prune in one go")
    sp.add_argument("input", help="Y4M/raw video or a feature CSV")
    video_opts(sp)
    oracle_opts(sp)
    sp.add_argument("--jnd", type=float)
    sp.add_argument("--vmaf-threshold", type=float)
    sp.add_argument("--out", required=True)
    sp.add_argument("--features-out")
    sp.set_defaults(func=cmd_pipeline)

    sp = sub.add_parser("bench", parents=[common], help="feature extraction throughput")
    sp.add_argument("--resolution", default="1080p")
    sp.add_argument("--frames", type=int, default=30)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    prog = f"vfrladder {args.command}"
    try:
        run = args.func(args)
        run.write_manifest()
    except UsageError as exc:
        print(f"{prog}: usage error: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"{prog}: {exc}", file=sys.stderr)
        return 2
    except DATA_ERRORS as exc:
        print(f"{prog}: [{args.command}] {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"{prog}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
