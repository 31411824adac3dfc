"""Command line interface: ``radig segment | ucm | eval | bench | convert-gt``."""

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import evaluation as ev
from .distance import ABLATIONS, DistanceConfig
from .io import read_gray, read_image, read_label_map, write_gray, write_label_map
from .pipeline import segment
from .ucm import crack_map_from_raster, cut, quantize, render_ucm, serialize, ucm

logger = logging.getLogger("radig")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VALIDATION = 4

THREADS_ENV = "RADIG_THREADS"
DEFAULT_EVAL_POINTS = 64


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: {text!r}")
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise argparse.ArgumentTypeError(f"threshold {v} outside [0, 1]")
    return values


def _ablations(text):
    names = [v.strip() for v in text.split(",") if v.strip()]
    for name in names:
        if name not in ABLATIONS:
            raise argparse.ArgumentTypeError(f"unknown ablation {name!r}; choose from {', '.join(ABLATIONS)}")
    return names


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _resolution(text):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}")
    return w, h


def read_config(path):
    """Parse a ``key = value`` file (TOML-style scalars, ``#`` comments)."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}", EXIT_IO)
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{number}: expected key = value", EXIT_VALIDATION)
        key, value = (part.strip() for part in line.split("=", 1))
        value = value.strip("\"'")
        values[key.replace("-", "_")] = value
    return values


def _apply_config(parser, args, config, argv):
    """Fill every option the user did not give on the command line from ``config``."""
    given = {a.dest for a in parser._actions if _given(a, argv)}
    actions = {a.dest: a for a in parser._actions}
    for key, raw in config.items():
        if key not in actions:
            raise CliError(f"unknown config key {key!r}", EXIT_VALIDATION)
        if key in given:
            continue
        action = actions[key]
        if isinstance(action, (argparse._StoreTrueAction,)):
            value = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                value = action.type(raw)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise CliError(f"config key {key}: {exc}", EXIT_VALIDATION)
        else:
            value = raw
        setattr(args, key, value)


def _given(action, argv):
    for token in argv:
        name = token.split("=", 1)[0]
        if name in action.option_strings:
            return True
    return False


def _threads(args):
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise CliError(f"{THREADS_ENV} must be an integer, got {env!r}", EXIT_VALIDATION)
    return 1


def _distance_config(args):
    cfg = DistanceConfig(epsilon=args.epsilon)
    return cfg.ablate(*(args.ablate or []))


def _load(path):
    try:
        return read_image(path)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read image {path}: {exc}", EXIT_IO)


def _outdir(path):
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}", EXIT_IO)
    return out


def _threshold_tag(t):
    return f"{t:.4f}"


def _segment_one(path, args, cfg, out, with_tree):
    image = _load(path)
    result = segment(image, cfg)
    stem = Path(path).stem
    h, levels = result.hierarchy, result.levels
    try:
        raster = render_ucm(ucm(h, levels))
        write_gray(out / f"{stem}_ucm.png", quantize(raster, args.ucm_bits), args.ucm_bits)
        if with_tree:
            (out / f"{stem}_hierarchy.json").write_text(serialize(h, levels))
            for t in _segment_thresholds(args):
                write_label_map(out / f"{stem}_seg_{_threshold_tag(t)}.png", cut(h, levels, t))
            if args.debug_dumps:
                g = result.gradient
                scale = 255.0 / g.max() if g.max() > 0 else 0.0
                write_gray(out / f"{stem}_gradient.png", np.rint(g * scale), 8)
                write_label_map(out / f"{stem}_atoms.png", result.atoms)
    except OSError as exc:
        raise CliError(f"cannot write outputs for {path}: {exc}", EXIT_IO)
    logger.info("%s: %d atoms, %d merges", path, h.atom_count, len(h.events))
    return stem


def _segment_thresholds(args):
    if args.thresholds:
        return args.thresholds
    if args.threshold_count:
        return [float(t) for t in np.linspace(0.0, 1.0, args.threshold_count)]
    return []


def _run_batch(args, with_tree):
    cfg = _distance_config(args)
    out = _outdir(args.output)
    threads = _threads(args)
    work = lambda p: _segment_one(p, args, cfg, out, with_tree)  # noqa: E731
    if threads == 1 or len(args.inputs) == 1:
        for p in args.inputs:
            work(p)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, args.inputs))
    return EXIT_OK


def cmd_segment(args):
    return _run_batch(args, with_tree=True)


def cmd_ucm(args):
    return _run_batch(args, with_tree=False)


def _eval_one(ucm_path, gt_path, args, thresholds, out):
    values, top = read_gray(ucm_path)
    cracks = crack_map_from_raster(values / top)
    gt = ev.read_ground_truth(gt_path)
    fop = ev.fop_curve(cracks, gt, thresholds, args.gamma_object, args.gamma_part)
    fb = ev.fb_curve(cracks, gt, thresholds, args.fb_tol)
    stem = ucm_path.name[: -len("_ucm.png")]
    ev.write_curve_csv(out / f"{stem}_fop.csv", fop)
    ev.write_curve_csv(out / f"{stem}_fb.csv", fb)
    return fop, fb


def cmd_eval(args):
    pred_dir = Path(args.pred)
    if not pred_dir.is_dir():
        raise CliError(f"prediction directory {pred_dir} does not exist", EXIT_IO)
    ucms = sorted(pred_dir.glob("*_ucm.png"))
    if not ucms:
        raise CliError(f"no *_ucm.png predictions in {pred_dir}", EXIT_VALIDATION)
    out = _outdir(args.output or pred_dir)
    thresholds = np.linspace(0.0, 1.0, args.points)
    fops, fbs, names = [], [], []
    for path in ucms:
        stem = path.name[: -len("_ucm.png")]
        gt_path = ev.find_ground_truth(args.gt, stem)
        if gt_path is None:
            logger.warning("no ground truth for %s, skipped", stem)
            continue
        try:
            fop, fb = _eval_one(path, gt_path, args, thresholds, out)
        except (OSError, ValueError) as exc:
            logger.warning("%s skipped: %s", stem, exc)
            continue
        fops.append(fop)
        fbs.append(fb)
        names.append(stem)
    if not names:
        raise CliError("every image was skipped", EXIT_VALIDATION)

    lines = ["measure,scale,threshold,precision,recall,F"]
    text = [f"images evaluated: {len(names)}"]
    for label, curves in (("F_op", fops), ("F_b", fbs)):
        ods, ois = ev.ods_ois(curves)
        lines.append(f"{label},ODS,{ods.threshold!r},{ods.precision!r},{ods.recall!r},{ods.f!r}")
        lines.append(f"{label},OIS,,,,{ois!r}")
        text.append(
            f"{label}: ODS F={ods.f:.4f} (P={ods.precision:.4f} R={ods.recall:.4f} t={ods.threshold:.4f})"
            f"  OIS F={ois:.4f}"
        )
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    (out / "summary.txt").write_text("\n".join(text) + "\n")
    print("\n".join(text))
    return EXIT_OK


def cmd_bench(args):
    images = []
    for path in args.inputs:
        images.append((Path(path).name, _load(path)))
    for w, h in args.noise or []:
        images.append((f"noise_{w}x{h}", bench_mod.noise_image(w, h, seed=args.seed, smooth=args.smooth)))
    if not images:
        raise CliError("nothing to benchmark: give image paths or --noise WxH", EXIT_USAGE)
    rows = bench_mod.benchmark(images, args.reps, _distance_config(args))
    print(bench_mod.format_report(rows))
    if args.csv:
        lines = ["image,width,height,pixels,stage,median_ms"]
        lines += [f"{n},{w},{h},{w * h},{stage},{s * 1e3:.4f}" for n, w, h, stage, s in rows]
        try:
            Path(args.csv).write_text("\n".join(lines) + "\n")
        except OSError as exc:
            raise CliError(f"cannot write {args.csv}: {exc}", EXIT_IO)
    return EXIT_OK


def cmd_convert_gt(args):
    try:
        if args.bsds:
            gt = ev.bsds_to_ground_truth(args.bsds)
            ev.write_ground_truth(args.output, gt)
        else:
            instances = ev.labels_to_instances(read_label_map(args.pascal))
            write_label_map(args.output, instances)
    except OSError as exc:
        raise CliError(str(exc), EXIT_IO)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="radig", description="Realtime hierarchical image segmentation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def pipeline_options(p):
        p.add_argument("inputs", nargs="+", help="RGB images (PNG or binary PPM)")
        p.add_argument("-o", "--output", default=".", help="output directory")
        p.add_argument("--ablate", type=_ablations, action="extend", default=[], help=f"comma list of {', '.join(ABLATIONS)}")
        p.add_argument("--epsilon", type=float, default=1e-12, help="log floor of the distance terms")
        p.add_argument("--ucm-bits", type=int, choices=(8, 16), default=16)
        p.add_argument("--threads", type=_positive_int, help=f"worker threads (default: ${THREADS_ENV} or 1)")
        p.add_argument("--config", help="key = value file; command line flags win")

    p = sub.add_parser("segment", help="hierarchy JSON, UCM and threshold label maps")
    pipeline_options(p)
    p.add_argument("--thresholds", type=_float_list, help="comma list of cut levels in [0, 1]")
    p.add_argument("--threshold-count", type=_positive_int, help="N uniform cut levels on [0, 1] instead of a list")
    p.add_argument("--debug-dumps", action="store_true", help="also write gradient and watershed atoms")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("ucm", help="UCM image only")
    pipeline_options(p)
    p.set_defaults(func=cmd_ucm)

    p = sub.add_parser("eval", help="F_op / F_b curves and ODS/OIS of *_ucm.png predictions")
    p.add_argument("--pred", required=True, help="directory with <stem>_ucm.png files")
    p.add_argument("--gt", required=True, help="directory with <stem>.png, <stem>.npz or <stem>/")
    p.add_argument("-o", "--output", help="report directory (default: --pred)")
    p.add_argument("--gamma-object", type=float, default=ev.GAMMA_OBJECT)
    p.add_argument("--gamma-part", type=float, default=ev.GAMMA_PART)
    p.add_argument("--fb-tol", type=float, default=ev.FB_TOLERANCE, help="match radius / image diagonal")
    p.add_argument("--points", type=_positive_int, default=DEFAULT_EVAL_POINTS, help="uniform thresholds on [0, 1]")
    p.add_argument("--config", help="key = value file; command line flags win")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="per-stage timing report")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--noise", type=_resolution, action="append", help="add a generated WIDTHxHEIGHT noise image")
    p.add_argument("--smooth", type=float, default=2.0, help="noise smoothing in pixels (0: white)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=_positive_int, default=3)
    p.add_argument("--csv", help="write the report as CSV")
    p.add_argument("--ablate", type=_ablations, action="extend", default=[])
    p.add_argument("--epsilon", type=float, default=1e-12)
    p.add_argument("--config", help="key = value file; command line flags win")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("convert-gt", help="convert external ground truth")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--bsds", help="BSDS500 groundTruth .mat file -> .npz")
    src.add_argument("--pascal", help="category label PNG -> instance label PNG")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_convert_gt)
    return parser


def main(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if getattr(args, "config", None):
            subparser = parser._subparsers._group_actions[0].choices[args.command]
            _apply_config(subparser, args, read_config(args.config), argv)
        return args.func(args)
    except CliError as exc:
        print(f"radig: error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"radig: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
