"""Command-line pipeline.

Subcommands::

    profile     label grid (or annotation JSON) + lymphocyte mask -> curve
    deconvolve  IHC RGB PNG -> DAB lymphocyte mask
    match       two directories of curves + pairing -> top-k report
    eval-dice   predicted vs. reference masks -> object-level Dice
    synth       profile spec -> synthetic slide files
    plot        curve -> SVG

Exit codes: 0 success, 1 usage error, 2 data error (the error class name is
printed first on standard error).
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import fileio
from .curve_match import DEFAULT_BAND_RADIUS, rank_matches
from .density_profile import DEFAULT_BIN_WIDTH_UM, InfiltrationCurve, profile_labels, to_fixed_window
from .errors import FileNotFound, InsufficientSupport, InvalidFile, InvalidValue, LymphMarginError
from .eval_metrics import DEFAULT_DISK_RADIUS_UM, ObjectDiceReport, object_level_dice, points_to_disks
from .plot import curve_svg
from .slide_model import DEFAULT_MPP, AnnotationSet, SlideMeta, Stain, TissueLabelMask, rasterize_annotations
from .stain import DEFAULT_DAB_THRESHOLD, DEFAULT_MIN_AREA_PX, LymphocyteMask, StainMatrix, dab_lymphocyte_mask, render_ihc
from .synth_oracle import ProfileSpec, generate_case, geometry_from_name

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class PipelineConfig:
    bin_width_um: float = DEFAULT_BIN_WIDTH_UM
    dab_threshold: float = DEFAULT_DAB_THRESHOLD
    min_area_px: int = DEFAULT_MIN_AREA_PX
    band_radius_bins: int = DEFAULT_BAND_RADIUS
    stain_matrix_path: str | None = None
    output_dir: str = "."

    def validate(self) -> "PipelineConfig":
        if not (math.isfinite(self.bin_width_um) and self.bin_width_um > 0):
            raise InvalidValue(f"bin_width_um must be positive, got {self.bin_width_um}")
        if not (math.isfinite(self.dab_threshold) and self.dab_threshold > 0):
            raise InvalidValue(f"dab_threshold must be positive, got {self.dab_threshold}")
        if self.min_area_px < 0:
            raise InvalidValue(f"min_area_px must be >= 0, got {self.min_area_px}")
        if self.band_radius_bins < 0:
            raise InvalidValue(f"band_radius_bins must be >= 0, got {self.band_radius_bins}")
        return self


_CONFIG_FLAGS = {
    "bin_width_um": "bin_width",
    "dab_threshold": "threshold",
    "min_area_px": "min_area",
    "band_radius_bins": "band_radius",
    "stain_matrix_path": "stain_matrix",
    "output_dir": "output_dir",
}


def load_config(args) -> PipelineConfig:
    values = asdict(PipelineConfig())
    if getattr(args, "config", None):
        raw = fileio.read_json(args.config)
        if not isinstance(raw, dict):
            raise InvalidFile(f"{args.config}: config must be a JSON object")
        known = {f.name for f in fields(PipelineConfig)}
        unknown = set(raw) - known
        if unknown:
            raise InvalidFile(f"{args.config}: unknown config keys {sorted(unknown)}")
        values.update(raw)
    for key, flag in _CONFIG_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    try:
        cfg = PipelineConfig(
            bin_width_um=float(values["bin_width_um"]),
            dab_threshold=float(values["dab_threshold"]),
            min_area_px=int(values["min_area_px"]),
            band_radius_bins=int(values["band_radius_bins"]),
            stain_matrix_path=values["stain_matrix_path"],
            output_dir=str(values["output_dir"]),
        )
    except (TypeError, ValueError) as exc:
        raise InvalidFile(f"bad config value: {exc}") from None
    return cfg.validate()


def _out(cfg: PipelineConfig, name: str) -> Path:
    return Path(cfg.output_dir) / name


def _load_curve(path: Path) -> InfiltrationCurve:
    if path.suffix.lower() == ".json":
        return InfiltrationCurve.from_dict(fileio.read_json(path))
    return InfiltrationCurve.from_csv(fileio.read_text(path))


def _meta_for(path_arg, raster_path, shape, stain: Stain) -> SlideMeta:
    if path_arg:
        meta = fileio.read_meta(path_arg)
    elif fileio.sidecar_path(raster_path).is_file():
        meta = fileio.read_meta(fileio.sidecar_path(raster_path))
    else:
        meta = SlideMeta(DEFAULT_MPP, shape[1], shape[0], stain)
    if meta.shape != tuple(shape):
        raise InvalidFile(f"metadata says {meta.width_px}x{meta.height_px}, raster is {shape[1]}x{shape[0]}")
    return meta


def cmd_profile(args) -> int:
    cfg = load_config(args)
    if bool(args.labels) == bool(args.annotations):
        raise UsageError("profile needs exactly one of --labels or --annotations")
    lymph_arr = fileio.read_mask(args.lymph)
    if args.labels:
        lab = fileio.read_labels(args.labels)
        meta = _meta_for(args.meta, args.labels, lab.shape, Stain.HE)
        labels = TissueLabelMask(meta, lab)
    else:
        if not args.meta:
            raise UsageError("--annotations requires --meta")
        meta = fileio.read_meta(args.meta)
        labels = rasterize_annotations(AnnotationSet.from_dict(fileio.read_json(args.annotations)), meta)
    if lymph_arr.shape != meta.shape:
        raise InvalidFile(f"lymphocyte mask is {lymph_arr.shape[1]}x{lymph_arr.shape[0]}, "
                          f"labels are {meta.width_px}x{meta.height_px}")
    curve = profile_labels(labels, LymphocyteMask(meta, lymph_arr), cfg.bin_width_um)
    fileio.atomic_write_text(_out(cfg, "curve.csv"), curve.to_csv())
    fileio.write_json(_out(cfg, "curve.json"), curve.to_dict())
    # the matching window is only defined for 10 um bins with enough support
    try:
        window = to_fixed_window(curve)
    except (InvalidValue, InsufficientSupport) as exc:
        print(f"window.csv skipped: {exc}", file=sys.stderr)
    else:
        fileio.atomic_write_text(_out(cfg, "window.csv"), window.to_csv())
    return EXIT_OK


def cmd_deconvolve(args) -> int:
    cfg = load_config(args)
    rgb = fileio.read_rgb(args.image)
    meta = _meta_for(args.meta, args.image, rgb.shape[:2], Stain.IHC_CD3)
    m = StainMatrix.from_dict(fileio.read_json(cfg.stain_matrix_path)) if cfg.stain_matrix_path else None
    mask = dab_lymphocyte_mask(rgb, meta, m, cfg.dab_threshold, cfg.min_area_px)
    fileio.write_mask(_out(cfg, "mask.png"), mask.mask)
    fileio.write_meta(_out(cfg, "mask.json"), meta)
    return EXIT_OK


def _curve_dir(path) -> list[tuple[str, Path]]:
    d = Path(path)
    if not d.is_dir():
        raise FileNotFound(str(d))
    found: dict[str, Path] = {}
    for p in sorted(d.iterdir()):
        if p.suffix.lower() not in (".csv", ".json") or not p.is_file():
            continue
        # JSON mirrors CSV; keep one file per id, preferring JSON
        if p.stem not in found or p.suffix.lower() == ".json":
            found[p.stem] = p
    if not found:
        raise InvalidFile(f"{d}: no curve files")
    return sorted(found.items())


def cmd_match(args) -> int:
    cfg = load_config(args)
    queries = [(cid, to_fixed_window(_load_curve(p))) for cid, p in _curve_dir(args.queries)]
    targets = [(cid, to_fixed_window(_load_curve(p))) for cid, p in _curve_dir(args.targets)]
    raw = fileio.read_json(args.pairs)
    try:
        pair_map = {str(e["query"]): str(e["target"]) for e in raw["pairs"]}
    except (KeyError, TypeError):
        raise InvalidFile(f"{args.pairs}: expected {{\"pairs\": [{{\"query\": .., \"target\": ..}}]}}") from None
    report = rank_matches(queries, targets, pair_map, cfg.band_radius_bins)
    fileio.write_json(_out(cfg, "report.json"), report.to_dict())
    print(report.table())
    return EXIT_OK


def cmd_eval_dice(args) -> int:
    cfg = load_config(args)
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    for d in (pred_dir, gt_dir):
        if not d.is_dir():
            raise FileNotFound(str(d))
    per_patch = []
    for p in sorted(pred_dir.glob("*.png")):
        pred = fileio.read_mask(p)
        gt_png, gt_json = gt_dir / f"{p.stem}.png", gt_dir / f"{p.stem}.json"
        if gt_png.is_file():
            gt = fileio.read_mask(gt_png)
        elif gt_json.is_file():
            centers = fileio.read_json(gt_json).get("centers", [])
            meta = SlideMeta(args.mpp, pred.shape[1], pred.shape[0])
            gt = points_to_disks(centers, args.radius_um, meta)
        else:
            raise FileNotFound(f"no ground truth for patch {p.stem} in {gt_dir}")
        per_patch.append((p.stem, object_level_dice(pred, gt)))
    if not per_patch:
        raise InvalidFile(f"{pred_dir}: no prediction PNGs")
    report = ObjectDiceReport(per_patch)
    fileio.write_json(_out(cfg, "dice.json"), report.to_dict())
    print(f"mean object-level Dice over {len(per_patch)} patches: {report.mean_dice:.4f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = load_config(args)
    spec = ProfileSpec.from_dict(fileio.read_json(args.spec))
    geometry = geometry_from_name(args.geometry, args.amplitude_um, args.period_um)
    meta = SlideMeta(args.mpp, args.width_px, args.height_px, Stain.HE)
    case = generate_case(spec, geometry, meta, args.seed)
    fileio.write_labels(_out(cfg, "labels.png"), case.labels.labels)
    fileio.write_meta(_out(cfg, "labels.json"), meta)
    fileio.write_mask(_out(cfg, "lymph_a.png"), case.lymph_a.mask)
    fileio.write_meta(_out(cfg, "lymph_a.json"), meta)
    fileio.write_mask(_out(cfg, "lymph_b.png"), case.lymph_b.mask)
    fileio.write_meta(_out(cfg, "lymph_b.json"), meta)
    ihc_meta = SlideMeta(meta.microns_per_pixel, meta.width_px, meta.height_px, Stain.IHC_CD3)
    fileio.write_rgb(_out(cfg, "ihc_b.png"), render_ihc(case.lymph_b.mask))
    fileio.write_meta(_out(cfg, "ihc_b.json"), ihc_meta)
    fileio.write_json(_out(cfg, "case.json"), {
        "seed": case.seed,
        "geometry": args.geometry,
        "amplitude_um": args.amplitude_um,
        "period_um": args.period_um,
        "meta": meta.to_dict(),
        "spec": spec.to_dict(),
    })
    return EXIT_OK


def cmd_plot(args) -> int:
    cfg = load_config(args)
    curve = _load_curve(Path(args.curve))
    fileio.atomic_write_text(_out(cfg, args.name), curve_svg(curve))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lymphmargin", description="Lymphoid infiltration profiling across tumor margins.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="JSON file with pipeline settings; flags take precedence")
        p.add_argument("-o", "--output-dir", dest="output_dir", default=None)

    p = sub.add_parser("profile", help="label grid + lymphocyte mask -> infiltration curve")
    p.add_argument("--labels", help="label PNG (0=background 1=normal 2=neoplastic 3=irrelevant)")
    p.add_argument("--annotations", help="annotation polygon JSON (alternative to --labels)")
    p.add_argument("--lymph", required=True, help="lymphocyte mask PNG")
    p.add_argument("--meta", help="slide metadata JSON")
    p.add_argument("--bin-width", dest="bin_width", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("deconvolve", help="IHC RGB image -> DAB lymphocyte mask")
    p.add_argument("--image", required=True)
    p.add_argument("--meta")
    p.add_argument("--stain-matrix", dest="stain_matrix", default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--min-area", dest="min_area", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_deconvolve)

    p = sub.add_parser("match", help="rank IHC curves for each H&E curve by cDTW")
    p.add_argument("--queries", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--band-radius", dest="band_radius", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("eval-dice", help="object-level Dice of predicted masks")
    p.add_argument("--pred", required=True, help="directory of predicted mask PNGs")
    p.add_argument("--gt", required=True, help="directory of reference mask PNGs or centers JSON")
    p.add_argument("--radius-um", dest="radius_um", type=float, default=DEFAULT_DISK_RADIUS_UM)
    p.add_argument("--mpp", type=float, default=DEFAULT_MPP)
    common(p)
    p.set_defaults(func=cmd_eval_dice)

    p = sub.add_parser("synth", help="generate a synthetic slide from a profile spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--geometry", default="straight", choices=["straight", "sine"])
    p.add_argument("--amplitude-um", dest="amplitude_um", type=float, default=0.0)
    p.add_argument("--period-um", dest="period_um", type=float, default=1000.0)
    p.add_argument("--width-px", dest="width_px", type=int, default=2000)
    p.add_argument("--height-px", dest="height_px", type=int, default=2000)
    p.add_argument("--mpp", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("plot", help="render a curve as SVG")
    p.add_argument("--curve", required=True)
    p.add_argument("--name", default="curve.svg")
    common(p)
    p.set_defaults(func=cmd_plot)
    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
        if not getattr(args, "command", None):
            raise UsageError("missing subcommand; try --help")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LymphMarginError as exc:
        print(f"{exc.name}: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
