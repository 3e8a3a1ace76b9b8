"""Command-line interface over JSONL corpora.

Exit codes: 0 success, 1 a randomized check failed, 2 bad input.
Settings resolve as command-line flag, then ``--config`` JSON file, then default.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from contextlib import contextmanager
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import checks
from .codec import decode_polygon, encode_polygon, k_of
from .errors import FourierDetError
from .evaluation import aggregate, match_detections
from .geometry import nms
from .jsonl import RecordError, dumps, parse_contour_record, parse_descriptor_record, parse_image, read_jsonl
from .matching import dense_match, pair_cost_terms, select_top_proposals

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INPUT = 0, 1, 2


@dataclass
class Config:
    k_max: int = 5
    n_samples: int = 400
    delta: float = math.pi / 2
    lam: float = 0.25
    alpha1: float = 5.0
    alpha2: float = 0.4
    n_m: int = 3
    n_q: int = 300
    nms_iou: float = 0.5
    eval_iou: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "seed":
                continue
            if not (isinstance(value, (int, float)) and value > 0):
                raise ValueError(f"config {f.name} must be positive, got {value!r}")


# flag dest -> Config field
FLAG_FIELDS = {
    "k": "k_max", "n": "n_samples", "delta": "delta", "lam": "lam", "alpha1": "alpha1",
    "alpha2": "alpha2", "nm": "n_m", "nq": "n_q", "seed": "seed",
}
CONFIG_KEYS = {f.name for f in fields(Config)} | {"lambda"}


class InputError(Exception):
    pass


def load_config(args) -> Config:
    values = asdict(Config())
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise InputError("config file must hold a flat JSON object")
        unknown = set(data) - CONFIG_KEYS
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        values.update(data)
    for flag, name in FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[name] = value
    if getattr(args, "iou", None) is not None:
        values["nms_iou"] = values["eval_iou"] = args.iou
    config = Config(**values)
    try:
        config.validate()
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return config


@contextmanager
def _open_in(path):
    if path in (None, "-"):
        yield sys.stdin
        return
    try:
        fh = open(path)
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc.strerror}") from None
    with fh:
        yield fh


def _emit(lines, path) -> None:
    text = "".join(line + "\n" for line in lines)
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


def _source_name(path) -> str:
    return "<stdin>" if path in (None, "-") else path


def cmd_encode(args, config: Config) -> int:
    out = []
    with _open_in(args.input) as fh:
        for lineno, record in read_jsonl(fh):
            (w, h), entries = parse_contour_record(record, lineno)
            for i, entry in enumerate(entries):
                try:
                    fd = encode_polygon(entry.points, w, h, config.k_max, config.n_samples)
                except FourierDetError as exc:
                    raise RecordError(lineno, f"polygon {i}: {exc}") from None
                out.append(dumps({"image": {"w": record["image"]["w"], "h": record["image"]["h"]},
                                  "k": config.k_max, "coeffs": fd}))
    _emit(out, args.output)
    return EXIT_OK


def cmd_decode(args, config: Config) -> int:
    out = []
    with _open_in(args.input) as fh:
        for lineno, record in read_jsonl(fh):
            _, fd = parse_descriptor_record(record, lineno)
            if "image" in record:
                w, h = parse_image(record, lineno)
                image = record["image"]
            elif args.width and args.height:
                w, h = args.width, args.height
                image = {"w": w, "h": h}
            else:
                raise RecordError(lineno, 'no "image" in record and no --width/--height given')
            points = decode_polygon(fd, w, h, config.n_samples)
            out.append(dumps({"image": {"w": image["w"], "h": image["h"]}, "polygons": [points]}))
    _emit(out, args.output)
    return EXIT_OK


def _read_descriptors(path, need_score: bool):
    items = []
    with _open_in(path) as fh:
        for lineno, record in read_jsonl(fh):
            _, fd = parse_descriptor_record(record, lineno)
            if items and len(fd) != len(items[0][0]):
                raise RecordError(lineno, "descriptor K differs from earlier records")
            score = None
            if need_score:
                score = record.get("score")
                if isinstance(score, bool) or not isinstance(score, (int, float)) or not 0 < score < 1:
                    raise RecordError(lineno, '"score" must be a number in (0, 1)')
            items.append((fd, score))
    return items


def cmd_match(args, config: Config) -> int:
    preds = _read_descriptors(args.pred, need_score=True)
    gts = [fd for fd, _ in _read_descriptors(args.gt, need_score=False)]
    if not preds or not gts:
        raise InputError("match needs at least one prediction and one ground truth")
    if len(preds[0][0]) != len(gts[0]):
        raise InputError("prediction and ground-truth descriptors have different K")
    if 2 * k_of(gts[0]) + 1 > config.n_samples:
        raise InputError(f"--n {config.n_samples} is below 2K+1")
    index, proposals = select_top_proposals([s for _, s in preds], [fd for fd, _ in preds],
                                            min(config.n_q, len(preds)))
    terms = [[pair_cost_terms(p, g, config.lam, config.alpha1, config.alpha2, config.n_samples) for g in gts]
             for p in proposals]
    cost = np.array([[t.total for t in row] for row in terms])
    result = dense_match(cost, config.n_m)
    positives = sorted([index[p], g] for p, g in result.positives)
    matched = {p for p, _ in positives}
    # proposals cut by the top-n_q selection are negatives too
    report = {
        "positives": positives,
        "negatives": [i for i in range(len(preds)) if i not in matched],
    }
    if args.explain:
        report["cost"] = cost
        report["pairs"] = [
            {"pred": index[p], "gt": g, **terms[p][g]._asdict()} for p, g in result.positives
        ]
        report["rounds"] = [[[index[p], g] for p, g in r] for r in result.rounds]
    _emit([dumps(report)], args.output)
    return EXIT_OK


def cmd_nms(args, config: Config) -> int:
    out = []
    with _open_in(args.input) as fh:
        for lineno, record in read_jsonl(fh):
            _, entries = parse_contour_record(record, lineno)
            if any(e.score is None for e in entries):
                raise RecordError(lineno, 'every polygon needs a "score" for nms')
            try:
                keep = nms([e.points for e in entries], [e.score for e in entries], config.nms_iou)
            except (FourierDetError, ValueError) as exc:
                raise RecordError(lineno, str(exc)) from None
            out.append(dumps({
                "image": {"w": record["image"]["w"], "h": record["image"]["h"]},
                "keep": keep,
                "polygons": [{"points": entries[i].points, "score": entries[i].score} for i in keep],
            }))
    _emit(out, args.output)
    return EXIT_OK


def cmd_eval(args, config: Config) -> int:
    def load(path):
        with _open_in(path) as fh:
            return [(lineno, parse_contour_record(rec, lineno)[1]) for lineno, rec in read_jsonl(fh)]

    gt_images = load(args.gt)
    pred_images = load(args.pred)
    if len(gt_images) != len(pred_images):
        raise InputError(f"{_source_name(args.gt)} has {len(gt_images)} images but "
                         f"{_source_name(args.pred)} has {len(pred_images)}")
    per_image = []
    for (_, gt_entries), (lineno, pred_entries) in zip(gt_images, pred_images):
        preds = [(e.points, 1.0 if e.score is None else e.score) for e in pred_entries if not e.ignore]
        gts = [e.points for e in gt_entries if not e.ignore]
        ignore = [e.points for e in gt_entries if e.ignore]
        try:
            per_image.append(match_detections(preds, gts, config.eval_iou, ignore))
        except (FourierDetError, ValueError) as exc:
            raise RecordError(lineno, str(exc)) from None
    _emit([dumps(aggregate(per_image).to_json())], args.output)
    return EXIT_OK


def _report_check(name: str, result: checks.CheckResult) -> int:
    line = f"{name}: trials={result.trials} max_rel_err={result.max_error:.3e} (tol {result.tolerance:.0e})"
    if result.limit_tolerance:
        line += f" zero_offset_limit_err={result.max_limit_error:.3e} (tol {result.limit_tolerance:.0e})"
    print(line + (" PASS" if result.passed else " FAIL"))
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def cmd_gradcheck(args, config: Config) -> int:
    return _report_check("grad-check", checks.grad_check(args.trials, config.seed, config.k_max, config.delta))


def cmd_attncheck(args, config: Config) -> int:
    result = checks.attn_check(args.trials, config.seed)
    line = f"attn-check: trials={result.trials} max_abs_err={result.max_error:.3e} (tol {result.tolerance:.0e})"
    print(line + (" PASS" if result.passed else " FAIL"))
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON object of settings")
    common.add_argument("--k", type=int, help="highest frequency index K (default 5)")
    common.add_argument("--n", type=int, help="contour sample count (default 400)")
    common.add_argument("--delta", type=float, help="activation range parameter (default pi/2)")
    common.add_argument("--lambda", dest="lam", type=float, help="regression weight (default 0.25)")
    common.add_argument("--alpha1", type=float, help="descriptor L1 weight (default 5)")
    common.add_argument("--alpha2", type=float, help="GIoU weight (default 0.4)")
    common.add_argument("--nm", type=int, help="dense matching rounds (default 3)")
    common.add_argument("--nq", type=int, help="proposals kept before matching (default 300)")
    common.add_argument("--iou", type=float, help="IoU threshold for nms/eval (default 0.5)")
    common.add_argument("--seed", type=int, help="seed for randomized checks (default 0)")
    common.add_argument("-o", "--output", help="output path (default stdout)")

    parser = argparse.ArgumentParser(prog="fourierdet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", parents=[common], help="polygons -> descriptors")
    p.add_argument("input", nargs="?", help="contour JSONL (default stdin)")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", parents=[common], help="descriptors -> polygons")
    p.add_argument("input", nargs="?", help="descriptor JSONL (default stdin)")
    p.add_argument("--width", type=float, help="image width when records carry no image")
    p.add_argument("--height", type=float, help="image height when records carry no image")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("match", parents=[common], help="dense matching of predictions to ground truth")
    p.add_argument("--pred", required=True, help="descriptor JSONL with a score per line")
    p.add_argument("--gt", required=True, help="descriptor JSONL")
    p.add_argument("--explain", action="store_true", help="include cost matrix and per-pair terms")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("nms", parents=[common], help="polygon NMS per record")
    p.add_argument("input", nargs="?", help="contour JSONL with scored polygons")
    p.set_defaults(func=cmd_nms)

    p = sub.add_parser("eval", parents=[common], help="precision/recall/F at an IoU threshold")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grad-check", parents=[common], help="refinement gradients vs finite differences")
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("attn-check", parents=[common], help="attention kernel vs naive loops")
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_attncheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
        return args.func(args, config)
    except (RecordError, InputError, FourierDetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
