"""Command-line interface.

Subcommands: sr (full 4x pipeline), match (deepest-level texture search),
bench (correlation-matrix scaling table), metrics (PSNR/SSIM), gd
(gradient-density map). Exit codes: 0 success, 1 runtime failure, 2 usage
error. PATCHXFER_THREADS caps internal worker pools.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bench import (
    DEFAULT_MEASURE_LIMIT,
    DEFAULT_MEM_LIMIT,
    format_table,
    run_bench,
    to_csv,
)
from .config import parse_config
from .errors import PatchxferError
from .gradients import gradient_density
from .image import from_tensor, load_image, save_image, to_tensor
from .matching import two_stage_search
from .metrics import psnr, ssim
from .pipeline import (
    SCALE,
    PipelineConfig,
    extractors_for_roles,
    pad_to_multiple,
    run_pipeline,
)
from .resample import ScaleSpec, bicubic_resize, down_up
from .tensor import Tensor, save_tensor, to_luma_bt601

_CONFIG_FLAGS = ("window", "stride", "pad", "top_u", "extractor", "manifest", "seed")


class UsageError(Exception):
    pass


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--window", type=int, default=None, help="patch window (default 6)")
    p.add_argument("--stride", type=int, default=None, help="patch stride (default 2)")
    p.add_argument("--pad", type=int, default=None, help="patch padding (default 2)")
    p.add_argument("--top-u", dest="top_u", type=int, default=None,
                   help="number of texture matches per query (default 1)")
    p.add_argument("--extractor", default=None,
                   help="builtin-random | builtin-handcrafted | file:DIR")
    p.add_argument("--seed", type=int, default=None,
                   help="seed for builtin extractor and weight init (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patchxfer",
        description="Reference-based texture matching and 4x super-resolution.",
    )
    parser.add_argument("--version", action="version", version=f"patchxfer {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sr = sub.add_parser("sr", help="run the full 4x super-resolution pipeline")
    sr.add_argument("--lr", required=True, help="low-resolution input PNG")
    sr.add_argument("--ref", required=True, help="high-resolution reference PNG")
    sr.add_argument("--out", required=True, help="output PNG path")
    sr.add_argument("--manifest", default=None, help="weight manifest file")
    _add_search_flags(sr)
    sr.set_defaults(func=cmd_sr)

    match = sub.add_parser("match", help="deepest-level two-stage texture search")
    match.add_argument("--lr", required=True, help="low-resolution input PNG")
    match.add_argument("--ref", required=True, help="high-resolution reference PNG")
    match.add_argument("--out-dir", default=".", help="directory for H.tnsr / S.tnsr")
    _add_search_flags(match)
    match.set_defaults(func=cmd_match)

    bench = sub.add_parser("bench", help="correlation-matrix memory/shape table")
    bench.add_argument("--dims", action="append", required=True, metavar="HxW",
                       help="feature-map dims; repeatable")
    bench.add_argument("--configs", required=True,
                       help='semicolon-separated "k,s,p" geometry triples')
    bench.add_argument("--mem-limit", type=int, default=DEFAULT_MEM_LIMIT,
                       help=f"OFM threshold in bytes (default {DEFAULT_MEM_LIMIT})")
    bench.add_argument("--measure-alloc", action="store_true",
                       help="materialize matrices and trace peak allocation")
    bench.add_argument("--measure-limit", type=int, default=DEFAULT_MEASURE_LIMIT,
                       help="skip materializing cells estimated above this many "
                            f"bytes (default {DEFAULT_MEASURE_LIMIT})")
    bench.add_argument("--csv", default=None, help="write the CSV report here")
    bench.set_defaults(func=cmd_bench)

    metrics = sub.add_parser(
        "metrics",
        help="PSNR/SSIM between two images on the full-range BT.601 Y channel",
    )
    metrics.add_argument("--a", required=True, help="first PNG")
    metrics.add_argument("--b", required=True, help="second PNG")
    metrics.set_defaults(func=cmd_metrics)

    gd = sub.add_parser("gd", help="write the gradient-density map as a PNG")
    gd.add_argument("--image", required=True, help="input PNG")
    gd.add_argument("--out", required=True, help="output PNG (map normalized to [0,1])")
    gd.set_defaults(func=cmd_gd)

    return parser


def _pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    values: dict[str, object] = {}
    if getattr(args, "config", None):
        values.update(parse_config(args.config))
    for key in _CONFIG_FLAGS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return PipelineConfig(**values)


def cmd_sr(args: argparse.Namespace) -> int:
    config = _pipeline_config(args)
    lr = load_image(args.lr)
    ref = load_image(args.ref)
    start = time.perf_counter()
    result = run_pipeline(lr, ref, config)
    total = time.perf_counter() - start
    save_image(result.image, args.out)
    print(
        f"SR {result.image.width}x{result.image.height} "
        f"({SCALE}x of {lr.width}x{lr.height}) -> {args.out}"
    )
    stages = ", ".join(f"{k} {v:.0f}ms" for k, v in result.stage_ms.items())
    print(f"total {total:.2f}s ({stages})")
    return 0


def cmd_match(args: argparse.Namespace) -> int:
    config = _pipeline_config(args)
    lr = to_tensor(load_image(args.lr))
    ref = pad_to_multiple(to_tensor(load_image(args.ref)), SCALE)
    lr_u = bicubic_resize(lr, ScaleSpec(SCALE))
    ref_du = down_up(ref, SCALE)
    extractors = extractors_for_roles(config)
    q3 = extractors["lru"].extract(lr_u).level3
    k3 = extractors["refdu"].extract(ref_du).level3
    v3 = extractors["ref"].extract(ref).level3
    match, _ = two_stage_search(q3, k3, v3, config.geometry(), config.top_u)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_tensor(Tensor(match.indices.astype(np.float32)), out_dir / "H.tnsr")
    save_tensor(match.scores, out_dir / "S.tnsr")

    scores = match.scores.a
    print(f"queries: {match.n_query}  keys: {match.n_keys}  top-u: {match.top_u}")
    print(f"wrote {out_dir / 'H.tnsr'} and {out_dir / 'S.tnsr'}")
    hist, edges = np.histogram(scores, bins=10, range=(-1.0, 1.0))
    print("score histogram:")
    for count, lo, hi in zip(hist, edges[:-1], edges[1:]):
        print(f"  [{lo:+.1f}, {hi:+.1f}) {count}")
    print(f"mean top score: {float(scores[0].mean()):.4f}")
    return 0


def _parse_dims(raw: list[str]) -> list[tuple[int, int]]:
    dims = []
    for item in raw:
        try:
            h, w = item.lower().split("x")
            dims.append((int(h), int(w)))
        except ValueError:
            raise UsageError(f"--dims expects HxW, got {item!r}")
        if dims[-1][0] < 1 or dims[-1][1] < 1:
            raise UsageError(f"--dims must be positive, got {item!r}")
    return dims


def _parse_configs(raw: str) -> list[tuple[int, int, int]]:
    configs = []
    for part in raw.split(";"):
        part = part.strip()
        if not part:
            continue
        pieces = part.split(",")
        if len(pieces) != 3:
            raise UsageError(f'--configs expects "k,s,p" triples, got {part!r}')
        try:
            configs.append((int(pieces[0]), int(pieces[1]), int(pieces[2])))
        except ValueError:
            raise UsageError(f'--configs expects integers, got {part!r}')
    if not configs:
        raise UsageError("--configs is empty")
    return configs


def cmd_bench(args: argparse.Namespace) -> int:
    rows = run_bench(
        dims=_parse_dims(args.dims),
        configs=_parse_configs(args.configs),
        mem_limit=args.mem_limit,
        measure=args.measure_alloc,
        measure_limit=args.measure_limit,
    )
    print(format_table(rows))
    csv = to_csv(rows)
    if args.csv:
        Path(args.csv).write_text(csv)
        print(f"wrote CSV to {args.csv}")
    else:
        print()
        print(csv, end="")
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    a = to_luma_bt601(to_tensor(load_image(args.a)))
    b = to_luma_bt601(to_tensor(load_image(args.b)))
    p = psnr(a, b)
    s = ssim(a, b)
    p_text = "inf" if p == float("inf") else f"{p:.4f}"
    print(f"PSNR: {p_text} dB, SSIM: {s:.4f}")
    return 0


def cmd_gd(args: argparse.Namespace) -> int:
    img = to_tensor(load_image(args.image))
    gd = gradient_density(img).a
    peak = float(gd.max())
    normalized = gd / peak if peak > 0 else np.zeros_like(gd)
    save_image(from_tensor(Tensor(normalized)), args.out)
    print(f"gradient density -> {args.out} (peak response {peak:.4f})")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except (PatchxferError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
