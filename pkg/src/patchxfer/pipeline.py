"""Forward 4x super-resolution pipeline.

Composition: bicubic-resample the inputs, extract three-level feature
pyramids, run the two-stage patch search once at the deepest level, reuse
its indices at the finer levels with the geometry doubled per level, merge
the transferred textures into the simple LR features under soft-attention
scores, integrate across scales, and decode together with gradient-density
features into the SR image.

Zero-weight manifests reduce every learnable path to its residual skip, a
property the tests rely on.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, PatchxferError, ShapeError, StageError
from .features import FileExtractor, make_extractor
from .gradients import grad_feature_extractor, gradient_density
from .image import ImageU8, from_tensor, to_tensor
from .matching import MatchResult, texture_stack, two_stage_search
from .nn import WeightBank, conv3x3, load_manifest, residual_block
from .patches import PatchGeometry, fold, patch_count
from .resample import ScaleSpec, bicubic_resize, bilinear_resize, down_up
from .tensor import Tensor

SCALE = 4
FEATURE_CHANNELS = 64
CSFI_TRUNK_DEPTHS = (16, 8, 4)  # full, 1/2, 1/4 scale
GDE_TRUNK_DEPTHS = (9, 9, 9)
IFE_BLOCKS = 4
ROLES = ("lru", "refdu", "ref")


@dataclass(frozen=True)
class PipelineConfig:
    window: int = 6
    stride: int = 2
    pad: int = 2
    top_u: int = 1
    extractor: str = "builtin-random"
    manifest: str | None = None
    seed: int = 0

    def geometry(self) -> PatchGeometry:
        return PatchGeometry(self.window, self.stride, self.pad)

    def __post_init__(self):
        self.geometry()
        if self.top_u < 1:
            raise ParameterError(f"top_u must be >= 1, got {self.top_u}")


@dataclass
class PipelineResult:
    image: ImageU8
    sr: Tensor
    match: MatchResult
    stage_ms: dict[str, float] = field(default_factory=dict)


@contextmanager
def _stage(name: str, timings: dict[str, float]):
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except (PatchxferError, OSError) as e:
        raise StageError(name, e) from e
    timings[name] = (time.perf_counter() - start) * 1000.0


def make_bank(config: PipelineConfig) -> WeightBank:
    manifest = load_manifest(config.manifest) if config.manifest else None
    return WeightBank(manifest=manifest, seed=config.seed)


def score_plane(match: MatchResult, rank: int, grid: tuple[int, int], out_hw: tuple[int, int]) -> Tensor:
    """Broadcast one row of soft scores from the patch-origin grid to pixels."""
    n_h, n_w = grid
    plane = Tensor(match.scores.a[rank].reshape(1, n_h, n_w))
    return bilinear_resize(plane, out_hw[0], out_hw[1])


def merge_textures(
    f: Tensor,
    textures: list[Tensor],
    scores: list[Tensor],
    bank: WeightBank,
    level: int,
) -> Tensor:
    """F + sum_i conv_i(concat(F, T_i * S_i)) * S_i.

    Scores multiply element-wise, broadcast over channels; with all scores
    zero the result is exactly F.
    """
    if len(textures) != len(scores):
        raise ShapeError("texture and score lists must have equal length")
    out = f.a.copy()
    for i, (t, s) in enumerate(zip(textures, scores)):
        if t.shape[1:] != f.shape[1:] or s.shape[1:] != f.shape[1:]:
            raise ShapeError(
                f"texture/score dims {t.shape}/{s.shape} do not match features {f.shape}"
            )
        conv = bank.conv(
            f"merge.l{level}.t{i}", f.shape[0] + t.shape[0], f.shape[0]
        )
        weighted = t.a * s.a
        stacked = Tensor(np.concatenate([f.a, weighted], axis=0), copy=False)
        out += conv3x3(stacked, conv).a * s.a
    return Tensor(out, copy=False)


def _trunk(x: Tensor, bank: WeightBank, prefix: str, depth: int) -> Tensor:
    c = x.shape[0]
    for i in range(depth):
        x = residual_block(
            x,
            bank.conv(f"{prefix}.{i}.conv1", c, c),
            bank.conv(f"{prefix}.{i}.conv2", c, c),
        )
    return x


def _cat(*tensors: Tensor) -> Tensor:
    return Tensor(np.concatenate([t.a for t in tensors], axis=0), copy=False)


def initial_features(lr: Tensor, bank: WeightBank) -> Tensor:
    """Simple features of the LR image: conv + 4 residual blocks, LR scale."""
    x = conv3x3(lr, bank.conv("ife.conv_in", lr.shape[0], FEATURE_CHANNELS))
    return _trunk(x, bank, "ife.rb", IFE_BLOCKS)


def csfi(m1: Tensor, m2: Tensor, m3: Tensor, bank: WeightBank) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    """Cross-scale integration of merged maps at scales 1, 1/2, 1/4.

    Returns (x_tt, t1, t2, t3): the fused full-scale map and the
    synthesized textures at full, half and quarter scale.
    """
    c = m1.shape[0]
    if m2.shape[0] != c or m3.shape[0] != c:
        raise ShapeError("all three merged maps must share a channel width")
    if m2.shape[1:] != (m1.shape[1] // 2, m1.shape[2] // 2) or m3.shape[1:] != (
        m1.shape[1] // 4,
        m1.shape[2] // 4,
    ):
        raise ShapeError(
            f"merged maps must sit at scales 1, 1/2, 1/4: "
            f"{m1.shape} {m2.shape} {m3.shape}"
        )
    up = ScaleSpec(2)
    d12 = conv3x3(m1, bank.conv("csfi.down.1to2", c, c), stride=2)
    d13 = conv3x3(d12, bank.conv("csfi.down.1to3", c, c), stride=2)
    d23 = conv3x3(m2, bank.conv("csfi.down.2to3", c, c), stride=2)
    u21 = bicubic_resize(m2, up)
    u31 = bicubic_resize(bicubic_resize(m3, up), up)
    u32 = bicubic_resize(m3, up)

    e1 = Tensor(m1.a + conv3x3(_cat(m1, u21, u31), bank.conv("csfi.fuse1", 3 * c, c)).a)
    e2 = Tensor(m2.a + conv3x3(_cat(m2, d12, u32), bank.conv("csfi.fuse2", 3 * c, c)).a)
    e3 = Tensor(m3.a + conv3x3(_cat(m3, d13, d23), bank.conv("csfi.fuse3", 3 * c, c)).a)

    t1 = _trunk(e1, bank, "csfi.trunk1", CSFI_TRUNK_DEPTHS[0])
    t2 = _trunk(e2, bank, "csfi.trunk2", CSFI_TRUNK_DEPTHS[1])
    t3 = _trunk(e3, bank, "csfi.trunk3", CSFI_TRUNK_DEPTHS[2])

    fused = conv3x3(
        _cat(t1, bicubic_resize(t2, up), bicubic_resize(bicubic_resize(t3, up), up)),
        bank.conv("csfi.out", 3 * c, c),
    )
    x_tt = Tensor(t1.a + fused.a)
    return x_tt, t1, t2, t3


def gde_merge(
    f_g: Tensor,
    x_tt: Tensor,
    t1: Tensor,
    t2: Tensor,
    t3: Tensor,
    bank: WeightBank,
) -> Tensor:
    """Coarse-to-fine decode of gradient features against the textures.

    x1 = RB9(conv(concat(F_g, T_3)));  x2 = RB9(conv(concat(x1 up, T_2)));
    x3 = RB9(conv(concat(x2 up, T_1)));  SR = conv(concat(x3, x_tt)) -> 3ch.
    Upsampling is 2x bicubic.
    """
    c = t1.shape[0]
    if f_g.shape[1:] != t3.shape[1:]:
        raise ShapeError(
            f"gradient features {f_g.shape} must sit at the 1/4-scale grid {t3.shape}"
        )
    up = ScaleSpec(2)
    x1 = _trunk(
        conv3x3(_cat(f_g, t3), bank.conv("gde.in1", f_g.shape[0] + c, c)),
        bank,
        "gde.trunk1",
        GDE_TRUNK_DEPTHS[0],
    )
    x2 = _trunk(
        conv3x3(_cat(bicubic_resize(x1, up), t2), bank.conv("gde.in2", 2 * c, c)),
        bank,
        "gde.trunk2",
        GDE_TRUNK_DEPTHS[1],
    )
    x3 = _trunk(
        conv3x3(_cat(bicubic_resize(x2, up), t1), bank.conv("gde.in3", 2 * c, c)),
        bank,
        "gde.trunk3",
        GDE_TRUNK_DEPTHS[2],
    )
    return conv3x3(_cat(x3, x_tt), bank.conv("gde.out", c + x_tt.shape[0], 3))


def extractors_for_roles(config: PipelineConfig):
    if config.extractor.startswith("file:"):
        base = config.extractor[len("file:") :]
        return {
            role: FileExtractor(
                tuple(f"{base}/{role}/level{i}.tnsr" for i in (1, 2, 3))
            )
            for role in ROLES
        }
    shared = make_extractor(config.extractor, seed=config.seed)
    return {role: shared for role in ROLES}


def pad_to_multiple(t: Tensor, multiple: int) -> Tensor:
    _, h, w = t.shape
    pad_h = (-h) % multiple
    pad_w = (-w) % multiple
    if not pad_h and not pad_w:
        return t
    return Tensor(np.pad(t.a, ((0, 0), (0, pad_h), (0, pad_w)), mode="reflect"))


def run_pipeline(
    lr: ImageU8, ref: ImageU8, config: PipelineConfig = PipelineConfig()
) -> PipelineResult:
    """LR + reference images in, 4x SR image out."""
    timings: dict[str, float] = {}
    bank = make_bank(config)
    g = config.geometry()
    u = config.top_u

    with _stage("resample", timings):
        if lr.height < 8 or lr.width < 8:
            raise ShapeError(f"LR image must be at least 8x8, got {lr.width}x{lr.height}")
        lr_t = to_tensor(lr)
        ref_t = pad_to_multiple(to_tensor(ref), SCALE)
        lr_u = bicubic_resize(lr_t, ScaleSpec(SCALE))
        ref_du = down_up(ref_t, SCALE)

    with _stage("features", timings):
        extractors = extractors_for_roles(config)
        q_pyr = extractors["lru"].extract(lr_u)
        k_pyr = extractors["refdu"].extract(ref_du)
        v_pyr = extractors["ref"].extract(ref_t)

    with _stage("search", timings):
        match, textures3 = two_stage_search(
            q_pyr.level3, k_pyr.level3, v_pyr.level3, g, u
        )
        q3_hw = q_pyr.level3.shape[1:]
        stacks = {
            3: textures3,
            2: texture_stack(v_pyr.level2, g, 2, match, q3_hw),
            1: texture_stack(v_pyr.level1, g, 4, match, q3_hw),
        }

    with _stage("transfer", timings):
        f3 = initial_features(lr_t, bank)
        f2 = bicubic_resize(f3, ScaleSpec(2))
        f1 = bicubic_resize(f2, ScaleSpec(2))
        n_h, n_w, _ = patch_count(q3_hw[0], q3_hw[1], g)
        grid = (n_h, n_w)
        merged = {}
        for level, f in ((3, f3), (2, f2), (1, f1)):
            maps = [fold(ps) for ps in stacks[level].levels]
            planes = [
                score_plane(match, rank, grid, f.shape[1:]) for rank in range(u)
            ]
            merged[level] = merge_textures(f, maps, planes, bank, level)

    with _stage("csfi", timings):
        x_tt, t1, t2, t3 = csfi(merged[1], merged[2], merged[3], bank)

    with _stage("gradient", timings):
        f_g = grad_feature_extractor(gradient_density(lr_u), bank, FEATURE_CHANNELS)

    with _stage("merge", timings):
        sr = gde_merge(f_g, x_tt, t1, t2, t3, bank)
        sr = Tensor(np.clip(sr.a, 0.0, 1.0))

    with _stage("encode", timings):
        image = from_tensor(sr)

    return PipelineResult(image=image, sr=sr, match=match, stage_ms=timings)
