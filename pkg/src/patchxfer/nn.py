"""Forward-only 3x3 convolution, residual blocks and named weight storage.

Weights come either from a manifest (plain-text "name = relative/path.tnsr"
lines, one TNSR file per parameter, names suffixed ``.weight``/``.bias``)
or from a deterministic seeded initializer, so forward passes are
reproducible without any training artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ManifestError, ShapeError
from .tensor import Tensor, load_tensor, save_tensor


@dataclass(frozen=True)
class ConvParams:
    """One 3x3 convolution layer: weight (C_out, C_in, 3, 3) and bias (C_out)."""

    weight: Tensor
    bias: Tensor

    def __post_init__(self):
        w = self.weight
        w.require_rank(4, "conv weight")
        if w.shape[2:] != (3, 3):
            raise ShapeError(f"conv kernel must be 3x3, got {w.shape}")
        self.bias.require_rank(1, "conv bias")
        if self.bias.shape[0] != w.shape[0]:
            raise ShapeError(
                f"bias length {self.bias.shape[0]} != out channels {w.shape[0]}"
            )

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]


def conv3x3(x: Tensor, p: ConvParams, stride: int = 1) -> Tensor:
    """Cross-correlation with zero padding 1. Stride 1 preserves shape;
    stride 2 halves it (ceil). Accumulation order is fixed: bias first,
    then the nine kernel offsets row-major."""
    x.require_rank(3, "conv input")
    c, h, w = x.shape
    if c != p.in_channels:
        raise ShapeError(
            f"conv expects {p.in_channels} input channels, got {c}"
        )
    out_h = (h - 1) // stride + 1
    out_w = (w - 1) // stride + 1
    padded = np.pad(x.a, ((0, 0), (1, 1), (1, 1)))
    out = np.broadcast_to(
        p.bias.a[:, None, None], (p.out_channels, out_h, out_w)
    ).copy()
    wk = p.weight.a
    for dy in range(3):
        ys = slice(dy, dy + stride * (out_h - 1) + 1, stride)
        for dx in range(3):
            xs = slice(dx, dx + stride * (out_w - 1) + 1, stride)
            out += np.tensordot(wk[:, :, dy, dx], padded[:, ys, xs], axes=(1, 0))
    return Tensor(out, copy=False)


def relu(x: Tensor) -> Tensor:
    return Tensor(np.maximum(x.a, np.float32(0.0)), copy=False)


def residual_block(x: Tensor, first: ConvParams, second: ConvParams) -> Tensor:
    """x + conv2(relu(conv1(x))); all channel counts must match."""
    if not (
        first.in_channels
        == first.out_channels
        == second.in_channels
        == second.out_channels
        == x.shape[0]
    ):
        raise ShapeError(
            "residual block requires equal channel counts throughout, got "
            f"input {x.shape[0]}, convs {first.in_channels}->{first.out_channels}"
            f" and {second.in_channels}->{second.out_channels}"
        )
    branch = conv3x3(relu(conv3x3(x, first)), second)
    return Tensor(x.a + branch.a, copy=False)


def seeded_conv(seed: int, name: str, c_in: int, c_out: int) -> ConvParams:
    """Deterministic uniform [-0.1, 0.1] parameters keyed by (seed, name).

    The per-layer stream is independent of request order, so pipelines can
    materialize layers lazily and still be bit-reproducible.
    """
    entropy = [seed & 0xFFFFFFFF] + list(name.encode("utf-8"))
    rng = np.random.default_rng(np.random.SeedSequence(entropy))
    weight = rng.uniform(-0.1, 0.1, size=(c_out, c_in, 3, 3)).astype(np.float32)
    bias = rng.uniform(-0.1, 0.1, size=(c_out,)).astype(np.float32)
    return ConvParams(weight=Tensor(weight, copy=False), bias=Tensor(bias, copy=False))


class WeightBank:
    """Named conv parameters.

    With a manifest, every requested layer must be present with the exact
    channel counts (strict mode); without one, parameters are seeded on
    demand. ``requested`` records every (name, c_in, c_out) the pipeline
    asked for, which doubles as the layer plan for saving manifests.
    """

    def __init__(self, manifest: dict[str, Tensor] | None = None, seed: int = 0):
        self._manifest = manifest
        self._seed = seed
        self._cache: dict[str, ConvParams] = {}
        self.requested: dict[str, tuple[int, int]] = {}

    @property
    def strict(self) -> bool:
        return self._manifest is not None

    def conv(self, name: str, c_in: int, c_out: int) -> ConvParams:
        self.requested[name] = (c_in, c_out)
        params = self._cache.get(name)
        if params is None:
            if self._manifest is None:
                params = seeded_conv(self._seed, name, c_in, c_out)
            else:
                params = self._from_manifest(name)
            self._cache[name] = params
        if params.in_channels != c_in or params.out_channels != c_out:
            raise ManifestError(
                f"layer {name!r} has channels {params.in_channels}->"
                f"{params.out_channels}, pipeline requires {c_in}->{c_out}"
            )
        return params

    def _from_manifest(self, name: str) -> ConvParams:
        assert self._manifest is not None
        try:
            weight = self._manifest[f"{name}.weight"]
            bias = self._manifest[f"{name}.bias"]
        except KeyError as missing:
            raise ManifestError(f"manifest is missing entry {missing.args[0]!r}")
        try:
            return ConvParams(weight=weight, bias=bias)
        except ShapeError as e:
            raise ManifestError(f"layer {name!r}: {e}")


def load_manifest(path: str | Path) -> dict[str, Tensor]:
    """Parse "name = relative/path.tnsr" lines; paths resolve against the
    manifest's directory. Blank lines and #-comments are skipped."""
    path = Path(path)
    base = path.parent
    entries: dict[str, Tensor] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ManifestError(f"{path}:{lineno}: expected 'name = path', got {line!r}")
        name, _, rel = stripped.partition("=")
        name = name.strip()
        rel = rel.strip()
        if not name or not rel:
            raise ManifestError(f"{path}:{lineno}: empty name or path")
        if name in entries:
            raise ManifestError(f"{path}:{lineno}: duplicate entry {name!r}")
        entries[name] = load_tensor(base / rel)
    return entries


def save_manifest(directory: str | Path, layers: dict[str, ConvParams]) -> Path:
    """Write one TNSR per parameter plus a manifest.txt naming them all."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for name, params in sorted(layers.items()):
        for suffix, tensor in (("weight", params.weight), ("bias", params.bias)):
            fname = f"{name}.{suffix}.tnsr"
            save_tensor(tensor, directory / fname)
            lines.append(f"{name}.{suffix} = {fname}")
    manifest = directory / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest
