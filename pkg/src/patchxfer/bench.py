"""Correlation-matrix scaling benchmark.

For each dims x geometry cell the harness computes patch counts and
correlation-matrix element counts analytically; cells whose estimated
bytes exceed the memory limit are reported "OFM" without attempting
allocation. With measurement enabled, cells that also fit under the
(separate, machine-sized) measurement cap materialize a real correlation
on single-channel random features and record the traced peak allocation
and wall time; larger non-OFM cells stay "analytic".
"""

from __future__ import annotations

import io
import time
import tracemalloc
from dataclasses import dataclass

import numpy as np

from .matching import correlate
from .patches import PatchGeometry, patch_count, unfold
from .tensor import Tensor

DEFAULT_MEM_LIMIT = 24 * 1024**3  # single-accelerator budget, configurable
DEFAULT_MEASURE_LIMIT = 1024**3  # don't materialize more than this locally

CSV_COLUMNS = (
    "k,s,p,H,W,Nq,Nk,elements,bytes_est,bytes_peak,ms,status"
)

STATUS_OK = "ok"
STATUS_OFM = "OFM"
STATUS_ANALYTIC = "analytic"


@dataclass(frozen=True)
class BenchRow:
    window: int
    stride: int
    pad: int
    height: int
    width: int
    n_query: int
    n_key: int
    elements: int
    bytes_est: int
    bytes_peak: int
    ms: float
    status: str

    def csv(self) -> str:
        return (
            f"{self.window},{self.stride},{self.pad},{self.height},{self.width},"
            f"{self.n_query},{self.n_key},{self.elements},{self.bytes_est},"
            f"{self.bytes_peak},{self.ms:.3f},{self.status}"
        )


def _measure_cell(height: int, width: int, g: PatchGeometry, seed: int) -> tuple[int, float]:
    # single worker so the traced peak reflects the matrix, not per-worker
    # float64 block transients
    rng = np.random.default_rng(seed)
    qmap = Tensor(rng.uniform(-1, 1, size=(1, height, width)).astype(np.float32))
    kmap = Tensor(rng.uniform(-1, 1, size=(1, height, width)).astype(np.float32))
    start = time.perf_counter()
    tracemalloc.start()
    try:
        correlate(unfold(qmap, g), unfold(kmap, g), workers=1)
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    return peak, (time.perf_counter() - start) * 1000.0


def run_bench(
    dims: list[tuple[int, int]],
    configs: list[tuple[int, int, int]],
    mem_limit: int = DEFAULT_MEM_LIMIT,
    measure: bool = False,
    measure_limit: int = DEFAULT_MEASURE_LIMIT,
    seed: int = 0,
) -> list[BenchRow]:
    rows = []
    for height, width in dims:
        for k, s, p in configs:
            g = PatchGeometry(k, s, p)
            n_h, n_w, n = patch_count(height, width, g)
            elements = n * n
            bytes_est = elements * 4
            peak = 0
            ms = 0.0
            if bytes_est > mem_limit:
                status = STATUS_OFM
            elif measure and bytes_est <= measure_limit:
                peak, ms = _measure_cell(height, width, g, seed)
                status = STATUS_OK
            else:
                status = STATUS_ANALYTIC
            rows.append(
                BenchRow(
                    window=k,
                    stride=s,
                    pad=p,
                    height=height,
                    width=width,
                    n_query=n,
                    n_key=n,
                    elements=elements,
                    bytes_est=bytes_est,
                    bytes_peak=peak,
                    ms=ms,
                    status=status,
                )
            )
    return rows


def to_csv(rows: list[BenchRow]) -> str:
    out = io.StringIO()
    out.write(CSV_COLUMNS + "\n")
    for row in rows:
        out.write(row.csv() + "\n")
    return out.getvalue()


def format_table(rows: list[BenchRow]) -> str:
    header = f"{'k':>3} {'s':>3} {'p':>3} {'dims':>11} {'patches':>9} {'elements':>14} {'est':>10} {'peak':>10} {'ms':>9} status"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.window:>3} {r.stride:>3} {r.pad:>3} "
            f"{f'{r.height}x{r.width}':>11} {r.n_query:>9} {r.elements:>14} "
            f"{_human_bytes(r.bytes_est):>10} "
            f"{_human_bytes(r.bytes_peak) if r.bytes_peak else '-':>10} "
            f"{r.ms:>9.2f} {r.status}"
        )
    return "\n".join(lines)


def _human_bytes(n: int) -> str:
    value = float(n)
    for unit in ("B", "KiB", "MiB", "GiB", "TiB"):
        if value < 1024.0 or unit == "TiB":
            return f"{value:.1f}{unit}" if unit != "B" else f"{int(value)}B"
        value /= 1024.0
    return f"{value:.1f}TiB"
