"""
Cost of the three flatness measures as the layer grows.

Each size ``d×m`` builds an MLP ``[8, m, d, 2]`` whose second weight is the
(d×m) flatness layer, then times every measure ``repeats`` times in series.
The default batch is large enough that array work, not per-op overhead,
sets the cost of a Hessian-vector product."""

import csv
import io
import logging
import statistics
import time
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

from autodiff import DEFAULT_DENSE_CAP
from errors import ConfigError
from flatness import FlatnessConfig, kappa_neuronwise, kappa_trace
from model import MlpSpec, forward_loss, init_state
from tensor import RngStream, Stream

from .gradcheck import synthetic_batch

logger = logging.getLogger(__name__)

BENCH_MODES = ("neuronwise", "trace-exact", "trace-hutchinson")
BENCH_COLUMNS = ("params", "d", "m", "mode", "mean_ms", "median_ms", "repeats")
BENCH_BATCH = 4096


@dataclass
class BenchRow:
    d: int
    m: int
    mode: str
    mean_ms: float
    median_ms: float
    repeats: int

    @property
    def params(self) -> int:
        return self.d * self.m


def parse_sizes(text: str) -> List[Tuple[int, int]]:
    """``"8x8,16x16"`` -> ``[(8, 8), (16, 16)]``."""
    sizes = []
    for item in text.split(","):
        item = item.strip().lower()
        try:
            d, m = (int(part) for part in item.split("x"))
        except ValueError as exc:
            raise ConfigError(f"expected sizes like 8x8,16x16, got {item!r}", field="sizes") from exc
        if d < 1 or m < 1:
            raise ConfigError(f"layer size {item!r} must be positive", field="sizes")
        sizes.append((d, m))
    return sizes


def _time(fn: Callable[[], object], repeats: int) -> List[float]:
    times = []
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        times.append((time.perf_counter() - started) * 1000.0)
    return times


def run_bench(
    sizes: Sequence[Tuple[int, int]],
    repeats: int = 5,
    samples: int = 10,
    batch_size: int = BENCH_BATCH,
    seed: int = 0,
    modes: Sequence[str] = BENCH_MODES,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> List[BenchRow]:
    """
    Time every mode on every layer size.

    Returns:
        One row per (size, mode) with mean and median wall time in ms.
    """
    if repeats < 1:
        raise ConfigError(f"must be >= 1, got {repeats}", field="repeats")
    rows = []
    for d, m in sizes:
        spec = MlpSpec(widths=[8, m, d, 2], activation="tanh", loss="cross_entropy", flatness_layer=2)
        state = init_state(spec, RngStream(seed, Stream.INIT))
        batch = synthetic_batch(spec, batch_size, RngStream(seed, Stream.DATA))
        for mode in modes:
            cfg = FlatnessConfig(mode=mode, samples=samples, dense_cap=dense_cap)

            def measure() -> None:
                forward = forward_loss(state, batch)
                if mode == "neuronwise":
                    kappa_neuronwise(forward.loss, forward.flatness_weight, cfg.dense_cap)
                else:
                    kappa_trace(forward.loss, forward.flatness_weight, cfg, RngStream(seed, cfg.stream))

            times = _time(measure, repeats)
            row = BenchRow(d, m, mode, statistics.fmean(times), statistics.median(times), repeats)
            logger.info("%dx%d %s: mean %.2f ms, median %.2f ms", d, m, mode, row.mean_ms, row.median_ms)
            rows.append(row)
    return rows


def bench_csv(rows: Sequence[BenchRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(BENCH_COLUMNS)
    for r in rows:
        writer.writerow([r.params, r.d, r.m, r.mode, f"{r.mean_ms:.6g}", f"{r.median_ms:.6g}", r.repeats])
    return buffer.getvalue()
