"""Turns a dataset spec into train / validation / test splits."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from data import Dataset, gen_two_moons, inject_label_noise, read_csv, read_idx, split, standardize
from errors import ConfigError
from tensor import RngStream, Stream

from .config import CsvSpec, DatasetSpec, IdxSpec, TwoMoonsSpec, parse_model, read_json

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Splits:
    train: Dataset
    test: Dataset
    val: Optional[Dataset] = None


def _two_moons(spec: TwoMoonsSpec, seed: int) -> Splits:
    total = spec.n_train + spec.n_val + spec.n_test
    pool = gen_two_moons(total, spec.noise, seed)
    order = RngStream(seed, Stream.SPLIT).permutation(total, draw_index=0)
    train = pool.take(np.sort(order[: spec.n_train]), name="two_moons/train")
    val = None
    if spec.n_val:
        val = pool.take(np.sort(order[spec.n_train: spec.n_train + spec.n_val]), name="two_moons/val")
    test = pool.take(np.sort(order[spec.n_train + spec.n_val:]), name="two_moons/test")
    return Splits(train=train, test=test, val=val)


def _file_splits(train: Dataset, test: Optional[Dataset], spec: Union[IdxSpec, CsvSpec], seed: int) -> Splits:
    rng = RngStream(seed, Stream.SPLIT)
    if test is None:
        train, test = split(train, [1.0 - spec.test_fraction], rng)
    val = None
    if spec.val_fraction:
        train, val = split(train, [1.0 - spec.val_fraction], rng.fork(Stream.SPLIT + 100))
    return Splits(train=train, test=test, val=val)


def _finish(splits: Splits, spec: DatasetSpec, seed: int) -> Splits:
    train, val, test = splits.train, splits.val, splits.test
    if spec.label_noise:
        train = inject_label_noise(train, spec.label_noise, RngStream(seed, Stream.LABEL_NOISE))
    if spec.standardize:
        others = [d for d in (test, val) if d is not None]
        train, *others = standardize(train, *others)
        test = others[0]
        val = others[1] if val is not None else None
    return Splits(train=train, test=test, val=val)


def provision(spec: DatasetSpec, seed: int) -> Splits:
    """
    Build the splits for ``spec``.

    Splitting, label noise and synthetic noise each use their own stream of
    ``seed``, so every split is a pure function of (spec, seed). Label noise
    only touches the training split; standardization uses training
    constants for every split.
    """
    if isinstance(spec, TwoMoonsSpec):
        if spec.val_fraction:
            raise ConfigError("two_moons sizes its validation split with n_val", field="dataset.val_fraction")
        splits = _two_moons(spec, seed)
    elif isinstance(spec, IdxSpec):
        train = read_idx(spec.train_images, spec.train_labels)
        if spec.limit is not None:
            train = train.take(np.arange(min(spec.limit, len(train))))
        test = read_idx(spec.test_images, spec.test_labels) if spec.test_images else None
        splits = _file_splits(train, test, spec, seed)
    else:
        train = read_csv(spec.train_path, spec.task)
        test = read_csv(spec.test_path, spec.task) if spec.test_path else None
        splits = _file_splits(train, test, spec, seed)
    splits = _finish(splits, spec, seed)
    logger.info(
        "dataset %s: %d train, %s val, %d test",
        spec.kind,
        len(splits.train),
        len(splits.val) if splits.val is not None else 0,
        len(splits.test),
    )
    return splits


_SPEC_KINDS = {"two_moons": TwoMoonsSpec, "idx": IdxSpec, "csv": CsvSpec}


def load_data_argument(path: Union[str, Path], labels: Optional[Union[str, Path]] = None, *, part: str = "train", seed: int = 0) -> Dataset:
    """
    Resolve a command-line data argument.

    Args:
        path: A ``.json`` dataset spec, a ``.csv`` table, or an IDX image
            file (with ``labels``).
        labels: IDX label file.
        part: Which split of a JSON spec to return: train, val or test.
        seed: Seed used to build the splits of a JSON spec.
    """
    path = Path(path)
    if path.suffix == ".json":
        raw = read_json(path)
        kind = raw.get("kind") if isinstance(raw, dict) else None
        if kind not in _SPEC_KINDS:
            raise ConfigError(f"unknown dataset kind {kind!r}", field="kind")
        splits = provision(parse_model(_SPEC_KINDS[kind], raw), seed)
        chosen = getattr(splits, part)
        if chosen is None:
            raise ConfigError(f"the spec has no {part} split", field="part")
        return chosen
    if path.suffix == ".csv":
        return read_csv(path)
    if labels is None:
        raise ConfigError("IDX image files need a --labels file", field="labels")
    return read_idx(path, labels)
