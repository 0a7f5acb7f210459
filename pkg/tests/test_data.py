import gzip
import struct

import numpy as np
import numpy.testing as npt
import pytest

from data import (
    BatchPlan,
    IMAGE_MAGIC,
    batch_indices,
    batches,
    gen_two_moons,
    inject_label_noise,
    make_dataset,
    read_csv,
    read_idx,
    read_idx_images,
    read_idx_labels,
    split,
    standardize,
    write_idx,
)
from errors import ConfigError, ConsistencyError, FormatError
from tensor import RngStream, Stream


@pytest.fixture
def idx_pair():
    images = np.arange(3 * 2 * 2, dtype=np.uint8).reshape(3, 2, 2) * 20
    labels = np.array([1, 0, 2], dtype=np.uint8)
    return images, labels


@pytest.mark.parametrize("suffix", ["", ".gz"])
def test_idx_read_back(tmp_path, idx_pair, suffix):
    images, labels = idx_pair
    img_path = tmp_path / f"images-idx3-ubyte{suffix}"
    lbl_path = tmp_path / f"labels-idx1-ubyte{suffix}"
    write_idx(images, labels, img_path, lbl_path)

    ds = read_idx(img_path, lbl_path)
    npt.assert_allclose(ds.X, images.reshape(3, 4) / 255.0)
    npt.assert_array_equal(ds.Y, [1, 0, 2])
    assert ds.X.min() >= 0.0 and ds.X.max() <= 1.0
    assert ds.n_classes == 3


def test_idx_header_is_big_endian(tmp_path, idx_pair):
    images, labels = idx_pair
    write_idx(images, labels, tmp_path / "i", tmp_path / "l")
    header = (tmp_path / "i").read_bytes()[:16]
    assert struct.unpack(">IIII", header) == (IMAGE_MAGIC, 3, 2, 2)


def test_idx_gz_is_really_compressed(tmp_path, idx_pair):
    images, labels = idx_pair
    write_idx(images, labels, tmp_path / "i.gz", tmp_path / "l.gz")
    with gzip.open(tmp_path / "i.gz", "rb") as f:
        assert struct.unpack(">I", f.read(4))[0] == IMAGE_MAGIC


def test_idx_wrong_magic(tmp_path, idx_pair):
    images, labels = idx_pair
    write_idx(images, labels, tmp_path / "i", tmp_path / "l")
    with pytest.raises(FormatError, match="magic"):
        read_idx_images(tmp_path / "l")
    with pytest.raises(FormatError, match="magic"):
        read_idx_labels(tmp_path / "i")


def test_idx_truncated_payload(tmp_path, idx_pair):
    images, labels = idx_pair
    write_idx(images, labels, tmp_path / "i", tmp_path / "l")
    raw = (tmp_path / "i").read_bytes()
    (tmp_path / "i").write_bytes(raw[:-3])
    with pytest.raises(FormatError):
        read_idx_images(tmp_path / "i")


def test_idx_count_mismatch(tmp_path, idx_pair):
    images, labels = idx_pair
    write_idx(images, labels, tmp_path / "i", tmp_path / "l")
    write_idx(images[:2], labels[:2], tmp_path / "i2", tmp_path / "l2")
    with pytest.raises(ConsistencyError):
        read_idx(tmp_path / "i", tmp_path / "l2")


def test_idx_missing_file(tmp_path):
    with pytest.raises(FormatError):
        read_idx_images(tmp_path / "nope")


def test_csv_classification(tmp_path):
    path = tmp_path / "table.csv"
    path.write_text("a,b,label\n0.5,1.0,1\n-2.0,3.5,0\n1.0,1.0,2\n", encoding="utf-8")
    ds = read_csv(path)
    npt.assert_allclose(ds.X, [[0.5, 1.0], [-2.0, 3.5], [1.0, 1.0]])
    npt.assert_array_equal(ds.Y, [1, 0, 2])
    assert ds.is_classification
    assert ds.name == "table"


def test_csv_regression(tmp_path):
    path = tmp_path / "reg.csv"
    path.write_text("x,y\n1.0,0.25\n2.0,0.5\n", encoding="utf-8")
    ds = read_csv(path, task="regression")
    assert not ds.is_classification
    assert ds.Y.shape == (2, 1)


@pytest.mark.parametrize(
    "body",
    [
        "a,label\n0.5,1.5\n",
        "a,label\n0.5,-1\n",
        "a,b,label\n0.5,1\n",
        "a,label\n",
        "a,label\n0.5,x\n",
    ],
)
def test_csv_rejects_malformed_tables(tmp_path, body):
    path = tmp_path / "bad.csv"
    path.write_text(body, encoding="utf-8")
    with pytest.raises(FormatError):
        read_csv(path)


def test_noiseless_moons_lie_on_the_arcs():
    ds = gen_two_moons(4, 0.0, seed=0)
    upper = ds.X[ds.Y == 0]
    lower = ds.X[ds.Y == 1]
    npt.assert_allclose(np.hypot(upper[:, 0], upper[:, 1]), 1.0, atol=1e-12)
    npt.assert_allclose(np.hypot(lower[:, 0] - 1.0, lower[:, 1] - 0.5), 1.0, atol=1e-12)
    assert np.all(upper[:, 1] >= -1e-12)
    assert np.all(lower[:, 1] <= 0.5 + 1e-12)


def test_two_moons_is_seeded_and_balanced():
    a = gen_two_moons(100, 0.3, seed=5)
    b = gen_two_moons(100, 0.3, seed=5)
    c = gen_two_moons(100, 0.3, seed=6)
    npt.assert_array_equal(a.X, b.X)
    assert not np.array_equal(a.X, c.X)
    assert np.bincount(a.Y).tolist() == [50, 50]


@pytest.mark.parametrize("n,noise", [(3, 0.1), (0, 0.1), (10, -0.5)])
def test_two_moons_rejects_bad_arguments(n, noise):
    with pytest.raises(ConfigError):
        gen_two_moons(n, noise, seed=0)


def test_batches_cover_each_index_once():
    plan = BatchPlan.seeded(batch_size=4, seed=1)
    parts = batch_indices(10, plan, epoch=0)
    assert [len(p) for p in parts] == [4, 4, 2]
    assert sorted(np.concatenate(parts).tolist()) == list(range(10))


def test_batches_drop_last_and_reshuffle_per_epoch():
    plan = BatchPlan.seeded(batch_size=4, seed=1, drop_last=True)
    assert [len(p) for p in batch_indices(10, plan, epoch=0)] == [4, 4]
    first = np.concatenate(batch_indices(12, plan, epoch=0))
    again = np.concatenate(batch_indices(12, BatchPlan.seeded(4, 1, True), epoch=0))
    second = np.concatenate(batch_indices(12, plan, epoch=1))
    npt.assert_array_equal(first, again)
    assert not np.array_equal(first, second)


@pytest.mark.parametrize("size", [0, 11])
def test_batch_size_is_checked(size):
    with pytest.raises(ConfigError):
        batch_indices(10, BatchPlan.seeded(batch_size=size, seed=0), epoch=0)


def test_batches_yield_matching_rows():
    ds = make_dataset(np.arange(12.0).reshape(6, 2), np.arange(6), name="rows")
    for X, Y in batches(ds, BatchPlan.seeded(2, seed=3), epoch=0):
        npt.assert_array_equal(X[:, 0], 2.0 * Y)


def test_split_is_disjoint_and_complete():
    ds = make_dataset(np.arange(40.0).reshape(20, 2), np.arange(20) % 2, name="pool")
    train, val, test = split(ds, [0.6, 0.2], RngStream(0, Stream.SPLIT))
    assert (len(train), len(val), len(test)) == (12, 4, 4)
    seen = np.concatenate([train.X[:, 0], val.X[:, 0], test.X[:, 0]])
    assert sorted(seen.tolist()) == sorted(ds.X[:, 0].tolist())
    with pytest.raises(ConfigError):
        split(ds, [0.7, 0.4], RngStream(0, Stream.SPLIT))


def test_standardize_uses_training_constants():
    train = make_dataset([[1.0, 5.0], [3.0, 5.0]], [0, 1], name="train")
    test = make_dataset([[5.0, 7.0]], [0], name="test")
    train_s, test_s = standardize(train, test)
    npt.assert_allclose(train_s.X, [[-1.0, 0.0], [1.0, 0.0]])
    # constant feature: centred only
    npt.assert_allclose(test_s.X, [[3.0, 2.0]])
    assert test_s.meta["mean"] == [2.0, 5.0]
    npt.assert_array_equal(train.X, [[1.0, 5.0], [3.0, 5.0]])


def test_label_noise_flips_the_requested_share():
    ds = make_dataset(np.zeros((100, 2)), np.arange(100) % 3, name="noisy", n_classes=3)
    noisy = inject_label_noise(ds, 0.1, RngStream(0, Stream.LABEL_NOISE))
    assert int(np.sum(noisy.Y != ds.Y)) == 10
    assert noisy.Y.max() < 3
    assert inject_label_noise(ds, 0.0, RngStream(0, Stream.LABEL_NOISE)) is ds


def test_targets_follow_the_declared_task():
    X = np.zeros((3, 1))
    targets = np.array([1.0, 0.0, 2.0])

    reg = make_dataset(X, targets, name="reg", task="regression")
    assert not reg.is_classification
    assert reg.Y.dtype == np.float64
    assert reg.Y.shape == (3, 1)

    cls = make_dataset(X, targets, name="cls")
    assert cls.is_classification
    npt.assert_array_equal(cls.Y, [1, 0, 2])

    with pytest.raises(FormatError):
        make_dataset(X, [0.5, 1.0, 0.0], name="half")
    with pytest.raises(ConfigError):
        make_dataset(X, targets, name="odd", task="ranking")
