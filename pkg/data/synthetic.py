import numpy as np

from errors import ConfigError
from tensor import RngStream, Stream

from .dataset import Dataset, make_dataset


def gen_two_moons(n: int, noise: float, seed: int) -> Dataset:
    """
    Two interleaved half circles.

    Class 0 lies on the upper unit arc centred at the origin, class 1 on the
    lower unit arc centred at (1, 0.5). Each class gets ``n / 2`` points
    evenly spaced in angle, then Gaussian noise of standard deviation
    ``noise`` is added to both coordinates.

    Args:
        n: Total number of points (even, >= 2).
        noise: Noise standard deviation σ >= 0.
        seed: Seed of the ``Stream.DATA`` stream.

    Returns:
        Dataset named ``two_moons`` with balanced int64 labels.
    """
    if n < 2 or n % 2:
        raise ConfigError(f"must be an even number >= 2, got {n}", field="n")
    if noise < 0:
        raise ConfigError(f"must be >= 0, got {noise}", field="noise")
    half = n // 2
    angles = np.linspace(0.0, np.pi, half)
    outer = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    inner = np.stack([1.0 - np.cos(angles), 0.5 - np.sin(angles)], axis=1)
    X = np.concatenate([outer, inner])
    if noise > 0:
        X = X + RngStream(seed, Stream.DATA).normal(X.shape, noise)
    Y = np.concatenate([np.zeros(half, dtype=np.int64), np.ones(half, dtype=np.int64)])
    return make_dataset(X, Y, name="two_moons", n_classes=2, noise=noise, seed=seed)
