# Desk-scale datasets: synthetic, IDX, CSV, transforms and batching
from .dataset import Dataset, inject_label_noise, make_dataset, split, standardize
from .synthetic import gen_two_moons
from .idx_reader import IMAGE_MAGIC, LABEL_MAGIC, read_idx, read_idx_images, read_idx_labels, write_idx
from .csv_reader import read_csv
from .batching import BatchPlan, batch_indices, batches, epoch_permutation

__all__ = [
    "Dataset",
    "inject_label_noise",
    "make_dataset",
    "split",
    "standardize",
    "gen_two_moons",
    "IMAGE_MAGIC",
    "LABEL_MAGIC",
    "read_idx",
    "read_idx_images",
    "read_idx_labels",
    "write_idx",
    "read_csv",
    "BatchPlan",
    "batch_indices",
    "batches",
    "epoch_permutation",
]
