"""
Content-separated random splits

Whole content groups go to either train or test. Split i draws its
permutation from child i of `SeedSequence(seed)` through a PCG64 generator,
so every split is reproducible on its own.
"""
import math
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
import structlog

from ..errors import SplitError
from .manifest import DatasetManifest

log = structlog.get_logger()


class Split(NamedTuple):
    index: int
    train_ids: List[str]
    test_ids: List[str]


def n_test_groups(n_groups: int, test_fraction: float) -> int:
    # rounding guards products such as 0.2 * 10 against ceil drift
    return max(1, math.ceil(round(test_fraction * n_groups, 9)))


def split_generators(seed: int, n_splits: int) -> List[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(child)) for child in np.random.SeedSequence(seed).spawn(n_splits)]


def make_splits(
    manifest: DatasetManifest,
    n_splits: int = 1000,
    test_fraction: float = 0.2,
    seed: int = 0,
    groups: Optional[Sequence[str]] = None,
) -> List[Split]:
    """
    Raises:
        SplitError: fewer than two groups, or the test share would take every group
    """
    groups = sorted(set(groups)) if groups is not None else manifest.groups
    n_groups = len(groups)
    if n_groups < 2:
        raise SplitError(f"Need at least two content groups, found {n_groups}", groups=n_groups)
    n_test = n_test_groups(n_groups, test_fraction)
    if n_test >= n_groups:
        raise SplitError(
            f"A test fraction of {test_fraction} leaves no training groups out of {n_groups}",
            groups=n_groups, test_fraction=test_fraction,
        )

    splits = []
    for index, rng in enumerate(split_generators(seed, n_splits)):
        order = rng.permutation(n_groups)
        test_groups = {groups[i] for i in order[:n_test]}
        train_ids = [e.video_id for e in manifest.entries if e.content_group not in test_groups]
        test_ids = [e.video_id for e in manifest.entries if e.content_group in test_groups]
        splits.append(Split(index, train_ids, test_ids))
    log.debug("splits_generated", n_splits=n_splits, groups=n_groups, test_groups=n_test, seed=seed)
    return splits
