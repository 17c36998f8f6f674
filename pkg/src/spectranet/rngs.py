"""Deterministic, collision-free random streams.

Every consumer of randomness derives its own generator from the global
seed plus a fixed domain tag (and indices such as fold, epoch or case
number). Streams are therefore independent of evaluation order, which is
what makes whole pipeline runs bit-reproducible.
"""

from __future__ import annotations

import numpy as np

INIT = 1        # parameter initialization
SHUFFLE = 2     # per-epoch batch order
AUGMENT = 3     # per-epoch augmentation draws
SPLIT = 4       # train/test holdout
KFOLD = 5       # cross-validation folds
PHANTOM = 6     # per-case phantom synthesis
BOOTSTRAP = 7   # BCa resampling


def stream(seed: int, *path: int) -> np.random.Generator:
    """Generator for (seed, domain, indices...). Same arguments, same stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(path))))
