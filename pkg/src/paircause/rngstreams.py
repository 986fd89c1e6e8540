"""Counter-based random number streams for reproducible replication.

Each (master seed, stream name, replicate index) triple addresses an
independent Philox stream, so replicates can run on any number of
workers in any order and still draw identical numbers.  Streams in
use:

* ``"population"`` -- potential outcomes and covariates of a replicate,
* ``"assignment"`` -- its treatment assignment draws.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream", "STREAM_TAGS"]

STREAM_TAGS = {
    "population": 0x706F70,   # "pop"
    "assignment": 0x617367,   # "asg"
    "dataset": 0x647374,      # "dst"
}

_MASK64 = (1 << 64) - 1


def stream(master_seed: int, name: str, index: int = 0) -> np.random.Generator:
    """Generator for one named stream at one replicate index."""
    if name not in STREAM_TAGS:
        raise ValueError(f"unknown stream {name!r}; known: {sorted(STREAM_TAGS)}")
    if index < 0:
        raise ValueError(f"stream index must be >= 0, got {index}")
    key = np.array([master_seed & _MASK64, STREAM_TAGS[name]], dtype=np.uint64)
    counter = np.array([index & _MASK64, index >> 64, 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
