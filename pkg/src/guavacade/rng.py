"""Seed-substream derivation.

One master seed drives a whole pipeline run. Every consumer pulls its own
generator keyed by (master_seed, component_tag, *index), so adding or
reordering components never perturbs the streams of existing ones.
"""

import zlib

import numpy as np


def substream(master_seed: int, tag: str, *index: int) -> np.random.Generator:
    """Independent generator for one component of a seeded pipeline.

    The tag is hashed with crc32 so the spawn key stays stable across runs
    and platforms.
    """
    key = (zlib.crc32(tag.encode("utf-8")),) + tuple(int(i) for i in index)
    seq = np.random.SeedSequence(int(master_seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(seq))
