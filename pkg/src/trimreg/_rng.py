"""Seed-derivation helpers.

All randomness in the package flows from one master seed through
``derive_rng``.  Each consumer passes a fixed integer tag plus its task
indices, so parallel and serial execution draw identical streams.
"""

import numpy as np

# Stream tags. Values are arbitrary but frozen: changing them changes
# every seeded result.
TAG_CANDIDATES = 1
TAG_CV = 2
TAG_FOLDS = 3
TAG_SIMULATION = 4
TAG_CONTAMINATION = 5
TAG_SPLIT = 6
TAG_EXPERIMENT = 7
TAG_LTS = 8


def derive_rng(master_seed, *path):
    """Return a Generator for the stream identified by (master_seed, *path)."""
    if master_seed is None:
        raise ValueError("master seed must be an integer, not None")
    entropy = [int(master_seed) & 0xFFFFFFFF] + [int(x) & 0xFFFFFFFF for x in path]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(master_seed, *path):
    """A derived 32-bit integer seed for handing to seed-taking helpers."""
    entropy = [int(master_seed) & 0xFFFFFFFF] + [int(x) & 0xFFFFFFFF for x in path]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint32)[0])


def fresh_seed():
    """Draw a random master seed from OS entropy (used when none is given)."""
    return int(np.random.SeedSequence().entropy % (2**32))
