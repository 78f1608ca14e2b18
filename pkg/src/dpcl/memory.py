"""Episodic memory made of per-task mini-memory blocks.

One block is appended after each finished task; reference gradients sample a
single uniformly-chosen block per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import StateError


@dataclass
class MiniMemoryBlock:
    task_id: int
    data: Dataset

    def __len__(self):
        return len(self.data)


@dataclass
class EpisodicMemory:
    blocks: list = field(default_factory=list)

    def __len__(self):
        return len(self.blocks)

    @property
    def task_ids(self):
        return [b.task_id for b in self.blocks]


def update_eps_mem(mem: EpisodicMemory, ref_data: Dataset, task_id: int) -> EpisodicMemory:
    """Append task_id's reference split as a new block; prior blocks untouched."""
    expected = mem.blocks[-1].task_id + 1 if mem.blocks else 1
    if task_id != expected:
        raise StateError(f"expected block for task {expected}, got {task_id}")
    if len(ref_data) == 0:
        raise StateError("refusing to store an empty mini-memory block")
    return EpisodicMemory(mem.blocks + [MiniMemoryBlock(task_id, ref_data)])


def sample_block_indices(mem: EpisodicMemory, current_task: int, ref_batch_size: int,
                         rng: np.random.Generator):
    """Uniform block choice among tasks < current_task, then a without-
    replacement draw of min(ref_batch_size, block size) example indices."""
    if current_task < 2 or not mem.blocks:
        raise StateError("no reference blocks before task 2")
    avail = [b for b in mem.blocks if b.task_id < current_task]
    if len(avail) != current_task - 1:
        raise StateError(f"memory must hold blocks 1..{current_task - 1}")
    block = avail[rng.integers(len(avail))]
    k = min(ref_batch_size, len(block))
    idx = rng.choice(len(block), size=k, replace=False)
    return block, idx


def cal_gref_sample(mem: EpisodicMemory, current_task: int, ref_batch_size: int,
                    rng: np.random.Generator):
    """Returns (block_id, batch: Dataset) for one reference-gradient step."""
    block, idx = sample_block_indices(mem, current_task, ref_batch_size, rng)
    return block.task_id, block.data.subset(idx)


def membership_expectation_check(mem: EpisodicMemory, current_task: int, q: float,
                                 trials: int, seed=0) -> dict:
    """Monte-Carlo per-example selection frequencies under the real sampler.

    q = ref_batch_size / block size (all blocks equal size). Each example's
    frequency should approach q / (current_task - 1).
    """
    sizes = {len(b) for b in mem.blocks}
    if len(sizes) != 1:
        raise StateError("blocks must be equal size for the expectation check")
    block_size = sizes.pop()
    ref_batch_size = int(round(q * block_size))
    counts = {(b.task_id, i): 0 for b in mem.blocks for i in range(len(b))}
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(301,)))
    if ref_batch_size == 0:
        return {key: 0.0 for key in counts}
    for _ in range(trials):
        block, idx = sample_block_indices(mem, current_task, ref_batch_size, rng)
        for i in idx:
            counts[(block.task_id, int(i))] += 1
    return {key: c / trials for key, c in counts.items()}
