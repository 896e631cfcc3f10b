"""Speaker-disjoint stratified cross-validation folds.

Every speaker lands in exactly one test fold, so no recording of a test
speaker is ever seen during training.  Stratification deals each class's
speakers round-robin across folds after a seeded shuffle, which keeps
the per-fold class balance within one speaker of even.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FoldPlan:
    """Test-side speaker assignment for each fold."""

    n_folds: int
    assignments: tuple[tuple[str, ...], ...]

    def test_speakers(self, fold: int) -> tuple[str, ...]:
        return self.assignments[fold]

    def train_speakers(self, fold: int) -> tuple[str, ...]:
        held_out = set(self.assignments[fold])
        rest = [s for grp in self.assignments for s in grp
                if s not in held_out]
        return tuple(sorted(rest))


def make_folds(speaker_labels: dict[str, int], n_folds: int,
               seed: int) -> FoldPlan:
    """Assign speakers to ``n_folds`` disjoint test groups, stratified by
    label.

    Requires every class to have at least ``n_folds`` speakers so each
    fold's test set contains both classes; otherwise per-fold sensitivity
    or specificity would be undefined.
    """
    if n_folds < 2:
        raise ValueError(f"n_folds must be at least 2, got {n_folds}")
    if not speaker_labels:
        raise ValueError("no speakers given")
    by_class: dict[int, list[str]] = {}
    for speaker, label in speaker_labels.items():
        if label not in (0, 1):
            raise ValueError(f"label for {speaker!r} must be 0 or 1, "
                             f"got {label!r}")
        by_class.setdefault(label, []).append(speaker)
    if set(by_class) != {0, 1}:
        raise ValueError("need speakers from both classes")
    for label, members in sorted(by_class.items()):
        if len(members) < n_folds:
            raise ValueError(
                f"class {label} has {len(members)} speakers, fewer than "
                f"{n_folds} folds; every fold needs a test speaker of "
                f"each class")

    folds: list[list[str]] = [[] for _ in range(n_folds)]
    for label in sorted(by_class):
        members = sorted(by_class[label])
        rng = np.random.default_rng(np.random.SeedSequence((seed, label)))
        rng.shuffle(members)
        for i, speaker in enumerate(members):
            folds[i % n_folds].append(speaker)
    return FoldPlan(n_folds=n_folds,
                    assignments=tuple(tuple(sorted(f)) for f in folds))
