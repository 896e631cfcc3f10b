import numpy as np
import pytest

from pdspeech.evaluation.folds import FoldPlan, make_folds


def speaker_pool(n_pd, n_hc):
    labels = {f"pd{i:02d}": 1 for i in range(n_pd)}
    labels.update({f"hc{i:02d}": 0 for i in range(n_hc)})
    return labels


class TestMakeFolds:
    def test_partition_is_disjoint_and_complete(self):
        labels = speaker_pool(10, 10)
        plan = make_folds(labels, n_folds=10, seed=0)
        seen = [s for fold in plan.assignments for s in fold]
        assert sorted(seen) == sorted(labels)
        assert len(seen) == len(set(seen))

    def test_every_fold_has_both_classes(self):
        labels = speaker_pool(13, 11)
        plan = make_folds(labels, n_folds=10, seed=3)
        for fold in plan.assignments:
            fold_labels = {labels[s] for s in fold}
            assert fold_labels == {0, 1}

    def test_class_balance_within_one(self):
        labels = speaker_pool(17, 12)
        plan = make_folds(labels, n_folds=5, seed=1)
        for label in (0, 1):
            counts = [sum(labels[s] == label for s in fold)
                      for fold in plan.assignments]
            assert max(counts) - min(counts) <= 1

    def test_train_test_split_consistent(self):
        labels = speaker_pool(10, 10)
        plan = make_folds(labels, n_folds=10, seed=7)
        for fold in range(plan.n_folds):
            test = set(plan.test_speakers(fold))
            train = set(plan.train_speakers(fold))
            assert test & train == set()
            assert test | train == set(labels)

    def test_deterministic_for_seed(self):
        labels = speaker_pool(12, 12)
        assert make_folds(labels, 6, seed=4) == make_folds(labels, 6, seed=4)

    def test_seed_changes_assignment(self):
        labels = speaker_pool(20, 20)
        a = make_folds(labels, 10, seed=0)
        b = make_folds(labels, 10, seed=1)
        assert a != b

    def test_insertion_order_irrelevant(self):
        ordered = speaker_pool(8, 8)
        shuffled_items = list(ordered.items())
        np.random.default_rng(5).shuffle(shuffled_items)
        assert make_folds(ordered, 4, seed=2) == make_folds(
            dict(shuffled_items), 4, seed=2)

    def test_too_few_speakers_rejected(self):
        with pytest.raises(ValueError, match="fewer than"):
            make_folds(speaker_pool(5, 10), n_folds=10, seed=0)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="both classes"):
            make_folds({f"s{i}": 1 for i in range(10)}, n_folds=2, seed=0)

    def test_bad_label_rejected(self):
        with pytest.raises(ValueError, match="0 or 1"):
            make_folds({"a": 2, "b": 0}, n_folds=2, seed=0)

    def test_bad_fold_count_rejected(self):
        with pytest.raises(ValueError, match="at least 2"):
            make_folds(speaker_pool(5, 5), n_folds=1, seed=0)

    def test_plan_is_frozen(self):
        plan = make_folds(speaker_pool(4, 4), 2, seed=0)
        assert isinstance(plan, FoldPlan)
        with pytest.raises(AttributeError):
            plan.n_folds = 3
