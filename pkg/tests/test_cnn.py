import numpy as np
import pytest
from numpy.testing import assert_allclose

from pdspeech.models.cnn import CnnArchitecture, PdCnn, TrainConfig, finetune_cnn, train_cnn
from pdspeech.nn.loss import softmax_xent


def toy_spectrograms(rng, n_per_class, contrast=3.0):
    """Separable toy data: each class has a bright band at a different row."""
    xs, ys = [], []
    for label, row in ((0, 18), (1, 58)):
        x = rng.standard_normal((n_per_class, 80, 41))
        x[:, row : row + 6, :] += contrast
        xs.append(x)
        ys.append(np.full(n_per_class, label))
    return np.concatenate(xs).astype(np.float32), np.concatenate(ys)


class TestArchitecture:
    def test_default_param_count(self):
        # 4 conv blocks + 3 dense layers = 55618 learnable scalars
        assert PdCnn().param_count() == 55618

    def test_spatial_chain(self):
        arch = CnnArchitecture()
        assert arch.spatial_chain() == [(40, 20), (20, 10), (10, 5), (5, 2)]
        assert arch.flat_size == 320

    def test_forward_shape(self):
        model = PdCnn(seed=1)
        x = np.random.default_rng(0).standard_normal((3, 1, 80, 41)).astype(np.float32)
        assert model.forward_logits(x).shape == (3, 2)

    def test_arch_dict_round_trip(self):
        arch = CnnArchitecture()
        assert CnnArchitecture.from_dict(arch.to_dict()) == arch

    def test_rejects_vanishing_input(self):
        with pytest.raises(ValueError, match="pools away"):
            CnnArchitecture(input_shape=(1, 8, 8), conv_channels=(4, 8, 16, 32))

    def test_same_seed_same_init(self):
        a = PdCnn(seed=7)
        b = PdCnn(seed=7)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert_allclose(pa.data, pb.data)

    def test_different_seed_differs(self):
        a, b = PdCnn(seed=7), PdCnn(seed=8)
        assert not np.allclose(a.parameters()[0].data, b.parameters()[0].data)


class TestFullNetworkGradients:
    def test_subsampled_finite_differences(self):
        # float64 net, dropout disabled so the train-mode path is
        # deterministic; probe a handful of coordinates in every tensor
        arch = CnnArchitecture(conv_dropout=0.0, dense_dropout=0.0)
        model = PdCnn(arch, seed=3, dtype=np.float64)
        rng = np.random.default_rng(4)
        x = rng.standard_normal((2, 1, 80, 41))
        y = np.array([0, 1])

        def loss_value():
            return softmax_xent(model.forward_logits(x, train=True), y)[0]

        from pdspeech.nn.loss import softmax_xent_grad

        model.net.zero_grad()
        loss, probs = softmax_xent(model.forward_logits(x, train=True), y)
        model.net.backward(softmax_xent_grad(probs, y))

        eps = 1e-5
        worst = 0.0
        for p in model.parameters():
            flat = p.data.reshape(-1)
            gflat = p.grad.reshape(-1)
            probe_idx = rng.choice(flat.size, size=min(4, flat.size), replace=False)
            for i in probe_idx:
                orig = flat[i]
                flat[i] = orig + eps
                up = loss_value()
                flat[i] = orig - eps
                down = loss_value()
                flat[i] = orig
                fd = (up - down) / (2 * eps)
                denom = max(abs(fd), abs(gflat[i]), 1e-7)
                worst = max(worst, abs(fd - gflat[i]) / denom)
        assert worst < 1e-6


class TestTraining:
    def test_loss_decreases_and_overfits_toy_data(self):
        rng = np.random.default_rng(5)
        data, labels = toy_spectrograms(rng, 24)
        config = TrainConfig(epochs=30, batch_size=16)
        model, log = train_cnn(data, labels, config, seed=0)
        assert len(log) == 30
        assert log[-1]["mean_loss"] < log[0]["mean_loss"]
        # train-mode accuracy is dropout-noisy, so the eval-mode score is
        # the one held to a tight bar
        assert log[-1]["train_acc"] >= 0.85
        probs = model.predict_proba(data)
        assert ((probs[:, 1] > 0.5).astype(int) == labels).mean() >= 0.95

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(6)
        data, labels = toy_spectrograms(rng, 8)
        config = TrainConfig(epochs=3, batch_size=8)
        _, log_a = train_cnn(data, labels, config, seed=11)
        _, log_b = train_cnn(data, labels, config, seed=11)
        assert log_a == log_b

    def test_different_seed_changes_run(self):
        rng = np.random.default_rng(7)
        data, labels = toy_spectrograms(rng, 8)
        config = TrainConfig(epochs=2, batch_size=8)
        _, log_a = train_cnn(data, labels, config, seed=1)
        _, log_b = train_cnn(data, labels, config, seed=2)
        assert log_a != log_b

    def test_norm_stats_recorded(self):
        rng = np.random.default_rng(8)
        data, labels = toy_spectrograms(rng, 6)
        model, _ = train_cnn(data, labels, TrainConfig(epochs=1, batch_size=8), seed=0)
        assert abs(model.norm_stats[0] - data.mean()) < 1e-5
        assert abs(model.norm_stats[1] - data.std()) < 1e-5

    def test_single_class_rejected(self):
        rng = np.random.default_rng(9)
        data = rng.standard_normal((8, 80, 41)).astype(np.float32)
        with pytest.raises(ValueError, match="two classes"):
            train_cnn(data, np.zeros(8, dtype=int))

    def test_wrong_shape_rejected(self):
        with pytest.raises(ValueError, match="expected"):
            train_cnn(np.zeros((4, 40, 41), dtype=np.float32), np.array([0, 1, 0, 1]))

    def test_nonfinite_rejected(self):
        data = np.zeros((4, 80, 41), dtype=np.float32)
        data[0, 0, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            train_cnn(data, np.array([0, 1, 0, 1]))


class TestPredict:
    def test_proba_rows_sum_to_one(self):
        model = PdCnn(seed=0)
        x = np.random.default_rng(1).standard_normal((5, 80, 41))
        probs = model.predict_proba(x)
        assert probs.shape == (5, 2)
        assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_batching_consistent(self):
        model = PdCnn(seed=2)
        x = np.random.default_rng(3).standard_normal((7, 80, 41))
        assert_allclose(model.predict_proba(x, batch_size=3),
                        model.predict_proba(x, batch_size=256), atol=1e-6)

    def test_shape_check(self):
        with pytest.raises(ValueError):
            PdCnn().predict_proba(np.zeros((2, 80, 40)))


class TestFinetune:
    def test_zero_epochs_copies_params_exactly(self):
        rng = np.random.default_rng(10)
        data, labels = toy_spectrograms(rng, 6)
        base, _ = train_cnn(data, labels, TrainConfig(epochs=1, batch_size=8), seed=0)
        target = data + 5.0
        tuned, log = finetune_cnn(base, target, labels, TrainConfig(), seed=0, epochs=0)
        assert log == []
        for pb, pt in zip(base.parameters(), tuned.parameters()):
            assert_allclose(pt.data, pb.data)
        assert tuned.norm_stats != base.norm_stats
        assert abs(tuned.norm_stats[0] - target.mean()) < 1e-5

    def test_donor_not_mutated(self):
        rng = np.random.default_rng(11)
        data, labels = toy_spectrograms(rng, 6)
        base, _ = train_cnn(data, labels, TrainConfig(epochs=1, batch_size=8), seed=0)
        before = [p.data.copy() for p in base.parameters()]
        finetune_cnn(base, data, labels, TrainConfig(epochs=2, batch_size=8), seed=1)
        for p, b in zip(base.parameters(), before):
            assert_allclose(p.data, b)

    def test_finetune_improves_on_shifted_domain(self):
        rng = np.random.default_rng(12)
        base_data, labels = toy_spectrograms(rng, 16)
        base, _ = train_cnn(base_data, labels, TrainConfig(epochs=25, batch_size=16), seed=0)
        # shifted domain: same class structure, different gain and offset
        target = (1.6 * toy_spectrograms(rng, 8, contrast=2.0)[0] - 2.0)
        target_labels = np.concatenate([np.zeros(8, dtype=int), np.ones(8, dtype=int)])
        tuned, _ = finetune_cnn(base, target, target_labels,
                                TrainConfig(batch_size=8), seed=0)
        probs = tuned.predict_proba(target)
        acc = ((probs[:, 1] > 0.5).astype(int) == target_labels).mean()
        assert acc >= 0.9


class TestConfigValidation:
    def test_train_config(self):
        with pytest.raises(ValueError):
            TrainConfig(lr=0.0)
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)
        with pytest.raises(ValueError):
            TrainConfig(epochs=-1)
        with pytest.raises(ValueError):
            TrainConfig(finetune_lr_scale=0.0)
