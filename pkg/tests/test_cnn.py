import numpy as np
import pytest

from quakebrief.classify.cnn import (
    CnnModel,
    CnnTrainConfig,
    cnn_forward,
    cnn_loss_and_grads,
    predict_cnn,
    train_cnn,
)

TABLE_SHAPES = {
    "conv3": (62, 1, 3),
    "pool3": (1, 1, 3),
    "conv4": (61, 1, 3),
    "pool4": (1, 1, 3),
    "conv5": (60, 1, 3),
    "pool5": (1, 1, 3),
    "concat": (1, 1, 9),
    "dropout": (1, 1, 9),
    "flatten": (9,),
}


def random_batch(rng, n, vocab=20):
    return rng.integers(0, vocab, (n, 64))


class TestForwardShapes:
    @pytest.mark.parametrize("n", [1, 2, 7])
    def test_table_shapes(self, n):
        rng = np.random.default_rng(0)
        model = CnnModel(vocab_size=20, n_classes=4, seed=1)
        state = cnn_forward(model, ids=random_batch(rng, n))
        for layer, tail in TABLE_SHAPES.items():
            assert state.layer_shapes[layer] == (n, *tail), layer
        assert state.layer_shapes["embed"] == (n, 64, 80)
        assert state.layer_shapes["logits"] == (n, 4)
        assert state.feature_map.shape == (n, 9)

    def test_wrong_sequence_length(self):
        model = CnnModel(vocab_size=10, seed=0)
        with pytest.raises(ValueError, match="sequence length"):
            cnn_forward(model, ids=np.zeros((2, 32), dtype=np.int64))

    def test_wrong_embed_shape(self):
        model = CnnModel(vocab_size=10, seed=0)
        with pytest.raises(ValueError, match="embedding layer"):
            cnn_forward(model, embed=np.zeros((2, 64, 40)))

    def test_needs_exactly_one_input(self):
        model = CnnModel(vocab_size=10, seed=0)
        with pytest.raises(ValueError):
            cnn_forward(model)


class TestForwardValues:
    def test_all_zero_parameters_give_zero_outputs(self):
        model = CnnModel(vocab_size=10, seed=0)
        for arr in model.params.values():
            arr[:] = 0.0
        state = cnn_forward(model, ids=np.zeros((2, 64), dtype=np.int64))
        assert np.all(state.logits == 0.0)
        assert np.all(state.feature_map == 0.0)

    def test_eval_mode_deterministic(self):
        rng = np.random.default_rng(1)
        model = CnnModel(vocab_size=30, seed=2)
        ids = random_batch(rng, 3, vocab=30)
        a = cnn_forward(model, ids=ids)
        b = cnn_forward(model, ids=ids)
        assert np.array_equal(a.logits, b.logits)
        assert np.array_equal(a.feature_map, b.feature_map)

    def test_feature_map_nonnegative_for_leaky_model(self):
        rng = np.random.default_rng(5)
        model = CnnModel(vocab_size=30, conv_activation="leaky_relu", seed=3)
        state = cnn_forward(model, ids=random_batch(rng, 4, vocab=30))
        assert np.all(state.feature_map >= 0.0)


class TestGradients:
    def test_every_parameter_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        model = CnnModel(vocab_size=12, n_classes=4, seed=7)
        ids = random_batch(rng, 2, vocab=12)
        labels = np.array([1, 3])
        mask = (rng.random((2, 9)) < 0.75) / 0.75
        _, grads = cnn_loss_and_grads(model, ids, labels, mask)
        h = 1e-4
        for name, p in model.params.items():
            flat = p.ravel()
            gflat = grads[name].ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                lp, _ = cnn_loss_and_grads(model, ids, labels, mask)
                flat[i] = orig - h
                lm, _ = cnn_loss_and_grads(model, ids, labels, mask)
                flat[i] = orig
                fd = (lp - lm) / (2 * h)
                assert abs(gflat[i] - fd) <= 1e-4 * max(abs(gflat[i]), abs(fd), 1e-4), f"{name}[{i}]"


class TestTraining:
    def test_toy_dataset_memorized(self):
        rng = np.random.default_rng(9)
        sequences = random_batch(rng, 8, vocab=40)
        labels = np.array([0, 1, 2, 3, 0, 1, 2, 3])
        config = CnnTrainConfig(epochs=500, batch_size=4, seed=5)
        model = train_cnn(sequences, labels, vocab_size=40, config=config)
        preds, _ = predict_cnn(model, sequences)
        assert np.array_equal(preds, labels)

    def test_bitwise_deterministic(self):
        rng = np.random.default_rng(10)
        sequences = random_batch(rng, 12, vocab=25)
        labels = np.array([0, 1, 2, 3] * 3)
        config = CnnTrainConfig(epochs=5, batch_size=4, seed=77)
        m1 = train_cnn(sequences, labels, vocab_size=25, config=config)
        m2 = train_cnn(sequences, labels, vocab_size=25, config=config)
        for name in m1.params:
            assert np.array_equal(m1.params[name], m2.params[name]), name

    def test_empty_dataset(self):
        with pytest.raises(ValueError):
            train_cnn(np.zeros((0, 64), dtype=np.int64), np.zeros(0, dtype=np.int64), vocab_size=5)
