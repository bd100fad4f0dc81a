import numpy as np
import pytest

from conftest import linear_model_config, linear_task
from utils.errors import DimensionMismatch, NonFiniteLoss
from utils.pipeline import process_graph
from utils.shallow_model import ShallowModel
from utils.training import (
    Adam, GraphDataset, ReduceLROnPlateau, TrainConfig, predict, train
)


def _dataset(items, selection, split='train'):
    bundles = [process_graph(graph_id, g, selection) for graph_id, g, _ in items]
    labels = np.array([[label] for _, _, label in items])
    return GraphDataset.from_bundles(bundles, labels, selection, split=split)


@pytest.fixture
def linear_data():
    rng = np.random.default_rng(42)
    items = linear_task(rng, 200)
    config = linear_model_config()
    sel = config.selection()
    return config, _dataset(items[:160], sel), _dataset(items[160:], sel, 'valid')


class TestTrainConfig:
    def test_defaults(self):
        config = TrainConfig()
        assert config.optimizer == 'adam' and config.scheduler == 'none'

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rte=0.1)

    def test_zero_learning_rate_allowed(self):
        assert TrainConfig(learning_rate=0.0).learning_rate == 0.0


class TestTrain:
    def test_zero_learning_rate_freezes_parameters(self, linear_data):
        config, train_set, _ = linear_data
        model = ShallowModel.initialize(config, 2, seed=0)
        result = train(train_set, model, TrainConfig(learning_rate=0.0, epochs=3))
        for name, value in model.params.items():
            assert np.array_equal(result.model.params[name], value)
        assert len(result.history) == 3

    def test_input_model_untouched(self, linear_data):
        config, train_set, _ = linear_data
        model = ShallowModel.initialize(config, 2, seed=0)
        before = model.to_state()
        train(train_set, model, TrainConfig(learning_rate=0.05, epochs=2))
        assert all(np.array_equal(before[k], model.params[k]) for k in before)

    def test_same_seed_is_bitwise_identical(self, linear_data):
        config, train_set, valid_set = linear_data
        runs = []
        for _ in range(2):
            model = ShallowModel.initialize(config, 2, seed=3)
            runs.append(train(train_set, model, TrainConfig(learning_rate=0.01, epochs=5, seed=3), valid_set))
        first, second = runs
        assert [{k: v for k, v in row.items()} for row in first.history] == second.history
        for name in first.model.params:
            assert np.array_equal(first.model.params[name], second.model.params[name])

    def test_realizable_linear_task(self, linear_data):
        config, train_set, valid_set = linear_data
        model = ShallowModel.initialize(config, 2, seed=0)
        settings = TrainConfig(learning_rate=0.01, epochs=500, batch_size=32, seed=0,
                               scheduler='step', step_size=100, step_factor=0.5)
        result = train(train_set, model, settings, valid_set)
        train_mse = float(np.mean((predict([result.model], train_set) - train_set.labels) ** 2))
        assert train_mse < 1e-4
        assert result.final['valid_loss'] < 1e-3
        assert result.final['epoch'] == 500

    def test_history_columns(self, linear_data):
        config, train_set, valid_set = linear_data
        model = ShallowModel.initialize(config, 2, seed=0)
        result = train(train_set, model, TrainConfig(epochs=2), valid_set)
        assert set(result.final) == {'epoch', 'lr', 'train_loss', 'valid_loss', 'valid_mae', 'valid_rmse', 'valid_r2'}

    def test_step_schedule(self, linear_data):
        config, train_set, _ = linear_data
        model = ShallowModel.initialize(config, 2, seed=0)
        result = train(train_set, model, TrainConfig(learning_rate=0.1, epochs=5, scheduler='step',
                                                     step_size=2, step_factor=0.5))
        assert [row['lr'] for row in result.history] == [0.1, 0.1, 0.05, 0.05, 0.025]

    def test_non_finite_loss_reports_position(self, linear_data):
        config, train_set, _ = linear_data
        labels = train_set.labels.copy()
        labels[:] = np.inf
        broken = GraphDataset(train_set.ids, train_set.matrices, labels)
        with pytest.raises(NonFiniteLoss) as info:
            train(broken, ShallowModel.initialize(config, 2, seed=0), TrainConfig(epochs=1))
        assert info.value.epoch == 1
        assert info.value.batch == 0

    def test_task_count_mismatch(self, linear_data):
        _, train_set, _ = linear_data
        model = ShallowModel.initialize(linear_model_config(output_dim=2), 2, seed=0)
        with pytest.raises(DimensionMismatch):
            train(train_set, model, TrainConfig(epochs=1))


class TestOptimizers:
    def test_adamw_decays_weights_only(self):
        params = {'embed.weight': np.ones((2, 2)), 'embed.bias': np.ones(2)}
        optimizer = Adam(params, lr=0.1, decoupled_weight_decay=0.5)
        optimizer.step(params, {k: np.zeros_like(v) for k, v in params.items()})
        assert np.allclose(params['embed.weight'], 0.95)
        assert np.array_equal(params['embed.bias'], np.ones(2))

    def test_adam_first_step_moves_by_lr(self):
        params = {'head.bias': np.array([1.0, 1.0])}
        Adam(params, lr=0.01).step(params, {'head.bias': np.array([3.0, -0.2])})
        assert np.allclose(params['head.bias'], [0.99, 1.01])

    def test_plateau_halves_after_patience(self):
        params = {'head.bias': np.zeros(1)}
        optimizer = Adam(params, lr=1.0)
        schedule = ReduceLROnPlateau(optimizer, factor=0.5, patience=2, min_lr=0.3)
        for loss in (1.0, 1.0, 1.0):
            schedule.step(loss)
        assert optimizer.lr == 0.5
        for loss in (1.0, 1.0):
            schedule.step(loss)
        assert optimizer.lr == 0.3


def test_dataset_shape_check(linear_data):
    _, train_set, _ = linear_data
    with pytest.raises(DimensionMismatch):
        GraphDataset(train_set.ids, train_set.matrices, np.zeros((3, 1)))
