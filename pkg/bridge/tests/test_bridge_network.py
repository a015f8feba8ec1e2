from random import Random

import pytest
import torch

from evalbridge.config import BridgeConfig, load_config
from evalbridge.data import load_dataset, stable_label
from evalbridge.network import build_network, parameter_count
from evalbridge.training import one_cycle_values, train_and_evaluate

from bridge_helpers import TINY, primary_network_json, random_chromosome_text


def test_build_minimal_network_params_and_shape():
    network = primary_network_json("END|Conv1x1,Conv3x3")
    model = build_network(network)
    assert parameter_count(model) == network["total_params"]
    out = model(torch.randn(2, 3, 8, 8))
    assert out.shape == (2, network["num_classes"])


def test_build_multi_branch_cell_forward():
    text = "CPO,CPO,CPO|Conv3x1,Conv1x3,Conv3x3,Conv3x3;CPO,CPO,CPO|Conv1x1,Conv3x3,Conv3x3,Conv3x3"
    network = primary_network_json(text, stem=8)
    model = build_network(network)
    assert parameter_count(model) == network["total_params"]
    out = model(torch.randn(2, 3, 8, 8))
    assert out.shape == (2, 4)


def test_summation_nodes_execute():
    # CPI creates a node fed by both the cell input and its parent
    network = primary_network_json("CPI|Conv1x1,Conv3x3")
    model = build_network(network)
    out = model(torch.randn(2, 3, 8, 8))
    assert out.shape == (2, 4)


def test_unknown_layer_kind_rejected():
    with pytest.raises(ValueError):
        build_network({"layers": [{"kind": "wormhole"}]})


def test_unknown_conv_op_rejected():
    network = primary_network_json("END|Conv1x1,Conv3x3")
    cell_layer = next(l for l in network["layers"] if l["kind"] == "cell-instance")
    cell_layer["cell"]["nodes"][2]["op"] = "Conv9x9"
    with pytest.raises(ValueError):
        build_network(network)


def test_one_cycle_schedule_endpoints():
    cfg = BridgeConfig()
    total = 100
    lr0, mom0 = one_cycle_values(0, total, cfg)
    assert lr0 == pytest.approx(cfg.lr_start)
    assert mom0 == pytest.approx(cfg.momentum_start)
    lr_mid, mom_mid = one_cycle_values(50, total, cfg)
    assert lr_mid == pytest.approx(cfg.lr_max)
    assert mom_mid == pytest.approx(cfg.momentum_end)
    lr_end, mom_end = one_cycle_values(99, total, cfg)
    assert lr_end < 0.01
    assert mom_end > 0.94


def test_train_and_evaluate_returns_bounded_accuracy():
    torch.manual_seed(0)
    network = primary_network_json("SEQ|Conv1x1,Conv3x3", stem=4)
    model = build_network(network)
    dataset = load_dataset(TINY)
    train_y, val_y = dataset.labels(network["num_classes"])
    accuracy = train_and_evaluate(
        model, dataset.train_x, train_y, dataset.val_x, val_y, 1, TINY
    )
    assert 0.0 <= accuracy <= 1.0


def test_stable_labels_deterministic_and_in_range():
    for classes in (2, 4, 10):
        labels = [stable_label(i, classes) for i in range(500)]
        assert labels == [stable_label(i, classes) for i in range(500)]
        assert all(0 <= l < classes for l in labels)
        assert len(set(labels)) == classes  # every class occurs


def test_synthetic_dataset_deterministic():
    a = load_dataset(TINY)
    b = load_dataset(TINY)
    assert torch.equal(a.train_x, b.train_x)
    assert torch.equal(a.val_x, b.val_x)
    assert a.train_x.shape == (64, 3, 8, 8)
    assert a.val_x.shape == (32, 3, 8, 8)


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "bridge.conf"
    path.write_text("dataset = synthetic\nepochs = 3\nlr_max = 0.05\n# note\n")
    cfg = load_config(path)
    assert cfg.epochs == 3 and cfg.lr_max == 0.05


def test_config_validation():
    with pytest.raises(ValueError):
        BridgeConfig(dataset="imagenet")
    with pytest.raises(ValueError):
        BridgeConfig(epochs=0)
    with pytest.raises(ValueError):
        BridgeConfig(train_size=0)


def test_random_network_params_always_match():
    rng = Random(7)
    for _ in range(5):
        text = random_chromosome_text(rng, rng.choice([1, 2, 3]), rng.choice([1, 2]))
        network = primary_network_json(text, stem=rng.choice([4, 8]))
        assert parameter_count(build_network(network)) == network["total_params"]
