import json

import numpy as np
import numpy.testing as npt
import pytest
from pydantic import ValidationError

from autodiff import Graph
from conftest import make_net
from errors import DimensionError, FormatError, ShapeChainError
from model import (
    MlpSpec,
    ModelState,
    count_loss_evals,
    cross_entropy,
    dumps_checkpoint,
    evaluate,
    forward_loss,
    init_state,
    load_checkpoint,
    loads_checkpoint,
    mse,
    predict,
    save_checkpoint,
)
from tensor import RngStream, Stream


def _softmax_nll(logits, labels):
    p = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
    return -np.log(p[np.arange(len(labels)), labels])


def test_cross_entropy_matches_direct_softmax():
    rng = np.random.default_rng(0)
    logits = rng.normal(size=(5, 3))
    labels = np.array([0, 2, 1, 1, 0])
    loss = cross_entropy(Graph().constant(logits), labels)
    assert loss.item() == pytest.approx(_softmax_nll(logits, labels).mean(), abs=1e-12)
    assert loss.item() >= 0.0


def test_batch_loss_is_mean_of_single_example_losses():
    state, (X, Y) = make_net([3, 4, 3], seed=2, batch_size=6)
    whole = forward_loss(state, (X, Y)).loss.item()
    singles = [forward_loss(state, (X[i:i + 1], Y[i:i + 1])).loss.item() for i in range(6)]
    assert whole == pytest.approx(np.mean(singles), abs=1e-12)


def test_cross_entropy_rejects_bad_labels():
    logits = Graph().constant(np.zeros((2, 3)))
    with pytest.raises(DimensionError):
        cross_entropy(logits, [0, 3])
    with pytest.raises(DimensionError):
        cross_entropy(logits, [0, 1, 2])


def test_mse_averages_over_every_entry():
    outputs = Graph().constant(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert mse(outputs, np.zeros((2, 2))).item() == pytest.approx(7.5)


def test_spec_validation():
    with pytest.raises(ValidationError):
        MlpSpec(widths=[2, 2])
    with pytest.raises(ValidationError):
        MlpSpec(widths=[2, 0, 2])
    with pytest.raises(ValidationError):
        MlpSpec(widths=[2, 3, 2], flatness_layer=3)
    with pytest.raises(ValidationError):
        MlpSpec(widths=[2, 3, 2], use_bias=[True])
    spec = MlpSpec(widths=[2, 5, 4, 3])
    assert spec.layer == 2
    assert spec.weight_shape(2) == (4, 5)


def test_state_rejects_broken_shape_chain():
    spec = MlpSpec(widths=[2, 3, 2], use_bias=False)
    with pytest.raises(ShapeChainError):
        ModelState(spec=spec, weights=(np.zeros((3, 2)), np.zeros((3, 2))))
    with pytest.raises(ShapeChainError):
        ModelState(spec=spec, weights=(np.zeros((3, 2)),))


def test_init_is_seeded():
    spec = MlpSpec(widths=[2, 4, 2])
    a = init_state(spec, RngStream(3, Stream.INIT))
    b = init_state(spec, RngStream(3, Stream.INIT))
    for wa, wb in zip(a.parameters(), b.parameters()):
        npt.assert_array_equal(wa, wb)
    assert all(np.all(bias == 0) for bias in a.biases)


def test_forward_checks_input_width():
    state, (X, Y) = make_net([2, 3, 2])
    with pytest.raises(DimensionError):
        forward_loss(state, (np.ones((4, 3)), Y[:4]))


def test_forward_counts_loss_evaluations():
    state, batch = make_net([2, 3, 2])
    with count_loss_evals() as counter:
        forward_loss(state, batch)
        forward_loss(state, batch)
    assert counter.count == 2


@pytest.mark.parametrize("activation", ["tanh", "relu", "softplus"])
def test_predict_agrees_with_recorded_forward(activation):
    state, batch = make_net([3, 5, 4, 2], activation=activation, seed=1)
    forward = forward_loss(state, batch)
    npt.assert_allclose(predict(state, batch[0]), forward.outputs.value, rtol=1e-12, atol=1e-14)


def test_evaluate_reports_accuracy_for_classifiers():
    state, batch = make_net([2, 3, 2], batch_size=10)
    result = evaluate(state, batch)
    assert result.n == 10
    assert 0.0 <= result.accuracy <= 1.0

    reg_state, reg_batch = make_net([2, 3, 2], loss="mse")
    assert evaluate(reg_state, reg_batch).accuracy is None


def test_checkpoint_round_trip_is_byte_identical(tmp_path):
    state, _ = make_net([2, 4, 3, 2], seed=5, use_bias=[True, False, True])
    path = save_checkpoint(state, tmp_path / "ckpt.json")
    loaded = load_checkpoint(path)
    for a, b in zip(state.parameters(), loaded.parameters()):
        npt.assert_array_equal(a, b)
    assert loaded.biases[1] is None
    assert dumps_checkpoint(loaded) == path.read_text(encoding="utf-8")


def test_checkpoint_errors_name_the_problem():
    state, _ = make_net([2, 3, 2])
    doc = json.loads(dumps_checkpoint(state))

    with pytest.raises(FormatError):
        loads_checkpoint("{not json")

    bad_format = dict(doc, format="other")
    with pytest.raises(FormatError, match="format"):
        loads_checkpoint(json.dumps(bad_format))

    bad_type = dict(doc, weights="oops")
    with pytest.raises(FormatError, match="weights"):
        loads_checkpoint(json.dumps(bad_type))

    short = dict(doc, weights=[doc["weights"][0][:-1], doc["weights"][1]])
    with pytest.raises(ShapeChainError):
        loads_checkpoint(json.dumps(short))


def test_loss_ignores_row_order():
    state, (X, Y) = make_net([2, 4, 3, 2], seed=7, batch_size=9)
    order = np.random.default_rng(0).permutation(9)
    a = forward_loss(state, (X, Y)).loss.item()
    b = forward_loss(state, (X[order], Y[order])).loss.item()
    assert b == pytest.approx(a, rel=1e-12)


def test_mse_is_zero_on_its_own_predictions():
    state, (X, _) = make_net([3, 4, 2], loss="mse", seed=2)
    assert forward_loss(state, (X, predict(state, X))).loss.item() == pytest.approx(0.0, abs=1e-20)


def test_cross_entropy_of_uniform_logits_is_log_two():
    spec = MlpSpec(widths=[2, 3, 2], use_bias=False)
    state = init_state(spec, RngStream(0, Stream.INIT))
    state = state.with_weights([state.weights[0], np.zeros((2, 3))])
    X = RngStream(0, Stream.DATA).normal((6, 2))
    loss = forward_loss(state, (X, np.array([0, 1, 1, 0, 1, 0]))).loss
    assert loss.item() == pytest.approx(np.log(2.0), abs=1e-15)


def test_curvature_passes_are_counted_apart():
    state, batch = make_net([2, 3, 2])
    with count_loss_evals() as counter:
        forward = forward_loss(state, batch)
        forward_loss(state, batch, params=forward.params, curvature=True)
    assert (counter.count, counter.curvature) == (1, 1)
