import io
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rscn.configurator import ScnConfig, build_round
from rscn.exceptions import ContractViolation, DeserializationError, EmptyModel
from rscn.model import (
    ActivationKind,
    HiddenNode,
    Normalization,
    ScnModel,
    activate,
    forward,
    load_model,
    node_output,
    save_model,
)

SIG = ActivationKind.SIGMOID


def test_activate_symmetry_point():
    assert activate(SIG, 0.0) == 0.5


def test_activate_closed_form():
    assert activate(SIG, 1.0) == pytest.approx(0.7310585786, abs=1e-10)


@given(st.floats(-700, 700))
def test_activate_complement(z):
    assert activate(SIG, z) + activate(SIG, -z) == pytest.approx(1.0, abs=1e-15)


@given(st.floats(-30, 30))
def test_activate_open_interval(z):
    assert 0.0 < activate(SIG, z) < 1.0


def test_activate_monotone_and_overflow_free():
    z = np.linspace(-2000, 2000, 4001)
    with np.errstate(all="raise"):
        out = activate(SIG, z)
    assert np.all(np.diff(out) >= 0)
    assert np.all(np.isfinite(out))


def test_node_output_zero_node():
    x = np.random.default_rng(0).standard_normal((5, 3))
    np.testing.assert_array_equal(node_output(HiddenNode(np.zeros(3), 0.0), x), np.full(5, 0.5))


def test_node_output_matches_scalar_sigmoid():
    out = node_output(HiddenNode([1.0], 0.0), np.array([[0.0], [1.0]]))
    np.testing.assert_allclose(out, [0.5, 0.7310585786], atol=1e-10)


def test_node_output_empty_batch():
    assert node_output(HiddenNode([1.0, 2.0], 0.0), np.zeros((0, 2))).shape == (0,)


def test_node_output_dimension_mismatch():
    with pytest.raises(ContractViolation):
        node_output(HiddenNode([1.0, 2.0], 0.0), np.zeros((4, 3)))


def _model(rng, n_nodes=4, d=2, m=1, beta=None, norm=None):
    w = rng.uniform(-3, 3, (n_nodes, d))
    b = rng.uniform(-3, 3, n_nodes)
    if beta is None:
        beta = rng.standard_normal((n_nodes, m))
    return ScnModel(w, b, beta, d, m, SIG, norm)


def test_forward_zero_beta():
    rng = np.random.default_rng(1)
    model = _model(rng, n_nodes=1, beta=np.zeros((1, 1)))
    assert not forward(model, rng.standard_normal((6, 2))).any()


def test_forward_identical_nodes_cancel():
    model = ScnModel([[0.7], [0.7]], [0.1, 0.1], [[1.0], [-1.0]], 1, 1)
    assert not forward(model, np.linspace(-1, 1, 9)[:, None]).any()


def test_forward_empty_model():
    with pytest.raises(EmptyModel):
        forward(ScnModel(np.zeros((0, 2)), [], np.zeros((0, 1)), 2, 1), np.zeros((3, 2)))


def test_forward_constant_target_single_node_fit():
    # a near-zero scope makes the node output flat, so one node reproduces a constant
    x = np.linspace(0, 1, 50)[:, None]
    t = np.full((50, 1), 0.5)
    model, trace = build_round(x, t, None, ScnConfig(l_max=1, epsilon=0.0, scopes=(1e-7,), seed=0))
    assert model.n_nodes == 1
    np.testing.assert_allclose(forward(model, x), t, atol=1e-6)


def test_forward_linear_in_beta_and_shape():
    rng = np.random.default_rng(2)
    b1 = rng.standard_normal((5, 3))
    b2 = rng.standard_normal((5, 3))
    base = _model(rng, n_nodes=5, d=2, m=3, beta=b1)
    x = rng.standard_normal((11, 2))
    summed = forward(base.with_beta(b1 + b2), x)
    assert summed.shape == (11, 3)
    np.testing.assert_allclose(summed, forward(base, x) + forward(base.with_beta(b2), x), atol=1e-12)


def test_forward_raw_applies_normalization():
    norm = Normalization([[-1.0, 1.0]], [[10.0, 20.0]])
    model = ScnModel([[2.0]], [-1.0], [[1.0]], 1, 1, SIG, norm)
    x_raw = np.array([[-1.0], [0.0], [1.0]])
    x_unit = (x_raw + 1.0) / 2.0
    np.testing.assert_allclose(forward(model, x_raw, raw=True), 10.0 + 10.0 * forward(model, x_unit))


def test_nodes_view_matches_arrays():
    model = _model(np.random.default_rng(3), n_nodes=3)
    nodes = model.nodes
    assert len(nodes) == 3
    np.testing.assert_array_equal(nodes[1].w, model.weights[1])
    assert ScnModel.from_nodes(nodes, model.beta, 2, 1) == model


def test_beta_row_count_must_match_nodes():
    with pytest.raises(ContractViolation):
        ScnModel(np.zeros((2, 1)), [0.0, 0.0], np.zeros((3, 1)), 1, 1)


@pytest.mark.parametrize("with_norm", [False, True])
def test_save_load_round_trip_is_exact(tmp_path, with_norm):
    rng = np.random.default_rng(4)
    norm = Normalization(rng.standard_normal((2, 2)), rng.standard_normal((3, 2))) if with_norm else None
    model = _model(rng, n_nodes=6, d=2, m=3, norm=norm)
    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded == model
    assert loaded.weights.tobytes() == model.weights.tobytes()
    assert loaded.beta.tobytes() == model.beta.tobytes()
    if with_norm:
        assert loaded.normalization.output_ranges.tobytes() == norm.output_ranges.tobytes()


def test_save_to_file_object():
    model = _model(np.random.default_rng(5))
    buf = io.StringIO()
    save_model(model, buf)
    buf.seek(0)
    assert load_model(buf) == model


def test_truncated_file_reports_offset(tmp_path):
    model = _model(np.random.default_rng(6))
    path = tmp_path / "model.json"
    save_model(model, path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(DeserializationError) as info:
        load_model(path)
    assert info.value.offset is not None
    assert 0 < info.value.offset <= len(data) // 2
    assert "byte offset" in str(info.value)


def test_version_mismatch_names_versions():
    buf = io.StringIO()
    save_model(_model(np.random.default_rng(7)), buf)
    doc = json.loads(buf.getvalue())
    doc["version"] = 99
    with pytest.raises(DeserializationError, match="99.*1"):
        load_model(io.StringIO(json.dumps(doc)))


def test_inconsistent_node_count_rejected():
    buf = io.StringIO()
    save_model(_model(np.random.default_rng(8), n_nodes=3), buf)
    doc = json.loads(buf.getvalue())
    doc["L"] = 4
    with pytest.raises(DeserializationError):
        load_model(io.StringIO(json.dumps(doc)))
