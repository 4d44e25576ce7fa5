import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from hodgenet.complex import build_complex
from hodgenet.errors import NonFiniteError
from hodgenet.features import assemble_features
from hodgenet.model import (
    Adam, SGD, Dist2CycleModel, ModelConfig, Sample, TrainConfig, backward, constant_baseline, evaluate,
    forward, kaiming_init, laplacian_smooth, load_checkpoint, loss_mse, normalized_edge_laplacian,
    prepare_sample, save_checkpoint, scale_features, train,
)
from hodgenet.oracle import hop_distance_target, optimal_h1_basis

from conftest import hexagon_annulus


def _toy_graph(n=10, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.uniform(-0.5, 0.5, (n, n)) * (rng.uniform(size=(n, n)) < 0.4)
    A = A + A.T + np.eye(n)
    return sp.csr_matrix(A)


def _toy(seed=0, layers=3, hidden=8, f=4, n=10):
    rng = np.random.default_rng(seed)
    model = Dist2CycleModel(ModelConfig(in_features=f, num_layers=layers, hidden=hidden), seed=seed)
    X = rng.standard_normal((n, f))
    y = rng.uniform(size=n)
    return model, _toy_graph(n, seed), X, y


# -- init -----------------------------------------------------------------------

def test_kaiming_bound_and_determinism():
    W = kaiming_init((8, 128), np.random.default_rng(0), 0.02)
    b = math.sqrt(6 / 8) * math.sqrt(2 / 1.0004)
    assert np.abs(W).max() <= b
    assert np.abs(W).max() > 0.95 * b
    assert np.array_equal(W, kaiming_init((8, 128), np.random.default_rng(0), 0.02))


def test_kaiming_mean_statistics():
    W = kaiming_init((100, 1000), np.random.default_rng(1), 0.02)
    b = math.sqrt(2 / 1.0004) * math.sqrt(6 / 100)
    se = (b / math.sqrt(3)) / math.sqrt(W.size)
    assert abs(W.mean()) < 3 * se
    assert W.var() == pytest.approx(b * b / 3, rel=0.02)


def test_model_shapes():
    m = Dist2CycleModel(ModelConfig())
    assert [w.shape for w in m.weights] == [(8, 128)] + [(128, 128)] * 10 + [(128, 1)]
    with pytest.raises(ValueError):
        Dist2CycleModel(ModelConfig(num_layers=2, hidden=4, in_features=3), [np.zeros((3, 4)), np.zeros((5, 1))])
    with pytest.raises(NonFiniteError):
        Dist2CycleModel(ModelConfig(num_layers=1, in_features=1), [np.array([[np.nan]])])


# -- forward ------------------------------------------------------------------------

def test_zero_weights_give_zero_output():
    model, S, X, _ = _toy()
    model.weights = [np.zeros_like(w) for w in model.weights]
    assert np.array_equal(forward(model, S, X), np.zeros(10))


def test_single_node_closed_form():
    model = Dist2CycleModel(ModelConfig(in_features=1, num_layers=1), [np.array([[0.7]])])
    y = forward(model, sp.csr_matrix([[1 / 3]]), np.array([[2.0]]))
    assert y[0] == pytest.approx(math.tanh(2.0 * 0.7 / 3))


def test_forward_shape_errors():
    model, S, X, _ = _toy()
    with pytest.raises(ValueError):
        forward(model, S, X[:5])
    with pytest.raises(ValueError):
        forward(model, S, X[:, :2])


def test_nonfinite_layer_reported():
    model, S, X, _ = _toy()
    model.weights[1][0, 0] = np.inf
    with pytest.raises(NonFiniteError) as exc:
        forward(model, S, X)
    assert exc.value.layer == 1


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000))
def test_permutation_equivariance(seed):
    model, S, X, _ = _toy(seed)
    p = np.random.default_rng(seed).permutation(10)
    Sp = S[p][:, p]
    assert np.allclose(forward(model, Sp, X[p]), forward(model, S, X)[p], atol=1e-13)


def test_output_range():
    model, S, X, _ = _toy(layers=4, hidden=16)
    y = forward(model, S, 100 * X)
    assert np.all(np.abs(y) <= 1)


# -- loss and gradients --------------------------------------------------------------

def test_loss_examples():
    assert loss_mse([0.5, 0.0], [0.0, 0.0]) == 0.125
    assert loss_mse(np.zeros(7), np.ones(7)) == 1.0
    assert loss_mse([0.3], [0.3]) == 0.0
    with pytest.raises(ValueError):
        loss_mse([], [])
    with pytest.raises(ValueError):
        loss_mse([1.0], [1.0, 2.0])


def _finite_difference(model, S, X, y, h=1e-4):
    out = []
    for w in model.weights:
        g = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            old = w[idx]
            w[idx] = old + h
            up = loss_mse(forward(model, S, X), y)
            w[idx] = old - h
            dn = loss_mse(forward(model, S, X), y)
            w[idx] = old
            g[idx] = (up - dn) / (2 * h)
        out.append(g)
    return out


def test_gradient_check():
    model, S, X, y = _toy(seed=7)
    loss, grads = backward(model, S, X, y)
    assert loss == pytest.approx(loss_mse(forward(model, S, X), y))
    num = _finite_difference(model, S, X, y)
    for g, n in zip(grads, num):
        rel = np.abs(g - n) / np.maximum(np.maximum(np.abs(g), np.abs(n)), 1e-8)
        assert rel.max() <= 1e-4


def test_zero_loss_zero_gradient():
    model, S, X, _ = _toy()
    y = forward(model, S, X)
    loss, grads = backward(model, S, X, y)
    assert loss == 0.0
    assert all(not g.any() for g in grads)


def test_last_layer_gradient_one_node():
    model = Dist2CycleModel(ModelConfig(in_features=2, num_layers=2, hidden=3), seed=3)
    S = sp.csr_matrix([[0.4]])
    X = np.array([[0.5, -1.0]])
    t = np.array([0.2])
    _, grads = backward(model, S, X, t)
    Z0 = 0.4 * X @ model.weights[0]
    H1 = np.where(Z0 > 0, Z0, 0.02 * Z0)
    y = np.tanh(0.4 * H1 @ model.weights[1])
    signal = 2 * (y - t) * (1 - y ** 2)
    assert np.allclose(grads[1], (S.T @ H1).T @ signal[:, None])


# -- optimizers -----------------------------------------------------------------------

def test_adam_first_step_size():
    p = [np.array([1.0, -2.0])]
    opt = Adam(lr=0.1)
    opt.step(p, [np.array([3.0, -0.5])])
    assert np.allclose(p[0], [0.9, -1.9], atol=1e-6)


def test_sgd_step():
    p = [np.array([1.0])]
    SGD(lr=0.5).step(p, [np.array([2.0])])
    assert p[0][0] == 0.0


# -- smoothing ----------------------------------------------------------------------------

def test_smoothing_kernel_and_eigenvectors():
    K = hexagon_annulus()
    Lh = normalized_edge_laplacian(K).toarray()
    w, V = np.linalg.eigh(Lh)
    assert np.allclose(laplacian_smooth(K, V[:, 0]), V[:, 0]) and abs(w[0]) < 1e-12
    for j in (3, 10):
        assert np.allclose(laplacian_smooth(K, V[:, j]), (1 - w[j]) * V[:, j])


def test_smoothing_isolated_edge_passes_through():
    K = build_complex([[0, 1], [2, 3], [3, 4]])
    x = np.array([0.3, 0.9, 0.1])
    out = laplacian_smooth(K, x)
    assert out[0] == 0.3
    with pytest.raises(ValueError):
        laplacian_smooth(K, np.ones(2))


def test_smoothing_reduces_roughness():
    K = hexagon_annulus()
    Lh = normalized_edge_laplacian(K)
    x = np.random.default_rng(0).uniform(size=K.count(1))
    assert np.linalg.norm(Lh @ laplacian_smooth(K, x)) <= np.linalg.norm(Lh @ x)


# -- training, evaluation, checkpoints -------------------------------------------------------

def _samples():
    out = []
    for m in (6, 8):
        from hodgenet.dataset.shapes import annulus_complex, double_annulus

        for K in (annulus_complex(m), double_annulus(m)):
            T = hop_distance_target(K, optimal_h1_basis(K))
            F = assemble_features(K, 1, 5)
            out.append(prepare_sample(K, F, T, f"s{len(out)}"))
    return out


def _entries(samples):
    from hodgenet.complex import betti_numbers

    return [{"simplex_counts": s.complex.counts(), "betti": betti_numbers(s.complex, 1),
             "max_cycle_len": 6} for s in samples]


def test_training_descends_and_is_deterministic(tmp_path):
    samples = _samples()
    cfg = TrainConfig(epochs=15, batch=2, seed=1, checkpoint_every=5)
    mc = ModelConfig(in_features=8, num_layers=3, hidden=16)
    a = train(samples, Dist2CycleModel(mc, seed=1), cfg, checkpoint_path=str(tmp_path / "a.bin"))
    b = train(samples, Dist2CycleModel(mc, seed=1), cfg)
    assert a.loss_history == b.loss_history
    assert a.loss_history[-1] < a.loss_history[0]
    assert all(x >= 0 for x in a.loss_history)
    # resuming from the epoch-10 checkpoint reproduces the uninterrupted run
    cfg10 = TrainConfig(epochs=10, batch=2, seed=1, checkpoint_every=5)
    train(samples, Dist2CycleModel(mc, seed=1), cfg10, checkpoint_path=str(tmp_path / "c.bin"))
    model, opt, header = load_checkpoint(str(tmp_path / "c.bin"))
    from hodgenet.model import TrainState

    st = TrainState(model, opt, header["epoch"], header["loss_history"])
    c = train(samples, model, cfg, state=st)
    assert c.loss_history == a.loss_history
    assert all(np.array_equal(x, y) for x, y in zip(c.model.weights, a.model.weights))


def test_divergence_aborts(tmp_path):
    samples = _samples()
    model = Dist2CycleModel(ModelConfig(in_features=8, num_layers=2, hidden=4), seed=0)
    cfg = TrainConfig(epochs=3, batch=2, optimizer="sgd", lr=1e300)
    with pytest.raises(NonFiniteError):
        with np.errstate(all="ignore"):
            train(samples, model, cfg, checkpoint_path=str(tmp_path / "d.bin"))
    good, _, _ = load_checkpoint(str(tmp_path / "d.bin"))
    assert all(np.all(np.isfinite(w)) for w in good.weights)


def test_checkpoint_roundtrip_and_validation(tmp_path):
    model = Dist2CycleModel(ModelConfig(in_features=8, num_layers=3, hidden=5), seed=4)
    opt = Adam()
    opt.step(model.weights, [np.ones_like(w) for w in model.weights])
    path = str(tmp_path / "m.bin")
    save_checkpoint(path, model, opt, epoch=7, loss_history=[0.5, 0.25])
    back, bopt, header = load_checkpoint(path)
    assert header["epoch"] == 7 and header["loss_history"] == [0.5, 0.25]
    assert all(np.array_equal(a, b) for a, b in zip(model.weights, back.weights))
    assert bopt.t == 1 and all(np.array_equal(a, b) for a, b in zip(opt.m, bopt.m))
    raw = open(path, "rb").read()
    (tmp_path / "bad.bin").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        load_checkpoint(str(tmp_path / "bad.bin"))
    (tmp_path / "short.bin").write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        load_checkpoint(str(tmp_path / "short.bin"))


def test_evaluate_perfect_and_bounded():
    samples = _samples()
    entries = _entries(samples)
    res = evaluate(None, samples, entries, predictions=[s.y.copy() for s in samples])
    assert res["overall"]["mse"] == 0.0
    assert all(r[2] == 0.0 for r in res["rows"])
    assert {r[0] for r in res["rows"]} == {"distance", "simplex_count", "betti1", "max_cycle_len"}
    worst = evaluate(None, samples, entries, predictions=[1.0 - np.round(s.y) for s in samples])
    assert all(0.0 <= r[2] <= 1.0 for r in worst["rows"])


def test_constant_predictor_uniform_labels():
    rng = np.random.default_rng(0)
    K = build_complex([[i, i + 1] for i in range(4000)])
    y = rng.uniform(size=K.count(1))
    s = Sample("u", K, sp.identity(len(y), format="csr"), np.zeros((len(y), 1)), y)
    mse, _ = constant_baseline([s], 0.5)
    assert mse == pytest.approx(1 / 12, abs=0.005)


def test_evaluate_missing_labels():
    s = _samples()[0]
    s.y = None
    with pytest.raises(ValueError):
        evaluate(None, [s], _entries([s]), predictions=[np.zeros(s.complex.count(1))])


def test_feature_scalings():
    K = hexagon_annulus()
    F = assemble_features(K, 1, 5)
    assert np.array_equal(scale_features(F, "raw"), F.values)
    U = scale_features(F, "unit_embed")
    assert np.allclose(np.sqrt((U[:, 3:] ** 2).mean(axis=0)), 1.0)
    Z = scale_features(F, "zscore")
    assert np.allclose(Z.mean(axis=0), 0.0)
    with pytest.raises(ValueError):
        scale_features(F, "nope")
