import numpy as np
import pytest

from rgl.errors import FormatError, ParameterError, TrainingError
from rgl.models import (Classifier, accuracy, full_batch_loss, grad_check, load_model,
                        save_model, train)
from rgl.rng import RngStream
from rgl.synthetic import gen_t1


def test_affine_logits_and_decision():
    m = Classifier.affine(np.eye(3)[0], 0.0)
    x = 2 * np.eye(3)[0]
    assert m.logits(x)[0] == 2.0 and m.decision(x) == 1
    assert m.decision(-x) == -1
    assert np.array_equal(m.class_gradient(RngStream(0).normal(3), 1), np.eye(3)[0])


def test_zero_weights_tie_to_lowest():
    m = Classifier([np.zeros((4, 5)), np.zeros((3, 4))], [np.zeros(4), np.full(3, 0.7)])
    x = RngStream(1).normal(5)
    assert np.allclose(m.logits(x), 0.7) and m.decision(x) == 0
    assert np.all(m.class_gradient(np.zeros(5), 2) == 0)


def test_argmax_scale_invariance():
    r = RngStream(2)
    m = Classifier.mlp(6, [8], 4, r)
    scaled = m.copy()
    scaled.weights[-1] *= 3.7
    scaled.biases[-1] *= 3.7
    x = r.normal((100, 6))
    assert np.array_equal(m.decision(x), scaled.decision(x))


def test_dimension_mismatch():
    m = Classifier.affine(np.ones(3))
    with pytest.raises(ParameterError):
        m.logits(np.ones(4))
    with pytest.raises(ParameterError):
        m.class_gradient(np.ones(3), 2)


def test_jacobian_rows_match_class_gradient():
    r = RngStream(3)
    m = Classifier.mlp(5, [7, 7], 3, r)
    x = r.normal(5)
    jac = m.score_jacobian(x)
    for k in range(3):
        np.testing.assert_allclose(jac[k], m.class_gradient(x, k), rtol=1e-12, atol=1e-15)


def test_grad_check_passes():
    r = RngStream(4)
    assert grad_check(Classifier.affine(r.normal((1, 10))), 20, 1e-10, r).passed
    m = Classifier.mlp(20, [200] * 5, 3, r)
    rep = grad_check(m, 100, 1e-4, r)
    assert rep.passed and rep.checked == 100


def test_grad_check_catches_mutation():
    r = RngStream(5)
    m = Classifier.mlp(10, [30, 30], 2, r)

    def broken(model, x, k):
        # drops the first input weight's contribution
        g = model.class_gradient(x, k).copy()
        w0 = model.weights[0].copy()
        w0[:, 0] = 0
        pruned = Classifier([w0] + model.weights[1:], model.biases)
        g[0] = pruned.class_gradient(x, k)[0]
        return g

    assert not grad_check(m, 10, 1e-4, r, gradient=broken).passed


def test_train_logistic_t1():
    r = RngStream(6)
    ds = gen_t1(5.0, 1.0, 2000, 20, r.split(0))
    rep = train(Classifier.mlp(20, [], 1, r.split(1)), ds.x, ds.y, r.split(2), epochs=20)
    assert rep.train_accuracy == 1.0
    assert len(rep.epoch_losses) == 20


def test_train_mlp_t1_generalizes():
    r = RngStream(7)
    ds = gen_t1(5.0, 1.0, 2000, 20, r.split(0))
    test = gen_t1(5.0, 1.0, 500, 20, r.split(3), rotation=ds.rotation)
    rep = train(Classifier.mlp(20, [100] * 3, 1, r.split(1)), ds.x, ds.y, r.split(2), epochs=20)
    assert rep.train_accuracy == 1.0 and accuracy(rep.model, test.x, test.y) == 1.0


def test_single_sample_fits():
    r = RngStream(8)
    x = r.normal((1, 5))
    rep = train(Classifier.mlp(5, [10], 1, r), x, np.array([-1]), r, epochs=500)
    assert rep.train_accuracy == 1.0


def test_multiclass_training():
    r = RngStream(9)
    centers = 4 * r.normal((3, 6))
    y = r.integers(3, 600)
    x = centers[y] + 0.3 * r.normal((600, 6))
    rep = train(Classifier.mlp(6, [16], 3, r), x, y, r, epochs=30)
    assert rep.train_accuracy > 0.98


def test_training_deterministic():
    ds = gen_t1(5.0, 1.0, 300, 10, RngStream(10))
    runs = [train(Classifier.mlp(10, [8], 1, RngStream(1)), ds.x, ds.y, RngStream(2), epochs=5)
            for _ in range(2)]
    for a, b in zip(runs[0].model.weights, runs[1].model.weights):
        assert np.array_equal(a, b)


def test_full_batch_affine_loss_nonincreasing():
    ds = gen_t1(2.0, 1.0, 200, 5, RngStream(11))
    losses = [full_batch_loss(train(Classifier.affine(np.zeros(5)), ds.x, ds.y, RngStream(0),
                                    epochs=e, batch_size=200).model, ds.x, ds.y)
              for e in (1, 2, 4, 8, 16)]
    assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))


def test_standardize_folds_into_first_layer():
    r = RngStream(12)
    x = 50 * r.normal((200, 4)) + 7
    y = np.where(x[:, 0] > 7, 1, -1)
    rep = train(Classifier.affine(np.zeros(4)), x, y, r, epochs=200, standardize=True)
    assert rep.train_accuracy == accuracy(rep.model, x, y) > 0.97
    w = rep.model.weights[0][0]
    # the folded boundary sits near x_0 = 7
    assert abs(-rep.model.biases[0][0] / w[0] - 7) < 5


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_raises():
    r = RngStream(13)
    x = 1e200 * r.normal((10, 3))
    with pytest.raises(TrainingError) as exc:
        train(Classifier.mlp(3, [4], 1, r), x, np.ones(10), r, epochs=3, lr_max=1e10)
    assert 0 <= exc.value.epoch < 3


def test_checkpoint_roundtrip(tmp_path):
    r = RngStream(14)
    m = Classifier.mlp(6, [5, 4], 2, r)
    save_model(m, tmp_path / "ck")
    back = load_model(tmp_path / "ck")
    for a, b in zip(m.weights, back.weights):
        assert np.array_equal(a.astype(np.float32), b)
    (tmp_path / "ck" / "model.json").write_text("{")
    with pytest.raises(FormatError):
        load_model(tmp_path / "ck")
