"""Generator and discriminator shapes, outputs and initialization."""

import numpy as np
import pytest

from src.errors import CheckpointError, ShapeError
from src.losses import loss_supervised_ce
from src.nets import DiscriminatorParams, GeneratorParams, discriminator_forward, generator_forward
from src.tensor import Tensor, backward, total
from src.toyscenes import Domain, SceneSpec, generate_scene, one_hot
from src.trainer import SGDMomentum


def test_generator_outputs_distributions(rng):
    params = GeneratorParams.initialize(5, seed=0)
    out = generator_forward(params, Tensor(rng.uniform(size=(2, 3, 32, 48))))
    assert out.shape == (2, 5, 32, 48)
    np.testing.assert_allclose(out.data.sum(axis=1), 1.0, atol=1e-12)


def test_generator_rejects_bad_sizes():
    params = GeneratorParams.initialize(3, seed=0)
    with pytest.raises(ShapeError):
        generator_forward(params, Tensor(np.zeros((1, 3, 20, 32))))
    with pytest.raises(ShapeError):
        generator_forward(params, Tensor(np.zeros((1, 3, 8, 8))))
    with pytest.raises(ShapeError):
        generator_forward(params, Tensor(np.zeros((1, 1, 32, 32))))


def test_generator_init_is_seed_deterministic():
    a = GeneratorParams.initialize(4, seed=11)
    b = GeneratorParams.initialize(4, seed=11)
    c = GeneratorParams.initialize(4, seed=12)
    assert list(a) == list(b)
    assert all(np.array_equal(a[n].data, b[n].data) for n in a)
    assert not np.array_equal(a["encoder.0.weight"].data, c["encoder.0.weight"].data)
    assert a.num_classes == 4


def test_generator_parameter_names():
    params = GeneratorParams.initialize(2, seed=0)
    assert list(params) == [
        "encoder.0.weight", "encoder.0.bias",
        "encoder.1.weight", "encoder.1.bias",
        "encoder.2.weight", "encoder.2.bias",
        "decoder.conv.weight", "decoder.conv.bias",
        "decoder.head.weight", "decoder.head.bias",
    ]


def test_discriminator_confidence_map(rng):
    params = DiscriminatorParams.initialize(5, seed=1)
    probs = rng.dirichlet(np.ones(5), size=(2, 32, 32)).transpose(0, 3, 1, 2)
    out = discriminator_forward(params, Tensor(probs))
    assert out.shape == (2, 1, 32, 32)
    assert out.data.min() > 0.0 and out.data.max() < 1.0
    assert params.num_classes == 5


def test_discriminator_needs_32_pixels():
    params = DiscriminatorParams.initialize(3, seed=1)
    with pytest.raises(ShapeError):
        discriminator_forward(params, Tensor(np.zeros((1, 3, 16, 16))))


def test_freeze_stops_parameter_gradients(rng):
    params = DiscriminatorParams.initialize(2, seed=2)
    params.freeze()
    x = Tensor(rng.uniform(size=(1, 2, 32, 32)), requires_grad=True)
    out = discriminator_forward(params, x)
    backward(total(out))
    assert x.grad is not None
    assert all(t.grad is None for _, t in params.items())


def test_state_dict_roundtrip_and_mismatch():
    a = GeneratorParams.initialize(3, seed=1)
    b = GeneratorParams.initialize(3, seed=2)
    b.load_state_dict(a.state_dict(prefix="g."), prefix="g.")
    assert all(np.array_equal(a[n].data, b[n].data) for n in a)
    wrong = GeneratorParams.initialize(4, seed=1)
    with pytest.raises(CheckpointError):
        wrong.load_state_dict(a.state_dict())


def test_supervised_sgd_step_decreases_cross_entropy():
    spec = SceneSpec(height=32, width=32)
    decreased = 0
    for seed in range(20):
        sample = generate_scene(spec, Domain.SOURCE, seed)
        image = Tensor(sample.image[None].astype(np.float64))
        onehot = one_hot(sample.labels[None], spec.num_classes)
        params = GeneratorParams.initialize(spec.num_classes, seed=seed)

        before = loss_supervised_ce(generator_forward(params, image), onehot)
        params.zero_grad()
        backward(before)
        SGDMomentum(params, momentum=0.0, weight_decay=0.0).step(1e-4)
        after = loss_supervised_ce(generator_forward(params, image), onehot)
        decreased += after.item() < before.item()
    assert decreased >= 18
