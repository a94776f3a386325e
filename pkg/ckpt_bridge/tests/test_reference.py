import numpy as np
import pytest
import torch

from ckpt_bridge.reference import (
    ReferenceModel,
    build_seeded_model,
    haar_forward,
    seeded_state,
)


def test_haar_constant_and_energy():
    x = torch.full((1, 2, 4, 4), 3.0)
    y = haar_forward(x)
    assert y.shape == (1, 8, 2, 2)
    assert torch.allclose(y[0, 0], torch.full((2, 2), 6.0))
    assert torch.allclose(y[0, 1:4], torch.zeros(3, 2, 2))
    x = torch.rand(2, 3, 8, 10)
    y = haar_forward(x)
    assert abs(float((y**2).sum() - (x**2).sum())) <= 1e-4


def test_state_dict_matches_default_map():
    from ckpt_bridge.namemap import default_namemap

    for form in ("train", "deploy"):
        model = ReferenceModel("mfdnet", form)
        assert set(model.state_dict()) == set(default_namemap("mfdnet", form))


def test_zero_weights_identity():
    # zeroed tensors collapse everything but the global skip
    model = ReferenceModel("mfdnet-s", "deploy")
    model.load_state_dict({k: torch.zeros_like(v) for k, v in model.state_dict().items()})
    model.eval()
    x = torch.rand(1, 3, 32, 32)
    with torch.no_grad():
        y = model(x)
    assert torch.equal(y, x)


def test_seeded_state_deterministic():
    s1, t1 = seeded_state("mfdnet-s", "deploy", seed=4)
    s2, t2 = seeded_state("mfdnet-s", "deploy", seed=4)
    assert set(s1) == set(s2)
    for n in s1:
        assert np.array_equal(s1[n], s2[n])
    assert set(t1) == set(t2)
    for n in t1:
        assert torch.equal(t1[n], t2[n])


def test_seeded_state_seed_matters():
    s1, _ = seeded_state("mfdnet-s", "deploy", seed=0)
    s2, _ = seeded_state("mfdnet-s", "deploy", seed=1)
    assert not np.array_equal(s1["tail.conv.w"], s2["tail.conv.w"])
    assert np.array_equal(s1["tail.conv.b"], s2["tail.conv.b"])  # biases stay zero


def test_seeded_forward_deterministic_and_finite():
    model = build_seeded_model("mfdnet", "deploy", seed=0)
    x = torch.from_numpy(np.random.default_rng(0).uniform(0, 1, (1, 3, 64, 64)).astype(np.float32))
    with torch.no_grad():
        y1 = model(x)
        y2 = model(x)
    assert torch.equal(y1, y2)
    assert torch.isfinite(y1).all()
    assert y1.shape == x.shape
    assert float(y1.abs().max()) > 0.1  # not collapsed to the skip


def test_train_and_deploy_shapes():
    for form in ("train", "deploy"):
        model = build_seeded_model("mfdnet-s", form, seed=1)
        x = torch.rand(1, 3, 16, 16)
        with torch.no_grad():
            assert model(x).shape == x.shape


def test_unknown_variant_rejected():
    with pytest.raises(ValueError):
        ReferenceModel("mfdnet-tiny", "deploy")
