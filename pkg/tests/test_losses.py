"""Loss arithmetic, loop oracles, detachment, and finite-difference gradients."""
import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from semedit.losses import (
    FeatureExtractor,
    LossWeights,
    feature_matching_loss,
    generator_total_loss,
    hinge_loss_d,
    hinge_loss_g,
    perceptual_loss,
)

from reference_impl import conv2d_nchw, relu


def t(*vals):
    return torch.tensor(vals, dtype=torch.float64)


# --------------------------------------------------------------- hinge D

def test_hinge_d_margins_satisfied_zero():
    assert hinge_loss_d([t(2.0)], [t(-2.0)]).item() == 0.0


def test_hinge_d_zero_scores_two():
    assert hinge_loss_d([t(0.0)], [t(0.0)]).item() == 2.0


def test_hinge_d_mixed_patch_map():
    # real (2, 0.5) -> mean(0, 0.5); fake (-0.5, -2) -> mean(0.5, 0)
    assert hinge_loss_d([t(2.0, 0.5)], [t(-0.5, -2.0)]).item() == pytest.approx(0.5)


def test_hinge_d_scale_mismatch():
    with pytest.raises(ValueError):
        hinge_loss_d([t(0.0)], [t(0.0), t(0.0)])


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8),
       st.lists(st.floats(-5, 5), min_size=1, max_size=8))
@settings(max_examples=100, deadline=None)
def test_hinge_d_nonnegative_zero_iff_margins(real_vals, fake_vals):
    real, fake = t(*real_vals), t(*fake_vals)
    loss = hinge_loss_d([real], [fake]).item()
    assert loss >= 0.0
    margins_ok = all(v >= 1 for v in real_vals) and all(v <= -1 for v in fake_vals)
    assert (loss == 0.0) == margins_ok


def test_hinge_d_subgradient_values():
    # per-patch gradient is -1/N, 0, or +1/N away from the hinge point
    real = torch.tensor([2.0, 0.5, -1.0], requires_grad=True)
    fake = torch.tensor([-2.0, 0.5, -0.5], requires_grad=True)
    hinge_loss_d([real], [fake]).backward()
    n = 3
    assert real.grad.tolist() == pytest.approx([0.0, -1.0 / n, -1.0 / n])
    assert fake.grad.tolist() == pytest.approx([0.0, 1.0 / n, 1.0 / n])


# --------------------------------------------------------------- hinge G

def test_hinge_g_examples():
    assert hinge_loss_g([t(0.5)]).item() == pytest.approx(-0.5)
    assert hinge_loss_g([t(0.0)]).item() == 0.0
    # two scales with means 0.2 and -0.4 -> -(0.2 - 0.4) = 0.2
    assert hinge_loss_g([t(0.2), t(-0.4)]).item() == pytest.approx(0.2)


# --------------------------------------------------------------- FM

def test_fm_identical_zero():
    feats = [[t(1.0, 2.0), t(3.0)]]
    assert feature_matching_loss(feats, feats).item() == 0.0


def test_fm_single_layer_example():
    real = [[t(1.0, 2.0)]]
    fake = [[t(2.0, 4.0)]]
    assert feature_matching_loss(real, fake).item() == pytest.approx(1.5)


def test_fm_loop_oracle():
    rng = np.random.default_rng(0)
    real = [[rng.normal(size=(2, 3, 4)) for _ in range(3)] for _ in range(2)]
    fake = [[rng.normal(size=(2, 3, 4)) for _ in range(3)] for _ in range(2)]
    got = feature_matching_loss(
        [[torch.tensor(a) for a in s] for s in real],
        [[torch.tensor(a) for a in s] for s in fake],
    ).item()
    per_scale = []
    for rl, fl in zip(real, fake):
        acc = 0.0
        for r, f in zip(rl, fl):
            diffs = [abs(a - b) for a, b in zip(r.flat, f.flat)]
            acc += sum(diffs) / len(diffs)
        per_scale.append(acc)
    expected = sum(per_scale) / len(per_scale)
    assert got == pytest.approx(expected, abs=1e-6)


def test_fm_sum_reduction_flag():
    real = [[t(0.0)], [t(0.0)]]
    fake = [[t(1.0)], [t(3.0)]]
    assert feature_matching_loss(real, fake, "mean").item() == pytest.approx(2.0)
    assert feature_matching_loss(real, fake, "sum").item() == pytest.approx(4.0)


def test_fm_layer_mismatch():
    with pytest.raises(ValueError):
        feature_matching_loss([[t(0.0), t(0.0)]], [[t(0.0)]])


def test_fm_detaches_real_side():
    real = torch.tensor([1.0, 2.0], requires_grad=True)
    fake = torch.tensor([2.0, 4.0], requires_grad=True)
    feature_matching_loss([[real]], [[fake]]).backward()
    assert real.grad is None
    assert fake.grad is not None


# --------------------------------------------------------------- perceptual

def test_perceptual_identity_zero():
    fx = FeatureExtractor(seed=1, num_layers=2)
    img = torch.rand(1, 3, 8, 8) * 2 - 1
    assert perceptual_loss(img, img.clone(), fx).item() == 0.0


def test_perceptual_zero_weights_zero():
    fx = FeatureExtractor(seed=1, num_layers=2, layer_weights=[0.0, 0.0])
    a = torch.rand(1, 3, 8, 8)
    b = torch.rand(1, 3, 8, 8)
    assert perceptual_loss(a, b, fx).item() == 0.0


def test_perceptual_loop_oracle():
    """8x8 pair through a 2-layer extractor vs all-numpy re-computation."""
    fx = FeatureExtractor(seed=3, num_layers=2).double()
    rng = np.random.default_rng(1)
    a = rng.uniform(-1, 1, (1, 3, 8, 8))
    b = rng.uniform(-1, 1, (1, 3, 8, 8))
    got = perceptual_loss(torch.tensor(a), torch.tensor(b), fx).item()

    def run(x):
        feats = []
        for conv in fx.convs:
            x = relu(conv2d_nchw(x, conv.weight.numpy(), conv.bias.numpy(),
                                 stride=2, padding=1))
            feats.append(x)
        return feats
    expected = sum(
        w * np.abs(fa - fb).mean()
        for w, fa, fb in zip(fx.layer_weights, run(a), run(b))
    )
    assert got == pytest.approx(expected, abs=1e-6)


def test_extractor_frozen_and_seed_deterministic():
    fx1 = FeatureExtractor(seed=7)
    fx2 = FeatureExtractor(seed=7)
    fx3 = FeatureExtractor(seed=8)
    assert all(not p.requires_grad for p in fx1.parameters())
    for p1, p2 in zip(fx1.parameters(), fx2.parameters()):
        assert torch.equal(p1, p2)
    assert any(
        not torch.equal(p1, p3)
        for p1, p3 in zip(fx1.parameters(), fx3.parameters())
    )


def test_perceptual_gradient_reaches_output_image():
    fx = FeatureExtractor(seed=0, num_layers=2)
    a = torch.rand(1, 3, 8, 8, requires_grad=True)
    b = torch.rand(1, 3, 8, 8)
    perceptual_loss(a, b, fx).backward()
    assert a.grad is not None and a.grad.abs().sum() > 0


# --------------------------------------------------------------- total

def test_total_weighted_example():
    # 10*0.1 + 10*0.2 - 0.5 = 2.5
    w = LossWeights()
    assert w.lambda_percept == 10.0 and w.lambda_feat == 10.0
    total = generator_total_loss(
        torch.tensor(0.1), torch.tensor(0.2), [t(0.5)], w
    )
    assert total.item() == pytest.approx(2.5)


def test_total_all_zero():
    total = generator_total_loss(torch.tensor(0.0), torch.tensor(0.0),
                                 [t(0.0)], LossWeights())
    assert total.item() == 0.0


def test_total_zero_lambdas_is_hinge_g():
    w = LossWeights(lambda_percept=0.0, lambda_feat=0.0)
    fake = [t(0.3, -0.7), t(1.2)]
    total = generator_total_loss(torch.tensor(9.9), torch.tensor(5.5), fake, w)
    assert total.item() == pytest.approx(hinge_loss_g(fake).item())


def test_weights_must_be_nonnegative():
    with pytest.raises(ValueError):
        LossWeights(lambda_percept=-1.0)


# --------------------------------------------------------------- FD gradients

def _fd_check(fn, x, n_coords=8, eps=1e-6, rel_tol=1e-3, seed=0):
    """Central differences vs autograd on randomly probed coordinates."""
    x = x.detach().clone().requires_grad_(True)
    fn(x).backward()
    analytic = x.grad.clone()
    rng = np.random.default_rng(seed)
    flat = x.detach().reshape(-1)
    for _ in range(n_coords):
        i = int(rng.integers(0, flat.numel()))
        xp = flat.clone(); xp[i] += eps
        xm = flat.clone(); xm[i] -= eps
        with torch.no_grad():
            fd = (fn(xp.reshape(x.shape)) - fn(xm.reshape(x.shape))) / (2 * eps)
        a = analytic.reshape(-1)[i].item()
        denom = max(abs(fd.item()), abs(a), 1e-8)
        assert abs(fd.item() - a) / denom <= rel_tol, f"coord {i}: fd={fd.item()} vs {a}"


def test_fd_hinge_d_wrt_scores():
    torch.manual_seed(0)
    fake_fixed = torch.randn(1, 1, 4, 4, dtype=torch.float64)
    real0 = torch.randn(1, 1, 4, 4, dtype=torch.float64)
    _fd_check(lambda r: hinge_loss_d([r], [fake_fixed]), real0)
    _fd_check(lambda f: hinge_loss_d([real0.detach()], [f]), fake_fixed)


def test_fd_hinge_g_wrt_scores():
    torch.manual_seed(1)
    _fd_check(hinge_loss_g := (lambda f: -f.mean()), torch.randn(1, 1, 4, 4, dtype=torch.float64))


def test_fd_feature_matching_wrt_fake():
    torch.manual_seed(2)
    real = [[torch.randn(1, 2, 4, 4, dtype=torch.float64)]]
    _fd_check(lambda f: feature_matching_loss(real, [[f]]),
              torch.randn(1, 2, 4, 4, dtype=torch.float64))


def test_fd_perceptual_wrt_output_16px():
    torch.manual_seed(3)
    fx = FeatureExtractor(seed=0, num_layers=2).double()
    target = torch.rand(1, 3, 16, 16, dtype=torch.float64)
    _fd_check(lambda img: perceptual_loss(img, target, fx),
              torch.rand(1, 3, 16, 16, dtype=torch.float64))
