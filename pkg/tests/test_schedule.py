import numpy as np
import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st
from torch import nn

from skewkit.schedule import ClrConfig, SwaState, clr_value, recalibrate_running_stats, swa_capture_points, swa_update

CLR = ClrConfig()


@pytest.mark.parametrize("t,expected", [(0, 1e-5), (2, 1e-3), (4, 1e-5), (1, 5.05e-4), (3, 5.05e-4), (6, 1e-3)])
def test_clr_values(t, expected):
    assert clr_value(t, CLR) == pytest.approx(expected, rel=1e-12)


# dyadic positions keep t + k * period exactly representable
dyadic = st.integers(0, 4 * 1024).map(lambda k: k / 1024)


@given(dyadic, st.integers(1, 100))
def test_clr_periodic(t, k):
    assert abs(clr_value(t, CLR) - clr_value(t + k * 4, CLR)) < 1e-15


@given(st.floats(0, 1e4))
def test_clr_in_range(t):
    assert CLR.lower_bound <= clr_value(t, CLR) <= CLR.upper_bound * (1 + 1e-12)


def test_clr_extremes_over_period():
    ts = np.linspace(0, 4, 4001)
    v = np.array([clr_value(t, CLR) for t in ts])
    assert v.min() == pytest.approx(1e-5, rel=1e-12) and v.max() == pytest.approx(1e-3, rel=1e-12)
    for k in range(5):
        assert clr_value(4 * k, CLR) == pytest.approx(1e-5, rel=1e-12)
        assert clr_value(4 * k + 2, CLR) == pytest.approx(1e-3, rel=1e-12)


def test_clr_matches_textbook_formula():
    for t in np.linspace(0, 37, 300):
        cycle = np.floor(1 + t / 4)
        x = abs(t / 2 - 2 * cycle + 1)
        ref = 1e-5 + (1e-3 - 1e-5) * max(0.0, 1 - x)
        assert clr_value(t, CLR) == pytest.approx(ref, rel=1e-9, abs=1e-18)


def test_clr_negative_time():
    with pytest.raises(ValueError):
        clr_value(-0.5, CLR)


@pytest.mark.parametrize("kw", [dict(lower_bound=1e-3, upper_bound=1e-5), dict(lower_bound=0), dict(stepsize=0.5), dict(form="exp_range")])
def test_clr_config_invariants(kw):
    with pytest.raises(ValueError):
        ClrConfig(**kw)


def test_clr_scaled():
    s = CLR.scaled(0.1)
    assert s.lower_bound == pytest.approx(1e-6) and s.upper_bound == pytest.approx(1e-4) and s.stepsize == 2


def test_swa_first_snapshot():
    st_ = swa_update(SwaState(), [1.0, 2.0])
    assert st_.n_snapshots == 1 and np.array_equal(st_.averaged, [1.0, 2.0])


def test_swa_midpoint():
    st_ = swa_update(swa_update(SwaState(), [0, 0]), [2, 2])
    assert st_.n_snapshots == 2 and np.array_equal(st_.averaged, [1.0, 1.0])


def test_swa_length_mismatch():
    with pytest.raises(ValueError):
        swa_update(swa_update(SwaState(), [0, 0]), [1, 2, 3])


def test_swa_state_invariant():
    with pytest.raises(ValueError):
        SwaState(averaged=np.zeros(3), n_snapshots=0)
    with pytest.raises(ValueError):
        SwaState(averaged=None, n_snapshots=2)


def test_swa_stream_equals_mean(rng):
    W = rng.normal(size=(50, 10_000))
    st_ = SwaState()
    for w in W:
        st_ = swa_update(st_, w)
    assert np.max(np.abs(st_.averaged - W.mean(axis=0))) < 1e-10
    rev = SwaState()
    for w in W[::-1]:
        rev = swa_update(rev, w)
    assert np.max(np.abs(rev.averaged - st_.averaged)) < 1e-10


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20), st.integers(1, 30))
def test_swa_identical_snapshots(w, k):
    st_ = SwaState()
    for _ in range(k):
        st_ = swa_update(st_, w)
    assert np.array_equal(st_.averaged, np.asarray(w, dtype=np.float64))


def test_capture_points_examples():
    assert not swa_capture_points(9, 10, 4)
    assert swa_capture_points(14, 10, 4)
    assert swa_capture_points(10, 10, 4) and not swa_capture_points(12, 10, 4)


@given(st.integers(1, 60), st.integers(0, 59), st.integers(1, 8))
def test_capture_count(E, start, cycle):
    n = sum(swa_capture_points(e, start, cycle) for e in range(E))
    expected = (E - 1 - start) // cycle + 1 if E > start else 0
    assert n == expected


class TwoLayer(nn.Module):
    def __init__(self):
        super().__init__()
        self.fc1 = nn.Linear(5, 4)
        self.bn1 = nn.BatchNorm1d(4)
        self.fc2 = nn.Linear(4, 3)
        self.bn2 = nn.BatchNorm1d(3)

    def forward(self, x):
        return self.bn2(self.fc2(torch.relu(self.bn1(self.fc1(x)))))


def _bn_state(model):
    return [(m.running_mean.clone(), m.running_var.clone()) for m in (model.bn1, model.bn2)]


def test_recalibration_moment_oracle():
    torch.manual_seed(0)
    model = TwoLayer().double()
    x = torch.randn(300, 5, dtype=torch.float64) * 3 + 1
    recalibrate_running_stats(model, x, batch_size=64)
    with torch.no_grad():
        a1 = model.fc1(x)
    assert torch.allclose(model.bn1.running_mean, a1.mean(0), atol=1e-12)
    assert torch.allclose(model.bn1.running_var, a1.var(0, unbiased=True), atol=1e-12)
    # full-batch pass reproduces the same statistics as the chunked one for layer 1
    m2 = TwoLayer().double()
    m2.load_state_dict(model.state_dict())
    recalibrate_running_stats(m2, x, batch_size=300)
    assert torch.allclose(m2.bn1.running_var, model.bn1.running_var, atol=1e-12)


def test_recalibration_second_layer_full_batch():
    torch.manual_seed(1)
    model = TwoLayer().double()
    x = torch.randn(200, 5, dtype=torch.float64)
    recalibrate_running_stats(model, x, batch_size=200)
    with torch.no_grad():
        a1 = model.fc1(x)
        # in a single full batch, training-mode BN normalizes with the batch moments
        h = torch.relu((a1 - a1.mean(0)) / torch.sqrt(a1.var(0, unbiased=False) + model.bn1.eps) * model.bn1.weight + model.bn1.bias)
        a2 = model.fc2(h)
    assert torch.allclose(model.bn2.running_mean, a2.mean(0), atol=1e-12)
    assert torch.allclose(model.bn2.running_var, a2.var(0, unbiased=True), atol=1e-12)


def test_recalibration_idempotent_and_weights_untouched():
    torch.manual_seed(2)
    model = TwoLayer()
    model.train()
    x = torch.randn(128, 5)
    weights = {k: v.clone() for k, v in model.state_dict().items() if "running" not in k and "num_batches" not in k}
    recalibrate_running_stats(model, x, batch_size=32)
    first = _bn_state(model)
    recalibrate_running_stats(model, x, batch_size=32)
    for (m1, v1), (m2, v2) in zip(first, _bn_state(model)):
        assert torch.equal(m1, m2) and torch.equal(v1, v2)
    for k, v in model.state_dict().items():
        if k in weights:
            assert torch.equal(v, weights[k])
    assert model.training


def test_recalibration_without_bn_is_noop():
    model = nn.Sequential(nn.Linear(3, 2))
    before = {k: v.clone() for k, v in model.state_dict().items()}
    assert recalibrate_running_stats(model, torch.randn(10, 3)) is model
    for k, v in model.state_dict().items():
        assert torch.equal(v, before[k])
