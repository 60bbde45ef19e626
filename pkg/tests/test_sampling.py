import numpy as np
import pytest
from scipy.stats import kstest, norm

from robustkern.sampling import (
    BaseModel,
    MixtureModel,
    TailPerturbation,
    dataset_from_csv,
    dataset_to_csv,
    deterministic_mixture_measure,
    input_kantorovich,
    perturbed_input_cdf,
    perturbed_input_inverse_cdf,
    sample_base,
    sample_mixture,
    sample_tail_perturbed,
)


def test_model_cdf_roundtrip():
    model = BaseModel(mu=1.0, sigma=2.0)
    u = np.linspace(0.01, 0.99, 25)
    assert np.allclose(model.input_cdf(model.input_inverse_cdf(u)), u, atol=1e-12)


def test_perturbation_geometry():
    model = BaseModel()
    pert = TailPerturbation(p=0.9, beta=0.5)
    x0, x1 = pert.x0(model), pert.x1(model)
    assert x0 == pytest.approx(norm.ppf(0.9))
    assert x1 == pytest.approx(x0 + 0.2)
    # CDF: agrees below x0, linear with slope beta on [x0, x1], one beyond
    assert perturbed_input_cdf(model, pert, x0 - 1.0) == pytest.approx(model.input_cdf(x0 - 1.0))
    mid = 0.5 * (x0 + x1)
    assert perturbed_input_cdf(model, pert, mid) == pytest.approx(0.9 + 0.5 * (mid - x0))
    assert perturbed_input_cdf(model, pert, x1 + 0.1) == 1.0
    # inverse round trip on both branches
    for u in (0.3, 0.9, 0.95, 0.999):
        x = perturbed_input_inverse_cdf(model, pert, u)
        assert perturbed_input_cdf(model, pert, x) == pytest.approx(u, abs=1e-12)


def test_input_kantorovich_vs_sampled():
    model = BaseModel()
    pert = TailPerturbation()
    exact = input_kantorovich(model, pert)
    n = 200_000
    rng = np.random.default_rng(5)
    u = rng.uniform(size=n)
    base = model.input_inverse_cdf(u)
    shifted = perturbed_input_inverse_cdf(model, pert, u)
    # comonotone coupling of the two laws realizes the 1-D distance
    sampled = float(np.mean(np.abs(base - shifted)))
    assert sampled == pytest.approx(exact, rel=0.05)


def test_sample_base_distribution():
    model = BaseModel(mu=0.5, sigma=1.5)
    data = sample_base(model, 5000, seed=9)
    stat = kstest(data.x[:, 0], lambda v: model.input_cdf(v)).pvalue
    assert stat > 1e-4
    assert np.allclose(data.y, data.x[:, 0] ** 2)


def test_sample_tail_perturbed_distribution():
    model = BaseModel()
    pert = TailPerturbation()
    data = sample_tail_perturbed(model, pert, 5000, seed=9)
    pv = kstest(data.x[:, 0], lambda v: perturbed_input_cdf(model, pert, v)).pvalue
    assert pv > 1e-4
    assert data.x[:, 0].max() <= pert.x1(model) + 1e-12


def test_responses():
    model = BaseModel(response="cube")
    data = sample_base(model, 100, seed=2)
    assert np.allclose(data.y, data.x[:, 0] ** 3)
    noisy = BaseModel(response="square_plus_noise")
    data = sample_base(noisy, 20000, seed=2)
    resid = data.y - data.x[:, 0] ** 2
    assert abs(resid.mean()) < 5 * 0.1 / np.sqrt(20000)
    assert resid.var() == pytest.approx(0.01, rel=0.1)


def test_sample_determinism():
    model = BaseModel()
    a = sample_base(model, 50, seed=4)
    b = sample_base(model, 50, seed=4)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
    c = sample_base(model, 50, seed=5)
    assert not np.array_equal(a.x, c.x)


def test_mixture_switch_rate():
    model = MixtureModel(BaseModel(), outlier=(3.0, 9.0), t=0.2)
    data = sample_mixture(model, 20000, seed=7)
    hits = np.mean((data.x[:, 0] == 3.0) & (data.y == 9.0))
    assert hits == pytest.approx(0.2, abs=5 * np.sqrt(0.2 * 0.8 / 20000))


def test_deterministic_mixture_measure():
    base = sample_base(BaseModel(), 10, seed=1)
    m = deterministic_mixture_measure(base, (2.0, 4.0), t=0.3)
    assert m.atoms.shape == (11, 2)
    assert m.weights[-1] == pytest.approx(0.3)
    assert m.weights[:-1].sum() == pytest.approx(0.7)
    assert np.allclose(m.atoms[-1], [2.0, 4.0])


def test_dataset_csv_roundtrip(tmp_path):
    data = sample_base(BaseModel(), 17, seed=12)
    path = tmp_path / "d.csv"
    dataset_to_csv(data, path)
    back = dataset_from_csv(path)
    assert np.array_equal(back.x, data.x)
    assert np.array_equal(back.y, data.y)


def test_perturbed_law_grows_with_beta():
    # larger beta packs the tail mass close to x0, further from where the
    # normal tail had it, so the displacement grows
    model = BaseModel()
    d_small = input_kantorovich(model, TailPerturbation(beta=0.25))
    d_large = input_kantorovich(model, TailPerturbation(beta=2.0))
    assert 0 < d_small < d_large
