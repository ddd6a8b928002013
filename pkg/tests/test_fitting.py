import numpy as np
import pytest

from mommi_ptc.complexmat import DimensionError, rel_frob_distance
from mommi_ptc.dpe import ConfigurationError, SurrogateModel
from mommi_ptc.optbench.fitting import fit_matrices, fit_matrix
from mommi_ptc.ptc import PtcConfig, PtcParams, compose_weight, effective_real_matrix


def test_self_realizable_target(surrogate, device4):
    cfg = PtcConfig.log(4)
    truth = PtcParams.random(cfg, np.random.default_rng(100))
    truth.gain = np.array(2.0)
    target = effective_real_matrix(compose_weight(cfg, truth, device4))
    res = fit_matrix(target, cfg, surrogate, device4, seed=3)
    assert res.steps_run == 3000
    assert res.distance <= 1e-3


def test_result_consistency(surrogate, device4):
    cfg = PtcConfig(4, 4, 2, 2)
    target = np.random.default_rng(5).standard_normal((8, 4))
    res = fit_matrix(target, cfg, surrogate, device4, steps=150, seed=1)
    curve = np.array(res.loss_curve)
    assert len(curve) == 151 and np.all(np.diff(curve) <= 0)
    assert curve[-1] == res.distance
    assert 0 <= res.fidelity <= 1 and res.fidelity == 1 - min(res.distance, 1)
    w = effective_real_matrix(compose_weight(cfg, res.params, device4))
    assert rel_frob_distance(w, target) == pytest.approx(res.distance, rel=1e-9)
    assert np.all((res.params.eps >= 0) & (res.params.eps <= 1))
    assert np.all((res.params.sigma_mag >= 0) & (res.params.sigma_mag <= 1))


def test_deterministic(surrogate, device4):
    cfg = PtcConfig.log(4)
    targets = np.random.default_rng(6).standard_normal((2, 8, 4))
    a = fit_matrices(targets, cfg, surrogate, device4, steps=60, seed=4, bits=3)
    b = fit_matrices(targets, cfg, surrogate, device4, steps=60, seed=4, bits=3)
    assert [r.loss_curve for r in a] == [r.loss_curve for r in b]


def test_frozen_pads_keep_eps(surrogate, device4):
    cfg = PtcConfig.log(4)
    target = np.random.default_rng(7).standard_normal((8, 4))
    res = fit_matrix(target, cfg, surrogate, device4, steps=50, seed=2, bits=0)
    start = PtcParams.random(cfg, np.random.default_rng([2, 0, 1]))
    assert np.array_equal(res.params.eps, start.eps)


def test_errors(surrogate, device4):
    cfg = PtcConfig.log(4)
    with pytest.raises(ZeroDivisionError):
        fit_matrix(np.zeros((8, 4)), cfg, surrogate, device4, steps=5)
    with pytest.raises(ConfigurationError):
        fit_matrix(np.ones((8, 4)), cfg, SurrogateModel.init(4, 4), device4, steps=5)
    with pytest.raises(ConfigurationError):
        fit_matrix(np.ones((8, 4)), PtcConfig.log(4, d=3), surrogate, device4, steps=5)
    with pytest.raises(DimensionError):
        fit_matrix(np.ones((4, 4)), cfg, surrogate, device4, steps=5)
