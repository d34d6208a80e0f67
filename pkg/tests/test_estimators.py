import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from adiaq.ec3 import Ec3Instance, InstanceError, generate_unique
from adiaq.estimators import (
    AdiabaticSolver,
    GapAnalyzer,
    ThermalAdiabaticSolver,
    check_density_matrix,
    check_instances,
    check_state,
)


@pytest.fixture(scope="module")
def insts():
    return [generate_unique(4, s) for s in range(3)]


def test_check_instances_accepts_paths_and_text(tmp_path, insts):
    insts[0].save(tmp_path / "i.txt")
    got = check_instances([insts[0], str(tmp_path / "i.txt"), insts[0].to_text(), tmp_path / "i.txt"])
    assert all(g == insts[0] for g in got)
    assert len(check_instances(insts[1])) == 1
    with pytest.raises(ValueError):
        check_instances([])
    with pytest.raises(TypeError):
        check_instances([3])
    with pytest.raises(InstanceError):
        check_instances([Ec3Instance(3, [(0, 1, 2)])])


def test_check_state():
    psi = np.ones(4) / 2
    assert check_state(psi, 2).dtype == complex
    for bad in (np.ones(3) / np.sqrt(3), np.ones(4), np.array([np.nan, 0, 0, 0])):
        with pytest.raises(ValueError):
            check_state(bad)
    with pytest.raises(ValueError):
        check_state(psi, 3)


def test_check_density_matrix():
    assert check_density_matrix(np.eye(4) / 4, 2).shape == (4, 4)
    with pytest.raises(ValueError):
        check_density_matrix(np.eye(4) / 2)
    with pytest.raises(ValueError):
        check_density_matrix(np.array([[0.5, 1.0], [0.0, 0.5]]))
    with pytest.raises(ValueError):
        check_density_matrix(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        check_density_matrix(np.eye(3) / 3)


def test_adiabatic_solver_params_and_clone():
    est = AdiabaticSolver(run_time=3.0, perturbation="K2", strength=0.5)
    params = est.get_params()
    assert params["run_time"] == 3.0 and params["perturbation"] == "K2"
    twin = clone(est).set_params(strength=1.0)
    assert twin.strength == 1.0 and est.strength == 0.5


def test_adiabatic_solver_fit_predict(insts):
    est = AdiabaticSolver(run_time=200.0)
    with pytest.raises(NotFittedError):
        est.predict(insts)
    est.fit(insts)
    assert est.run_time_ == 200.0
    assert est.success_probability_ > 0.9
    assert list(est.predict(insts)) == [i.satisfying_assignment for i in insts]
    proba = est.predict_proba(insts)
    assert proba.shape == (3, 16) and np.allclose(proba.sum(axis=1), 1.0, atol=1e-6)
    assert est.score(insts) > 0.9


def test_adiabatic_solver_calibrates(insts):
    est = AdiabaticSolver(target=0.5).fit(insts[:2])
    assert len(est.calibrated_times_) == 2
    assert est.run_time_ == pytest.approx(np.median(est.calibrated_times_))


def test_adiabatic_solver_bad_params(insts):
    with pytest.raises(ValueError):
        AdiabaticSolver(run_time=-1.0).fit(insts[0])
    with pytest.raises(ValueError):
        AdiabaticSolver(run_time=1.0, perturbation="K7").fit(insts[0])
    mixed = [insts[0], generate_unique(5, 0)]
    with pytest.raises(ValueError):
        AdiabaticSolver(run_time=1.0).fit(insts[0]).predict_proba(mixed)


def test_thermal_solver(insts):
    est = ThermalAdiabaticSolver(run_time=5.0, temperature=1.0).fit(insts[0])
    assert est.trace_error_ <= 1e-6
    p = est.predict_proba([insts[0]])
    assert p.shape == (1, 16) and p.sum() == pytest.approx(1.0)
    assert est.score(insts[0]) == pytest.approx(est.success_probability_)
    with pytest.raises(ValueError):
        ThermalAdiabaticSolver().fit(generate_unique(5, 0))


def test_gap_analyzer(insts):
    gap = GapAnalyzer(grid_points=51)
    feats = gap.fit_transform(insts)
    assert feats.shape == (3, 4)
    assert np.all(feats[:, 0] > 0)
    assert np.allclose(feats[:, 3], feats[:, 2] / feats[:, 0] ** 2)
    assert list(gap.get_feature_names_out()) == ["delta", "s_star", "e_cal", "adiabatic_scale"]
