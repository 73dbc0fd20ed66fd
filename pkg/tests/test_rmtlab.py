import json

import numpy as np
import pytest

from cyclospec import (
    EVMultiset,
    NotSelfadjointError,
    Scenario,
    builtin_scenario,
    estimate_beta,
    geometric_diag,
    match_distance,
    multiset_moment,
    run_scenario,
    sample_gue,
    sample_haar_unitary,
)
from cyclospec.rmtlab import load_matrix_csv, save_matrix_csv, trial_rng


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


def test_gue_is_hermitian_and_normalized():
    rng = np.random.default_rng(51)
    g = sample_gue(500, rng)
    assert np.max(np.abs(g - g.conj().T)) == 0.0
    tr2 = float(np.real(np.trace(g @ g)) / 500)
    assert abs(tr2 - 1.0) <= 0.05
    g2 = g @ g
    tr4 = float(np.real(np.trace(g2 @ g2)) / 500)
    assert abs(tr4 - 2.0) <= 0.2


def test_gue_trace_diagnostic():
    rng = np.random.default_rng(52)
    n = 400
    g = sample_gue(n, rng)
    assert abs(np.trace(g)) / n <= 5.0 * np.sqrt(2.0) / np.sqrt(n)


def test_haar_unitary_properties():
    rng = np.random.default_rng(53)
    u = sample_haar_unitary(200, rng)
    assert np.max(np.abs(u @ u.conj().T - np.eye(200))) <= 1e-10
    assert abs(abs(np.linalg.det(u)) - 1.0) <= 1e-10


def test_haar_unitary_mean_trace():
    rng = np.random.default_rng(54)
    traces = [np.trace(sample_haar_unitary(100, rng)) / 100 for _ in range(200)]
    assert abs(np.mean(traces)) <= 0.05


def test_geometric_diag():
    d = geometric_diag(4, 0.5, 1.0, 0)
    np.testing.assert_allclose(np.diag(d).real, [1.0, 0.5, 0.25, 0.125])
    d = geometric_diag(6, 0.5, 1.0, 1)
    np.testing.assert_allclose(np.diag(d).real, 0.5 ** np.arange(1, 7))
    assert float(np.real(np.trace(geometric_diag(80, 0.5, 1.0, 0)))) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        geometric_diag(4, 1.0, 1.0, 0)


def test_estimate_beta():
    rng = np.random.default_rng(55)
    b = sample_gue(500, rng)
    c = sample_gue(500, rng)
    beta = estimate_beta([c], [b])
    assert abs(beta[0, 0]) <= 0.05  # independence: normalized trace of CB is small
    beta = estimate_beta([b], [b])
    assert abs(beta[0, 0] - 1.0) <= 0.05
    beta = estimate_beta([b, c], [b, c])
    assert beta[0, 1] == beta[1, 0]  # exactly symmetric when the lists coincide


def test_matrix_csv_round_trip(tmp_path):
    rng = np.random.default_rng(56)
    m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    path = tmp_path / "matrix.csv"
    save_matrix_csv(m, path)
    np.testing.assert_array_equal(load_matrix_csv(path), m)


# ---------------------------------------------------------------------------
# scenarios and the runner
# ---------------------------------------------------------------------------


def test_scenario_json_round_trip(tmp_path):
    s = builtin_scenario("example3", n=40, trials=2)
    path = tmp_path / "scenario.json"
    s.save(path)
    again = Scenario.from_json(path)
    assert again.to_dict() == s.to_dict()


def test_scenario_validation():
    doc = builtin_scenario("example3", n=40, trials=2).to_dict()
    bad = dict(doc, n=1)
    with pytest.raises(ValueError):
        Scenario.from_dict(bad)
    bad = dict(doc, prediction={"recipe": "nonsense"})
    with pytest.raises(ValueError):
        Scenario.from_dict(bad)
    bad = dict(doc, b_spec=[{"kind": "copy_of", "index": 1}])
    with pytest.raises(ValueError):
        Scenario.from_dict(bad)
    bad = dict(doc, expression="a1 + c4")
    with pytest.raises(Exception):
        Scenario.from_dict(bad)


def test_trial_streams_are_independent():
    draws = set()
    for t in range(6):
        rng = trial_rng(123, t)
        draws.add(tuple(np.round(rng.standard_normal(4), 12)))
    assert len(draws) == 6
    # reproducible
    again = trial_rng(123, 3).standard_normal(4)
    np.testing.assert_array_equal(again, trial_rng(123, 3).standard_normal(4))


def test_run_scenario_deterministic():
    s = builtin_scenario("example3", n=40, trials=2)
    r1 = run_scenario(s).to_json_dict()
    r2 = run_scenario(builtin_scenario("example3", n=40, trials=2)).to_json_dict()
    assert json.dumps(r1, sort_keys=True) == json.dumps(r2, sort_keys=True)


def test_run_scenario_moment_consistency():
    s = builtin_scenario("example3", n=40, trials=2)
    report = run_scenario(s)
    for rec in report.trials:
        spectrum = EVMultiset(rec["eigenvalues"])
        for k in (1, 2, 3):
            direct = rec["moments"][k - 1]
            from_spec = multiset_moment(spectrum, k)
            assert abs(direct - from_spec) <= 1e-6 * max(1.0, abs(direct))


def test_run_scenario_hermiticity_diagnostics():
    for name in ("example1", "example2", "example2-correlated", "example3"):
        s = builtin_scenario(name, n=30, trials=1)
        report = run_scenario(s)
        for rec in report.trials:
            assert rec["diagnostics"]["hermiticity_residual"] <= 1e-8


def test_run_scenario_rejects_nonhermitian_expression():
    doc = builtin_scenario("example3", n=30, trials=1).to_dict()
    doc["expression"] = "a1*b1"  # not selfadjoint
    with pytest.raises(NotSelfadjointError):
        run_scenario(Scenario.from_dict(doc))


def test_per_trial_beta_recorded():
    s = builtin_scenario("example2", n=40, trials=2)
    report = run_scenario(s)
    for rec in report.trials:
        assert "prediction_eigenvalues" in rec
        lams = rec["prediction_provenance"]["lambdas"]
        assert len(lams) == 2


def test_example3_match_improves_with_n():
    sizes = (100, 300)
    means = []
    for n in sizes:
        s = builtin_scenario("example3", n=n, trials=10, seed=97)
        report = run_scenario(s)
        pred = EVMultiset(report.prediction["eigenvalues"], source="predicted")
        rels = [
            match_distance(EVMultiset(rec["eigenvalues"]), pred, 5)["max_rel"]
            for rec in report.trials
        ]
        means.append(float(np.mean(rels)))
    assert means[1] < means[0]


def test_file_backed_b_spec(tmp_path):
    rng = np.random.default_rng(60)
    fixed = sample_gue(30, rng)
    fixed = fixed @ fixed
    path = tmp_path / "b.csv"
    save_matrix_csv(fixed, path)
    doc = builtin_scenario("example3", n=30, trials=2).to_dict()
    doc["b_spec"] = [{"kind": "file", "path": str(path)}]
    report = run_scenario(Scenario.from_dict(doc))
    # the fixed matrix produces identical spectra across trials up to the Haar conjugation
    assert len(report.trials) == 2


def test_thread_override_is_equivalent(monkeypatch):
    s = builtin_scenario("example2", n=30, trials=3)
    serial = run_scenario(s).to_json_dict()
    monkeypatch.setenv("CYCLOSPEC_THREADS", "3")
    threaded = run_scenario(builtin_scenario("example2", n=30, trials=3)).to_json_dict()
    assert json.dumps(serial, sort_keys=True) == json.dumps(threaded, sort_keys=True)


def test_per_trial_beta_requires_limit_matrix():
    doc = builtin_scenario("example2", n=30, trials=1).to_dict()
    doc["prediction"] = {"recipe": "sum_bac", "beta": "per_trial", "pairs": [[1, 2], [2, 1]]}
    with pytest.raises(ValueError):
        Scenario.from_dict(doc)
