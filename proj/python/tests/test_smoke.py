import math
from pathlib import Path

import numpy as np
import pytest

import dressbath as db

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def test_registry():
    names = db.experiment_names()
    assert len(names) == 11
    assert names[0] == "frame-check"
    assert all(db.describe_experiment(n) for n in names)


def test_sector_dimension_counts_configurations():
    for K in range(1, 7):
        for n in range(K + 1):
            assert db.sector_dimension(K, 1, n, electron=False) == math.comb(K, n)
    assert sum(db.sector_dimension(3, 2, N) for N in range(8)) == 2 * 3**3


def test_spec_and_frame():
    s = db.SpinBathSpec([3.0 / 5.0, 4.0 / 5.0], two_I=1, A_hf=1.0)
    assert s.K == 2
    rows = db.frame_rows(s)
    assert np.allclose(rows @ rows.conj().T, np.eye(2), atol=1e-12)
    with pytest.raises(ValueError):
        db.SpinBathSpec([1.0, 1.0])


def test_pulses_and_compilation():
    rng = np.random.default_rng(3)
    s = db.SpinBathSpec.uniform(3)
    U = db.pulse_unitary(0.7, 1.1)
    assert np.allclose(U @ U.conj().T, np.eye(2), atol=1e-12)
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    target = q @ np.diag(np.diag(r) / np.abs(np.diag(r)))
    segs = db.compile_gate(target, s)
    assert db.gate_infidelity(db.compose_pulses(segs, s), target) < 1e-8


def test_bcs_uniform_closed_form():
    for K, n in [(4, 2), (8, 3), (16, 5)]:
        sol = db.solve_bcs_uniform(K, n, A_hf=1.0, F=1.0, b=0.01)
        gap = (1.0 / (4 * K) + 0.01) * math.sqrt(n * (K - n))
        assert np.allclose(sol.delta, gap, atol=1e-8)
        assert np.allclose(sol.u**2 + sol.v**2, 1.0, atol=1e-12)
    with pytest.raises(db.RangeError):
        db.solve_bcs_uniform(4, 0.0)
    with pytest.raises(db.Unsupported):
        db.solve_bcs(db.SpinBathSpec.uniform(3, two_I=2), 1.0, 1.0)


def test_run_experiment_from_text():
    text = (CONFIGS / "two-qubit-check.yaml").read_text()
    report = db.run_experiment(text)
    assert report["experiment"] == "two-qubit-check"
    assert report["seed"] == 23
    assert db.run_experiment(text, seed=5)["seed"] == 5
    a = db.run_tables((CONFIGS / "gap-vs-filling.yaml").read_text())
    b = db.run_tables((CONFIGS / "gap-vs-filling.yaml").read_text())
    assert a and a == b
    assert all(t.startswith("# seed: ") for t in a.values())


def test_config_errors():
    with pytest.raises(db.ConfigError, match="spec.K"):
        db.run_experiment("spec:\n  I: 0.5\nexperiment:\n  name: frame-check\n")
    with pytest.raises(db.ConfigError):
        db.run_experiment('{"spec": {"K": 2}, "experiment": {"name": "nope"}}', is_json=True)
    with pytest.raises(db.DimensionOverflow):
        db.run_experiment("spec:\n  K: 100\nexperiment:\n  name: frame-check\n")
