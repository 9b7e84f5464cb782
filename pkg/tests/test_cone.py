"""Invariant-cone membership of lift states."""

import numpy as np
import pytest

from volterra_lift import (ConeCheckConfig, ExponentialSum, LiftMeasure,
                           LiftState, TimeGrid, drift_matrix, membership_E,
                           membership_Ew, membership_report,
                           sufficient_cm_condition)

TWO_ATOMS = LiftMeasure(rates=np.array([0.0, 1.0]), weights=np.array([1.0, 1.0]))


def state(vec):
    return LiftState(TWO_ATOMS, np.array(vec, dtype=float))


def test_drift_matrix_shape():
    a = drift_matrix(TWO_ATOMS, 2.0)
    want = np.array([[-2.0, -2.0], [-2.0, -3.0]])
    np.testing.assert_allclose(a, want)


def test_single_zero_rate_atom():
    # one atom at x = 0: total mass follows m' = -w m, so membership is
    # just the sign of the initial mass
    nu = LiftMeasure(rates=np.array([0.0]), weights=np.array([1.0]))
    assert membership_Ew(LiftState(nu, np.array([0.7])), nu, 1.0)
    assert not membership_Ew(LiftState(nu, np.array([-0.7])), nu, 1.0)


def test_two_atom_positive_w_verdicts():
    probes = [([1.0, 1.0], True), ([1.0, -1.0], True),
              ([0.0, 1.0], False), ([-1.0, 0.0], False)]
    for w in (0.1, 1.0, 10.0):
        for vec, want in probes:
            assert membership_Ew(state(vec), TWO_ATOMS, w) == want, (w, vec)


def test_two_atom_zero_w_verdicts():
    probes = [([1.0, 1.0], True), ([1.0, -1.0], True),
              ([0.0, 1.0], True), ([-1.0, 0.0], False)]
    for vec, want in probes:
        assert membership_Ew(state(vec), TWO_ATOMS, 0.0) == want, vec


def test_intersection_over_w():
    assert membership_E(state([1.0, -1.0]), TWO_ATOMS)
    # member of E^0 but of no E^w with w > 0
    assert not membership_E(state([0.0, 1.0]), TWO_ATOMS)


def test_report_fields():
    rep = membership_report(state([0.0, 1.0]), TWO_ATOMS)
    assert not rep.member
    assert rep.failing_w is not None and rep.failing_w > 0
    assert rep.first_negative_time is not None and rep.first_negative_time > 0
    assert rep.min_total_mass < 0
    d = rep.as_dict()
    assert set(d) == {"member", "failing_w", "first_negative_time",
                      "min_total_mass"}

    ok = membership_report(state([1.0, 1.0]), TWO_ATOMS)
    assert ok.member and ok.failing_w is None


def test_report_json(tmp_path):
    rep = membership_report(state([1.0, 1.0]), TWO_ATOMS)
    path = tmp_path / "membership.json"
    rep.to_json(path)
    import json
    with open(path) as f:
        assert json.load(f)["member"] is True


def test_custom_scan_config():
    cfg = ConeCheckConfig(horizon=5.0, n_steps=500, w_grid=np.array([0.0, 1.0]))
    assert membership_Ew(state([1.0, 1.0]), TWO_ATOMS, 1.0, cfg)
    with pytest.raises(ValueError):
        ConeCheckConfig(w_grid=np.array([-1.0]))


def test_cm_condition_single_atom():
    k = ExponentialSum(rates=np.array([0.5]), weights=np.array([1.0]))
    grid = TimeGrid(dt=0.01, steps=200)
    assert sufficient_cm_condition(k, np.array([0.0, 0.5, 2.0]), grid)


def test_cm_condition_rejects_signed_mixture():
    # K > 0 pointwise yet the defining measure is signed; the sufficient
    # condition must come back False
    k = ExponentialSum(rates=np.array([0.5, 5.0]), weights=np.array([1.0, -0.5]))
    grid = TimeGrid(dt=0.01, steps=200)
    ts = grid.nodes[1:]
    assert np.all(1.0 * np.exp(-0.5 * ts) - 0.5 * np.exp(-5.0 * ts) > 0)
    assert not sufficient_cm_condition(k, np.array([0.0, 2.0, 10.0]), grid)
