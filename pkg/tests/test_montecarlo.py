import numpy as np
import pytest

from wpbc.analytics import closed_form_report
from wpbc.montecarlo import (MonteCarloError, gap_sweep, mc_incident_power,
                             mc_rate, pilot_power_for_snr)


def test_perfect_ce_single_tag_full_weight(config, stats, pinned):
    # noiseless CE slot, K=1, zeta=1: the beam is exact, mean -> p*beta*M
    _, alpha, p_ce = pinned
    one = config.single_tag(0)
    st = one.link_stats()
    mc = mc_incident_power(one, st, np.ones(1), alpha, p_ce, "ls", 20000, 5,
                           ce_noise_power=0.0)
    target = 2.0 * st.beta[0] * one.M
    assert abs(mc.mean[0] - target) < 3 * mc.std_error[0]
    assert mc.std_error[0] < 0.02 * target


def test_zero_weight_tag_gets_isotropic_power(config, stats, pinned):
    _, alpha, p_ce = pinned
    mc = mc_incident_power(config, stats, np.array([1.0, 0.0]), alpha, p_ce,
                           "ls", 20000, 6)
    assert abs(mc.mean[1] - 2.0 * stats.beta[1]) < 3 * mc.std_error[1]


@pytest.mark.parametrize("est", ["ls", "mmse"])
def test_incident_power_inside_bounds(config, stats, pinned, est):
    zeta, alpha, p_ce = pinned
    rep = closed_form_report(config, stats, zeta, alpha, p_ce, est)
    mc = mc_incident_power(config, stats, zeta, alpha, p_ce, est, 20000, 7)
    assert np.all(mc.mean >= rep.incident_lower - 3 * mc.std_error)
    assert np.all(mc.mean <= rep.incident_upper + 3 * mc.std_error)


def test_zf_orthogonality_with_perfect_ce(config, stats, pinned):
    # perfect estimates make the ZF interference term exactly zero per draw,
    # so the empirical rate equals the single-user one
    zeta, alpha, p_ce = pinned
    rates, discarded = mc_rate(config, stats, zeta, alpha, p_ce, "ls", "zf",
                               4000, 8, ce_noise_power=0.0)
    assert discarded == 0
    assert np.all(np.isfinite(rates.mean))
    from wpbc.montecarlo import _pipeline_arrays
    from wpbc.estimation import REF_TX
    _, H_hat, _, _ = _pipeline_arrays(config, stats, zeta, alpha, p_ce, "ls",
                                      16, 8, ce_noise_power=0.0)
    Hm = np.swapaxes(H_hat[:, :, :, REF_TX], 1, 2)
    gram = np.conj(np.swapaxes(Hm, 1, 2)) @ Hm
    Q = Hm @ np.linalg.inv(gram)
    prod = np.conj(np.swapaxes(Q, 1, 2)) @ Hm
    assert np.max(np.abs(prod - np.eye(config.K))) < 1e-10


@pytest.mark.parametrize("recv", ["mrc", "zf"])
def test_rate_above_lower_bound(config, stats, pinned, recv):
    zeta, alpha, p_ce = pinned
    rep = closed_form_report(config, stats, zeta, alpha, p_ce, "ls")
    bound = rep.rate_lower_mrc if recv == "mrc" else rep.rate_lower_zf
    mc, _ = mc_rate(config, stats, zeta, alpha, p_ce, "ls", recv, 10000, 9)
    assert np.all(mc.mean + 3 * mc.std_error >= bound)


def test_determinism_and_chunk_independence(config, stats, pinned, monkeypatch):
    zeta, alpha, p_ce = pinned
    a = mc_incident_power(config, stats, zeta, alpha, p_ce, "ls", 3000, 11)
    b = mc_incident_power(config, stats, zeta, alpha, p_ce, "ls", 3000, 11)
    assert np.array_equal(a.mean, b.mean)
    import wpbc.montecarlo as mc_mod
    monkeypatch.setattr(mc_mod, "_CHUNK", 577)
    c = mc_incident_power(config, stats, zeta, alpha, p_ce, "ls", 3000, 11)
    assert np.array_equal(a.mean, c.mean)
    assert np.array_equal(a.std_error, c.std_error)


def test_se_scaling_with_n(config, stats, pinned):
    zeta, alpha, p_ce = pinned
    big = mc_incident_power(config, stats, zeta, alpha, p_ce, "ls", 8000, 12)
    small = mc_incident_power(config, stats, zeta, alpha, p_ce, "ls", 4000, 12)
    ratio = np.mean(small.std_error / big.std_error)
    assert np.sqrt(2) * 0.7 <= ratio <= np.sqrt(2) * 1.3


def test_receiver_preconditions(config, stats, pinned):
    zeta, alpha, p_ce = pinned
    from dataclasses import replace
    narrow = replace(config, R=2)
    with pytest.raises(MonteCarloError):
        mc_rate(narrow, narrow.link_stats(), zeta, alpha, p_ce, "ls", "zf", 100, 1)
    with pytest.raises(MonteCarloError):
        mc_incident_power(config, stats, zeta, alpha, p_ce, "ls", 1, 1)


def test_pilot_power_for_snr_round_trip(config, stats):
    one = config.single_tag(0)
    st = one.link_stats()
    p_ce = pilot_power_for_snr(one, st, 120, 10 ** 2.5)
    gamma = st.beta[0] ** 2 * 120 * p_ce * one.delta[0] / (1 * one.noise_power)
    assert gamma == pytest.approx(10 ** 2.5, rel=1e-12)


def test_gap_sweep_snr_axis(config, stats, pinned):
    zeta, alpha, p_ce = pinned
    one = config.single_tag(0)
    report = gap_sweep(one, one.link_stats(), np.ones(1), alpha, p_ce, "snr",
                       [10.0, 30.0], 2000, 13)
    assert report.rows[0]["ls_delta_p"] > report.rows[1]["ls_delta_p"] >= 1.0
    assert report.rows[0]["ls_mc_inside_bounds"] == 1


def test_gap_sweep_r_axis_jensen_direction(config, stats, pinned):
    zeta, alpha, p_ce = pinned
    report = gap_sweep(config, stats, zeta, alpha, p_ce, "R", [4.0, 8.0],
                       2000, 14, estimators=("ls",))
    for row in report.rows:
        for key in ("ls_mrc_delta_r", "ls_zf_delta_r"):
            assert row[key] >= 1.0 - 3 * row[key.replace("delta_r", "delta_r_se")]
