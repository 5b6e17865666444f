"""Lowered-block pipeline: splittings, brackets, and a frozen strict run."""

import json
import math

import numpy as np
import pytest

from limper.construct_b import (
    ConstructBConfig,
    DiscontinuityReport,
    StageRecordB,
    VerificationReportB,
    bottom_enclosure,
    build_lowered,
    cayley_hamilton_check,
    check_bottom_bracket,
    choose_h,
    eigen_split,
    lowered_view,
    normalize_potential,
    run_construction_b,
    spectrum_supremum,
    stretch_view,
    unshifted_final,
)
from limper.errors import EllipticEnergyError, LimperError
from limper.bands import spectrum_infimum
from limper.recipes import from_values


@pytest.fixture(scope="module")
def flat_start():
    """Zero potential shifted so its spectrum starts at 1/5."""
    return normalize_potential(from_values([0.0]), 1.0)


@pytest.fixture(scope="module")
def strict_one_stage():
    """One strict refinement stage on the flat start (the slow fixture)."""
    return run_construction_b(from_values([0.0]), 1.0, K=1)


def test_normalize_shifts_infimum_to_a_fifth_of_eps(flat_start):
    # inf spec(-lap) = -2, so the zero potential moves up by 2 + 1/5
    assert flat_start.values(0, 1) == pytest.approx([2.2])
    assert spectrum_infimum(flat_start) == pytest.approx(0.2, abs=1e-8)
    stepped = normalize_potential(from_values([0.3, -0.1]), 0.5)
    assert spectrum_infimum(stepped) == pytest.approx(0.1, abs=1e-8)
    with pytest.raises(ValueError):
        normalize_potential(from_values([0.0]), 0.0)


def test_spectrum_supremum_via_reflection(flat_start):
    # constant v: spectrum is [v - 2, v + 2]
    assert spectrum_supremum(flat_start) == pytest.approx(4.2, abs=1e-9)
    # alternating 4, 0: top edge solves the period-2 discriminant
    top = 2.0 + 2.0 * math.sqrt(2.0)
    assert spectrum_supremum(from_values([4.0, 0.0])) == pytest.approx(top, abs=1e-9)


def test_eigen_split_matches_constant_closed_form(flat_start):
    # monodromy at E=0 is [[-2.2, -1], [1, 0]]: |tr|/2 = 1.1
    split = eigen_split(0.0, flat_start)
    assert split.period == 1
    assert split.energy == 0.0
    assert split.rate == pytest.approx(math.acosh(1.1), abs=1e-14)
    assert split.sign == -1
    assert split.v_residual <= 1e-12
    assert split.u_residual <= 1e-12
    M = np.array([[-2.2, -1.0], [1.0, 0.0]])
    lam_plus = (-2.2 - math.sqrt(0.84)) / 2.0
    lam_minus = (-2.2 + math.sqrt(0.84)) / 2.0
    np.testing.assert_allclose(M @ split.v, lam_plus * np.asarray(split.v), atol=1e-12)
    np.testing.assert_allclose(M @ split.u, lam_minus * np.asarray(split.u), atol=1e-12)
    # a, b reconstruct the vector orthonormal to v
    vperp = np.array([-split.v[1], split.v[0]])
    recon = split.a * np.asarray(split.v) + split.b * np.asarray(split.u)
    np.testing.assert_allclose(recon, vperp, atol=1e-12)


def test_eigen_split_rejects_elliptic_energy(flat_start):
    # E=2 sits inside the band [0.2, 4.2], where |tr| < 2
    with pytest.raises(EllipticEnergyError):
        eigen_split(2.0, flat_start)


def test_build_lowered_block_layout(flat_start):
    hat = build_lowered(flat_start, 5, 2, 2, 0.2)
    assert hat.period == 20
    vals = hat.values(0, 20)
    np.testing.assert_array_equal(vals[:10], np.full(10, 2.2))
    drop = (2.0 / 5.0) * 0.2
    np.testing.assert_array_equal(vals[10:], np.full(10, 2.2 - drop))
    # the drop is applied exactly, not through a rounded intermediate
    assert hat.value(10) == flat_start.value(10) - drop
    with pytest.raises(ValueError):
        build_lowered(flat_start, 5, 2, 3, 0.2)
    with pytest.raises(ValueError):
        build_lowered(flat_start, 5, 0, 1, 0.2)
    with pytest.raises(ValueError):
        build_lowered(flat_start, 0, 2, 1, 0.2)


def test_choose_h_maximizes_trace_prefactor(flat_start):
    prev_view = stretch_view(flat_start, 5)
    low_view = lowered_view(flat_start, 5, 0.2)
    assert prev_view.period == low_view.period == 5
    h = choose_h(0.0, prev_view, low_view)
    # independent oracle: dense 2x2 arithmetic at this small scale
    split = eigen_split(0.0, prev_view)
    v = np.asarray(split.v)
    vperp = np.array([-split.v[1], split.v[0]])
    A = np.linalg.matrix_power(
        np.array([[0.0 - low_view.value(0), -1.0], [1.0, 0.0]]), 5
    )
    q = []
    for power in (A, A @ A):
        w = power @ v
        q.append(float(v @ w) + split.a * float(vperp @ w))
    assert q[1] - np.trace(A) * q[0] == pytest.approx(-1.0, abs=1e-9)
    assert h == (1 if abs(q[0]) >= abs(q[1]) else 2)


def test_cayley_hamilton_check_direct_branch():
    # tr * q1 = 4 and q2 = 3 satisfy q2 - tr*q1 = -1 exactly
    ok, gap, branch = cayley_hamilton_check(
        (1, math.log(2.0)), (1, math.log(3.0)), (1, math.log(2.0))
    )
    assert ok and branch == "direct"
    assert gap <= 1e-12
    ok, gap, branch = cayley_hamilton_check(
        (1, math.log(2.0)), (1, math.log(3.1)), (1, math.log(2.0))
    )
    assert not ok and branch == "direct"
    assert gap == pytest.approx(0.1 / 4.0, abs=1e-12)
    # vanishing q1 forces q2 = -1
    ok, gap, branch = cayley_hamilton_check((0, -math.inf), (-1, 0.0), (1, 5.0))
    assert ok and branch == "direct" and gap <= 1e-12


def test_cayley_hamilton_check_log_branch():
    # far above float comfort the -1 is invisible: logs and signs must agree
    ok, gap, branch = cayley_hamilton_check((1, 300.0), (1, 550.0), (1, 250.0))
    assert ok and branch == "log" and gap == 0.0
    ok, _gap, branch = cayley_hamilton_check((1, 300.0), (-1, 550.0), (1, 250.0))
    assert not ok and branch == "log"
    ok, gap, branch = cayley_hamilton_check((1, 300.0), (1, 551.0), (1, 250.0))
    assert not ok and gap == pytest.approx(1.0 / 551.0)


def test_bottom_enclosure_pins_small_periods(flat_start):
    hat = build_lowered(flat_start, 50, 1, 2, 0.2)
    enc = bottom_enclosure(hat, 0.2)
    assert enc["method"] == "pinned-crossing"
    assert enc["ok"]
    # pinned to adjacent floats
    assert 0.0 <= enc["enclosure_width"] <= 1e-15
    assert enc["enclosure_hi"] == enc["e_new"]
    # trial-vector upper bound sits just above the pinned infimum
    assert enc["dirichlet_upper"] >= enc["enclosure_hi"]
    assert enc["dirichlet_upper"] - enc["enclosure_hi"] < 1e-3
    # independent oracle: exact band edges of the period-150 recipe
    assert enc["e_new"] == pytest.approx(spectrum_infimum(hat), abs=1e-12)
    # the drop lands the infimum in [3/5, 4/5] of the old one
    assert 0.6 * 0.2 <= enc["e_new"] <= 0.8 * 0.2


def test_bottom_enclosure_huge_period_uses_dirichlet_window(flat_start):
    big = build_lowered(flat_start, 10**7, 1, 2, 0.2)
    enc = bottom_enclosure(big, 0.2)
    assert enc["method"] == "dirichlet-enclosure"
    assert enc["ok"]
    # pointwise monotonicity floor: old infimum minus the full drop
    assert enc["enclosure_lo"] == pytest.approx(0.12, abs=1e-12)
    assert enc["enclosure_hi"] == enc["dirichlet_upper"]
    assert enc["enclosure_width"] < 1e-9
    assert 0.12 - 1e-8 <= enc["e_new"] <= 0.16 + 1e-8


def test_bottom_enclosure_input_validation(flat_start):
    hat = build_lowered(flat_start, 50, 1, 2, 0.2)
    with pytest.raises(ValueError):
        bottom_enclosure(hat, 0.0)
    # a huge period with no shifted run has no usable window
    with pytest.raises(LimperError):
        bottom_enclosure(stretch_view(flat_start, 10**8), 0.2)


def test_check_bottom_bracket_agrees_with_enclosure(flat_start):
    hat = build_lowered(flat_start, 50, 1, 2, 0.2)
    enc = bottom_enclosure(hat, 0.2)
    e_new, ok = check_bottom_bracket(hat, 0.2)
    assert e_new == enc["e_new"]
    assert ok is enc["ok"] is True


def test_config_validation():
    with pytest.raises(ValueError):
        ConstructBConfig(mode="loose")
    with pytest.raises(ValueError):
        ConstructBConfig(K=-1)
    with pytest.raises(ValueError):
        ConstructBConfig(sweep_points=1)
    with pytest.raises(ValueError):
        ConstructBConfig(samples_per_band=0)


def test_strict_stage_numbers(strict_one_stage):
    records, report = strict_one_stage
    assert len(records) == 2
    r0, r1 = records
    assert (r0.k, r0.p_k, r0.m0, r0.m, r0.h) == (0, 1, 1, 0, 0)
    assert r0.e_k == pytest.approx(0.2, abs=1e-12)
    # gamma = L(0) of the flat start / 2 = acosh(1.1) / 2
    assert r0.gamma == pytest.approx(math.acosh(1.1) / 2.0, abs=1e-14)
    assert r0.report.l0_value == pytest.approx(math.acosh(1.1), abs=1e-12)
    assert r0.report.all_ok

    assert (r1.k, r1.p_k, r1.m0, r1.m, r1.h) == (1, 30000, 10000, 1, 2)
    assert r1.p_k == (r1.m + r1.h) * r1.m0 * r0.p_k
    # new infimum within float noise of 3/5 of the old one
    assert r1.e_k == pytest.approx(0.12, abs=1e-7)
    assert r1.e_k == 0.12000002465638207


def test_strict_stage_certificates(strict_one_stage):
    records, _report = strict_one_stage
    rp = records[1].report
    assert rp.all_ok
    value, lo, hi, ok = rp.bracket
    assert ok and lo <= value <= hi
    assert (lo, hi) == pytest.approx((0.12, 0.16), abs=1e-12)
    # growth kept above 1.5 gamma at zero energy
    assert rp.l0_value == pytest.approx(0.3776573097913227, abs=1e-12)
    assert rp.l0_target == pytest.approx(1.5 * math.acosh(1.1) / 2.0, abs=1e-12)
    assert rp.l0_ok
    # trace factorization closes to rounding noise
    assert rp.factor_ok and rp.factor_gap <= 1e-8
    # the identity check runs in the log branch at this scale and is exact
    assert rp.ch_ok and rp.ch_branch == "log" and rp.ch_gap <= 1e-6
    assert rp.q_logs is not None
    (s1, l1), (s2, l2) = rp.q_logs
    assert s1 == s2 == 1
    # doubling the lowered block doubles the prefactor log, up to the O(1)
    # geometric factor between q2 and q1^2
    assert l2 == pytest.approx(2.0 * l1, rel=1e-5)
    assert rp.split_rate == pytest.approx(10000 * math.acosh(1.1), rel=1e-9)
    # perturbation smallness on the sampled spectrum: one certified row
    assert len(rp.smallness) == 1
    level, achieved, target, count, ok = rp.smallness[0]
    assert (level, target, ok) == (1, 0.25, True)
    assert count > 0
    assert achieved <= 1e-4
    # the lowered tail changes the potential by exactly the drop
    assert rp.norm_delta == rp.norm_bound == pytest.approx(0.08, abs=1e-12)
    assert rp.prefix_ok


def test_strict_stage_witness(strict_one_stage):
    records, _report = strict_one_stage
    wit = records[1].report.witness
    assert wit["mechanism_ok"]
    assert wit["infimum_method"] == "pinned-crossing"
    # E_hat sits within E0/10 of the old band bottom
    assert 0.2 <= wit["e_hat"] <= 0.2 + 0.02 + 1e-9
    assert wit["dist_to_spectrum"] <= wit["dist_bound"]
    # windowed trial vector meets its 2/sqrt(m0) budget
    assert wit["residual"] is not None
    assert wit["residual_bound"] == pytest.approx(2.0 / math.sqrt(10000))
    assert wit["residual_ok"]
    assert wit["enclosure_width"] <= 2e-8


def test_strict_stage_samples(strict_one_stage):
    records, _report = strict_one_stage
    r1 = records[1]
    assert len(r1.samples) > 1000
    assert len(r1.proxies) == 4
    # certified samples carry |tr| <= 2 markers inside the spectrum
    energies = np.array([e for e, _t in r1.samples])
    assert energies.min() >= r1.e_k - 1e-9
    assert np.all(np.diff(energies) > 0)
    for e, logabs_tr in r1.samples[:50]:
        assert logabs_tr <= math.log(2.0) + 1e-12
    # proxies huddle just above the new bottom
    for e, _w in r1.proxies:
        assert r1.e_k - 1e-9 <= e <= r1.e_k + 1e-3


def test_strict_final_report(strict_one_stage):
    records, report = strict_one_stage
    assert report.all_ok
    assert report.gamma == pytest.approx(math.acosh(1.1) / 2.0, abs=1e-14)
    assert report.e0 == pytest.approx(0.2, abs=1e-12)
    assert [k for k, *_rest in report.l0_rows] == [0, 1]
    for _k, value, target, ok in report.l0_rows:
        assert ok and value >= target
    assert report.final_l0 == pytest.approx(0.3776573097913227, abs=1e-12)
    assert report.final_l0_ok
    # deep growth dips on the sampled spectrum, far below gamma
    assert report.dip_ok
    assert report.dip_bound == pytest.approx(0.5 + 1e-3)
    assert report.dip_min <= 1e-4
    assert report.dip_min == min(row[2] for row in report.dip_rows)
    for _k, _e, value, certified, target, ok in report.dip_rows:
        assert ok
        if certified:
            assert value <= target
    # telescoped potential change stays within the eps budget
    assert report.telescope_ok
    assert report.telescope_total == pytest.approx(0.08, abs=1e-12)
    assert report.telescope_total <= report.telescope_bound <= report.telescope_loose
    assert report.monotone_ok
    assert report.norm_ok
    assert len(report.sweep) >= 161
    # the sweep tags each grid energy with band membership
    in_spec = sum(1 for _e, _l, inside in report.sweep if inside)
    assert 0 < in_spec < len(report.sweep)


def test_unshifted_final_restores_original_scale(strict_one_stage):
    records, report = strict_one_stage
    out = unshifted_final(records, report)
    assert out.period == records[-1].p_k
    assert report.unshift_constant == pytest.approx(-2.2, abs=1e-12)
    # agrees with the zero start on the kept prefix, dropped on the tail
    np.testing.assert_array_equal(out.values(0, 400), np.zeros(400))
    tail = out.values(10000, 3)
    np.testing.assert_allclose(tail, np.full(3, -0.08), atol=1e-12)
    assert report.norm_vs_original == pytest.approx(0.08, abs=1e-12)
    assert report.norm_vs_original <= report.norm_budget


def test_records_roundtrip_through_json(strict_one_stage):
    records, report = strict_one_stage
    for rec in records:
        blob = json.dumps(rec.to_jsonable())
        again = StageRecordB.from_jsonable(json.loads(blob))
        assert again == rec
    blob = json.dumps(report.to_jsonable())
    assert DiscontinuityReport.from_jsonable(json.loads(blob)) == report


def test_report_roundtrip_handles_missing_optionals():
    rp = VerificationReportB(
        stage=0,
        bracket=(0.2, 0.2, 0.2, True),
        witness={"mechanism_ok": True},
        l0_value=1.0,
        l0_target=0.5,
        l0_ok=True,
        factor_gap=None,
        factor_ok=None,
        ch_gap=None,
        ch_branch=None,
        ch_ok=None,
        q_logs=None,
        split_rate=None,
        smallness=((2, 0.0, 0.5, 0, True),),
        norm_delta=0.0,
        norm_bound=0.0,
        prefix_ok=True,
    )
    again = VerificationReportB.from_jsonable(json.loads(json.dumps(rp.to_jsonable())))
    assert again == rp
    assert again.all_ok


def test_capped_mode_completes_quickly():
    cfg = ConstructBConfig(
        K=1, mode="capped", m0_cap=64, m_cap=8, samples_per_band=3, sweep_points=41
    )
    records, report = run_construction_b(from_values([0.0]), 1.0, config=cfg)
    r1 = records[1]
    assert (r1.m0, r1.m, r1.h) == (64, 1, 2)
    assert r1.p_k == 192
    # the shallow stretch still lands the infimum inside the bracket
    assert 0.12 <= r1.e_k <= 0.16
    assert r1.report.all_ok
    assert report.all_ok
