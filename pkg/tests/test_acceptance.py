"""Acceptance gate: one test per release criterion.

Each test prints a single PASS/FAIL line (on the real stdout, so it shows
up even under pytest capture) and then asserts, so the suite both documents
and enforces the criteria.
"""

import math
import time

import numpy as np
import pytest
import yaml

from ramanlink import (accumulate_link, fit_profile, gsnr,
                       gsnr_from_measurement, nli_span, parse_link_config,
                       solve_power_evolution, validate_link)
from ramanlink.cli import main
from ramanlink.fixtures import paper_fixture, write_paper_fixture


@pytest.fixture()
def report(capfd):
    """Print one PASS/FAIL line per criterion past pytest's capture."""
    def _report(num: int, name: str, ok: bool, detail: str) -> None:
        line = f"ACCEPTANCE {num} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
        with capfd.disabled():
            print(line, flush=True)
        assert ok, line
    return _report


def test_1_loss_only_analytic(report):
    t0 = time.perf_counter()
    doc = paper_fixture(num_channels=1, num_spans=1)
    doc["spans"][0]["pumps"] = []
    vlink = validate_link(parse_link_config(yaml.safe_dump(doc)))
    span = vlink.spans[0]
    evo = solve_power_evolution(span, vlink.frequencies, vlink.launch_powers,
                                vlink.options)
    alpha = span.attenuation(vlink.frequencies[0])
    expected = vlink.launch_powers[0] * np.exp(-2.0 * alpha * evo.z)
    max_rel = float(np.max(np.abs(evo.channel_powers()[0] - expected)
                           / expected))
    fit = fit_profile(evo.z, evo.channel_powers()[0] / vlink.launch_powers[0],
                      vlink.options)
    elapsed = time.perf_counter() - t0
    ok = max_rel < 1e-6 and abs(fit.alpha1) < 1e-3 * fit.alpha0 and elapsed < 1.0
    report(1, "loss-only analytic agreement", ok,
           f"max rel {max_rel:.2e} < 1e-6, |alpha1|/alpha0 "
           f"{abs(fit.alpha1) / fit.alpha0:.2e} < 1e-3, {elapsed:.2f} s < 1 s")


def test_2_fit_recovery_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    z = np.linspace(0.0, 60e3, 601)
    worst = {"a0": 0.0, "a1": 0.0, "sigma": 0.0, "mse": 0.0}
    ok = True
    for _ in range(100):
        a0 = rng.uniform(2e-5, 1.5e-4)
        a1 = rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 1.0) * a0
        sigma = math.exp(rng.uniform(math.log(3e-5), math.log(3e-3)))
        rho = np.exp(-2.0 * (a0 * z + a1 / sigma
                             * (1.0 - np.exp(-sigma * z))))
        fit = fit_profile(z, rho)
        e0 = abs(fit.alpha0 - a0) / a0
        e1 = abs(fit.alpha1 - a1) / abs(a1)
        es = abs(fit.sigma - sigma) / sigma
        worst["a0"] = max(worst["a0"], e0)
        worst["a1"] = max(worst["a1"], e1)
        worst["sigma"] = max(worst["sigma"], es)
        worst["mse"] = max(worst["mse"], fit.mse)
        ok = ok and e0 < 0.01 and e1 < 0.05 and es < 0.05 and fit.mse < 1e-10
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 10.0
    report(2, "fit-recovery oracle (100 triples)", ok,
           f"worst alpha0 {worst['a0']:.2e} < 1%, alpha1 {worst['a1']:.2e}"
           f" < 5%, sigma {worst['sigma']:.2e} < 5%, mse {worst['mse']:.1e}"
           f" < 1e-10, {elapsed:.1f} s < 10 s")


def test_3_constant_loss_reduction(report):
    from test_nli import flat_profiles, reduced_constant_loss
    from conftest import make_link
    vlink = make_link(num_channels=5, num_spans=1)
    span = vlink.spans[0]
    alpha0 = 2.3e-5
    profiles = flat_profiles(5, alpha0)
    rng = np.random.default_rng(3)
    p_in = 1e-3 * rng.uniform(0.5, 2.0, 5)
    p_out = 1e-4 * rng.uniform(0.5, 2.0, 5)
    got = np.array([b.p_nli_total for b in
                    nli_span(span, vlink.channels, profiles, p_in, p_out)])
    expected = reduced_constant_loss(span, vlink.channels, alpha0,
                                     [p_in, p_out])
    max_rel = float(np.max(np.abs(got - expected) / expected))
    report(3, "constant-loss k=q=0 reduction", max_rel < 1e-12,
           f"max rel {max_rel:.2e} < 1e-12, 5-channel comb")


def test_4_cubic_scaling_law(report, paper_report):
    rep, _ = paper_report
    x = 10.0 ** 0.3                          # +3.000 dB
    scaled = []
    for sol, prof, span in zip(rep.chain, rep.profiles, rep.vlink.spans):
        scaled.append(nli_span(span, rep.vlink.channels, prof,
                               x * sol.p_in, x * sol.p_out))
    base_tot = rep.nli_totals
    scaled_tot = accumulate_link(scaled)
    delta_db = 10.0 * np.log10(scaled_tot / base_tot)
    max_err = float(np.max(np.abs(delta_db - 9.0)))
    report(4, "cubic scaling (+3 dB -> +9.000 dB)", max_err < 1e-9,
           f"max |delta - 9 dB| {max_err:.2e} dB < 1e-9 dB, 9-span fixture")


def test_5_series_convergence(report, paper_report):
    rep, _ = paper_report
    bumped = []
    for sol, prof, span in zip(rep.chain, rep.profiles, rep.vlink.spans):
        bumped.append(nli_span(span, rep.vlink.channels, prof,
                               sol.p_in, sol.p_out, q_extra=5))
    base_tot = rep.nli_totals
    bump_tot = accumulate_link(bumped)
    max_db = float(np.max(np.abs(10.0 * np.log10(bump_tot / base_tot))))
    report(5, "series convergence (Q+5)", max_db < 0.01,
           f"max change {max_db:.2e} dB < 0.01 dB on the 9-span fixture")


def test_6_gsnr_algebra(report):
    from conftest import make_link
    vlink = make_link(num_channels=1, num_spans=1)
    ch = vlink.channels[0]
    rep = gsnr(ch, 1e-3, 2.5e-6, 4.1e-6)
    alg_err = abs(1.0 / rep.gsnr - (1.0 / rep.osnr_ase + 1.0 / rep.snr_nli)) \
        * rep.gsnr
    snr_bb = 10.0 ** 2.2                     # 22 dB back-to-back floor
    inv_err = 0.0
    for g in (10.0 ** 0.9, 10.0 ** 1.4, 10.0 ** 2.0):
        meas = 1.0 / (1.0 / g + 1.0 / snr_bb)
        inv_err = max(inv_err, abs(gsnr_from_measurement(meas, snr_bb) - g) / g)
    ok = alg_err < 1e-12 and inv_err < 1e-9
    report(6, "GSNR algebra + back-to-back inversion", ok,
           f"partition residual {alg_err:.1e} < 1e-12, inversion "
           f"{inv_err:.1e} < 1e-9 at 22 dB floor")


def test_7_end_of_span_share(report, paper_report):
    rep, _ = paper_report
    shares = [b.end_share for spans in rep.breakdowns for b in spans]
    mean = float(np.mean(shares))
    ok = 0.25 <= mean <= 0.65
    report(7, "end-of-span NLI share (soft)", ok,
           f"mean {mean:.3f} in [0.25, 0.65], max {max(shares):.3f}, "
           f"90 ch x 9 spans")


def test_8_real_time_performance(report, paper_report):
    _, elapsed = paper_report
    report(8, "real-time performance", elapsed < 1.0,
           f"90 ch x 9 spans pipeline {elapsed:.2f} s < 1 s")


def test_9_csv_determinism(report, tmp_path):
    link = tmp_path / "link.yaml"
    write_paper_fixture(link)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["solve", "--input", str(link), "--out", str(a)]) == 0
    assert main(["solve", "--input", str(link), "--out", str(b)]) == 0
    names = ["profiles.csv", "nli.csv", "gsnr.csv", "manifest.json"]
    same = all((a / n).read_bytes() == (b / n).read_bytes() for n in names)
    report(9, "byte-identical reruns", same,
           "two solve runs, all CSVs and manifest compared byte for byte")
