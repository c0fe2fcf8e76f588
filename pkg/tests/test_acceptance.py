"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test prints a single ``PASS`` or ``FAIL`` line before asserting, so the
outcome of each criterion can be read directly from ``pytest -v`` output.
"""
import math
import time
from collections import Counter

import pytest

from irbound.certificates import (
    CertificateInput,
    REFERENCE_INTEGRALS,
    alpha_free_condition,
    bound2_value,
    critical_ratio,
    kk_alpha_bound,
    limit_integrals,
)
from irbound.suite import cross_validation_suite, identity_suite, irb_suite, rp_suite

pytestmark = pytest.mark.acceptance


def report(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail


def failures(results, slack=0.0):
    return [r for r in results if not r.passed or r.margin < -slack]


def test_criterion_1_limit_integral_table(capsys):
    start = time.perf_counter()
    limit_integrals.cache_clear()
    rows = {d: limit_integrals(d) for d in (2, 3, 4)}
    elapsed = time.perf_counter() - start
    bad = []
    for d, li in rows.items():
        ref_I, ref_It = REFERENCE_INTEGRALS[d]
        if abs(li.I - ref_I) > 2e-3:
            bad.append(f"I(d={d})={li.I:.5f}")
        if abs(li.I_tilde - ref_It) > 5e-4:
            bad.append(f"I~(d={d})={li.I_tilde:.5f}")
    values = ", ".join(f"d={d}: I={li.I:.4f} I~={li.I_tilde:.4f}" for d, li in rows.items())
    report(capsys, "limit integral table", not bad and elapsed < 60,
           f"{values}; {elapsed:.1f}s; off-tolerance: {bad or 'none'}")


def test_criterion_2_square_lattice_threshold(capsys):
    for d in (2, 3, 4):
        limit_integrals(d)
    start = time.perf_counter()
    thr = alpha_free_condition(2, 1, 0.0).threshold
    misses = [(d, s) for d in (2, 3, 4) for s in (1, 2, 3)
              if (d, s) != (2, 1) and not alpha_free_condition(d, s, 1.0).holds]
    exception_fails = not alpha_free_condition(2, 1, 1.0).holds
    elapsed = time.perf_counter() - start
    ok = abs(thr - 0.109) <= 3e-3 and not misses and exception_fails and elapsed < 10
    report(capsys, "alpha-free threshold", ok,
           f"threshold={thr:.6f}; ratio-1 misses besides (2,1/2): {misses or 'none'}; {elapsed:.2f}s")


def test_criterion_3_ground_state_alpha_interval(capsys):
    start = time.perf_counter()

    def nonneg(ratio):
        inp = CertificateInput(2, 1, 1.0, -ratio, math.inf, None, "kk")
        return bound2_value(inp, kk_alpha_bound(ratio)) >= 0.0

    boundary = critical_ratio(nonneg, 0.0, 1.0, tol=1e-7)
    grid_ok = all(nonneg(0.13 * i / 130) for i in range(131))
    elapsed = time.perf_counter() - start
    ok = grid_ok and boundary is not None and 0.125 <= boundary <= 0.14 and elapsed < 10
    report(capsys, "ground-state alpha interval", ok,
           f"bound2 >= 0 on [0, 0.13]: {grid_ok}; boundary={boundary}; {elapsed:.2f}s")


@pytest.mark.slow
def test_criterion_4_infrared_bound_suite(capsys):
    start = time.perf_counter()
    res = irb_suite()
    elapsed = time.perf_counter() - start
    bad = failures(res, 1e-9)
    worst = min(r.margin for r in res)
    report(capsys, "infrared bound suite", not bad and elapsed < 600,
           f"{len(res)} checks, {len(bad)} violations, min slack {worst:.3e}; {elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_5_reflection_positivity_suite(capsys):
    start = time.perf_counter()
    res = rp_suite(samples=100)
    elapsed = time.perf_counter() - start
    bad = Counter(r.name for r in failures(res))
    fields = [r for r in res if r.name == "rp_fields"]
    bare = [r.details["bare_z_margin"] for r in fields]
    bare_bad = sum(m < -1e-9 for m in bare)
    ok = not bad and not bare_bad and elapsed < 600
    report(capsys, "reflection positivity suite", ok,
           f"{len(res)} checks; violations by name: {dict(bad) or 'none'}; "
           f"bare-Z inequality violated in {bare_bad}/{len(fields)} draws (min {min(bare):.3e}); {elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_6_identity_suite(capsys):
    start = time.perf_counter()
    res = identity_suite(samples=100)
    elapsed = time.perf_counter() - start
    bad = failures(res, 1e-9)
    counts = Counter(r.name for r in res if r.name != "falk_bruch")
    # the Falk-Bruch check bundles several inequalities; count each one
    for r in res:
        if r.name == "falk_bruch":
            counts.update(r.details["margins"].keys())
    counts.pop("double_commutator_nonneg", None)
    counts.pop("corollary", None)
    short = {k: v for k, v in counts.items() if v < 100 and k != "equality_when_commuting"}
    short.update({} if counts["equality_when_commuting"] >= 10 else {"equality_when_commuting": 0})
    ok = not bad and not short and elapsed < 300
    report(capsys, "inequality identities", ok,
           f"{len(counts)} identities, {len(res)} instances, {len(bad)} violations, "
           f"under-sampled: {short or 'none'}; {elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_7_cross_validation(capsys):
    start = time.perf_counter()
    res = cross_validation_suite()
    elapsed = time.perf_counter() - start
    agree = [r for r in res if r.name == "certificate_paths_agree"]
    below = [r for r in res if r.name == "certificate_below_ed"]
    bad = [r for r in res if not r.passed]
    ok = len(agree) == 50 and below and not bad and elapsed < 300
    report(capsys, "cross-validation", ok,
           f"{len(agree)} path comparisons (max diff {max(-r.margin for r in agree):.1e}), "
           f"{len(below)} ED comparisons, {len(bad)} failures; {elapsed:.1f}s")
