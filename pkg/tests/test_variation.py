import csv
import io
import json
import math

import numpy as np
import pytest

from suita_lab.errors import DomainError
from suita_lab.geometry import Annulus, UnitDisc, as_disc, is_simply_connected
from suita_lab.variation import (TraceSample, VariationTrace, capacity_scaling_check, convexity_report,
                                 geometric_levels, harmonicity_residual, key_lemma_residual,
                                 monotone_report, pde_residual, report_json, second_differences,
                                 sublevel_domain, variation_trace)


def test_geometric_levels():
    lv = geometric_levels()
    assert len(lv) == 12 and lv[0] == pytest.approx(-3.0) and lv[-1] == pytest.approx(-0.05)
    assert all(b > a for a, b in zip(lv, lv[1:]))
    assert geometric_levels(include_base=True)[-1] == 0.0
    ratios = np.array(lv[1:]) / np.array(lv[:-1])
    assert np.allclose(ratios, ratios[0])


def test_sublevel_examples():
    d = as_disc(sublevel_domain(UnitDisc(), 0, -1))
    assert d.radius == pytest.approx(math.exp(-1))
    assert is_simply_connected(sublevel_domain(UnitDisc(), 0.5, -2))
    with pytest.raises(DomainError) as exc:
        sublevel_domain(UnitDisc(), 0, 0)
    assert exc.value.tag == "invalid-level"


def test_disc_trace_values():
    tr = variation_trace(UnitDisc(), 0, [-3, -2, -1, 0])
    _, logk, plus = tr.columns()
    assert np.allclose(logk, -math.log(math.pi) + np.array([6, 4, 2, 0]), atol=1e-13)
    assert np.allclose(plus, -math.log(math.pi), atol=1e-13)
    single = variation_trace(UnitDisc(), 0, [0])
    assert single.samples[0].logK == pytest.approx(math.log(1 / math.pi))


def test_trace_level_validation():
    with pytest.raises(DomainError):
        variation_trace(UnitDisc(), 0, [-1, -2])
    with pytest.raises(DomainError):
        variation_trace(UnitDisc(), 0, [-1, 0.5])
    with pytest.raises(DomainError):
        variation_trace(UnitDisc(), 1.2, [-1])


def test_disc_trace_reports():
    tr = variation_trace(UnitDisc(), 0.3)
    conv = convexity_report(tr)
    assert conv["max_abs_second_diff"] < 1e-8 and conv["pass"]
    mono = monotone_report(tr)
    assert mono["regime"] == "harmonic/equality" and mono["pass"]
    assert harmonicity_residual(tr) < 1e-6
    assert abs(conv["slope_tail"] + 2) < 1e-8


def test_annulus_trace_reports():
    tr = variation_trace(Annulus(0.25), 0.5)
    assert all(p.ok for p in tr.samples)
    conv = convexity_report(tr)
    assert conv["pass"]
    mono = monotone_report(tr)
    assert mono["pass"] and mono["terminal_gap"] < 1e-3
    # the strict curvature is confined to levels above the saddle and is small here
    assert 0 < harmonicity_residual(tr) < 1e-2


def test_annulus_trace_strict_where_effect_is_large():
    tr = variation_trace(Annulus(0.1), math.sqrt(0.1))
    conv = convexity_report(tr)
    assert conv["pass"] and conv["strict_somewhere"]
    mono = monotone_report(tr)
    assert mono["regime"] == "strict" and mono["pass"]
    assert harmonicity_residual(tr) > 1e-2


def _fake(logk):
    s = [-3.0, -2.0, -1.0, 0.0][: len(logk)]
    samples = tuple(TraceSample(a, b, 1.0, b + 2 * a, "fixture") for a, b in zip(s, logk))
    return VariationTrace(0j, samples, logk[-1], 1.0)


def test_decreasing_fixture_fails_monotone():
    rep = monotone_report(_fake([6.0, 4.5, 2.0, 0.5]))
    assert not rep["pass"] and rep["min_step"] < 0


def test_short_traces_error():
    with pytest.raises(DomainError):
        convexity_report(_fake([6.0, 4.0]))
    with pytest.raises(DomainError):
        harmonicity_residual(_fake([6.0, 4.0]))


def test_second_differences_exact_on_quadratics():
    x = np.array([-3.0, -1.7, -0.4, -0.1, 0.0])
    assert np.allclose(second_differences(x, 3 * x**2 - x), 6.0)


def test_kernel_level_identity_examples():
    assert key_lemma_residual(UnitDisc(), 0, 0.2, -1) < 1e-8
    assert key_lemma_residual(UnitDisc(), 0.3, 0.35, -0.5) < 1e-6
    with pytest.raises(DomainError) as exc:
        key_lemma_residual(UnitDisc(), 0, 0.5, -1)
    assert exc.value.tag == "t-outside-sublevel"


def test_kernel_level_identity_annulus_deviation():
    # the identity fails off the equality case; the size tracks the ratio gap
    assert key_lemma_residual(Annulus(0.25), 0.5, 0.55, -0.2) > 1e-6
    assert key_lemma_residual(Annulus(0.1), math.sqrt(0.1), 0.33, -0.2) > 1e-3


def test_pde_examples():
    assert pde_residual(UnitDisc(), 0, 0.1, -1, 1e-3) < 1e-5
    assert pde_residual(UnitDisc(), 0.3, 0.2, -1, 1e-3) < 1e-4
    diag = pde_residual(Annulus(0.25), 0.5, 0.55, -0.5, 1e-2)
    assert math.isfinite(diag)
    with pytest.raises(DomainError):
        pde_residual(UnitDisc(), 0, 0.1, -1e-3, 1e-2)


def test_capacity_scaling_examples():
    assert capacity_scaling_check(UnitDisc(), 0, -1) < 1e-6
    assert capacity_scaling_check(UnitDisc(), 0.4, -0.5) < 1e-5
    with pytest.raises(DomainError):
        capacity_scaling_check(UnitDisc(), 0, 0)


def test_trace_csv_and_json():
    tr = variation_trace(UnitDisc(), 0, [-1, 0])
    rows = list(csv.reader(io.StringIO(tr.to_csv())))
    assert rows[0] == ["re_tau", "logK", "c_tau", "logK_plus_2tau", "method"]
    assert float(rows[1][2]) == pytest.approx(math.e)
    assert json.loads(report_json(monotone_report(tr)))["regime"] == "harmonic/equality"


def test_parallel_trace_matches_serial():
    a = variation_trace(Annulus(0.3), 0.55, workers=1)
    b = variation_trace(Annulus(0.3), 0.55, workers=4)
    assert a.to_csv() == b.to_csv()
