import csv
import io
import math

import pytest

from oracles import fourier_annulus_capacity, mp_annulus_kernel
from suita_lab.errors import DomainError
from suita_lab.geometry import Annulus, Disc, UnitDisc, build_quadrature, puncture
from suita_lab.green import log_capacity
from suita_lab.suita import (CSV_FIELDS, analytic_capacity_disc, curvature_residual, records_to_csv,
                             suita_ratio, suita_scan, volume_bound_check)

# pi K / c^2 from the two independent oracles, frozen
ANNULUS_RATIO_025_05 = 1.0000104779587531


def test_disc_ratio_is_one():
    rec = suita_ratio(UnitDisc(), 0.6)
    assert abs(rec.ratio - 1) < 1e-8
    assert rec.curvature == pytest.approx(-4.0)
    assert (rec.method_K, rec.method_c) == ("closed_form", "closed_form")


def test_annulus_ratio_value():
    rec = suita_ratio(Annulus(0.25), 0.5)
    oracle = math.pi * mp_annulus_kernel(0.25, 0.5, 0.5).real / fourier_annulus_capacity(0.25, 0.5) ** 2
    assert oracle == pytest.approx(ANNULUS_RATIO_025_05, rel=1e-12)
    assert rec.ratio == pytest.approx(ANNULUS_RATIO_025_05, rel=1e-9)
    assert rec.ratio > 1
    num = suita_ratio(Annulus(0.25), 0.5, "gram_numeric")
    assert num.ratio == pytest.approx(rec.ratio, rel=1e-3)


def test_punctured_ratio_tends_to_one():
    gaps = [abs(suita_ratio(puncture(UnitDisc(), [0.3], e), 0.6).ratio - 1) for e in (1e-2, 1e-3)]
    assert gaps[1] < gaps[0] < 1e-3


def test_curvature_examples():
    assert curvature_residual(UnitDisc(), 0.2, 1e-3) < 1e-4
    assert curvature_residual(UnitDisc(), 0, 1e-3) < 1e-4
    assert curvature_residual(Annulus(0.3), 0.55, 1e-2) < 1e-2
    d = curvature_residual(Annulus(0.3), 0.55, detail=True)
    assert set(d) >= {"residual", "laplacian_log_c", "pi_K", "error_estimate", "h"}


def test_curvature_stencil_outside():
    with pytest.raises(DomainError) as exc:
        curvature_residual(Annulus(0.3), 0.305, 1e-2)
    assert exc.value.tag == "stencil-outside"


def test_analytic_capacity_examples():
    assert analytic_capacity_disc(1, 0) == pytest.approx(1.0)
    assert analytic_capacity_disc(1, 0.6) == pytest.approx(1 / 0.64)
    assert analytic_capacity_disc(2, 0) == pytest.approx(0.5)
    assert analytic_capacity_disc(2, 0) == pytest.approx(log_capacity(Disc(0, 2.0), 0).value)
    assert analytic_capacity_disc(2, 1 + 0.5j) == pytest.approx(log_capacity(Disc(0, 2.0), 1 + 0.5j).value)
    with pytest.raises(DomainError):
        analytic_capacity_disc(1, 1.0)


def test_volume_bound_examples():
    grid = build_quadrature(UnitDisc(), 256)
    rep = volume_bound_check(UnitDisc(), 0, grid)
    assert abs(rep["K_times_volume"] - 1) < 1e-3 and rep["equality"] and rep["equality_expected"]
    assert volume_bound_check(UnitDisc(), 0.5, grid)["K_times_volume"] > 1
    assert volume_bound_check(Annulus(0.3), 0.5)["K_times_volume"] > 1


def test_scan_examples():
    recs = suita_scan(UnitDisc(), [0, 0.3, 0.6])
    assert [r.z0 for r in recs] == [0, 0.3, 0.6]
    assert all(abs(r.ratio - 1) < 1e-8 for r in recs)
    ring = [0.5 * complex(math.cos(a), math.sin(a)) for a in (0, 1, 2, 3)]
    assert min(r.ratio for r in suita_scan(Annulus(0.25), ring, workers=2)) > 1
    assert suita_scan(UnitDisc(), []) == []


def test_scan_csv():
    text = records_to_csv(suita_scan(UnitDisc(), [0, 0.3j]))
    rows = list(csv.DictReader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_FIELDS
    assert float(rows[1]["z0_im"]) == 0.3 and float(rows[1]["ratio"]) == pytest.approx(1.0)
