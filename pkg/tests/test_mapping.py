import csv
import io
import math

import numpy as np
import pytest

from suita_lab.errors import DomainError, NumericalError
from suita_lab.geometry import Annulus, UnitDisc, contains
from suita_lab.green import green_array
from suita_lab.mapping import (integrate_polyline, integrate_segment, local_uniformizer_disc,
                               map_validation, riemann_map_from_kernel)
from suita_lab.variation import sublevel_domain


def test_local_uniformizer_examples():
    m0 = local_uniformizer_disc(1, 0)
    z = np.array([0.1, 0.3j, -0.5 + 0.2j])
    assert np.allclose(m0(z), z)
    m = local_uniformizer_disc(1, 0.5)
    assert m.derivative(0.5) == pytest.approx(1 / 0.75)
    pts = np.array([0.1, -0.3j, 0.8, 0.4 + 0.4j])
    assert np.max(np.abs(green_array(UnitDisc(), pts, 0.5) - np.log(np.abs(m(pts))))) < 1e-10
    with pytest.raises(DomainError):
        local_uniformizer_disc(1, 1.0)


def test_integrate_segment_polynomial():
    assert integrate_segment(lambda t: 3 * t**2, 0, 1 + 1j) == pytest.approx((1 + 1j) ** 3, abs=1e-13)
    assert integrate_polyline(lambda t: np.exp(t), [0, 1, 1 + 1j]) == pytest.approx(np.exp(1 + 1j) - 1, abs=1e-12)


def test_integrate_segment_unconverged():
    with pytest.raises(NumericalError):
        integrate_segment(lambda t: np.sign(np.real(t) - 0.3141), 0, 1, tol=1e-15)


def test_radial_map_at_centre():
    pts = [0.1, 0.2j, -0.3]
    smap = riemann_map_from_kernel(UnitDisc(), 0, -1, pts)
    # f0 = z, the disc's Green uniformizer; the sublevel is sent onto |w| < e^-1
    assert np.allclose(smap.values, pts, atol=1e-12)
    assert smap.radius == pytest.approx(math.exp(-1))
    assert smap.derivative_at_pole == pytest.approx(1.0)


def test_mobius_oracle_off_centre():
    sub = sublevel_domain(UnitDisc(), 0.3, -0.7)
    rng = np.random.default_rng(0)
    pts = [z for z in 0.3 + 0.4 * rng.uniform(-1, 1, 80) + 0.4j * rng.uniform(-1, 1, 80) if contains(sub, z)]
    smap = riemann_map_from_kernel(UnitDisc(), 0.3, -0.7, pts)
    mob = local_uniformizer_disc(1, 0.3)
    assert np.max(np.abs(smap.values - mob(np.array(pts)))) < 1e-5
    val = map_validation(smap, UnitDisc(), 0.3, -0.7)
    assert val["pass"] and val["corollary_residual"] < 1e-6 and val["image_inside_radius"]


def test_loop_returns_to_zero():
    smap = riemann_map_from_kernel(UnitDisc(), 0, -1, [[0.2, 0.2 + 0.2j, 0.0]])
    assert abs(smap.values[0]) < 1e-8
    assert smap.meta["loop_residual"] < 1e-8


def test_disc_validation_residuals():
    smap = riemann_map_from_kernel(UnitDisc(), 0, -1, [0.1, 0.25j, -0.2 - 0.1j])
    val = map_validation(smap, UnitDisc(), 0, -1)
    assert val["green_residual"] < 1e-6 and val["corollary_residual"] < 1e-6


def test_rotated_map_fails_derivative_check():
    smap = riemann_map_from_kernel(UnitDisc(), 0, -1, [0.1, 0.2j])
    bad = map_validation(smap.rotated(math.pi / 4), UnitDisc(), 0, -1)
    assert not bad["derivative_ok"] and not bad["pass"]
    # modulus is untouched by the rotation
    assert bad["green_residual"] < 1e-6


def test_annulus_crescent_map():
    # simply connected sublevel below the saddle: conformal route
    smap = riemann_map_from_kernel(Annulus(0.25), 0.5, -0.2, [0.55, 0.5 + 0.05j, 0.45])
    assert smap.meta["kernel_method"] == "conformal"
    val = map_validation(smap, Annulus(0.25), 0.5, -0.2)
    assert val["pass"]
    # kernel-integrated and global forms differ off the disc, by a small but nonzero amount
    assert val["corollary_residual"] > 0


def test_map_errors():
    with pytest.raises(DomainError) as exc:
        riemann_map_from_kernel(Annulus(0.25), 0.5, -0.001, [0.55])
    assert exc.value.tag == "not-simply-connected"
    with pytest.raises(DomainError) as exc:
        riemann_map_from_kernel(UnitDisc(), 0, -1, [0.9])
    assert exc.value.tag == "path-exits-domain"


def test_map_csv():
    smap = riemann_map_from_kernel(UnitDisc(), 0, -1, [0.1])
    rows = list(csv.reader(io.StringIO(smap.to_csv())))
    assert rows[0] == ["t_re", "t_im", "f0_re", "f0_im"]
    assert float(rows[1][2]) == pytest.approx(0.1)
