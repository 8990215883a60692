import io
import math

import numpy as np
import pytest

from zenocavity.fock import (
    FieldState,
    cat_state,
    coherent,
    displacement_op,
    fock_basis,
    photon_distribution,
    vacuum,
)
from zenocavity.openquantum import pure_density
from zenocavity.phasespace import (
    W_MAX,
    WignerGrid,
    count_lobes,
    export_csv,
    export_pgm,
    import_csv,
    wigner_grid,
    wigner_point,
)

TWO_OVER_PI = 2.0 / math.pi


def test_wigner_point_examples():
    assert abs(wigner_point(vacuum(12), 0) - TWO_OVER_PI) < 1e-12
    assert abs(wigner_point(fock_basis(1, 12), 0) + TWO_OVER_PI) < 1e-12
    psi = coherent(2, 40)
    assert abs(wigner_point(psi, 2) - TWO_OVER_PI) < 1e-9
    # analytic gaussian: W(0) = (2/pi) exp(-2 |alpha|^2)
    assert abs(wigner_point(psi, 0) - TWO_OVER_PI * math.exp(-8)) < 1e-9


def test_wigner_point_density_matrix():
    rho = 0.5 * pure_density(vacuum(12)) + 0.5 * pure_density(fock_basis(1, 12))
    assert abs(wigner_point(rho, 0)) < 1e-12  # parities cancel


def test_grid_matches_pointwise_and_peaks_at_center():
    grid = wigner_grid(vacuum(16), (-3, 3, -3, 3), nx=61, ny=61)
    j, i = np.unravel_index(np.argmax(grid.values), grid.values.shape)
    assert grid.xs[i] == pytest.approx(0, abs=1e-12)
    assert grid.ys[j] == pytest.approx(0, abs=1e-12)
    psi = cat_state(2, 1, 40)
    grid = wigner_grid(psi, (-1, 1, -1, 1), nx=9, ny=11)
    for jj in (0, 5, 10):
        for ii in (0, 4, 8):
            xi = complex(grid.xs[ii], grid.ys[jj])
            # grid factorizes D(-xi) into row and column parts; agreement
            # is limited by truncation-level roundoff
            assert abs(grid.values[jj, ii] - wigner_point(psi, xi)) < 1e-10


def test_even_cat_fringes_alternate_along_imaginary_axis():
    # analytic even-cat Wigner on the imaginary axis, alpha = 2:
    # W(iy) = (2/pi) [exp(-2y^2) cos(8y) + exp(-8 - 2y^2)] / (1 + exp(-8))
    psi = cat_state(2, 1, 40)

    def analytic(y):
        return (
            TWO_OVER_PI
            * (math.exp(-2 * y * y) * math.cos(8 * y)
               + math.exp(-8 - 2 * y * y))
            / (1 + math.exp(-8))
        )

    for y in (0.0, math.pi / 16, math.pi / 8, math.pi / 4, 0.9):
        assert wigner_point(psi, 1j * y) == pytest.approx(analytic(y), abs=1e-9)
    assert wigner_point(psi, 1j * math.pi / 8) < -0.4  # negative fringe
    assert wigner_point(psi, 0) > 0.6  # positive peak between the lobes


def test_bounded_by_two_over_pi():
    for psi in (vacuum(20), cat_state(1.5, -1, 24), coherent(1j, 20)):
        grid = wigner_grid(psi, (-3, 3, -3, 3), nx=41, ny=41)
        assert np.max(np.abs(grid.values)) <= W_MAX + 1e-9


def test_normalization_integral():
    # evaluation pads internally, so the state's own dim is enough even
    # though the displaced corners reach |xi - alpha| ~ 11
    grid = wigner_grid(coherent(2, 48), (-7, 7, -7, 7), nx=141, ny=141)
    assert abs(grid.integral() - 1.0) < 1e-3


def test_clipping_warns_beyond_padding_cap():
    # displacements past the padding ceiling clip and must say so
    with pytest.warns(RuntimeWarning):
        wigner_point(vacuum(10), 22.0)
    with pytest.warns(RuntimeWarning):
        wigner_grid(vacuum(10), (18, 26, -2, 2), nx=5, ny=5)


def test_displacement_covariance():
    psi = cat_state(1.2, 1, 30)
    gamma = 0.6 - 0.4j
    moved = FieldState(displacement_op(gamma, 30) @ psi.amps)
    for xi in (0.3 + 0.1j, -0.5j, 1.0):
        assert abs(
            wigner_point(moved, xi) - wigner_point(psi, xi - gamma)
        ) < 1e-8


def test_parity_identity_at_origin():
    psi = cat_state(1.7, 1j, 36)
    p = photon_distribution(psi)
    expected = TWO_OVER_PI * (p[0::2].sum() - p[1::2].sum())
    assert wigner_point(psi, 0) == pytest.approx(expected, abs=1e-13)


def test_csv_round_trip_bit_exact():
    grid = wigner_grid(coherent(1, 20), (-2, 2, -1, 1), nx=7, ny=5)
    buf = io.StringIO()
    export_csv(grid, buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == "x,y,w"
    assert len(text.splitlines()) == 1 + 35
    back = import_csv(io.StringIO(text))
    assert np.array_equal(back.values, grid.values)
    buf2 = io.StringIO()
    export_csv(back, buf2)
    assert buf2.getvalue() == text


def test_pgm_format_and_midpoint():
    values = np.zeros((4, 3))
    grid = WignerGrid(x_min=-1, x_max=1, y_min=-1, y_max=1, nx=3, ny=4,
                      values=values)
    buf = io.StringIO()
    export_pgm(grid, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "P2"
    assert lines[4] == "3 4" and lines[5] == "255"
    pixels = [int(v) for row in lines[6:] for v in row.split()]
    assert pixels == [128] * 12
    # extremes clip to 0 / 255
    values2 = np.full((4, 3), W_MAX)
    values2[0, 0] = -W_MAX
    grid2 = WignerGrid(x_min=-1, x_max=1, y_min=-1, y_max=1, nx=3, ny=4,
                       values=values2)
    buf2 = io.StringIO()
    export_pgm(grid2, buf2)
    rows = buf2.getvalue().splitlines()[6:]
    assert rows[-1].split()[0] == "0"  # bottom row written last
    assert rows[0].split()[-1] == "255"


def test_pgm_header_records_bounds():
    grid = wigner_grid(vacuum(10), (-2.5, 2.5, -1.5, 1.5), nx=5, ny=5)
    buf = io.StringIO()
    export_pgm(grid, buf)
    header = buf.getvalue()
    assert "x_min=-2.5" in header and "y_max=1.5" in header


def test_count_lobes_on_cats():
    assert count_lobes(wigner_grid(coherent(2, 40), (-5, 5, -5, 5))) == 1
    assert count_lobes(wigner_grid(cat_state(2.5, 1, 48), (-5, 5, -5, 5))) == 2
