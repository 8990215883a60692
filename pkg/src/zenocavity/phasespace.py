"""Wigner-function evaluation and raster export.

Convention: W(xi) = (2/pi) Tr[rho D(xi) P D(-xi)] with P the photon-number
parity operator, so W is real, bounded by +-2/pi, and a coherent state
|alpha> peaks at xi = alpha with W = 2/pi. Grayscale exports map
[-2/pi, 2/pi] linearly onto [0, 255]; figures therefore depend on this
convention and it is fixed here once.

Displacing a state towards the edge of a window pushes it against the
Fock truncation, and the displaced-parity value turns into order-one
garbage once the state clips. Evaluation therefore pads the state with
zeros up to the basis size the window needs (exact, the state has no
support there). Every displacement used lies on the real or the imaginary
axis (the composition-law phase between the two drops out of the parity
expectation), so one eigendecomposition per axis serves the whole raster
and padding stays cheap.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import IO

import numpy as np

from .fock import FieldState, annihilation_op, creation_op, required_dim

W_MAX = 2.0 / math.pi

#: hard ceiling on the padded basis; beyond it far points clip and warn
MAX_PAD_DIM = 520

#: displaced-state population allowed in the top 3 levels before a point
#: is reported as clipped (reached only when MAX_PAD_DIM caps the padding)
CLIP_TOL = 1e-3


def _warn_clipped(n_clipped: int, n_total: int) -> None:
    warnings.warn(
        f"{n_clipped}/{n_total} phase-space points push the state against "
        "the truncation; their values are unreliable, increase dim",
        RuntimeWarning,
        stacklevel=3,
    )


@lru_cache(maxsize=32)
def _axis_eig(dim: int, imag_axis: bool) -> tuple[np.ndarray, np.ndarray]:
    """Eigensystem (w, v) with D(t) = v exp(-i t w) v+ for t on one axis.

    Real axis: D(x) = exp(x (a+ - a)) = exp(-i x H), H = i(a+ - a).
    Imaginary axis: D(iy) = exp(iy (a+ + a)) = exp(-i y H'), H' = -(a+ + a).
    """
    if imag_axis:
        h = -(creation_op(dim) + annihilation_op(dim))
    else:
        h = 1j * (creation_op(dim) - annihilation_op(dim))
    w, v = np.linalg.eigh(h)
    w.flags.writeable = False
    v.flags.writeable = False
    return w, v


def _support_level(vec: np.ndarray, tail: float = 1e-14) -> int:
    """Highest occupied level, ignoring a `tail` of probability."""
    probs = np.abs(vec) ** 2
    cum = np.cumsum(probs[::-1])
    keep = np.nonzero(cum > tail)[0]
    return int(len(vec) - 1 - keep[0]) if len(keep) else 0


def _padded_dim(vec: np.ndarray, xi_max: float) -> int:
    reach = math.sqrt(_support_level(vec) + 1.0) + xi_max
    return max(len(vec), min(required_dim(reach), MAX_PAD_DIM))


def _pad(vec: np.ndarray, dim: int) -> np.ndarray:
    if len(vec) == dim:
        return vec
    out = np.zeros(dim, dtype=np.complex128)
    out[: len(vec)] = vec
    return out


def _axis_displace_all(ts: np.ndarray, vec: np.ndarray, imag_axis: bool) -> np.ndarray:
    """Rows D(t)vec for every t in ts; shape (len(ts), dim)."""
    w, v = _axis_eig(len(vec), imag_axis)
    base = v.conj().T @ vec
    return (np.exp(-1j * np.outer(ts, w)) * base) @ v.T


@dataclass(frozen=True)
class WignerGrid:
    """Rectangular raster of W over [x_min, x_max] x [y_min, y_max].

    values[j, i] = W(x_i + 1j * y_j) with both axes ascending.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int
    values: np.ndarray

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("empty grid bounds")
        if self.values.shape != (self.ny, self.nx):
            raise ValueError("values shape must be (ny, nx)")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    def integral(self) -> float:
        """Trapezoid-rule integral of W over the grid."""
        return float(np.trapezoid(np.trapezoid(self.values, self.xs, axis=1), self.ys))


def _state_vectors(state_or_rho) -> list[tuple[float, np.ndarray]]:
    """Decompose the argument into weighted pure-state vectors."""
    if isinstance(state_or_rho, FieldState):
        return [(1.0, state_or_rho.amps)]
    rho = np.asarray(state_or_rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("expected a FieldState or a square density matrix")
    w, v = np.linalg.eigh(rho)
    return [(float(w[k]), v[:, k]) for k in range(len(w)) if w[k] > 1e-12]


def wigner_point(state_or_rho, xi: complex) -> float:
    """W at a single phase-space point."""
    parts = _state_vectors(state_or_rho)
    xi = complex(xi)
    pad_dim = max(_padded_dim(vec, abs(xi)) for _, vec in parts)
    parity = np.where(np.arange(pad_dim) % 2 == 0, 1.0, -1.0)
    total = 0.0
    clipped = False
    for weight, vec in parts:
        col = _axis_displace_all(np.array([-xi.real]), _pad(vec, pad_dim), False)[0]
        disp = _axis_displace_all(np.array([-xi.imag]), col, True)[0]
        clipped = clipped or float(np.sum(np.abs(disp[-3:]) ** 2)) > CLIP_TOL
        total += weight * float(parity @ (np.abs(disp) ** 2))
    if clipped:
        _warn_clipped(1, 1)
    return W_MAX * total


def wigner_grid(
    state_or_rho,
    bounds: tuple[float, float, float, float],
    nx: int = 121,
    ny: int = 121,
) -> WignerGrid:
    """Raster W over bounds = (x_min, x_max, y_min, y_max)."""
    x_min, x_max, y_min, y_max = (float(b) for b in bounds)
    parts = _state_vectors(state_or_rho)
    xs = np.linspace(x_min, x_max, nx)
    ys = np.linspace(y_min, y_max, ny)
    corner = math.hypot(max(abs(x_min), abs(x_max)), max(abs(y_min), abs(y_max)))
    pad_dim = max(_padded_dim(vec, corner) for _, vec in parts)
    parity = np.where(np.arange(pad_dim) % 2 == 0, 1.0, -1.0)
    w_y, v_y = _axis_eig(pad_dim, True)
    row_phases = np.exp(-1j * np.outer(-ys, w_y))
    values = np.zeros((ny, nx))
    n_clipped = 0
    for weight, vec in parts:
        cols = _axis_displace_all(-xs, _pad(vec, pad_dim), False)  # (nx, dim)
        projected = cols @ v_y.conj()  # row i holds v_y+ D(-x_i) vec
        for i in range(nx):
            disp = (row_phases * projected[i]) @ v_y.T  # (ny, dim)
            probs = np.abs(disp) ** 2
            n_clipped += int(np.count_nonzero(probs[:, -3:].sum(axis=1) > CLIP_TOL))
            values[:, i] += W_MAX * weight * (probs @ parity)
    if n_clipped:
        _warn_clipped(n_clipped, nx * ny * len(parts))
    return WignerGrid(
        x_min=x_min, x_max=x_max, y_min=y_min, y_max=y_max, nx=nx, ny=ny, values=values
    )


def default_bounds(s: int, margin: float = 3.0) -> tuple[float, float, float, float]:
    """Square window covering the exclusion circle of radius sqrt(s)."""
    r = math.sqrt(max(s, 1)) + margin
    return (-r, r, -r, r)


def export_csv(grid: WignerGrid, fh: IO[str]) -> None:
    """Rows `x,y,w`, row-major over the raster, 17 significant digits."""
    fh.write("x,y,w\n")
    xs, ys = grid.xs, grid.ys
    for j in range(grid.ny):
        for i in range(grid.nx):
            fh.write(f"{xs[i]:.17g},{ys[j]:.17g},{grid.values[j, i]:.17g}\n")


def import_csv(fh: IO[str]) -> WignerGrid:
    """Rebuild a grid from export_csv output (bit-exact round trip)."""
    header = fh.readline().strip()
    if header != "x,y,w":
        raise ValueError(f"unexpected header {header!r}")
    xs: list[float] = []
    ys: list[float] = []
    ws: list[float] = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        x, y, w = line.split(",")
        xs.append(float(x))
        ys.append(float(y))
        ws.append(float(w))
    nx = len(set(xs))
    ny = len(set(ys))
    if nx * ny != len(ws):
        raise ValueError("raster is not rectangular")
    values = np.array(ws).reshape(ny, nx)
    return WignerGrid(
        x_min=min(xs), x_max=max(xs), y_min=min(ys), y_max=max(ys),
        nx=nx, ny=ny, values=values,
    )


def export_pgm(grid: WignerGrid, fh: IO[str]) -> None:
    """ASCII PGM, linear map [-2/pi, 2/pi] -> [0, 255], top row = y_max.

    Header comments record the bounds so the image is self-describing.
    """
    levels = np.clip(
        np.round((grid.values + W_MAX) / (2.0 * W_MAX) * 255.0), 0, 255
    ).astype(int)
    fh.write("P2\n")
    fh.write("# wigner raster, 0 -> W=-2/pi, 255 -> W=+2/pi\n")
    fh.write(f"# x_min={grid.x_min:.17g} x_max={grid.x_max:.17g}\n")
    fh.write(f"# y_min={grid.y_min:.17g} y_max={grid.y_max:.17g}\n")
    fh.write(f"{grid.nx} {grid.ny}\n255\n")
    for j in range(grid.ny - 1, -1, -1):
        fh.write(" ".join(str(v) for v in levels[j]) + "\n")


def count_lobes(
    grid: WignerGrid, rel_threshold: float = 0.25, smooth_sigma: float = 0.5
) -> int:
    """Number of well-separated coherent lobes in a Wigner raster.

    Interference fringes between cat components peak as high as the lobes
    themselves, so W is first blurred with a Gaussian of smooth_sigma
    phase-space units: fringes alternate sign on a sub-unit scale and
    average away while the unit-wide lobes survive. A cell then counts as
    a lobe when it dominates its 8 neighbours and exceeds rel_threshold
    times the smoothed maximum.
    """
    from scipy.ndimage import gaussian_filter

    dx = (grid.x_max - grid.x_min) / (grid.nx - 1)
    dy = (grid.y_max - grid.y_min) / (grid.ny - 1)
    a = gaussian_filter(grid.values, sigma=(smooth_sigma / dy, smooth_sigma / dx))
    cut = rel_threshold * float(np.max(a))
    count = 0
    for j in range(1, grid.ny - 1):
        for i in range(1, grid.nx - 1):
            c = a[j, i]
            if c <= cut:
                continue
            patch = a[j - 1:j + 2, i - 1:i + 2]
            if c >= patch.max() and np.count_nonzero(patch == c) == 1:
                count += 1
    return count
