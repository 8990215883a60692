"""Photon-number-selective kick from a finite interrogation pulse.

A control atom sits in a level h that is uncoupled from the resonant
cavity mode. The atom-cavity eigenstates at n photons are the doublet
|+,n>, |-,n>, split by Omega*sqrt(n) around the bare line (Omega is the
vacuum Rabi frequency). An interrogation pulse drives h towards this
doublet; because the line position depends on n it can address a single
photon number s.

Level scheme per photon number n (rotating frame of the drive, drive
tuned to the h -> |+,s> line, detunings = transition minus drive):

    n >= 1:   {|h,n>, |+,n>, |-,n>}
              delta_plus(n)  = (Omega/2)(sqrt(n) - sqrt(s))
              delta_minus(n) = -(Omega/2)(sqrt(n) + sqrt(s))
              couplings Omega_R / (2 sqrt(2)) to each branch
    n == 0:   bare two-level {|h,0>, |g,0>} at delta = -(Omega/2) sqrt(s),
              coupling Omega_R / 2 (the vacuum has no dressed doublet)

The drive never couples different photon numbers, so one kick is exactly
block-diagonal in n and the model below is exact within this level
scheme; no time-dependent joint integration is needed.

In the resolved limit (Omega_R much below the line spacing) a 2*pi pulse
flips the sign of |h,s> and leaves every other |h,n> untouched: the ideal
kick 1 - 2|s><s| on the field, the atom always back in h. Finite Omega_R
or a Rabi angle other than 2*pi leak population out of h; the conditioned
field operator then is a diagonal contraction, reported together with the
per-n leak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fock import FieldState

#: selectivity ratios above this make the addressed line poorly resolved
SELECTIVITY_WARN = 0.3


@dataclass(frozen=True)
class PulseParams:
    """Interrogation pulse acting on photon number s.

    omega: vacuum Rabi frequency (rad/s), sets the dressed-level splitting.
    rabi_drive: drive Rabi frequency on the bare h->g line (rad/s).
    theta: target Rabi angle on the resonant dressed transition (rad).
    s: addressed photon number.
    include_minus_branch: couple both dressed branches (the physical case)
        or only |+,n> (useful for analytic checks).
    """

    omega: float
    rabi_drive: float
    theta: float
    s: int
    include_minus_branch: bool = True

    def __post_init__(self):
        if self.omega <= 0 or self.rabi_drive <= 0:
            raise ValueError("omega and rabi_drive must be positive")
        # theta = 0 is allowed as the degenerate zero-length pulse (identity)
        if not 0 <= self.theta <= 4 * math.pi:
            raise ValueError("theta must lie in [0, 4*pi]")
        if self.s < 0:
            raise ValueError("s must be non-negative")

    @property
    def selectivity_ratio(self) -> float:
        """rabi_drive over the spacing to the nearest unaddressed line."""
        gap = self.omega * abs(math.sqrt(self.s + 1) - math.sqrt(self.s))
        return self.rabi_drive / gap

    @property
    def duration(self) -> float:
        """Pulse length in seconds for the target angle on the s line."""
        if self.s == 0:
            return self.theta / self.rabi_drive
        return self.theta * math.sqrt(2.0) / self.rabi_drive


@dataclass(frozen=True)
class JointKickResult:
    """Outcome of one realistic kick, conditioned on the atom back in h.

    field_unitary_on_h: diagonal field operator <h,n|U_n|h,n> (a
        contraction, unitary only in the ideal limit).
    atom_leak: per-n population left outside |h> by the pulse.
    success_probability: norm of the conditioned branch for the input state.
    """

    field_unitary_on_h: np.ndarray
    atom_leak: np.ndarray
    success_probability: float


def dressed_detunings(n: int, params: PulseParams) -> tuple[float, float]:
    """Detunings (transition minus drive) of the two branches at n photons.

    At n = 0 there is a single bare line; its detuning is returned in the
    first slot and the second is NaN.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    half = 0.5 * params.omega
    rs = math.sqrt(params.s)
    if n == 0:
        return (-half * rs, math.nan)
    rn = math.sqrt(n)
    return (half * (rn - rs), -half * (rn + rs))


def pulse_block_unitary(n: int, params: PulseParams) -> np.ndarray:
    """Propagator of the pulse on the n-photon block.

    Basis {|h,n>, |+,n>, |-,n>} for n >= 1 (2x2 {h, +} when the minus
    branch is excluded), {|h,0>, |g,0>} at n = 0. Returns
    exp(-i H_n tau) with tau the pulse duration for the target angle.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    coupling = params.rabi_drive / (2.0 * math.sqrt(2.0))
    tau = params.theta * math.sqrt(2.0) / params.rabi_drive
    if n == 0:
        coupling = params.rabi_drive / 2.0
        tau = params.theta / params.rabi_drive
        delta, _ = dressed_detunings(0, params)
        h = np.array([[0.0, coupling], [coupling, delta]], dtype=np.complex128)
    else:
        d_plus, d_minus = dressed_detunings(n, params)
        if params.include_minus_branch:
            h = np.array(
                [
                    [0.0, coupling, coupling],
                    [coupling, d_plus, 0.0],
                    [coupling, 0.0, d_minus],
                ],
                dtype=np.complex128,
            )
        else:
            h = np.array([[0.0, coupling], [coupling, d_plus]], dtype=np.complex128)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * tau)) @ v.conj().T


@lru_cache(maxsize=256)
def conditioned_field_diagonal(params: PulseParams, dim: int) -> np.ndarray:
    """Diagonal entries <h,n|U_n|h,n> for n = 0..dim-1."""
    diag = np.array([pulse_block_unitary(n, params)[0, 0] for n in range(dim)])
    diag.flags.writeable = False
    return diag


def atom_leak_per_n(params: PulseParams, dim: int) -> np.ndarray:
    """Population leaving |h> at each photon number, 1 - |<h,n|U_n|h,n>|^2."""
    diag = conditioned_field_diagonal(params, dim)
    return np.clip(1.0 - np.abs(diag) ** 2, 0.0, 1.0)


def realistic_kick(
    state: FieldState, params: PulseParams, leak_threshold: float = 0.5
) -> tuple[FieldState, JointKickResult]:
    """Apply one pulse to the field with the atom starting in |h>.

    The joint state after the pulse is sum_n amps[n] U_n |h or branch, n>;
    conditioning on the atom found in h renormalizes the field and the
    branch populations are reported, not silently discarded.
    """
    diag = conditioned_field_diagonal(params, state.dim)
    leak = atom_leak_per_n(params, state.dim)
    conditioned = diag * state.amps
    p_success = float(np.linalg.norm(conditioned) ** 2)
    if 1.0 - p_success > leak_threshold:
        raise RuntimeError(
            f"atom leak {1.0 - p_success:.3g} above threshold {leak_threshold:.3g};"
            " pulse parameters do not realize a selective kick"
        )
    result = JointKickResult(
        field_unitary_on_h=np.diag(diag),
        atom_leak=leak,
        success_probability=p_success,
    )
    return FieldState(conditioned), result
