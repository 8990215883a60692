"""Mixed-state evolution under cavity damping for realistic runs.

Density matrices evolve under the damped-cavity master equation

    drho/dt = -i[H, rho] + (1/T_c)(1 + n_th)(a rho a+ - {a+a, rho}/2)
                         + (n_th/T_c)(a+ rho a - {a a+, rho}/2)

integrated with fixed-step classical RK4. Dimensions stay small (<= ~48)
for realistic runs, so the dense density-matrix representation is
deterministic and cheap; no trajectory unraveling. The damping
superoperator is applied through index shifts rather than matmuls since a
is a single subdiagonal.

Interrogation pulses take real time (their duration dominates a realistic
run). A kick inside a damped segment is split symmetrically: damping runs
for the full pulse duration while the conditioned kick map is applied
instantaneously at the pulse midpoint; the splitting error is second
order in (pulse duration / T_c).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .fock import FieldState
from .zeno import KickSpec, displaced_kick, drive_hamiltonian

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LindbladParams:
    """Damped-cavity model: energy decay time t_c (s), thermal occupancy
    n_th, integrator step dt (s)."""

    t_c: float
    n_th: float = 0.0
    dt: float = 0.0  # 0 -> t_c / 1e6

    def __post_init__(self):
        if self.t_c <= 0:
            raise ValueError("t_c must be positive")
        if self.n_th < 0:
            raise ValueError("n_th must be non-negative")
        if self.dt == 0.0:
            object.__setattr__(self, "dt", self.t_c / 1e6)
        if self.dt <= 0 or self.dt > self.t_c / 100:
            raise ValueError("dt must be positive and well below t_c")


def pure_density(state: FieldState) -> np.ndarray:
    return np.outer(state.amps, state.amps.conj())


def check_density_matrix(
    rho: np.ndarray,
    herm_tol: float = 1e-10,
    trace_tol: float = 1e-9,
    positivity_tol: float = 1e-9,
) -> None:
    """Raise unless rho is Hermitian, unit trace and positive within tolerance."""
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > trace_tol:
        raise ValueError(f"trace {np.trace(rho).real!r} differs from 1")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w.min() < -positivity_tol:
        raise ValueError(f"negative eigenvalue {w.min():.3e}")


def _damping_terms(rho: np.ndarray, params: LindbladParams) -> np.ndarray:
    """(1+n_th)/T_c D[a] rho + n_th/T_c D[a+] rho via index shifts."""
    dim = rho.shape[0]
    n = np.arange(dim, dtype=np.float64)
    rate_down = (1.0 + params.n_th) / params.t_c
    out = np.zeros_like(rho)
    # a rho a+ : rho[m+1, k+1] * sqrt((m+1)(k+1))
    w = np.sqrt(np.outer(n[1:], n[1:]))
    out[:-1, :-1] += rate_down * w * rho[1:, 1:]
    out -= rate_down * 0.5 * (n[:, None] + n[None, :]) * rho
    if params.n_th > 0:
        rate_up = params.n_th / params.t_c
        out[1:, 1:] += rate_up * w * rho[:-1, :-1]
        # truncated a a+ has an empty top level; keeps the generator traceless
        nn1 = n + 1.0
        nn1[-1] = 0.0
        out -= rate_up * 0.5 * (nn1[:, None] + nn1[None, :]) * rho
    return out


def lindblad_rhs(
    rho: np.ndarray, hamiltonian: np.ndarray | None, params: LindbladParams
) -> np.ndarray:
    """Generator of the master equation; traceless, Hermiticity-preserving."""
    out = _damping_terms(rho, params)
    if hamiltonian is not None:
        out -= 1j * (hamiltonian @ rho - rho @ hamiltonian)
    return out


def _rk4(rho, h, params, dt):
    k1 = lindblad_rhs(rho, h, params)
    k2 = lindblad_rhs(rho + 0.5 * dt * k1, h, params)
    k3 = lindblad_rhs(rho + 0.5 * dt * k2, h, params)
    k4 = lindblad_rhs(rho + dt * k3, h, params)
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve_damped(
    rho: np.ndarray,
    duration: float,
    params: LindbladParams,
    hamiltonian: np.ndarray | None = None,
) -> np.ndarray:
    """Integrate the master equation for `duration` seconds."""
    if duration < 0:
        raise ValueError("duration must be non-negative")
    steps, rem = divmod(duration, params.dt)
    for _ in range(int(steps)):
        rho = _rk4(rho, hamiltonian, params, params.dt)
    if rem > 1e-18 * max(duration, params.dt):
        rho = _rk4(rho, hamiltonian, params, rem)
    return rho


@dataclass(frozen=True)
class TimedStep:
    """One realistic protocol step with physical durations.

    drive_amp is the source amplitude E (the drive hamiltonian is
    -i(E* a - E a+), so drive_amp * drive_duration is the displacement it
    produces). Center moves of the kicks are pulse retunings and take no
    cavity time; every kick must carry pulse parameters, its duration is
    the pulse length.
    """

    kicks: tuple[KickSpec, ...] = ()
    drive_amp: complex = 0j
    drive_duration: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kicks", tuple(self.kicks))
        for k in self.kicks:
            if k.pulse is None:
                raise ValueError("timed steps need kicks with pulse parameters")
        if self.drive_duration < 0:
            raise ValueError("drive duration must be non-negative")

    @property
    def duration(self) -> float:
        return self.drive_duration + sum(k.pulse.duration for k in self.kicks)


def timed_steps_from_schedule(schedule, drive_amp: complex = 0j) -> tuple[TimedStep, ...]:
    """Lift a stroboscopic Schedule into timed steps.

    Every kick must carry pulse parameters. A nonzero step displacement
    beta is driven over beta / drive_amp seconds with the given source
    amplitude; beta = 0 steps take drive time zero.
    """
    out = []
    for step in schedule.steps:
        duration = 0.0
        amp = 0j
        if step.displacement != 0:
            if drive_amp == 0:
                raise ValueError("schedule displaces the field but drive_amp is zero")
            duration = abs(step.displacement) / abs(complex(drive_amp))
            amp = complex(step.displacement) / duration
        out.append(TimedStep(kicks=step.kicks, drive_amp=amp, drive_duration=duration))
    return tuple(out)


@dataclass
class MasterTraceRecord:
    t_seconds: float
    energy: float
    purity: float
    fidelity_vs_target: float
    trace_err: float


@dataclass
class MasterTrace:
    records: list[MasterTraceRecord] = field(default_factory=list)
    total_kick_leak: float = 0.0

    def to_csv(self, fh: IO[str]) -> None:
        fh.write("t_seconds,energy,purity,fidelity_vs_target,trace_err\n")
        for r in self.records:
            fh.write(
                f"{r.t_seconds:.17g},{r.energy:.17g},{r.purity:.17g},"
                f"{r.fidelity_vs_target:.17g},{r.trace_err:.17g}\n"
            )


def _mean_energy_rho(rho: np.ndarray) -> float:
    return float(np.sum(np.arange(rho.shape[0]) * np.diag(rho).real))


def evolve_master(
    rho: np.ndarray,
    schedule: Sequence[TimedStep],
    params: LindbladParams,
    target: FieldState | None = None,
    positivity_tol: float = 1e-6,
) -> tuple[np.ndarray, MasterTrace]:
    """Run a timed schedule on a density matrix under cavity damping.

    Kicks act as the conditioned completely positive branch (atom back in
    h): rho -> K rho K+ / p with the leak 1 - p accumulated in the trace;
    damping runs for the pulse duration around the midpoint split. Aborts
    if positivity degrades beyond positivity_tol (step size too large).
    """
    rho = np.array(rho, dtype=np.complex128)
    dim = rho.shape[0]
    trace = MasterTrace()
    t = 0.0

    def record():
        tr = float(np.trace(rho).real)
        fid = (
            float(np.real(np.vdot(target.amps, rho @ target.amps)))
            if target is not None
            else math.nan
        )
        purity = float(np.trace(rho @ rho).real)
        trace.records.append(
            MasterTraceRecord(
                t_seconds=t,
                energy=_mean_energy_rho(rho),
                purity=purity,
                fidelity_vs_target=fid,
                trace_err=abs(tr - 1.0),
            )
        )

    record()
    for step in schedule:
        if step.drive_duration > 0:
            h = drive_hamiltonian(step.drive_amp, dim) if step.drive_amp != 0 else None
            rho = evolve_damped(rho, step.drive_duration, params, h)
            t += step.drive_duration
        for kick in step.kicks:
            tau = kick.pulse.duration
            rho = evolve_damped(rho, 0.5 * tau, params)
            k_op = displaced_kick(kick, dim)
            rho = k_op @ rho @ k_op.conj().T
            p = float(np.trace(rho).real)
            if p <= 0:
                raise RuntimeError("conditioned kick annihilated the state")
            trace.total_kick_leak += 1.0 - p
            rho /= p
            rho = evolve_damped(rho, 0.5 * tau, params)
            t += tau
        rho = 0.5 * (rho + rho.conj().T)  # shed accumulated asymmetry
        w = np.linalg.eigvalsh(rho)
        if w.min() < -positivity_tol:
            raise RuntimeError(
                f"positivity violated ({w.min():.2e}); reduce the integrator step"
            )
        record()
    logger.debug("evolve_master: t=%.4g s, kick leak %.3g", t, trace.total_kick_leak)
    return rho, trace


def fidelity_mixed(rho: np.ndarray, psi: FieldState) -> float:
    """<psi| rho |psi>."""
    if rho.shape[0] != psi.dim:
        raise ValueError(f"dimension mismatch: {rho.shape[0]} vs {psi.dim}")
    val = float(np.real(np.vdot(psi.amps, rho @ psi.amps)))
    return min(max(val, 0.0), 1.0)
