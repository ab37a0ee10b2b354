"""Periodic driving sequences and their symmetry classification.

A kicked-rotor drive is a periodic list of kick strengths and spatial
phases.  Whether the drive possesses a generalized time-reversal axis
(amplitude-symmetric, phase-antisymmetric) decides the symmetry class
of the dynamics, and the axis positions decide at which kick numbers
the coherent-backscattering peak shows up.

Conventions
-----------
Kick number t = 1, 2, 3, ... uses table index ``t mod N``.  Kick t is
placed at continuous time t - 1/2, so candidate symmetry axes live on
the half-integer grid: integer times sit *between* two kicks,
half-integer times sit *on* a kick.  A CBS peak associated with an
axis at time tau appears at kick 2*tau (extended mod N).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace

import numpy as np

# Absolute tolerance for amplitude and angle comparisons.  Sequences are
# built from cosines, so exact equality cannot be expected.
ANGLE_TOL = 1e-9

ORTHOGONAL = "orthogonal"
UNITARY = "unitary"

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ModulationSequence:
    """One period of the drive: kick strengths and spatial phases.

    ``control_phase`` records the knob the sequence was built with; it is
    metadata, never recomputed.  ``flux`` is the gauge flux threading the
    synthetic nanotube, set by the builders that know it (NaN otherwise).
    """

    period: int
    amplitudes: np.ndarray
    phases: np.ndarray
    control_phase: float = 0.0
    flux: float = math.nan

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=float)
        phis = np.mod(np.asarray(self.phases, dtype=float), TWO_PI)
        if self.period < 2:
            raise ValueError(f"period must be >= 2, got {self.period}")
        if amps.shape != (self.period,) or phis.shape != (self.period,):
            raise ValueError("amplitude/phase tables must have length N")
        if not np.all(np.isfinite(amps)) or not np.all(np.isfinite(phis)):
            raise ValueError("non-finite entries in modulation tables")
        # cosine construction can undershoot zero by rounding error
        if np.any(amps < -ANGLE_TOL):
            raise ValueError("kick amplitudes must be >= 0")
        amps = np.clip(amps, 0.0, None)
        amps.flags.writeable = False
        phis.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "phases", phis)

    def amplitude_at(self, t: int) -> float:
        return float(self.amplitudes[t % self.period])

    def phase_at(self, t: int) -> float:
        return float(self.phases[t % self.period])

    def rotated(self, shift: int) -> "ModulationSequence":
        """Shift the time origin by ``shift`` kicks."""
        idx = (np.arange(self.period) + shift) % self.period
        return replace(self, amplitudes=self.amplitudes[idx],
                       phases=self.phases[idx])

    # -- plain-text tabular serialization ------------------------------

    def to_table(self) -> str:
        buf = io.StringIO()
        buf.write(f"# period {self.period}\n")
        buf.write(f"# control_phase_rad {self.control_phase!r}\n")
        buf.write(f"# flux_rad {self.flux!r}\n")
        buf.write("# index amplitude phase_rad\n")
        for i in range(self.period):
            buf.write(f"{i} {float(self.amplitudes[i])!r} {float(self.phases[i])!r}\n")
        return buf.getvalue()

    @staticmethod
    def from_table(text: str) -> "ModulationSequence":
        control_phase, flux = 0.0, math.nan
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[:1] == ["control_phase_rad"]:
                    control_phase = float(parts[1])
                elif parts[:1] == ["flux_rad"]:
                    flux = float(parts[1])
                continue
            i, amp, phi = line.split()
            rows.append((int(i), float(amp), float(phi)))
        rows.sort()
        amps = np.array([r[1] for r in rows])
        phis = np.array([r[2] for r in rows])
        return ModulationSequence(len(rows), amps, phis,
                                  control_phase=control_phase, flux=flux)


@dataclass(frozen=True)
class SymmetryClass:
    tag: str
    flux: float = math.nan

    @property
    def is_orthogonal(self) -> bool:
        return self.tag == ORTHOGONAL


def _check_scalar(name, value):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")


def build_amplitude_modulation(K: float, N: int, phi: float) -> ModulationSequence:
    """Pure amplitude modulation K(t) = K [1 + cos(2 pi t / N + phi)]."""
    _check_scalar("K", K)
    _check_scalar("phi", phi)
    if K <= 0:
        raise ValueError("kick strength K must be > 0")
    if N < 2:
        raise ValueError("period N must be >= 2 (no transverse structure)")
    t = np.arange(N)
    amps = K * (1.0 + np.cos(TWO_PI * t / N + phi))
    return ModulationSequence(N, amps, np.zeros(N), control_phase=phi,
                              flux=(N * phi) % TWO_PI)


def build_experimental_sequence(K: float, phi_tilde: float,
                                a: float) -> ModulationSequence:
    """Period-10 drive: period-5 amplitude modulation on top of a period-2
    phase flip, the control phase acting on odd kicks only.

    The flux metadata is ``5 * phi_tilde``: the amplitude modulation has
    period 5, so that is the winding of the underlying nanotube.
    """
    _check_scalar("K", K)
    _check_scalar("phi_tilde", phi_tilde)
    _check_scalar("a", a)
    if K <= 0:
        raise ValueError("kick strength K must be > 0")
    t = np.arange(10)
    odd = (t % 2) == 1
    amps = K * (1.0 + np.cos(TWO_PI * (t - 1) / 5 + np.where(odd, phi_tilde, 0.0)))
    phis = np.where(odd, a, -a)
    return ModulationSequence(10, amps, phis, control_phase=phi_tilde,
                              flux=(5 * phi_tilde) % TWO_PI)


def build_random_phase_sequence(K: float, N: int, rng_seed: int,
                                antisymmetric: bool = False) -> ModulationSequence:
    """Constant kick strength with i.i.d. uniform phases a(t).

    With ``antisymmetric`` the phase series is symmetrized about the
    inter-kick axis between kicks 0 and 1 (a(1+s) = -a(-s)), which
    restores the generalized time-reversal symmetry.  Phases come from a
    counter-based Philox stream so realizations are reproducible.
    """
    _check_scalar("K", K)
    if N < 2:
        raise ValueError("period N must be >= 2")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(rng_seed)])))
    phis = rng.uniform(0.0, TWO_PI, size=N)
    if antisymmetric:
        for s in range(N):
            i = (1 + s) % N
            j = (-s) % N
            if i == j:
                phis[i] = 0.0  # self-paired site must satisfy a = -a
            elif s < (N - 1 - s):  # visit each pair once
                phis[j] = (-phis[i]) % TWO_PI
    return ModulationSequence(N, np.full(N, float(K)), phis)


def _phases_opposite(x: float, y: float) -> bool:
    return abs(_wrap_pi(x + y)) <= ANGLE_TOL


def _wrap_pi(x: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    return math.pi - (math.pi - x) % TWO_PI


def symmetry_axes(seq: ModulationSequence) -> list[float]:
    """Times tau (in kick units, on the half-integer grid, 0 <= tau < N)
    about which the amplitudes are symmetric and the phases antisymmetric.
    """
    N = seq.period
    amp, ph = seq.amplitude_at, seq.phase_at
    axes = []
    for h in range(2 * N):  # axis time = h / 2
        if h % 2 == 0:  # between kicks j and j+1
            j = h // 2
            pairs = ((j + 1 + s, j - s) for s in range(N))
        else:  # on kick k
            k = (h + 1) // 2
            pairs = ((k + s, k - s) for s in range(N))
        ok = True
        for t1, t2 in pairs:
            if abs(amp(t1) - amp(t2)) > ANGLE_TOL or \
               not _phases_opposite(ph(t1), ph(t2)):
                ok = False
                break
        if ok:
            axes.append(h / 2.0)
    return axes


def classify_symmetry(seq: ModulationSequence) -> SymmetryClass:
    """Orthogonal iff some generalized time-reversal axis exists."""
    tag = ORTHOGONAL if symmetry_axes(seq) else UNITARY
    return SymmetryClass(tag, flux=seq.flux)


def predict_peak_times(seq: ModulationSequence,
                       horizon: int) -> tuple[list[int], list[int]]:
    """Kick numbers (<= horizon) at which CBS and CFS peaks occur.

    CFS peaks sit at integer multiples of the drive period; CBS peaks at
    twice the occurrence time of each symmetry axis, extended mod N.
    """
    N = seq.period
    if horizon < N:
        raise ValueError("horizon must cover at least one period")
    cfs = list(range(N, horizon + 1, N))
    base = sorted({int(round(2 * tau)) % N or N for tau in symmetry_axes(seq)})
    cbs = sorted(t for b in base for t in range(b, horizon + 1, N))
    return cbs, cfs
