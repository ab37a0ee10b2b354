"""Split-operator evolution of the driven rotor and ensemble averaging.

The state lives on the momentum lattice p_m = (m + beta) * kbar with m in
[-M/2, M/2) stored in FFT order.  One kick period is: multiply by
exp(-i K(t) cos(x - a(t)) / kbar) on the position grid (via FFT), then by
the free-flight phase in momentum space.  Both factors are unitary, so
norm is conserved to rounding error.

Ensembles propagate many independent trajectories and average their
momentum distributions.  Trajectories are grouped in fixed-size chunks
whose partial sums are reduced in chunk order, so results are
bit-identical for any worker count.  All randomness flows from a single
seed through named Philox substreams.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from . import __version__
from .modulation import ModulationSequence

TWO_PI = 2.0 * math.pi

NORM_TOL = 1e-10

# named substreams hanging off the top-level seed
_STREAM_DISORDER = 0
_STREAM_BETA = 1
_STREAM_KINETIC = 2
_STREAM_DECOHERENCE = 3


def substream(seed: int, stream: int, *key: int) -> np.random.Generator:
    """Counter-based generator for one named substream of ``seed``."""
    ss = np.random.SeedSequence([int(seed), int(stream), *map(int, key)])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class LatticeSpec:
    """Momentum lattice: ``size`` sites (power of two) at spacing kbar."""

    size: int
    kbar: float

    def __post_init__(self):
        if self.size < 64 or self.size & (self.size - 1):
            raise ValueError("lattice size must be a power of two >= 64")
        if not (self.kbar > 0 and math.isfinite(self.kbar)):
            raise ValueError("kbar must be positive and finite")

    def momentum_numbers(self) -> np.ndarray:
        """Integer site indices m in FFT storage order."""
        m = np.arange(self.size)
        m[m >= self.size // 2] -= self.size
        return m

    def position_grid(self) -> np.ndarray:
        return TWO_PI * np.arange(self.size) / self.size


@dataclass
class QuantumState:
    """Complex amplitudes (FFT order) with conserved quasi-momentum."""

    psi: np.ndarray
    beta: float
    time: int = 0

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2))

    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def p2(self, lattice: LatticeSpec) -> float:
        p = (lattice.momentum_numbers() + self.beta) * lattice.kbar
        return float(np.sum(p ** 2 * self.density()))


def init_state(lattice: LatticeSpec, beta: float = 0.0) -> QuantumState:
    """Plane wave on site m = 0 (momentum (0 + beta) * kbar)."""
    if not (-0.5 <= beta <= 0.5):
        raise ValueError("quasi-momentum must lie in the first Brillouin zone")
    psi = np.zeros(lattice.size, dtype=complex)
    psi[0] = 1.0
    return QuantumState(psi, float(beta), 0)


def apply_kick(state: QuantumState, amplitude: float, phase: float,
               lattice: LatticeSpec) -> QuantumState:
    """Multiply by exp(-i K cos(x - a) / kbar) on the position grid."""
    x = lattice.position_grid()
    psi_x = np.fft.ifft(state.psi, norm="ortho")
    psi_x *= np.exp(-1j * (amplitude / lattice.kbar) * np.cos(x - phase))
    return QuantumState(np.fft.fft(psi_x, norm="ortho"), state.beta, state.time)


def free_propagate(state: QuantumState, lattice: LatticeSpec) -> QuantumState:
    """One kick period of free flight; advances the clock."""
    m = lattice.momentum_numbers()
    phase = 0.5 * lattice.kbar * (m + state.beta) ** 2
    return QuantumState(state.psi * np.exp(-1j * phase), state.beta,
                        state.time + 1)


def apply_decoherence(state: QuantumState, p_dec: float,
                      rng: np.random.Generator) -> QuantumState:
    """With probability p_dec, resample beta uniformly and scramble the
    global phase; otherwise identity.  Norm-preserving by construction."""
    if not 0 <= p_dec < 1:
        raise ValueError("decoherence rate must lie in [0, 1)")
    if p_dec == 0 or rng.uniform() >= p_dec:
        return state
    beta = rng.uniform(-0.5, 0.5)
    psi = state.psi * np.exp(1j * rng.uniform(0, TWO_PI))
    return QuantumState(psi, float(beta), state.time)


def evolve(state: QuantumState, seq: ModulationSequence, lattice: LatticeSpec,
           n_kicks: int) -> tuple[QuantumState, np.ndarray]:
    """Propagate ``n_kicks`` periods; kick number t uses table index t mod N.

    Returns the final state and the momentum densities after each period
    (row 0 is the initial density).
    """
    if n_kicks < 1:
        raise ValueError("n_kicks must be >= 1")
    densities = np.empty((n_kicks + 1, lattice.size))
    densities[0] = state.density()
    start = state.time
    for step in range(1, n_kicks + 1):
        t = start + step
        state = apply_kick(state, seq.amplitude_at(t), seq.phase_at(t), lattice)
        state = free_propagate(state, lattice)
        if abs(state.norm() - 1.0) > NORM_TOL:
            raise FloatingPointError(f"norm drift at kick {t}: {state.norm()}")
        densities[step] = state.density()
    return state, densities


# ---------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class EnsembleSpec:
    """Controls ensemble composition, decoherence and binning.

    ``kinetic_disorder`` replaces the deterministic free-flight phases
    kbar m^2/2 by quenched i.i.d. phases, one draw per disorder
    realization.  This is the standard pseudo-random-rotor surrogate: it
    leaves the symmetry analysis untouched (any diagonal phase does) and
    provides genuine disorder averaging even at fixed beta = 0.

    ``annealed_phases`` redraws the kick phase a(t) uniformly at every
    kick (classical-diffusion reference; kills all interference).
    """

    n_disorder: int = 100
    n_beta: int = 1
    beta_sigma: float = 0.0
    decoherence_rate: float = 0.0
    rng_seed: int = 0
    horizon: int = 100
    kinetic_disorder: bool = False
    annealed_phases: bool = False
    bins_per_site: int = 1
    hist_stride: int = 1
    chunk_size: int = 16

    def __post_init__(self):
        if self.n_disorder < 1 or self.n_beta < 1:
            raise ValueError("need at least one disorder and one beta sample")
        if not 0 <= self.beta_sigma < 0.5:
            raise ValueError("beta_sigma must lie in [0, 0.5)")
        if not 0 <= self.decoherence_rate < 1:
            raise ValueError("decoherence rate must lie in [0, 1)")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.bins_per_site < 1 or self.hist_stride < 1 or self.chunk_size < 1:
            raise ValueError("bins_per_site, hist_stride, chunk_size must be >= 1")


@dataclass
class EnsembleResult:
    """Ensemble-averaged observables per kick."""

    times: np.ndarray          # kick numbers 0..T
    pi0: np.ndarray            # density at the p = 0 bin
    pi0_se: np.ndarray         # standard error of pi0 across trajectories
    p2: np.ndarray             # exact second moment of the momentum density
    hist_times: np.ndarray
    bin_centers: np.ndarray
    histogram: np.ndarray      # density, shape (len(hist_times), n_bins)
    metadata: dict = field(default_factory=dict)

    def series_csv(self) -> str:
        lines = ["t,pi0,pi0_se,p2"]
        for i, t in enumerate(self.times):
            lines.append(f"{int(t)},{self.pi0[i]:.12g},{self.pi0_se[i]:.12g},"
                         f"{self.p2[i]:.12g}")
        return "\n".join(lines) + "\n"

    def histogram_csv(self) -> str:
        lines = ["t,p,density"]
        for i, t in enumerate(self.hist_times):
            for c, d in zip(self.bin_centers, self.histogram[i]):
                if d > 0:
                    lines.append(f"{int(t)},{c:.12g},{d:.12g}")
        return "\n".join(lines) + "\n"


def fixed_sequence_family(seq: ModulationSequence):
    """Every disorder realization uses the same drive."""

    def family(index: int, rng: np.random.Generator) -> ModulationSequence:
        return seq

    family.description = "fixed"
    family.shared = True
    return family


def random_phase_family(K: float, N: int, antisymmetric: bool = False):
    """Constant strength K with fresh i.i.d. phases per realization."""

    def family(index: int, rng: np.random.Generator) -> ModulationSequence:
        phis = rng.uniform(0.0, TWO_PI, size=N)
        if antisymmetric:
            for s in range(N):
                i, j = (1 + s) % N, (-s) % N
                if i == j:
                    phis[i] = 0.0
                elif s < (N - 1 - s):
                    phis[j] = (-phis[i]) % TWO_PI
        return ModulationSequence(N, np.full(N, float(K)), phis)

    family.description = f"random-phase K={K} N={N} antisymmetric={antisymmetric}"
    family.shared = False
    return family


def _truncated_normal(rng: np.random.Generator, sigma: float) -> float:
    while True:
        v = rng.normal(0.0, sigma)
        if -0.5 < v <= 0.5:
            return v


def _trajectory_betas(seed: int, n_disorder: int, n_beta: int,
                      sigma: float) -> np.ndarray:
    """Stratified quasi-momenta: antithetic +/- pairs within a realization."""
    betas = np.zeros((n_disorder, n_beta))
    if sigma == 0:
        return betas
    for d in range(n_disorder):
        for pair in range((n_beta + 1) // 2):
            rng = substream(seed, _STREAM_BETA, d, pair)
            v = _truncated_normal(rng, sigma)
            betas[d, 2 * pair] = v
            if 2 * pair + 1 < n_beta:
                betas[d, 2 * pair + 1] = -v
    return betas


def _run_chunk(args) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Propagate one chunk of trajectories; return partial sums."""
    (seed, traj, betas, amp_tab, ph_tab, period, M, kbar, T, p_dec,
     kinetic, annealed, bps, stride, shared) = args
    B = len(traj)
    m = np.arange(M)
    m[m >= M // 2] -= M
    x = TWO_PI * np.arange(M) / M

    free_phase = np.empty((B, M))
    theta = np.zeros((B, M))
    dec_rngs = []
    ann_rngs = []
    for r, (d, b) in enumerate(traj):
        if kinetic:
            theta[r] = substream(seed, _STREAM_KINETIC, d).uniform(0, TWO_PI, M)
        dec_rngs.append(substream(seed, _STREAM_DECOHERENCE, d, b))
        if annealed:
            ann_rngs.append(substream(seed, _STREAM_DISORDER, d, b, 1))

    def free_row(r, beta):
        if kinetic:
            return theta[r] + kbar * (m * beta + 0.5 * beta ** 2)
        return 0.5 * kbar * (m + beta) ** 2

    cur_beta = betas.copy()
    for r in range(B):
        free_phase[r] = free_row(r, cur_beta[r])
    free_factor = np.exp(-1j * free_phase)

    psi = np.zeros((B, M), dtype=complex)
    psi[:, 0] = 1.0

    n_half = (M // 2) * bps + bps
    n_bins = 2 * n_half + 1
    hist_times = list(range(0, T + 1, stride))
    hist = np.zeros((len(hist_times), n_bins))
    pi0_sum = np.zeros(T + 1)
    pi0_sq = np.zeros(T + 1)
    p2_sum = np.zeros(T + 1)

    def record(t):
        dens = np.abs(psi) ** 2
        q = dens[:, 0]
        pi0_sum[t] += q.sum()
        pi0_sq[t] += (q ** 2).sum()
        p = (m[None, :] + cur_beta[:, None]) * kbar
        p2_sum[t] += np.sum(p ** 2 * dens)
        if t % stride == 0:
            hi = t // stride
            for r in range(B):
                idx = np.rint((m + cur_beta[r]) * bps).astype(int) + n_half
                np.add.at(hist[hi], idx, dens[r])

    record(0)
    for t in range(1, T + 1):
        amp = amp_tab[:, t % period]
        if annealed:
            ph = np.array([rng.uniform(0, TWO_PI) for rng in ann_rngs])
        else:
            ph = ph_tab[:, t % period]
        if shared and not annealed:
            kick = np.exp(-1j * (amp[0] / kbar) * np.cos(x - ph[0]))[None, :]
        else:
            kick = np.exp(-1j * (amp[:, None] / kbar) * np.cos(x[None, :] - ph[:, None]))
        psi = np.fft.fft(np.fft.ifft(psi, axis=1, norm="ortho") * kick,
                         axis=1, norm="ortho")
        psi *= free_factor
        if p_dec > 0:
            for r in range(B):
                if dec_rngs[r].uniform() < p_dec:
                    cur_beta[r] = dec_rngs[r].uniform(-0.5, 0.5)
                    free_factor[r] = np.exp(-1j * free_row(r, cur_beta[r]))
                    psi[r] *= np.exp(1j * dec_rngs[r].uniform(0, TWO_PI))
        norms = np.sum(np.abs(psi) ** 2, axis=1)
        if np.any(np.abs(norms - 1.0) > NORM_TOL):
            bad = traj[int(np.argmax(np.abs(norms - 1.0)))]
            raise FloatingPointError(
                f"trajectory {bad} lost unitarity at kick {t}")
        record(t)
    return pi0_sum, pi0_sq, p2_sum, hist


def run_ensemble(seq_family, lattice: LatticeSpec, spec: EnsembleSpec,
                 workers: int = 1) -> EnsembleResult:
    """Average trajectories over disorder realizations and quasi-momenta.

    Deterministic for a given ``spec.rng_seed``: the chunk layout is fixed
    by ``spec.chunk_size`` and partial sums are reduced in chunk order, so
    the result does not depend on ``workers``.
    """
    M, kbar, T = lattice.size, lattice.kbar, spec.horizon
    seqs = [seq_family(d, substream(spec.rng_seed, _STREAM_DISORDER, d))
            for d in range(spec.n_disorder)]
    period = seqs[0].period
    if any(s.period != period for s in seqs):
        raise ValueError("all realizations must share one period")
    betas = _trajectory_betas(spec.rng_seed, spec.n_disorder, spec.n_beta,
                              spec.beta_sigma)
    shared = getattr(seq_family, "shared", False)

    traj = [(d, b) for d in range(spec.n_disorder) for b in range(spec.n_beta)]
    chunks = []
    for lo in range(0, len(traj), spec.chunk_size):
        part = traj[lo:lo + spec.chunk_size]
        amp_tab = np.stack([seqs[d].amplitudes for d, _ in part])
        ph_tab = np.stack([seqs[d].phases for d, _ in part])
        bet = np.array([betas[d, b] for d, b in part])
        chunks.append((spec.rng_seed, part, bet, amp_tab, ph_tab, period, M,
                       kbar, T, spec.decoherence_rate, spec.kinetic_disorder,
                       spec.annealed_phases, spec.bins_per_site,
                       spec.hist_stride, shared))

    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(_run_chunk, chunks))
    else:
        partials = [_run_chunk(c) for c in chunks]

    pi0_sum = sum(p[0] for p in partials)
    pi0_sq = sum(p[1] for p in partials)
    p2_sum = sum(p[2] for p in partials)
    hist_sum = sum(p[3] for p in partials)

    n = len(traj)
    dp = kbar / spec.bins_per_site
    pi0 = pi0_sum / (n * kbar)
    if n > 1:
        var = np.maximum(pi0_sq / n - (pi0_sum / n) ** 2, 0.0) * n / (n - 1)
        pi0_se = np.sqrt(var / n) / kbar
    else:
        pi0_se = np.zeros_like(pi0)
    n_half = (M // 2) * spec.bins_per_site + spec.bins_per_site
    centers = (np.arange(2 * n_half + 1) - n_half) * dp
    meta = {
        "family": getattr(seq_family, "description", "custom"),
        "lattice": {"size": M, "kbar": kbar},
        "spec": asdict(spec),
        "package_version": __version__,
    }
    return EnsembleResult(
        times=np.arange(T + 1),
        pi0=pi0,
        pi0_se=pi0_se,
        p2=p2_sum / n,
        hist_times=np.arange(0, T + 1, spec.hist_stride),
        bin_centers=centers,
        histogram=hist_sum / (n * dp),
        metadata=meta,
    )
