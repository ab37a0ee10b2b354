"""Synthetic-nanotube tight-binding model behind the driven rotor.

A rotor driven with a period-N modulation maps onto a quasi-1D lattice:
momentum sites along direction 1, N periodic transverse sites along
direction 2.  On-site energies come from the free-flight phases, the
hoppings from a double Fourier expansion of the kick kernel, and the
modulation phase attaches a Peierls phase phi * r2 to every hop.  A
closed loop winding around the tube therefore picks up a flux N*phi,
while every elementary plaquette stays flux-free.  Whether those phases
can be gauged away (all fluxes 0 mod pi) is an independent structural
check of the symmetry classification.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

POLE_TOL = 1e-6
GAUGE_TOL = 1e-9
TWO_PI = 2.0 * math.pi


def onsite_energy(m1: int, m2: int, omega: float, kbar: float, N: int) -> float:
    """On-site energy tan{[omega - (kbar m1^2 / 2 + 2 pi m2 / N)] / 2}.

    Along direction 1 the sequence is pseudo-random whenever kbar is
    incommensurate with 2 pi; along direction 2 it is N-periodic.
    """
    arg = 0.5 * (omega - (kbar * m1 ** 2 / 2.0 + TWO_PI * m2 / N))
    if abs(math.remainder(arg, math.pi)) > math.pi / 2 - POLE_TOL:
        raise ValueError(f"on-site energy at resonance: tan argument {arg} "
                         "within tolerance of a pole")
    return math.tan(arg)


def hopping_coefficients(K: float, kbar: float, hop_range: int = 3,
                         oversample: int = 8) -> np.ndarray:
    """Fourier coefficients W_r of the kernel tan[K cos x1 (1+cos x2)/2 kbar].

    Returns a (2R+1, 2R+1) real array indexed by displacements
    r1, r2 in [-R, R] (index r + R).  The kernel is even in both
    variables, so the table is symmetric under r -> -r.  Requires
    K/kbar < pi/2: beyond that the tan has poles on the grid.
    """
    if hop_range < 1:
        raise ValueError("hop_range must be >= 1")
    if K < 0 or kbar <= 0:
        raise ValueError("need K >= 0 and kbar > 0")
    if K / kbar >= math.pi / 2:
        raise ValueError(f"K/kbar = {K / kbar:.3f} >= pi/2: hopping kernel "
                         "has poles, mapping restricted to weak coupling")
    G = oversample * (2 * hop_range + 1)
    x = TWO_PI * np.arange(G) / G
    kernel = np.tan(K * np.cos(x)[:, None] * (1.0 + np.cos(x)[None, :])
                    / (2.0 * kbar))
    coeffs = np.fft.fft2(kernel).real / G ** 2
    full = np.fft.fftshift(coeffs)
    c = G // 2
    table = full[c - hop_range:c + hop_range + 1,
                 c - hop_range:c + hop_range + 1].copy()
    total = np.sum(np.abs(full) ** 2)
    kept = np.sum(np.abs(table) ** 2)
    if total > 0 and (total - kept) / total > 1e-6:
        warnings.warn(f"hopping truncation at range {hop_range} discards "
                      f"{(total - kept) / total:.2e} of the spectral weight",
                      stacklevel=2)
    return table


@dataclass(frozen=True)
class NanotubeLattice:
    """Tight-binding model on an M1 x N cylinder.

    ``hoppings[r1 + R, r2 + R]`` is the real amplitude for displacement
    (r1, r2); the full matrix element carries the Peierls phase
    exp(i flux_phase * r2) and, when a gauge is attached, the per-site
    phases chi.  Transverse displacements are genuine steps: on small N
    a hop with r2 = N returns to the same site but still carries phase
    N * flux_phase.
    """

    m1_extent: int
    period: int
    hoppings: np.ndarray
    flux_phase: float
    omega: float = 0.0
    kbar: float = 1.0
    gauge: np.ndarray | None = None

    def __post_init__(self):
        if self.m1_extent < 2 or self.period < 2:
            raise ValueError("need at least a 2 x 2 lattice")
        W = np.array(self.hoppings, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] % 2 == 0:
            raise ValueError("hoppings must be a square odd-sized table")
        W.flags.writeable = False
        object.__setattr__(self, "hoppings", W)
        if self.gauge is not None:
            g = np.array(self.gauge, dtype=float)
            if g.shape != (self.m1_extent, self.period):
                raise ValueError("gauge must be one phase per site")
            g.flags.writeable = False
            object.__setattr__(self, "gauge", g)

    @property
    def hop_range(self) -> int:
        return self.hoppings.shape[0] // 2

    def onsite(self, m1: int, m2: int) -> float:
        return onsite_energy(m1, m2 % self.period, self.omega, self.kbar,
                             self.period)

    def with_gauge(self, chi: np.ndarray) -> "NanotubeLattice":
        return replace(self, gauge=chi)

    def bond_amplitudes(self):
        """Complex amplitudes of the physical bonds, keyed by (r1, d2).

        On the N-site ring, displacements r2 that agree mod N land on
        the same bond and their Peierls-dressed amplitudes add:
        A(r1, d2) = sum_{r2 = d2 mod N} W_(r1, r2) exp(i phi r2).
        This aliasing is what makes the N = 2 tube always gauge-trivial:
        r2 = +1 and -1 combine into 2 W cos(phi), a real number.
        """
        R, N = self.hop_range, self.period
        out = {}
        for r1 in range(0, R + 1):
            for d2 in range(N):
                if r1 == 0 and (d2 == 0 or d2 > N // 2):
                    continue  # handled by hermiticity / the diagonal
                amp = 0.0 + 0.0j
                for r2 in range(-R, R + 1):
                    if (r2 - d2) % N == 0:
                        amp += self.hoppings[r1 + R, r2 + R] * \
                            np.exp(1j * self.flux_phase * r2)
                if abs(amp) > 1e-15:
                    out[(r1, d2)] = amp
        return out

    def edges(self):
        """Directed edges (u, v, amplitude) covering each bond once.

        The reverse hops are implied by hermiticity.  Longitudinal
        displacements stay inside [0, M1); transverse ones wrap.
        """
        bonds = self.bond_amplitudes()
        for (r1, d2), amp in bonds.items():
            for m1 in range(self.m1_extent - r1):
                for m2 in range(self.period):
                    u = (m1, m2)
                    v = (m1 + r1, (m2 + d2) % self.period)
                    a = amp
                    if self.gauge is not None:
                        a = a * np.exp(1j * (self.gauge[v] - self.gauge[u]))
                    yield u, v, a

    def to_dense(self) -> np.ndarray:
        """Assemble the operator on the full cylinder (small lattices only)."""
        n = self.m1_extent * self.period
        H = np.zeros((n, n), dtype=complex)
        idx = lambda m1, m2: m1 * self.period + m2
        for m1 in range(self.m1_extent):
            for m2 in range(self.period):
                H[idx(m1, m2), idx(m1, m2)] = self.onsite(m1, m2)
        for u, v, amp in self.edges():
            H[idx(*v), idx(*u)] += amp
            H[idx(*u), idx(*v)] += np.conj(amp)
        return H

    def to_triplets(self) -> str:
        """Sparse dump: onsite column, then one line per directed hop."""
        lines = [f"# nanotube {self.m1_extent} x {self.period} "
                 f"flux_phase {self.flux_phase!r} omega {self.omega!r} "
                 f"kbar {self.kbar!r}"]
        lines.append("# onsite m1 m2 eps")
        for m1 in range(self.m1_extent):
            for m2 in range(self.period):
                lines.append(f"{m1} {m2} {self.onsite(m1, m2)!r}")
        lines.append("# hop m1 m2 m1' m2' re im")
        for u, v, amp in self.edges():
            lines.append(f"{u[0]} {u[1]} {v[0]} {v[1]} "
                         f"{float(amp.real)!r} {float(amp.imag)!r}")
        return "\n".join(lines) + "\n"


def build_nanotube(K: float, N: int, phi: float, m1_extent: int = 32,
                   omega: float = 0.0, kbar: float = 1.0,
                   hop_range: int = 3) -> NanotubeLattice:
    """Lattice for the amplitude-modulated drive with control phase phi."""
    W = hopping_coefficients(K, kbar, hop_range)
    return NanotubeLattice(m1_extent, N, W, flux_phase=phi, omega=omega,
                           kbar=kbar)


def loop_flux(lattice: NanotubeLattice, loop) -> float:
    """Accumulated hopping phase around a closed loop, mod 2 pi.

    The loop is a sequence of (m1, m2) sites whose last element must
    equal the first.  Transverse steps are read mod N with the minimal
    wrap convention: a step from m2 = N-1 to 0 counts as +1.  Each step
    contributes the Peierls phase flux_phase * r2 (plus the gauge
    difference when a gauge is attached); the per-site gauge terms
    telescope away around any closed loop, which is the gauge
    invariance of the flux.
    """
    loop = [tuple(s) for s in loop]
    if len(loop) < 2:
        raise ValueError("loop needs at least one hop")
    if loop[0] != loop[-1]:
        raise ValueError("open path: a loop must end where it starts")
    N, R = lattice.period, lattice.hop_range
    total = 0.0
    for (a1, a2), (b1, b2) in zip(loop[:-1], loop[1:]):
        r1 = b1 - a1
        r2 = (b2 - a2 + N // 2) % N - N // 2
        if r2 == -(N // 2) and N % 2 == 0:
            r2 = N // 2
        if r1 == 0 and r2 == 0:
            raise ValueError("zero-length step in loop")
        if abs(r1) > R or abs(r2) > R:
            raise ValueError(f"step ({r1},{r2}) exceeds the hopping range")
        total += lattice.flux_phase * r2
        if lattice.gauge is not None:
            total += lattice.gauge[b1 % lattice.m1_extent, b2 % N] - \
                lattice.gauge[a1 % lattice.m1_extent, a2 % N]
    return total % TWO_PI


def _mod_pi(x: float) -> float:
    """Distance of a phase from the nearest multiple of pi."""
    return abs(math.remainder(x, math.pi))


def gauge_reducible(lattice: NanotubeLattice):
    """Try to gauge every hopping phase to 0 mod pi.

    Grows a spanning tree over the hop graph, fixing per-site phases so
    tree edges become real (up to sign); the lattice is reducible iff
    every co-tree edge then closes a cycle with flux 0 mod pi.  Returns
    (True, chi) with the per-site gauge, or (False, None).
    """
    sites = [(m1, m2) for m1 in range(lattice.m1_extent)
             for m2 in range(lattice.period)]
    adj = {s: [] for s in sites}
    edge_list = []
    for u, v, amp in lattice.edges():
        phase = float(np.angle(amp))
        edge_list.append((u, v, phase))
        adj[u].append((v, phase))
        adj[v].append((u, -phase))
    chi = {}
    in_tree = set()
    # the graph can split into components when an aliased amplitude
    # cancels exactly; each component is gauged independently
    for root in sites:
        if root in chi:
            continue
        chi[root] = 0.0
        stack = [root]
        while stack:
            u = stack.pop()
            for v, phase in adj[u]:
                if v not in chi:
                    # make phase + chi[v] - chi[u] vanish
                    chi[v] = chi[u] - phase
                    in_tree.add((u, v))
                    in_tree.add((v, u))
                    stack.append(v)
    for u, v, phase in edge_list:
        if (u, v) in in_tree:
            continue
        if _mod_pi(phase + chi[v] - chi[u]) > GAUGE_TOL:
            return False, None
    out = np.array([[chi[(m1, m2)] for m2 in range(lattice.period)]
                    for m1 in range(lattice.m1_extent)])
    return True, out


def flux_report(lattice: NanotubeLattice) -> str:
    """Structured text summary of the gauge structure."""
    N = lattice.period
    transverse = [(0, m2) for m2 in range(N)] + [(0, 0)]
    winding = loop_flux(lattice, transverse)
    plaquette = loop_flux(lattice, [(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)])
    reducible, _ = gauge_reducible(lattice)
    return (f"transverse_flux_rad {winding!r}\n"
            f"plaquette_flux_rad {plaquette!r}\n"
            f"gauge_reducible {reducible}\n")
