"""Symmetry classes of the modulated rotor, phase by phase.

The period-10 drive carries a control phase phi_tilde.  Sweeping it
moves the generalized time-reversal axes of the kick sequence, which
shifts the backscattering peak in time, and for most phases removes the
axes altogether, switching the dynamics from the orthogonal to the
unitary class.  This script prints the classification table and then
verifies the first backscattering peak on a small ensemble.
"""

import math

import numpy as np

from gaugerotor.engine import (EnsembleSpec, LatticeSpec,
                               fixed_sequence_family, run_ensemble)
from gaugerotor.modulation import (build_experimental_sequence,
                                   classify_symmetry, predict_peak_times)
from gaugerotor.observables import extract_contrasts

TWO_PI = 2.0 * math.pi
OFFSET = 0.21 * TWO_PI

print("phase sweep of the period-10 drive")
print(f"{'phi_tilde':>12} {'class':>12} {'flux':>8} {'first CBS kick':>15}")
for k in range(5):
    phi = TWO_PI * k / 5.0
    seq = build_experimental_sequence(8.0, phi, OFFSET)
    cls = classify_symmetry(seq)
    cbs, _ = predict_peak_times(seq, 40)
    print(f"{phi:12.4f} {cls.tag:>12} {seq.flux:8.4f} {cbs[0]:15d}")

phi = 0.7  # generic phase: no symmetry axis survives
seq = build_experimental_sequence(8.0, phi, OFFSET)
print(f"{phi:12.4f} {classify_symmetry(seq).tag:>12} {seq.flux:8.4f} "
      f"{'none':>15}")

print()
print("checking the peak on a small ensemble (strong kicking, K = 16)")
lattice = LatticeSpec(4096, 1.0)
for phi, label in ((0.0, "symmetric drive"),
                   (-3.0 * math.pi / 5.0, "broken symmetry")):
    seq = build_experimental_sequence(16.0, phi, OFFSET)
    spec = EnsembleSpec(n_disorder=300, horizon=30, rng_seed=1,
                        kinetic_disorder=True, hist_stride=30)
    result = run_ensemble(fixed_sequence_family(seq), lattice, spec)
    ref = build_experimental_sequence(16.0, 0.0, OFFSET)
    series = extract_contrasts(result, ref)
    c = series.cbs_at(6)
    se = float(series.cbs_se[np.flatnonzero(series.cbs_times == 6)[0]])
    print(f"  {label}: contrast at kick 6 = {c:+.3f} +- {se:.3f}")
print("the symmetric drive doubles the return probability; the broken")
print("drive shows only the incoherent background")
