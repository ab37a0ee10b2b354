"""One-parameter scaling function beta(g) of the quasi-1D rotor.

The spreading wave packet defines a running sample length
L = sqrt(<p^2>) / kbar and a dimensionless conductance
g = N sqrt(<p^2>) / (t kbar); the logarithmic derivative
beta = d ln g / d ln L collapses onto a single curve per symmetry
class, with the weak-localization corrections separating the classes
at moderate conductance.

Writes scaling_function.png next to this script when matplotlib is
available.  The reduced ensemble here takes a minute or two; the test
suite runs the full six-parameter-set version.
"""

import os
import warnings

import numpy as np

from gaugerotor.engine import (EnsembleSpec, LatticeSpec,
                               random_phase_family, run_ensemble)
from gaugerotor.observables import beta_theory, estimate_beta_of_g

SETS = {"orthogonal": (4.5, 4), "unitary": (4.0, 4)}
T = 1000

lattice = LatticeSpec(2048, 1.0)
curves = {}
for label, (K, N) in SETS.items():
    print(f"running {label} set K = {K}, N = {N} ...")
    fam = random_phase_family(K, N, antisymmetric=(label == "orthogonal"))
    spec = EnsembleSpec(n_disorder=60, n_beta=4, beta_sigma=0.25,
                        horizon=T, rng_seed=8, hist_stride=T, chunk_size=32)
    result = run_ensemble(fam, lattice, spec)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        curves[label] = estimate_beta_of_g(result.times, result.p2, N, 1.0)

print()
print(f"{'1/g':>8} {'beta orth':>10} {'beta unit':>10}")
grid = np.geomspace(0.6, 1.5, 8)
for x in grid:
    row = [np.interp(x, c.inv_g, c.beta) for c in curves.values()]
    print(f"{x:8.3f} {row[0]:10.3f} {row[1]:10.3f}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    raise SystemExit(0)

fig, ax = plt.subplots(figsize=(6.5, 4.5))
x = np.geomspace(0.05, 2.5, 200)
ax.plot(x, beta_theory(x, True), "b--", lw=1,
        label=r"$-1 - 4\sqrt{2}/(3\sqrt{\pi}\,g)$")
ax.plot(x, beta_theory(x, False), "r--", lw=1, label=r"$-1 - 1/(2g^2)$")
ax.plot(curves["orthogonal"].inv_g, curves["orthogonal"].beta, "bo",
        ms=4, label="orthogonal data")
ax.plot(curves["unitary"].inv_g, curves["unitary"].beta, "rs",
        ms=4, label="unitary data")
ax.set_xlabel("1/g")
ax.set_ylabel(r"$\beta(g)$")
ax.set_ylim(-3.2, -0.8)
ax.legend()
fig.tight_layout()
out = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                   "scaling_function.png")
fig.savefig(out, dpi=150)
print(f"wrote {out}")
