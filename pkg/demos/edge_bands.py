"""Helical edge bands of a 120-site ribbon with the HgTe parameters.

Writes bands.csv to the output directory (default: current directory)
and prints the edge velocity and decay length.
"""
import sys
import warnings
from pathlib import Path

import numpy as np

from udwqc import io
from udwqc.bhz import PAPER_PARAMS, bulk_gap
from udwqc.edges import edge_branches, edge_velocity, profile_decay_length, ribbon_bands

out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")

with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)
    bands = ribbon_bands(PAPER_PARAMS, 120, 81, (-0.05, 0.05), keep_vectors=True)

gap = bulk_gap(PAPER_PARAMS)
near = np.abs(bands.energies).min(axis=0) < 3 * gap
io.write_csv(out / "bands.csv", ["k"] + [f"E{i}" for i in np.nonzero(near)[0]],
             ([k, *e[near]] for k, e in zip(bands.k, bands.energies)))

for edge in ("top", "bottom"):
    for spin, (k, e, ib) in sorted(edge_branches(bands, edge).items()):
        slope = np.polyfit(k, e, 1)[0]
        print(f"{edge:6s} spin {spin:+d}: dE/dk {'>' if slope > 0 else '<'} 0, "
              f"v = {edge_velocity(bands, edge, spin):.4g} nm/ns")

k, e, ib = edge_branches(bands, "top")[1]
j = int(np.argmin(np.abs(e)))
prof = bands.profile(int(np.searchsorted(bands.k, k[j])), ib[j])[::-1]
print(f"decay length {profile_decay_length(prof, PAPER_PARAMS.lattice_constant):.1f} nm")
