"""Edge density around a 15 eV half-disk gate and a local Zeeman impurity
on a 60x120 device.  Writes clean/gated/impurity density maps as PGM."""
import sys
from pathlib import Path

from udwqc import io
from udwqc.bhz import assemble
from udwqc.cli import preset_text
from udwqc.config import parse_config
from udwqc.edges import density_map
from udwqc.spectra import interior_eigs

out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")


def run(preset, keep=True):
    cfg = parse_config(preset_text(preset))
    if not keep:
        cfg.data["gates"], cfg.data["fields"] = [], []
    geo = cfg.geometry()
    H = assemble(cfg.params(), geo, cfg.gates(), cfg.fields())
    pairs = interior_eigs(H, cfg.window(), cfg.solver())
    return density_map(pairs, cfg.window(), geo).grid


maps = {"clean": run("gated_edge", keep=False),
        "gated": run("gated_edge"),
        "impurity": run("edge_impurity")}
for name, grid in maps.items():
    io.atomic_write(out / f"{name}.pgm", io.pgm_bytes(grid))
    top, bottom = grid[-3:].sum(), grid[:3].sum()
    print(f"{name:9s} weight in top 3 rows {top:.3f}, bottom 3 rows {bottom:.3f}")
