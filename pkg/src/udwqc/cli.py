"""Command line entry point.

    udwqc simulate    --config device.cfg  [--out-dir DIR] [--seed N] [--threads N]
    udwqc bands       --config device.cfg
    udwqc channel     --config channel.cfg
    udwqc oracle      --config channel.cfg
    udwqc constraints

``--config`` also accepts the name of a shipped preset (``hgte_bar``).
``UDWQC_THREADS`` and ``UDWQC_OUT_DIR`` supply defaults for the two flags.
Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import io
from .config import ChannelConfig, ConfigError, DeviceConfig, FieldError, load_config, parse_config

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2


class Refusal(Exception):
    """Valid document asking for something the engines do not compute."""


def preset_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("udwqc.presets").iterdir()
                  if p.name.endswith(".cfg"))


def preset_text(name: str) -> str:
    return resources.files("udwqc.presets").joinpath(f"{name}.cfg").read_text("utf-8")


def _load(spec: str | None):
    if spec is None:
        raise ConfigError([FieldError("--config", "this subcommand needs a configuration file")])
    if not Path(spec).exists() and spec.removesuffix(".cfg") in preset_names():
        return parse_config(preset_text(spec.removesuffix(".cfg")))
    if not Path(spec).exists():
        raise ConfigError([FieldError("--config", f"no such file or preset: {spec}")])
    return load_config(spec)


def _expect(cfg, cls, command):
    if not isinstance(cfg, cls):
        want = "device" if cls is DeviceConfig else "channel"
        raise ConfigError([FieldError("kind", f"'{command}' needs a {want} configuration")])
    return cfg


# --- subcommands --------------------------------------------------------------

def run_simulate(cfg: DeviceConfig, out: Path, seed=None, threads=1) -> int:
    from .bhz import assemble
    from .edges import density_map, spin_map
    from .spectra import SolverError, SolverReport, interior_eigs

    geometry = cfg.geometry()
    if geometry.dimension > cfg.max_dimension:
        raise ConfigError([FieldError("solver.max_dimension",
                                      f"device dimension {geometry.dimension} exceeds the cap")])
    opts = cfg.solver(seed)
    H = assemble(cfg.params(), geometry, cfg.gates(), cfg.fields(), cfg.max_dimension)
    window = cfg.window()
    report = SolverReport(opts.method)
    try:
        pairs = interior_eigs(H, window, opts, report)
    except SolverError as exc:
        io.write_json(out / "solver_report.json", dict(report.as_dict(), partial=True, error=str(exc)))
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    rows = [(i, p.energy, p.residual) for i, p in enumerate(pairs)]
    dens = density_map(pairs, window, geometry)
    spin = spin_map(pairs, window, geometry)
    meta = {"nx": geometry.nx, "ny": geometry.ny, "e_min": window.e_min,
            "e_max": window.e_max, "states": len(pairs)}
    io.write_csv(out / "eigenvalues.csv", ("index", "energy_eV", "residual_eV"), rows)
    io.atomic_write(out / "density.csv", io.grid_csv_text(dens.grid, meta))
    io.atomic_write(out / "density.pgm", io.pgm_bytes(dens.grid))
    io.atomic_write(out / "spin.csv", io.grid_csv_text(spin.grid, meta))
    io.atomic_write(out / "spin.pgm", io.signed_pgm_bytes(spin.grid))
    io.write_json(out / "solver_report.json", dict(report.as_dict(), partial=False))
    print(f"{len(pairs)} eigenpairs in [{window.e_min!r}, {window.e_max!r}] eV")
    for _, e, _ in rows:
        print(f"  {e:+.9f}")
    return EXIT_OK


def run_bands(cfg: DeviceConfig, out: Path, seed=None, threads=1) -> int:
    import warnings
    from .edges import NoCrossingError, edge_velocity, ribbon_bands

    b = cfg.data.get("bands")
    if b is None:
        raise ConfigError([FieldError("bands", "the bands subcommand needs a [bands] section")])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        bands = ribbon_bands(cfg.params(), b["width"], b["k_count"], (b["k_min"], b["k_max"]),
                             b["boundary_y"], threads=threads)
    n = bands.energies.shape[1]
    header = ["k"] + [f"E{i + 1}" for i in range(n)]
    io.write_csv(out / "bands.csv", header, ([k, *e] for k, e in zip(bands.k, bands.energies)))
    summary = {"width": bands.width, "k_count": len(bands.k), "boundary_y": bands.boundary_y,
               "hybridisation_warning": bands.warning, "velocity_nm_per_ns": {}}
    for edge in ("top", "bottom"):
        for spin in (1, -1):
            try:
                v = edge_velocity(bands, edge, spin)
            except NoCrossingError:
                v = None
            summary["velocity_nm_per_ns"][f"{edge}{'+' if spin > 0 else '-'}"] = v
    io.write_json(out / "bands_summary.json", summary)
    print(f"{len(bands.k)} k samples x {n} bands written")
    for k, v in summary["velocity_nm_per_ns"].items():
        print(f"  edge {k}: " + ("no crossing" if v is None else f"v = {v:.6g} nm/ns"))
    return EXIT_OK


def _refuse_non_gaussian(setup):
    from .fields import classify
    if setup.classification != "GaussianComputable":
        raise Refusal(f"refused: encoder is {classify(setup.encoder)}, decoder is "
                      f"{classify(setup.decoder)}; coherent information is only computed "
                      "for Gaussian-computable gates")


def _oracle_rows(cfg: ChannelConfig, setup):
    from .channel import scaled_couplings, matched_couplings, output_state, trace_distance
    from .fields import DiscreteModeField
    from .fock import fock_oracle

    o = cfg.data["oracle"]
    w = o.get("weights") or [1 / (2 * np.pi)] * o["modes"]
    fm = DiscreteModeField(o["k"], w)
    rows = []
    for J in o.get("J") or cfg.sweep["J"]:
        st = matched_couplings(setup, J) if o["coupling"] == "matched" \
            else scaled_couplings(setup, J)
        eng = output_state(st, fm)
        ref = fock_oracle(st, o["modes"], o["k"], o["n_max"], w)
        rows.append((J, trace_distance(eng, ref.rho_CB), ref.top_population, ref.reliable))
    return rows


def run_channel(cfg: ChannelConfig, out: Path, seed=None, threads=1) -> int:
    from .channel import capacity_sweep

    setup = cfg.setup()
    _refuse_non_gaussian(setup)
    sw = cfg.sweep
    if not cfg.data["channel"]["oracle_only"]:
        rows = capacity_sweep(setup, sw["J"], sw.get("sigma"), sw["coupling"], threads=threads)
        io.write_csv(out / "sweep.csv", ("J", "sigma", "I_c", "branch_count"),
                     ((r.J, r.sigma, r.coherent_info, r.branch_count) for r in rows))
        for r in rows:
            print(f"J={r.J!r} sigma={r.sigma!r} I_c={r.coherent_info:+.6f}")
    if cfg.oracle:
        return _write_oracle(cfg, setup, out)
    return EXIT_OK


def _write_oracle(cfg, setup, out) -> int:
    rows = _oracle_rows(cfg, setup)
    io.write_csv(out / "oracle.csv", ("J", "trace_distance", "top_population", "reliable"), rows)
    for J, d, top, ok in rows:
        print(f"oracle J={J!r}: trace distance {d:.3e}" + ("" if ok else " (truncation leak)"))
    return EXIT_OK if all(r[3] for r in rows) else EXIT_NUMERICAL


def run_oracle(cfg: ChannelConfig, out: Path, seed=None, threads=1) -> int:
    setup = cfg.setup()
    _refuse_non_gaussian(setup)
    if "oracle" not in cfg.data:
        raise ConfigError([FieldError("oracle", "the oracle subcommand needs an [oracle] section")])
    return _write_oracle(cfg, setup, out)


def run_constraints(out: Path) -> int:
    from .constraints import scenario_table, table_i

    rows = table_i()
    io.write_csv(out / "table_i.csv", ("T_K", "B0_T", "f_e_GHz", "p_th"),
                 ((r.T, r.B0, r.f_e, r.p_th) for r in rows))
    sc = scenario_table()
    io.write_csv(out / "scenarios.csv", ("name", "v_nm_per_ns", "lambda_s_nm", "t_sw_ns", "q_loc"),
                 ((s["name"], s["v_nm_per_ns"], s["lambda_s_nm"], s["t_sw_ns"], s["q_loc"]) for s in sc))
    print("Thermal spin polarization")
    print(f"{'T (K)':>8} {'B0 (T)':>8} {'f_e (GHz)':>10} {'p_th':>8}")
    for r in rows:
        print(f"{r.T:>8.1f} {r.B0:>8.1f} {r.f_e:>10.1f} {r.p_th:>8.4f}")
    print()
    print("Switching times")
    print(f"{'scenario':<10} {'v (nm/ns)':>11} {'lambda_s (nm)':>14} {'t_sw':>10}")
    for s in sc:
        t = s["t_sw_ns"]
        human = f"{t * 1e6:.1f} fs" if t < 1e-3 else f"{t * 1e3:.1f} ps"
        print(f"{s['name']:<10} {s['v_nm_per_ns']:>11.4g} {s['lambda_s_nm']:>14.4g} {human:>10}")
    return EXIT_OK


COMMANDS = {
    "simulate": (run_simulate, DeviceConfig),
    "bands": (run_bands, DeviceConfig),
    "channel": (run_channel, ChannelConfig),
    "oracle": (run_oracle, ChannelConfig),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="udwqc", description="UDW quantum channel and BHZ device simulator")
    p.add_argument("command", choices=list(COMMANDS) + ["constraints"])
    p.add_argument("--config", help="configuration file or shipped preset name")
    p.add_argument("--out-dir", help="directory for output files (default: $UDWQC_OUT_DIR or .)")
    p.add_argument("--seed", type=int, help="override the solver seed")
    p.add_argument("--threads", type=int, help="worker threads (default: $UDWQC_THREADS or 1)")
    return p


def _env_threads() -> int:
    raw = os.environ.get("UDWQC_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError([FieldError("UDWQC_THREADS", f"not an integer: {raw!r}")])
    return n


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads = args.threads if args.threads is not None else _env_threads()
        if threads < 1:
            raise ConfigError([FieldError("--threads", "must be at least 1")])
        if args.seed is not None and args.seed < 0:
            raise ConfigError([FieldError("--seed", "must be non-negative")])
        out = Path(args.out_dir or os.environ.get("UDWQC_OUT_DIR") or ".")
        if args.command == "constraints":
            return run_constraints(out)
        fn, cls = COMMANDS[args.command]
        cfg = _expect(_load(args.config), cls, args.command)
        return fn(cfg, out, seed=args.seed, threads=threads)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Refusal as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
