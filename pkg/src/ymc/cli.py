"""Experiment runner.

Subcommands: evolve, spectrum, greens, gap-scan, fock-check.  A config file
(INI sections, flat typed keys; see docs/config.md) supplies defaults that
command-line flags override.  Floats in CSV/JSON artifacts are written with
shortest round-trip formatting, so fixed seeds give byte-identical outputs.

Exit codes: 0 success, 2 config/usage error, 3 numerical failure.
"""

import argparse
import configparser
import json
import sys

import numpy as np

from . import __version__
from .algebra import StructureConstants
from .errors import ConfigError, NumericalError, YmcError
from .faddeev_popov import assemble, low_spectrum
from .fock import fock_check
from .gap import GapScanConfig, gap_scan
from .greens import BornSeriesReport, born_apply, modified_green, modified_green_defect
from .hamiltonian import FlowState, HamiltonianConfig, energy, evolve
from .lattice import ColorScalarField, Grid, coulomb_residual
from .random_fields import RandomFieldSpec, generate_field
from .snapshot import read_snapshot, write_snapshot

__all__ = ["main"]


def _fmt(x) -> str:
    """Shortest round-trip decimal for floats; plain str otherwise."""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path, header, rows, footer_comments=()):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    for comment in footer_comments:
        lines.append(f"# {comment}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


_SCHEMA = {
    "grid": {"n": int, "box": float},
    "algebra": {"k": int, "g": float},
    "field": {"seed": int, "shape": str, "p_max": int, "amplitude": float,
              "transverse": bool},
    "evolve": {"steps": int, "dt": float, "coulomb": bool, "greens_terms": int,
               "gradient": str, "record_every": int},
    "spectrum": {"m": int, "seed": int},
    "greens": {"method": str, "n_terms": int, "probe_seed": int},
    "gap": {"g_list": str, "r_amp": float, "profile_seed": int, "k_max": int,
            "n_terms": int, "n_nodes": int, "pairs": str},
    "fock": {"d": int, "nmax": int, "seed": int},
}

_BOOL = {"true": True, "on": True, "1": True, "yes": True,
         "false": False, "off": False, "0": False, "no": False}


def load_config(path) -> dict:
    """Parse and validate the INI config; unknown sections/keys are errors."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config {path}", where="cli.load_config")
    out = {}
    sections = parser.sections()
    if not sections:
        raise ConfigError(f"{path}: empty config", where="cli.load_config")
    for section in sections:
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]",
                              where="cli.load_config")
        out[section] = {}
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]",
                                  where="cli.load_config")
            typ = _SCHEMA[section][key]
            try:
                if typ is bool:
                    out[section][key] = _BOOL[raw.strip().lower()]
                else:
                    out[section][key] = typ(raw)
            except (KeyError, ValueError) as exc:
                raise ConfigError(
                    f"{path}: bad value {raw!r} for {section}.{key}",
                    where="cli.load_config") from exc
    return out


def _cfg_get(cfg, section, key, default=None):
    return cfg.get(section, {}).get(key, default)


def _grid_from_config(cfg) -> Grid:
    n = _cfg_get(cfg, "grid", "n")
    box = _cfg_get(cfg, "grid", "box")
    if n is None or box is None:
        raise ConfigError("config must provide [grid] n and box", where="cli.grid")
    return Grid(int(n), float(box))


def _field_from_init(init, cfg, grid_default=None):
    """Resolve --init: either a snapshot path or 'random:<seed>'."""
    if init.startswith("random:"):
        seed = int(init.split(":", 1)[1])
        if grid_default is None:
            raise ConfigError("random init needs a config with a [grid] section",
                              where="cli.evolve")
        k = int(_cfg_get(cfg, "algebra", "k", 3))
        g = float(_cfg_get(cfg, "algebra", "g", 0.2))
        spec = RandomFieldSpec(
            seed=seed,
            shape=_cfg_get(cfg, "field", "shape", "band"),
            p_max=_cfg_get(cfg, "field", "p_max", 1),
            amplitude=_cfg_get(cfg, "field", "amplitude", 0.5),
            transverse=True,
        )
        return generate_field(grid_default, k, spec), g, k
    field, meta = read_snapshot(init)
    return field, meta.g, meta.k


def _cmd_evolve(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    grid = _grid_from_config(cfg) if "grid" in cfg else None
    a, g, k = _field_from_init(args.init, cfg, grid)
    grid = a.grid
    e_seed = args.seed if args.seed is not None else 1
    e = generate_field(grid, k, RandomFieldSpec(
        seed=e_seed, shape="band", p_max=1,
        amplitude=float(_cfg_get(cfg, "field", "amplitude", 0.5)),
        transverse=True, kind="momentum"))
    coulomb = args.coulomb == "on"
    gradient = _cfg_get(cfg, "evolve", "gradient", "fd" if coulomb else "analytic")
    ham = HamiltonianConfig(
        sc=StructureConstants(g, k),
        dt=args.dt,
        coulomb=coulomb,
        gradient_method=gradient,
        greens_n_terms=int(_cfg_get(cfg, "evolve", "greens_terms", 6)),
    )
    state = FlowState(0.0, a, e, energy(ham, a, e))
    traj = evolve(ham, state, args.steps,
                  record_every=int(_cfg_get(cfg, "evolve", "record_every", 1)))
    if args.out_traj:
        rows = list(zip(traj.steps.tolist(), traj.times.tolist(),
                        traj.energies.tolist(), traj.gauge_residuals.tolist(),
                        traj.f_norms.tolist()))
        _write_csv(args.out_traj,
                   ["step", "t", "energy", "gauge_residual", "f_norm"], rows)
    if args.out_final:
        write_snapshot(args.out_final, traj.final.a, g=g, t=traj.final.t)
    return 0


def _cmd_spectrum(args) -> int:
    field, meta = read_snapshot(args.snapshot)
    sc = StructureConstants(meta.g, meta.k)
    op = assemble(sc, field)
    sl = low_spectrum(op, args.m, seed=args.seed)
    rows = [(i, float(sl.eigenvalues[i]), float(sl.residuals[i]))
            for i in range(len(sl.eigenvalues))]
    _write_csv(args.out, ["index", "eigenvalue", "residual"], rows)
    return 0


def _cmd_greens(args) -> int:
    field, meta = read_snapshot(args.snapshot)
    sc = StructureConstants(meta.g, meta.k)
    method = {"born": "born", "pinv": "pseudoinverse"}[args.method]
    gop = modified_green(sc, field, method, n_terms=args.n_terms)
    defect = modified_green_defect(gop, seed=args.probe_seed)
    rng = np.random.Generator(np.random.Philox(args.probe_seed))
    probe = ColorScalarField(
        field.grid, rng.standard_normal((meta.n, meta.n, meta.n, meta.k)))
    report: BornSeriesReport
    _, report = born_apply(sc, field, probe, args.n_terms)
    payload = {
        "method": args.method,
        "n_terms": args.n_terms,
        "g": meta.g,
        "defect": defect,
        "born_residuals": report.residuals.tolist(),
        "fitted_decay_rate": report.fitted_decay_rate,
        "fitted_decay_ratio": report.decay_ratio(),
    }
    _write_json(args.out, payload)
    return 0


def _cmd_gap_scan(args) -> int:
    cfg = load_config(args.config)
    grid = _grid_from_config(cfg)
    k = int(_cfg_get(cfg, "algebra", "k", 3))
    g_list = _cfg_get(cfg, "gap", "g_list", "0.05,0.1,0.2,0.4")
    pairs_raw = _cfg_get(cfg, "gap", "pairs")
    pairs = None
    if pairs_raw:
        pairs = []
        try:
            for chunk in pairs_raw.split(";"):
                x0_s, y0_s = chunk.split(":")
                pairs.append((tuple(int(v) for v in x0_s.split(",")),
                              tuple(int(v) for v in y0_s.split(","))))
        except ValueError as exc:
            raise ConfigError(f"bad gap.pairs value {pairs_raw!r}",
                              where="cli.gap_scan") from exc
    scan_cfg = GapScanConfig(
        grid=grid,
        k=k,
        g_list=tuple(float(v) for v in g_list.split(",")),
        r_amp=float(_cfg_get(cfg, "gap", "r_amp", 1.0)),
        profile_seed=int(_cfg_get(cfg, "gap", "profile_seed", 2024)),
        site_pairs=pairs,
        k_max=int(_cfg_get(cfg, "gap", "k_max", 2)),
        n_terms=int(_cfg_get(cfg, "gap", "n_terms", 4)),
        n_nodes=int(_cfg_get(cfg, "gap", "n_nodes", 24)),
    )
    result = gap_scan(scan_cfg)
    n = grid.n

    def flat(site):
        return (site[0] * n + site[1]) * n + site[2]

    rows = [
        (r.g, flat(r.x0), flat(r.y0), r.i, r.a, r.k, r.integral, r.lam,
         ";".join(r.flags))
        for r in result.records
    ]
    footer = [
        f"eta g={_fmt(g)} eta={_fmt(result.eta_per_g[g])}"
        for g in sorted(result.eta_per_g)
    ]
    footer.append(f"fitted_slope {_fmt(result.fitted_slope)}")
    footer.append(f"family {result.metadata['family']}")
    footer.append(f"max_node_weight {_fmt(result.metadata['max_node_weight'])}")
    _write_csv(args.out, ["g", "x0", "y0", "i", "a", "k", "I", "lambda", "flags"],
               rows, footer)
    return 0


def _cmd_fock_check(args) -> int:
    report = fock_check(args.d, args.nmax, args.seed)
    _write_json(args.out, report)
    return 0 if report["all_pass"] else 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ymc",
                                     description="Coulomb-gauge lattice workbench")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="leapfrog time evolution")
    p.add_argument("--init", required=True, help="snapshot path or random:<seed>")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--coulomb", choices=("on", "off"), default="off")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=None, help="momentum field seed")
    p.add_argument("--out-traj")
    p.add_argument("--out-final")
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("spectrum", help="low-lying gauge-operator spectrum")
    p.add_argument("--snapshot", required=True)
    p.add_argument("-m", type=int, required=True, dest="m")
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("greens", help="Green's-function defects and decay fit")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--method", choices=("born", "pinv"), default="born")
    p.add_argument("-n", type=int, default=6, dest="n_terms")
    p.add_argument("--probe-seed", type=int, default=99)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_greens)

    p = sub.add_parser("gap-scan", help="generalized-eigenvalue gap scan")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gap_scan)

    p = sub.add_parser("fock-check", help="Fock-space operator identity suites")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--nmax", type=int, default=5)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fock_check)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"ymc: config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"ymc: numerical failure: {exc}", file=sys.stderr)
        return 3
    except YmcError as exc:
        print(f"ymc: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"ymc: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
