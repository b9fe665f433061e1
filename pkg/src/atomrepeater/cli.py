"""Command-line scenario runner.

Every subcommand writes its artifact into ``--out-dir`` and prints the path.
CSV files start with ``#`` comment lines recording the package version, the
command, the seed and the fully resolved configuration; JSON files carry the
same record under ``"header"``. Exit codes: 0 success, 2 configuration error,
3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import cascade, herald, indistinguishability, keyrate, repeater
from .cavity import CavityGeometry, MirrorSet, design_cavity, fiber_overlap, mode_geometry, output_mode
from .config import ConfigError, convert, load_config
from .constants import (
    BRANCH_HERALD,
    BRANCH_TELECOM,
    GAMMA_4D32,
    GAMMA_4D_TO_5P12,
    GAMMA_5P12,
    LAMBDA_HERALD,
    LAMBDA_TELECOM,
    to_mhz2pi,
)
from .dynamics import IntegrationError, NonFiniteStateError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

NUMERIC_ERRORS = (
    cascade.CalibrationError,
    IntegrationError,
    NonFiniteStateError,
    FloatingPointError,
    ZeroDivisionError,
    indistinguishability.SampleError,
    keyrate.UnreachableTargetError,
    ArithmeticError,
    ValueError,
)

NS = 1e-9


def _version():
    try:
        return version("atomrepeater")
    except PackageNotFoundError:  # pragma: no cover - running from a source tree
        return "unknown"


class Output:
    """Collects tables and writes them with the provenance header."""

    def __init__(self, args, cfg):
        self.dir = Path(args.out_dir if args.out_dir is not None else cfg["run.out_dir"])
        self.fmt = args.format
        self.cfg = cfg
        self.command = " ".join(args.command_words)
        self.written = []

    @property
    def header(self):
        # rendered at write time so flag overrides are included
        return {
            "version": _version(),
            "command": self.command,
            "seed": self.cfg.seed,
            "config": self.cfg.to_text().splitlines(),
        }

    def table(self, name, columns, rows, summary=None):
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / f"{name}.{self.fmt}"
        if self.fmt == "csv":
            buf = io.StringIO()
            header = self.header
            buf.write(f"# atomrepeater {header['version']}\n")
            buf.write(f"# command: {header['command']}\n")
            buf.write(f"# seed: {header['seed']}\n")
            for line in header["config"]:
                buf.write(f"# {line}\n")
            for k, v in (summary or {}).items():
                buf.write(f"# {k} = {_fmt(v)}\n")
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
            text = buf.getvalue()
        else:
            doc = {"header": self.header, "columns": list(columns), "rows": [[_json(v) for v in r] for r in rows]}
            if summary:
                doc["summary"] = {k: _json(v) for k, v in summary.items()}
            text = json.dumps(doc, indent=1) + "\n"
        path.write_text(text, encoding="utf-8")
        self.written.append(path)
        return path


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def _json(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def _need_seed(cfg):
    if cfg.seed is None:
        raise ConfigError([(0, "this subcommand runs Monte Carlo and needs --seed (or run.seed)")])
    return cfg.seed


def _override(cfg, name, value, unit=""):
    if value is not None:
        cfg.set(name, convert(name, str(value), unit))


def _int_list(text, name):
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError([(0, f"--{name}: expected comma-separated integers, got {text!r}")]) from None
    if not vals:
        raise ConfigError([(0, f"--{name}: empty list")])
    return vals


def _float_list(text, name):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError([(0, f"--{name}: expected comma-separated numbers, got {text!r}")]) from None
    if not vals:
        raise ConfigError([(0, f"--{name}: empty list")])
    return vals


# subcommands -----------------------------------------------------------------
def cmd_cavity_design(args, cfg, out):
    rows = []
    h, e = cfg.values["heralding_cavity"], cfg.values["entangling_cavity"]
    hg = CavityGeometry(h["length"], h["roc1"], h["roc2"], LAMBDA_HERALD)
    eg = CavityGeometry(e["length"], e["roc1"], e["roc2"], LAMBDA_TELECOM)
    hd = design_cavity(hg, MirrorSet(h["t_oc"], h["t_hr"], h["loss"]), BRANCH_HERALD * GAMMA_5P12, GAMMA_5P12,
                       atom_position=hg.length / 2 + h["atom_offset"])
    ed = design_cavity(eg, MirrorSet(e["t_oc"], e["t_hr"], e["loss"]), BRANCH_TELECOM * GAMMA_4D_TO_5P12, GAMMA_4D32)
    for label, d in (("heralding", hd), ("entangling", ed)):
        rows += [
            (label, "kappa_oc", to_mhz2pi(d.kappa_oc), "MHz2pi"),
            (label, "kappa_loss", to_mhz2pi(d.kappa_loss), "MHz2pi"),
            (label, "g", to_mhz2pi(d.g_coupling), "MHz2pi"),
            (label, "waist", d.waist_w0 / 1e-6, "um"),
            (label, "waist_position", d.waist_position / 1e-6, "um"),
            (label, "cooperativity", d.cooperativity, ""),
        ]
    rows.append(("entangling", "mode_radius_centre", mode_geometry(eg).radius_at(eg.length / 2) / 1e-6, "um"))
    w, roc = output_mode(eg)
    rows.append(("entangling", "fiber_overlap", fiber_overlap(w, roc, e["fiber_mfd"] / 2, LAMBDA_TELECOM), ""))
    for r in rows:
        print(f"{r[0]:<11} {r[1]:<19} {r[2]:>10.4g} {r[3]}")
    out.table("cavity_design", ("cavity", "quantity", "value", "unit"), rows)


def _pulse(cfg, fwhm=None):
    fwhm = cfg["pulse.fwhm"] if fwhm is None else fwhm
    cav, scheme = cfg.cavities(), cfg.scheme()
    return cascade.calibrated_pulse(
        fwhm, target=cfg["pulse.target_residual"],
        make_model=lambda p: cascade.build_model(scheme, cav, p),
    )


def cmd_cascade_flux(args, cfg, out):
    _override(cfg, "pulse.fwhm", args.fwhm, "ns")
    pulse = _pulse(cfg)
    model = cascade.build_model(cfg.scheme(), cfg.cavities(), pulse)
    f = cascade.flux_curves(model)
    t = f["time"]
    tail = t > 45 * NS
    integ = np.trapezoid if hasattr(np, "trapezoid") else np.trapz
    beyond = integ(f["heralding"][tail], t[tail]) / integ(f["heralding"], t)
    rows = list(zip(t / NS, f["entangling"] * NS, f["heralding"] * NS))
    out.table("cascade_flux", ("time_ns", "flux_entangling_per_ns", "flux_heralding_per_ns"), rows,
              summary={"peak_rabi_MHz2pi": to_mhz2pi(pulse.peak_rabi), "heralding_fraction_beyond_45ns": beyond})


def cmd_cascade_pht(args, cfg, out):
    seed = _need_seed(cfg)
    _override(cfg, "pulse.fwhm", args.fwhm, "ns")
    _override(cfg, "cascade.n_traj", args.n_traj)
    pulse = _pulse(cfg)
    model = cascade.build_model(cfg.scheme(), cfg.cavities(), pulse)
    res = cascade.success_probability(model, cfg["cascade.n_traj"], seed)
    rows = [("p_ht", res.p_ht, res.p_ht_stderr)]
    rows += [(f"loss_{k}", v, res.loss_stderr[k]) for k, v in res.losses.items()]
    out.table("cascade_pht", ("quantity", "value", "stderr"), rows,
              summary={"n_traj": res.n_traj, "peak_rabi_MHz2pi": to_mhz2pi(pulse.peak_rabi)})
    th, tt = res.samples.pairs()
    out.table("cascade_samples", ("t_herald_ns", "t_telecom_ns"), list(zip(th / NS, tt / NS)))
    print(f"p_ht = {res.p_ht:.4f} +- {res.p_ht_stderr:.4f}")


def cmd_cascade_sweep(args, cfg, out):
    seed = _need_seed(cfg)
    _override(cfg, "cascade.n_traj", args.n_traj)
    _override(cfg, "pulse.sweep_min", args.fwhm_min, "ns")
    _override(cfg, "pulse.sweep_max", args.fwhm_max, "ns")
    _override(cfg, "pulse.sweep_step", args.step, "ns")
    lo, hi, step = cfg["pulse.sweep_min"], cfg["pulse.sweep_max"], cfg["pulse.sweep_step"]
    fwhms = lo + step * np.arange(int(np.floor((hi - lo) / step + 1e-9)) + 1)
    cav, scheme = cfg.cavities(), cfg.scheme()
    rows = []
    for fwhm in fwhms:
        pulse = _pulse(cfg, fwhm)
        res = cascade.success_probability(cascade.build_model(scheme, cav, pulse), cfg["cascade.n_traj"], seed)
        rows.append((fwhm / NS, res.p_ht, res.p_ht_stderr))
    out.table("cascade_sweep", ("fwhm_ns", "p_ht", "stderr"), rows)


def cmd_cascade_multiphoton(args, cfg, out):
    seed = _need_seed(cfg)
    _override(cfg, "cascade.n_traj", args.n_traj)
    _override(cfg, "cascade.recycling_scale", args.recycling_scale)
    levels = tuple(x for x in args.recycle.split(",") if x)
    if not set(levels) <= {"e", "i"}:
        raise ConfigError([(0, "--recycle takes a comma-separated subset of e,i")])
    pulse = _pulse(cfg)
    frac, ci, n_h = cascade.multiphoton_fraction(
        n_traj=cfg["cascade.n_traj"], seed=seed, recycling=bool(levels),
        recycling_scale=cfg["cascade.recycling_scale"], cavities=cfg.cavities(),
        recycle_levels=levels or ("e", "i"), pulse=pulse,
    )
    out.table("cascade_multiphoton", ("fraction", "ci_lo", "ci_hi", "n_heralded"), [(frac, ci[0], ci[1], n_h)])
    print(f"multi-photon fraction = {frac:.4%} (95% CI {ci[0]:.4%} - {ci[1]:.4%}, {n_h} heralds)")


def _read_samples(path):
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", skiprows=0, dtype=str)
    except OSError as exc:
        raise ConfigError([(0, f"cannot read samples {path}: {exc.strerror}")]) from None
    data = np.atleast_2d(data)
    if data.shape[1] != 2 or list(data[0]) != ["t_herald_ns", "t_telecom_ns"]:
        raise ConfigError([(0, f"{path}: expected columns t_herald_ns,t_telecom_ns")])
    vals = data[1:].astype(float) * NS
    return vals[:, 0], vals[:, 1]


def cmd_contrast(args, cfg, out):
    seed = _need_seed(cfg)
    _override(cfg, "contrast.n_traj", args.n_traj)
    _override(cfg, "contrast.n_boot", args.n_boot)
    _override(cfg, "pulse.fwhm", args.fwhm, "ns")
    cav = cfg.cavities()
    if args.samples:
        samples = _read_samples(args.samples)
    else:
        pulse = _pulse(cfg)
        model = cascade.build_model(cfg.scheme(), cav, pulse)
        samples = cascade.success_probability(model, cfg["contrast.n_traj"], seed).samples
    windows = [w * NS for w in _float_list(args.windows, "windows")] if args.windows else [cfg["contrast.window"]]
    times = [t * NS for t in _float_list(args.herald_times, "herald-times")] if args.herald_times else []
    rep = indistinguishability.contrast_report(
        samples, cav.kappa_t, cav.kappa_h, herald_times=times, windows=windows,
        n_boot=cfg["contrast.n_boot"], seed=seed,
    )
    out.table("contrast", ("C", "C_stderr", "F"), [(rep.C, rep.C_stderr, rep.F)])
    out.table("contrast_postselection", ("window_ns", "C", "retained"), [(w / NS, c, k) for w, c, k in rep.postselection])
    if times:
        kde = indistinguishability.kde2d(samples, cav.kappa_t, cav.kappa_h)
        cols = ["time_ns"] + [f"p_{t / NS:g}ns_per_ns" for t in times]
        env = np.column_stack([kde.t_telecom / NS] + [rep.envelopes[float(t)] * NS for t in times])
        out.table("contrast_envelopes", cols, env.tolist())
    print(f"C = {rep.C:.4f} +- {rep.C_stderr:.4f}, F = {rep.F:.4f}")


def cmd_herald_fidelity(args, cfg, out):
    _override(cfg, "herald.a", args.a)
    _override(cfg, "herald.b", args.b)
    _override(cfg, "herald.c", args.c)
    a, b, c = cfg["herald.a"], cfg["herald.b"], cfg["herald.c"]
    F = herald.degenerate_mode_fidelity(a, b, c)
    F_explicit = herald.explicit_state_fidelity(herald.TransitionAmplitudes(a, b, c))
    out.table("herald_fidelity", ("a", "b", "c", "F", "infidelity", "F_explicit"), [(a, b, c, F, 1 - F, F_explicit)])
    print(f"F = {F:.6f}, 1 - F = {1 - F:.4%}")


def _distances(args, cfg):
    _override(cfg, "repeater.L_min", args.L_min, "km")
    _override(cfg, "repeater.L_max", args.L_max, "km")
    _override(cfg, "repeater.L_step", args.step, "km")
    lo, hi, step = cfg["repeater.L_min"], cfg["repeater.L_max"], cfg["repeater.L_step"]
    if hi < lo:
        raise ConfigError([(0, "repeater.L_max must be >= repeater.L_min")])
    return lo + step * np.arange(int(np.floor((hi - lo) / step + 1e-9)) + 1)


def cmd_repeater_rate(args, cfg, out):
    grid = _distances(args, cfg)
    _override(cfg, "repeater.runs", args.runs)
    Ns = _int_list(args.N, "N")
    seed = _need_seed(cfg) if args.strategy == "keep" and any(n > 2 for n in Ns) else cfg.seed
    base = cfg.link_params()
    for N in Ns:
        rows = []
        mc = args.strategy == "keep" and N > 1
        for L in grid:
            p = base.for_distance(L, N)
            if mc:
                pe, pes = repeater.p_e(p), repeater.p_es(p)
                n, ci = repeater.attempts_keep(N, pe, pes, cfg["repeater.runs"], seed, cfg["repeater.n_boot"])
                ct = p.cycle_time
                rows.append((L, 1 / (n * ct), 1 / (ci[1] * ct), 1 / (ci[0] * ct)))
            else:
                rows.append((L, repeater.rate_report(p, N, "restart").rate))
        cols = ("L_km", "rate_per_s", "ci_lo", "ci_hi") if mc else ("L_km", "rate_per_s")
        out.table(f"repeater_rate_N{N}_{args.strategy}", cols, rows)


def cmd_repeater_storage(args, cfg, out):
    grid = _distances(args, cfg)
    _override(cfg, "repeater.runs", args.runs)
    Ns = _int_list(args.N, "N")
    mc = args.strategy == "keep" or args.monte_carlo
    seed = _need_seed(cfg) if mc else cfg.seed
    base = cfg.link_params()
    for N in Ns:
        if N < 2:
            raise ConfigError([(0, "storage needs N >= 2")])
        rows = []
        for L in grid:
            p = base.for_distance(L, N)
            if mc:
                pe, pes = repeater.p_e(p), repeater.p_es(p)
                n, f = repeater.simulate(N, pe, pes, args.strategy, cfg["repeater.runs"], seed)
                m = n - f + 1
                ci = repeater.bootstrap_mean_ci(m, cfg["repeater.n_boot"], seed)
                ct = p.cycle_time
                rows.append((L, m.mean() * ct * 1e3, ci[0] * ct * 1e3, ci[1] * ct * 1e3))
            else:
                s = repeater.storage_report(p, N, "restart")
                rows.append((L, s.time * 1e3, s.time_ci[0] * 1e3, s.time_ci[1] * 1e3))
        out.table(f"repeater_storage_N{N}_{args.strategy}", ("L_km", "storage_ms", "ci_lo", "ci_hi"), rows)


def cmd_keyrate_table(args, cfg, out):
    Cs = _float_list(args.C, "C") if args.C else [cfg["keyrate.contrast"]]
    Fs = _float_list(args.bsm_fidelity, "bsm-fidelity") if args.bsm_fidelity else [cfg["keyrate.bsm_fidelity"]]
    Ns = _int_list(args.N, "N") if args.N else [cfg["keyrate.N"]]
    rows = []
    for N in Ns:
        for C in Cs:
            for F in Fs:
                C_, F_ = convert("keyrate.contrast", str(C), ""), convert("keyrate.bsm_fidelity", str(F), "")
                e = keyrate.error_rates(keyrate.chain_state(N, C_, keyrate.bsm_fidelity_to_P(F_)))
                rows.append((N, C_, F_, e.eps_x, e.eps_y, e.eps_z, keyrate.secret_fraction(e)))
    for r in rows:
        print(f"N={r[0]} C={r[1]:.4f} F={r[2]:.4f} r={r[6]:.4f}")
    out.table("keyrate_table", ("N", "C", "bsm_fidelity", "eps_x", "eps_y", "eps_z", "r"), rows)


def cmd_keyrate_threshold(args, cfg, out):
    Cs = _float_list(args.C, "C") if args.C else [cfg["keyrate.contrast"]]
    Ns = _int_list(args.N, "N") if args.N else [cfg["keyrate.N"]]
    targets = _float_list(args.target, "target")
    rows = []
    for N in Ns:
        for C in Cs:
            for t in targets:
                try:
                    F = keyrate.threshold_fidelity(C, N, t)
                except keyrate.UnreachableTargetError:
                    F = None
                rows.append((N, C, t, F))
    out.table("keyrate_threshold", ("N", "C", "target_r", "bsm_fidelity_threshold"), rows)


def cmd_keyrate_purification(args, cfg, out):
    Ns = _int_list(args.N, "N") if args.N else [2, 4]
    C = cfg["keyrate.contrast"] if args.C is None else convert("keyrate.contrast", str(args.C), "")
    rows = []
    for N in Ns:
        for placement in ("final", "links"):
            for conv in ("depolarizing", "infidelity"):
                g = keyrate.fidelity_gain_threshold(C, N, conv, placement)
                rows.append((N, placement, conv, g, keyrate.key_rate_contrast_threshold(N, 1.0, placement)))
    out.table("keyrate_purification",
              ("N", "placement", "gate_error_convention", "gate_error_threshold", "contrast_threshold"), rows)


# parser ------------------------------------------------------------------------
def build_parser():
    p = argparse.ArgumentParser(prog="atomrepeater", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="scenario file (default: the shipped reference scenario)")
    p.add_argument("--seed", type=int, help="random seed; required by Monte Carlo subcommands")
    p.add_argument("--out-dir", help="output directory (default: run.out_dir)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("cavity-design", help="derived cavity parameters")
    s.set_defaults(func=cmd_cavity_design)

    cas = sub.add_parser("cascade", help="cascade photon source").add_subparsers(dest="sub", required=True)
    s = cas.add_parser("flux", help="output fluxes from the master equation")
    s.add_argument("--fwhm", type=float, help="pulse FWHM [ns]")
    s.set_defaults(func=cmd_cascade_flux)
    s = cas.add_parser("pht", help="success probability and loss budget")
    s.add_argument("--fwhm", type=float, help="pulse FWHM [ns]")
    s.add_argument("--n-traj", type=int)
    s.set_defaults(func=cmd_cascade_pht)
    s = cas.add_parser("sweep", help="success probability versus pulse FWHM")
    s.add_argument("--fwhm-min", type=float, help="[ns]")
    s.add_argument("--fwhm-max", type=float, help="[ns]")
    s.add_argument("--step", type=float, help="[ns]")
    s.add_argument("--n-traj", type=int)
    s.set_defaults(func=cmd_cascade_sweep)
    s = cas.add_parser("multiphoton", help="worst-case multi-photon fraction")
    s.add_argument("--n-traj", type=int)
    s.add_argument("--recycling-scale", type=float)
    s.add_argument("--recycle", default="e,i", help="excited levels whose stray decays return to g (e,i / e / i)")
    s.set_defaults(func=cmd_cascade_multiphoton)

    s = sub.add_parser("contrast", help="two-photon interference contrast")
    s.add_argument("--samples", help="arrival CSV with columns t_herald_ns,t_telecom_ns (default: simulate)")
    s.add_argument("--fwhm", type=float, help="pulse FWHM [ns] when simulating")
    s.add_argument("--n-traj", type=int)
    s.add_argument("--n-boot", type=int)
    s.add_argument("--windows", help="post-selection windows [ns], comma-separated")
    s.add_argument("--herald-times", help="herald times [ns] for conditional envelopes, comma-separated")
    s.set_defaults(func=cmd_contrast)

    s = sub.add_parser("herald-fidelity", help="fidelity with a degenerate second heralding mode")
    s.add_argument("--a", type=float)
    s.add_argument("--b", type=float)
    s.add_argument("--c", type=float)
    s.set_defaults(func=cmd_herald_fidelity)

    rep = sub.add_parser("repeater", help="repeater-chain rates and storage").add_subparsers(dest="sub", required=True)
    for name, func in (("rate", cmd_repeater_rate), ("storage", cmd_repeater_storage)):
        s = rep.add_parser(name)
        s.add_argument("--N", default="1,2,4" if name == "rate" else "2,4", help="links, comma-separated")
        s.add_argument("--strategy", choices=("restart", "keep"), default="restart")
        s.add_argument("--L-min", type=float, help="[km]")
        s.add_argument("--L-max", type=float, help="[km]")
        s.add_argument("--step", type=float, help="[km]")
        s.add_argument("--runs", type=int, help="Monte Carlo runs per point")
        if name == "storage":
            s.add_argument("--monte-carlo", action="store_true", help="simulate the restart strategy too")
        s.set_defaults(func=func)

    kr = sub.add_parser("keyrate", help="secret-key fraction analysis").add_subparsers(dest="sub", required=True)
    s = kr.add_parser("table")
    s.add_argument("--C", help="contrast values, comma-separated")
    s.add_argument("--bsm-fidelity", help="atomic BSM fidelities, comma-separated")
    s.add_argument("--N", help="links, comma-separated")
    s.set_defaults(func=cmd_keyrate_table)
    s = kr.add_parser("threshold")
    s.add_argument("--C", help="contrast values, comma-separated")
    s.add_argument("--N", help="links, comma-separated")
    s.add_argument("--target", default="0,0.25,0.5", help="secret fractions, comma-separated")
    s.set_defaults(func=cmd_keyrate_threshold)
    s = kr.add_parser("purification")
    s.add_argument("--N", help="links, comma-separated")
    s.add_argument("--C", type=float, help="contrast for the gate-error threshold")
    s.set_defaults(func=cmd_keyrate_purification)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.set("run.seed", convert("run.seed", str(args.seed), ""))
        # the output directory is not part of the provenance header
        args.command_words = _strip_out_dir(argv)
        out = Output(args, cfg)
        args.func(args, cfg, out)
    except ConfigError as exc:
        print(json.dumps(exc.as_record()), file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(json.dumps({"error": "numeric", "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_NUMERIC
    for path in out.written:
        print(path)
    return EXIT_OK


def _strip_out_dir(argv):
    words, skip = [], False
    for w in argv:
        if skip:
            skip = False
            continue
        if w == "--out-dir":
            skip = True
            continue
        if w.startswith("--out-dir="):
            continue
        words.append(w)
    return words


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
