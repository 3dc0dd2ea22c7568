"""``biphoton-sim`` command line.

Exit codes: 0 success, 1 usage or configuration error, 2 simulation error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import detection as det_mod
from .config import ConfigFileError, RunConfig, parse_config
from .detection import PORTS
from .lock import LockError, run_lock
from .optics import HV_TO_DA
from .source import coherence_length_nm, ideal_state, output_phase, source_coherence_weight
from .states import transform

EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _table(title, rows, cols, values, fmt="{:>12.6f}", width=12) -> str:
    lines = [title, " " * 6 + "".join(f"{c:>{width}}" for c in cols)]
    for r, vals in zip(rows, values):
        lines.append(f"{r:<6}" + "".join(fmt.format(v) for v in vals))
    return "\n".join(lines)


def cmd_state(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    src = cfg.source
    phi = output_phase(src)
    mu = source_coherence_weight(src)
    l_c = coherence_length_nm(src.lambda_i_nm, src.bandwidth_i_nm)
    print(f"output phase phi = {phi:+.6f} rad", file=out)
    print(f"path mismatch -dL_i + dL_s = {src.mismatch_nm:.6g} nm", file=out)
    print(f"coherence length = {l_c:.6g} nm, coherence weight mu = {mu:.6e}", file=out)

    coherent = ideal_state(phi, src.balance_angle)
    amps = coherent.amplitudes
    print(_table("\ncoherent amplitudes (signal port x idler), real / imag",
                 [f"{s}_s" for s in coherent.signal_basis], [f"{i}_i" for i in coherent.idler_basis],
                 [[f"{a.real:+.6f}{a.imag:+.6f}j" for a in row] for row in amps], "{:>22}", 22),
          file=out)

    ports = det_mod.source_port_state(src)
    print(_table("\njoint probabilities, idler H/V basis", PORTS, ["H_i", "V_i"],
                 ports.probabilities()), file=out)
    da = transform(ports, idler=(HV_TO_DA, ("D", "A")))
    print(_table("\njoint probabilities, idler D/A basis", PORTS, ["D_i", "A_i"],
                 da.probabilities()), file=out)
    return 0


def _scan_rows(cfg: RunConfig, seed: int):
    angles = cfg.scan.angles()
    mc = det_mod.fringe_scan(cfg.source, cfg.detector, angles, cfg.scan.duration_per_point_s, seed)
    analytic = det_mod.analytic_scan(cfg.source, cfg.detector, angles)
    rows = []
    for a, rec, ref in zip(angles, mc, analytic):
        for k, port in enumerate(PORTS):
            rows.append((np.rad2deg(a), port, rec.coincidences[k], rec.accidentals[k], ref.coincidences[k]))
    return angles, mc, analytic, rows


def write_scan_csv(path: Path, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["angle_deg", "port", "coincidences_hz", "accidentals_hz", "analytic_hz"])
        for angle, port, c, a, ref in rows:
            w.writerow([_fmt(angle), port, _fmt(c), _fmt(a), _fmt(ref)])


def _svg_scan(path: Path, cfg: RunConfig, angles, mc) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fine = np.linspace(angles.min(), angles.max(), 400)
    dense = det_mod.analytic_scan(cfg.source, cfg.detector, fine)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for k, port in enumerate(PORTS):
        line, = ax.plot(np.rad2deg(fine), [r.coincidences[k] for r in dense], lw=1)
        ax.plot(np.rad2deg(angles), [r.coincidences[k] for r in mc], "o", ms=3,
                color=line.get_color(), label=port)
    ax.set_xlabel("analyzer HWP angle (deg)")
    ax.set_ylabel("coincidences (s$^{-1}$)")
    ax.legend(title="810 nm port")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_scan(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    outdir = _outdir(cfg)
    angles, mc, _, rows = _scan_rows(cfg, cfg.run.seed)
    path = outdir / "scan.csv"
    write_scan_csv(path, rows)
    print(f"wrote {path}", file=out)
    for k, port in enumerate(PORTS):
        rates = [r.coincidences[k] for r in mc]
        a, b, _ = det_mod.fit_fringe(angles, rates)
        print(f"port {port}: fitted peak {a + b:.1f} s^-1, visibility {b / a:.4f}", file=out)
    if cfg.output.emit_svg:
        _svg_scan(outdir / "scan.svg", cfg, angles, mc)
        print(f"wrote {outdir / 'scan.svg'}", file=out)
    return 0


def _svg_lock(path: Path, trace) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    ax1.plot(trace.time_s, trace.phi_rad, lw=0.6)
    ax1.axhline(trace.target_phi, color="k", lw=0.5)
    ax1.set_ylabel("phase (rad)")
    ax2.plot(trace.time_s, trace.i1, lw=0.6, label="Det 1")
    ax2.plot(trace.time_s, trace.i2, lw=0.6, label="Det 2")
    ax2.set_xlabel("time (s)")
    ax2.set_ylabel("normalized intensity")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_lock(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    outdir = _outdir(cfg)
    lk = cfg.lock
    trace = run_lock(
        cfg.source, lk.gains, cfg.drift, cfg.run.duration_s, cfg.run.dt_s, cfg.run.seed,
        initial_mismatch_nm=lk.initial_mismatch_nm, target_phi=lk.target_phi_rad,
        prealign_error_nm=lk.prealign_error_nm, settle_s=lk.settle_s,
    )
    path = trace.to_csv(outdir / "lock.csv")
    print(f"wrote {path}", file=out)
    s = trace.summary()
    print(f"settled phase mean {s['phi_mean']:+.6f} rad, std {s['phi_std']:.6f} rad, "
          f"in-band fraction {s['in_band_fraction']:.4f}", file=out)
    if cfg.output.emit_svg:
        _svg_lock(outdir / "lock.svg", trace)
        print(f"wrote {outdir / 'lock.svg'}", file=out)
    return 0


def read_counts_csv(path: Path) -> dict:
    """Per-port (R_c, R_a[, R_s]) from a scan CSV or a one-row-per-port table.

    R_c is the largest coincidence rate seen on a port, R_a the mean
    accidental rate.
    """
    if not path.is_file():
        raise UsageError(f"counts file not found: {path}")
    per_port: dict[str, dict[str, list]] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = {"port", "coincidences_hz", "accidentals_hz"} - set(header)
        if missing:
            raise UsageError(f"{path}: line 1: missing columns {sorted(missing)}")
        for row in reader:
            line = reader.line_num
            port = (row.get("port") or "").strip()
            if port not in PORTS:
                raise UsageError(f"{path}: line {line}: unknown port {port!r}")
            try:
                c = float(row["coincidences_hz"])
                a = float(row["accidentals_hz"])
                s = float(row["singles_hz"]) if row.get("singles_hz") not in (None, "") else None
            except (TypeError, ValueError):
                raise UsageError(f"{path}: line {line}: malformed number") from None
            if c < 0 or a < 0:
                raise UsageError(f"{path}: line {line}: negative rate")
            d = per_port.setdefault(port, {"c": [], "a": [], "s": []})
            d["c"].append(c)
            d["a"].append(a)
            if s is not None:
                d["s"].append(s)
    if not per_port:
        raise UsageError(f"{path}: no count rows")
    return {
        p: (max(d["c"]), float(np.mean(d["a"])), float(np.mean(d["s"])) if d["s"] else None)
        for p, d in per_port.items()
    }


def metrics_report(counts: dict, cfg: RunConfig) -> dict:
    ports = [p for p in PORTS if p in counts]
    r_c = np.array([counts[p][0] for p in ports])
    r_a = np.array([counts[p][1] for p in ports])
    ref = det_mod.expected_rates(cfg.source, cfg.detector, 0.0)
    r_s = np.array([counts[p][2] if counts[p][2] is not None else ref.singles_s[PORTS.index(p)]
                    for p in ports])
    d = cfg.detector
    return {
        "ports": ports,
        "r_c": r_c,
        "r_a": r_a,
        "r_s": r_s,
        "visibility": np.array([det_mod.visibility(c, a) for c, a in zip(r_c, r_a)]),
        "qber": det_mod.qber(r_c, r_a),
        "conditional_per_port": r_c / r_s,
        "conditional_aggregate": float(r_c.mean() / r_s.sum()),
        "brightness": det_mod.spectral_brightness(
            float(r_c.mean()), d.eta_s, d.eta_i, cfg.source.pump_power_mw,
            cfg.source.bandwidth_i_nm, d.thz_per_nm),
    }


def cmd_metrics(cfg: RunConfig, counts_path: Path | None = None, out=None) -> int:
    out = out or sys.stdout
    if counts_path is not None:
        counts = read_counts_csv(counts_path)
        print(f"counts from {counts_path}", file=out)
    else:
        angles, mc, _, rows = _scan_rows(cfg, cfg.run.seed)
        counts = {}
        for k, port in enumerate(PORTS):
            counts[port] = (max(r.coincidences[k] for r in mc),
                            float(np.mean([r.accidentals[k] for r in mc])),
                            float(np.mean([r.singles_s[k] for r in mc])))
        print(f"counts from simulated scan, {len(angles)} angles x "
              f"{cfg.scan.duration_per_point_s:g} s", file=out)
    rep = metrics_report(counts, cfg)
    for i, p in enumerate(rep["ports"]):
        print(f"port {p}: R_c {rep['r_c'][i]:.6g} s^-1, R_a {rep['r_a'][i]:.6g} s^-1, "
              f"R_s {rep['r_s'][i]:.6g} s^-1 -> V = (R_c - R_a)/(R_c + R_a) = "
              f"{rep['visibility'][i]:.4f}, R_c/R_s = {rep['conditional_per_port'][i]:.4f}", file=out)
    d = cfg.detector
    print(f"visibility (min over ports) {rep['visibility'].min():.4f}", file=out)
    print(f"QBER = mean(R_a/R_c) = {rep['qber']:.5f}", file=out)
    print(f"conditional detection probability R_c/R_s: per port mean "
          f"{rep['conditional_per_port'].mean():.4f}, against total singles "
          f"{rep['conditional_aggregate']:.4f}", file=out)
    print(f"spectral brightness = 4 R_c/(eta_s eta_i)/P/(k dlambda) with R_c {rep['r_c'].mean():.6g}, "
          f"eta_s {d.eta_s:g}, eta_i {d.eta_i:g}, P {cfg.source.pump_power_mw:g} mW, "
          f"k {d.thz_per_nm:g} THz/nm, dlambda {cfg.source.bandwidth_i_nm:g} nm "
          f"= {rep['brightness']:.4g} s^-1 THz^-1 mW^-1", file=out)
    return 0


def _outdir(cfg: RunConfig) -> Path:
    outdir = Path(cfg.output.directory)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        probe = outdir / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise UsageError(f"output directory not writable: {outdir} ({exc.strerror})") from None
    return outdir


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="biphoton-sim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in [("state", "print the emitted two-photon state"),
                        ("scan", "simulate the analyzer fringe scan"),
                        ("lock", "simulate the pump Mach-Zehnder phase lock"),
                        ("metrics", "visibility, QBER, conditional probability, brightness")]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="INI config file (defaults if omitted)")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--svg", action="store_true", help="also write SVG plots")
        if name == "metrics":
            p.add_argument("--counts", type=Path, help="count CSV instead of a simulated scan")
    return parser


def load(args) -> RunConfig:
    cfg = parse_config(args.config) if args.config is not None else RunConfig()
    if args.seed is not None:
        if args.seed < 0:
            raise UsageError("seed must be non-negative")
        cfg = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, seed=args.seed))
    if args.out is not None or args.svg:
        output = cfg.output
        if args.out is not None:
            output = dataclasses.replace(output, directory=args.out)
        if args.svg:
            output = dataclasses.replace(output, emit_svg=True)
        cfg = dataclasses.replace(cfg, output=output)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args)
        if args.command == "state":
            return cmd_state(cfg)
        if args.command == "scan":
            return cmd_scan(cfg)
        if args.command == "lock":
            return cmd_lock(cfg)
        return cmd_metrics(cfg, args.counts)
    except (ConfigFileError, UsageError) as exc:
        print(f"biphoton-sim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LockError, det_mod.MetricError, ValueError, FloatingPointError) as exc:
        print(f"biphoton-sim: simulation error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
