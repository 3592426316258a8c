"""Command-line front end.

    memaco aco      --image square.pgm --L 4 --iters 10 --seed 7 --out run1
    memaco hw       --iters 10 --out hw1
    memaco twopath  --preset fig9
    memaco device   --amplitude 0.2 --rate 100
    memaco noise    --levels 0,0.1,0.2,0.3

Every flag can also be given in a ``--config`` file of ``key = value`` lines
(keys are the long flag names with dashes replaced by underscores); flags
override the file. Each run writes ``manifest.txt`` holding the resolved
configuration, which can be fed back through ``--config``.

Exit codes: 0 ok, 2 configuration, 3 I/O, 4 calibration, 5 non-convergence.
"""

from __future__ import annotations

import argparse
import io
import os
import sys
import tempfile

import numpy as np

from . import aco, array_sim, device, dynamics, energy, imaging

EXIT_CONFIG, EXIT_IO, EXIT_CALIBRATION, EXIT_CONVERGENCE = 2, 3, 4, 5

# dests that describe where/how to run rather than what to compute
_NOT_IN_MANIFEST = {"out", "config", "command", "func"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- parsing helpers

def _int_list(text: str) -> list[int]:
    text = text.strip()
    return [int(t) for t in text.split(",") if t.strip()] if text else []


def _float_list(text: str) -> list[float]:
    text = text.strip()
    return [float(t) for t in text.split(",") if t.strip()] if text else []


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _apply_config(sub: argparse.ArgumentParser, values: dict[str, str], command: str) -> None:
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        if key == "command":
            if raw != command:
                raise ConfigError(f"config is for command {raw!r}, not {command!r}")
            continue
        if key in _NOT_IN_MANIFEST or key not in actions:
            raise ConfigError(f"unknown config key {key!r}")
        act = actions[key]
        try:
            if isinstance(act, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                defaults[key] = _bool(raw)
            elif raw == "None":
                defaults[key] = None
            else:
                val = act.type(raw) if act.type else raw
                if act.choices is not None and val not in act.choices:
                    raise ValueError(f"{val!r} not in {list(act.choices)}")
                defaults[key] = val
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from None
    sub.set_defaults(**defaults)


def manifest_text(args: argparse.Namespace) -> str:
    lines = [f"command = {args.command}"]
    for k in sorted(vars(args)):
        if k in _NOT_IN_MANIFEST:
            continue
        v = getattr(args, k)
        lines.append(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- output helpers

class Outputs:
    """Collects files in memory and commits them with write-then-rename."""

    def __init__(self, directory: str):
        self.directory = directory
        self.files: dict[str, bytes] = {}

    def add(self, name: str, data) -> None:
        self.files[name] = data.encode("utf-8") if isinstance(data, str) else bytes(data)

    def add_csv(self, name: str, writer) -> None:
        buf = io.StringIO()
        writer(buf)
        self.add(name, buf.getvalue())

    def commit(self) -> None:
        os.makedirs(self.directory, exist_ok=True)
        for name, data in self.files.items():
            dest = os.path.join(self.directory, name)
            fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                os.replace(tmp, dest)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _pattern(name: str) -> str:
    return name.replace("-", "_")


def _load_scene(args, default_scene):
    """Input image and, for synthetic scenes, the ground-truth mask."""
    if args.image:
        img = imaging.read_pgm(args.image)
        truth = None
        if getattr(args, "reference", None):
            truth = imaging.read_pgm(args.reference).pixels > 0
            if truth.shape != img.pixels.shape:
                raise ConfigError("reference mask size differs from the image")
        return img, truth
    if args.size < 8:
        raise ConfigError(f"size must be >= 8, got {args.size}")
    return imaging.synth_shapes(args.size, args.size, default_scene(args.size))


def _aco_params(args, snapshots=None) -> aco.AcoParams:
    p = aco.AcoParams(alpha=args.alpha, beta=args.beta, rho=args.rho, q=args.q, nu=args.nu,
                      tau0=args.tau0, L=args.L, iterations=args.iters,
                      pattern=_pattern(args.pattern), mode=args.mode, eta_floor=args.eta_floor,
                      seed=args.seed, evaporation=args.evaporation, snapshots=snapshots)
    p.validate()
    return p


def _threshold(args):
    if args.threshold == "otsu":
        return "otsu"
    try:
        return float(args.threshold)
    except ValueError:
        raise ConfigError(f"threshold must be 'otsu' or a number, got {args.threshold!r}") from None


def _blur_check(args) -> None:
    if _pattern(args.pattern) == "hv_only" and args.L > 4:
        _warn(f"L={args.L} > 4 with straight traversals has a blurring effect on detected edges")


def _hw_config(args) -> array_sim.HwConfig:
    dev = device.ThresholdParams()
    return array_sim.HwConfig(
        L=args.L, iterations=args.iters, encoding=args.encoding, topology=args.topology,
        init=array_sim.InitParams(v_dd=args.vdd, r_ds=args.r_ds, dt_max=args.dt_max),
        pulse=array_sim.PulseParams(i_update=args.i_update, t_pulse=args.t_pulse,
                                    dt_max=args.dt_max, v_dd=args.vdd),
        read=array_sim.ReadParams(v_dev=args.v_read),
        reset=array_sim.ResetParams(voltage=-args.vdd, r_ds=args.r_ds, dt_max=args.dt_max),
        device=dev, snapshots=tuple(_int_list(getattr(args, "snapshots", ""))))


def _hw_mask(r_map: np.ndarray, invert: bool) -> np.ndarray:
    t = aco.otsu_threshold(r_map)
    if t is None:
        mask = np.zeros(r_map.shape, dtype=bool)
    else:
        # inverse encoding leaves contrast pixels at high resistance
        mask = r_map >= t
    return ~mask if invert else mask


# ---------------------------------------------------------------- commands

def cmd_aco(args) -> int:
    if args.L < 1:
        raise ConfigError(f"L must be >= 1, got {args.L}")
    _blur_check(args)
    img, truth = _load_scene(args, imaging.two_region_scene)
    shots = _int_list(args.snapshots) or [args.iters]
    snaps = aco.run_aco(img, _aco_params(args, shots), border=args.border)
    out = Outputs(args.out)
    rows = ["iteration,tau_min,tau_mean,tau_max,edge_pixels,f1"]
    for s in snaps:
        out.add(f"tau_iter{s.iteration:04d}.pgm", imaging.save_pgm(s.tau))
        m = aco.threshold_edges(s.tau, _threshold(args))
        f1 = "" if truth is None else repr(imaging.f1_score(m, truth))
        rows.append(f"{s.iteration},{s.tau.min()!r},{s.tau.mean()!r},{s.tau.max()!r},"
                    f"{int(m.sum())},{f1}")
    mask = aco.threshold_edges(snaps[-1].tau, _threshold(args))
    out.add("edges.pgm", imaging.save_pgm(mask))
    out.add("trace.csv", "\n".join(rows) + "\n")
    out.add("manifest.txt", manifest_text(args))
    out.commit()
    if truth is not None:
        print(f"F1 = {imaging.f1_score(mask, truth):.4f}")
    return 0


def cmd_hw(args) -> int:
    img, truth = _load_scene(args, imaging.nested_scene)
    cfg = _hw_config(args)
    eta = imaging.compute_heuristics(img, args.border)
    res = array_sim.simulate(eta, cfg)
    rep = energy.energy_report(res.ledger, eta.size, cfg.init.n_pulses, cfg.iterations, cfg.L)
    out = Outputs(args.out)
    for k, r in sorted(res.snapshots.items()):
        out.add(f"resistance_iter{k:04d}.pgm", imaging.save_pgm(r))
    out.add("resistance_final.pgm", imaging.save_pgm(res.resistance))
    mask = _hw_mask(res.resistance, args.invert)
    out.add("edges.pgm", imaging.save_pgm(mask))
    out.add("resistance.csv", "\n".join(",".join(repr(float(v)) for v in row)
                                        for row in res.resistance) + "\n")
    lines = [f"traversal time: {res.traversal_time!r} s ({res.traversal_time * 1e6:.6g} us)",
             f"calibration: t_low_r={res.calibration.t_low_r!r} s, "
             f"t_high_r={res.calibration.t_high_r!r} s, time scale={res.calibration.time_scale!r}"]
    if truth is not None:
        lines.append(f"edge F1: {imaging.f1_score(mask, truth)!r}")
    out.add("report.txt", "\n".join(lines) + "\n" + rep.to_text())
    out.add_csv("energy.csv", rep.to_csv)
    out.add("manifest.txt", manifest_text(args))
    out.commit()
    print(lines[0])
    print(f"energy per pixel: {rep.per_pixel * 1e9:.4f} nJ "
          f"(band {rep.band[0] * 1e9:.3f} .. {rep.band[1] * 1e9:.3f} nJ, inside={rep.in_band})")
    return 0


def _twopath_configs(args):
    preset = args.preset
    if preset is None:
        preset = "custom" if (args.le1 is not None or args.le2 is not None) else "fig9"
    args.preset = preset
    if preset == "fig9":
        return dynamics.illustration_preset(k=args.k, reciprocal=args.reciprocal)
    if preset == "example":
        return dynamics.two_path_from_example(on_off_ratio=args.on_off_ratio, k=args.k, xi=args.xi)
    if args.le1 is None or args.le2 is None:
        raise ConfigError("custom two-path runs need both --le1 and --le2")
    le = (args.le1, args.le2)
    a = dynamics.AcoFluidConfig(le=le, gamma=args.gamma, rho=args.rho, tau0=(args.tau0, args.tau0))
    g_off = (1.0 / le[0], 1.0 / le[1])
    m = dynamics.MemristiveFluidConfig(
        g_off=g_off, g_on=(args.on_off_ratio * g_off[0], args.on_off_ratio * g_off[1]),
        i0=args.i0, k=args.k, xi=args.xi)
    return a, m


def cmd_twopath(args) -> int:
    a_cfg, m_cfg = _twopath_configs(args)
    ta = dynamics.aco_fluid(a_cfg, args.T, args.dt)
    tm = dynamics.memristive_fluid(m_cfg, args.T, args.dt)
    out = Outputs(args.out)
    out.add_csv("aco_trajectory.csv", ta.to_csv)
    out.add_csv("memristive_trajectory.csv", tm.to_csv)
    out.add("manifest.txt", manifest_text(args))
    rep = dynamics.compare_winner(ta, tm)

    def name(w):
        return "tie" if w is None else f"path {w + 1}"

    text = (f"aco winner: {name(rep.winners[0])}\n"
            f"memristive winner: {name(rep.winners[1])}\n"
            f"agreement: {rep.agree}\n"
            f"aco final: {float(ta.final[0])!r} {float(ta.final[1])!r}\n"
            f"memristive final: {float(tm.final[0])!r} {float(tm.final[1])!r}\n")
    out.add("report.txt", text)
    out.commit()
    print(text, end="")
    return 0


def _read_waveform(path: str):
    pts = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line or line[0].isalpha():
                continue
            t, v = line.replace(";", ",").split(",")[:2]
            pts.append((float(t), float(v)))
    return pts


def cmd_device(args) -> int:
    params = device.ThresholdParams(literal_negative_sign=args.literal_sign)
    if args.waveform:
        wave = _read_waveform(args.waveform)
    else:
        wave = device.triangular_waveform(args.amplitude, args.rate, args.points)
    trace = device.iv_sweep(params, wave, x0=args.x0, dt_max=args.dt_max)
    out = Outputs(args.out)
    out.add_csv("iv.csv", trace.to_csv)
    # the positive lobe ends where the voltage first returns to zero or below after its peak
    k_peak = int(np.argmax(trace.v))
    after = np.nonzero(trace.v[k_peak:] <= 0)[0]
    k_lobe = k_peak + int(after[0]) if after.size else len(trace.v) - 1
    text = (f"x after positive lobe: {float(trace.x[k_lobe])!r}\n"
            f"final x: {float(trace.x[-1])!r}\n"
            f"max |I| at V = 0: {float(np.abs(trace.i[trace.v == 0]).max(initial=0.0))!r}\n")
    out.add("report.txt", text)
    out.add("manifest.txt", manifest_text(args))
    out.commit()
    print(text, end="")
    return 0


def cmd_noise(args) -> int:
    levels = _float_list(args.levels)
    if not levels:
        raise ConfigError("levels must list at least one noise level")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ConfigError("levels must be strictly ascending")
    default_scene = imaging.two_region_scene if args.pipeline == "aco" else imaging.nested_scene
    img, truth = _load_scene(args, default_scene)
    if truth is None:
        raise ConfigError("noise sweeps need a synthetic scene or --reference mask")
    if args.pipeline == "aco":
        _blur_check(args)
        params = _aco_params(args)
    else:
        cfg = _hw_config(args)
    rows = ["level,f1"]
    for i, level in enumerate(levels):
        if args.kind == "uniform":
            noisy = imaging.add_uniform_noise(img, level, seed=args.seed + 1000 + i)
        else:
            noisy = imaging.add_spike_noise(img, level, seed=args.seed + 1000 + i)
        if args.pipeline == "aco":
            tau = aco.run_aco(noisy, params, border=args.border)[-1].tau
            mask = aco.threshold_edges(tau, _threshold(args))
        else:
            res = array_sim.simulate(imaging.compute_heuristics(noisy, args.border), cfg)
            mask = _hw_mask(res.resistance, args.invert)
        f1 = imaging.f1_score(mask, truth)
        rows.append(f"{level!r},{f1!r}")
        print(f"level {level:g}: F1 = {f1:.4f}")
    out = Outputs(args.out)
    out.add("noise.csv", "\n".join(rows) + "\n")
    out.add("manifest.txt", manifest_text(args))
    out.commit()
    return 0


# ---------------------------------------------------------------- parser

def _common(p: argparse.ArgumentParser, image: bool = True) -> None:
    p.add_argument("--config", default=None, help="key=value file; flags override it")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    if image:
        p.add_argument("--image", default=None, help="PGM input (default: synthetic scene)")
        p.add_argument("--size", type=int, default=None, help="side of the synthetic scene")
        p.add_argument("--border", choices=("clamp", "shrink"), default="clamp")


def _aco_flags(p: argparse.ArgumentParser, L: int) -> None:
    p.add_argument("--L", type=int, default=L, help="traversal length")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=0.001)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--tau0", type=float, default=0.01)
    p.add_argument("--eta-floor", type=float, default=0.01)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--pattern", choices=("full", "hv-only", "hv_only"), default="hv-only")
    p.add_argument("--mode", choices=("stochastic", "fluid"), default="stochastic")
    p.add_argument("--evaporation", choices=("local", "global"), default="local")
    p.add_argument("--threshold", default="otsu", help="'otsu' or a fixed pheromone level")


def _hw_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--encoding", choices=("inverse", "direct"), default="inverse")
    p.add_argument("--topology", choices=("symmetric", "chained"), default="symmetric")
    p.add_argument("--i-update", type=float, default=6e-6)
    p.add_argument("--t-pulse", type=float, default=1e-6)
    p.add_argument("--vdd", type=float, default=1.05)
    p.add_argument("--r-ds", type=float, default=1e3)
    p.add_argument("--v-read", type=float, default=0.05)
    p.add_argument("--dt-max", type=float, default=10e-9)
    p.add_argument("--invert", action="store_true", help="flip the edge-mask polarity")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memaco", description=__doc__.split("\n\n")[0])
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("aco", help="software ant-colony edge detection")
    _common(p)
    _aco_flags(p, L=4)
    p.add_argument("--snapshots", default="", help="comma-separated iterations to save")
    p.set_defaults(func=cmd_aco)

    p = subs.add_parser("hw", help="memristive pixel-array simulation")
    _common(p)
    p.add_argument("--L", type=int, default=3)
    p.add_argument("--iters", type=int, default=10)
    _hw_flags(p)
    p.add_argument("--snapshots", default="", help="comma-separated iterations to save")
    p.set_defaults(func=cmd_hw)

    p = subs.add_parser("twopath", help="two-path pheromone vs conductance dynamics")
    _common(p, image=False)
    p.add_argument("--preset", choices=("fig9", "example", "custom"), default=None)
    p.add_argument("--le1", type=float, default=None)
    p.add_argument("--le2", type=float, default=None)
    p.add_argument("--gamma", type=float, default=20.0)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--tau0", type=float, default=0.01)
    p.add_argument("--k", type=float, default=0.01, help="memristive drift constant")
    p.add_argument("--xi", type=float, default=50.0)
    p.add_argument("--i0", type=float, default=1.0)
    p.add_argument("--on-off-ratio", type=float, default=1000.0)
    p.add_argument("--reciprocal", action="store_true",
                   help="illustration preset with off conductances equal to 1/Le")
    p.add_argument("--T", type=float, default=2.0)
    p.add_argument("--dt", type=float, default=1e-4)
    p.set_defaults(func=cmd_twopath)

    p = subs.add_parser("device", help="threshold-memristor I-V sweep")
    _common(p, image=False)
    p.add_argument("--amplitude", type=float, default=0.2)
    p.add_argument("--rate", type=float, default=100.0, help="slew rate in V/s")
    p.add_argument("--points", type=int, default=200, help="samples per quarter period")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--dt-max", type=float, default=10e-9)
    p.add_argument("--waveform", default=None, help="CSV of t,V samples instead of a triangle")
    p.add_argument("--literal-sign", action="store_true",
                   help="negative branch with the printed sign (no reset)")
    p.set_defaults(func=cmd_device)

    p = subs.add_parser("noise", help="F1 against noise level")
    _common(p)
    p.add_argument("--pipeline", choices=("aco", "hw"), default="aco")
    p.add_argument("--kind", choices=("uniform", "spike"), default="uniform")
    p.add_argument("--levels", default="0,0.1,0.2,0.3")
    p.add_argument("--reference", default=None, help="reference edge mask PGM for --image")
    _aco_flags(p, L=4)
    _hw_flags(p)
    p.set_defaults(func=cmd_noise)
    return parser


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for act in parser._actions:
        if isinstance(act, argparse._SubParsersAction):
            return act.choices[command]
    raise KeyError(command)


def _finalize(args) -> None:
    if getattr(args, "size", 0) is None:
        hw_like = args.command == "hw" or getattr(args, "pipeline", "") == "hw"
        args.size = 64 if hw_like else 32


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            try:
                values = read_config(args.config)
            except OSError as exc:
                print(f"error: cannot read config: {exc}", file=sys.stderr)
                return EXIT_IO
            _apply_config(_subparser(parser, args.command), values, args.command)
            args = parser.parse_args(argv)
        _finalize(args)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except array_sim.CalibrationError as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except dynamics.ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except imaging.PGMError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
