"""Command-line entry points for the scattering toolkit.

Subcommands:

* ``reflect``: closed-form (optionally cross-checked) full-reversal
  probabilities for same-direction exponential trains;
* ``excite``: emitter excitation traces for one- and two-photon drives;
* ``two-photon``: channel amplitude grids dumped as CSV;
* ``validate``: two-route agreement suites, exit code 1 on breach;
* ``figure3``: reversal probability over a bandwidth sweep.

Options may come from a JSON config file (keys are the option names
with underscores); explicit flags override the file.  Exit codes: 0 on
success, 1 when a validation suite fails, 2 for configuration errors.
CSV cells carry 12 significant digits so repeated runs are
byte-identical.  Thread fan-out honors the SCATTER_THREADS environment
variable.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .amplitudes import CHANNELS, two_photon_channel_grid, write_grid_csv
from .model import Direction, PulseProfile, WavepacketN
from .observables import (
    excitation_trace,
    reflection_probability_closed,
    reflection_probability_numeric,
    worker_count,
)
from .spectral import (
    appendix_comparison,
    single_photon_bridge_error,
    single_photon_reflection_freq,
)

_FMT = "{:.11e}"

_DEFAULTS: dict[str, dict] = {
    "reflect": {"n_list": "1,2,3,4,5", "gamma": 1.0, "numeric": False,
                "output": "-"},
    "excite": {"photons": 1, "gamma": 1.0, "gamma2": None, "directions": None,
               "t_max": None, "points": 201, "output": "-"},
    "two-photon": {"gamma": 1.0, "gamma2": None, "directions": "RR",
                   "channel": "all", "t": None, "tau_max": None,
                   "tau_points": 64, "output": "two_photon.csv"},
    "validate": {"suite": "two-photon-bridge", "gamma": 1.0,
                 "tolerance": None, "omega_min": -10.0, "omega_max": 10.0,
                 "omega_points": 64, "time_points": 4096, "output": "-"},
    "figure3": {"n_list": "1,2,3,4,5,6,7,8,9,10",
                "gamma_grid": "log:0.01:100:200", "numeric": False,
                "output": "-"},
}


def _parse_n_list(text: str) -> list[int]:
    try:
        values = [int(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError as exc:
        raise ValueError(f"bad photon-number list {text!r}") from exc
    if not values or any(v < 1 for v in values):
        raise ValueError(f"photon numbers must be positive integers: {text!r}")
    return values


def _parse_axis(text: str) -> np.ndarray:
    parts = str(text).split(":")
    if len(parts) != 4 or parts[0] not in ("log", "lin"):
        raise ValueError(
            f"bad axis spec {text!r}; expected log:start:stop:points or lin:...")
    start, stop, count = float(parts[1]), float(parts[2]), int(parts[3])
    if count < 1:
        raise ValueError("axis needs at least one point")
    if parts[0] == "log":
        if start <= 0 or stop <= 0:
            raise ValueError("log axes need positive endpoints")
        return np.geomspace(start, stop, count)
    return np.linspace(start, stop, count)


def _parse_directions(text: str | None, n: int) -> list[Direction]:
    if text is None:
        return [Direction.RIGHT] * n
    tokens = str(text).replace(",", "")
    if len(tokens) != n:
        raise ValueError(f"need {n} direction letters, got {text!r}")
    out = []
    for ch in tokens.upper():
        if ch == "R":
            out.append(Direction.RIGHT)
        elif ch == "L":
            out.append(Direction.LEFT)
        else:
            raise ValueError(f"directions use letters R and L, got {text!r}")
    return out


def _build_pair(gamma: float, gamma2: float | None, directions: str | None,
                n: int) -> WavepacketN:
    dirs = _parse_directions(directions, n)
    gammas = [float(gamma)] * n
    if gamma2 is not None and n == 2:
        gammas[1] = float(gamma2)
    entries = [(PulseProfile.exponential(g), d) for g, d in zip(gammas, dirs)]
    return WavepacketN.product(entries)


class _Sink:
    """Write-target wrapper: a file path, or '-'/None for stdout."""

    def __init__(self, target):
        self.target = "-" if target is None else str(target)

    def __enter__(self):
        if self.target == "-":
            self._fh = None
            return sys.stdout
        self._fh = open(self.target, "w", newline="")
        return self._fh

    def __exit__(self, *exc):
        if self._fh is not None:
            self._fh.close()
        return False


def _write_rows(sink: str, header: list[str], rows) -> None:
    with _Sink(sink) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _cmd_reflect(opt: dict) -> int:
    n_values = _parse_n_list(opt["n_list"])
    gamma = float(opt["gamma"])
    rows = []
    if opt["numeric"]:
        header = ["n", "gamma", "closed", "numeric", "abs_err"]
        for n in n_values:
            res = reflection_probability_numeric(n, gamma)
            rows.append([n, _FMT.format(gamma), _FMT.format(res.closed),
                         _FMT.format(res.numeric), _FMT.format(res.abs_err)])
    else:
        header = ["n", "gamma", "closed"]
        for n in n_values:
            rows.append([n, _FMT.format(gamma),
                         _FMT.format(reflection_probability_closed(n, gamma))])
    _write_rows(opt["output"], header, rows)
    return 0


def _cmd_excite(opt: dict) -> int:
    photons = int(opt["photons"])
    if photons not in (1, 2):
        raise ValueError("excite supports 1 or 2 photons")
    w = _build_pair(opt["gamma"], opt.get("gamma2"), opt.get("directions"),
                    photons)
    t_max = opt["t_max"]
    if t_max is None:
        t_max = w.horizon
    times = np.linspace(0.0, float(t_max), int(opt["points"]))
    trace = excitation_trace(times, w)
    rows = ([_FMT.format(t), _FMT.format(v)]
            for t, v in zip(trace.times, trace.values))
    _write_rows(opt["output"], ["t", "p_excited"], rows)
    return 0


def _cmd_two_photon(opt: dict) -> int:
    w = _build_pair(opt["gamma"], opt.get("gamma2"), opt.get("directions"), 2)
    t = float(opt["t"]) if opt["t"] is not None else w.horizon
    tau_max = float(opt["tau_max"]) if opt["tau_max"] is not None else w.horizon
    axis = np.linspace(0.0, tau_max, int(opt["tau_points"]))
    wanted = CHANNELS if opt["channel"] == "all" else (opt["channel"],)
    if any(ch not in CHANNELS for ch in wanted):
        raise ValueError(f"channel must be one of {CHANNELS} or 'all'")
    out = str(opt["output"])
    if out == "-":
        raise ValueError("two-photon grids require a file output path")
    base, ext = os.path.splitext(out)
    ext = ext or ".csv"
    for ch in wanted:
        grid = two_photon_channel_grid(w, ch, axis, axis, t=t)
        path = f"{base}_{ch}{ext}" if len(wanted) > 1 else out
        write_grid_csv(grid, path, header_path=os.path.splitext(path)[0] + ".json")
    return 0


def _cmd_validate(opt: dict) -> int:
    suite = str(opt["suite"])
    gamma = float(opt["gamma"])
    if suite == "two-photon-bridge":
        tol = float(opt["tolerance"]) if opt["tolerance"] is not None else 1e-4
        report = appendix_comparison(
            gamma, omega_min=float(opt["omega_min"]),
            omega_max=float(opt["omega_max"]),
            n_omega=int(opt["omega_points"]),
            n_time=int(opt["time_points"]), tolerance=tol)
        with _Sink(opt["output"]) as fh:
            fh.write(report.to_json())
        return 0 if report.passed else 1
    if suite == "single-photon":
        tol = float(opt["tolerance"]) if opt["tolerance"] is not None else 1e-6
        closed = reflection_probability_closed(1, gamma)
        freq = single_photon_reflection_freq(gamma)
        bridge_err = single_photon_bridge_error(gamma)
        payload = {
            "suite": "single-photon", "gamma": gamma, "tolerance": tol,
            "reversal_closed": closed, "reversal_freq": freq,
            "abs_err": abs(closed - freq), "bridge_max_err": bridge_err,
            "passed": bool(abs(closed - freq) <= tol and bridge_err <= 100 * tol),
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        with _Sink(opt["output"]) as fh:
            fh.write(text)
        return 0 if payload["passed"] else 1
    raise ValueError(f"unknown validation suite {suite!r}")


def _cmd_figure3(opt: dict) -> int:
    n_values = _parse_n_list(opt["n_list"])
    gammas = _parse_axis(opt["gamma_grid"])
    numeric = bool(opt["numeric"])
    if numeric and any(n > 5 for n in n_values):
        raise ValueError("the numeric cross-check supports n <= 5")
    tasks = [(n, float(g)) for n in n_values for g in gammas]
    if numeric:
        def work(task):
            n, g = task
            res = reflection_probability_numeric(n, g)
            return [n, _FMT.format(g), _FMT.format(res.closed),
                    _FMT.format(res.numeric), _FMT.format(res.abs_err)]
        header = ["n", "gamma", "closed", "numeric", "abs_err"]
        workers = worker_count(len(tasks))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(work, tasks))
        else:
            rows = [work(t) for t in tasks]
    else:
        header = ["n", "gamma", "closed"]
        rows = [[n, _FMT.format(g),
                 _FMT.format(reflection_probability_closed(n, g))]
                for n, g in tasks]
    _write_rows(opt["output"], header, rows)
    return 0


_RUNNERS = {
    "reflect": _cmd_reflect,
    "excite": _cmd_excite,
    "two-photon": _cmd_two_photon,
    "validate": _cmd_validate,
    "figure3": _cmd_figure3,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waveguide-scatter",
        description="Few-photon scattering on a waveguide-coupled emitter.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file with option defaults")
        return p

    p = add("reflect", "full-reversal probabilities")
    p.add_argument("--n-list", dest="n_list")
    p.add_argument("--gamma", type=float)
    p.add_argument("--numeric", action="store_const", const=True, default=None)
    p.add_argument("--output", "-o")

    p = add("excite", "emitter excitation trace")
    p.add_argument("--photons", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--gamma2", type=float)
    p.add_argument("--directions")
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--output", "-o")

    p = add("two-photon", "two-photon channel grids")
    p.add_argument("--gamma", type=float)
    p.add_argument("--gamma2", type=float)
    p.add_argument("--directions")
    p.add_argument("--channel")
    p.add_argument("--t", type=float)
    p.add_argument("--tau-max", dest="tau_max", type=float)
    p.add_argument("--tau-points", dest="tau_points", type=int)
    p.add_argument("--output", "-o")

    p = add("validate", "two-route agreement suites")
    p.add_argument("--suite")
    p.add_argument("--gamma", type=float)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--omega-min", dest="omega_min", type=float)
    p.add_argument("--omega-max", dest="omega_max", type=float)
    p.add_argument("--omega-points", dest="omega_points", type=int)
    p.add_argument("--time-points", dest="time_points", type=int)
    p.add_argument("--output", "-o")

    p = add("figure3", "reversal probability vs bandwidth sweep")
    p.add_argument("--n-list", dest="n_list")
    p.add_argument("--gamma-grid", dest="gamma_grid")
    p.add_argument("--numeric", action="store_const", const=True, default=None)
    p.add_argument("--output", "-o")

    return parser


def _effective_options(command: str, args: argparse.Namespace) -> dict:
    opts = dict(_DEFAULTS[command])
    if args.config is not None:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise _ConfigError(f"cannot read config {args.config}: {exc}")
        if not isinstance(loaded, dict):
            raise _ConfigError("config must be a JSON object")
        unknown = set(loaded) - set(opts)
        if unknown:
            raise _ConfigError(
                f"unknown config keys for {command}: {sorted(unknown)}")
        opts.update(loaded)
    for key in opts:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            opts[key] = flag_val
    return opts


class _ConfigError(Exception):
    pass


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _effective_options(args.command, args)
    except _ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return _RUNNERS[args.command](opts)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
