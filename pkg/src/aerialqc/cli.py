"""Command-line front end.

Each subcommand has a parameter table; every parameter can come from a
JSON config file (``--config``) or a flag, with precedence
flags > file > defaults. Output goes to ``--output``, else to
``$AERIALQC_OUTPUT_DIR/<subcommand>.<format>`` when that variable is set,
else to stdout. A one-line summary is printed on stderr.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings

import numpy as np

from . import attenuation, beam_optics, elliptic_channel, link_budget, repeater_chain, turbulence
from .errors import AerialQCError, InputError
from .geometry import ChannelGeometry, DEFAULT_A_R, DEFAULT_W_D, DEFAULT_WAVELENGTH

OUTPUT_DIR_ENV = "AERIALQC_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class ConfigParseError(InputError):
    pass


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _bool(v):
    if isinstance(v, bool):
        return v
    raise ConfigParseError(f"expected a boolean, got {v!r}")


# name: (type, default, help); type "bool" becomes --flag/--no-flag, "floats" a comma list
_CHANNEL_PARAMS = {
    "direction": (str, "downlink", "uplink or downlink"),
    "daytime": ("bool", True, "day-time (--daytime) or night-time (--no-daytime) condition"),
    "n0": (float, None, "scattering particle density [m^-3]; default from day/night"),
    "alpha_p": (float, 2e-6, "pointing error [rad]"),
    "beta": (float, 0.7, "extinction parameter"),
    "pointing_variance": (str, "printed", "printed (alpha_p z) or squared ((alpha_p z)^2)"),
    "w_sq_distribution": (str, "lognormal", "lognormal or truncnormal"),
    "wavelength": (float, DEFAULT_WAVELENGTH, "wavelength [m]"),
    "w_d": (float, DEFAULT_W_D, "beam spot parameter [m]"),
    "a_r": (float, DEFAULT_A_R, "aperture radius [m]"),
    "chi_ext": (float, None, "fixed extinction factor; default exp(-beta/cos(zenith))"),
    "samples": (int, 1000, "Monte Carlo samples"),
    "workers": (int, 1, "worker threads (output is identical for any value)"),
    "seed": (int, 0, "random seed"),
}

PARAMS = {
    "profile": {
        "model": (str, "slcd-day", "slcd-day, slcd-night-variant, hvb or fried"),
        "wind_speed": (float, None, "hvb rms wind speed [m/s]"),
        "k0": (float, None, "fried turbulence-strength parameter"),
        "from": (float, 1.0, "lowest altitude [m]"),
        "to": (float, 20000.0, "highest altitude [m]"),
        "points": (int, 100, "number of altitudes"),
        "spacing": (str, "log", "log or linear altitude spacing"),
    },
    "attenuation": {
        "model": (str, "kim", "kim or kruse"),
        "kind": (str, "fog", "fog or rain"),
        "wavelengths": ("floats", [850.0, 950.0, 1550.0], "wavelengths [nm], comma separated"),
        "vis_from": (float, 0.05, "lowest visibility [km]"),
        "vis_to": (float, 50.0, "highest visibility [km]"),
        "points": (int, 100, "number of visibilities"),
        "distance": (float, 1.0, "path length [km]"),
    },
    "beam": {
        "sweep": (str, "distance", "distance, diameter, altitude or wander"),
        "w0": (float, 0.05, "initial spot size [m]"),
        "wavelength": (float, 800e-9, "wavelength [m]"),
        "radius_of_curvature": (float, None, "wavefront radius R0 [m]; default collimated"),
        "a_r": (float, DEFAULT_A_R, "receiver aperture radius [m]"),
        "d_t": (float, 0.05, "transmitter optics diameter [m]"),
        "d_r": (float, 0.05, "receiver optics diameter [m]"),
        "from": (float, 10.0, "sweep start (m, or m of diameter)"),
        "to": (float, 5000.0, "sweep stop"),
        "points": (int, 50, "sweep points"),
        "distance": (float, 500.0, "fixed link distance for the diameter sweep [m]"),
        "cn2": (float, 1.28e-14, "C_n^2 for the wander sweep"),
        "pointing_jitter": (float, 1e-6, "pointing jitter for the wander sweep [rad]"),
        "eta_eff": (float, 1.0, "receiver efficiency"),
        "alpha": (float, 0.1, "constant extinction for the altitude sweep [1/km]"),
    },
    "pdt": dict(_CHANNEL_PARAMS, **{
        "altitude": (float, 220.0, "drone altitude [m]"),
        "zenith_deg": (float, 0.0, "zenith angle [deg]"),
        "bins": (int, 100, "histogram bins on [0, 1]"),
        "samples": (int, 1_000_000, "Monte Carlo samples"),
    }),
    "surface": dict(_CHANNEL_PARAMS, **{
        "altitudes": ("floats", [18.5, 50.0, 100.0, 150.0, 200.0, 240.0], "altitudes [m]"),
        "zeniths_deg": ("floats", [float(v) for v in np.linspace(0.0, 85.0, 10)],
                        "zenith angles [deg]"),
    }),
    "budget": {
        "p_t": (float, 10.0, "transmitted power [dBm]"),
        "a_tx": (float, 1.0, "transmitter coupling loss [dB]"),
        "a_rx": (float, 1.0, "receiver coupling loss [dB]"),
        "theta_div": (float, 1e-3, "half-angle divergence [rad]"),
        "alpha_fog": (float, 1.0, "fog attenuation [dB/km]"),
        "s_r": (float, -40.0, "receiver sensitivity [dBm]"),
        "ranges": ("floats", None, "ranges [km]; default 20 points on 0.1..5 km"),
        "diameters": ("floats", [0.02, 0.05, 0.1, 0.2], "receiver diameters [m]"),
    },
    "netsim": {
        "n_repeaters": (int, 0, "number of repeater drones (max n with --sweep)"),
        "hop_length": (float, 5.0, "hop length [km]"),
        "signal_speed": (float, repeater_chain.SPEED_OF_LIGHT, "classical signal speed [m/s]"),
        "noise": (str, "ideal", "ideal, depolarizing or transmittance"),
        "p": (float, 0.0, "depolarizing probability per hop"),
        "pair_fidelity": (float, None, "set p so each Bell pair has this fidelity"),
        "eta": (float, None, "mean transmittance for transmittance noise"),
        "bsm_success": (float, 1.0, "Bell-measurement success probability"),
        "memory_time": (float, None, "memory dephasing time constant [ns]"),
        "distribution": (str, "preshared", "preshared or realtime"),
        "input_state": (str, "+", "0, 1, +, -, +i or -i"),
        "repetitions": (int, 1, "runs per configuration"),
        "sweep": ("bool", False, "sweep n = 0..n_repeaters"),
        "event_log": ("bool", False, "include the event log of the first run (JSON only)"),
        "seed": (int, 0, "random seed"),
    },
    "visibility-report": {
        "input": (str, None, "CSV file with header label,visibility_km"),
        "model": (str, "kim", "kim or kruse"),
        "wavelength_nm": (float, 850.0, "wavelength [nm]"),
        "distance": (float, 1.0, "path length [km]"),
    },
}

META_KEYS = {"subcommand", "output", "format"}


def _flag(name):
    return "--" + name.replace("_", "-")


def build_parser():
    parser = argparse.ArgumentParser(prog="aerialqc", description="Aerial free-space quantum channel simulator.")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    for cmd, table in PARAMS.items():
        p = sub.add_parser(cmd, help=f"{cmd} subcommand")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--output", "-o", help="output file")
        p.add_argument("--format", choices=("csv", "json"), default=None, help="output format (default csv)")
        for name, (typ, _default, text) in table.items():
            dest = name if name != "from" else "from_"
            if typ == "bool":
                p.add_argument(_flag(name), dest=dest, action=argparse.BooleanOptionalAction, default=None, help=text)
            elif typ == "floats":
                p.add_argument(_flag(name), dest=dest, type=_floats, default=None, help=text)
            else:
                p.add_argument(_flag(name), dest=dest, type=typ, default=None, help=text)
    return parser


def resolve(cmd, args):
    """Merge defaults, config file and flags into one parameter dict."""
    table = PARAMS[cmd]
    params = {name: spec[1] for name, spec in table.items()}
    meta = {"output": None, "format": "csv"}
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigParseError(f"config {args.config} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigParseError("config must be a JSON object")
        unknown = set(doc) - set(table) - META_KEYS
        if unknown:
            raise ConfigParseError(f"unknown config keys for {cmd}: {sorted(unknown)}")
        if doc.get("subcommand", cmd) != cmd:
            raise ConfigParseError(f"config is for subcommand {doc['subcommand']!r}, not {cmd!r}")
        for k, v in doc.items():
            if k in META_KEYS:
                if k != "subcommand":
                    meta[k] = v
                continue
            typ = table[k][0]
            try:
                if v is None:
                    params[k] = None
                elif typ == "bool":
                    params[k] = _bool(v)
                elif typ == "floats":
                    params[k] = _floats(v)
                elif typ is int:
                    if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
                        raise ValueError
                    params[k] = int(v)
                else:
                    params[k] = typ(v)
            except (TypeError, ValueError):
                raise ConfigParseError(f"bad value for {k!r}: {v!r}") from None
    for name in table:
        v = getattr(args, name if name != "from" else "from_")
        if v is not None:
            params[name] = v
    if args.output is not None:
        meta["output"] = args.output
    if args.format is not None:
        meta["format"] = args.format
    if meta["format"] not in ("csv", "json"):
        raise ConfigParseError("format must be csv or json")
    return params, meta


def fmt(x):
    """Full-precision, locale-independent float text."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


class Table:
    def __init__(self, columns, rows, extra=None, formatters=None):
        self.columns = columns
        self.rows = rows
        self.extra = extra or {}
        self.formatters = formatters or {}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([self.formatters.get(c, fmt)(v) for c, v in zip(self.columns, row)])
        return buf.getvalue()

    def to_json(self):
        def clean(v):
            if isinstance(v, (np.floating, float)):
                v = float(v)
                return v if math.isfinite(v) else None
            if isinstance(v, (np.integer,)):
                return int(v)
            if isinstance(v, (np.bool_,)):
                return bool(v)
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v

        doc = dict(clean(self.extra))
        doc["columns"] = self.columns
        doc["rows"] = [dict(zip(self.columns, clean(list(r)))) for r in self.rows]
        return json.dumps(doc, indent=2) + "\n"


def _grid(lo, hi, n, spacing="linear"):
    if n < 1:
        raise InputError("points must be positive")
    if n == 1:
        return np.array([lo])
    if spacing == "log":
        if lo <= 0:
            raise InputError("log spacing needs a positive start")
        return np.geomspace(lo, hi, n)
    if spacing != "linear":
        raise InputError("spacing must be log or linear")
    return np.linspace(lo, hi, n)


def cmd_profile(p):
    prof = turbulence.TurbulenceProfile.from_config(
        {k: p[k] for k in ("model", "wind_speed", "k0") if p[k] is not None}
    )
    hs = _grid(p["from"], p["to"], p["points"], p["spacing"])
    vals = turbulence.cn2(prof, hs)
    return Table(["altitude_m", "cn2"], list(zip(hs, vals)), {"model": prof.model}), f"{len(hs)} altitudes"


def cmd_attenuation(p):
    rows = []
    for lam in p["wavelengths"]:
        for v in _grid(p["vis_from"], p["vis_to"], p["points"], "log"):
            if p["kind"] == "rain":
                pp, beta = math.nan, attenuation.beta_rain(v)
            elif p["kind"] == "fog":
                pp = attenuation.size_distribution_p(p["model"], v)
                beta = attenuation.beta_fog(v, lam, pp)
            else:
                raise InputError("kind must be fog or rain")
            rows.append((v, lam, pp, beta, attenuation.path_attenuation_db(beta, p["distance"])))
    cols = ["visibility_km", "wavelength_nm", "p", "beta_per_km", "attenuation_db"]
    return Table(cols, rows, {"model": p["model"], "kind": p["kind"]}), f"{len(rows)} rows"


def cmd_beam(p):
    beam = beam_optics.GaussianBeam(p["w0"], p["wavelength"], p["radius_of_curvature"])
    xs = _grid(p["from"], p["to"], p["points"])
    area = lambda d: math.pi * (d / 2.0) ** 2  # noqa: E731
    rows = []
    if p["sweep"] == "distance":
        cols = ["z_m", "spot_size_m", "eta_d", "plob_bound", "divergence_loss_db"]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", beam_optics.RegimeWarning)
            for z in xs:
                w = beam_optics.spot_size(beam, z)
                rows.append((z, w, beam_optics.diffraction_transmissivity(p["a_r"], w),
                             beam_optics.plob_upper_bound(p["a_r"], w),
                             beam_optics.divergence_loss_db(area(p["d_t"]), area(p["d_r"]), p["wavelength"], z)))
    elif p["sweep"] == "diameter":
        cols = ["diameter_m", "divergence_loss_db"]
        for d in xs:
            rows.append((d, beam_optics.divergence_loss_db(area(d), area(d), p["wavelength"], p["distance"])))
    elif p["sweep"] == "altitude":
        cols = ["altitude_m", "spot_size_m", "eta_d", "eta_atm", "eta_total"]
        prof = attenuation.ExtinctionProfile.constant(p["alpha"])
        for h in xs:
            w = beam_optics.spot_size(beam, h)
            eta_d = beam_optics.diffraction_transmissivity(p["a_r"], w)
            eta_atm = attenuation.atm_transmissivity(prof, ChannelGeometry(float(h)))
            rows.append((h, w, eta_d, eta_atm, beam_optics.overall_transmissivity(eta_d, p["eta_eff"], eta_atm)))
    elif p["sweep"] == "wander":
        cols = ["z_m", "var_pointing_m2", "var_turbulence_m2", "var_total_m2", "long_term_waist_sq_m2"]
        for z in xs:
            b = beam_optics.literature_wander_budget(p["cn2"], beam, z, p["pointing_jitter"])
            rows.append((z, b.var_pointing, b.var_turbulence, b.var_total, b.long_term_waist_sq))
    else:
        raise InputError("sweep must be distance, diameter, altitude or wander")
    return Table(cols, rows, {"sweep": p["sweep"]}), f"{len(rows)} {p['sweep']} points"


def _condition(p):
    return elliptic_channel.LinkCondition(
        direction=p["direction"], daytime=p["daytime"], n0=p["n0"], alpha_p=p["alpha_p"], beta=p["beta"],
        pointing_variance=p["pointing_variance"], w_sq_distribution=p["w_sq_distribution"],
    )


def cmd_pdt(p):
    cond = _condition(p)
    geom = ChannelGeometry(p["altitude"], math.radians(p["zenith_deg"]), p["wavelength"], p["w_d"], p["a_r"],
                           p["chi_ext"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", elliptic_channel.ValidityRangeWarning)
        h = elliptic_channel.pdt(cond, geom, p["samples"], p["bins"], p["seed"], workers=p["workers"])
    rows = list(zip(h.bin_centers, h.probabilities))
    extra = {"n_samples": h.n_samples, "seed": h.seed, "mean": h.mean, "stderr": h.stderr, "mode": h.mode}
    table = Table(["bin_center", "probability"], rows, extra, {"bin_center": lambda v: format(float(v), ".5f")})
    return table, f"PDT mode {h.mode:.5f}, mean {h.mean:.5f} over {h.n_samples} samples"


def cmd_surface(p):
    cond = _condition(p)
    base = ChannelGeometry(p["altitudes"][0], 0.0, p["wavelength"], p["w_d"], p["a_r"], p["chi_ext"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", elliptic_channel.ValidityRangeWarning)
        grid = elliptic_channel.transmittance_surface(
            cond, p["altitudes"], [math.radians(z) for z in p["zeniths_deg"]], p["samples"], p["seed"],
            base_geometry=base, workers=p["workers"],
        )
    rows = list(grid.rows())
    return (Table(["altitude_m", "zenith_rad", "mean", "stderr"], rows, {"n_samples": grid.n_samples,
                                                                          "seed": grid.seed}),
            f"{len(rows)} surface cells")


def cmd_budget(p):
    spec = link_budget.LinkBudgetSpec(p["p_t"], p["a_tx"], p["a_rx"], p["theta_div"], 1.0, p["alpha_fog"],
                                      p["s_r"], 1.0)
    ranges = p["ranges"] if p["ranges"] is not None else list(np.linspace(0.1, 5.0, 20))
    sweep = link_budget.margin_sweep(spec, ranges, p["diameters"])
    rows = [(r.range_km, r.d_rx, r.margin_db, r.operational) for r in sweep.rows]
    extra = {
        "break_even_km": {str(d): sweep.break_even_range(d) for d in sweep.diameters},
        "non_operational": {str(d): sweep.non_operational(d) for d in sweep.diameters},
    }
    return Table(["range_km", "d_rx_m", "margin_db", "operational"], rows, extra), f"{len(rows)} margin cells"


def cmd_netsim(p):
    if p["noise"] == "depolarizing" and p["pair_fidelity"] is not None:
        noise = repeater_chain.NoiseSpec.from_fidelity(p["pair_fidelity"], bsm_success=p["bsm_success"],
                                                       memory_time=p["memory_time"])
    else:
        noise = repeater_chain.NoiseSpec(p["noise"], p=p["p"], eta=p["eta"], bsm_success=p["bsm_success"],
                                         memory_time=p["memory_time"])
    ns = range(p["n_repeaters"] + 1) if p["sweep"] else [p["n_repeaters"]]
    rows = []
    for n in ns:
        top = repeater_chain.SwarmTopology(n, p["hop_length"], p["signal_speed"], noise, p["distribution"])
        s = repeater_chain.summarize_runs(top, p["input_state"], p["seed"], p["repetitions"])
        rows.append((n, s.mean_fidelity, s.std_fidelity, s.mean_time, s.success_rate))
    extra = {"hop_length_km": p["hop_length"], "noise": p["noise"], "repetitions": p["repetitions"]}
    if p["event_log"]:
        top = repeater_chain.SwarmTopology(ns[-1], p["hop_length"], p["signal_speed"], noise, p["distribution"])
        res = repeater_chain.run_teleportation(top, p["input_state"], p["seed"])
        extra["event_log"] = [{"time_ns": t, "node": node, "event": ev} for t, node, ev in res.event_log]
    cols = ["n_repeaters", "mean_fidelity", "std_fidelity", "mean_time_ns", "success_rate"]
    return Table(cols, rows, extra), f"fidelity {rows[-1][1]:.6f} at n={rows[-1][0]}"


def cmd_visibility_report(p):
    if not p["input"]:
        raise InputError("visibility-report needs --input")
    records = attenuation.read_visibility_csv(p["input"])
    report = attenuation.visibility_report(records, p["wavelength_nm"], p["model"], p["distance"])
    rows = [(r.label, r.visibility, r.p, r.beta_fog, r.attenuation_db) for r in report]
    cols = ["label", "visibility_km", "p", "beta_fog_per_km", "attenuation_db"]
    return Table(cols, rows, {"model": p["model"], "wavelength_nm": p["wavelength_nm"]}), f"{len(rows)} records"


COMMANDS = {
    "profile": cmd_profile,
    "attenuation": cmd_attenuation,
    "beam": cmd_beam,
    "pdt": cmd_pdt,
    "surface": cmd_surface,
    "budget": cmd_budget,
    "netsim": cmd_netsim,
    "visibility-report": cmd_visibility_report,
}

_EXIT_FOR_CATEGORY = {"config": EXIT_CONFIG, "numeric": EXIT_NUMERIC, "module": EXIT_NUMERIC, "io": EXIT_IO}


def _fail(category, cmd, message):
    print(f"error category={category} module={cmd} message={message}", file=sys.stderr)
    return _EXIT_FOR_CATEGORY[category]


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    cmd = args.subcommand
    try:
        params, meta = resolve(cmd, args)
    except AerialQCError as exc:
        return _fail("config", cmd, exc)
    except OSError as exc:
        return _fail("io", cmd, exc)
    try:
        table, summary = COMMANDS[cmd](params)
    except AerialQCError as exc:
        return _fail(exc.category, cmd, exc)
    except OSError as exc:
        return _fail("io", cmd, exc)
    text = table.to_json() if meta["format"] == "json" else table.to_csv()
    out = meta["output"]
    if out is None and os.environ.get(OUTPUT_DIR_ENV):
        out = os.path.join(os.environ[OUTPUT_DIR_ENV], f"{cmd}.{meta['format']}")
    try:
        if out is None:
            sys.stdout.write(text)
        else:
            with open(out, "w", newline="") as fh:
                fh.write(text)
    except OSError as exc:
        return _fail("io", cmd, exc)
    print(f"{cmd}: {summary}" + (f" -> {out}" if out else ""), file=sys.stderr)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
