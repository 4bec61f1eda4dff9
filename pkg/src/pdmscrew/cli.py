"""Command-line front end.

    pdmscrew spectrum     --config sys.ini --nr 0 --ell 1
    pdmscrew wavefunction --config sys.ini --nr 0 --ell 1 --points 400
    pdmscrew verify       --config sys.ini --nr 0 --ell 1
    pdmscrew sweep        --config sys.ini --axis chi --start -2 --stop 2 --steps 81
    pdmscrew crossings    --config sys.ini --state-a 0:2 --state-b 1:-1
    pdmscrew audit        --config sys.ini --case c

Every artifact embeds the fully resolved configuration (file values with
flag overrides applied).  JSON and CSV artifacts are themselves accepted by
``--config``, which reproduces them byte for byte.

Exit codes: 0 success, 2 invalid configuration, 3 no valid/bound state,
4 oracle failed to converge.
"""
from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import os
import sys
import tempfile
from typing import Optional

import numpy as np

from . import analysis, oracle, spectra
from .errors import ConfigError, ConvergenceError, DomainError, GridError, InvalidState
from .model import (DislocationConfig, GaugeConfig, PdmProfile, PotentialConfig,
                    SystemConfig, classify)

EXIT_OK, EXIT_CONFIG, EXIT_STATE, EXIT_CONVERGENCE = 0, 2, 3, 4

SCHEMA = {
    "pdm": {"lambda": float, "sigma": float},
    "dislocation": {"chi": float, "burgers": float},
    "gauge": {"q": float, "B0": float, "phi_AB": float},
    "potential": {"a": float, "b_lin": float, "c": float},
    "particle": {"k": float},
    "oracle": {"n_points": int, "r_max_policy": str, "bracket_rel": float,
               "expansions": int, "scan_points": int, "f_tol": float,
               "verdict_rel": float, "exp_tail": float, "gauss_tail": float},
    "state": {"n_r": int, "ell": int, "variant": str},
    "sweep": {"axis": str, "start": float, "stop": float, "steps": int, "states": str,
              "format": str},
    "wavefunction": {"points": int, "r_max": float},
    "crossings": {"state_a": str, "state_b": str, "axis": str, "start": float,
                  "stop": float, "scan_points": int},
    "audit": {"case": str},
}

# flag dest -> (section, key)
FLAG_KEYS = {
    "lam": ("pdm", "lambda"), "sigma": ("pdm", "sigma"),
    "chi": ("dislocation", "chi"), "burgers": ("dislocation", "burgers"),
    "q": ("gauge", "q"), "B0": ("gauge", "B0"), "phi_AB": ("gauge", "phi_AB"),
    "a": ("potential", "a"), "b_lin": ("potential", "b_lin"), "c": ("potential", "c"),
    "k": ("particle", "k"),
    "n_points": ("oracle", "n_points"), "r_max_policy": ("oracle", "r_max_policy"),
    "nr": ("state", "n_r"), "ell": ("state", "ell"), "variant": ("state", "variant"),
    "axis": (None, "axis"), "start": (None, "start"), "stop": (None, "stop"),
    "steps": ("sweep", "steps"), "states": ("sweep", "states"), "format": ("sweep", "format"),
    "points": ("wavefunction", "points"), "wf_r_max": ("wavefunction", "r_max"),
    "state_a": ("crossings", "state_a"), "state_b": ("crossings", "state_b"),
    "scan_points": ("crossings", "scan_points"),
    "case": ("audit", "case"),
}


# ---------------------------------------------------------------------------
# configuration


def _canonical(kind, raw, where: str) -> str:
    try:
        if kind is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return repr(v)
        if kind is int:
            f = float(raw)
            if f != int(f):
                raise ValueError
            return str(int(f))
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected {kind.__name__}, got {raw!r}") from None
    return str(raw).strip()


def _from_ini(text: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return {s: dict(parser.items(s)) for s in parser.sections()}


def load_sections(path: str) -> dict:
    """Raw sections from an INI file or from a JSON/CSV artifact."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON artifact: {exc}") from None
        if not isinstance(doc, dict) or not isinstance(doc.get("config"), dict):
            raise ConfigError("JSON artifact has no config block")
        return {s: dict(v) for s, v in doc["config"].items()}
    if stripped.startswith("#"):
        lines = []
        for line in text.splitlines():
            if not line.startswith("#"):
                break
            lines.append(line[2:] if line.startswith("# ") else line[1:])
        return _from_ini("\n".join(lines))
    return _from_ini(text)


def resolve(sections: dict, overrides: dict) -> dict:
    """Validate keys, apply flag overrides and canonicalize every value."""
    out: dict = {}
    for sec, items in sections.items():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key in items:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
        out[sec] = {k: str(v) for k, v in items.items()}
    for (sec, key), value in overrides.items():
        out.setdefault(sec, {})[key] = value
        if sec == "dislocation":
            # the last of chi / burgers given on the command line wins
            out[sec].pop("burgers" if key == "chi" else "chi", None)
    return {sec: {k: _canonical(SCHEMA[sec][k], v, f"[{sec}] {k}") for k, v in items.items()}
            for sec, items in out.items()}


def _get(sections: dict, sec: str, key: str, default=None):
    raw = sections.get(sec, {}).get(key)
    if raw is None:
        return default
    return SCHEMA[sec][key](raw)


def build_system(sections: dict) -> SystemConfig:
    if "pdm" not in sections:
        raise ConfigError("missing [pdm] section")
    pdm = PdmProfile(_get(sections, "pdm", "lambda", 1.0), _get(sections, "pdm", "sigma", 0.0))
    burgers = _get(sections, "dislocation", "burgers")
    chi = _get(sections, "dislocation", "chi")
    if burgers is not None and chi is None:
        disl = DislocationConfig.from_burgers(burgers)
    else:
        disl = DislocationConfig(chi or 0.0, burgers)
    gauge = None
    if "gauge" in sections:
        gauge = GaugeConfig(_get(sections, "gauge", "q", 1.0), _get(sections, "gauge", "B0", 0.0),
                            _get(sections, "gauge", "phi_AB", 0.0))
    pot = None
    if "potential" in sections:
        pot = PotentialConfig(_get(sections, "potential", "a", 0.0),
                              _get(sections, "potential", "b_lin", 0.0),
                              _get(sections, "potential", "c", 0.0))
    return SystemConfig(pdm, disl, gauge, pot, _get(sections, "particle", "k", 0.0))


def build_settings(sections: dict) -> oracle.OracleSettings:
    kw = {}
    for key, kind in SCHEMA["oracle"].items():
        val = _get(sections, "oracle", key)
        if val is None:
            continue
        if key == "r_max_policy":
            if val != "auto":
                try:
                    kw["r_max"] = float(val)
                except ValueError:
                    raise ConfigError("r_max_policy must be 'auto' or a length") from None
        else:
            kw[key] = val
    return oracle.OracleSettings(**kw)


def parse_state(text: str):
    try:
        n, l = text.split(":")
        return int(n), int(l)
    except ValueError:
        raise ConfigError(f"state must look like n_r:ell, got {text!r}") from None


def parse_states(text: str) -> tuple:
    return tuple(parse_state(s.strip()) for s in text.split(",") if s.strip())


def _variant(sections: dict) -> Optional[spectra.Variant]:
    v = _get(sections, "state", "variant")
    if v is None:
        return None
    try:
        return spectra.Variant(v)
    except ValueError:
        raise ConfigError(f"variant must be as_printed or rederived, got {v!r}") from None


def _state(sections: dict):
    return _get(sections, "state", "n_r", 0), _get(sections, "state", "ell", 0)


def to_ini(sections: dict) -> str:
    lines = []
    for sec, items in sections.items():
        lines.append(f"[{sec}]")
        lines.extend(f"{k} = {v}" for k, v in items.items())
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# commands


def _json(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=True) + "\n"


def cmd_spectrum(sections: dict) -> str:
    cfg = build_system(sections)
    n_r, ell = _state(sections)
    res = spectra.energy(cfg, n_r, ell, _variant(sections))
    return _json({"command": "spectrum", "config": sections, "n_r": n_r, "ell": ell,
                  "energy": res.value, "result": res.to_dict()})


def cmd_wavefunction(sections: dict) -> str:
    cfg = build_system(sections)
    points = _get(sections, "wavefunction", "points", 200)
    r_max = _get(sections, "wavefunction", "r_max")
    n_r, ell = _state(sections)
    wf = spectra.wavefunction(cfg, n_r, ell, _variant(sections))
    if points < 2:
        raise ConfigError("--points must be at least 2")
    top = r_max if r_max is not None else spectra.default_r_max(cfg, n_r, ell, wf.energy)
    r = top * np.arange(1, points + 1) / points
    buf = io.StringIO()
    for line in to_ini(sections).splitlines():
        buf.write(f"# {line}\n")
    buf.write("r,R,U\n")
    for x, R, U in zip(r, wf.R(r), wf.U(r)):
        buf.write(f"{analysis.fmt_float(x)},{analysis.fmt_float(R)},{analysis.fmt_float(U)}\n")
    return buf.getvalue()


def cmd_verify(sections: dict) -> str:
    cfg = build_system(sections)
    settings = build_settings(sections)
    n_r, ell = _state(sections)
    variant = _variant(sections)
    res = spectra.energy(cfg, n_r, ell, variant)
    conv = (oracle.TargetConvention.POSITIVE_TARGET if oracle.k2_sign_for(cfg) > 0
            else oracle.TargetConvention.PRINTED_TARGET)
    E_o = oracle.self_consistent_energy(cfg, n_r, ell, conv, settings=settings)
    return _json({
        "command": "verify", "config": sections, "n_r": n_r, "ell": ell,
        "case": classify(cfg).value, "convention": conv.value,
        "closed_form": res.value, "oracle": E_o,
        "relative_error": abs(E_o - res.value) / max(abs(res.value), 1e-300),
        "residual": oracle.residual_norm(cfg, n_r, ell, res.value, variant, settings),
    })


def _sweep_spec(sections: dict) -> analysis.SweepSpec:
    cfg = build_system(sections)
    axis = _get(sections, "sweep", "axis")
    if axis is None:
        raise ConfigError("sweep needs an axis")
    lo, hi = analysis.DEFAULT_RANGES.get(axis, (None, None))
    states = _get(sections, "sweep", "states")
    if not states:
        raise ConfigError("sweep needs states, e.g. states = 0:0, 0:1")
    return analysis.SweepSpec(axis, _get(sections, "sweep", "start", lo),
                              _get(sections, "sweep", "stop", hi),
                              _get(sections, "sweep", "steps", 81), parse_states(states),
                              cfg, _variant(sections))


def cmd_sweep(sections: dict, workers: int) -> str:
    fmt = _get(sections, "sweep", "format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("sweep format must be csv or json")
    table = analysis.sweep(_sweep_spec(sections), workers=workers)
    if fmt == "json":
        doc = table.to_dict()
        doc.pop("metadata")
        return _json({"command": "sweep", "config": sections, **doc})
    return table.to_csv(header=to_ini(sections).splitlines())


def cmd_crossings(sections: dict) -> str:
    cfg = build_system(sections)
    axis = _get(sections, "crossings", "axis", "chi")
    lo, hi = analysis.DEFAULT_RANGES.get(axis, (None, None))
    a = _get(sections, "crossings", "state_a")
    b = _get(sections, "crossings", "state_b")
    if a is None or b is None:
        raise ConfigError("crossings needs state_a and state_b")
    if axis not in analysis.AXES:
        raise ConfigError(f"axis must be one of {analysis.AXES}")
    points = analysis.find_crossings(
        parse_state(a), parse_state(b),
        (_get(sections, "crossings", "start", lo), _get(sections, "crossings", "stop", hi)),
        cfg, axis=axis, scan_points=_get(sections, "crossings", "scan_points", 512),
        variant=_variant(sections))
    return _json({"command": "crossings", "config": sections,
                  "crossings": [p.to_dict() for p in points]})


def cmd_audit(sections: dict) -> str:
    cfg = build_system(sections)
    case = _get(sections, "audit", "case")
    if case is None:
        raise ConfigError("audit needs --case")
    n_r, ell = _state(sections)
    report = oracle.audit(case, cfg, n_r, ell, build_settings(sections))
    return _json({"command": "audit", "config": sections, "report": report.to_dict()})


# ---------------------------------------------------------------------------
# entry point


def _common(p: argparse.ArgumentParser, state: bool = True) -> None:
    p.add_argument("--config", "-c", help="INI file, or a JSON/CSV artifact to replay")
    p.add_argument("--out", "-o", help="write the artifact here (atomically) instead of stdout")
    g = p.add_argument_group("parameter overrides")
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--sigma", type=float)
    g.add_argument("--chi", type=float)
    g.add_argument("--burgers", type=float)
    g.add_argument("--q", type=float)
    g.add_argument("--B0", type=float)
    g.add_argument("--phi-AB", dest="phi_AB", type=float)
    g.add_argument("--a", type=float)
    g.add_argument("--b-lin", dest="b_lin", type=float)
    g.add_argument("--c", type=float)
    g.add_argument("--k", type=float)
    g.add_argument("--n-points", dest="n_points", type=int)
    g.add_argument("--r-max-policy", dest="r_max_policy")
    if state:
        g.add_argument("--nr", type=int)
        g.add_argument("--ell", type=int)
        g.add_argument("--variant", choices=[v.value for v in spectra.Variant])


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdmscrew", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("spectrum", help="closed-form energy of one state"))
    p = sub.add_parser("wavefunction", help="sampled R(r) and U(r) as CSV")
    _common(p)
    p.add_argument("--points", type=int)
    p.add_argument("--r-max", dest="wf_r_max", type=float)
    _common(sub.add_parser("verify", help="closed form vs oracle and residual"))
    p = sub.add_parser("sweep", help="energies along one parameter axis")
    _common(p, state=False)
    p.add_argument("--variant", choices=[v.value for v in spectra.Variant])
    p.add_argument("--axis", choices=analysis.AXES)
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--states", help="comma-separated n_r:ell list")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"))
    p = sub.add_parser("crossings", help="level crossings of two states")
    _common(p, state=False)
    p.add_argument("--variant", choices=[v.value for v in spectra.Variant])
    p.add_argument("--state-a", dest="state_a")
    p.add_argument("--state-b", dest="state_b")
    p.add_argument("--axis", choices=analysis.AXES)
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--scan-points", dest="scan_points", type=int)
    p = sub.add_parser("audit", help="printed vs re-derived vs oracle energy")
    _common(p)
    p.add_argument("--case", choices=("a", "b", "c", "d", "e"))
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    out = {}
    for dest, (sec, key) in FLAG_KEYS.items():
        val = getattr(args, dest, None)
        if val is None:
            continue
        if sec is None:
            sec = "sweep" if args.command == "sweep" else "crossings"
        if isinstance(val, float):
            val = repr(val)
        out[(sec, key)] = str(val)
    return out


def write_atomic(path: str, text: str) -> None:
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".pdmscrew-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        sections = resolve(load_sections(args.config) if args.config else {}, _overrides(args))
        if args.command == "spectrum":
            text = cmd_spectrum(sections)
        elif args.command == "wavefunction":
            text = cmd_wavefunction(sections)
        elif args.command == "verify":
            text = cmd_verify(sections)
        elif args.command == "sweep":
            text = cmd_sweep(sections, args.workers)
        elif args.command == "crossings":
            text = cmd_crossings(sections)
        else:
            text = cmd_audit(sections)
    except (ConfigError, DomainError, GridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidState as exc:
        print(f"invalid state: {exc}", file=sys.stderr)
        return EXIT_STATE
    except ConvergenceError as exc:
        print(f"oracle did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))
