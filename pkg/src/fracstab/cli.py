"""Command-line entry point: ml / certify / simulate / adapt.

Configs are strict JSON with a schema_version field; unknown keys are
rejected so a misspelled option can never silently change a validated
invariant.  Artifacts (CSV trajectories, JSON reports, plain-text
summaries) are byte-identical across repeated runs on identical inputs.

Exit codes: 0 all requested quantities computed (satisfaction lives in the
report, not the exit code), 2 parse error, 3 validation error, 4 I/O
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import adaptive, certificates, solver, spectral
from .errors import (
    ConfigError,
    DomainError,
    FracstabError,
    ValidationError,
)
from .ml import ml_matrix, ml_scalar
from .signals import Signal

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_IO = 4


# ---------------------------------------------------------------------------
# config parsing


def _require_keys(obj: dict, allowed: set, required: set, where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(
            f"{where}: unknown key(s) {sorted(unknown)}; allowed: {sorted(allowed)}"
        )
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing required key(s) {sorted(missing)}")


_SIGNAL_KEYS = {
    "constant": ({"kind", "value", "declared_bound"}, {"value"}),
    "closed_form": (
        {
            "kind",
            "tag",
            "amplitude",
            "omega",
            "phase",
            "rate",
            "coeff",
            "offset",
            "declared_bound",
        },
        {"tag"},
    ),
    "sampled": ({"kind", "times", "values", "declared_bound"}, {"times", "values"}),
    "pulse": ({"kind", "amplitude", "duty", "period"}, {"amplitude", "duty", "period"}),
    "piecewise": ({"kind", "segments"}, {"segments"}),
}


def parse_signal(obj, where: str) -> Signal:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"{where}: a signal must be an object with a 'kind'")
    kind = obj["kind"]
    if kind not in _SIGNAL_KEYS:
        raise ConfigError(
            f"{where}: unknown signal kind {kind!r}; "
            f"expected one of {sorted(_SIGNAL_KEYS)}"
        )
    allowed, required = _SIGNAL_KEYS[kind]
    _require_keys(obj, allowed, required, where)
    if kind == "constant":
        return Signal.constant(obj["value"], declared_bound=obj.get("declared_bound"))
    if kind == "closed_form":
        return Signal.closed_form(
            obj["tag"],
            coeff=obj.get("coeff", 1.0),
            offset=obj.get("offset", 0.0),
            amplitude=obj.get("amplitude", 1.0),
            omega=obj.get("omega", 1.0),
            phase=obj.get("phase", 0.0),
            rate=obj.get("rate", -1.0),
            declared_bound=obj.get("declared_bound"),
        )
    if kind == "sampled":
        return Signal.sampled(
            obj["times"], obj["values"], declared_bound=obj.get("declared_bound")
        )
    if kind == "pulse":
        return Signal.pulse(obj["amplitude"], obj["duty"], obj["period"])
    segs = []
    for i, seg in enumerate(obj["segments"]):
        _require_keys(
            seg, {"start", "end", "signal"}, {"start", "end", "signal"},
            f"{where}.segments[{i}]",
        )
        segs.append(
            (float(seg["start"]), float(seg["end"]),
             parse_signal(seg["signal"], f"{where}.segments[{i}].signal"))
        )
    return Signal.piecewise(segs)


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not well-formed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be an object")
    ver = obj.get("schema_version")
    if ver != SCHEMA_VERSION:
        raise ConfigError(
            f"{path}: schema_version must be {SCHEMA_VERSION}, got {ver!r}"
        )
    return obj


def parse_system(path: str) -> solver.SystemSpec:
    obj = _load_json(path)
    allowed = {
        "schema_version", "kind", "orders", "A", "Q", "nu", "x0", "xdot0",
    }
    _require_keys(obj, allowed, {"kind", "orders", "A", "x0"}, path)
    if obj["kind"] != "system":
        raise ConfigError(f"{path}: kind must be 'system', got {obj['kind']!r}")
    return solver.SystemSpec(
        orders=obj["orders"],
        A=obj["A"],
        Q=parse_signal(obj["Q"], f"{path}:Q") if "Q" in obj else None,
        nu=parse_signal(obj["nu"], f"{path}:nu") if "nu" in obj else None,
        x0=obj["x0"],
        xdot0=obj.get("xdot0"),
    )


def parse_scenario(path: str) -> adaptive.AdaptiveScenario:
    obj = _load_json(path)
    allowed = {
        "schema_version", "kind", "model", "w", "nu", "alpha", "beta",
        "gamma", "normalize", "A", "phi0", "e0", "horizon", "step",
        "T0_candidates",
    }
    _require_keys(obj, allowed, {"kind", "model", "w", "alpha"}, path)
    if obj["kind"] != "scenario":
        raise ConfigError(f"{path}: kind must be 'scenario', got {obj['kind']!r}")
    kwargs = dict(
        model=obj["model"],
        w=parse_signal(obj["w"], f"{path}:w"),
        alpha=tuple(np.atleast_1d(obj["alpha"])),
        gamma=float(obj.get("gamma", 1.0)),
        normalize=bool(obj.get("normalize", False)),
        phi0=obj.get("phi0", 0.0),
        horizon=float(obj.get("horizon", 100.0)),
        step=float(obj.get("step", 0.01)),
    )
    if "nu" in obj:
        kwargs["nu"] = parse_signal(obj["nu"], f"{path}:nu")
    if "beta" in obj:
        kwargs["beta"] = tuple(np.atleast_1d(obj["beta"]))
    if "A" in obj:
        kwargs["A"] = obj["A"]
    if "e0" in obj:
        kwargs["e0"] = obj["e0"]
    if "T0_candidates" in obj:
        kwargs["T0_candidates"] = tuple(obj["T0_candidates"])
    return adaptive.AdaptiveScenario(**kwargs)


# ---------------------------------------------------------------------------
# artifact emission


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, (str, bool, int, type(None))):
        return obj
    if isinstance(obj, float):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Signal):
        return {"kind": obj.kind, "shape": list(obj.shape)}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: _jsonable(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
            if f.name not in ("_eval", "params")
        }
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        return [_jsonable(v) for v in obj]
    return str(obj)


def write_json(path: str, payload: dict):
    payload = dict(payload)
    payload["schema_version"] = SCHEMA_VERSION
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_csv(path: str, header: list, columns: list):
    rows = len(columns[0])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(rows):
            fh.write(",".join(_fmt(col[i]) for col in columns) + "\n")


def write_trajectory_csv(path: str, traj: solver.Trajectory):
    n = traj.values.shape[1]
    header = ["t"] + [f"x{i+1}" for i in range(n)]
    cols = [traj.grid] + [traj.values[:, i] for i in range(n)]
    write_csv(path, header, cols)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_ml(args) -> int:
    if args.matrix_file is not None:
        try:
            A = np.loadtxt(args.matrix_file, ndmin=2)
        except OSError as exc:
            raise ConfigError(f"cannot read {args.matrix_file}: {exc}") from exc
        val = ml_matrix(args.alpha, args.beta, A, args.t)
        for row in np.atleast_2d(val):
            print(" ".join(_fmt(v) for v in row))
    else:
        if args.z is None:
            raise ConfigError("ml needs either --z or --matrix-file")
        parts = args.z.split(",")
        z = complex(float(parts[0]), float(parts[1]) if len(parts) > 1 else 0.0)
        val = ml_scalar(args.alpha, args.beta, z)
        if abs(val.imag) < 1e-14 * max(1.0, abs(val.real)):
            print(_fmt(val.real))
        else:
            print(f"{_fmt(val.real)}{val.imag:+.17g}j")
    return EXIT_OK


def _cmd_certify(args) -> int:
    spec = parse_system(args.system)
    alpha = spec.orders.alpha
    cert_alpha = float(alpha[0]) if spec.orders.commensurate else alpha
    sector = spectral.sector_classify(spec.orders.alpha_M, spec.A)
    report = {"sector": sector, "notes": []}
    if sector.overall == "stable":
        c = certificates.c_of_alpha_A(
            cert_alpha, spec.A, horizon=args.horizon, norm=args.norm
        )
        report["C_alpha_A"] = c
        if spec.Q is not None:
            horizon = args.horizon if args.horizon else 100.0
            report["q"] = certificates.q_certificate(
                cert_alpha, spec.A, spec.Q, horizon=horizon,
                grid_n=args.grid, norm=args.norm,
            )
            if spec.Q.declared_bound is not None:
                report["small_gain"] = certificates.small_gain(
                    cert_alpha, spec.A, spec.Q.declared_bound,
                    horizon=args.horizon, norm=args.norm,
                )
    else:
        report["notes"].append(
            f"spectrum is {sector.overall}; kernel gain not defined"
        )
    os.makedirs(args.out, exist_ok=True)
    write_json(os.path.join(args.out, "report.json"), report)
    lines = [
        "certificate report",
        f"  system: {args.system}",
        f"  sector: {sector.overall} (alpha_max = {spec.orders.alpha_M})",
    ]
    for rec in sector.records:
        lines.append(
            f"    lambda = {rec.eigenvalue:.6g}  |arg| = {rec.argument:.6f}"
            f"  margin = {rec.margin:+.6f}  [{rec.label}]"
        )
    if "C_alpha_A" in report:
        c = report["C_alpha_A"]
        lines.append(
            f"  C(alpha, A) = {c.value:.8g}  (tail bound {c.tail_bound:.3g}, "
            f"horizon {c.horizon:g})"
        )
    if "q" in report:
        q = report["q"]
        lines.append(
            f"  q = {q.q:.8g}  (< 1 - {q.safety_margin:g}: "
            f"{'satisfied' if q.satisfied else 'NOT satisfied'}; "
            f"pathwise variant {q.q_pathwise:.8g})"
        )
    if "small_gain" in report:
        sg = report["small_gain"]
        lines.append(
            f"  small gain: sup||Q|| = {sg.sup_Q:.6g} vs 1/C = "
            f"{sg.threshold:.6g} -> "
            f"{'satisfied' if sg.satisfied else 'NOT satisfied'}"
        )
    for note in report["notes"]:
        lines.append(f"  note: {note}")
    with open(os.path.join(args.out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    spec = parse_system(args.system)
    traj = solver.solve_ivp(
        spec, t_end=args.t_end, step=args.step,
        corrector_iters=args.corrector_iters,
    )
    os.makedirs(args.out, exist_ok=True)
    write_trajectory_csv(os.path.join(args.out, "trajectory.csv"), traj)
    meta = dict(traj.metadata)
    meta["diverged"] = traj.diverged
    meta["verdict"] = solver.asymptotic_verdict(traj)
    if args.oracle == "lp":
        otraj, mu = solver.lp_fixed_point(
            spec, t_end=args.t_end, grid_n=args.grid
        )
        write_trajectory_csv(os.path.join(args.out, "oracle.csv"), otraj)
        meta["oracle"] = {"method": "lp", "mu": mu, "grid_n": args.grid}
    write_json(os.path.join(args.out, "meta.json"), meta)
    print(f"simulate: {len(traj.grid)} points, verdict {meta['verdict']}")
    return EXIT_OK


def _run_one_scenario(path: str, out_dir: str) -> dict:
    scn = parse_scenario(path)
    rep = adaptive.run_scenario(scn)
    os.makedirs(out_dir, exist_ok=True)
    write_trajectory_csv(os.path.join(out_dir, "trajectory.csv"), rep.trajectory)
    if scn.model == "type-I":
        phi_norm = np.linalg.norm(rep.trajectory.values, axis=1)
    else:
        phi_norm = np.linalg.norm(rep.trajectory.values[:, 1:], axis=1)
    write_csv(
        os.path.join(out_dir, "plotdata.csv"),
        ["t", "norm_phi", "abs_e"],
        [rep.trajectory.grid, phi_norm, np.abs(rep.e_values)],
    )
    payload = {
        "model": scn.model,
        "pe": rep.pe,
        "sector": rep.sector,
        "q": rep.q,
        "small_gain": rep.small_gain,
        "verdict_phi": rep.verdict_phi,
        "verdict_e": rep.verdict_e,
        "notes": list(rep.notes),
    }
    write_json(os.path.join(out_dir, "report.json"), payload)
    return {
        "scenario": os.path.basename(path),
        "verdict_phi": rep.verdict_phi,
        "verdict_e": rep.verdict_e,
        "pe": rep.pe.pe if rep.pe else None,
    }


def _cmd_adapt(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    if args.batch:
        entries = []
        names = sorted(
            f for f in os.listdir(args.batch) if f.endswith(".json")
        )
        if not names:
            raise ConfigError(f"batch directory {args.batch} has no .json files")
        for name in names:
            sub = os.path.join(args.out, os.path.splitext(name)[0])
            entries.append(
                _run_one_scenario(os.path.join(args.batch, name), sub)
            )
        write_json(os.path.join(args.out, "index.json"), {"scenarios": entries})
        print(f"adapt: {len(entries)} scenarios")
        return EXIT_OK
    if not args.scenario:
        raise ConfigError("adapt needs --scenario or --batch")
    entry = _run_one_scenario(args.scenario, args.out)
    print(
        f"adapt: verdict_phi {entry['verdict_phi']}, verdict_e {entry['verdict_e']}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fracstab",
        description="Mittag-Leffler evaluation, Caputo IVP solving and "
        "robustness certificates for fractional adaptive systems.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    ml = sub.add_parser("ml", help="evaluate a Mittag-Leffler function")
    ml.add_argument("--alpha", type=float, required=True)
    ml.add_argument("--beta", type=float, required=True)
    ml.add_argument("--z", help="scalar argument, 're' or 're,im'")
    ml.add_argument("--matrix-file", help="row-major numeric text file")
    ml.add_argument("--t", type=float, default=1.0, help="time scale for matrices")
    ml.set_defaults(fn=_cmd_ml)

    ce = sub.add_parser("certify", help="compute robustness certificates")
    ce.add_argument("--system", required=True)
    ce.add_argument("--horizon", type=float, default=None)
    ce.add_argument("--grid", type=int, default=400)
    ce.add_argument("--norm", choices=["2", "inf"], default="2")
    ce.add_argument("--out", default=os.environ.get("FRACSTAB_OUT", "."))
    ce.set_defaults(fn=_cmd_certify)

    si = sub.add_parser("simulate", help="solve a fractional IVP")
    si.add_argument("--system", required=True)
    si.add_argument("--t-end", type=float, required=True)
    si.add_argument("--step", type=float, required=True)
    si.add_argument("--corrector-iters", type=int, default=2)
    si.add_argument("--oracle", choices=["lp"], default=None)
    si.add_argument("--grid", type=int, default=400, help="oracle grid size")
    si.add_argument("--out", default=os.environ.get("FRACSTAB_OUT", "."))
    si.set_defaults(fn=_cmd_simulate)

    ad = sub.add_parser("adapt", help="run adaptive error-model scenarios")
    ad.add_argument("--scenario")
    ad.add_argument("--batch", help="directory of scenario .json files")
    ad.add_argument("--out", default=os.environ.get("FRACSTAB_OUT", "."))
    ad.set_defaults(fn=_cmd_adapt)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FracstabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
