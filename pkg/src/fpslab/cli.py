"""Command-line front end driven by flat ``key=value`` config files.

Exit codes: 0 when every judged check passes, 2 when any check fails,
1 on configuration or I/O errors.
"""
from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

from .lattice import Cube, GridFunction
from .norms import tl_seminorm
from .sparse import (
    fractional_sparse,
    oscillation_sparse,
    sparsity_check,
    verify_fractional_domination,
    verify_oscillation_domination,
)
from .verify import (
    FunctionSpec,
    TestSuite,
    VerificationReport,
    WeightSpec,
    attach_references,
    bbm_sweep,
    calibrate,
    check_dyadic_summing,
    check_embedding,
    check_fractional_ps,
    check_l1_oscillation,
    check_poincare_sobolev,
    one_weight_suite,
    sharpness_reports,
    truncation_reports,
)
from .weights import ConfigError, ExponentConfig, ainfty, apq_alpha, au_characteristic, conj

COMMANDS = ("characteristics", "seminorm", "sparse", "verify", "sharpness", "bbm", "truncation")
CSV_COLUMNS = "experiment,d,p,q,r,s,alpha,u,p0,n,depth,seed,lhs,rhs,ratio,reference,pass".split(",")
EXPONENT_KEYS = ("d", "p", "q", "r", "s", "alpha", "u", "p0")
KNOWN_KEYS = set(EXPONENT_KEYS) | {
    "command", "n", "depth", "seed", "f", "f_param", "weight", "weight_param", "theorem", "branch",
    "kind", "gamma", "epsilon", "s_values", "quadrature", "construction", "csv", "json",
}
FLOAT_FMT = "%.17g"


# --- config -------------------------------------------------------------------


def parse_config(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    unknown = sorted(set(out) - KNOWN_KEYS)
    if unknown:
        raise ConfigError("unknown keys: " + ", ".join(unknown))
    if "command" not in out:
        raise ConfigError("missing key: command")
    if out["command"] not in COMMANDS:
        raise ConfigError(f"unknown command {out['command']!r}; expected one of {', '.join(COMMANDS)}")
    return out


def _num(raw: dict, key: str, default=None, cast=float):
    if key not in raw:
        return default
    try:
        return cast(raw[key])
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {raw[key]!r}") from None


def exponent_config(raw: dict) -> ExponentConfig:
    """Validate every exponent constraint up front; ``p`` and ``q`` default to each other."""
    vals = {k: _num(raw, k) for k in EXPONENT_KEYS if k in raw}
    if "d" in vals:
        vals["d"] = int(vals["d"])
    if "p" in vals and "q" not in vals:
        vals["q"] = vals["p"]
    if "q" in vals and "p" not in vals:
        vals["p"] = min(vals["q"], 2.0)
    return ExponentConfig(**vals)


def _s_values(raw: dict, default):
    if "s_values" in raw:
        try:
            return [float(x) for x in raw["s_values"].split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"key 's_values': cannot parse {raw['s_values']!r}") from None
    if "s" in raw:
        return [float(raw["s"])]
    return list(default)


def _suite(raw: dict, d: int) -> TestSuite:
    seed = _num(raw, "seed", 0, int)
    suite = TestSuite.default(seeds=(seed, seed + 1, seed + 2))
    if "n" in raw:
        suite.n[d] = _num(raw, "n", cast=int)
    suite.depth = _num(raw, "depth", None, int)
    return suite


def _function(raw: dict, cube: Cube, n: int) -> GridFunction:
    spec = FunctionSpec(raw.get("f", "affine"), _num(raw, "seed", None, int), _num(raw, "f_param", 0.0))
    return spec.build(cube, n)


def _weights(raw: dict, cube: Cube, n: int):
    spec = WeightSpec(raw.get("weight", "const"), _num(raw, "weight_param", 0.0))
    return spec, spec.pair(cube, n)


# --- commands -----------------------------------------------------------------


def _grid(raw: dict, cfg: ExponentConfig, default_n: int):
    n = _num(raw, "n", default_n, int)
    return Cube.unit(cfg.d), n


def cmd_characteristics(raw, cfg):
    Q, n = _grid(raw, cfg, 64)
    depth = _num(raw, "depth", None, int)
    spec, (omega, sigma) = _weights(raw, Q, n)
    w = spec.weight(Q, n)
    reps = []

    def add(name, value):
        reps.append(VerificationReport(f"characteristic.{name}", cfg, n, value, {}, depth, None, label=spec.label))

    add("apq", apq_alpha(omega, sigma, cfg, depth).value)
    add("ainfty_omega_q", ainfty(omega.with_samples(omega.samples ** cfg.q), depth).value)
    if cfg.p > 1:
        add("ainfty_sigma_dual", ainfty(sigma.with_samples(sigma.samples ** -conj(cfg.p)), depth).value)
    add("au", au_characteristic(w, cfg.u, depth).value)
    return reps, {}


def cmd_seminorm(raw, cfg):
    Q, n = _grid(raw, cfg, 256)
    f = _function(raw, Q, n)
    spec, (_, sigma) = _weights(raw, Q, n)
    res = tl_seminorm(f, sigma, cfg, raw.get("quadrature", "auto"))
    rep = VerificationReport("seminorm", cfg, n, res.value, {}, None, _num(raw, "seed", None, int), label=spec.label)
    rep.notes.update(pair_count=res.pair_count, excluded_diagonal_mass_bound=res.excluded_diagonal_mass_bound)
    return [rep], {}


def cmd_sparse(raw, cfg):
    Q, n = _grid(raw, cfg, 64)
    depth = _num(raw, "depth", None, int)
    f = _function(raw, Q, n)
    seed = _num(raw, "seed", None, int)
    construction = raw.get("construction", "fractional")
    if construction == "oscillation":
        S = oscillation_sparse(f, None, depth)
        dom = verify_oscillation_domination(f, None, S)
    elif construction == "fractional":
        quad = raw.get("quadrature", "auto")
        S = fractional_sparse(f, None, cfg, depth, quad)
        dom = verify_fractional_domination(f, None, cfg, S, quad)
    else:
        raise ConfigError(f"unknown construction {construction!r}")
    ok, min_ratio = sparsity_check(S)
    rep = VerificationReport(f"sparse.{construction}.sparsity", cfg, n, 0.5, {"min_witness_ratio": min_ratio}, depth, seed)
    rep.notes.update(members=len(S), disjoint_and_half=ok)
    rep.judge(1.0)
    if not ok:
        rep.passed = False
    con = VerificationReport(f"sparse.{construction}.domination", cfg, n, dom.max_required_constant, {}, depth, seed)
    return [rep, con], {"family": S.to_json()}


def cmd_verify(raw, cfg):
    suite = _suite(raw, cfg.d)
    theorem = raw.get("theorem", "poincare")
    branch = raw.get("branch")
    if theorem == "poincare":
        reps = check_poincare_sobolev(suite, cfg)
    elif theorem == "fractional":
        reps = check_fractional_ps(suite, cfg, branch or "i")
    elif theorem == "embedding":
        reps = check_embedding(suite, cfg, branch or "i")
    elif theorem == "dyadic":
        reps = check_dyadic_summing(suite, cfg, _num(raw, "gamma", 1.0), _num(raw, "epsilon"))
    elif theorem == "one_weight":
        reps = one_weight_suite(suite, cfg, raw.get("kind", "gradient"))
    elif theorem == "l1":
        reps = check_l1_oscillation(suite, cfg)
    else:
        raise ConfigError(f"unknown theorem {theorem!r}")
    return attach_references(reps), {}


def cmd_sharpness(raw, cfg):
    n = _num(raw, "n", 4096, int)
    s_values = _s_values(raw, (0.6, 0.65, 0.7, 0.75))
    return sharpness_reports(cfg.q, cfg.r, s_values, n), {}


def cmd_bbm(raw, cfg):
    Q, n = _grid(raw, cfg, 1024)
    f = _function(raw, Q, n)
    spec, (_, sigma) = _weights(raw, Q, n)
    reps = []
    for s, prod in bbm_sweep(f, sigma, cfg.p, cfg.r, _s_values(raw, (0.5, 0.8, 0.95))):
        reps.append(VerificationReport("bbm", cfg.replace(s=s), n, prod, {}, None, None, label=spec.label))
    return reps, {}


def cmd_truncation(raw, cfg):
    return truncation_reports(_suite(raw, cfg.d), cfg, raw.get("kind", "classic")), {}


HANDLERS = {
    "characteristics": cmd_characteristics,
    "seminorm": cmd_seminorm,
    "sparse": cmd_sparse,
    "verify": cmd_verify,
    "sharpness": cmd_sharpness,
    "bbm": cmd_bbm,
    "truncation": cmd_truncation,
}


# --- output -------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return FLOAT_FMT % x


def report_to_dict(rep: VerificationReport) -> dict:
    return {
        "experiment": rep.experiment,
        "label": rep.label,
        "cfg": {k: getattr(rep.cfg, k) for k in EXPONENT_KEYS},
        "n": rep.n,
        "depth": rep.depth,
        "seed": rep.seed,
        "lhs": rep.lhs,
        "rhs": rep.rhs,
        "ratio": rep.ratio,
        "rhs_components": dict(rep.rhs_components),
        "reference": rep.reference,
        "pass": rep.passed,
        "notes": rep.notes,
    }


def csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        cfg = row["cfg"]
        cells = [row["experiment"]]
        cells += [_fmt(cfg["d"])] + [_fmt(float(cfg[k])) for k in EXPONENT_KEYS[1:]]
        cells += [_fmt(row["n"]), _fmt(row["depth"]), _fmt(row["seed"])]
        cells += [_fmt(float(row["lhs"])), _fmt(float(row["rhs"])), _fmt(float(row["ratio"]))]
        ref = row["reference"]
        cells.append("" if ref is None else _fmt(float(ref)))
        cells.append("na" if ref is None or row["pass"] is None else _fmt(bool(row["pass"])))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def emit_reports(reports: list[VerificationReport], csv_path, json_path, extra: dict | None = None) -> None:
    if not reports:
        raise ValueError("no reports to write")
    rows = [report_to_dict(r) for r in reports]
    doc = {"reports": rows}
    if extra:
        doc.update(extra)
    # serialize once and rebuild the CSV from the parsed document so both paths agree
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    parsed = json.loads(text)
    _write(json_path, text)
    _write(csv_path, csv_text(parsed["reports"]))


def _write(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    tmp.replace(path)


def reingest(json_path, csv_path) -> None:
    doc = json.loads(Path(json_path).read_text(encoding="utf-8"))
    _write(csv_path, csv_text(doc["reports"]))


def run(config_path, csv_path=None, json_path=None, stderr=None) -> int:
    stderr = sys.stderr if stderr is None else stderr
    try:
        path = Path(config_path)
        raw = parse_config(path.read_text(encoding="utf-8"))
        cfg = exponent_config(raw)
        csv_path = csv_path or raw.get("csv") or path.with_suffix(".csv")
        json_path = json_path or raw.get("json") or path.with_suffix(".json")
        reports, extra = HANDLERS[raw["command"]](raw, cfg)
        emit_reports(reports, csv_path, json_path, extra)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    failed = [r for r in reports if r.passed is False]
    for r in failed:
        print(f"FAIL {r.experiment} {r.label}: ratio {r.ratio:.6g} > {r.reference:.6g}", file=stderr)
    return 2 if failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fpslab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--csv")
    p_run.add_argument("--json")
    p_re = sub.add_parser("reingest", help="rebuild the CSV summary from a JSON detail file")
    p_re.add_argument("json")
    p_re.add_argument("csv")
    p_cal = sub.add_parser("calibrate", help="re-measure the stored reference constants")
    p_cal.add_argument("--out")
    args = parser.parse_args(argv)
    if args.cmd == "run":
        return run(args.config, args.csv, args.json)
    if args.cmd == "reingest":
        try:
            reingest(args.json, args.csv)
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        return 0
    table = calibrate(args.out)
    for k, v in table.items():
        print(f"{k} {FLOAT_FMT % v}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
