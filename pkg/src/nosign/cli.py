"""Config-driven experiment runner.

    nosign run experiment.ini [--out DIR] [--seed S] [--grid N]
    nosign replay DIR/report.json [--out DIR] [--seed S]

Configs are INI files with one ``[experiment]`` section (JSON objects with
the same keys are accepted too). Every run writes ``report.json`` plus its
artifacts into the output directory; the exit status is 0 iff every
declared expectation passed.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import math
import re
import sys
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import blowup, functionals, recursion, solver
from .field import GridSpec, ScalarField, check_class_P, load_field, sample, save_field
from .fixtures import FixtureError, StructuredQuadratic, resolve

log = logging.getLogger("nosign")

KINDS = ("solve", "profile", "classify", "monotonicity-suite", "recursion-suite", "class-P")
REPORT_NAME = "report.json"


class ConfigError(ValueError):
    """Config problem, carrying the offending key and its line when known."""

    def __init__(self, msg: str, key: str | None = None, line: int | None = None, source: str = ""):
        where = source
        if line is not None:
            where += f":{line}"
        if key:
            where += f" [{key}]"
        super().__init__(f"{where}: {msg}" if where else msg)
        self.key, self.line = key, line


class ManifestError(FileNotFoundError):
    def __init__(self, missing: list[str]):
        super().__init__("missing inputs:\n" + "\n".join(f"  - {m}" for m in missing))
        self.missing = missing


# ---------------------------------------------------------------------------
# configuration

@dataclass
class ExperimentConfig:
    kind: str
    values: dict
    lines: dict = dc_field(default_factory=dict)
    source: str = ""

    def _err(self, key: str, msg: str) -> ConfigError:
        return ConfigError(msg, key, self.lines.get(key), self.source)

    def get(self, key: str, default: Any = None, cast: Callable = str):
        if key not in self.values:
            return default
        raw = self.values[key]
        try:
            return cast(raw)
        except (TypeError, ValueError) as exc:
            raise self._err(key, f"cannot parse {raw!r}: {exc}") from None

    def require(self, key: str, cast: Callable = str):
        if key not in self.values:
            raise self._err(key, "required key missing")
        return self.get(key, cast=cast)

    @property
    def seed(self) -> int:
        return self.get("seed", 0, int)

    def echo(self) -> dict:
        return {"kind": self.kind, **{k: v for k, v in self.values.items() if k != "kind"}}


def _number(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip()
    if "/" in s:
        a, b = s.split("/", 1)
        return float(a) / float(b)
    return float(s)


def _numbers(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [_number(t) for t in text]
    return [_number(t) for t in re.split(r"[,\s]+", str(text).strip()) if t]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _key_lines(text: str) -> dict:
    lines = {}
    for i, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*\"?([A-Za-z_][\w\-]*)\"?\s*[=:]", line)
        if m and m.group(1) not in lines:
            lines[m.group(1)] = i
    return lines


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    if text.lstrip().startswith("{"):
        try:
            values = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(exc.msg, line=exc.lineno, source=source) from None
        if not isinstance(values, dict):
            raise ConfigError("top level must be an object", source=source)
    else:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str  # keys are case-sensitive (n vs N)
        try:
            cp.read_string(text, source=source)
        except configparser.Error as exc:
            lineno = getattr(exc, "lineno", None)
            raise ConfigError(str(exc).splitlines()[0], line=lineno, source=source) from None
        if not cp.has_section("experiment"):
            raise ConfigError("missing [experiment] section", source=source)
        values = dict(cp["experiment"])
    lines = _key_lines(text)
    kind = values.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {', '.join(KINDS)}; got {kind!r}", "kind",
                          lines.get("kind"), source)
    return ExperimentConfig(kind, dict(values), lines, source)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), str(path))


# ---------------------------------------------------------------------------
# run context

@dataclass
class Expectation:
    name: str
    invariant: str
    passed: bool
    detail: Any = None

    def to_dict(self) -> dict:
        return {"name": self.name, "invariant": self.invariant, "passed": bool(self.passed),
                "detail": _jsonable(self.detail)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


class Run:
    def __init__(self, cfg: ExperimentConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.expectations: list[Expectation] = []
        self.outputs: dict = {}
        self.artifacts: list[str] = []
        self.inputs: list[str] = []
        self.errors: list[str] = []

    def expect(self, name: str, invariant: str, passed: bool, detail=None):
        self.expectations.append(Expectation(name, invariant, bool(passed), detail))

    def write_text(self, name: str, text: str):
        (self.out / name).write_text(text)
        self.artifacts.append(name)

    def write_json(self, name: str, obj):
        self.write_text(name, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")

    def write_field(self, name: str, f: ScalarField):
        h, d = save_field(f, self.out / name)
        self.artifacts += [h.name, d.name]

    def guarded(self, label: str, fn: Callable):
        """Run an independent step; failures are recorded and the run goes on."""
        try:
            return fn()
        except ConfigError:
            raise
        except Exception as exc:  # noqa: BLE001 - collected into the report
            log.debug("step %s failed", label, exc_info=True)
            self.errors.append(f"{label}: {type(exc).__name__}: {exc}")
            self.expect(label, "step completes", False, str(exc))
            return None


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _spec(cfg: ExperimentConfig, n_default: int = 2) -> GridSpec:
    n = cfg.get("n", n_default, int)
    N = cfg.get("N", 257, int)
    try:
        return GridSpec(n, N)
    except ValueError as exc:
        raise cfg._err("N", str(exc)) from None


def _fixture(cfg: ExperimentConfig, key: str = "fixture"):
    name = cfg.require(key)
    try:
        return resolve(name)
    except (FixtureError, KeyError, ValueError) as exc:
        raise cfg._err(key, f"cannot resolve fixture: {exc}") from None


def _fixture_n(fx) -> int:
    return int(getattr(fx, "n", 2))


def _input_field(run: Run, spec: GridSpec, fx) -> ScalarField:
    """Field from a dump named in the config, else the fixture sampled on the grid."""
    cfg = run.cfg
    path = cfg.get("field")
    if path:
        p = Path(path)
        if not p.is_absolute():
            p = Path(cfg.source).parent / p if cfg.source else p
        run.inputs.append(str(p))
        return load_field(p)
    return sample(spec, fx, cfg.get("fixture", ""))


def _center(cfg: ExperimentConfig, n: int, fx=None) -> np.ndarray:
    if "center" in cfg.values:
        c = cfg.get("center", cast=_numbers)
    elif fx is not None and hasattr(fx, "metadata"):
        c = fx.metadata["singular_point"]
    else:
        c = [0.0] * n
    if len(c) != n:
        raise cfg._err("center", f"expected {n} coordinates, got {len(c)}")
    return np.asarray(c, dtype=np.float64)


def _quadratic(spec: GridSpec, A, x0) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    d = [m - c for m, c in zip(spec.mesh(), x0)]
    return 0.5 * sum(A[i, j] * d[i] * d[j] for i in range(spec.n) for j in range(spec.n))


# ---------------------------------------------------------------------------
# experiments

def exp_solve(run: Run):
    cfg = run.cfg
    fx = _fixture(cfg, "boundary")
    spec = _spec(cfg, _fixture_n(fx))
    variant = cfg.get("variant", "no_sign")
    offset = cfg.get("offset", 0.0, _number)
    g = (lambda *x: fx(*x) + offset) if offset else fx
    initial = cfg.get("initial")
    if initial == "boundary":
        initial = g
    elif initial:
        initial = _fixture(cfg, "initial")
    try:
        scfg = solver.SolverConfig(
            spec, g, variant, theta=cfg.get("theta", 0.5, _number), tol=cfg.get("tol", 1e-8, _number),
            max_outer=cfg.get("max_outer", 200, int), c_u=cfg.get("c_u", 0.2, _number),
            c_g=cfg.get("c_g", 1.0, _number), inner=cfg.get("inner", "direct"), initial=initial or None,
        )
    except solver.SolverError as exc:
        raise cfg._err("variant", str(exc)) from None
    u, rep = solver.solve(scfg)
    run.write_field("solution", u)
    run.write_json("solve_report.json", rep.to_dict())
    run.outputs["solve"] = rep.to_dict()
    run.expect("converged", "solver: converged ⇒ residual ≤ 10·τ_fix", rep.converged)
    if rep.converged and variant != "classical":
        run.expect("residual_bound", "solver: converged ⇒ residual ≤ 10·τ_fix",
                   rep.residual <= 10 * scfg.tol, rep.residual)
    if variant == "classical":
        run.expect("projection", "solver: classical solutions satisfy u ≥ −1e-10",
                   float(u.values.min()) >= -1e-10, float(u.values.min()))
        if hasattr(fx, "radial") and not offset:
            err = float(np.max(np.abs(u.values - sample(spec, fx).values)))
            run.outputs["max_error"] = err
            run.expect("error_le_5h2", "solver: classical error vs exact ≤ 5h²", err <= 5 * spec.h**2,
                       {"error": err, "h2": spec.h**2})
    A = cfg.get("identity_p")
    if A is not None:
        A = np.asarray(_numbers(A), dtype=np.float64).reshape(spec.n, spec.n)
        v = functionals.w_laplace_identity(u, A, variant=variant, c_u=scfg.c_u, c_g=scfg.c_g)
        run.write_json("identity.json", v.to_dict())
        expected = cfg.get("identity_expected", True, _bool)
        run.expect("w_laplace_identity", "functionals: wΔw = pχ{u=0} ≥ 0 (expected "
                   + ("to hold" if expected else "to fail") + ")", v.holds == expected, v.to_dict())


def _profile_setup(run: Run):
    cfg = run.cfg
    fx = _fixture(cfg)
    spec = _spec(cfg, _fixture_n(fx))
    u = _input_field(run, spec, fx)
    x0 = _center(cfg, spec.n, fx)
    meta = getattr(fx, "metadata", {})
    A = cfg.get("p_star", None, _numbers)
    if A is None:
        A = meta.get("p_star")
    if A is None:
        raise cfg._err("p_star", "fixture has no p_star; give p_star explicitly")
    A = np.asarray(A, dtype=np.float64).reshape(spec.n, spec.n)
    w = u.with_values(u.values - _quadratic(spec, A, x0), f"{u.label}-p*")
    reach = spec.evaluable_halfwidth - float(np.max(np.abs(x0)))
    r_min = cfg.get("r_min", 8 * spec.h, _number)
    r_max = min(cfg.get("r_max", 0.5, _number), reach)
    return fx, spec, u, w, x0, meta, r_min, r_max


def exp_profile(run: Run):
    cfg = run.cfg
    fx, spec, u, w, x0, meta, r_min, r_max = _profile_setup(run)
    lams = cfg.get("lambdas", [], _numbers)
    prof = functionals.profile(w, x0, r_min, r_max, lams)
    run.write_text("profile.csv", prof.to_csv())
    run.outputs["lambda_star"] = prof.lam_star
    run.outputs["confidence"] = prof.confidence
    truth = meta.get("lambda_star")
    if truth is not None:
        tol = cfg.get("lambda_tol", 0.05, _number)
        run.expect("lambda_star", "blowup: classify's λ_* matches ground truth within 0.05",
                   abs(prof.lam_star - truth) <= tol, {"measured": prof.lam_star, "truth": truth})
    if prof.radii.size >= 4:
        run.expect("phi_monotone", "functionals: Φ nondecreasing in r",
                   functionals.check_monotone(prof, "phi").monotone)


def exp_monotonicity(run: Run):
    cfg = run.cfg
    fixtures = [s.strip() for s in cfg.require("fixture").split(";") if s.strip()]
    rows = []
    for name in fixtures:
        sub = ExperimentConfig(cfg.kind, {**cfg.values, "fixture": name}, cfg.lines, cfg.source)
        tag = re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_")

        def one(sub=sub, tag=tag, name=name):
            r = Run(sub, run.out)
            r.inputs = run.inputs
            fx, spec, u, w, x0, meta, r_min, r_max = _profile_setup(r)
            lam_star = meta.get("lambda_star")
            if lam_star is None:
                lam_star = functionals.profile(w, x0, r_min, r_max).lam_star
            lams = sorted({2.0, float(lam_star), float(lam_star) + 0.5})
            prof = functionals.profile(w, x0, r_min, r_max, lams)
            run.write_text(f"profile_{tag}.csv", prof.to_csv())
            checks = [functionals.check_monotone(prof, "phi")]
            checks += [functionals.check_monotone(prof, "W", l) for l in (2.0, float(lam_star))]
            checks += [functionals.check_monotone(prof, "H", l) for l in lams if l <= lam_star + 1e-12]
            for c in checks:
                label = c.track if c.lam is None else f"{c.track}_{c.lam:g}"
                run.expect(f"{tag}:{label}", "functionals: track nondecreasing within 1e-3·scale",
                           c.monotone, c.to_dict())
            ratio = functionals.growth_ratios(prof, float(lam_star) + 0.5)
            last = ratio[: max(1, int(np.sum(prof.radii[1:] <= 10 * prof.radii[0] * (1 + 1e-12))))]
            run.expect(f"{tag}:H_divergence", "functionals: H_{λ*+½}(r/2)/H(r) ≥ 1.5 on the last decade",
                       bool(np.all(last >= 1.5)), last)
            rows.append({"fixture": name, "lambda_star": prof.lam_star, "checks": [c.to_dict() for c in checks]})

        run.guarded(f"{tag}", one)
    run.write_json("monotonicity.json", rows)


def exp_classify(run: Run):
    cfg = run.cfg
    fx = _fixture(cfg)
    spec = _spec(cfg, _fixture_n(fx))
    u = _input_field(run, spec, fx)
    x0 = _center(cfg, spec.n, fx)
    meta = getattr(fx, "metadata", {})
    if isinstance(fx, StructuredQuadratic):
        _structure_round_trip(run, fx, u, x0)
        return
    sp = blowup.classify(u, x0, r_max=cfg.get("r_max", 0.5, _number))
    run.write_text("singular_points.jsonl", blowup.singular_points_jsonl([sp]))
    run.outputs["singular_point"] = sp.to_dict()
    if "m" in meta:
        run.expect("m", "blowup: m = kernel dimension of construction", sp.m == meta["m"],
                   {"measured": sp.m, "truth": meta["m"]})
    if "sigma_plus" in meta:
        run.expect("sigma_plus", "blowup: Σ⁺ flag matches construction", sp.sigma_plus == meta["sigma_plus"])
    if meta.get("lambda_star") is not None:
        run.expect("lambda_star", "blowup: classify's λ_* matches ground truth within 0.05",
                   abs(sp.lam_star - meta["lambda_star"]) <= 0.05,
                   {"measured": sp.lam_star, "truth": meta["lambda_star"]})
    if meta.get("p_star") is not None:
        err = float(np.linalg.norm(sp.blowup.A - np.asarray(meta["p_star"])))
        run.expect("p_star", "blowup: fitted A within τ_fit of construction", err <= blowup.TAU_FIT, err)


def _structure_round_trip(run: Run, fx: StructuredQuadratic, u: ScalarField, x0):
    cfg = run.cfg
    p = blowup.BlowupPolynomial(np.asarray(fx.metadata["p_star"]))
    radius = cfg.get("radius", 0.5, _number)
    q = blowup.almgren_blowup(u, p, x0, 2.0, radius=radius)
    samples = cfg.get("samples", 10_000, int)
    ineq = blowup.monneau_inequality(q, p, samples, seed=run.cfg.seed)
    out = q.to_dict()
    out["inequality_minimum"] = ineq["minimum"]
    out["inequality_samples"] = ineq["samples"]
    out["seed"] = run.cfg.seed
    run.write_json("almgren_blowup.json", out)
    run.outputs["almgren_blowup"] = out
    run.expect("t_positive", "blowup: λ*=2 structure has t > 0", q.t > 0, q.t)
    run.expect("trace_N", "blowup: |tr N − (n−m)t| ≤ 1e-3", q.trace_gap <= blowup.TAU_STRUCT, q.trace_gap)
    run.expect("inequality", "blowup: sampled min ∫q(p*−p) ≥ −1e-6", ineq["minimum"] >= -1e-6, ineq["minimum"])


def exp_recursion(run: Run):
    cfg = run.cfg
    grid = {}
    for key in recursion.DEFAULT_GRID:
        if key in cfg.values:
            grid[key] = tuple(cfg.get(key, cast=_numbers))
    k_max = cfg.get("k_max", recursion.DEFAULT_K_MAX, int)
    extend = cfg.get("extend", 0, int)
    rows = recursion.run_suite(grid, k_max, extend)
    run.write_text("recursion.csv", recursion.suite_csv(rows))
    bad = [r.params.to_dict() for r in rows if not r.verdict.holds or (r.extended and not r.extended.holds)]
    run.outputs["grid_points"] = len(rows)
    run.outputs["vacuous_windows"] = sum(r.verdict.vacuous for r in rows)
    run.expect("bound_holds", "recursion: M_k ≤ C0 k^-β on every grid point", not bad, bad)
    slack_ok = all(min(r.params.slacks) >= 0 for r in rows)
    run.expect("slacks", "recursion: derived C0 meets every inequality", slack_ok)


def _omega(spec_text: str) -> Callable[[float], float]:
    """zero | const:c | power:C,a (C r^a) | log:C,b (C log(1/r)^-b)."""
    kind, _, rest = spec_text.partition(":")
    args = _numbers(rest) if rest else []
    if kind == "zero":
        return lambda r: 0.0
    if kind == "const":
        return lambda r: args[0]
    if kind == "power":
        return lambda r: args[0] * r ** args[1]
    if kind == "log":
        return lambda r: args[0] * math.log(1 / r) ** -args[1]
    raise ValueError(f"unknown modulus {spec_text!r}")


def exp_class_p(run: Run):
    cfg = run.cfg
    fx = _fixture(cfg)
    spec = _spec(cfg, _fixture_n(fx))
    u = _input_field(run, spec, fx)
    x0 = _center(cfg, spec.n, fx)
    omega = cfg.get("omega", _omega("power:1,0.5"), _omega)
    # "singular" restricts Γ to the fixture's singular point instead of detecting it
    gamma = [x0] if cfg.get("gamma") == "singular" else None
    rep = check_class_P(u, x0, cfg.get("eps", 0.25, _number), cfg.get("M", 10.0, _number), omega,
                        gamma_points=gamma, variant=cfg.get("variant", "no_sign"))
    run.write_json("class_p.json", rep.to_dict())
    run.outputs["class_p"] = rep.to_dict()
    if "expect_member" in cfg.values:
        want = cfg.get("expect_member", cast=_bool)
        run.expect("member", "field: class-P membership matches expectation", rep.member == want)


EXPERIMENTS = {
    "solve": exp_solve,
    "profile": exp_profile,
    "classify": exp_classify,
    "monotonicity-suite": exp_monotonicity,
    "recursion-suite": exp_recursion,
    "class-P": exp_class_p,
}


# ---------------------------------------------------------------------------

def run_config(cfg: ExperimentConfig, out: Path) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    run = Run(cfg, out)
    t0 = time.perf_counter()
    run.guarded(cfg.kind, lambda: EXPERIMENTS[cfg.kind](run))
    wall = time.perf_counter() - t0
    report = {
        "config": cfg.echo(),
        "config_dir": str(Path(cfg.source).parent.resolve()) if cfg.source else None,
        "inputs": run.inputs,
        "outputs": run.outputs,
        "artifacts": {name: _sha256(out / name) for name in sorted(set(run.artifacts))},
        "expectations": [e.to_dict() for e in run.expectations],
        "errors": run.errors,
        "passed": not run.errors and all(e.passed for e in run.expectations),
        "wall_time": wall,
    }
    (out / REPORT_NAME).write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return report


def replay(report_path, out=None, seed: int | None = None) -> dict:
    """Re-run a report's config echo and compare artifact hashes."""
    report_path = Path(report_path)
    if not report_path.exists():
        raise ManifestError([str(report_path)])
    old = json.loads(report_path.read_text())
    if "config" not in old:
        raise ConfigError("report has no config echo", source=str(report_path))
    missing = []
    for inp in old.get("inputs", []):
        p = Path(inp)
        if not p.exists():
            missing.append(str(p))
        elif p.suffix == ".json":
            try:
                payload = json.loads(p.read_text()).get("payload", p.with_suffix(".bin").name)
            except (OSError, ValueError):
                payload = p.with_suffix(".bin").name
            if not (p.parent / payload).exists():
                missing.append(str(p.parent / payload))
    if missing:
        raise ManifestError(missing)
    values = dict(old["config"])
    if seed is not None:
        values["seed"] = seed
    src = str(Path(old["config_dir"]) / "<replay>") if old.get("config_dir") else ""
    cfg = ExperimentConfig(values["kind"], values, {}, src)
    out = Path(out) if out is not None else report_path.parent / "replay"
    new = run_config(cfg, out)
    mismatched = sorted(k for k in set(old["artifacts"]) | set(new["artifacts"])
                        if old["artifacts"].get(k) != new["artifacts"].get(k))
    new["replay"] = {"source": str(report_path), "identical": not mismatched, "mismatched": mismatched,
                     "verdicts_match": [e["passed"] for e in old["expectations"]]
                     == [e["passed"] for e in new["expectations"]]}
    (out / REPORT_NAME).write_text(json.dumps(_jsonable(new), indent=2, sort_keys=True) + "\n")
    return new


def _summary(report: dict, stream=None):
    stream = sys.stdout if stream is None else stream
    for e in report["expectations"]:
        print(f"{'PASS' if e['passed'] else 'FAIL'}  {e['name']}", file=stream)
    for err in report["errors"]:
        print(f"ERROR {err}", file=stream)
    if "replay" in report:
        r = report["replay"]
        print(f"replay: artifacts {'identical' if r['identical'] else 'differ: ' + ', '.join(r['mismatched'])}",
              file=stream)
    print(f"{'passed' if report['passed'] else 'failed'} in {report['wall_time']:.2f}s", file=stream)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nosign", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", default=None, help="output directory (default: runs/<config stem>)")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--grid", type=int, default=None, help="override grid size N")
    p = sub.add_parser("replay", help="re-run a report and compare artifact hashes")
    p.add_argument("report")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg.values["seed"] = args.seed
            if args.grid is not None:
                cfg.values["N"] = args.grid
            out = Path(args.out) if args.out else Path("runs") / Path(args.config).stem
            report = run_config(cfg, out)
        else:
            report = replay(args.report, args.out, args.seed)
    except (ConfigError, ManifestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _summary(report)
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
