"""Configuration-driven runner: simulate scans, combine, fit, report.

Usage::

    noonsim --config fig3.cfg --out results/ [--quiet]
    noonsim --list-patterns noon6

``--config`` accepts a path or the name of a bundled config
(``hom.cfg``, ``fig3.cfg``, ``fig4.cfg``, ``classes6.cfg``).

Config layout (INI)::

    [run]
    circuit = noon4          # hom | noon4 | noon6
    unit = fs                # delay unit written to CSV files: fs | um
    rep_rate = 76e6
    workers = 1

    [delays]                 # fs
    min = -2000
    max = 2000
    step = 200

    [scenario two_x_two]     # one section per scenario
    kind = two_x_two         # scenario kind, "pair", or "custom" with pair_times
    sigma = 141.42           # fs
    separation = 100000      # fs
    eta = 0.1
    patterns = ABCD          # list, all-two-fold, all-four-fold or six-fold

    [analysis]
    combine_eq4 = yes
    combine_eq6 = none       # none | four_plus_two | two_by_three | both
    background = 0
    fit = yes
"""

from __future__ import annotations

import argparse
import configparser
import math
import re
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from . import circuits, experiment, source
from .experiment import ScanResult
from .fit import fit_gaussian_dip, visibility_model_free

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
REFERENCE = "reference"
SIX_METHODS = {"four_plus_two": "eq6-4+2", "two_by_three": "eq6-2x3"}


class ConfigError(Exception):
    pass


# -- pattern catalog ---------------------------------------------------------


def _group(patterns: list[str], rates: dict[str, np.ndarray], tol: float = 1e-10) -> list[list[str]]:
    groups: list[list[str]] = []
    for p in patterns:
        for g in groups:
            ref = rates[g[0]]
            if np.allclose(rates[p], ref, rtol=tol, atol=tol * float(np.max(np.abs(ref)))):
                g.append(p)
                break
        else:
            groups.append([p])
    return groups


def list_patterns(circuit: circuits.Circuit | str) -> dict[str, list[list[str]]]:
    """Two-fold, four-fold and full-fold patterns grouped into equivalence classes.

    Classes are predicted by simulating identical pairs at a few delays and
    grouping patterns whose rates coincide.
    """
    if isinstance(circuit, str):
        circuit = circuits.preset(circuit)
    labels = circuit.labels
    n = len(labels)
    probe = [0.0, 0.5 * source.DEFAULT_SIGMA, 1.3 * source.DEFAULT_SIGMA, 40 * source.DEFAULT_SIGMA]
    catalog: dict[str, list[list[str]]] = {}
    sizes = [k for k in range(2, n + 1, 2)]
    for k in sizes:
        pats = experiment.patterns_of(labels, k)
        n_pairs = k // 2
        scen = source.Scenario("custom", (0.0,) * n_pairs)
        scans = experiment.delay_scans(scen, circuit, pats, probe)
        groups = _group(pats, {p: s.rates for p, s in scans.items()})
        key = "full" if k == n else f"{k}-fold"
        catalog[key] = groups
    if n == 2:
        catalog = {"2-fold": catalog["full"], "full": catalog["full"]}
    return catalog


@lru_cache(maxsize=None)
def _catalog(name: str) -> dict[str, list[list[str]]]:
    return list_patterns(name)


# -- ideal visibilities ------------------------------------------------------

_IDEAL_CLASSES = {
    ("hom", "pair"): {"AB": 1.0},
    ("noon4", "pair"): {"AB": 1.0, "AC": 0.0},
    ("noon6", "pair"): {"AB": 1.0, "AC": 0.5, "AD": -0.5},
    ("noon6", "four_x_one"): {"ABCE": 1.0, "ABCF": 1 / 3, "ABCD": 5 / 6},
}
_IDEAL_DIRECT = {
    ("noon4", "four_x_one"): 1.0,
    ("noon4", "two_x_two"): 1 / 3,
    ("noon6", "six_x_one"): 1.0,
    ("noon6", "four_x_one_plus_two"): 3 / 5,
    ("noon6", "two_x_three"): 2 / 5,
}
_IDEAL_COMBINED = {"eq4": 1 / 3, "eq6-4+2": 3 / 5, "eq6-2x3": 2 / 5}


def ideal_visibility(circuit_name: str, kind: str, pattern: str, method: str = "direct") -> float | None:
    """Ideal-optics visibility for a report row, or ``None`` when not tabulated."""
    if method != "direct":
        return _IDEAL_COMBINED.get(method)
    pattern = experiment.normalize_pattern(pattern)
    full = circuits.preset(circuit_name).labels
    if pattern == full and (circuit_name, kind) in _IDEAL_DIRECT:
        return _IDEAL_DIRECT[(circuit_name, kind)]
    table = _IDEAL_CLASSES.get((circuit_name, kind))
    if table is None:
        return None
    for groups in _catalog(circuit_name).values():
        for g in groups:
            if pattern in g:
                for rep, v in table.items():
                    if rep in g:
                        return v
    return None


# -- config ------------------------------------------------------------------


@dataclass
class ScenarioSpec:
    name: str
    scenario: source.Scenario
    patterns: list[str]
    kind: str = ""


@dataclass
class RunConfig:
    circuit: circuits.Circuit
    delays: np.ndarray
    scenarios: list[ScenarioSpec]
    unit: str = "fs"
    rep_rate: float = experiment.R0
    workers: int = 1
    combine_eq4: bool = False
    combine_eq6: tuple[str, ...] = ()
    background: float = 0.0
    fit: bool = True
    output: str | None = None
    source_text: str = field(default="", repr=False)


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.+)\]", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if current == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return i
    return None


def _err(text: str, path: str, section: str, key: str | None, msg: str) -> ConfigError:
    line = _line_of(text, section, key)
    where = f"{path}:{line}" if line else path
    what = f"[{section}] {key}" if key else f"[{section}]"
    return ConfigError(f"{where}: {what}: {msg}")


def _expand_patterns(spec: str, circuit: circuits.Circuit) -> list[str]:
    labels = circuit.labels
    out: list[str] = []
    for tok in re.split(r"[,\s]+", spec.strip()):
        if not tok:
            continue
        if tok == "all-two-fold":
            out += experiment.patterns_of(labels, 2)
        elif tok == "all-four-fold":
            out += experiment.patterns_of(labels, 4)
        elif tok == "six-fold":
            if len(labels) != 6:
                raise ValueError(f"six-fold pattern needs a six-detector circuit, {circuit.name} has {len(labels)}")
            out.append(labels)
        elif tok == "full":
            out.append(labels)
        else:
            bad = [c for c in tok if c not in labels]
            if bad or len(set(tok)) != len(tok):
                raise ValueError(f"invalid pattern {tok!r} for circuit {circuit.name} (labels {labels})")
            out.append(tok)
    if not out:
        raise ValueError("no patterns given")
    return list(dict.fromkeys(out))


def resolve_config_path(name: str) -> Path:
    """A config file on disk, else a bundled config by name (``fig3`` or ``fig3.cfg``)."""
    p = Path(name)
    if p.exists():
        return p
    base = resources.files("noonsim") / "configs"
    for candidate in (p.name, p.name + ".cfg"):
        bundled = base / candidate
        if bundled.is_file():
            return Path(str(bundled))
    raise ConfigError(f"{name}: config file not found")


def load_config(path) -> RunConfig:
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        loc = f"{path}:{line}" if line else path
        raise ConfigError(f"{loc}: malformed config: {exc.message.splitlines()[0]}") from None

    def get(section, key, conv=str, default=None, required=False):
        if not parser.has_option(section, key):
            if required:
                raise _err(text, path, section, None, f"missing required key {key!r}")
            return default
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except ValueError as exc:
            raise _err(text, path, section, key, f"bad value {raw!r} ({exc})") from None

    def boolean(raw: str) -> bool:
        low = raw.strip().lower()
        if low in ("1", "yes", "true", "on"):
            return True
        if low in ("0", "no", "false", "off"):
            return False
        raise ValueError("expected yes/no")

    if not parser.has_section("run"):
        raise ConfigError(f"{path}: missing [run] section")
    name = get("run", "circuit", required=True).strip()
    try:
        circuit = circuits.preset(name)
    except ValueError as exc:
        raise _err(text, path, "run", "circuit", str(exc)) from None
    unit = get("run", "unit", default="fs").strip()
    if unit not in experiment.UNITS:
        raise _err(text, path, "run", "unit", f"unknown unit {unit!r} (expected fs or um)")

    if not parser.has_section("delays"):
        raise ConfigError(f"{path}: missing [delays] section")
    dmin = get("delays", "min", float, required=True)
    dmax = get("delays", "max", float, required=True)
    step = get("delays", "step", float, required=True)
    if step <= 0 or dmax < dmin:
        raise _err(text, path, "delays", "step", "need step > 0 and max >= min")
    n = int(math.floor((dmax - dmin) / step + 1e-9)) + 1
    delays = dmin + step * np.arange(n)
    delays[np.abs(delays) < 1e-9 * step] = 0.0
    far = float(np.max(np.abs(delays)))

    specs = []
    for sec in parser.sections():
        if not sec.startswith("scenario"):
            continue
        sname = sec[len("scenario"):].strip() or f"scenario{len(specs)}"
        kind = get(sec, "kind", required=True).strip()
        sigma = get(sec, "sigma", float, default=source.DEFAULT_SIGMA)
        eta = get(sec, "eta", float, default=source.DEFAULT_ETA)
        separation = get(sec, "separation", float, default=source.WELL_SEPARATED * sigma + 2 * far)
        try:
            if kind == "pair":
                scen = source.pair_scenario(sigma, eta)
            elif kind == "custom":
                times = get(sec, "pair_times", lambda s: [float(x) for x in s.split(",")], required=True)
                scen = source.Scenario("custom", times, sigma, eta)
            else:
                scen = source.scenario_build(kind, sigma, separation, eta)
        except ValueError as exc:
            raise _err(text, path, sec, "kind", str(exc)) from None
        try:
            pats = _expand_patterns(get(sec, "patterns", required=True), circuit)
        except ValueError as exc:
            raise _err(text, path, sec, "patterns", str(exc)) from None
        for p in pats:
            if (len(p) + 1) // 2 > scen.n_pairs:
                raise _err(text, path, sec, "patterns", f"pattern {p} needs {len(p) // 2} pairs; {kind} has {scen.n_pairs}")
        specs.append(ScenarioSpec(sname, scen, pats, kind))
    if not specs:
        raise ConfigError(f"{path}: no [scenario ...] sections")

    eq6_raw = get("analysis", "combine_eq6", default="none").strip() if parser.has_section("analysis") else "none"
    eq6_modes = {"none": (), "both": tuple(SIX_METHODS), **{m: (m,) for m in SIX_METHODS}}
    if eq6_raw not in eq6_modes:
        raise _err(text, path, "analysis", "combine_eq6", f"unknown mode {eq6_raw!r}")
    if eq6_modes[eq6_raw] and len(circuit.labels) != 6:
        raise _err(text, path, "analysis", "combine_eq6", f"six-fold combination needs noon6, not {name}")
    has = parser.has_section("analysis")
    background = get("analysis", "background", float, default=0.0) if has else 0.0
    if background < 0:
        raise _err(text, path, "analysis", "background", "must be non-negative")
    return RunConfig(
        circuit=circuit,
        delays=delays,
        scenarios=specs,
        unit=unit,
        rep_rate=get("run", "rep_rate", float, default=experiment.R0),
        workers=get("run", "workers", int, default=1),
        combine_eq4=get("analysis", "combine_eq4", boolean, default=False) if has else False,
        combine_eq6=eq6_modes[eq6_raw],
        background=background,
        fit=get("analysis", "fit", boolean, default=True) if has else True,
        output=get("run", "output", default=None),
        source_text=text,
    )


# -- run ---------------------------------------------------------------------


@dataclass
class ReportRow:
    scenario: str
    kind: str
    pattern: str
    method: str
    visibility: float
    fit_visibility: float | None
    baseline: float
    width: float | None
    ea: dict[str, float] = field(default_factory=dict)

    HEADER = "scenario,pattern,method,visibility,fit_visibility,baseline,width,ea_estimates"

    def csv(self) -> str:
        def num(x):
            return "" if x is None else repr(float(x))

        ea = ";".join(f"{k}={v!r}" for k, v in self.ea.items())
        return ",".join([self.scenario, self.pattern, self.method, num(self.visibility),
                         num(self.fit_visibility), num(self.baseline), num(self.width), ea])


def _analyse(scan: ScanResult, do_fit: bool) -> tuple[float, float | None, float | None]:
    vis = visibility_model_free(scan)
    if not do_fit or len(scan) < 8:
        return vis, None, None
    f = fit_gaussian_dip(scan)
    return vis, f.visibility, f.width


def run_config(cfg: RunConfig, out_dir, quiet: bool = True) -> list[ReportRow]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    circ = cfg.circuit
    rows: list[ReportRow] = []
    written: dict[str, ScanResult] = {}

    def save(name: str, scan: ScanResult) -> None:
        written[name] = scan
        scan.in_unit(cfg.unit).to_csv(out / f"{name}.csv")

    def log(msg: str) -> None:
        if not quiet:
            print(msg, flush=True)

    refs: dict[tuple[float, float], dict[str, ScanResult]] = {}

    def reference(sigma: float, eta: float, patterns: list[str]) -> dict[str, ScanResult]:
        """Reference scans: two-fold from one pair, four-fold from two coincident pairs."""
        cache = refs.setdefault((sigma, eta), {})
        todo2 = [p for p in patterns if len(p) == 2 and p not in cache]
        todo4 = [p for p in patterns if len(p) == 4 and p not in cache]
        if todo2:
            cache.update(experiment.delay_scans(source.pair_scenario(sigma, eta), circ, todo2,
                                                cfg.delays, cfg.rep_rate, cfg.workers))
        if todo4:
            four = source.scenario_build("four_x_one", sigma, 0.0, eta)
            cache.update(experiment.delay_scans(four, circ, todo4, cfg.delays, cfg.rep_rate, cfg.workers))
        return cache

    direct: list[tuple[ScenarioSpec, str, ScanResult]] = []
    for spec in cfg.scenarios:
        log(f"scanning {spec.name}: {', '.join(spec.patterns)}")
        scans = experiment.delay_scans(spec.scenario, circ, spec.patterns, cfg.delays, cfg.rep_rate, cfg.workers)
        for p, scan in scans.items():
            if cfg.background > 0 and len(p) >= 4:
                scan = experiment.subtract_background(scan, cfg.background)
            save(f"{spec.name}_{p}", scan)
            direct.append((spec, p, scan))

    quads = sorted({p for _, p, _ in direct if len(p) == 4}) if cfg.combine_eq4 else []
    combined: list[tuple[str, str, str, ScanResult, tuple[float, float]]] = []
    keys = sorted({(s.scenario.sigma, s.scenario.eta) for s in cfg.scenarios})
    for sigma, eta in keys:
        tag = REFERENCE if len(keys) == 1 else f"{REFERENCE}-sigma{sigma:g}-eta{eta:g}"
        if quads:
            ref = reference(sigma, eta, experiment.patterns_of(circ.labels, 2))
            for q in quads:
                scan = experiment.four_fold_from_pairs(ref, q, cfg.rep_rate)
                save(f"{tag}_eq4_{q}", scan)
                combined.append((tag, q, "eq4", scan, (sigma, eta)))
        for mode in cfg.combine_eq6:
            need = experiment.patterns_of(circ.labels, 2)
            if mode == "four_plus_two":
                need += experiment.patterns_of(circ.labels, 4)
            ref = reference(sigma, eta, need)
            four = {p: s for p, s in ref.items() if len(p) == 4} if mode == "four_plus_two" else None
            scan = experiment.combine_accidental_six(ref, four, cfg.rep_rate, mode, circ.labels)
            method = SIX_METHODS[mode]
            save(f"{tag}_{method}_{circ.labels}", scan)
            combined.append((tag, circ.labels, method, scan, (sigma, eta)))
    for (sigma, eta), cache in refs.items():
        tag = REFERENCE if len(keys) == 1 else f"{REFERENCE}-sigma{sigma:g}-eta{eta:g}"
        for p, scan in sorted(cache.items()):
            save(f"{tag}_{p}", scan)

    for spec, p, scan in direct:
        vis, fv, w = _analyse(scan, cfg.fit)
        row = ReportRow(spec.name, spec.kind, p, "direct", vis, fv, scan.baseline(), w)
        if p == circ.labels and len(p) == 4 and spec.scenario.n_pairs == 2:
            row.ea = _ea_estimates(spec, p, scan, combined, refs, vis)
        rows.append(row)
    for tag, p, method, scan, _ in combined:
        vis, fv, w = _analyse(scan, cfg.fit)
        rows.append(ReportRow(tag, "pair", p, method, vis, fv, scan.baseline(), w))

    (out / "report.csv").write_text("\n".join([ReportRow.HEADER] + [r.csv() for r in rows]) + "\n")
    summary = _summary(cfg, rows)
    (out / "summary.txt").write_text(summary)
    log(summary)
    return rows


def _ea_estimates(spec, pattern, scan, combined, refs, vis) -> dict[str, float]:
    sc = spec.scenario
    est = {}
    g = sc.packets()
    est["from_packets"] = experiment.ea_from_packets(g[0], g[1]).raw
    key = (sc.sigma, sc.eta)
    ref = refs.get(key, {})
    a, b = pattern[:2]
    if a + b in ref:
        v2 = visibility_model_free(ref[a + b])
        if 0 < v2 <= 1:
            try:
                est["from_visibility"] = experiment.ea_from_v4(vis, v2).raw
            except ZeroDivisionError:
                pass
    for _, q, method, comb, k in combined:
        if method == "eq4" and q == pattern and k == key:
            est["from_baseline_ratio"] = experiment.ea_from_baseline_ratio(scan.baseline(), comb.baseline()).raw
    return est


def _summary(cfg: RunConfig, rows: list[ReportRow]) -> str:
    name = cfg.circuit.name
    head = f"{'scenario':<22}{'pattern':<9}{'method':<9}{'visibility':>12}{'ideal':>10}{'diff':>11}"
    lines = [f"circuit {name}: model-free visibilities vs ideal-optics values", head, "-" * len(head)]
    for r in rows:
        ideal = ideal_visibility(name, r.kind, r.pattern, r.method)
        if ideal is None:
            tail = f"{'-':>10}{'-':>11}"
        else:
            tail = f"{ideal:>10.4f}{r.visibility - ideal:>11.2e}"
        lines.append(f"{r.scenario:<22}{r.pattern:<9}{r.method:<9}{r.visibility:>12.6f}{tail}")
        if r.ea:
            lines.append("    E/A: " + ", ".join(f"{k}={v:.6f}" for k, v in r.ea.items()))
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="noonsim", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="config file path or bundled config name")
    ap.add_argument("--out", help="output directory (overrides [run] output)")
    ap.add_argument("--quiet", action="store_true", help="suppress progress and summary output")
    ap.add_argument("--list-patterns", metavar="CIRCUIT", help="print the pattern catalog of a preset and exit")
    args = ap.parse_args(argv)

    if args.list_patterns:
        try:
            cat = list_patterns(args.list_patterns)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for key, groups in cat.items():
            print(f"{key}: {sum(len(g) for g in groups)} patterns")
            for g in groups:
                print("   ", " ".join(g))
        return EXIT_OK
    if not args.config:
        ap.print_usage(sys.stderr)
        print("error: --config is required", file=sys.stderr)
        return EXIT_CONFIG

    try:
        path = resolve_config_path(args.config)
        cfg = load_config(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg.output or f"{path.stem}_out"
    try:
        run_config(cfg, out, quiet=args.quiet)
    except (OSError, ValueError, ArithmeticError, KeyError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
