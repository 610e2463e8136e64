"""Command-line front end.

    python3 -m kitecomplexity <command> --config run.json [--out DIR] [--seed S]
                                         [--precision BITS] [--horizon N]

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 internal error.  ``--horizon`` overrides the command's own horizon
(``n_max``, ``max_N``, ``cap`` or ``k_max``).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys
import traceback
from fractions import Fraction
from typing import Dict, List, Optional

import mpmath as mp
import numpy as np

from . import __version__
from .beams import NoPeriodicInside, SplitEvent, shear_extend, trace_beam
from .bounds import (
    LABELS,
    FSourceUnresolved,
    NSource,
    RSource,
    RSourceUnresolved,
    ZeroDenominator,
    bad_set_upto,
    bound_profile,
    generic_T_bound,
    M_of_eps,
    N_theta,
    lower_bound_L,
    weakest,
)
from .complexity import ComplexityProfile, _direction_label, directional_complexity, empirical_T_table
from .config import ConfigError, RunConfig
from .diophantine import NetBudget, estimate_net_function, small_denominator_table, write_f_table
from .geometry import Direction, circle_distance
from .periodic import (
    PeriodicCatalog,
    enumerate_periodic_directions,
    phi,
    read_catalog,
    write_catalog,
)
from .svg import beam_svg, corridor_svg, kite_svg, shear_svg
from .unfolding import Unfolding, unfold_ray

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3
FILTER_DIST = 1e-4  # sampled directions this close to a periodic one are skipped
CLI_NET_BUDGET = NetBudget(max_size=8, max_animals=50_000)


class Run:
    """Output directory bookkeeping for one command."""

    def __init__(self, cmd: str, cfg: RunConfig):
        self.cmd, self.cfg = cmd, cfg
        self.files: Dict[str, str] = {}
        self.labels: Dict[str, str] = {}
        os.makedirs(cfg.out, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.cfg.out, name)

    def write(self, name: str, text: str):
        with open(self.path(name), "w", newline="") as fh:
            fh.write(text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()

    def manifest(self):
        doc = {
            "command": self.cmd,
            "config": self.cfg.to_dict(),
            "config_sha256": self.cfg.digest(),
            "versions": {
                "kitecomplexity": __version__,
                "mpmath": mp.__version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
            "source_labels": self.labels,
            "outputs": self.files,
        }
        with open(self.path(f"manifest_{self.cmd}.json"), "w") as fh:
            fh.write(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _g(x, digits: int = 12) -> str:
    return mp.nstr(mp.mpf(x), digits) if x is not None else "NA"


# ---------------------------------------------------------------------------
# cached artefacts

def load_or_build_catalog(run: Run, kite) -> PeriodicCatalog:
    cfg = run.cfg
    p = run.path("catalog.txt")
    if os.path.exists(p):
        with open(p) as fh:
            cat = read_catalog(fh.read())
        if (cat.alpha, cat.beta, cat.base_side) == (cfg.alpha, cfg.beta, cfg.base_side) \
                and cat.exhaustive_to >= cfg.cap:
            return cat
    cat = enumerate_periodic_directions(kite, cfg.cap, cap=max(cfg.cap, 14), base_side=cfg.base_side)
    run.write("catalog.txt", write_catalog(cat))
    return cat


def load_or_build_profile(run: Run, kite, n_max: int) -> ComplexityProfile:
    cfg = run.cfg
    p = run.path("complexity.json")
    key = (kite.name, _direction_label(Unfolding(kite, cfg.theta, cfg.base_side)), cfg.base_side)
    if os.path.exists(p):
        with open(p) as fh:
            prof = ComplexityProfile.from_json(fh.read())
        if (prof.kite, prof.direction, prof.base_side) == key \
                and prof.n_max >= n_max:
            return prof
    return directional_complexity(kite, cfg.theta, n_max, cfg.base_side)


# ---------------------------------------------------------------------------
# commands

def cmd_complexity(run: Run) -> int:
    cfg = run.cfg
    prof = directional_complexity(cfg.kite(), cfg.theta, cfg.n_max, cfg.base_side)
    run.write("complexity.csv", prof.to_csv())
    run.write("complexity.json", prof.to_json())
    inc = prof.increments()
    events = [{"n": n, "increment": inc[n], "new_cuts": prof.cuts[n]}
              for n in sorted(inc) if prof.cuts[n] or inc[n]]
    star = prof.stabilized_at()
    if star is not None and prof.n_max - star + 1 < max(5, prof.n_max // 4):
        star = None  # a short plateau is not evidence of boundedness
    summary = {
        "kite": prof.kite,
        "direction": prof.direction,
        "n_max": prof.n_max,
        "p_final": prof[prof.n_max],
        "stabilized_at": star,
        "touches": prof.touches,
        "increment_events": events,
    }
    run.write("complexity_summary.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    run.labels["complexity"] = "certified"
    print(f"{prof.kite} theta={prof.direction}: p({prof.n_max}) = {prof[prof.n_max]}")
    if star is not None:
        print(f"profile stabilized at n*={star}")
    return EXIT_OK


def sample_directions(kite, count: int, seed: int, catalog: PeriodicCatalog, base_side: int):
    """Seeded inward directions at least FILTER_DIST from every cataloged direction."""
    rng = np.random.default_rng(seed)
    lo, hi = (float(x) for x in kite.inward_range(base_side))
    cat_dirs = [float(x) for x in catalog.base_directions()]
    out = []
    while len(out) < count:
        th = float(rng.uniform(lo + FILTER_DIST, hi - FILTER_DIST))
        th = round(th, 12)
        if all(float(circle_distance(mp.mpf(th), mp.mpf(c))) > FILTER_DIST for c in cat_dirs):
            out.append(th)
    return out, rng


def beam_sweep(kite, thetas, rng, eps: float, beams: int, max_N: int, base_side: int):
    rows = []
    for i, th in enumerate(thetas):
        eng = Unfolding(kite, Direction.seeded(repr(th)), base_side)
        L = float(eng.side_length)
        half = eps / float(eng.incidence_sin()) / 2
        for j in range(beams):
            c = float(rng.uniform(half, L - half))
            c = round(c, 12)
            iv = (mp.mpf(repr(c)) - mp.mpf(half), mp.mpf(repr(c)) + mp.mpf(half))
            res = trace_beam(kite, None, iv, None, max_N, on_touch="closed", engine=eng)
            if isinstance(res, SplitEvent):
                rows.append([i, repr(th), repr(c), "split", res.step, f"{res.vertex[0]}:{res.vertex[1]}"])
            else:
                rows.append([i, repr(th), repr(c), "unsplit", "NA", "NA"])
    return rows


def cmd_beam(run: Run) -> int:
    cfg = run.cfg
    kite = cfg.kite()
    cat = load_or_build_catalog(run, kite)
    thetas, rng = sample_directions(kite, cfg.directions, cfg.seed, cat, cfg.base_side)
    rows = beam_sweep(kite, thetas, rng, cfg.eps, cfg.beams, cfg.max_N, cfg.base_side)
    run.write("beams.csv", _csv(["direction", "theta", "centre", "status", "step", "vertex"], rows))
    unsplit = sum(r[3] == "unsplit" for r in rows)
    run.labels["beams"] = "certified"
    print(f"{len(rows)} beams of width {cfg.eps} over {len(thetas)} directions; {unsplit} unsplit "
          f"before N={cfg.max_N}")
    return EXIT_FAIL if unsplit else EXIT_OK


def cmd_periodic(run: Run) -> int:
    cfg = run.cfg
    kite = cfg.kite()
    cat = enumerate_periodic_directions(kite, cfg.cap, cap=max(cfg.cap, 14), base_side=cfg.base_side)
    run.write("catalog.txt", write_catalog(cat))
    rows, ok = [], True
    for n in range(1, cfg.cap + 1):
        P = len({k for k in cat.classes(below=n + 1) if len(k) == n})
        bound = 4 ** (n + 1)
        ok &= P <= bound
        rows.append([n, len(cat.by_length(n)), len([e for e in cat.base_entries() if e.length == n]),
                     P, bound])
    run.write("periodic_counts.csv", _csv(["n", "entries", "base_entries", "P_n", "bound"], rows))
    run.labels["catalog"] = "certified"
    print(f"{len(cat.entries)} periodic entries up to length {cfg.cap}; "
          f"{len(cat.base_directions())} base-side directions")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_phi(run: Run) -> int:
    cfg = run.cfg
    kite = cfg.kite()
    cat = load_or_build_catalog(run, kite)
    rows = []
    for n in range(1, cfg.cap + 2):
        v = phi(kite, cfg.theta, n, cat)
        rows.append([n, _g(v.value, 20), int(v.periodic)])
    run.write("phi.csv", _csv(["n", "phi", "periodic"], rows))
    run.labels["phi"] = "certified"
    print(f"phi({cfg.cap + 1}) = {rows[-1][1]}")
    return EXIT_OK


def cmd_diophantine(run: Run) -> int:
    cfg = run.cfg
    tab = small_denominator_table(cfg.alpha, cfg.beta, cfg.k_max, prec=cfg.precision)
    rows = [[k, _g(r.value, 15), r.witness[0], r.witness[1]] for k, r in enumerate(tab, 1)]
    run.write("small_denominators.csv", _csv(["k", "N_k", "n", "m"], rows))
    ests = [estimate_net_function(cfg.alpha, cfg.beta, float(e), CLI_NET_BUDGET, raise_on_budget=False)
            for e in cfg.eps_grid]
    run.write("net_function.tsv", write_f_table(ests, cfg.alpha, cfg.beta))
    run.labels["N"] = "certified"
    run.labels["F"] = weakest(*("certified" if e.exact else "heuristic" for e in ests))
    print(f"N({cfg.k_max}) = {rows[-1][1]} at (n, m) = ({rows[-1][2]}, {rows[-1][3]})")
    return EXIT_OK


def _phi_source(kite, cfg, cat):
    def src(n):
        n = max(n, 1)
        probe = cat
        label = "certified"
        if cat.exhaustive_to < n - 1:
            probe = PeriodicCatalog(cat.alpha, cat.beta, cat.base_side, cat.n_max, n - 1, cat.entries)
            label = "heuristic"
        return phi(kite, cfg.theta, n, probe).value, label
    return src


def cmd_bounds(run: Run) -> int:
    cfg = run.cfg
    kite = cfg.kite()
    cat = load_or_build_catalog(run, kite)
    consts = cfg.constants_config()
    Fs = cfg.f_source_obj()
    Ns = NSource(cfg.alpha, cfg.beta, prec=cfg.precision)
    prof = bound_profile(cfg.eps_grid, cfg.ms, cfg.n_grid, Fs, Ns, consts,
                         phi_source=_phi_source(kite, cfg, cat), phi_label="certified")
    run.write("bounds.csv", prof.to_csv())
    run.labels.update(F=Fs.label if hasattr(Fs, "label") else "certified", N=Ns.label)
    print(f"{len(prof.rows)} bound values written")
    return EXIT_OK


def verify_rows(cfg: RunConfig, run: Optional[Run] = None) -> List[list]:
    """Rows: kind, argument, empirical, bound, label, status."""
    kite = cfg.kite()
    consts = cfg.constants_config()
    n_hi = max(cfg.n_grid)
    if run is not None:
        prof = load_or_build_profile(run, kite, n_hi)
        cat = load_or_build_catalog(run, kite)
    else:
        prof = directional_complexity(kite, cfg.theta, n_hi, cfg.base_side)
        cat = enumerate_periodic_directions(kite, cfg.cap, cap=max(cfg.cap, 14), base_side=cfg.base_side)
    T_table = empirical_T_table(kite, cfg.theta, cfg.ms, cfg.max_N, cfg.base_side)
    Fs = cfg.f_source_obj()
    Ns = NSource(cfg.alpha, cfg.beta, prec=cfg.precision)
    R = RSource(Fs, Ns)
    rows = []

    def status(holds: bool, bound: int, label: str) -> str:
        if bound == 0:
            return "VACUOUS-PASS"
        if label == "heuristic":
            return "UNVERIFIABLE"
        return "PASS" if holds else "FAIL"

    for n in cfg.n_grid:
        p = prof[n]
        L = lower_bound_L(n, R, consts)
        rows.append(["L", n, p, L.value, L.label, status(p >= L.value, L.value, L.label)])
        Nt = N_theta(n, T_table)
        rows.append(["N_theta", n, p, Nt, "certified", status(p >= Nt, Nt, "certified")])

    theta = Direction.seeded(cfg.theta).value(kite.alpha, kite.beta, 128)
    bad = bad_set_upto(cfg.cap + 1, cfg.rho, cat)
    inside = bad.contains(theta)
    for m in cfg.ms:
        T = T_table[m]
        if m < 2:
            rows.append(["generic", m, "NA" if T is None else T, "NA", "certified", "NOT-APPLICABLE"])
            continue
        try:
            M = M_of_eps(Fraction(1, m), Fs, Ns, consts)
        except (FSourceUnresolved, RSourceUnresolved, ZeroDenominator) as exc:
            rows.append(["generic", m, "NA" if T is None else T, "NA", type(exc).__name__, "UNVERIFIABLE"])
            continue
        bound = generic_T_bound(None, M, cfg.rho, consts)
        if inside:
            st = "NOT-APPLICABLE"
        elif T is None:
            st = "UNVERIFIABLE"
        else:
            st = status(T <= bound, 1, M.label)
        rows.append(["generic", m, "NA" if T is None else T, _g(bound), M.label, st])
    return rows


def cmd_verify(run: Run) -> int:
    rows = verify_rows(run.cfg, run)
    run.write("verify.csv", _csv(["kind", "argument", "empirical", "bound", "source_label", "status"], rows))
    run.labels["verify"] = weakest(*(r[4] for r in rows if r[4] in LABELS)) if rows else "certified"
    fails = [r for r in rows if r[5] == "FAIL"]
    counts: Dict[str, int] = {}
    for r in rows:
        counts[r[5]] = counts.get(r[5], 0) + 1
    print("verify: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    for r in fails:
        print(f"FAIL {r}", file=sys.stderr)
    return EXIT_FAIL if fails else EXIT_OK


def cmd_figures(run: Run) -> int:
    cfg = run.cfg
    kite = cfg.kite()
    run.write("kite.svg", kite_svg(kite))
    eng = Unfolding(kite, cfg.theta, cfg.base_side)
    L = eng.side_length
    ray = unfold_ray(kite, (cfg.base_side, L / 2), cfg.theta, min(cfg.n_max, 12))
    run.write("corridor.svg", corridor_svg(kite, ray))
    iv = (L / 2 - mp.mpf(cfg.eps) / eng.incidence_sin() / 2, L / 2 + mp.mpf(cfg.eps) / eng.incidence_sin() / 2)
    ev = trace_beam(kite, cfg.base_side, iv, cfg.theta, cfg.max_N, on_touch="closed")
    run.write("beam.svg", beam_svg(kite, ev))
    cat = load_or_build_catalog(run, kite)
    theta = eng.theta(cfg.precision)
    dirs = sorted(cat.base_directions(), key=lambda x: circle_distance(x, theta))
    for d in dirs:
        cor = ev.corridor
        L_S = cor.T
        try:
            ext = shear_extend(cor, d, L_S)
        except (NoPeriodicInside, ValueError):
            continue
        run.write("shear.svg", shear_svg(kite, ext, float(L_S), cor))
        break
    print("figures: " + ", ".join(sorted(run.files)))
    return EXIT_OK


COMMANDS = {
    "complexity": cmd_complexity,
    "beam": cmd_beam,
    "periodic": cmd_periodic,
    "phi": cmd_phi,
    "diophantine": cmd_diophantine,
    "bounds": cmd_bounds,
    "verify": cmd_verify,
    "figures": cmd_figures,
}
HORIZON_FIELD = {"complexity": "n_max", "beam": "max_N", "periodic": "cap", "phi": "cap",
                 "diophantine": "k_max", "bounds": "k_max", "verify": "max_N", "figures": "n_max"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kitecomplexity", description="Billiard complexity experiments in kites.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", metavar="PATH", help="JSON run configuration")
    ap.add_argument("--out", metavar="DIR")
    ap.add_argument("--seed", type=int, metavar="U64")
    ap.add_argument("--precision", type=int, metavar="BITS")
    ap.add_argument("--horizon", type=int, metavar="N")
    ap.add_argument("--alpha")
    ap.add_argument("--beta")
    ap.add_argument("--theta")
    return ap


def resolve_config(args) -> RunConfig:
    doc = {}
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.loads(fh.read())
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ConfigError("<root>", "config must be a JSON object")
    for key in ("alpha", "beta", "theta", "out", "seed", "precision"):
        v = getattr(args, key)
        if v is not None:
            doc[key] = v
    if args.horizon is not None:
        doc[HORIZON_FIELD[args.command]] = args.horizon
    return RunConfig.from_dict(doc)


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    run = Run(args.command, cfg)
    try:
        code = COMMANDS[args.command](run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - top-level diagnostic
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        traceback.print_exc(file=sys.stderr)
        return EXIT_INTERNAL
    run.manifest()
    return code


if __name__ == "__main__":
    sys.exit(main())
