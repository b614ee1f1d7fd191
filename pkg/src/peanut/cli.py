"""Command-line front end.

    peanut eigen   --k 0.6 --nu -0.5,0.5,1.5 --n-max 10
    peanut verify  {addition,integral,inteq1,inteq2,limit-k0,limit-k1,expansion,multipole}
    peanut mesh    --k 0.5 --s0 1.7 --output peanut
    peanut lines   --k 0.7071067811865476
    peanut cache   {info,clear}

Exit codes: 0 success, 1 verification failure, 2 numeric or solver error,
3 usage error.  Settings come from defaults, then a key=value config file,
then flags.  PEANUT_CACHE overrides the eigenvalue cache path.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import re
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import flatring, harmonics, lame, limits
from .elliptic import EllipticDomainError, Modulus
from .flatring import CartesianPoint, FlatRingCoords

log = logging.getLogger("peanut")

EXIT_OK, EXIT_FAIL, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2, 3
DEFAULT_CACHE = Path.home() / ".cache" / "peanut" / "eigen.json"
SUITES = ("addition", "integral", "inteq1", "inteq2", "limit-k0", "limit-k1", "expansion",
          "multipole")

# settings shared by all commands, with their defaults
DEFAULTS = {
    "format": "json",
    "output": None,
    "cache": None,
    "parallelism": 1,
    "k": None,
    "nu": None,
    "n_max": None,
    "m": None,
    "n": None,
    "m_max": 12,
    "nodes": 64,
    "pairs": 0,
    "seed": 0,
    "s0": 1.7,
    "n_t": 64,
    "n_phi": 96,
    "npts": 400,
}

NUMERIC_ERRORS = (lame.LameError, ArithmeticError, FloatingPointError, OverflowError,
                  flatring.ConvergenceError)
USAGE_ERRORS = (harmonics.PreconditionError, flatring.DomainError, EllipticDomainError, ValueError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        # let number lists such as -0.5,0.5 through as values
        self._negative_number_matcher = re.compile(r"^-[\d.][\d.,]*$")

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- parsing helpers -------------------------------------------------------------


def parse_int_range(text: str | None) -> list[int] | None:
    """'0..3' or '0,2,5' or '4'."""
    if text is None:
        return None
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad integer range {text!r}") from exc


def parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def read_config_file(path) -> dict:
    """Simple key=value lines; '#' starts a comment; keys use - or _."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, val = (x.strip() for x in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = val
    return out


def effective_config(args: argparse.Namespace) -> dict:
    """defaults < config file < flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config_file(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    if getattr(args, "suite", None):
        cfg["suite"] = args.suite
    if getattr(args, "action", None):
        cfg["action"] = args.action
    env = os.environ.get("PEANUT_CACHE")
    cfg["cache"] = env or cfg["cache"] or str(DEFAULT_CACHE)
    for key in ("parallelism", "m_max", "nodes", "pairs", "seed", "n_t", "n_phi", "npts"):
        try:
            cfg[key] = int(cfg[key])
        except (TypeError, ValueError) as exc:
            raise UsageError(f"{key} must be an integer") from exc
    for key in ("k", "s0"):
        if cfg[key] is not None:
            try:
                cfg[key] = float(cfg[key])
            except ValueError as exc:
                raise UsageError(f"{key} must be a number") from exc
    if cfg["n_max"] is not None:
        cfg["n_max"] = int(cfg["n_max"])
    if cfg["parallelism"] < 1:
        raise UsageError("parallelism must be >= 1")
    if cfg["format"] not in ("json", "csv", "obj"):
        raise UsageError("format must be json, csv or obj")
    if cfg["k"] is not None and not 0.0 < cfg["k"] < 1.0:
        raise UsageError("k must lie in (0, 1)")
    return cfg


def config_header(cfg: dict) -> str:
    # parallelism is left out so the output bytes do not depend on it
    shown = {k: v for k, v in sorted(cfg.items()) if k != "parallelism"}
    return "peanut " + json.dumps(shown, sort_keys=True)


# -- task execution ------------------------------------------------------------


def _init_worker(cache_path):
    warnings.simplefilter("ignore")
    lame.set_cache(lame.EigenCache(cache_path) if cache_path else None)


def _call(job):
    fn, kwargs = job
    cache = lame._CACHE
    if cache is None:
        return fn(**kwargs), [], 0, 0
    before, hits, misses = set(cache.records), cache.hits, cache.misses
    result = fn(**kwargs)
    fresh = [cache.records[k] for k in cache.records if k not in before]
    return result, fresh, cache.hits - hits, cache.misses - misses


def run_jobs(jobs, parallelism: int, cache_path) -> list:
    """Run (fn, kwargs) jobs, returning results in submission order."""
    if parallelism <= 1 or len(jobs) <= 1:
        return [fn(**kw) for fn, kw in jobs]
    with ProcessPoolExecutor(max_workers=parallelism, initializer=_init_worker,
                             initargs=(cache_path,)) as pool:
        out = list(pool.map(_call, jobs))
    cache = lame._CACHE
    if cache is not None:
        for _, fresh, hits, misses in out:
            for rec in fresh:
                cache.put(rec)
            cache.hits += hits
            cache.misses += misses
    return [r[0] for r in out]


# -- eigen ---------------------------------------------------------------------


def _eigen_row(nu: float, n: int, kappa: float) -> dict:
    mode = lame.get_mode(nu, n, kappa)
    lo, hi = lame.lemma_bracket(nu, n, Modulus(kappa))
    return {"nu": nu, "n": n, "kappa": kappa, "lambda": mode.lam, "lower_bound": lo,
            "upper_bound": hi, "in_bracket": bool(lo <= mode.lam <= hi)}


def cmd_eigen(cfg: dict, out) -> int:
    if cfg["k"] is None:
        raise UsageError("eigen needs --k")
    n_max = 10 if cfg["n_max"] is None else cfg["n_max"]
    kappa = Modulus(cfg["k"]).k_prime
    nus = parse_floats(cfg["nu"] or "-0.5,0.5,1.5")
    if any(nu < -0.5 for nu in nus) or n_max < 0:
        raise UsageError("need nu >= -1/2 and n-max >= 0")
    jobs = [(_eigen_row, dict(nu=nu, n=n, kappa=kappa)) for nu in nus for n in range(n_max + 1)]
    rows = run_jobs(jobs, cfg["parallelism"], cfg["cache"])
    fields = ["nu", "n", "kappa", "lambda", "lower_bound", "upper_bound", "in_bracket"]
    out.write(f"# {config_header(cfg)}\n")
    if cfg["format"] == "csv":
        w = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    else:
        for r in rows:
            out.write(json.dumps(r) + "\n")
    return EXIT_OK if all(r["in_bracket"] for r in rows) else EXIT_FAIL


# -- verify --------------------------------------------------------------------


def _report(fn, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = fn(**kw)
    return rep.to_json(), bool(rep.passed)


def _expansion_job(k, s, t, phi, s_star, t_star, phi_star, m_max, n_max):
    mod = Modulus(k)
    c = FlatRingCoords(s, t, phi, mod)
    c2 = FlatRingCoords(s_star, t_star, phi_star, mod)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, used, tail = harmonics.expand_inverse_distance(
            c, c2, harmonics.TruncationSpec(m_max, n_max, 1e-12))
    p = flatring.to_cartesian(c).as_array()
    p2 = flatring.to_cartesian(c2).as_array()
    direct = 1.0 / float(np.linalg.norm(p - p2))
    chi = float(harmonics.chi(s, t, s_star, t_star, mod))
    rep = limits.VerificationReport("expansion", dict(k=k, s=s, t=t, phi=phi, s_star=s_star,
                                                      t_star=t_star, phi_star=phi_star,
                                                      m_max=m_max, n_max=n_max, chi=chi),
                                    direct, val, 1e-6, nodes_used=used,
                                    notes={"tail_estimate": tail})
    return rep.to_json(), bool(rep.passed)


def _multipole_job(seed, ratio, n_max):
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(2, 3))
    u /= np.linalg.norm(u, axis=1)[:, None]
    r_star = 1.0 + rng.random()
    p = CartesianPoint(*(ratio * r_star * u[0]))
    q = CartesianPoint(*(r_star * u[1]))
    direct = 1.0 / float(np.linalg.norm(p.as_array() - q.as_array()))
    series = limits.spherical_multipole(p, q, harmonics.TruncationSpec(n_max, n_max))
    laplace = limits.laplace_sum(p, q, n_max)
    rep = limits.VerificationReport("multipole", dict(seed=seed, ratio=ratio, n_max=n_max),
                                    direct, series, 1e-9, notes={"laplace_form": laplace})
    return rep.to_json(), bool(rep.passed)


def _verify_jobs(cfg: dict) -> list:
    suite = cfg["suite"]
    ms, ns = parse_int_range(cfg["m"]), parse_int_range(cfg["n"])
    jobs = []
    if suite == "addition":
        k = cfg["k"] or 0.7
        mod = Modulus(k)
        n_max = 40 if cfg["n_max"] is None else cfg["n_max"]
        for m in ms or range(4):
            jobs.append((_report, dict(fn=limits.check_addition_theorem, m=m, s=0.8 * mod.big_k,
                                       t=0.2 * mod.big_k_prime, s_star=1.5 * mod.big_k,
                                       t_star=-0.4 * mod.big_k_prime, k=k, n_max=n_max)))
    elif suite == "integral":
        k = cfg["k"] or 0.7
        mod = Modulus(k)
        for m in ms or range(3):
            for n in ns or range(4):
                jobs.append((_report, dict(fn=limits.check_integral_relation, m=m, n=n,
                                           s=0.8 * mod.big_k, s_star=1.5 * mod.big_k,
                                           t_star=0.3 * mod.big_k_prime, k=k,
                                           nodes=cfg["nodes"])))
    elif suite == "inteq1":
        k = cfg["k"] or 0.6
        mod = Modulus(k)
        for nu in parse_floats(cfg["nu"]) if cfg["nu"] else [0.5]:
            for n in ns or [1]:
                for s1 in (0.4, -0.4):
                    jobs.append((_report, dict(fn=limits.check_inteq1, nu=nu, n=n,
                                               s0=1.3 * mod.big_k, s1=s1 * mod.big_k,
                                               t0=0.2 * mod.big_k_prime, k=k,
                                               nodes=cfg["nodes"])))
    elif suite == "inteq2":
        k = cfg["k"] or 0.6
        mod = Modulus(k)
        if cfg["nu"] or ns:
            pairs = [(nu, n) for nu in parse_floats(cfg["nu"]) for n in (ns or [0])]
        else:
            pairs = [(0.5, 0), (0.5, 1), (1.5, 0)]
        for nu, n in pairs:
            jobs.append((_report, dict(fn=limits.check_inteq2, nu=nu, n=n,
                                       t0=0.25 * mod.big_k_prime, k=k, nodes=cfg["nodes"])))
    elif suite == "limit-k0":
        nus = parse_floats(cfg["nu"]) if cfg["nu"] else [0.5, 1.5]
        for nu in nus:
            for n in ns or [0, 1, 2]:
                for fn in (limits.limit_w_gegenbauer, limits.limit_eigenvalue,
                           limits.limit_w_exponential):
                    jobs.append((_report, dict(fn=fn, nu=nu, n=n)))
    elif suite == "limit-k1":
        for m in ms or [0, 1]:
            for n in ns or [0, 1, 2]:
                jobs.append((_report, dict(fn=limits.check_amn_to_bmn, m=m, n=n, sigma=-0.3,
                                           sigma_star=0.4, tau=1.1, tau_star=1.9)))
        jobs.append((_report, dict(fn=limits.limit_coordinates_k1, sigma=-0.3, tau=1.1, phi=0.4)))
        jobs.append((_report, dict(fn=limits.limit_cyl_radius_k1, sigma=0.4, tau=1.9)))
    elif suite == "expansion":
        k = cfg["k"] or 0.8
        mod = Modulus(k)
        n_max = 25 if cfg["n_max"] is None else cfg["n_max"]
        pts = [(0.9, 0.3, 0.4, 1.4, -0.2, 2.1)]
        rng = np.random.default_rng(cfg["seed"])
        while len(pts) < 1 + cfg["pairs"]:
            a, b = np.sort(rng.uniform(0.05, 1.95, 2))
            t1, t2 = rng.uniform(-0.95, 0.95, 2)
            f1, f2 = rng.uniform(-math.pi, math.pi, 2)
            if b - a > 1e-3:
                pts.append((a, t1, f1, b, t2, f2))
        for a, t1, f1, b, t2, f2 in pts:
            jobs.append((_expansion_job, dict(k=k, s=a * mod.big_k, t=t1 * mod.big_k_prime,
                                              phi=f1, s_star=b * mod.big_k,
                                              t_star=t2 * mod.big_k_prime, phi_star=f2,
                                              m_max=cfg["m_max"], n_max=n_max)))
    elif suite == "multipole":
        n_max = 40 if cfg["n_max"] is None else cfg["n_max"]
        for seed in range(cfg["seed"], cfg["seed"] + max(1, cfg["pairs"])):
            jobs.append((_multipole_job, dict(seed=seed, ratio=0.5, n_max=n_max)))
    return jobs


def cmd_verify(cfg: dict, out) -> int:
    jobs = _verify_jobs(cfg)
    results = run_jobs(jobs, cfg["parallelism"], cfg["cache"])
    out.write(json.dumps({"header": config_header(cfg)}) + "\n")
    for line, _ in results:
        out.write(line + "\n")
    return EXIT_OK if all(ok for _, ok in results) else EXIT_FAIL


# -- mesh and lines ----------------------------------------------------------


def cmd_mesh(cfg: dict, out) -> int:
    k = cfg["k"] or 0.5
    mod = Modulus(k)
    s0 = cfg["s0"] * mod.big_k
    verts, faces, params = flatring.surface_mesh(mod, s0, cfg["n_t"], cfg["n_phi"])
    header = config_header(cfg)
    stem = cfg["output"]
    if stem is None:
        if cfg["format"] == "csv":
            _mesh_csv(out, verts, params, header)
        else:
            _mesh_obj(out, verts, faces, header)
        return EXIT_OK
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    flatring.write_obj(stem.with_suffix(".obj"), verts, faces, header)
    flatring.write_mesh_csv(stem.with_suffix(".csv"), verts, params, header)
    return EXIT_OK


def _mesh_obj(out, verts, faces, header):
    buf = io.StringIO()
    for line in header.splitlines():
        buf.write(f"# {line}\n")
    for v in verts:
        buf.write(f"v {v[0]:.12g} {v[1]:.12g} {v[2]:.12g}\n")
    for f in faces:
        buf.write("f " + " ".join(str(i + 1) for i in f) + "\n")
    out.write(buf.getvalue())


def _mesh_csv(out, verts, params, header):
    out.write(f"# {header}\ns0,t,phi,x,y,z\n")
    for (s0, t, phi), v in zip(params, verts):
        out.write(f"{s0:.12g},{t:.12g},{phi:.12g},{v[0]:.12g},{v[1]:.12g},{v[2]:.12g}\n")


def cmd_lines(cfg: dict, out) -> int:
    k = cfg["k"] or 2.0 ** -0.5
    lines = flatring.coordinate_lines(k, npts=cfg["npts"])
    out.write(f"# {config_header(cfg)}\nfamily,value,index,R,z\n")
    for family, value, r, z in lines:
        for i, (ri, zi) in enumerate(zip(r, z)):
            out.write(f"{family},{value:.12g},{i},{ri:.12g},{zi:.12g}\n")
    return EXIT_OK


# -- cache ---------------------------------------------------------------------


def cmd_cache(cfg: dict, out) -> int:
    path = Path(cfg["cache"])
    if cfg["action"] == "clear":
        if path.exists():
            path.unlink()
        out.write(f"cleared {path}\n")
        return EXIT_OK
    cache = lame.EigenCache(path)
    out.write(json.dumps({"path": str(path), "entries": len(cache.records),
                          "solver_version": lame.SOLVER_VERSION}) + "\n")
    return EXIT_OK


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value settings file")
    common.add_argument("--format", choices=["json", "csv", "obj"])
    common.add_argument("--output", help="output file (or file stem for mesh)")
    common.add_argument("--cache", help="eigenvalue cache file")
    common.add_argument("--parallelism", type=int, help="worker processes")
    common.add_argument("--k", help="coordinate modulus in (0, 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="peanut", description="Peanut harmonics in flat-ring cyclide coordinates")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("eigen", parents=[common], help="table of Lamé-Wangerin eigenvalues")
    e.add_argument("--nu", help="comma-separated orders")
    e.add_argument("--n-max", dest="n_max", type=int)

    v = sub.add_parser("verify", parents=[common], help="run an identity or limit suite")
    v.add_argument("suite", choices=SUITES)
    v.add_argument("--m", help="azimuthal indices, e.g. 0..3")
    v.add_argument("--n", help="degree indices, e.g. 0..3")
    v.add_argument("--nu", help="comma-separated orders")
    v.add_argument("--n-max", dest="n_max", type=int)
    v.add_argument("--m-max", dest="m_max", type=int)
    v.add_argument("--nodes", type=int, help="Gauss-Jacobi nodes")
    v.add_argument("--pairs", type=int, help="extra random point pairs")
    v.add_argument("--seed", type=int)

    m = sub.add_parser("mesh", parents=[common], help="mesh of a peanut surface s = s0 K")
    m.add_argument("--s0", type=float, help="s0 as a multiple of K")
    m.add_argument("--n-t", dest="n_t", type=int)
    m.add_argument("--n-phi", dest="n_phi", type=int)

    ln = sub.add_parser("lines", parents=[common], help="coordinate line polylines")
    ln.add_argument("--npts", type=int)

    c = sub.add_parser("cache", parents=[common], help="inspect or clear the eigenvalue cache")
    c.add_argument("action", choices=["info", "clear"])
    return p


COMMANDS = {"eigen": cmd_eigen, "verify": cmd_verify, "mesh": cmd_mesh, "lines": cmd_lines,
            "cache": cmd_cache}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = effective_config(args)
    except (UsageError, OSError) as exc:
        print(f"peanut: {exc}", file=sys.stderr)
        return EXIT_USAGE
    cache = lame.EigenCache(cfg["cache"]) if args.command in ("eigen", "verify") else None
    lame.set_cache(cache)
    to_file = cfg["output"] is not None and args.command != "mesh"
    out = open(cfg["output"], "w") if to_file else sys.stdout
    try:
        code = COMMANDS[args.command](cfg, out)
    except UsageError as exc:
        print(f"peanut: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"peanut: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except USAGE_ERRORS as exc:
        print(f"peanut: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if to_file:
            out.close()
        if cache is not None:
            cache.save()
            log.info("cache %s: %d hits, %d misses", cache.path, cache.hits, cache.misses)
            print(f"# cache hits={cache.hits} misses={cache.misses}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
