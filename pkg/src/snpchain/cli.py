"""``snpchain`` command line: verify | spectrum | bethe | report.

Exit codes: 0 success, 1 check or match failure, 2 usage or model error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import io
import itertools
import json
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable

from .bethe import (
    BetheRoots,
    SpectralModel,
    bethe_residuals,
    check_dressing_constraints,
    check_lambda_crossing,
    dressed_eigenvalue,
    lambda0,
    num_levels,
)
from .boundary import (
    BoundarySpec,
    TwistedChain,
    check_commuting,
    check_crossing,
    check_exchange,
    check_generator_commutators,
    check_highest_weight,
    check_sdet_factorization,
    check_snp_reflection,
    check_symmetry_relation,
    k_matrix,
)
from .field import LAM, as_fraction, rf_residue
from .numeric import (
    SolverConfig,
    _cjson,
    _pmap,
    bethe_solve,
    default_samples,
    fmt_float,
    residue_at_poles,
    spectrum_match,
)
from .yangian import (
    ChainSpec,
    SpecError,
    check_comatrix,
    check_rtt,
    check_unitarity,
    check_ybe,
    qdet,
    qdet_perm_sum,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_PRESET = "n2_l2"


class UsageError(Exception):
    """Bad flags, missing inputs or an invalid model: exit code 2."""


# -- model loading ----------------------------------------------------------------

def preset_names() -> list[str]:
    folder = resources.files("snpchain") / "presets"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def _read_json(path_or_preset: str) -> dict:
    if path_or_preset in preset_names():
        text = (resources.files("snpchain") / "presets" / f"{path_or_preset}.json").read_text()
    else:
        p = Path(path_or_preset)
        if not p.is_file():
            raise UsageError(f"model file not found: {path_or_preset} (bundled presets: {', '.join(preset_names())})")
        text = p.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path_or_preset}: invalid JSON ({exc})") from exc


def _fraction_list(text: str, flag: str) -> list[Fraction]:
    try:
        return [as_fraction(x.strip()) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"{flag}: cannot parse {text!r} as rationals") from exc


def _fraction(text: str, flag: str) -> Fraction:
    vals = _fraction_list(text, flag)
    if len(vals) != 1:
        raise UsageError(f"{flag} expects a single rational")
    return vals[0]


def _sign(text: str, flag: str) -> int:
    v = _fraction(text, flag)
    if v not in (1, -1):
        raise UsageError(f"{flag} must be +1 or -1")
    return int(v)


@dataclass
class Model:
    chain: ChainSpec
    boundary: BoundarySpec
    roots: BetheRoots | None = None
    source: str = ""

    @property
    def twisted(self) -> TwistedChain:
        return TwistedChain(self.chain, self.boundary)

    @property
    def spectral(self) -> SpectralModel:
        return SpectralModel.from_chain(self.chain, self.boundary)

    def to_json(self) -> dict:
        data = {"chain": self.chain.to_json(), "boundary": self.boundary.to_json()}
        if self.roots is not None:
            data["roots"] = self.roots.to_json()
        return data


def load_model(args) -> Model:
    """Model file or preset, then flag overrides.  Raises UsageError / SpecError."""
    source = args.model
    if source is None:
        source = f"n{args.n}_l{args.sites or 1}" if args.n is not None else DEFAULT_PRESET
        if source not in preset_names():
            source = "n2_l1" if args.n == 2 else None
    if source is None:
        doc = {"chain": {"N": args.n, "sites": []}, "boundary": {"zeta": ["1"] * args.n}}
    else:
        doc = _read_json(source)
    if not isinstance(doc, dict) or "chain" not in doc or "boundary" not in doc:
        raise SpecError("model document needs 'chain' and 'boundary' objects")
    chain_doc = dict(doc["chain"])
    bnd_doc = dict(doc["boundary"])

    if args.n is not None and int(chain_doc.get("N", 0)) != args.n:
        chain_doc["N"] = args.n
        chain_doc["sites"] = [{"rep": "fundamental", "shift": s.get("shift", "0")} for s in chain_doc.get("sites", [])]
        if args.zeta is None:
            bnd_doc["zeta"] = ["1"] * args.n
    if args.hbar is not None:
        h = str(_fraction(args.hbar, "--hbar"))
        chain_doc["hbar"] = h
        bnd_doc["hbar"] = h
    if args.shifts is not None:
        shifts = _fraction_list(args.shifts, "--shifts")
        if args.sites is not None and args.sites != len(shifts):
            raise UsageError("--sites disagrees with the number of --shifts")
        chain_doc["sites"] = [{"rep": "fundamental", "shift": str(a)} for a in shifts]
    elif args.sites is not None:
        if args.sites < 0:
            raise UsageError("--sites must be >= 0")
        old = chain_doc.get("sites", [])
        if any(s.get("rep", "fundamental") != "fundamental" for s in old):
            raise UsageError("--sites only applies to fundamental chains")
        chain_doc["sites"] = [
            {"rep": "fundamental", "shift": old[k].get("shift", "0") if k < len(old) else "0"} for k in range(args.sites)
        ]
    if args.zeta is not None:
        bnd_doc["zeta"] = [str(z) for z in _fraction_list(args.zeta, "--zeta")]
    if args.theta is not None:
        bnd_doc["theta"] = _sign(args.theta, "--theta")
    if args.epsilon is not None:
        bnd_doc["epsilon"] = _sign(args.epsilon, "--epsilon")
    if args.rho is not None:
        bnd_doc["rho"] = str(_fraction(args.rho, "--rho"))

    chain = ChainSpec.from_json(chain_doc)
    boundary = BoundarySpec.from_json(bnd_doc)
    if boundary.N != chain.N:
        raise SpecError(f"boundary has {boundary.N} zeta entries but the chain has N={chain.N}")
    if boundary.hbar != chain.hbar:
        raise SpecError("chain and boundary disagree on hbar")
    roots = None
    if doc.get("roots") is not None:
        try:
            roots = BetheRoots.from_json(doc["roots"])
            roots.validate_for(chain.N)
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"bad roots: {exc}") from exc
    return Model(chain, boundary, roots, source or "flags")


# -- verify -----------------------------------------------------------------------

def _spectral_points(seed: int, count: int) -> list[Fraction]:
    rng = random.Random(seed)
    out: list[Fraction] = []
    while len(out) < count:
        v = Fraction(rng.randint(-19, 19), rng.randint(2, 13))
        if v != 0 and v not in out:
            out.append(v)
    return out


def _random_roots(model: SpectralModel, rng: random.Random) -> BetheRoots:
    m = [2 if k <= num_levels(model.N) else 0 for k in range(1, model.N)]
    levels = []
    for c in m:
        level = []
        while len(level) < c:
            v = Fraction(rng.randint(-9, 9), rng.randint(2, 7))
            if v != 0 and v not in level:
                level.append(v)
        levels.append(level)
    return BetheRoots(m, levels)


def _suite_table(model: Model, seed: int) -> dict[str, Callable[[], list[tuple[str, bool]]]]:
    chain, b = model.chain, model.boundary
    n, h = chain.N, chain.hbar
    pts = _spectral_points(seed, 6)
    tc = model.twisted
    needs_matrices = chain.has_matrices

    def ybe():
        return [(f"ybe({pts[2 * i]},{pts[2 * i + 1]})", check_ybe(n, pts[2 * i], pts[2 * i + 1], h)) for i in range(3)]

    def unitarity():
        return [(f"unitarity({p})", check_unitarity(n, p, h)) for p in pts[:3]]

    def rtt():
        return [(f"rtt({pts[0]},{pts[1]})", check_rtt(chain, pts[0], pts[1]))]

    def qdet_suite():
        try:
            ok = qdet(chain, LAM).equals(qdet_perm_sum(chain, LAM))
        except ArithmeticError:
            ok = False
        return [("qdet_projector_vs_permutation_sum", ok), ("comatrix_inverse", check_comatrix(chain, LAM))]

    def reflection():
        return [(f"reflection({pts[0]},{pts[1]})", check_snp_reflection(k_matrix(b), pts[0], pts[1], b.theta, b.rho, h))]

    def exchange():
        return [(f"exchange({pts[2]},{pts[3]})", check_exchange(tc, pts[2], pts[3]))]

    def symmetry():
        return [("symmetry_relation", check_symmetry_relation(tc))]

    def crossing():
        return [("transfer_crossing", check_crossing(tc))]

    def commuting():
        return [(f"commuting(lambda,{pts[4]})", check_commuting(tc, LAM, pts[4]))]

    def sdet():
        return sorted(check_sdet_factorization(tc).items())

    def highest_weight():
        return sorted(check_highest_weight(tc).items())

    def generators():
        res = check_generator_commutators(tc)
        return [
            ("generator_formula", all(v["formula"] for v in res.values())),
            (
                "generator_commutes_iff_equal_zeta",
                all(v["commutes"] == (b.zeta[i] == b.zeta[j]) for (i, j), v in res.items()),
            ),
        ]

    def dressing():
        sm = model.spectral
        rng = random.Random(seed)
        roots = _random_roots(sm, rng)
        out = []
        for center in ("origin", "crossing"):
            for name, ok in check_dressing_constraints(sm, roots, center).items():
                out.append((f"{name}[{center}]", ok))
            out.append((f"eigenvalue_crossing[{center}]", check_lambda_crossing(sm, roots, center)))
        return out

    def vacuum():
        sm = model.spectral
        return [("vacuum_residue_at_crossing_point", rf_residue(lambda0(sm, LAM), -h * b.rho / 2) == 0)]

    table = {
        "ybe": ybe,
        "unitarity": unitarity,
        "rtt": rtt,
        "qdet": qdet_suite,
        "reflection": reflection,
        "exchange": exchange,
        "symmetry": symmetry,
        "crossing": crossing,
        "commuting": commuting,
        "sdet": sdet,
        "highest-weight": highest_weight,
        "generators": generators,
        "dressing": dressing,
        "vacuum": vacuum,
    }
    if not needs_matrices:
        for name in ("rtt", "qdet", "exchange", "symmetry", "crossing", "commuting", "sdet", "highest-weight", "generators"):
            table.pop(name)
    return table


SUITES = (
    "ybe", "unitarity", "rtt", "qdet", "reflection", "exchange", "symmetry", "crossing",
    "commuting", "sdet", "highest-weight", "generators", "dressing", "vacuum",
)


def run_verify(model: Model, seed: int, only: list[str] | None) -> dict:
    table = _suite_table(model, seed)
    names = [s for s in SUITES if s in table]
    if only:
        unknown = [s for s in only if s not in SUITES]
        if unknown:
            raise UsageError(f"--only: unknown suite(s) {', '.join(unknown)}; choose from {', '.join(SUITES)}")
        unavailable = [s for s in only if s not in table]
        if unavailable:
            raise UsageError(f"--only: suite(s) {', '.join(unavailable)} need explicit site matrices")
        names = [s for s in names if s in only]

    def run(name):
        try:
            return [(name, check, bool(ok), "") for check, ok in table[name]()]
        except ArithmeticError as exc:
            return [(name, name, False, str(exc))]

    rows = [row for chunk in _pmap(run, names) for row in chunk]
    checks = [{"suite": s, "check": c, "pass": ok} | ({"error": e} if e else {}) for s, c, ok, e in rows]
    return {
        "command": "verify",
        "model": model.to_json(),
        "seed": seed,
        "checks": checks,
        "summary": {"total": len(checks), "passed": sum(c["pass"] for c in checks), "ok": all(c["pass"] for c in checks)},
    }


# -- spectrum / bethe ---------------------------------------------------------------

def _parse_samples(text: str | None, seed: int) -> list[complex]:
    if text is None:
        return default_samples(5, seed)
    text = text.strip()
    if text.isdigit():
        count = int(text)
        if count < 1:
            raise UsageError("--samples must be positive")
        return default_samples(count, seed)
    try:
        vals = [complex(x.strip().replace(" ", "")) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"--samples: cannot parse {text!r}") from exc
    if not vals:
        raise UsageError("--samples: empty sample list")
    return vals


def _occupations(n: int, max_m: int, given: str | None) -> list[list[int]]:
    levels = num_levels(n)
    if given is not None:
        try:
            occ = [int(x) for x in given.split(",")]
        except ValueError as exc:
            raise UsageError(f"--occupations: cannot parse {given!r}") from exc
        if len(occ) != levels or any(m < 0 for m in occ):
            raise UsageError(f"--occupations needs {levels} nonnegative integers for N={n}")
        return [occ]
    return [list(m) for m in itertools.product(range(max_m + 1), repeat=levels)]


def _solver_config(args) -> SolverConfig:
    kw = {"rng_seed": args.seed, "center": args.center}
    if args.restarts is not None:
        kw["restarts"] = args.restarts
    try:
        return SolverConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _solve_all(model: Model, args) -> tuple[list[BetheRoots], list[BetheRoots]]:
    sm = model.spectral
    max_m = args.max_m if args.max_m is not None else min(model.chain.length, 2)
    cfg = _solver_config(args)
    found, rejected = [], []
    for occ in _occupations(sm.N, max_m, args.occupations):
        found += bethe_solve(sm, occ, cfg)
        rejected += bethe_solve.last_rejected
    return found, rejected


def run_spectrum(model: Model, args) -> dict:
    if not model.chain.has_matrices:
        raise UsageError("spectrum needs a chain with explicit site matrices (fundamental sites)")
    samples = _parse_samples(args.samples, args.seed)
    if model.roots is not None:
        solutions, singular = [model.roots], []
    else:
        solutions, singular = _solve_all(model, args)
    rep = spectrum_match(model.spectral, model.twisted, samples, solutions, tol=args.tol, center=args.center)
    data = rep.to_json()
    data = {"command": "spectrum", "model": model.to_json(), "seed": args.seed} | {k: v for k, v in data.items() if k != "model"}
    data["solutions"] = [s.to_json() for s in solutions]
    data["singular_rejected"] = [s.to_json() for s in singular]
    if not rep.ok and rep.rejected:
        best = min(rep.rejected, key=lambda r: float(r.get("max_rel_mismatch", "inf")))
        data["notes"].append(f"closest unmatched root set misses by relative {best.get('max_rel_mismatch', 'inf')}")
    return data


def _root_diagnostics(sm: SpectralModel, roots: BetheRoots, center: str) -> dict:
    try:
        res = [abs(complex(r)) for r in bethe_residuals(sm, roots, center)]
    except (ZeroDivisionError, ArithmeticError):
        res = [float("inf")]
    pole = [abs(r) for r in residue_at_poles(sm, roots, center)]
    return {
        "roots": roots.to_json(),
        "max_residual": fmt_float(max(res, default=0.0)),
        "max_pole_residue": fmt_float(max(pole, default=0.0)),
    }


def run_bethe(model: Model, args) -> dict:
    sm = model.spectral
    if model.roots is not None:
        sols = [model.roots]
        singular: list[BetheRoots] = []
    else:
        sols, singular = _solve_all(model, args)
    rows = [_root_diagnostics(sm, s, args.center) for s in sols]
    if model.roots is not None:
        ok = all(float(r["max_residual"]) <= args.tol for r in rows)
    else:
        ok = True
    sample = _parse_samples(args.samples, args.seed)[0]
    for r, s in zip(rows, sols):
        r["lambda_at_sample"] = _cjson(complex(dressed_eigenvalue(sm, s, sample, args.center)))
    return {
        "command": "bethe",
        "model": model.to_json(),
        "seed": args.seed,
        "center": args.center,
        "sample": _cjson(sample),
        "solutions": rows,
        "singular_rejected": [s.to_json() for s in singular],
        "summary": {"solutions": len(rows), "ok": ok},
    }


# -- report -------------------------------------------------------------------------

def _c(z: dict) -> str:
    return f"{z['re']}\t{z['im']}"


def _roots_text(r: dict) -> str:
    levels = r.get("roots", [])
    return "; ".join(",".join(f"{z['re']}{'+' if not z['im'].startswith('-') else ''}{z['im']}j" for z in lv) for lv in levels) or "-"


def tables_for(doc: dict, name: str) -> list[tuple[str, list[str], list[list[str]]]]:
    """(title, header, rows) tables describing one report document."""
    cmd = doc.get("command")
    if cmd == "verify":
        rows = [[name, c["suite"], c["check"], "pass" if c["pass"] else "FAIL"] for c in doc["checks"]]
        return [("checks", ["model", "suite", "check", "result"], rows)]
    if cmd == "spectrum":
        ev_rows = []
        for s, (z, evs) in enumerate(zip(doc["samples"], doc["eigenvalues"])):
            for e in evs:
                ev_rows.append([name, str(s), z["re"], z["im"], e["re"], e["im"]])
        root_rows = [
            [name, _roots_text(m["roots"]), m["max_rel_mismatch"], str(m["cluster_size"])] for m in doc.get("matched", [])
        ]
        return [
            ("eigenvalues", ["model", "sample", "lambda_re", "lambda_im", "eig_re", "eig_im"], ev_rows),
            ("matched_roots", ["model", "roots", "max_rel_mismatch", "cluster_size"], root_rows),
        ]
    if cmd == "bethe":
        rows = [[name, _roots_text(r["roots"]), r["max_residual"], r["max_pole_residue"]] for r in doc["solutions"]]
        return [("roots", ["model", "roots", "max_residual", "max_pole_residue"], rows)]
    raise UsageError(f"{name}: not a snpchain report (command={cmd!r})")


def summary_row(doc: dict, name: str) -> list[str]:
    model = doc.get("model", {})
    chain = model.get("chain", {})
    bnd = model.get("boundary", {})
    s = doc.get("summary", {})
    if doc.get("command") == "spectrum":
        detail = f"{s.get('matched')}/{doc.get('dimension')} matched"
    elif doc.get("command") == "verify":
        detail = f"{s.get('passed')}/{s.get('total')} passed"
    else:
        detail = f"{s.get('solutions')} solutions"
    return [name, str(doc.get("command")), str(chain.get("N")), str(len(chain.get("sites", []))), str(bnd.get("rho")), detail, "ok" if s.get("ok") else "FAIL"]


def render(tables: list[tuple[str, list[str], list[list[str]]]], fmt: str) -> str:
    out = io.StringIO()
    for title, header, rows in tables:
        if fmt == "md":
            out.write(f"### {title}\n\n| " + " | ".join(header) + " |\n|" + "---|" * len(header) + "\n")
            for r in rows:
                out.write("| " + " | ".join(r) + " |\n")
            out.write("\n")
        else:
            out.write(f"# {title}\n" + "\t".join(header) + "\n")
            for r in rows:
                out.write("\t".join(r) + "\n")
    return out.getvalue()


def run_report(paths: list[str], fmt: str) -> str:
    if not paths:
        raise UsageError("report needs at least one JSON report file")
    docs = []
    for p in paths:
        path = Path(p)
        if not path.is_file():
            raise UsageError(f"report input not found: {p}")
        text = path.read_text().strip()
        if not text:
            raise UsageError(f"report input is empty: {p}")
        try:
            docs.append((path.stem, json.loads(text)))
        except json.JSONDecodeError as exc:
            raise UsageError(f"{p}: invalid JSON ({exc})") from exc
    tables = [("summary", ["model", "command", "N", "sites", "rho", "result", "status"], [summary_row(d, n) for n, d in docs])]
    for n, d in docs:
        tables += tables_for(d, n)
    return render(tables, "md" if fmt == "md" else "tsv")


# -- entry point ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="snpchain", description="Open spin chains with soliton non-preserving boundaries.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--model", help=f"model JSON file or bundled preset ({', '.join(preset_names())})")
        sp.add_argument("--n", type=int, help="rank N")
        sp.add_argument("--sites", type=int, help="number of fundamental sites")
        sp.add_argument("--hbar")
        sp.add_argument("--rho")
        sp.add_argument("--theta")
        sp.add_argument("--epsilon")
        sp.add_argument("--zeta", help="comma-separated zeta_1..zeta_N")
        sp.add_argument("--shifts", help="comma-separated inhomogeneities, one per site")
        sp.add_argument("--samples", help="sample count or comma-separated complex samples")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=1e-8)
        sp.add_argument("--only", help="comma-separated verify suites")
        sp.add_argument("--center", choices=("crossing", "origin"), default="crossing", help="dressing convention")
        sp.add_argument("--max-m", type=int, dest="max_m", help="largest occupation per level")
        sp.add_argument("--occupations", help="comma-separated occupations, one per level")
        sp.add_argument("--restarts", type=int)
        sp.add_argument("--format", choices=("json", "tsv", "md"), default="json")
        sp.add_argument("--output", "-o")
        sp.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")

    for name in ("verify", "spectrum", "bethe"):
        common(sub.add_parser(name))
    rp = sub.add_parser("report")
    rp.add_argument("inputs", nargs="*", help="JSON reports from verify/spectrum/bethe")
    rp.add_argument("--model", help="alias for a single input file")
    rp.add_argument("--format", choices=("tsv", "md"), default="tsv")
    rp.add_argument("--output", "-o")
    return p


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _print_lines(doc: dict) -> None:
    # one status line per check on stderr, so stdout stays machine-readable
    if doc["command"] == "verify":
        for c in doc["checks"]:
            print(f"{'PASS' if c['pass'] else 'FAIL'} {c['suite']}: {c['check']}", file=sys.stderr)
    s = doc.get("summary", {})
    print("summary: " + ", ".join(f"{k}={v}" for k, v in s.items()), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "report":
            paths = list(args.inputs) + ([args.model] if args.model else [])
            _emit(run_report(paths, args.format), args.output)
            return EXIT_OK
        if args.only and args.command != "verify":
            raise UsageError("--only applies to verify")
        if not args.tol > 0:
            raise UsageError("--tol must be positive")
        model = load_model(args)
        if args.command == "verify":
            doc = run_verify(model, args.seed, [s.strip() for s in args.only.split(",")] if args.only else None)
        elif args.command == "spectrum":
            doc = run_spectrum(model, args)
        else:
            doc = run_bethe(model, args)
    except (UsageError, SpecError) as exc:
        print(f"snpchain: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not args.no_timestamp:
        doc["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    if args.format == "json":
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = render(tables_for(doc, model.source), args.format)
    _emit(text, args.output)
    _print_lines(doc)
    return EXIT_OK if doc["summary"]["ok"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
