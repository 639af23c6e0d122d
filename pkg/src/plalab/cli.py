"""Command-line driver: run one job from a config file and write its artifacts.

Each subcommand reads the config section of the same name (``key = value``
lines); every numeric parameter has an explicit default and the fully resolved
parameters head each report.  A run writes into ``--out``:

* ``manifest.txt``  job name and resolved parameters (what ``verify`` re-reads)
* ``report.txt``    resolved parameters followed by the certificate
* ``summary.json``  machine-readable results
* coefficient and function files for every object produced

Exit status: 0 on success, 1 when a certificate clause fails or a construction
is infeasible (the failing clause is named on stderr), 2 on configuration
errors.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import io
from .constructors import (
    Construction,
    certify_indicator,
    certify_pq,
    certify_step,
    indicator_polynomial,
    pq_pair,
    step_polynomial,
)
from .decompose import (
    DecompositionReport,
    RoundRecord,
    menshov_decompose,
    pla_decompose,
    verify_round,
)
from .density import approximation_error, modulated_average, tail_bound
from .errors import ConfigError, PlalabError, RoundInfeasible
from .sampling import Arc
from .synth import (
    FlatContract,
    SynthesisProblem,
    synth_flat_analytic,
    synth_flat_bilateral,
    verify_flat_contract,
)
from .trigpoly import Certificate, SpecialProduct, sup_norm, u_norm

STRICT_FRACTION = 0.5

# name -> (type, default); None means "not set".
SCHEMA = {
    "synth": {
        "kind": (str, "analytic"),
        "eps": (float, 0.5),
        "tau": (float, None),
        "mu": (float, None),
        "eta": (float, None),
        "gamma": (float, 0.5),
        "delta": (float, 0.5),
        "C_target": (float, 4.0),
        "budget": (int, 4096),
        "method": (str, "compose"),
        "exceptional": (str, "arc"),
        "max_iters": (int, 2000),
        "seed": (int, 0),
        "slack": (float, 0.0),
    },
    "indicator": {
        "start": (float, 0.0),
        "length": (float, float(np.pi / 2)),
        "delta": (float, 0.25),
        "budget": (int, 1 << 16),
        "grid": (int, 8192),
        "seed": (int, 0),
        "slack": (float, 0.0),
    },
    "steppoly": {
        "step": (str, "bundled:half"),
        "delta": (float, 0.25),
        "budget": (int, 1 << 18),
        "grid": (int, 4096),
        "seed": (int, 0),
        "slack": (float, 0.0),
    },
    "pqpair": {
        "psi": (str, "bundled:half"),
        "a": (float, 0.125),
        "delta": (float, 0.25),
        "budget": (int, 1 << 18),
        "grid": (int, 4096),
        "seed": (int, 0),
        "slack": (float, 0.0),
    },
    "decompose": {
        "target": (str, "bundled:half"),
        "eps": (float, 0.25),
        "rounds": (int, 4),
        "budget": (int, 1 << 18),
        "grid": (int, 4096),
        "seed": (int, 0),
        "slack": (float, 0.0),
    },
    "menshov": {
        "target": (str, "bundled:half"),
        "eps": (float, 0.25),
        "gamma": (float, 0.5),
        "C_target": (float, 4.0),
        "rounds": (int, 3),
        "budget": (int, 1 << 18),
        "flat_budget": (int, 1024),
        "grid": (int, 4096),
        "seed": (int, 0),
        "slack": (float, 0.0),
    },
    "density-demo": {
        "coefficients": (str, "bundled:density"),
        "s": (int, -3),
        "N": (str, "8,16,32,64"),
        "seed": (int, 0),
        "slack": (float, 0.0),
    },
}


# ----------------------------------------------------------------------
# configuration


def _convert(job: str, key: str, raw: str):
    kind = SCHEMA[job][key][0]
    try:
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"[{job}] {key}: cannot read {raw!r} as {kind.__name__}") from exc


def resolve_config(job: str, path: str | None, seed: int | None, grid: int | None) -> dict:
    """Defaults, then the config section, then command-line overrides."""
    params = {k: default for k, (_, default) in SCHEMA[job].items()}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if parser.has_section(job):
            for key, raw in parser.items(job):
                if key not in SCHEMA[job]:
                    raise ConfigError(f"[{job}] unknown key {key!r}")
                params[key] = _convert(job, key, raw)
    if seed is not None:
        params["seed"] = seed
    if grid is not None:
        if "grid" not in params:
            raise ConfigError(f"{job} does not take a grid")
        params["grid"] = grid
    return params


def _config_text(job: str, params: dict) -> str:
    lines = [f"job = {job}"]
    lines += [f"{k} = {'' if v is None else (repr(v) if isinstance(v, float) else v)}"
              for k, v in params.items()]
    return "\n".join(lines) + "\n"


def _read_manifest(directory: Path) -> tuple[str, dict]:
    try:
        text = (directory / "manifest.txt").read_text()
    except OSError as exc:
        raise ConfigError(f"no manifest in {directory}") from exc
    entries = {}
    for line in text.splitlines():
        key, _, value = line.partition(" = ")
        entries[key.strip()] = value.strip()
    job = entries.pop("job", None)
    if job not in SCHEMA:
        raise ConfigError(f"unknown job in manifest: {job!r}")
    params = {k: (None if v == "" else _convert(job, k, v)) for k, v in entries.items()}
    return job, params


def _bundled(name: str) -> Path:
    return Path(str(resources.files("plalab") / "data" / f"{name}.csv"))


def _source(spec: str) -> Path:
    return _bundled(spec.split(":", 1)[1]) if spec.startswith("bundled:") else Path(spec)


# ----------------------------------------------------------------------
# output helpers


class Run:
    """Collects artifacts of one job and writes them atomically, one file at a time."""

    def __init__(self, job: str, params: dict, out: Path):
        self.job, self.params, self.out = job, params, out
        out.mkdir(parents=True, exist_ok=True)
        io.atomic_write(out / "manifest.txt", _config_text(job, params))

    def write(self, name: str, text: str) -> None:
        io.atomic_write(self.out / name, text)

    def finish(self, cert: Certificate, summary: dict) -> Certificate:
        cert.slack = self.params.get("slack", 0.0)
        header = "# resolved configuration\n" + _config_text(self.job, self.params)
        self.write("report.txt", header + "\n" + cert.to_text())
        self.write("certificate.txt", cert.to_text())
        summary = {"job": self.job, "passed": cert.passed, **summary,
                   "failing": [c.name for c in cert.failing()]}
        self.write("summary.json", json.dumps(_plain(summary), indent=2) + "\n")
        return cert


def _plain(x):
    """JSON-safe copy with numpy scalars unwrapped and other objects shown by repr."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.integer, np.bool_)):
        return x.item()
    if isinstance(x, (float, np.floating)):
        return float(x)
    if x is None or isinstance(x, (str, int, bool)):
        return x
    return repr(x)


def _verdict(cert: Certificate, strict: bool) -> int:
    failing = cert.failing()
    if strict and cert.slack > 0:
        failing += [c for c in cert.clauses
                    if c.slack_used(cert.slack) > STRICT_FRACTION and c not in failing]
    for c in failing:
        print(f"FAIL: {c.name} (measured {c.measured!r}, bound {c.bound!r})", file=sys.stderr)
    return 1 if failing else 0


def _contract_of(params: dict) -> FlatContract | None:
    keys = ("tau", "mu", "eta")
    given = [params[k] is not None for k in keys]
    if any(given) and not all(given):
        raise ConfigError("tau, mu and eta must be given together")
    return FlatContract(params["tau"], params["mu"], params["eta"]) if all(given) else None


# ----------------------------------------------------------------------
# jobs


def job_synth(p: dict, run: Run) -> Certificate:
    if p["kind"] == "analytic":
        result = synth_flat_analytic(p["eps"] if _contract_of(p) is None else None, p["budget"],
                                     p["seed"], contract=_contract_of(p), method=p["method"],
                                     exceptional=p["exceptional"], max_iters=p["max_iters"])
    elif p["kind"] == "bilateral":
        result = synth_flat_bilateral(p["gamma"], p["delta"], p["C_target"], p["budget"],
                                      p["seed"], max_iters=p["max_iters"])
    else:
        raise ConfigError(f"[synth] kind must be analytic or bilateral, got {p['kind']!r}")
    run.write("h.csv", io.coefficients_to_text(result.h))
    return run.finish(result.certificate, {"degree": result.degree, "nnz": result.h.nnz})


def _synth_problem(p: dict, degree: int) -> SynthesisProblem:
    if p["kind"] == "analytic":
        return SynthesisProblem("analytic", eps=p["eps"], budget=degree, contract=_contract_of(p))
    return SynthesisProblem("bilateral", gamma=p["gamma"], delta=p["delta"],
                            C_target=p["C_target"], budget=degree)


def _product_text(P: SpecialProduct | None) -> str:
    if P is None:
        return "r = 1\n[g]\nn,re,im\n[h]\nn,re,im\n"
    return io.product_to_text(P)


def _read_product(path: Path) -> SpecialProduct | None:
    P = io.read_product(path, check=False)
    return None if P.is_zero else P


def job_indicator(p: dict, run: Run) -> Certificate:
    I = Arc(p["start"], p["length"])
    c = indicator_polynomial(I, p["delta"], seed=p["seed"], budget=p["budget"], grid=p["grid"])
    run.write("P.txt", _product_text(c.P))
    return run.finish(c.certificate, {k: v for k, v in c.details.items() if k != "contract"})


def _step_input(spec: str, G: int):
    return io.step_from_text(_source(spec).read_text())


def job_steppoly(p: dict, run: Run) -> Certificate:
    phi = _step_input(p["step"], p["grid"])
    U = phi.sample(p["grid"]).values == 0
    c = step_polynomial(phi, U, p["delta"], seed=p["seed"], budget=p["budget"], grid=p["grid"])
    run.write("phi.csv", io.step_to_text(phi))
    run.write("U.txt", io.mask_to_text(U))
    run.write("P.txt", _product_text(c.P))
    return run.finish(c.certificate, {k: v for k, v in c.details.items() if k != "contract"})


def job_pqpair(p: dict, run: Run) -> Certificate:
    psi = _step_input(p["psi"], p["grid"])
    U = np.abs(psi.sample(p["grid"]).values) < p["a"]
    pair = pq_pair(psi, U, p["a"], p["delta"], seed=p["seed"], budget=p["budget"], grid=p["grid"])
    run.write("psi.csv", io.step_to_text(psi))
    run.write("U.txt", io.mask_to_text(U))
    run.write("P.txt", _product_text(pair.P.P))
    run.write("Q.csv", io.coefficients_to_text(pair.Q))
    return run.finish(pair.certificate, pair.details)


def _round_rows(report: DecompositionReport):
    for rec in report.rounds:
        d = rec.diagnostics
        yield [rec.n, rec.residual_rho, rec.q_norm, rec.pstar_u_rho, d["pstar_rho"],
               rec.u_complement, d.get("achieved_C", ""), rec.S.n_arcs,
               0 if rec.P.P is None else rec.P.P.degree]


def _write_rounds(run: Run, report: DecompositionReport) -> None:
    run.write("f.csv", io.sampled_to_text(report.f))
    for rec in report.rounds:
        base = f"round_{rec.n}"
        run.write(f"{base}/S.csv", io.step_to_text(rec.S))
        run.write(f"{base}/U.txt", io.mask_to_text(rec.U))
        run.write(f"{base}/P.txt", _product_text(rec.P.P))
        if isinstance(rec.Q, SpecialProduct):
            run.write(f"{base}/Q.txt", io.product_to_text(rec.Q))
        else:
            run.write(f"{base}/Q.csv", io.coefficients_to_text(rec.Q))
        run.write(f"{base}/certificate.txt", rec.certificate.to_text())
    header = ["n", "residual_rho", "q_norm", "pstar_u_rho", "pstar_rho", "u_complement",
              "achieved_C", "step_arcs", "deg_P"]
    run.write("rounds.csv", io.rows_to_csv(header, _round_rows(report)))


def _decompose_summary(report: DecompositionReport) -> dict:
    return {
        "rounds_completed": len(report.rounds),
        "failure": report.failure,
        "rounds": [
            {"n": rec.n,
             "clauses": {c.name: {"measured": c.measured, "bound": c.bound,
                                  "passed": c.passed(0.0)} for c in rec.certificate.clauses},
             "diagnostics": {k: v for k, v in rec.diagnostics.items()}}
            for rec in report.rounds
        ],
    }


def job_decompose(p: dict, run: Run, menshov: bool = False) -> Certificate:
    f = io.read_function(_source(p["target"]), p["grid"])
    try:
        if menshov:
            report = menshov_decompose(f, p["eps"], p["gamma"], p["rounds"],
                                       C_target=p["C_target"], seed=p["seed"],
                                       budget=p["budget"], flat_budget=p["flat_budget"])
        else:
            report = pla_decompose(f, p["eps"], p["rounds"], seed=p["seed"], budget=p["budget"])
    except RoundInfeasible as exc:
        report = exc.report
    _write_rounds(run, report)
    return run.finish(report.certificate, _decompose_summary(report))


def job_density(p: dict, run: Run) -> Certificate:
    f = io.read_coefficients(_source(p["coefficients"]))
    s = p["s"]
    try:
        Ns = [int(x) for x in p["N"].split(",")]
    except ValueError as exc:
        raise ConfigError(f"[density-demo] N must be a comma-separated list: {p['N']!r}") from exc
    cert = Certificate(title="modulated average")
    rows = []
    for N in Ns:
        err = approximation_error(f, s, N)
        bound = tail_bound(f, s, N)
        rows.append([N, err, bound])
        cert.add(f"sup error <= tail bound (N = {N})", bound * (1 + 1e-9) + 1e-12, err)
        run.write(f"F_N{N}.csv", io.coefficients_to_text(modulated_average(f, s, N)))
    run.write("errors.csv", io.rows_to_csv(["N", "sup_error", "tail_bound"], rows))
    return run.finish(cert, {"s": s, "errors": {str(r[0]): r[1] for r in rows}})


JOBS = {
    "synth": job_synth,
    "indicator": job_indicator,
    "steppoly": job_steppoly,
    "pqpair": job_pqpair,
    "decompose": job_decompose,
    "menshov": lambda p, run: job_decompose(p, run, menshov=True),
    "density-demo": job_density,
}


# ----------------------------------------------------------------------
# verify


def _load_report(directory: Path, p: dict, menshov: bool) -> DecompositionReport:
    f = io.sampled_from_text((directory / "f.csv").read_text())
    report = DecompositionReport(f=f, eps=p["eps"], kind="menshov" if menshov else "pla",
                                 gamma=p.get("gamma"))
    n = 1
    while (directory / f"round_{n}").is_dir():
        base = directory / f"round_{n}"
        P = _read_product(base / "P.txt")
        if (base / "Q.txt").exists():
            Q = io.read_product(base / "Q.txt", check=False)
        else:
            Q = io.read_coefficients(base / "Q.csv")
        rec = RoundRecord(n, io.step_from_text((base / "S.csv").read_text()),
                          io.mask_from_text((base / "U.txt").read_text()),
                          Construction(P, Certificate()), Q, 0.0, 0.0, 0.0, 0.0, Certificate())
        report.rounds.append(rec)
        n += 1
    return report


def verify_directory(directory: Path) -> Certificate:
    """Recompute every top-level clause of a run from its files alone."""
    job, p = _read_manifest(directory)
    if job == "synth":
        h = io.read_coefficients(directory / "h.csv")
        summary = json.loads((directory / "summary.json").read_text())
        cert = verify_flat_contract(h, _synth_problem(p, int(summary["degree"])))
    elif job == "indicator":
        P = _read_product(directory / "P.txt")
        cert = certify_indicator(P, Arc(p["start"], p["length"]), p["delta"], p["grid"])
    elif job == "steppoly":
        phi = io.step_from_text((directory / "phi.csv").read_text())
        U = io.mask_from_text((directory / "U.txt").read_text())
        cert = certify_step(_read_product(directory / "P.txt"), phi, U, p["delta"], p["grid"])
    elif job == "pqpair":
        psi = io.step_from_text((directory / "psi.csv").read_text())
        U = io.mask_from_text((directory / "U.txt").read_text())
        Q = io.read_coefficients(directory / "Q.csv")
        cert = certify_pq(_read_product(directory / "P.txt"), Q, psi, U, p["a"], p["delta"],
                          p["grid"])
    elif job in ("decompose", "menshov"):
        report = _load_report(directory, p, job == "menshov")
        cert = Certificate(grid_size=report.G, title=f"re-verified {job}")
        for n in range(1, len(report.rounds) + 1):
            cert.extend(verify_round(report, n), f"round {n}: ")
        if len(report.rounds) < p["rounds"]:
            cert.add("rounds missing", 0.0, p["rounds"] - len(report.rounds),
                     note=f"{len(report.rounds)} of {p['rounds']} rounds on disk")
        else:
            h = report.q_sum()
            if job == "decompose":
                cert.add("||sum Q_k||_inf", p["eps"], sup_norm(h), strict=True)
            else:
                cert.add("||sum Q_k||_U", p["eps"] / p["gamma"], u_norm(h), strict=True)
    else:
        f = io.read_coefficients(_source(p["coefficients"]))
        cert = Certificate(title="re-verified modulated average")
        for N in [int(x) for x in p["N"].split(",")]:
            stored = io.read_coefficients(directory / f"F_N{N}.csv")
            diff = stored - modulated_average(f, p["s"], N)
            cert.add(f"stored F_N equals congruence filter (N = {N})", 1e-12,
                     0.0 if diff.is_zero else float(np.abs(diff.coeffs).max()))
    cert.slack = p.get("slack", 0.0) or 0.0
    return cert


# ----------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plalab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in JOBS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", help="config file with a [%s] section" % name)
        cmd.add_argument("--seed", type=int, help="override the seed")
        cmd.add_argument("--grid", type=int, help="override the grid size")
        cmd.add_argument("--out", default=f"out/{name}", help="artifact directory")
        cmd.add_argument("--strict", action="store_true",
                         help="fail clauses that use more than half of the certificate slack")
    cmd = sub.add_parser("verify")
    cmd.add_argument("directory", help="artifact directory written by another subcommand")
    cmd.add_argument("--strict", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            cert = verify_directory(Path(args.directory))
            print(cert.to_text(), end="")
            return _verdict(cert, args.strict)
        params = resolve_config(args.command, args.config, args.seed, args.grid)
        run = Run(args.command, params, Path(args.out))
        cert = JOBS[args.command](params, run)
        print(cert.to_text(), end="")
        return _verdict(cert, args.strict)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (PlalabError, ValueError) as exc:
        print(f"FAIL: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
