"""Command-line interface: ``tprior {fit, simulate, verify, prior-table}``.

Exit codes: 0 success, 1 usage, 2 input parse, 3 numerical/sampler failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from tprior import fisher
from tprior.errors import DomainError, TPriorError
from tprior.gibbs import GibbsConfig, run_chain
from tprior.posterior import Dataset, grid_posterior, summarize
from tprior.priors import (
    NuDomain,
    PriorSpec,
    bracket_p1,
    bracket_p2,
    leading_tail_constant,
    log_prior_nu,
)
from tprior.simstudy import build_cells, default_workers, run_table
from tprior.specfun import DistSpec, RngStream, sample_n

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class ParseError(Exception):
    pass


# --- input parsing -------------------------------------------------------------

def parse_number_list(text: str, integer: bool = False) -> list:
    """Parse ``"1,3,10"`` or ``"1..25"`` (or a mix, ``"1..3,10"``)."""
    out: list = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        if ".." in part:
            lo_s, hi_s = part.split("..", 1)
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise UsageError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part) if integer else float(part))
    if not out:
        raise UsageError(f"empty list {text!r}")
    return [int(v) for v in out] if integer else [float(v) for v in out]


def read_returns(path: str | Path, log_returns: bool = False) -> np.ndarray:
    """Read a one-column CSV with a header row.

    With ``log_returns`` the column holds prices and ln(p_t / p_{t-1}) is
    returned.
    """
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            cell = row[0].strip()
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"{path}:{line}: not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise ParseError(f"{path}:{line}: non-finite value {cell!r}")
            values.append(v)
    x = np.array(values)
    if log_returns:
        if np.any(x <= 0):
            raise ParseError(f"{path}: prices must be positive for --log-returns")
        x = np.diff(np.log(x))
    if x.size < 2:
        raise ParseError(f"{path}: need at least 2 observations, got {x.size}")
    return x


def _fmt(v: float) -> str:
    return repr(float(v))


def _prior_from_args(args) -> PriorSpec:
    return PriorSpec(args.prior, xi=args.xi, d=args.d)


def _domain_from_args(args) -> NuDomain:
    return NuDomain(args.nu_min, args.nu_max, args.n_points, args.spacing)


# --- fit -------------------------------------------------------------------------

def _write_histogram(path: Path, draws: np.ndarray, bins: int) -> None:
    counts, edges = np.histogram(draws, bins=bins)
    width = np.diff(edges)
    density = counts / (counts.sum() * width)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "count", "density"])
        for lo, hi, c, d in zip(edges[:-1], edges[1:], counts, density):
            w.writerow([_fmt(lo), _fmt(hi), int(c), _fmt(d)])


def cmd_fit(args) -> int:
    if not args.input:
        raise UsageError("fit requires --input")
    x = read_returns(args.input, args.log_returns)
    data = Dataset(x, label=str(args.input))
    config = GibbsConfig(
        iterations=args.iterations,
        burn_in=args.burn_in,
        thin=args.thin,
        nu_domain=_domain_from_args(args),
        prior=_prior_from_args(args),
        seed=args.seed,
    )
    draws = run_chain(data, config)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if args.format in ("csv", "both"):
        draws.to_csv(out / "chain.csv")
        written.append("chain.csv")
    for name, series in (("mu", draws.mu), ("sigma2", draws.sigma2), ("nu", draws.nu)):
        summary = summarize(series, args.level)
        if args.format in ("json", "both"):
            (out / f"summary_{name}.json").write_text(json.dumps(summary.to_json(), indent=2) + "\n")
            written.append(f"summary_{name}.json")
        if args.format in ("csv", "both"):
            _write_histogram(out / f"hist_{name}.csv", series, args.bins)
            written.append(f"hist_{name}.csv")
        s = summary
        print(
            f"{name:>7}: mean={s.mean:.6g} median={s.median:.6g} mode={s.mode:.6g} "
            f"var={s.variance:.6g} {int(100 * s.level)}% CI=({s.equal_tail[0]:.6g}, {s.equal_tail[1]:.6g})"
        )
    print(f"n={data.n} kept={draws.kept} prior={config.prior.id} -> {out} ({', '.join(written)})")
    return EXIT_OK


# --- simulate ------------------------------------------------------------------

def cmd_simulate(args) -> int:
    nus = parse_number_list(args.nus)
    prior_ids = parse_number_list(args.priors, integer=True)
    priors = [PriorSpec(p, xi=args.xi, d=args.d) for p in prior_ids]
    cells = build_cells(nus, priors, args.n, args.reps, args.level, _domain_from_args(args), args.seed)
    report = run_table(cells, workers=default_workers())
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.format in ("csv", "both"):
        report.write_tables(out)
        if args.triples:
            report.write_triples(out / "triples.csv")
    if args.format in ("json", "both"):
        report.write_json(out / "report.json")
    for metric in ("rel_rmse", "coverage_pct", "avg_len", "mode_len"):
        means = " ".join(f"p{p}={report.column_mean(metric, p):.4f}" for p in report.prior_ids)
        print(f"{metric:>12} mean: {means}")
    print(f"{len(cells)} cells x {args.reps} reps -> {out}")
    return EXIT_OK


# --- verify --------------------------------------------------------------------

@dataclass
class CheckRow:
    name: str
    measured: float
    tolerance: str
    passed: bool


def _builtin_propriety_data() -> Dataset:
    return Dataset(sample_n(DistSpec.student_t(3.0), RngStream(5, (0,)), 5), "built-in n=5 t(3)")


def _builtin_gibbs_data() -> Dataset:
    return Dataset(sample_n(DistSpec.student_t(3.0), RngStream(11, (0,)), 10), "built-in n=10 t(3)")


def check_h1(args) -> CheckRow:
    worst = 0.0
    for nu in (0.1, 1.0, 5.0, 10.0, 100.0):
        for n in (1, 30):
            target = n / 4.0 * bracket_p2(nu)
            worst = max(worst, abs(fisher.h1_reference(nu, n) - target) / target)
    return CheckRow("h1-identity", worst, "<= 1e-10 rel", worst <= 1e-10)


def check_pm(args) -> CheckRow:
    prior = PriorSpec(args.pm_prior, xi=args.xi, d=args.d)
    if args.nu is not None or args.sigma is not None:
        points = [(args.nu or 2.0, args.sigma or 1.0)]
    else:
        points = [(nu, s) for nu in (0.5, 2.0, 10.0) for s in (0.5, 1.0, 2.0)]
    worst = max(fisher.pm_residual(nu, s, args.n, prior=prior) for nu, s in points)
    label = "pm-residual" + ("" if prior.id == 2 else f" (prior {prior.id})")
    return CheckRow(label, worst, "<= 1e-6 rel", worst <= 1e-6)


def check_pm_order(args) -> CheckRow:
    ratios = [
        fisher.pm_residual(nu, s, args.n, h=1e-4) / fisher.pm_residual(nu, s, args.n, h=5e-5)
        for nu in (0.5, 2.0, 10.0)
        for s in (0.5, 1.0, 2.0)
    ]
    worst = max(abs(r - 4.0) for r in ratios)
    return CheckRow("pm-second-order", min(ratios), "halving ratio 4 +/- 1", worst <= 1.0)


def check_tail(args) -> list[CheckRow]:
    nu = 1e4
    rows = []
    for kind, fn in ((1, bracket_p1), (2, bracket_p2)):
        c = leading_tail_constant(kind)
        measured = nu**4 * fn(nu)
        ok = abs(measured / c - 1.0) <= 0.01
        rows.append(CheckRow(f"tail-rate p{kind} (nu^4 b -> {c:g})", measured, "1% rel", ok))
    return rows


def check_positivity(args) -> CheckRow:
    grid = np.geomspace(1e-2, 1e6, 4000)
    low = min(float(np.min(bracket_p1(grid))), float(np.min(bracket_p2(grid))))
    return CheckRow("bracket-positivity", low, "> 0", low > 0)


def check_propriety(args) -> list[CheckRow]:
    data = _builtin_propriety_data()
    rows = []
    for pid in (1, 2):
        spec = PriorSpec(pid)
        small = grid_posterior(spec, data, NuDomain(0.01, 1000.0, 2000))
        big = grid_posterior(spec, data, NuDomain(0.01, 2000.0, 2120))
        ratio = math.exp(big.log_total - small.log_total) - 1.0
        rows.append(CheckRow(f"propriety p{pid} (mass 2000/1000 - 1)", ratio, "<= 1e-3", abs(ratio) <= 1e-3))
        left = float(small.cdf(0.05))
        rows.append(CheckRow(f"left-tail p{pid} (mass below 0.05)", left, "<= 1e-3", left <= 1e-3))
    return rows


def ks_against(post, draws: np.ndarray) -> float:
    s = np.sort(draws)
    m = s.size
    f = post.cdf(s)
    return float(max(np.max(np.arange(1, m + 1) / m - f), np.max(f - np.arange(m) / m)))


def check_gibbs_grid(args) -> CheckRow:
    data = _builtin_gibbs_data()
    spec = PriorSpec(2)
    config = GibbsConfig(
        iterations=22000, burn_in=2000, prior=spec, seed=args.seed, fix_mu=0.0, fix_sigma2=1.0
    )
    ks = ks_against(grid_posterior(spec, data), run_chain(data, config).nu)
    return CheckRow("gibbs-vs-grid KS", ks, "<= 0.03", ks <= 0.03)


CHECKS: dict[str, Callable] = {
    "h1": check_h1,
    "pm-residual": check_pm,
    "pm-order": check_pm_order,
    "tail": check_tail,
    "positivity": check_positivity,
    "propriety": check_propriety,
    "gibbs-grid": check_gibbs_grid,
}


def cmd_verify(args) -> int:
    names = list(CHECKS) if args.check == "all" else [args.check]
    rows: list[CheckRow] = []
    for name in names:
        res = CHECKS[name](args)
        rows.extend(res if isinstance(res, list) else [res])
    width = max(len(r.name) for r in rows)
    print(f"{'check':<{width}}  {'measured':>14}  {'tolerance':<22} result")
    for r in rows:
        print(f"{r.name:<{width}}  {r.measured:>14.6g}  {r.tolerance:<22} {'PASS' if r.passed else 'FAIL'}")
    return EXIT_OK if all(r.passed for r in rows) else EXIT_VERIFY


# --- prior-table ---------------------------------------------------------------

def prior_table(domain: NuDomain, xi: float = 0.1, d: float = 1.2) -> tuple[np.ndarray, np.ndarray]:
    """Grid and (n_points, 6) matrix of densities normalized by trapezoid rule."""
    grid = domain.grid()
    cols = []
    for pid in range(1, 7):
        lp = log_prior_nu(PriorSpec(pid, xi=xi, d=d), grid)
        dens = np.exp(lp - lp.max())
        cols.append(dens / np.trapezoid(dens, grid))
    return grid, np.column_stack(cols)


def cmd_prior_table(args) -> int:
    grid, dens = prior_table(_domain_from_args(args), args.xi, args.d)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "priors.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["nu"] + [f"p{i}" for i in range(1, 7)])
        for nu, row in zip(grid, dens):
            w.writerow([_fmt(nu)] + [_fmt(v) for v in row])
    print(f"{grid.size} rows -> {out / 'priors.csv'}")
    return EXIT_OK


# --- argument parsing ------------------------------------------------------------

def _add_prior_args(p: argparse.ArgumentParser, default_prior: int = 2) -> None:
    p.add_argument("--prior", type=int, default=default_prior, choices=range(1, 7), metavar="ID")
    p.add_argument("--xi", type=float, default=0.1, help="rate of the exponential prior (id 5)")
    p.add_argument("--d", type=float, default=1.2, help="hyperparameter of the hierarchical prior (id 6)")


def _add_domain_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nu-min", type=float, default=0.01)
    p.add_argument("--nu-max", type=float, default=1000.0)
    p.add_argument("--n-points", type=int, default=2000)
    p.add_argument("--spacing", choices=("logarithmic", "linear"), default="logarithmic")


def _add_output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output-dir", default="./out")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tprior", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="Gibbs-sample (mu, sigma^2, nu) for a returns file")
    fit.add_argument("--input", required=True)
    fit.add_argument("--log-returns", action="store_true", help="input column holds prices")
    _add_prior_args(fit)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--iterations", type=int, default=30000)
    fit.add_argument("--burn-in", type=int, default=5000)
    fit.add_argument("--thin", type=int, default=1)
    fit.add_argument("--level", type=float, default=0.95)
    fit.add_argument("--bins", type=int, default=50)
    _add_domain_args(fit)
    _add_output_args(fit)
    fit.set_defaults(func=cmd_fit)

    sim = sub.add_parser("simulate", help="frequentist simulation tables")
    sim.add_argument("--nus", default="1..25")
    sim.add_argument("--priors", default="1..6")
    sim.add_argument("--reps", type=int, default=500)
    sim.add_argument("--n", type=int, default=30)
    sim.add_argument("--level", type=float, default=0.95)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--xi", type=float, default=0.1)
    sim.add_argument("--d", type=float, default=1.2)
    sim.add_argument("--triples", action="store_true", help="also write per-replication triples.csv")
    _add_domain_args(sim)
    _add_output_args(sim)
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="numerical checks of the prior identities")
    ver.add_argument("--check", choices=["all", *CHECKS], default="all")
    ver.add_argument("--nu", type=float, default=None)
    ver.add_argument("--sigma", type=float, default=None)
    ver.add_argument("--n", type=int, default=30)
    ver.add_argument("--prior", dest="pm_prior", type=int, default=2, choices=range(1, 7), metavar="ID",
                     help="prior plugged into the matching-equation check")
    ver.add_argument("--xi", type=float, default=0.1)
    ver.add_argument("--d", type=float, default=1.2)
    ver.add_argument("--seed", type=int, default=0)
    ver.set_defaults(func=cmd_verify)

    tab = sub.add_parser("prior-table", help="normalized prior densities on the nu grid")
    tab.add_argument("--xi", type=float, default=0.1)
    tab.add_argument("--d", type=float, default=1.2)
    _add_domain_args(tab)
    tab.add_argument("--output-dir", default="./out")
    tab.set_defaults(func=cmd_prior_table)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"tprior: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (UsageError, DomainError, ValueError) as exc:
        print(f"tprior: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TPriorError, ArithmeticError) as exc:
        print(f"tprior: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"tprior: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
