"""Command-line entry point: ``baconshor <command> ...``.

Exit status is 0 on success, 1 when a computation fails and 2 on a usage
error.  Exact analyses checkpoint into ``--checkpoint`` or, failing that,
the directory named by ``BACONSHOR_CHECKPOINT_DIR``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .circuit import CircuitError, parse_circuit
from .code import ResourceGuardError, build_code
from .faultsim import FaultAssignment, FaultSpecError, propagate
from .gadgets import (
    EC_METHODS,
    build_bell_prep_L,
    build_ec,
    build_exrec,
    build_gauge_ec,
    build_prep_plus_L,
    build_prep_zero_L,
)
from .malignancy import DEFAULT_CHUNK, MalignancyReport, atomic_write, enumerate_exact, sample_mc
from .threshold import ThresholdError, compute_threshold, mc_threshold

CHECKPOINT_ENV = "BACONSHOR_CHECKPOINT_DIR"
GADGETS = ("gauge-ec", "prep0", "prep+", "bell", "steane-ec", "knill-ec", "exrec-cnot")

# published values for comparison: (n, method) -> (locations, exact eps_0, MC eps_0, MC sigma), units of 1e-4
TABLE1 = {
    (3, "steane"): (297, 1.21, 1.21, 0.06),
    (3, "knill"): (297, 1.26, 1.26, 0.05),
    (5, "steane"): (1185, 1.94, 1.92, 0.02),
    (5, "knill"): (1185, None, 2.07, 0.03),
    (7, "steane"): (2681, None, 1.74, 0.01),
    (7, "knill"): (2681, None, 1.91, 0.01),
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything that determines an analysis run; written next to its results."""

    n: int
    ec_method: str
    orders: list[int]
    samples: int | None = None
    seed: int | None = None
    jobs: int = 1
    checkpoint_dir: str | None = None
    outputs: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if self.n < 2:
            raise UsageError(f"--n must be at least 2, got {self.n}")
        if self.ec_method not in EC_METHODS:
            raise UsageError(f"--ec must be one of {', '.join(EC_METHODS)}")
        if not self.orders or any(k < 1 for k in self.orders):
            raise UsageError("orders must be positive")
        if self.samples is not None and self.samples < 1:
            raise UsageError("--samples must be positive")
        if self.jobs < 1:
            raise UsageError("--jobs must be positive")

    def save(self, path: Path) -> None:
        atomic_write(path, json.dumps({"tool_version": __version__, **asdict(self)}, sort_keys=True, indent=2) + "\n")


def _default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="baconshor", description="Bacon-Shor fault-tolerance analysis")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    code = sub.add_parser("code", help="inspect a code").add_subparsers(dest="action", required=True, parser_class=_Parser)
    info = code.add_parser("info", help="parameters and generators")
    info.add_argument("--n", type=int, required=True)

    gadget = sub.add_parser("gadget", help="emit circuits").add_subparsers(dest="action", required=True, parser_class=_Parser)
    emit = gadget.add_parser("emit", help="write a gadget in the circuit text format")
    emit.add_argument("--n", type=int, required=True)
    emit.add_argument("--gadget", choices=GADGETS, required=True)
    emit.add_argument("--ec", choices=EC_METHODS, default="steane", help="EC method for exrec-cnot")
    emit.add_argument("--policy", choices=("per_check", "single_roaming"), default="per_check")
    emit.add_argument("--rounds", type=int, default=None, help="gauge-measurement rounds (default t+1)")
    emit.add_argument("--out", type=Path)

    sim = sub.add_parser("simulate", help="propagate a fault assignment through a circuit file")
    sim.add_argument("--circuit", type=Path, required=True)
    sim.add_argument("--faults", default="", help='"loc:PAULI" pairs, e.g. "3:X,17:ZI,20:flip"')

    analyze = sub.add_parser("analyze", help="count malignant location sets").add_subparsers(
        dest="action", required=True, parser_class=_Parser
    )
    for name in ("exact", "mc"):
        a = analyze.add_parser(name, help=f"{'exhaustive' if name == 'exact' else 'Monte-Carlo'} analysis")
        a.add_argument("--n", type=int, required=True)
        a.add_argument("--ec", choices=EC_METHODS, required=True)
        a.add_argument("--order", type=int, required=True)
        a.add_argument("--jobs", type=int, default=_default_jobs())
        a.add_argument("--out", type=Path, help="report path (default: derived from the run)")
        if name == "exact":
            a.add_argument("--checkpoint", type=Path, help=f"checkpoint directory (default ${CHECKPOINT_ENV})")
            a.add_argument("--budget", type=float, default=None, help="refuse runs above this many evaluations")
            a.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK, help="sets per checkpointed chunk")
        else:
            a.add_argument("--samples", type=int, required=True)
            a.add_argument("--seed", type=int, required=True)

    thr = sub.add_parser("threshold", help="threshold bound from saved reports")
    thr.add_argument("--reports", type=Path, required=True, help="directory of report JSON files")
    thr.add_argument("--t", type=int, required=True, help="faults the code corrects")
    thr.add_argument("--out", type=Path, required=True)

    rep = sub.add_parser("reproduce-table1", help="run the full pipeline and compare with published values")
    rep.add_argument("--cells", nargs="+", default=["3:steane", "3:knill", "5:steane", "5:knill"],
                     help="n:method pairs, e.g. 3:steane 7:knill")
    rep.add_argument("--samples", type=int, default=100_000)
    rep.add_argument("--seed", type=int, default=2007)
    rep.add_argument("--jobs", type=int, default=_default_jobs())
    rep.add_argument("--out-dir", type=Path, default=Path("table1"))
    return p


# commands


def cmd_code_info(args) -> int:
    code = build_code(args.n)
    N, k, d = code.parameters
    print(f"[[{N},{k},{d}]]")
    print(f"{len(code.stabilizer_gens)} stabilizer generators, {len(code.gauge_gens)} gauge generators")
    for sid, g in zip(code.stabilizer_ids, code.stabilizer_gens):
        print(f"  S{sid[0]}{sid[1]}: {g}")
    print(f"  logical X: {code.logical_x}")
    print(f"  logical Z: {code.logical_z}")
    return 0


def cmd_gadget_emit(args) -> int:
    code = build_code(args.n)
    gauge_opts = {"policy": args.policy, "rounds": args.rounds}
    if args.gadget == "gauge-ec":
        circuit = build_gauge_ec(code, args.policy, rounds=args.rounds)
    elif args.gadget == "prep0":
        circuit = build_prep_zero_L(code)
    elif args.gadget == "prep+":
        circuit = build_prep_plus_L(code)
    elif args.gadget == "bell":
        circuit = build_bell_prep_L(code)
    elif args.gadget == "steane-ec":
        circuit = build_ec(code, "steane")
    elif args.gadget == "knill-ec":
        circuit = build_ec(code, "knill")
    else:
        circuit = build_exrec(code, args.ec, **(gauge_opts if args.ec == "gauge" else {})).circuit
    text = circuit.dump()
    if args.out:
        atomic_write(args.out, text)
        print(f"wrote {args.out} ({len(circuit.locations)} locations, depth {circuit.depth})")
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    circuit = parse_circuit(args.circuit.read_text())
    result = propagate(circuit, FaultAssignment.parse(args.faults))
    print(result.text())
    return 0


def _report_name(method: str, n: int, ec: str, k: int) -> str:
    return f"{method}-n{n}-{ec}-k{k}.json"


def cmd_analyze(args) -> int:
    exact = args.action == "exact"
    config = RunConfig(
        n=args.n,
        ec_method=args.ec,
        orders=[args.order],
        samples=None if exact else args.samples,
        seed=None if exact else args.seed,
        jobs=args.jobs,
    )
    config.validate()
    exrec = build_exrec(build_code(args.n), args.ec)
    out = args.out or Path(_report_name("exact" if exact else "mc", args.n, args.ec, args.order))
    if exact:
        root = args.checkpoint or os.environ.get(CHECKPOINT_ENV)
        ckpt = None
        if root:
            name = f"exact-n{args.n}-{args.ec}-k{args.order}-c{args.chunk_size}-{exrec.circuit.hash()[:12]}.json"
            ckpt = Path(root) / name
            config.checkpoint_dir = str(root)
        if args.chunk_size < 1:
            raise UsageError("--chunk-size must be positive")
        kwargs = {"budget": args.budget} if args.budget is not None else {}
        report = enumerate_exact(
            exrec, args.order, jobs=args.jobs, checkpoint=ckpt, chunk_size=args.chunk_size, **kwargs
        )
    else:
        report = sample_mc(exrec, args.order, args.samples, args.seed, jobs=args.jobs)
    config.outputs = [str(out)]
    report.save(out)
    config.save(out.with_suffix(".config.json"))
    _print_report(report)
    print(f"report written to {out}")
    return 0


def _print_report(r: MalignancyReport) -> None:
    d = r.exrec
    head = f"n={d['n']} {d['ec']} exRec, {d['locations']} locations, order {r.order}"
    if r.method == "exact":
        print(f"{head}: {r.malignant_count} malignant of {r.total_sets} sets")
    else:
        note = " (no hits: upper bound only)" if r.upper_bound_only else ""
        print(f"{head}: f_hat={r.f_hat:.6g} sigma={r.sigma:.3g} over N={r.samples}, alpha~{r.alpha:.4g}{note}")


def _load_reports(directory: Path) -> list[MalignancyReport]:
    reports = []
    for path in sorted(directory.glob("*.json")):
        data = json.loads(path.read_text())
        if isinstance(data, dict) and "method" in data and "order" in data:
            reports.append(MalignancyReport.from_dict(data))
    if not reports:
        raise ThresholdError(f"no malignancy reports in {directory}")
    return reports


def _solve(reports: list[MalignancyReport], t: int):
    if any(r.method == "monte_carlo" for r in reports):
        return mc_threshold(reports, None, t)
    return compute_threshold(reports, None, t)


def cmd_threshold(args) -> int:
    reports = _load_reports(args.reports)
    hashes = {r.exrec["circuit_hash"] for r in reports}
    if len(hashes) > 1:
        raise ThresholdError(f"{args.reports} mixes reports of {len(hashes)} different exRecs")
    # several shards or runs per order: keep the one with the most samples
    best: dict[int, MalignancyReport] = {}
    for r in reports:
        if r.order > args.t and (r.order not in best or r.samples > best[r.order].samples):
            best[r.order] = r
    if not best:
        raise ThresholdError(f"no reports of order above t={args.t} in {args.reports}")
    result = _solve(list(best.values()), args.t)
    atomic_write(args.out, result.to_json())
    line = f"eps_0 = {result.epsilon_0:.4g}"
    if result.interval:
        lo, hi = result.interval
        line += f"  (1 sigma: {lo:.4g} .. {hi:.4g}{', one-sided' if result.one_sided else ''})"
    print(line)
    print(f"written to {args.out}")
    return 0


def _cell_plan(n: int) -> tuple[list[int], list[int]]:
    """Orders analysed exactly and by Monte-Carlo for a block size."""
    t = (n - 1) // 2
    if n <= 3:
        return [t + 1, t + 2], [t + 1, t + 2]
    if n <= 5:
        return [t], [t + 1, t + 2]
    return [], [t + 1, t + 2]


def cmd_reproduce(args) -> int:
    rows = []
    out_dir: Path = args.out_dir
    for cell in args.cells:
        try:
            n_text, method = cell.split(":")
            n = int(n_text)
        except ValueError:
            raise UsageError(f"cells look like 3:steane, got {cell!r}") from None
        config = RunConfig(n=n, ec_method=method, orders=[], samples=args.samples, seed=args.seed, jobs=args.jobs)
        exact_orders, mc_orders = _cell_plan(n)
        config.orders = sorted(set(exact_orders + mc_orders))
        config.validate()
        t = (n - 1) // 2
        exrec = build_exrec(build_code(n), method)
        cell_dir = out_dir / f"n{n}-{method}"
        exact_reports, mc_reports = [], []
        for k in exact_orders:
            r = enumerate_exact(exrec, k, jobs=args.jobs)
            r.save(cell_dir / _report_name("exact", n, method, k))
            exact_reports.append(r)
            _print_report(r)
        for i, k in enumerate(mc_orders):
            r = sample_mc(exrec, k, args.samples, args.seed + i, jobs=args.jobs)
            r.save(cell_dir / _report_name("mc", n, method, k))
            mc_reports.append(r)
            _print_report(r)
        config.outputs = sorted(str(p) for p in cell_dir.glob("*.json"))
        config.save(cell_dir / "config.json")
        eps_exact = None
        if exact_reports and max(r.order for r in exact_reports) > t:
            eps_exact = compute_threshold([r for r in exact_reports if r.order > t], None, t)
            atomic_write(cell_dir / "threshold-exact.json", eps_exact.to_json())
        # exact reports fill in orders the sampler skipped (their sigma is zero)
        mc_inputs = {r.order: r for r in exact_reports if r.order > t and r.order not in mc_orders}
        mc_inputs.update({r.order: r for r in mc_reports})
        eps_mc = mc_threshold(list(mc_inputs.values()), None, t)
        atomic_write(cell_dir / "threshold-mc.json", eps_mc.to_json())
        rows.append((n, method, len(exrec.locations), eps_exact, eps_mc))
    table = render_table(rows)
    atomic_write(out_dir / "table1.md", table)
    print()
    print(table, end="")
    return 0


def render_table(rows) -> str:
    def fmt(x):
        return "n/a" if x is None else f"{x:.2f}"

    lines = [
        "| code | EC | locs (ours / published) | eps_0 exact x1e-4 (ours / published) | eps_0 MC x1e-4 (ours / published) |",
        "|---|---|---|---|---|",
    ]
    for n, method, locs, exact, mc in rows:
        p_locs, p_exact, p_mc, p_sigma = TABLE1.get((n, method), (None, None, None, None))
        ours_exact = fmt(exact.epsilon_0 * 1e4) if exact else "n/a"
        lo, hi = mc.interval
        ours_mc = f"{mc.epsilon_0 * 1e4:.2f} [{lo * 1e4:.2f}, {hi * 1e4:.2f}]"
        pub_mc = "n/a" if p_mc is None else f"{p_mc:.2f} +- {p_sigma:.2f}"
        lines.append(
            f"| [[{n * n},1,{n}]] | {method} | {locs} / {p_locs or 'n/a'} | {ours_exact} / {fmt(p_exact)} "
            f"| {ours_mc} / {pub_mc} |"
        )
    return "\n".join(lines) + "\n"


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"baconshor: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    handlers = {
        "code": cmd_code_info,
        "gadget": cmd_gadget_emit,
        "simulate": cmd_simulate,
        "analyze": cmd_analyze,
        "threshold": cmd_threshold,
        "reproduce-table1": cmd_reproduce,
    }
    try:
        return handlers[args.command](args)
    except (UsageError, FaultSpecError) as exc:
        print(f"baconshor: error: {exc}", file=sys.stderr)
        return 2
    except (CircuitError, ThresholdError, ResourceGuardError, OSError, ValueError) as exc:
        print(f"baconshor: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


__all__ = ["RunConfig", "build_parser", "dispatch", "main"]
