"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 numerical degeneracy, 4 resource limit.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    AccuracyError,
    ConstraintViolationError,
    DegenerateModelError,
    DomainError,
    InvalidInputError,
    NotPositiveDefiniteError,
    ResourceLimitError,
)
from .fishergeom import bernoulli
from .gaussmodel import Dataset, center, normalize
from .laplace import CASES, laplace_ladder
from .regret import bernoulli_regret_table, gaussian_geometric_complexity, select_pca_dim
from .volume import DEFAULT_SEED, log_vol_Ms

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_RESOURCE = 0, 2, 3, 4

VOL_MODES = {"mc": "mc", "quad": "quad", "upper": "upper_bound", "lower": "lower_bound"}
FIXTURES = ("rank3", "isotropic")


class InputFormatError(InvalidInputError):
    pass


# ---------------------------------------------------------------------------
# input


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def parse_table(text: str, source: str = "<input>") -> np.ndarray:
    """Rows of numbers from CSV/TSV text; an all-text first row is taken as a header."""
    lines = text.splitlines()
    if not any(line.strip() for line in lines):
        raise InputFormatError(f"{source}: no data")
    sample = "\n".join(lines[:50])
    try:
        dialect = csv.Sniffer().sniff(sample, delimiters=",\t; ")
    except csv.Error:
        dialect = csv.excel
    rows = []
    width = None
    for lineno, row in enumerate(csv.reader(io.StringIO(text), dialect), start=1):
        row = [t.strip() for t in row]
        if dialect.delimiter == " ":
            row = [t for t in row if t]
        if not row or all(t == "" for t in row):
            continue
        if lineno == 1 and not any(_is_number(t) for t in row):
            continue
        if not all(_is_number(t) for t in row):
            raise InputFormatError(f"{source}: line {lineno}: non-numeric value in {row!r}")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise InputFormatError(f"{source}: line {lineno}: expected {width} columns, found {len(row)}")
        rows.append([float(t) for t in row])
    if not rows:
        raise InputFormatError(f"{source}: no data rows")
    x = np.array(rows)
    if not np.all(np.isfinite(x)):
        bad = int(np.argwhere(~np.isfinite(x))[0, 0])
        raise InputFormatError(f"{source}: non-finite value in data row {bad + 1}")
    return x


def fixture_text(name: str) -> str:
    if name not in FIXTURES:
        raise InputFormatError(f"unknown fixture {name!r}; expected one of {FIXTURES}")
    return resources.files("geocomplexity").joinpath("data", f"{name}.csv").read_text()


def load_rows(args) -> np.ndarray:
    if args.fixture:
        return parse_table(fixture_text(args.fixture), f"fixture:{args.fixture}")
    if not args.input:
        raise InputFormatError("one of --input or --fixture is required")
    try:
        text = sys.stdin.read() if args.input == "-" else Path(args.input).read_text()
    except OSError as exc:
        raise InputFormatError(f"cannot read {args.input}: {exc.strerror or exc}") from None
    return parse_table(text, args.input)


def parse_precision(text: str | None, d: int) -> np.ndarray:
    if text is None:
        return np.ones(d)
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise InputFormatError(f"--precision: cannot parse {text!r}") from None
    if len(vals) not in (1, d):
        raise InputFormatError(f"--precision needs 1 or {d} values, got {len(vals)}")
    arr = np.broadcast_to(np.array(vals), (d,)).copy()
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise InputFormatError("--precision values must be positive")
    return arr


def parse_m_range(text: str | None, d: int) -> list[int]:
    if text is None:
        return list(range(1, d + 1))
    try:
        if ".." in text:
            a, b = (int(t) for t in text.split("..", 1))
        else:
            a = b = int(text)
    except ValueError:
        raise InputFormatError(f"--m-range: expected A..B, got {text!r}") from None
    if not 1 <= a <= b <= d:
        raise InputFormatError(f"--m-range {text} must satisfy 1 <= A <= B <= d = {d}")
    return list(range(a, b + 1))


def _positive_int(text: str) -> int:
    try:
        val = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return val


def _nonneg_int(text: str) -> int:
    try:
        val = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if val < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return val


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("ladder values must be positive")
    return vals


# ---------------------------------------------------------------------------
# reports


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return obj


def _report(command: str, config: dict, results: list, selected_m=None, extra=None) -> dict:
    out = {
        "command": command,
        "config": config,
        "results": results,
        "selected_m": selected_m,
        "version": __version__,
    }
    if extra:
        out.update(extra)
    return _clean(out)


def _complexity_result(rep) -> dict:
    meta = {k: v for k, v in rep.metadata.items() if k != "warnings"}
    return {
        "m": rep.metadata["m"],
        "n": rep.n,
        "N": rep.N,
        "terms": rep.terms(),
        "warnings": rep.warnings,
        "metadata": meta,
    }


def _gauss_config(args, d: int, m_range: list[int]) -> dict:
    return {
        "input": f"fixture:{args.fixture}" if args.fixture else args.input,
        "precision": args.precision or "1",
        "d": d,
        "m_range": [m_range[0], m_range[-1]],
        "vol_mode": VOL_MODES[args.vol_mode],
        "samples": args.samples,
        "seed": args.seed,
        "format": args.format,
    }


def _prepare(args):
    rows = load_rows(args)
    d = rows.shape[1]
    precision = parse_precision(args.precision, d)
    m_range = parse_m_range(args.m_range, d)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        data = normalize(center(Dataset.from_rows(rows, precision)))
    notes = [str(w.message) for w in caught]
    return data, m_range, notes


def cmd_pca_select(args) -> dict:
    data, m_range, notes = _prepare(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        m_star, reports = select_pca_dim(data, m_range, VOL_MODES[args.vol_mode], args.samples, args.seed)
    notes += [str(w.message) for w in caught]
    return _report(
        "pca-select",
        _gauss_config(args, data.d, m_range),
        [_complexity_result(r) for r in reports],
        selected_m=m_star,
        extra={"s": reports[0].metadata["s"], "N": data.N, "warnings": notes},
    )


def cmd_complexity(args) -> dict:
    data, m_range, notes = _prepare(args)
    results = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for m in m_range:
            rep = gaussian_geometric_complexity(
                data, m, None, VOL_MODES[args.vol_mode], args.samples, args.seed, check_ratio=args.check_ratio
            )
            results.append(_complexity_result(rep))
    notes += [str(w.message) for w in caught]
    return _report(
        "complexity",
        _gauss_config(args, data.d, m_range),
        results,
        extra={"s": results[0]["metadata"]["s"], "N": data.N, "warnings": notes},
    )


def cmd_volume(args) -> dict:
    mode = VOL_MODES[args.vol_mode]
    res = log_vol_Ms(args.m, args.s, mode=mode, samples=args.samples, seed=args.seed)
    config = {"m": args.m, "s": args.s, "vol_mode": mode, "samples": args.samples, "seed": args.seed, "format": args.format}
    return _report("volume", config, [res.to_dict()])


def cmd_laplace_check(args) -> dict:
    cases = CASES if args.case == "all" else (args.case,)
    results = [laplace_ladder(c, tuple(args.ladder)) for c in cases]
    return _report("laplace-check", {"case": args.case, "ladder": args.ladder, "format": args.format}, results)


def cmd_regret_check(args) -> dict:
    model = bernoulli()
    rows = [bernoulli_regret_table(model, N) for N in args.ladder]
    diffs = [abs(r["difference"]) for r in rows]
    monotone = all(b <= a for a, b in zip(diffs, diffs[1:]))
    return _report(
        "regret-check",
        {"model": "bernoulli", "ladder": args.ladder, "format": args.format},
        rows,
        extra={"monotone_decrease": monotone},
    )


# ---------------------------------------------------------------------------
# table rendering


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6f}" if abs(v) < 1e7 else f"{v:.10g}"
    if v is None:
        return "-"
    return str(v)


def _grid(header: list[str], rows: list[list]) -> str:
    cells = [header] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(header))]
    lines = ["  ".join(c[i].rjust(widths[i]) for i in range(len(header))) for c in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def render_table(report: dict) -> str:
    cmd = report["command"]
    out = [f"# {cmd} (geocomplexity {report['version']})"]
    if cmd in ("pca-select", "complexity"):
        keys = ["neg_loglik", "dim_term", "log_vol", "ratio_term", "curvature_term", "total"]
        rows = [[r["m"]] + [r["terms"][k] for k in keys] + [len(r["warnings"])] for r in report["results"]]
        out.append(f"N = {report['N']}, s = {report['s']}, vol_mode = {report['config']['vol_mode']}")
        out.append(_grid(["m"] + keys + ["warnings"], rows))
        for r in report["results"]:
            for w in r["warnings"]:
                out.append(f"warning (m={r['m']}): {w}")
        for w in report.get("warnings", []):
            out.append(f"warning: {w}")
        if report["selected_m"] is not None:
            out.append(f"selected m* = {report['selected_m']}")
    elif cmd == "volume":
        r = report["results"][0]
        out.append(_grid(["quantity", "value"], [[k, v] for k, v in r["terms"].items()]))
        lo, hi = (float(v) for v in r["log_I_bracket"])
        out.append(f"log I(s) = {r['log_I']:.10g} (stderr {r['log_I_stderr']:.3g}), bracket [{lo:.10g}, {hi:.10g}]")
        out.append(f"log vol_g(M(s)) = {r['log_vol']:.10g}")
    elif cmd == "laplace-check":
        for res in report["results"]:
            out.append(f"case {res['case']}: slope without curvature {_fmt(res['slope_flat'])}, with {_fmt(res['slope_curved'])}")
            keys = ["oracle", "approx_flat", "approx_curved", "rel_err_flat", "rel_err_curved"]
            out.append(_grid(["N"] + keys, [[r["N"]] + [r[k] for k in keys] for r in res["rows"]]))
    elif cmd == "regret-check":
        keys = ["nml_complexity", "formula", "difference", "jeffreys_regret_balanced", "jeffreys_regret_max"]
        out.append(_grid(["N"] + keys, [[r["N"]] + [r[k] for k in keys] for r in report["results"]]))
        out.append(f"|difference| monotone decreasing: {report['monotone_decrease']}")
    return "\n".join(out) + "\n"


def emit(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, allow_nan=False) + "\n"
    return render_table(report)


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "table"), default="json")
    common.add_argument("--output", help="write the report here instead of stdout")

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("--vol-mode", choices=tuple(VOL_MODES), default="mc")
    sampling.add_argument("--samples", type=_positive_int, default=10**5, help="Monte Carlo samples (default 1e5)")
    sampling.add_argument("--seed", type=_nonneg_int, default=DEFAULT_SEED, help="RNG seed (default 0xC0FFEE)")

    data = argparse.ArgumentParser(add_help=False)
    src = data.add_mutually_exclusive_group()
    src.add_argument("--input", help="CSV/TSV file, rows = observations ('-' for stdin)")
    src.add_argument("--fixture", choices=FIXTURES, help="use a bundled sample instead of --input")
    data.add_argument("--precision", help="measurement precision, one value or one per column")
    data.add_argument("--m-range", help="range of reduced dimensions, A..B (default 1..d)")

    p = argparse.ArgumentParser(prog="geocomplexity", description="Geometric complexity and PCA dimension selection.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("pca-select", parents=[common, sampling, data], help="select the PCA dimension")
    sp.set_defaults(func=cmd_pca_select)

    sp = sub.add_parser("complexity", parents=[common, sampling, data], help="per-m complexity breakdown")
    sp.add_argument("--check-ratio", action="store_true", help="also evaluate the ratio term numerically")
    sp.set_defaults(func=cmd_complexity)

    sp = sub.add_parser("volume", parents=[common, sampling], help="log volume of M(s)")
    sp.add_argument("--m", type=_positive_int, required=True)
    sp.add_argument("--s", type=_nonneg_int, required=True)
    sp.set_defaults(func=cmd_volume)

    sp = sub.add_parser("laplace-check", parents=[common], help="Laplace approximation vs quadrature")
    sp.add_argument("--case", choices=CASES + ("all",), default="all")
    sp.add_argument("--ladder", type=_int_list, default=[25, 50, 100, 200])
    sp.set_defaults(func=cmd_laplace_check)

    sp = sub.add_parser("regret-check", parents=[common], help="Bernoulli NML vs the asymptotic formula")
    sp.add_argument("--ladder", type=_int_list, default=[125, 250, 500, 1000])
    sp.set_defaults(func=cmd_regret_check)
    return p


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ResourceLimitError):
        return EXIT_RESOURCE
    if isinstance(exc, (NotPositiveDefiniteError, DegenerateModelError, AccuracyError, DomainError)):
        return EXIT_DEGENERATE
    if isinstance(exc, (InvalidInputError, ConstraintViolationError)):
        return EXIT_INPUT
    raise exc


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which already matches the input-error code
        return int(exc.code or 0)
    try:
        report = args.func(args)
    except (InvalidInputError, ConstraintViolationError, NotPositiveDefiniteError, DegenerateModelError,
            AccuracyError, DomainError, ResourceLimitError) as exc:
        print(f"geocomplexity {args.command}: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    text = emit(report, args.format)
    if args.output:
        try:
            Path(args.output).write_text(text)
        except OSError as exc:
            print(f"geocomplexity: cannot write {args.output}: {exc}", file=sys.stderr)
            return EXIT_INPUT
    else:
        sys.stdout.write(text)
    return EXIT_OK
