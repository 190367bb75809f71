"""Command line front end.

Every subcommand emits deterministic CSV or JSON (byte-identical for
identical argv and seed once --no-timestamp removes the timing fields), and
the curve-producing subcommands additionally render a figure next to the
delimited output unless --no-plot is given.

Exit codes: 0 success (including sweeps with per-row failures), 2 usage
error, 3 computational error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .capacity import CapacitySearchConfig, capacity_lower_bound, mi_sweep, mutual_information
from .channel import JitterParams, build_joint_chain, jitter_entropy, make_source, output_alphabet
from .errors import BitshiftError, UsageError
from .markov import sample_path
from .refine import run_bounds
from .renewal import renewal_base_probability, renewal_entropy_estimate, return_word_probabilities
from .sofic import determinize, minimal_forbidden_words, presentation, topological_entropy

SCHEMA = "bitshift/1"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(command, inputs, results, ns, wall_time) -> str:
    doc = {
        "schema": SCHEMA,
        "command": command,
        "version": __version__,
        "inputs": inputs,
        "results": results,
    }
    if not ns.no_timestamp:
        doc["timestamp"] = datetime.now(timezone.utc).isoformat()
        doc["wall_time_s"] = wall_time
    return json.dumps(doc, indent=2) + "\n"


def _write(ns, text: str) -> None:
    if ns.out:
        Path(ns.out).write_text(text)
    else:
        sys.stdout.write(text)


def _plot_path(ns):
    if ns.no_plot:
        return None
    if ns.plot_file:
        return ns.plot_file
    if ns.out:
        return str(Path(ns.out).with_suffix(".png"))
    return None


def _add_output_args(p, default_format):
    p.add_argument("--format", choices=("csv", "json"), default=default_format,
                   help="output format")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit timestamp and wall-time fields so reruns are byte-identical")
    p.add_argument("--config", default=None, help="flat key=value file mirroring the flags")
    p.add_argument("--seed", type=int, default=0, help="random seed where applicable")


def _add_source_args(p):
    p.add_argument("--d", type=int, required=True, help="minimum run length (>= 2)")
    p.add_argument("--k", type=int, required=True, help="maximum run length (> d)")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--geometric", type=float, default=None,
                       help="truncated-geometric ratio for the run-length law")
    group.add_argument("--probs", default=None,
                       help="explicit comma-separated run-length probabilities p_d..p_k")


def _add_stop_args(p, require=False):
    p.add_argument("--tol-bits", type=float, default=None,
                   help="stop when upper-lower drops to this many bits")
    p.add_argument("--max-cells", type=int, default=None,
                   help="stop when the partition reaches this many cylinders")
    p.add_argument("--strategy", choices=("greedy", "uniform"), default="greedy",
                   help="refinement strategy")


def _add_plot_args(p):
    p.add_argument("--plot-file", default=None,
                   help="figure path (default: the --out path with a .png suffix)")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="bitshift",
        description="Entropy bounds, mutual information, and output-shift structure "
        "of the bit-shift (jitter) channel on (d,k) run-length limited sources.",
        epilog="Set BITSHIFT_THREADS to parallelize independent sweep points.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    class _Sub:
        def add_parser(self, name, **kwargs):
            kwargs.setdefault("formatter_class", argparse.ArgumentDefaultsHelpFormatter)
            return subparsers.add_parser(name, **kwargs)

    sub = _Sub()

    p = sub.add_parser("entropy", help="certified entropy-rate interval of the output process",
                       epilog="CSV columns: eps,strategy,lower,upper,gap,cells,converged. "
                              "Trace CSV columns: step,cells,lower,upper,gap.")
    _add_source_args(p)
    p.add_argument("--eps", type=float, required=True, help="jitter level in [0, 1/2]")
    _add_stop_args(p)
    p.add_argument("--trace", default=None, help="also write a per-step (cells, bounds) CSV here")
    _add_plot_args(p)
    _add_output_args(p, "json")

    p = sub.add_parser("mi-sweep", help="mutual information interval on a grid of eps values",
                       epilog="CSV columns: eps,mi_lower,mi_upper,h_lower,h_upper,h_jitter,"
                              "cells,strategy,status. A failed point is marked in its status "
                              "column and does not fail the sweep.")
    _add_source_args(p)
    p.add_argument("--eps-grid", required=True,
                   help="grid as start:stop:step (inclusive) or a comma list of values")
    _add_stop_args(p)
    _add_plot_args(p)
    _add_output_args(p, "csv")

    p = sub.add_parser("capacity-lb", help="capacity lower bound over iid inputs",
                       epilog="CSV columns: evaluation,mi_lower,incumbent.")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--evaluations", type=int, default=200, help="objective evaluation budget")
    p.add_argument("--eval-tol-bits", type=float, default=None,
                   help="per-evaluation refinement tolerance")
    p.add_argument("--eval-max-cells", type=int, default=20_000,
                   help="per-evaluation refinement cell budget")
    p.add_argument("--spread", type=float, default=0.5, help="initial simplex spread")
    _add_output_args(p, "json")

    p = sub.add_parser("forbidden", help="minimal forbidden words of the output shift",
                       epilog="CSV columns: length,word (letters comma-separated).")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--max-len", type=int, required=True, help="maximum word length (>= 2)")
    _add_output_args(p, "csv")

    p = sub.add_parser("htop", help="topological entropy of the output shift")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    _add_output_args(p, "json")

    p = sub.add_parser("renewal", help="first-return entropy estimate (diagnostic)",
                       epilog="Words CSV columns: word,probability.")
    _add_source_args(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--r-max", type=int, required=True, help="maximum excursion length")
    p.add_argument("--floor", type=float, default=0.0,
                   help="drop excursion prefixes below this conditional probability")
    p.add_argument("--max-words", type=int, default=500_000,
                   help="retained-prefix cap before ResourceLimit")
    p.add_argument("--words-out", default=None, help="dump (return word, probability) CSV here")
    _add_output_args(p, "json")

    p = sub.add_parser("sample", help="sample output letters from the joint chain",
                       epilog="CSV column: letter.")
    _add_source_args(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n", type=int, required=True, help="number of letters (>= 1)")
    _add_output_args(p, "csv")

    p = sub.add_parser("compare-strategies",
                       help="greedy vs uniform refinement traces on identical inputs",
                       epilog="CSV columns: strategy,step,cells,lower,upper,gap.")
    _add_source_args(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--max-cells", type=int, required=True, help="shared cell budget")
    _add_plot_args(p)
    _add_output_args(p, "csv")

    return parser


def _apply_config(argv: list[str]) -> list[str]:
    """Inject key=value pairs from --config FILE as flags after the subcommand."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        raise UsageError("--config needs a file path")
    path = Path(argv[at + 1])
    if not path.exists():
        raise UsageError(f"--config file not found: {path}")
    injected: list[str] = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"--config line is not key=value: {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                injected.append(flag)
        else:
            injected.extend([flag, value])
    # flags given on the command line come later and win on conflicts
    return argv[:1] + injected + argv[1:]


def _parse_probs(ns):
    if ns.probs is None:
        return None
    try:
        return [float(x) for x in ns.probs.split(",")]
    except ValueError as exc:
        raise UsageError(f"--probs: {exc}") from exc


def _source(ns):
    if ns.d < 2:
        raise UsageError(f"--d must be >= 2 (got {ns.d})")
    if ns.k <= ns.d:
        raise UsageError(f"--k must exceed --d (got {ns.k})")
    return make_source(ns.d, ns.k, probs=_parse_probs(ns), geometric=ns.geometric)


def _check_eps(value: float, flag: str = "--eps") -> float:
    if not 0.0 <= value <= 0.5:
        raise UsageError(f"{flag} must lie in [0, 1/2] (got {value})")
    return value


def _parse_grid(text: str) -> list[float]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError("--eps-grid expects start:stop:step")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError as exc:
            raise UsageError(f"--eps-grid: {exc}") from exc
        if step <= 0 or stop < start:
            raise UsageError("--eps-grid needs step > 0 and stop >= start")
        count = int(round((stop - start) / step)) + 1
        grid = [start + i * step for i in range(count)]
        grid = [g for g in grid if g <= stop + 1e-12]
    else:
        try:
            grid = [float(p) for p in text.split(",")]
        except ValueError as exc:
            raise UsageError(f"--eps-grid: {exc}") from exc
    for g in grid:
        _check_eps(g, "--eps-grid")
    return grid


def _check_stop(ns) -> None:
    if ns.tol_bits is None and ns.max_cells is None:
        raise UsageError("a stopping rule is required: --tol-bits and/or --max-cells")
    if ns.tol_bits is not None and ns.tol_bits <= 0:
        raise UsageError("--tol-bits must be positive")


def _source_inputs(ns) -> dict:
    return {
        "d": ns.d,
        "k": ns.k,
        "geometric": ns.geometric,
        "probs": _parse_probs(ns),
    }


def _cmd_entropy(ns, t0) -> int:
    source = _source(ns)
    _check_eps(ns.eps)
    _check_stop(ns)
    joint = build_joint_chain(source, JitterParams(ns.eps))
    trace = [] if (ns.trace or ns.plot_file) else None
    interval = run_bounds(joint, ns.strategy, tol_bits=ns.tol_bits,
                          max_cells=ns.max_cells, trace=trace)
    results = {
        "eps": ns.eps,
        "strategy": interval.strategy,
        "lower": interval.lower,
        "upper": interval.upper,
        "gap": interval.gap,
        "cells": interval.cells,
        "converged": interval.converged,
        "h_jitter": jitter_entropy(ns.eps),
    }
    if ns.trace:
        rows = [(i, c, lo, hi, hi - lo) for i, (c, lo, hi) in enumerate(trace)]
        Path(ns.trace).write_text(_csv_text(("step", "cells", "lower", "upper", "gap"), rows))
    if trace is not None and ns.plot_file:
        from .report import render_trace

        render_trace(trace, ns.strategy, ns.plot_file,
                     title=f"entropy bounds, d={ns.d} k={ns.k} eps={ns.eps}")
    if ns.format == "csv":
        text = _csv_text(("eps", "strategy", "lower", "upper", "gap", "cells", "converged"),
                         [(ns.eps, interval.strategy, interval.lower, interval.upper,
                           interval.gap, interval.cells, interval.converged)])
    else:
        text = _json_text("entropy", {**_source_inputs(ns), "eps": ns.eps,
                                      "strategy": ns.strategy, "tol_bits": ns.tol_bits,
                                      "max_cells": ns.max_cells},
                          results, ns, time.perf_counter() - t0)
    _write(ns, text)
    return 0


def _cmd_mi_sweep(ns, t0) -> int:
    source = _source(ns)
    grid = _parse_grid(ns.eps_grid)
    _check_stop(ns)
    points = mi_sweep(source, grid, tol_bits=ns.tol_bits, max_cells=ns.max_cells,
                      strategy=ns.strategy)
    rows = []
    docs = []
    for pt in points:
        if pt.ok:
            r = pt.result
            rows.append((pt.eps, r.mi_lower, r.mi_upper, r.h_out.lower, r.h_out.upper,
                         r.h_jitter, r.h_out.cells, r.h_out.strategy, "ok"))
            docs.append({"eps": pt.eps, "mi_lower": r.mi_lower, "mi_upper": r.mi_upper,
                         "h_lower": r.h_out.lower, "h_upper": r.h_out.upper,
                         "h_jitter": r.h_jitter, "cells": r.h_out.cells,
                         "strategy": r.h_out.strategy, "status": "ok"})
        else:
            rows.append((pt.eps, "", "", "", "", "", "", "", pt.error))
            docs.append({"eps": pt.eps, "status": pt.error})
    if ns.format == "csv":
        text = _csv_text(("eps", "mi_lower", "mi_upper", "h_lower", "h_upper",
                          "h_jitter", "cells", "strategy", "status"), rows)
    else:
        text = _json_text("mi-sweep", {**_source_inputs(ns), "eps_grid": grid,
                                       "strategy": ns.strategy, "tol_bits": ns.tol_bits,
                                       "max_cells": ns.max_cells},
                          {"points": docs}, ns, time.perf_counter() - t0)
    _write(ns, text)
    fig = _plot_path(ns)
    if fig and any(pt.ok for pt in points):
        from .report import render_mi_sweep

        render_mi_sweep(points, fig, title=f"d={ns.d} k={ns.k}")
    return 0


def _cmd_capacity(ns, t0) -> int:
    if ns.d < 2 or ns.k <= ns.d:
        raise UsageError(f"need --d >= 2 and --k > --d (got {ns.d}, {ns.k})")
    _check_eps(ns.eps)
    cfg = CapacitySearchConfig(evaluations=ns.evaluations, tol_bits=ns.eval_tol_bits,
                               max_cells=ns.eval_max_cells, spread=ns.spread, seed=ns.seed)
    res = capacity_lower_bound(ns.d, ns.k, ns.eps, cfg)
    results = {
        "eps": ns.eps,
        "best_p": [float(x) for x in res.best_source.p],
        "mi_lower": res.best.mi_lower,
        "mi_upper": res.best.mi_upper,
        "h_jitter": res.best.h_jitter,
        "cells": res.best.h_out.cells,
        "evaluations": res.evaluations,
    }
    if ns.format == "csv":
        rows = [(i, mi, inc) for i, (_, mi, inc) in enumerate(res.trace)]
        text = _csv_text(("evaluation", "mi_lower", "incumbent"), rows)
    else:
        text = _json_text("capacity-lb",
                          {"d": ns.d, "k": ns.k, "eps": ns.eps,
                           "evaluations": ns.evaluations, "eval_tol_bits": ns.eval_tol_bits,
                           "eval_max_cells": ns.eval_max_cells, "seed": ns.seed},
                          results, ns, time.perf_counter() - t0)
    _write(ns, text)
    return 0


def _cmd_forbidden(ns, t0) -> int:
    if ns.d < 2 or ns.k <= ns.d:
        raise UsageError(f"need --d >= 2 and --k > --d (got {ns.d}, {ns.k})")
    if ns.max_len < 2:
        raise UsageError("--max-len must be >= 2")
    dfa = determinize(presentation(ns.d, ns.k))
    words = minimal_forbidden_words(dfa, ns.max_len)
    if ns.format == "csv":
        text = _csv_text(("length", "word"),
                         [(len(w), ",".join(str(x) for x in w)) for w in words])
    else:
        text = _json_text("forbidden", {"d": ns.d, "k": ns.k, "max_len": ns.max_len},
                          {"count": len(words), "words": [list(w) for w in words]},
                          ns, time.perf_counter() - t0)
    _write(ns, text)
    return 0


def _cmd_htop(ns, t0) -> int:
    if ns.d < 2 or ns.k <= ns.d:
        raise UsageError(f"need --d >= 2 and --k > --d (got {ns.d}, {ns.k})")
    dfa = determinize(presentation(ns.d, ns.k))
    h = topological_entropy(dfa)
    results = {
        "h_top_bits": h,
        "letters": list(output_alphabet(ns.d, ns.k)),
        "subset_states": dfa.n_states,
    }
    if ns.format == "csv":
        text = _csv_text(("d", "k", "h_top_bits", "subset_states"),
                         [(ns.d, ns.k, h, dfa.n_states)])
    else:
        text = _json_text("htop", {"d": ns.d, "k": ns.k}, results, ns,
                          time.perf_counter() - t0)
    _write(ns, text)
    return 0


def _cmd_renewal(ns, t0) -> int:
    source = _source(ns)
    _check_eps(ns.eps)
    joint = build_joint_chain(source, JitterParams(ns.eps))
    base = renewal_base_probability(joint)
    estimate, coverage = renewal_entropy_estimate(joint, ns.r_max, floor=ns.floor,
                                                  max_words=ns.max_words)
    if ns.words_out:
        table = return_word_probabilities(joint, ns.r_max, floor=ns.floor,
                                          max_words=ns.max_words)
        rows = [(",".join(str(x) for x in w), q) for w, q in table.entries]
        Path(ns.words_out).write_text(_csv_text(("word", "probability"), rows))
    results = {
        "eps": ns.eps,
        "r_max": ns.r_max,
        "base_probability": base,
        "estimate_bits": estimate,
        "coverage": coverage,
    }
    if ns.format == "csv":
        text = _csv_text(("eps", "r_max", "base_probability", "estimate_bits", "coverage"),
                         [(ns.eps, ns.r_max, base, estimate, coverage)])
    else:
        text = _json_text("renewal", {**_source_inputs(ns), "eps": ns.eps,
                                      "r_max": ns.r_max, "floor": ns.floor,
                                      "max_words": ns.max_words},
                          results, ns, time.perf_counter() - t0)
    _write(ns, text)
    return 0


def _cmd_sample(ns, t0) -> int:
    source = _source(ns)
    _check_eps(ns.eps)
    if ns.n < 1:
        raise UsageError("--n must be >= 1")
    joint = build_joint_chain(source, JitterParams(ns.eps))
    letters = sample_path(joint, ns.n, ns.seed)
    if ns.format == "csv":
        text = _csv_text(("letter",), [(int(x),) for x in letters])
    else:
        text = _json_text("sample", {**_source_inputs(ns), "eps": ns.eps,
                                     "n": ns.n, "seed": ns.seed},
                          {"letters": [int(x) for x in letters]}, ns,
                          time.perf_counter() - t0)
    _write(ns, text)
    return 0


def _cmd_compare(ns, t0) -> int:
    source = _source(ns)
    _check_eps(ns.eps)
    joint = build_joint_chain(source, JitterParams(ns.eps))
    traces = {}
    finals = {}
    for strategy in ("greedy", "uniform"):
        trace: list = []
        interval = run_bounds(joint, strategy, max_cells=ns.max_cells, trace=trace)
        traces[strategy] = trace
        finals[strategy] = interval
    rows = []
    for strategy in ("greedy", "uniform"):
        for i, (c, lo, hi) in enumerate(traces[strategy]):
            rows.append((strategy, i, c, lo, hi, hi - lo))
    if ns.format == "csv":
        text = _csv_text(("strategy", "step", "cells", "lower", "upper", "gap"), rows)
    else:
        text = _json_text("compare-strategies",
                          {**_source_inputs(ns), "eps": ns.eps, "max_cells": ns.max_cells},
                          {s: {"cells": finals[s].cells, "lower": finals[s].lower,
                               "upper": finals[s].upper, "gap": finals[s].gap}
                           for s in finals}, ns, time.perf_counter() - t0)
    _write(ns, text)
    fig = _plot_path(ns)
    if fig:
        from .report import render_strategy_comparison

        render_strategy_comparison(traces, fig,
                                   title=f"d={ns.d} k={ns.k} eps={ns.eps}")
    return 0


_HANDLERS = {
    "entropy": _cmd_entropy,
    "mi-sweep": _cmd_mi_sweep,
    "capacity-lb": _cmd_capacity,
    "forbidden": _cmd_forbidden,
    "htop": _cmd_htop,
    "renewal": _cmd_renewal,
    "sample": _cmd_sample,
    "compare-strategies": _cmd_compare,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    t0 = time.perf_counter()
    try:
        argv = _apply_config(argv)
        ns = _build_parser().parse_args(argv)
        return _HANDLERS[ns.command](ns, t0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except BitshiftError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
