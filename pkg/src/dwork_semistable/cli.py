"""Command-line entry point: ``dworkss <command> ...``.

Every command writes one JSON report that echoes its configuration and
the package version.  Exit status: 0 success, 1 falsifier or failed
verdict, 2 configuration error, 3 budget or precision exhaustion.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import __version__

log = logging.getLogger("dwork_semistable")

OK, FAILED, CONFIG, EXHAUSTED = 0, 1, 2, 3
WORKERS_ENV = "DWORK_SEMISTABLE_WORKERS"


class ConfigInvalid(ValueError):
    pass


@dataclass
class JobConfig:
    command: str
    params: dict[str, Any]
    inputs: dict[str, str] = field(default_factory=dict)
    output: str | None = None
    seed: int | None = None

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"command": self.command, "params": self.params}
        if self.inputs:
            out["inputs"] = self.inputs
        if self.seed is not None:
            out["seed"] = self.seed
        return out


@dataclass
class Outcome:
    status: int
    result: Any
    verdicts: list[str] = field(default_factory=list)


# --- helpers -------------------------------------------------------------------------------------


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise ConfigInvalid(f"expected comma-separated integers, got {text!r}") from exc


def _load(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read {path}: {exc}") from exc


def write_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _character(cfg: JobConfig):
    from .dwork_core import validate_character

    p = cfg.params
    if cfg.inputs.get("character"):
        data = _load(cfg.inputs["character"])
        return validate_character(int(data["N"]), data["a"])
    if p.get("N") is None:
        raise ConfigInvalid("--N is required")
    N = p["N"]
    a = _ints(p["a"]) if p.get("a") else [0] * N
    return validate_character(N, a)


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigInvalid(f"{WORKERS_ENV}={raw!r} is not an integer") from exc
    if n < 1:
        raise ConfigInvalid(f"{WORKERS_ENV} must be positive")
    return n


# --- dwork_core ----------------------------------------------------------------------------------


def cmd_rank(cfg: JobConfig) -> Outcome:
    from .dwork_core import eigen_rank

    return Outcome(OK, eigen_rank(_character(cfg)).to_json())


def cmd_conjugates(cfg: JobConfig) -> Outcome:
    from .dwork_core import conjugate_orbit

    return Outcome(OK, conjugate_orbit(_character(cfg)).to_json())


def cmd_hypothesis(cfg: JobConfig) -> Outcome:
    from .dwork_core import hypothesis_report

    report = hypothesis_report(_character(cfg))
    verdicts = []
    if cfg.params.get("monodromy"):
        from .monodromy import attach_verdicts

        attach_verdicts(report, cfg.params["terms"], cfg.params["tol"])
        verdicts = [e.verdict for e in report.entries if e.evidence is not None]
    return Outcome(_verdict_status(verdicts), report.to_json(), verdicts)


# --- fan and subdivide ---------------------------------------------------------------------------


def _complex(cfg: JobConfig):
    from .fan import ConicalComplex

    data = _load(cfg.inputs["input"])
    if "cones" not in data:
        raise ConfigInvalid("complex JSON needs a 'cones' list")
    return ConicalComplex.from_json(data)


def _section_functional(cfg: JobConfig, cx):
    from .fan import LinearFunctional

    if cfg.params.get("functional"):
        return LinearFunctional(tuple(_ints(cfg.params["functional"])))
    if cx.S is None:
        raise ConfigInvalid("no functional: pass --functional or put 'S' in the complex")
    return cx.S


def cmd_fan_section(cfg: JobConfig) -> Outcome:
    from .fan import cross_section

    cx = _complex(cfg)
    S = _section_functional(cfg, cx)
    sections = [cross_section(c, S).to_json() for c in cx.cones]
    issues = cx.face_compatibility()
    result = {"rank": cx.lattice.rank, "sections": sections, "face_compatibility": issues}
    return Outcome(FAILED if issues else OK, result)


def cmd_subdivide(cfg: JobConfig) -> Outcome:
    from .fan import cross_section, point_from_json
    from .subdivide import coverage_sample, semistable_subdivision

    p = cfg.params
    data = _load(cfg.inputs["input"])
    if "cones" in data:
        cx = _complex(cfg)
        S = _section_functional(cfg, cx)
        pieces = [cross_section(c, S) for c in cx.cones]
    elif "vertices" in data:
        pieces = [data["vertices"]]
    else:
        raise ConfigInvalid("input needs 'cones' (a complex) or 'vertices' (a polytope)")
    results, ok = [], True
    for k, piece in enumerate(pieces):
        if isinstance(piece, list):
            piece = [point_from_json(v) for v in piece]
        sub = semistable_subdivision(piece, p["max_e"], p["budget"])
        out = sub.to_json()
        if p["samples"]:
            out["coverage"] = coverage_sample(sub, p["samples"], cfg.seed or 0)
            ok &= out["coverage"].get("gaps", 0) == 0 and out["coverage"].get("overlaps", 0) == 0
        ver = out["verification"]
        ok &= ver["integral"] and ver["all_unimodular"] and ver["volume_ok"] and all(f["ok"] for f in ver["facets"])
        out["index"] = k
        results.append(out)
    es = [r["e"] for r in results]
    # a common dilation for the whole complex is a multiple of every piece's e
    result = {"e": es[0] if len(es) == 1 else math.lcm(*es), "e_per_piece": es, "pieces": results}
    return Outcome(OK if ok else FAILED, result)


# --- charts --------------------------------------------------------------------------------------


def _charts(cfg: JobConfig, field_spec):
    from .charts import atlas, naive_chart, uk_chart, vk_chart

    p = cfg.params
    N, i = p["N"], p["i"]
    which = p.get("chart") or "atlas"
    if which == "atlas":
        return atlas(N, i, field_spec)
    if which == "naive":
        return [naive_chart(N, i, field_spec)]
    if which == "all":
        return atlas(N, i, field_spec) + [naive_chart(N, i, field_spec)]
    if which[:1] in "UV" and which[1:].isdigit():
        k = int(which[1:])
        return [uk_chart(N, i, k, field_spec) if which[0] == "U" else vk_chart(N, i, k, field_spec)]
    raise ConfigInvalid(f"unknown chart {which!r}: use atlas, naive, all, U<k> or V<k>")


def cmd_charts_atlas(cfg: JobConfig) -> Outcome:
    from .charts import special_fiber_shape

    charts = _charts(cfg, cfg.params.get("field"))
    out = []
    for c in charts:
        entry = c.to_json()
        if c.kind == "Uk":
            entry["special_fiber"] = special_fiber_shape(c)
        out.append(entry)
    return Outcome(OK, {"charts": out})


def cmd_charts_verify(cfg: JobConfig) -> Outcome:
    from .charts import verify_chart_smoothness

    p = cfg.params
    summaries = []
    for chart in _charts(cfg, p["q"]):
        s = verify_chart_smoothness(chart, p["q"], p["locus"], p["budget"], p["workers"])
        log.info("scanned %s: %d points, %d falsifiers", s.chart, s.counted, s.none_count)
        summaries.append(s.to_json())
    falsifiers = sum(s["none_points"] for s in summaries)
    return Outcome(FAILED if falsifiers else OK, {"charts": summaries, "falsifier_points": falsifiers})


def cmd_charts_h0(cfg: JobConfig) -> Outcome:
    from .charts import h0_apply, h0_elements

    p = cfg.params
    results, failures = [], 0
    for chart in _charts(cfg, p["q"]):
        elems = h0_elements(p["N"])
        acts = {g: h0_apply(chart, g) for g in elems}
        bad_comp = []
        for g in elems:
            for h in elems:
                if acts[g * h].substitution != acts[g].compose(acts[h]):
                    bad_comp.append([list(g.xi), list(h.xi)])
        failures += len(bad_comp)
        results.append(
            {
                "chart": chart.meta["name"],
                "elements": len(elems),
                "actions": [a.to_json() for a in acts.values()],
                "composition_failures": bad_comp,
            }
        )
    return Outcome(FAILED if failures else OK, {"charts": results, "composition_failures": failures})


# --- monodromy -----------------------------------------------------------------------------------


def _verdict_status(verdicts: list[str]) -> int:
    from .monodromy import MAXIMALLY_UNIPOTENT

    return OK if all(v == MAXIMALLY_UNIPOTENT for v in verdicts) else FAILED


def cmd_monodromy_check(cfg: JobConfig) -> Outcome:
    from .dwork_core import eigen_rank
    from .monodromy import dwork_check, dwork_period_series

    p = cfg.params
    chi = _character(cfg)
    dwork_period_series(chi.N, 1, chi.a)  # rejects unsupported characters early
    fit, check = dwork_check(chi.N, p["terms"], p["tol"], tuple(_ints(p["powers"])))
    rank = eigen_rank(chi).rank
    result = {
        "N": chi.N,
        "a": list(chi.a),
        "fit": fit.to_json(),
        "rank": rank,
        "order_matches_rank": fit.operator.order == rank,
        **check.to_json(),
    }
    verdicts = [check.verdict.verdict] + [v.verdict for _, v in sorted(check.powers.items())]
    status = _verdict_status(verdicts)
    if fit.operator.order != rank:
        status = FAILED
    return Outcome(status, result, verdicts)


def cmd_monodromy_continue(cfg: JobConfig) -> Outcome:
    from .monodromy import FuchsianOperator, LoopPath, monodromy_along, standard_loop, unipotency_verdict

    p = cfg.params
    try:
        op = FuchsianOperator.from_json(_load(cfg.inputs["operator"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigInvalid(f"bad operator JSON: {exc}") from exc
    if cfg.inputs.get("loop"):
        loop = LoopPath.from_json(_load(cfg.inputs["loop"]))
    else:
        loop = standard_loop(op, complex(p["around"]), p["segments"])
    M = monodromy_along(op, loop, terms=p["terms"])
    result: dict[str, Any] = {"operator": op.to_json(), "monodromy": M.to_json()}
    verdicts = []
    if p.get("verdict"):
        v = unipotency_verdict(M, op.order, p["tol"])
        result["verdict"] = v.to_json()
        verdicts.append(v.verdict)
    return Outcome(_verdict_status(verdicts), result, verdicts)


# --- dispatch ------------------------------------------------------------------------------------


COMMANDS: dict[str, Callable[[JobConfig], Outcome]] = {
    "rank": cmd_rank,
    "conjugates": cmd_conjugates,
    "hypothesis": cmd_hypothesis,
    "fan section": cmd_fan_section,
    "subdivide": cmd_subdivide,
    "charts atlas": cmd_charts_atlas,
    "charts verify": cmd_charts_verify,
    "charts h0": cmd_charts_h0,
    "monodromy check": cmd_monodromy_check,
    "monodromy continue": cmd_monodromy_continue,
}


def _exit_code(exc: BaseException) -> int:
    from .charts import ChartError, ScanBudgetExceeded
    from .dwork_core import CharacterError
    from .fan import FanError
    from .monodromy import NoAnnihilatorFound, PathTooCloseToSingularity, PrecisionLoss, UnsupportedCharacter
    from .subdivide import BudgetExhausted, NoEFound, SubdivisionError

    if isinstance(exc, (ScanBudgetExceeded, BudgetExhausted, NoEFound, PrecisionLoss, NoAnnihilatorFound)):
        return EXHAUSTED
    if isinstance(
        exc,
        (ConfigInvalid, CharacterError, ChartError, FanError, SubdivisionError, UnsupportedCharacter, PathTooCloseToSingularity),
    ):
        return CONFIG
    return FAILED


def run(cfg: JobConfig, timing: bool = False) -> tuple[int, dict[str, Any]]:
    """Execute ``cfg`` and return the exit status with the report."""
    report: dict[str, Any] = {"tool": "dwork-semistable", "version": __version__, "config": cfg.to_json()}
    start = time.perf_counter()
    try:
        fn = COMMANDS[cfg.command]
    except KeyError:
        status = CONFIG
        report["error"] = {"module": "cli", "type": "ConfigInvalid", "message": f"unknown command {cfg.command!r}"}
    else:
        try:
            out = fn(cfg)
        except Exception as exc:  # surfaced with module context
            status = _exit_code(exc)
            module = type(exc).__module__.rsplit(".", 1)[-1]
            report["error"] = {"module": module, "type": type(exc).__name__, "message": str(exc)}
        else:
            status = out.status
            report["result"] = out.result
            if out.verdicts:
                report["verdicts"] = out.verdicts
    elapsed = time.perf_counter() - start
    log.info("%s finished with status %d in %.2fs", cfg.command, status, elapsed)
    report["status"] = status
    if timing:
        report["wall_time_s"] = round(elapsed, 3)
    return status, report


# --- argument parsing ----------------------------------------------------------------------------


class _JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        return json.dumps({"level": record.levelname, "logger": record.name, "message": record.getMessage()})


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dworkss", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--json", action="store_true", help="structured JSON logs on stderr")
    ap.add_argument("--verbose", "-v", action="store_true")
    ap.add_argument("--timing", action="store_true", help="add wall time to the report")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def out_opts(p: argparse.ArgumentParser, *names: str) -> None:
        p.add_argument(*(names or ("--out",)), dest="out", help="report path (stdout if omitted)")

    def character(p: argparse.ArgumentParser) -> None:
        p.add_argument("--N", type=int)
        p.add_argument("--a", help="exponents, e.g. 0,0,1,4")
        p.add_argument("--character", help='JSON file {"N": ..., "a": [...]}')

    for name in ("rank", "conjugates"):
        p = sub.add_parser(name)
        character(p)
        out_opts(p)
    p = sub.add_parser("hypothesis")
    character(p)
    p.add_argument("--monodromy", action="store_true", help="attach numerical verdicts")
    p.add_argument("--terms", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-6)
    out_opts(p)

    fan = sub.add_parser("fan").add_subparsers(dest="sub", required=True)
    p = fan.add_parser("section")
    p.add_argument("--input", required=True)
    p.add_argument("--functional", help="override S, e.g. 1,1,0")
    out_opts(p)

    p = sub.add_parser("subdivide")
    p.add_argument("--input", required=True)
    p.add_argument("--functional")
    p.add_argument("--max-e", dest="max_e", type=int, default=24)
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--samples", type=int, default=0, help="coverage sample points per piece")
    p.add_argument("--seed", type=int, default=0)
    out_opts(p)

    charts = sub.add_parser("charts").add_subparsers(dest="sub", required=True)
    for name in ("atlas", "verify", "h0"):
        p = charts.add_parser(name)
        p.add_argument("--N", type=int, required=True)
        p.add_argument("--i", type=int, required=True)
        p.add_argument("--chart", default="atlas", help="atlas, naive, all, U<k> or V<k>")
        if name == "atlas":
            p.add_argument("--field", default=None, help="q7, 7 or omitted for the rationals")
            out_opts(p, "--emit", "--out")
        else:
            p.add_argument("--q", type=int, required=True)
        if name == "verify":
            p.add_argument("--locus", default="all", choices=("all", "T0", "Tnz"))
            p.add_argument("--budget", type=int, default=10**8)
            p.add_argument("--workers", type=int, default=None)
            out_opts(p, "--report", "--out")
        if name == "h0":
            out_opts(p)

    mono = sub.add_parser("monodromy").add_subparsers(dest="sub", required=True)
    p = mono.add_parser("check")
    character(p)
    p.add_argument("--terms", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--powers", default="2,6")
    out_opts(p)
    p = mono.add_parser("continue")
    p.add_argument("--operator", required=True)
    p.add_argument("--loop")
    p.add_argument("--around", type=float, default=0.0, help="centre of the standard loop when --loop is absent")
    p.add_argument("--segments", type=int, default=16)
    p.add_argument("--terms", type=int, default=80)
    p.add_argument("--verdict", action="store_true")
    p.add_argument("--tol", type=float, default=1e-6)
    out_opts(p)
    return ap


_INPUTS = ("input", "operator", "loop", "character")
_SKIP = {"cmd", "sub", "json", "verbose", "timing", "out", "seed"}


def config_from_args(ns: argparse.Namespace) -> JobConfig:
    command = " ".join(x for x in (ns.cmd, getattr(ns, "sub", None)) if x)
    raw = vars(ns)
    inputs = {k: raw[k] for k in _INPUTS if raw.get(k)}
    params = {k: v for k, v in sorted(raw.items()) if k not in _SKIP and k not in _INPUTS}
    if "workers" in params and params["workers"] is None:
        params["workers"] = default_workers()
    if command == "monodromy check" and params.get("N") is None and not inputs.get("character"):
        raise ConfigInvalid("--N is required")
    return JobConfig(command, params, inputs, raw.get("out"), raw.get("seed"))


def main(argv: list[str] | None = None) -> int:
    ns = _parser().parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonFormatter() if ns.json else logging.Formatter("%(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.INFO if (ns.verbose or ns.json) else logging.WARNING)
    log.propagate = False
    try:
        cfg = config_from_args(ns)
    except ConfigInvalid as exc:
        log.error("%s", exc)
        return CONFIG
    status, report = run(cfg, ns.timing)
    text = json.dumps(report, indent=2) + "\n"
    if cfg.output:
        write_atomic(cfg.output, text)
    else:
        sys.stdout.write(text)
    if "error" in report:
        log.error("%s: %s", report["error"]["type"], report["error"]["message"])
    return status


if __name__ == "__main__":
    sys.exit(main())
