"""Command line front end.

    cubic-rigidity <command> --config cfg.json [--format json|text] [--jobs N]

Exit codes: 0 verified or contradiction certified, 1 counterexample or
mathematical failure, 2 input error. Every report embeds its input section,
so ``cubic-rigidity verify --config report.json`` can replay it.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

import jsonschema

from . import chow, exclusion, graph, lines, staircase, untwist
from .certs import check
from .errors import CertificateError, DomainError, InputError, RigidityError
from .exact import rat_json, to_rat

RAT = {"oneOf": [{"type": "integer"},
                 {"type": "string", "pattern": r"^\s*[+-]?\d+(/[+-]?\d+)?\s*$"}]}
RATS = {"type": "array", "items": RAT}
INT = {"type": "integer"}
RANGE = {"oneOf": [RAT, RATS, {"type": "object", "required": ["min", "max"],
                                "properties": {"min": RAT, "max": RAT, "step": RAT},
                                "additionalProperties": False}]}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "fibration": {
            "type": "object", "required": ["a", "m"], "additionalProperties": False,
            "properties": {"a": {"type": "array", "items": INT, "minItems": 3, "maxItems": 3},
                           "m": INT, "general_position": {"type": "boolean"}},
        },
        "pencil": {
            "type": "object", "required": ["n", "l"], "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 0}, "l": {"type": "integer", "minimum": 0},
                "mode": {"enum": ["strict", "lenient"]},
                "curves": {"type": "array", "items": {
                    "type": "object", "required": ["kind", "nu"], "additionalProperties": False,
                    "properties": {"kind": {"enum": ["section", "bisection", "vertical"]},
                                   "nu": {"type": "integer", "minimum": 0},
                                   "name": {"type": "string"},
                                   "nu_after": {"type": "array",
                                                "items": {"type": "integer", "minimum": 0}}}}},
            },
        },
        "line_case": {
            "type": "object", "required": ["case"], "additionalProperties": False,
            "properties": {
                "case": {"enum": list(lines.CASES)},
                "k": RATS, "d": RAT, "d_i": RATS, "m": RAT, "multC": RAT,
                "singular_corner": {"type": "boolean"},
                "T": RAT, "n": RAT, "e": RAT, "nuF": RAT,
                "p": RATS, "q": RATS, "degR": RAT,
                "M": {"type": "integer", "minimum": 0}, "N": {"type": "integer", "minimum": 0},
                "L1_choice_asserted": {"type": "boolean"},
            },
        },
        "staircase": {
            "type": "object", "required": ["M", "special"], "additionalProperties": False,
            "properties": {
                "M": {"type": "integer", "minimum": 1}, "special": {"type": "boolean"},
                "n": RAT, "lambdas": RATS,
                "ledger": {
                    "type": "object", "required": ["rows"], "additionalProperties": False,
                    "properties": {
                        "n": RAT, "C0_dot_L": RAT, "C01_dot_L1": RAT,
                        "integral": {"type": "boolean"},
                        "rows": {"type": "array", "items": {
                            "type": "object", "required": ["lambda"], "additionalProperties": False,
                            "properties": {k: RAT for k in
                                           ("lambda", "k", "d_h", "d_v", "alpha", "beta")}}},
                    },
                },
            },
        },
        "graph": {
            "type": "object", "required": ["K"], "additionalProperties": False,
            "properties": {
                "K": {"type": "integer", "minimum": 1},
                "edges": {"type": "array", "items": {"type": "array", "items": INT,
                                                     "minItems": 2, "maxItems": 2}},
                "pointPhase": {"type": "integer", "minimum": 0},
                "nu": RATS, "delta": RATS,
                "in_E": {"type": "array", "items": {"type": "boolean"}},
                "in_E_plus": {"type": "array", "items": {"type": "boolean"}},
                "in_E_minus": {"type": "array", "items": {"type": "boolean"}},
                "case": {"enum": ["A", "B", "C"]}, "special": {"type": "boolean"},
                "M": {"type": "integer", "minimum": 1}, "singular_center": {"type": "boolean"},
                "n": RAT, "lambdas": RATS, "e": RAT,
            },
        },
        "exclusion": {
            "type": "object", "required": ["case"], "additionalProperties": False,
            "properties": {
                "case": {"enum": ["A", "B", "C"]}, "special": {"type": "boolean"},
                "singular_center": {"type": "boolean"}, "M": {"type": "integer", "minimum": 1},
                "n": RAT, "e": RAT, "lambdas": RATS,
                **{k: RAT for k in ("eps", "eps_plus", "eps_minus", "Sigma0", "Sigma1", "Sigma",
                                    "sum_p_squared", "Sigma_lower", "Sigma_plus", "Sigma_minus",
                                    "C0_dot_L", "C01_dot_L1", "nuF")},
                "ranges": {"type": "object", "additionalProperties": False,
                           "properties": {k: RANGE for k in
                                          ("n", "M", "eps", "eps_plus", "eps_minus", "Sigma0",
                                           "Sigma1", "Sigma", "e", "lambda_fractions")}},
            },
        },
    },
}

VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)

SECTION = {"k2": "fibration", "untwist": "pencil", "lines": "line_case",
           "staircase": "staircase", "graph": "graph", "exclude": "exclusion"}

EXIT = {"verified": 0, "contradiction-certified": 0, "counterexample": 1, "input-error": 2}


# --------------------------------------------------------------------------
# commands; each takes the section dict and returns (verdict, result dict)


def cmd_k2(sec, jobs=1):
    a1, a2, a3 = sec["a"]
    model = chow.BundleModel(a1, a2, a3, sec["m"], sec.get("general_position", True))
    kl, kf = chow.k2_dot_L(model), chow.k2_dot_F(model)
    return "verified", {"k2_dot_L": rat_json(kl), "k2_dot_F": rat_json(kf),
                        "closed_form": 12 - 5 * model.m - 3 * model.c1,
                        "sufficient": chow.k2_condition_sufficient(model)}


def cmd_untwist(sec, jobs=1):
    raw = sec.get("curves", [])
    curves = tuple(untwist.MaximalCurve(c["kind"], c["nu"], c.get("name")) for c in raw)
    state = untwist.PencilState(sec["n"], sec["l"], curves)

    def resupply(step, st, j):
        after = raw[j].get("nu_after")
        if after is None or step >= len(after):
            raise InputError(f"curve {j} needs nu_after[{step}] in strict mode")
        return after[step]

    mode = sec.get("mode", "strict")
    word, final = untwist.untwist_all(state, mode, resupply if mode == "strict" else None)
    steps = [{"curve": s.curve, "kind": s.kind, "tau": f"tau_{raw[s.curve].get('name') or 'C' + str(s.curve)}",
              "n_before": s.before.n, "n_after": s.after.n,
              "nu_before": s.before.curves[s.curve].nu, "nu_after": s.after.curves[s.curve].nu}
             for s in word.steps]
    decreasing = all(s["n_after"] < s["n_before"] for s in steps)
    if not decreasing:
        raise CertificateError("n failed to decrease along the untwisting word")
    return "verified", {"word": [s["tau"] for s in steps], "steps": steps,
                        "final": {"n": final.n, "l": final.l,
                                  "nu": [c.nu for c in final.curves]},
                        "no_maximal_curves": not final.maximal()}


def _line_data(sec):
    keys = ("k", "d", "d_i", "m", "singular_corner", "p", "q", "degR", "M", "N",
            "L1_choice_asserted")
    return lines.VerticalCycleData(sec["case"], **{k: sec[k] for k in keys if k in sec})


def cmd_lines(sec, jobs=1):
    data = _line_data(sec)
    case = sec["case"]
    if case == "six_lines":
        for k in ("n", "e"):
            if k not in sec:
                raise InputError(f"six_lines needs {k}")
        out = lines.six_lines_bound(data, sec["n"], sec["e"], sec.get("nuF"))
        return "verified", {"kind": "six_lines", "result": _jsonable(out)}
    if "T" in sec:
        T = lines.FiberThreshold(sec["T"])
    elif all(k in sec for k in ("n", "e", "nuF")):
        T = lines.FiberThreshold.from_triple(sec["n"], sec["e"], sec["nuF"])
    else:
        raise InputError("give T or the triple n, e, nuF")
    if case == "no_line":
        cert = lines.no_line_contradiction(data.d, T)
        return "contradiction-certified", {"kind": "no_line", "T": rat_json(T.T), "result": cert}
    if case == "one_line":
        sel = lines.one_line_bound(data.k[0], data.d, T, sec.get("multC"))
    elif case == "two_lines":
        sel = lines.two_lines_select(data, T)
    else:
        sel = lines.three_lines_select(data, T)
    return "verified", {"kind": case, "T": rat_json(T.T), "chosen_index": sel.chosen_index,
                        "certificate": sel.certificate, "hypotheses": sel.hypotheses}


def cmd_staircase(sec, jobs=1):
    st = staircase.build_staircase(sec["M"], sec["special"])
    pull = staircase.pullback_fiber_class(st)
    out = {"d_F": st.d_F, "pullback_fiber": [pull["F"]] + [pull[f"E{i}"] for i in range(1, st.M + 1)],
           "discrepancies": [staircase.discrepancy(st, i) for i in range(1, st.M + 1)]}
    verdict = "verified"
    if "lambdas" in sec:
        if "n" not in sec:
            raise InputError("z recursion needs n")
        z = staircase.z_recursion(sec["n"], sec["lambdas"],
                                  staircase.StairCycleClass(chow.VCycleClass(0, 0)))
        out["z"] = {"s": rat_json(z.cs), "f": [rat_json(x) for x in z.cf]}
    if "ledger" in sec:
        lg = sec["ledger"]
        n = lg.get("n", sec.get("n"))
        if n is None:
            raise InputError("ledger needs n")
        rows = [staircase.LedgerRow(r["lambda"], r.get("k", 0), r.get("d_h", 0), r.get("d_v", 0),
                                    r.get("alpha", 0), r.get("beta", 0)) for r in lg["rows"]]
        ledger = staircase.LevelLedger(n, rows, lg.get("C0_dot_L", 0), lg.get("C01_dot_L1", 0),
                                       lg.get("integral", False))
        bound = staircase.ledger_bound(st, ledger)
        out["ledger_bound"] = bound
        if not bound["holds"]:
            verdict = "counterexample"
    return verdict, out


def cmd_graph(sec, jobs=1):
    g = graph.ResolutionGraph(sec["K"], tuple(tuple(e) for e in sec.get("edges", [])),
                              sec.get("pointPhase"), tuple(sec.get("nu", ())),
                              tuple(sec.get("delta", ())), tuple(sec.get("in_E", ())),
                              tuple(sec.get("in_E_plus", ())), tuple(sec.get("in_E_minus", ())))
    out = {"p": graph.path_counts(g)}
    verdict = "verified"
    if "case" in sec:
        tag = graph.CaseTag(sec["case"], sec.get("special", False), sec.get("M", 1),
                            sec.get("singular_center", False))
        agg = graph.aggregates(g, tag)
        out["aggregates"] = agg.to_json()
        if tag.case == "B" and g.nu:
            graph.check_case_b_multiplicities(g)
        try:
            out["nuF"] = rat_json(graph.valuation_of_fiber(tag, agg, 2 if tag.special else 1))
        except InputError as exc:
            out["nuF"] = f"not covered: {exc}"
        if g.nu and g.delta and "n" in sec and "lambdas" in sec:
            nf = graph.nf_identity(tag, agg, sec["n"], sec["lambdas"], g.nu, g.delta, sec.get("e"))
            out["noether_fano"] = nf
            if not nf["holds"]:
                verdict = "counterexample"
    return verdict, out


def cmd_exclude(sec, jobs=1):
    if "ranges" in sec:
        rep = exclusion.feasibility_search(sec["case"], sec["ranges"], sec.get("special", False),
                                           sec.get("singular_center", False), jobs=jobs)
        rep.pop("seconds", None)
        rep.pop("backend", None)
        return rep["verdict"], rep
    params = exclusion.CaseParams.from_dict(sec)
    cert = exclusion.exclude_case(params)
    return cert["verdict"], cert


COMMANDS = {"k2": cmd_k2, "untwist": cmd_untwist, "lines": cmd_lines, "staircase": cmd_staircase,
            "graph": cmd_graph, "exclude": cmd_exclude}


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return rat_json(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    return str(obj)


# --------------------------------------------------------------------------
# dispatch


def run(command: str, config, jobs: int = 1) -> dict:
    """Validate and execute; never raises for bad input, returns a report."""
    t0 = time.perf_counter()
    report = {"command": command}
    try:
        if not isinstance(config, dict):
            raise InputError("config must be a JSON object")
        VALIDATOR.validate(config)
        name = SECTION[command]
        if name not in config:
            raise InputError(f"command '{command}' needs a '{name}' section")
        report["input"] = {name: config[name]}
        verdict, result = COMMANDS[command](config[name], jobs=jobs)
        report["verdict"] = verdict
        report["result"] = _jsonable(result)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        report.update(verdict="input-error", error=f"schema: {exc.message} at /{path}")
    except (DomainError, CertificateError) as exc:
        report.update(verdict="counterexample", error=str(exc))
    except (InputError, TypeError, KeyError, ValueError, ZeroDivisionError, RecursionError) as exc:
        report.update(verdict="input-error", error=f"{type(exc).__name__}: {exc}")
    report["timing"] = {"seconds": round(time.perf_counter() - t0, 4)}
    return report


def _walk_certs(obj):
    if isinstance(obj, dict):
        if {"name", "lhs", "rel", "rhs", "holds"} <= obj.keys():
            yield obj
        for v in obj.values():
            yield from _walk_certs(v)
    elif isinstance(obj, list):
        for v in obj:
            yield from _walk_certs(v)


def verify_report(report) -> dict:
    """Replay a report: re-check every stored certificate and re-run its command."""
    out = {"command": "verify"}
    try:
        if not isinstance(report, dict) or "command" not in report or "verdict" not in report:
            raise InputError("not a report")
        if report["command"] not in COMMANDS:
            raise InputError(f"unknown command {report['command']!r}")
        certs = list(_walk_certs(report.get("result", {})))
        bad = [c["name"] for c in certs if check(c) != bool(c["holds"])]
        cfg = report.get("input", {})
        again = run(report["command"], cfg)
        same = (again["verdict"] == report["verdict"]
                and again.get("result") == report.get("result"))
        out["certificates_checked"] = len(certs)
        out["mismatched_certificates"] = bad
        out["replay_matches"] = same
        out["verdict"] = "verified" if same and not bad else "counterexample"
        if not same:
            out["error"] = "replayed result differs from the stored one"
    except CertificateError as exc:
        out.update(verdict="counterexample", error=str(exc))
    except (InputError, TypeError, KeyError, ValueError, AttributeError) as exc:
        out.update(verdict="input-error", error=f"{type(exc).__name__}: {exc}")
    return out


def _text(report) -> str:
    lines_ = [f"{report['command']}: {report['verdict']}"]
    if "error" in report:
        lines_.append(f"  error: {report['error']}")
    res = report.get("result", {})
    if isinstance(res, dict):
        for k, v in res.items():
            if isinstance(v, (dict, list)) and len(json.dumps(v)) > 100:
                continue
            lines_.append(f"  {k}: {json.dumps(v)}")
        if res.get("kind") == "feasibility_search":
            lines_.append(f"  {res['feasible']} feasible / {res['cells']} cells")
    for k in ("certificates_checked", "replay_matches"):
        if k in report:
            lines_.append(f"  {k}: {report[k]}")
    return "\n".join(lines_)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="cubic-rigidity", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=[*COMMANDS, "verify"])
    ap.add_argument("--config", required=True, help="JSON config (or a report for verify); '-' for stdin")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--format", choices=("json", "text"), default="json")
    ap.add_argument("--output", help="also write the report to this file")
    args = ap.parse_args(argv)
    try:
        if args.config == "-":
            cfg = json.load(sys.stdin)
        else:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        report = {"command": args.command, "verdict": "input-error", "error": str(exc)}
    else:
        if args.command == "verify":
            report = verify_report(cfg)
        else:
            report = run(args.command, cfg, jobs=max(1, args.jobs))
    text = json.dumps(report, indent=2) if args.format == "json" else _text(report)
    print(text)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
    return EXIT[report["verdict"]]


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
