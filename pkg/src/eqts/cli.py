"""Command-line front end: ``eqts <command> ...``.

Exit codes: 0 success / policy works, 1 input errors, 2 policy fails with a
counterexample, 3 dead end, 4 audit violations, 5 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from pathlib import Path

from . import core
from .equalize import (build_equalized, check_initial_clustering, check_proper,
                       check_strong_proper, to_dot as es_to_dot)
from .errors import EqtsError
from .formula import to_text
from .export import equalized_from_json, equalized_to_json
from .langc import build_transition_system, ground, parse_file
from .langc.semantics import DEFAULT_MAX_STATES
from .policy import default_bound, eval_targets, make_planner, plan_text, reach0
from .scenario import load_scenario
from .verify import (audit_reach_completeness, audit_reach_soundness, policy_graph,
                     policy_works)

log = logging.getLogger("eqts")


def _dump(doc, fmt="json") -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(args, text: str):
    if getattr(args, "output", None):
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _max_states(args) -> int:
    if args.max_states is not None:
        return args.max_states
    env = os.environ.get("EQTS_MAX_STATES")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise EqtsError(f"EQTS_MAX_STATES must be an integer, got {env!r}") from None
        if value <= 0:
            raise EqtsError("EQTS_MAX_STATES must be positive")
        return value
    return DEFAULT_MAX_STATES


# -- loading --

class Pipeline:
    """Scenario, transition system and equalized system for one bundle."""

    def __init__(self, args):
        self.args = args
        self.scenario = load_scenario(args.bundle, args.concurrency_cap)
        self._ts = None
        self._es = None
        if getattr(args, "equalized", None):
            self._es = equalized_from_json(json.loads(Path(args.equalized).read_text()))
            self._ts = self._es.ts
        elif getattr(args, "ts", None):
            self._ts = core.from_json(json.loads(Path(args.ts).read_text()))

    @property
    def policy(self):
        return self.scenario.policy

    @property
    def ts(self):
        if self._ts is None:
            self._ts = build_transition_system(self.scenario.ad, self.scenario.states_mode,
                                               _max_states(self.args), self.args.jobs)
        return self._ts

    @property
    def es(self):
        if self._es is None:
            c = self.scenario.classification(self.ts.fluents)
            self._es = build_equalized(self.ts, c)
        return self._es

    @property
    def bound(self):
        return default_bound(self.es, self.policy, self.args.plan_bound)


def _planner(args):
    return make_planner(args.planner, args.timeout)


# -- documents --

def state_doc(es, i):
    return {"id": es.name(i), "profile": es.describe(i), "size": len(es.members(i))}


def verdict_doc(es, verdict) -> dict:
    doc = {"verdict": "works" if verdict.works else "fails", "kind": verdict.kind,
           "stats": verdict.stats, "counterexample": None,
           "choice_points": [es.name(i) for i in verdict.choice_points]}
    run = verdict.counterexample
    if run is not None:
        edges = []
        pairs = list(zip(run.states, run.states[1:]))
        if run.terminal == "lasso":
            pairs.append((run.states[-1], run.states[run.loop_start]))
        for k, (i, j) in enumerate(pairs):
            w = run.witnesses[k] if k < len(run.witnesses) else None
            edges.append({"from": es.name(i), "to": es.name(j),
                          "target": to_text(w[0]) if w else None,
                          "plan": plan_text(w[1]) if w else None})
        doc["counterexample"] = {
            "terminal": run.terminal,
            "loop_start": run.loop_start,
            "states": [state_doc(es, i) for i in run.states],
            "edges": edges,
        }
    return doc


def verdict_text(es, verdict) -> str:
    lines = [f"verdict: {'works' if verdict.works else 'fails'} ({verdict.kind})"]
    for k in sorted(verdict.stats):
        lines.append(f"  {k}: {verdict.stats[k]}")
    run = verdict.counterexample
    if run is not None:
        lines.append(f"counterexample ({run.terminal}):")
        for k, i in enumerate(run.states):
            mark = "  <- cycle start" if run.loop_start == k else ""
            lines.append(f"  {es.name(i)} {json.dumps(es.describe(i), sort_keys=True)}{mark}")
            if k < len(run.witnesses) and run.witnesses[k]:
                g, p = run.witnesses[k]
                lines.append(f"     target {to_text(g)}, plan {' '.join(plan_text(p)) or '(empty)'}")
        if verdict.choice_points:
            lines.append("choice points: " + ", ".join(es.name(i) for i in verdict.choice_points))
    return "\n".join(lines) + "\n"


def properness_doc(ts, es, cap) -> dict:
    c = es.classification
    proper = check_proper(ts, c, cap, es)
    strong = check_strong_proper(ts, c, cap, es)
    return {"proper": [v.to_json(ts) for v in proper],
            "strong_proper": [v.to_json(ts) for v in strong],
            "initial_clustering": check_initial_clustering(ts, c, es)}


# -- commands --

def cmd_ground(args):
    path = Path(args.file)
    if path.suffix == ".scn":
        ad = load_scenario(path, args.concurrency_cap).ad
    else:
        ad = ground(parse_file(path))
        if args.concurrency_cap is not None:
            ad.concurrency = (min(ad.concurrency[0], args.concurrency_cap), args.concurrency_cap)
    if args.format == "json":
        _emit(args, _dump({"fluents": ad.fluent_names(), "actions": ad.action_names(),
                           "laws": [str(l) for l in ad.laws],
                           "initial": [to_text(f) for f in ad.initial]}))
    else:
        ad.filename = None
        _emit(args, ad.to_text())
    return 0


def cmd_build(args):
    path = Path(args.file)
    if path.suffix == ".scn":
        sc = load_scenario(path, args.concurrency_cap)
        ad, mode = sc.ad, args.states or sc.states_mode
    else:
        ad, mode = ground(parse_file(path)), args.states or "all"
        if args.concurrency_cap is not None:
            ad.concurrency = (min(ad.concurrency[0], args.concurrency_cap), args.concurrency_cap)
    ts = build_transition_system(ad, mode, _max_states(args), args.jobs)
    problems = core.validate(ts)
    if problems:
        raise EqtsError("built system is malformed: " + "; ".join(problems))
    if args.format == "dot":
        _emit(args, core.to_dot(ts))
    elif args.format == "text":
        _emit(args, f"fluents: {len(ts.fluents)}\nstates: {len(ts.states)}\n"
                    f"initial: {len(ts.initial)}\ntransitions: {ts.n_transitions()}\n")
    else:
        _emit(args, _dump(core.to_json(ts)))
    return 0


def cmd_equalize(args):
    p = Pipeline(args)
    ts, es = p.ts, p.es
    if args.format == "dot":
        _emit(args, es_to_dot(es))
        return 0
    doc = equalized_to_json(es)
    doc["properness"] = properness_doc(ts, es, args.violation_cap)
    if args.format == "text":
        pr = doc["properness"]
        _emit(args, f"equalized states: {len(es.estates)}\ninitial: {len(es.initial)}\n"
                    f"predecessor-condition violations: {len(pr['proper'])}\n"
                    f"successor-condition violations: {len(pr['strong_proper'])}\n"
                    f"initial clustering: {pr['initial_clustering']}\n")
    else:
        _emit(args, _dump(doc))
    return 0


def cmd_verify(args):
    p = Pipeline(args)
    v = policy_works(p.es, p.policy, _planner(args), bound=args.plan_bound,
                     goal_semantics=args.goal_semantics,
                     require_goal_reachable=args.require_goal_reachable, jobs=args.jobs)
    if args.format == "text":
        _emit(args, verdict_text(p.es, v))
    else:
        _emit(args, _dump(verdict_doc(p.es, v)))
    return v.exit_code


def cmd_audit(args):
    p = Pipeline(args)
    planner = _planner(args)
    sound = audit_reach_soundness(p.es, p.policy, planner, args.plan_bound, args.samples, args.seed)
    compl = audit_reach_completeness(p.es, p.policy, planner, args.plan_bound, args.samples,
                                     args.seed)
    doc = {}
    for name, rep in (("soundness", sound), ("completeness", compl)):
        doc[name] = {"subject": rep.subject, "exhaustive": rep.exhaustive, "checked": rep.checked,
                     "violations": rep.violations, "errors": rep.errors}
    if args.format == "text":
        lines = []
        for name in ("soundness", "completeness"):
            d = doc[name]
            lines.append(f"{name}: {len(d['violations'])} violation(s), {d['checked']} checked")
            for v in d["violations"]:
                lines.append("  " + json.dumps(v, sort_keys=True))
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, _dump(doc))
    return 0 if sound.ok and compl.ok else 4


def cmd_simulate(args):
    """One concrete run: seeded choices of initial state, target, plan and outcome."""
    p = Pipeline(args)
    ts, es, policy = p.ts, p.es, p.policy
    rng = random.Random(args.seed)
    goal = es.lift_formula(policy.goal, policy.defs)
    s = rng.choice(sorted(ts.initial))
    trace = []
    status = "max-steps"
    for _ in range(args.steps):
        i = es.of_state[s]
        entry = {"state": ts.describe(s), "equalized": es.name(i)}
        if goal(i):
            trace.append(entry)
            status = "goal"
            break
        targets = eval_targets(es, policy, i)
        if not targets:
            trace.append(entry)
            status = "no-target"
            break
        g = rng.choice(list(targets))
        plans = reach0(es, i, g, p.bound, "shortest", policy.defs)
        if not plans:
            trace.append(entry)
            status = "no-plan"
            break
        # prefer plans the concrete state can actually execute
        runnable = [q for q in plans if core.execute(ts, s, q)] or plans
        plan = rng.choice(runnable)
        entry.update({"target": to_text(g), "plan": plan_text(plan)})
        trace.append(entry)
        for lab in plan:
            succ = sorted(ts.transitions.get((s, lab), ()))
            if not succ:
                status = "stuck"
                break
            s = rng.choice(succ)
        if status == "stuck":
            break
    doc = {"seed": args.seed, "status": status, "trace": trace}
    if args.format == "text":
        lines = [f"status: {status}"]
        for e in trace:
            lines.append(f"{e['equalized']} {e['state']}")
            if "plan" in e:
                lines.append(f"   -> {e['target']} via {' '.join(e['plan']) or '(empty)'}")
        _emit(args, "\n".join(lines) + "\n")
    else:
        _emit(args, _dump(doc))
    return 0


def cmd_export(args):
    p = Pipeline(args)
    if args.what == "ts":
        text = core.to_dot(p.ts) if args.format == "dot" else _dump(core.to_json(p.ts))
    elif args.what == "equalized":
        text = es_to_dot(p.es) if args.format == "dot" else _dump(equalized_to_json(p.es))
    else:
        edges = policy_graph(p.es, p.policy, _planner(args), args.plan_bound, jobs=args.jobs)
        if args.format == "dot":
            text = es_to_dot(p.es, "policy", edges)
        else:
            text = _dump({"edges": [{"from": p.es.name(i), "to": p.es.name(j)}
                                    for i in sorted(edges) for j in sorted(edges[i])],
                          "states": [state_doc(p.es, i) for i in sorted(edges)]})
    _emit(args, text)
    return 0


def cmd_generate(args):
    from .scenarios import LAYOUTS, gen_blocksworld, gen_grid, parse_layout, render_layout
    from .scenarios import write_bundle
    if args.domain == "grid":
        if args.layout in LAYOUTS:
            inst = LAYOUTS[args.layout]
        else:
            inst = parse_layout(Path(args.layout).read_text())
        inst.check()
        name = args.name or "grid"
        cal, scn = gen_grid(inst, args.metric, args.with_memory, name)
        path = write_bundle(args.out, name, cal, scn, render_layout(inst))
    else:
        name = args.name or f"blocksworld{args.size}"
        cal, scn = gen_blocksworld(args.size, moves=not args.no_moves)
        path = write_bundle(args.out, name, cal, scn)
    print(path)
    return 0


def cmd_report(args):
    from .report import write_report
    rows = write_report(args, Pipeline)
    return 0 if rows else 1


# -- argument parsing --

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eqts", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, fmt=("json", "text"), bundle=True):
        if bundle:
            p.add_argument("bundle", help="scenario file (.scn)")
        p.add_argument("--format", choices=fmt, default=fmt[0])
        p.add_argument("-o", "--output", help="write to this file instead of stdout")
        p.add_argument("--concurrency-cap", type=int, default=None,
                       help="largest action set per transition")
        p.add_argument("--max-states", type=int, default=None,
                       help="state budget (default: $EQTS_MAX_STATES or %d)" % DEFAULT_MAX_STATES)
        p.add_argument("--jobs", type=int, default=1, help="worker threads")
        p.add_argument("--plan-bound", type=int, default=None,
                       help="longest plan (default: planbound of the scenario, else |S^|)")
        p.add_argument("--planner", default="builtin",
                       help="builtin | shortest | exec:<path> | mutant:<truncate|prepend|drop|empty>")
        p.add_argument("--timeout", type=float, default=30.0, help="external planner timeout (s)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--ts", help="transition system JSON from 'build'")
        p.add_argument("--equalized", help="equalized system JSON from 'equalize'")

    p = sub.add_parser("ground", help="parse and ground a .cal (or a bundle's description)")
    p.add_argument("file")
    p.add_argument("--format", choices=("cal", "json"), default="cal")
    p.add_argument("-o", "--output")
    p.add_argument("--concurrency-cap", type=int, default=None)
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("build", help="build the transition system")
    p.add_argument("file", help=".cal or .scn")
    p.add_argument("--states", choices=("all", "reachable"), default=None)
    p.add_argument("--format", choices=("json", "dot", "text"), default="json")
    p.add_argument("-o", "--output")
    p.add_argument("--concurrency-cap", type=int, default=None)
    p.add_argument("--max-states", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("equalize", help="equalized system and properness checks")
    common(p, ("json", "text", "dot"))
    p.add_argument("--violation-cap", type=int, default=100)
    p.set_defaults(func=cmd_equalize)

    p = sub.add_parser("verify", help="decide whether the policy works")
    common(p)
    p.add_argument("--goal-semantics", choices=("stop", "loop"), default="stop")
    p.add_argument("--require-goal-reachable", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("audit", help="planner soundness and completeness audits")
    common(p)
    p.add_argument("--samples", type=int, default=None, help="sample this many pairs")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("simulate", help="one concrete run with seeded choices")
    common(p)
    p.add_argument("--steps", type=int, default=50)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("export", help="DOT or JSON of ts / equalized / policy graph")
    common(p, ("dot", "json"))
    p.add_argument("--what", choices=("ts", "equalized", "policy"), default="policy")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("generate", help="write a grid or blocksworld bundle")
    p.add_argument("domain", choices=("grid", "blocksworld"))
    p.add_argument("--layout", default="a", help="shipped layout key (a, b, c) or a .layout file")
    p.add_argument("--metric", choices=("path", "euclid"), default="path")
    p.add_argument("--with-memory", action="store_true", help="add visited-cell fluents")
    p.add_argument("--size", type=int, default=4, help="number of blocks")
    p.add_argument("--no-moves", action="store_true", help="omit the labeled move actions")
    p.add_argument("--name")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("report", help="CSV summary plus figures for one or more bundles")
    p.add_argument("bundles", nargs="+")
    p.add_argument("--out", default="report", help="output directory")
    p.add_argument("--concurrency-cap", type=int, default=None)
    p.add_argument("--max-states", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--plan-bound", type=int, default=None)
    p.add_argument("--planner", default="builtin")
    p.add_argument("--timeout", type=float, default=30.0)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    for cap in ("max_states", "jobs", "concurrency_cap"):
        value = getattr(args, cap, None)
        if value is not None and value <= 0:
            print(f"eqts: --{cap.replace('_', '-')} must be positive", file=sys.stderr)
            return 1
    try:
        return args.func(args)
    except EqtsError as exc:
        print(f"eqts: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"eqts: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
