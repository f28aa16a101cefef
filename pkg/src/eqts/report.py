"""CSV summary and PNG figures for a batch of bundles."""

from __future__ import annotations

import csv
import io
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import networkx as nx  # noqa: E402

from .equalize import ERR, check_initial_clustering, check_proper  # noqa: E402
from .verify import policy_graph, policy_works  # noqa: E402

COLUMNS = ["bundle", "fluents", "states", "initial", "transitions", "equalized", "policy_edges",
           "verdict", "kind", "counterexample_length", "choice_points", "proper_violations",
           "initial_clustering"]


def summarize(name, pipeline, planner, jobs=1) -> tuple:
    """One CSV row plus the policy graph for a loaded bundle."""
    ts, es, policy = pipeline.ts, pipeline.es, pipeline.policy
    verdict = policy_works(es, policy, planner, bound=pipeline.args.plan_bound, jobs=jobs)
    edges = policy_graph(es, policy, planner, pipeline.args.plan_bound, jobs=jobs)
    proper = check_proper(ts, es.classification, 100, es)
    run = verdict.counterexample
    row = {
        "bundle": name,
        "fluents": len(ts.fluents),
        "states": len(ts.states),
        "initial": len(ts.initial),
        "transitions": ts.n_transitions(),
        "equalized": len(es.estates),
        "policy_edges": sum(len(v) for v in edges.values()),
        "verdict": "works" if verdict.works else "fails",
        "kind": verdict.kind,
        "counterexample_length": len(run.states) if run else 0,
        "choice_points": len(verdict.choice_points),
        "proper_violations": len(proper),
        "initial_clustering": check_initial_clustering(ts, es.classification, es),
    }
    return row, edges, verdict


def draw_policy(es, edges, verdict, path):
    """Policy graph over equalized states; initial states boxed, counterexample in red."""
    g = nx.DiGraph()
    for i, succ in edges.items():
        g.add_node(i)
        for j in succ:
            g.add_edge(i, j)
    bad = set(verdict.counterexample.states) if verdict.counterexample else set()
    labels = {i: es.name(i) for i in g.nodes}
    pos = nx.spring_layout(g, seed=0) if len(g) > 1 else {n: (0, 0) for n in g}
    fig, ax = plt.subplots(figsize=(6, 5))
    colors = ["tab:red" if n in bad or n == ERR else
              ("tab:green" if n in es.initial else "tab:blue") for n in g.nodes]
    nx.draw_networkx(g, pos, ax=ax, labels=labels, node_color=colors, font_color="white",
                     node_size=700, arrowsize=14)
    ax.set_title(f"policy graph ({verdict.kind})")
    ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def draw_sizes(rows_sizes, path):
    """Member count per equalized state, one panel row per bundle."""
    fig, ax = plt.subplots(figsize=(7, 4))
    offset = 0
    ticks, names = [], []
    for name, sizes in rows_sizes:
        xs = list(range(offset, offset + len(sizes)))
        ax.bar(xs, sizes, label=name)
        ticks.append(offset + (len(sizes) - 1) / 2)
        names.append(name)
        offset += len(sizes) + 1
    ax.set_xticks(ticks)
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel("concrete states per equalized state")
    ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def write_report(args, pipeline_cls, planner_factory=None) -> list:
    """Write ``summary.csv`` and figures into ``args.out``; echo the CSV to stdout."""
    from .policy import make_planner
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    planner = (planner_factory or make_planner)(args.planner, args.timeout)
    rows, sizes = [], []
    for bundle in args.bundles:
        name = Path(bundle).stem
        sub = _BundleArgs(args, bundle)
        pipe = pipeline_cls(sub)
        row, edges, verdict = summarize(name, pipe, planner, args.jobs)
        draw_policy(pipe.es, edges, verdict, out / f"{name}_policy.png")
        sizes.append((name, [len(pipe.es.members(i)) for i in pipe.es.ids]))
        rows.append(row)
    if sizes:
        draw_sizes(sizes, out / "equalized_sizes.png")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    (out / "summary.csv").write_text(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return rows


class _BundleArgs:
    """Per-bundle view of the report arguments in the shape Pipeline expects."""

    def __init__(self, args, bundle):
        self.bundle = bundle
        self.concurrency_cap = args.concurrency_cap
        self.max_states = args.max_states
        self.jobs = args.jobs
        self.plan_bound = args.plan_bound
        self.equalized = None
        self.ts = None
