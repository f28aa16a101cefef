"""JSON documents for equalized systems (used by staged pipelines and planners)."""

from __future__ import annotations

from .core import from_json as ts_from_json
from .core import label_key, to_json as ts_to_json
from .equalize import Custom, EqualizedSystem, build_equalized


def equalized_to_json(esys: EqualizedSystem) -> dict:
    ts = esys.ts
    index = {s: k for k, s in enumerate(ts.states)}
    lifted = []
    for (i, lab) in sorted(esys.lifted, key=lambda k: (k[0], label_key(k[1]))):
        for j in sorted(esys.lifted[(i, lab)]):
            lifted.append({"from": esys.name(i), "label": sorted(lab), "to": esys.name(j)})
    return {
        "ts": ts_to_json(ts),
        "classification": esys.classification.to_json(),
        "estates": [{"id": esys.name(e.id), "members": sorted(index[s] for s in e.members),
                     "profile": esys.describe(e.id)} for e in esys.estates],
        "initial": [esys.name(i) for i in sorted(esys.initial)],
        "lifted": lifted,
    }


class _Stored(Custom):
    """Table classification that remembers the original profile rendering."""

    def __init__(self, table, profiles, meta):
        super().__init__(table)
        self.profiles = profiles
        self.meta = meta

    def describe(self, key):
        return self.profiles[key]

    def to_json(self):
        return self.meta


def equalized_from_json(doc: dict) -> EqualizedSystem:
    ts = ts_from_json(doc["ts"])
    table = {}
    profiles = {}
    for k, e in enumerate(doc["estates"]):
        profiles[k] = e.get("profile")
        for m in e["members"]:
            table[ts.states[m]] = k
    return build_equalized(ts, _Stored(table, profiles, doc.get("classification", {})))
