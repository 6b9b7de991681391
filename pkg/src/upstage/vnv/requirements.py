"""Tree-structured requirements with two-way monitor linking.

The `.req` file is TOML (same syntax family as the scenario), an array of
``[[requirement]]`` tables with ``id``, optional ``parent``, ``text`` and
``verify_by`` monitor ids.  Linking is by id in both directions:
requirements name monitors and monitors name requirements; the report
generator cross-checks the two.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class DuplicateId(ValueError):
    pass


class CycleDetected(ValueError):
    pass


class DanglingMonitorRef(ValueError):
    pass


class UnknownParent(ValueError):
    pass


@dataclass
class Requirement:
    id: str
    text: str
    parent: str | None = None
    verify_by: list = field(default_factory=list)
    children: list = field(default_factory=list)


@dataclass
class RequirementTree:
    nodes: dict                 # id -> Requirement
    roots: list                 # ids without parents

    def __iter__(self):
        return iter(self.nodes.values())

    def walk_depth_first(self):
        """(requirement, depth) pairs, document order within each level."""
        def rec(rid, depth):
            node = self.nodes[rid]
            yield node, depth
            for child in node.children:
                yield from rec(child, depth + 1)
        for root in self.roots:
            yield from rec(root, 0)


def build_tree(entries: list) -> RequirementTree:
    nodes: dict = {}
    for e in entries:
        if e.id in nodes:
            raise DuplicateId(e.id)
        nodes[e.id] = e
    roots = []
    for e in entries:
        if e.parent:
            if e.parent not in nodes:
                raise UnknownParent(f"{e.id}: parent {e.parent!r} not defined")
            nodes[e.parent].children.append(e.id)
        else:
            roots.append(e.id)

    # cycle check: every node must be reachable from a root exactly once
    seen = set()
    stack = list(roots)
    while stack:
        rid = stack.pop()
        if rid in seen:
            raise CycleDetected(rid)
        seen.add(rid)
        stack.extend(nodes[rid].children)
    if len(seen) != len(nodes):
        unreached = sorted(set(nodes) - seen)
        raise CycleDetected(", ".join(unreached))
    return RequirementTree(nodes=nodes, roots=roots)


def parse_requirements(path: str | Path) -> RequirementTree:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    entries = []
    for tbl in raw.get("requirement", []):
        entries.append(Requirement(
            id=str(tbl["id"]),
            text=str(tbl.get("text", "")),
            parent=str(tbl["parent"]) if tbl.get("parent") else None,
            verify_by=[str(m) for m in tbl.get("verify_by", [])]))
    return build_tree(entries)


def check_monitor_links(tree: RequirementTree, monitors: list) -> list:
    """Cross-check the two-way links; returns human-readable discrepancies.

    Raises DanglingMonitorRef when a requirement names a monitor that does
    not exist; a monitor naming an unknown requirement or a one-sided link
    is reported (the report lists them as gaps, they are not fatal).
    """
    by_id = {m.id: m for m in monitors}
    notes = []
    for req in tree:
        for mid in req.verify_by:
            if mid not in by_id:
                raise DanglingMonitorRef(f"{req.id} -> {mid}")
            if req.id not in by_id[mid].requirements:
                notes.append(f"monitor {mid} does not declare requirement {req.id}")
    for mon in monitors:
        for rid in mon.requirements:
            if rid not in tree.nodes:
                notes.append(f"monitor {mon.id} names unknown requirement {rid}")
            elif mon.id not in tree.nodes[rid].verify_by:
                notes.append(f"requirement {rid} does not list monitor {mon.id}")
    return notes
