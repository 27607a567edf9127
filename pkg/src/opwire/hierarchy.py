"""Hierarchical models: boxes refined by sub-diagrams.

A box of a model may be implemented by a child model whose outer interface
equals the box's interface.  Flattening substitutes children bottom-up; the
``parent/child`` box ids it produces double as the provenance trace from
every leaf back to the boxes it refines.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping

from opwire.contracts import Contract, TraceContract, satisfies
from opwire.diagram import WiringDiagram, substitute
from opwire.errors import (DepthExceeded, InterfaceMismatch, MissingAssignment,
                           MixedAlgebra, OpwireError)
from opwire.lti import LtiSystem, apply_lti, lti_equivalent
from opwire.moore import MooreMachine, apply_moore, first_divergence

__all__ = ["HierarchicalModel", "MAX_DEPTH", "flatten", "flatten_model",
           "leaf_assignments", "locate", "box_machine", "compose_moore",
           "compose_lti", "check_refinement_moore", "check_refinement_lti",
           "check_refinement", "RefinementResult", "propagate_change",
           "ImpactEntry", "ImpactReport", "replace_machine", "contract_paths"]

MAX_DEPTH = 32


def _frozen_map(m):
    return MappingProxyType(dict(m or {}))


@dataclass(frozen=True, eq=False)
class HierarchicalModel:
    """A wiring diagram whose boxes may carry child models and assignments.

    ``machines``, ``systems`` and ``contracts`` are partial maps from box id
    to a Moore machine, an LTI system, or a (trace) contract.  A refined box
    may still carry an abstract assignment; refinement checks compare the
    two.
    """

    diagram: WiringDiagram
    children: Mapping = field(default_factory=dict)
    machines: Mapping = field(default_factory=dict)
    systems: Mapping = field(default_factory=dict)
    contracts: Mapping = field(default_factory=dict)

    def __post_init__(self):
        for name in ("children", "machines", "systems", "contracts"):
            object.__setattr__(self, name, _frozen_map(getattr(self, name)))
        boxes = {b.box_id: b for b in self.diagram.inner}
        for box, child in self.children.items():
            if box not in boxes:
                raise InterfaceMismatch(f"child model for unknown box {box!r}")
            if child.outer != boxes[box].interface:
                raise InterfaceMismatch(f"child of {box!r} has outer interface "
                                        f"{child.outer}, box declares {boxes[box].interface}")
        for name, kinds in (("machines", MooreMachine), ("systems", LtiSystem),
                            ("contracts", (Contract, TraceContract))):
            for box, a in getattr(self, name).items():
                if box not in boxes:
                    raise InterfaceMismatch(f"{name} entry for unknown box {box!r}")
                if not isinstance(a, kinds):
                    raise TypeError(f"{name}[{box!r}] has type {type(a).__name__}")
                if a.interface != boxes[box].interface:
                    raise InterfaceMismatch(f"{name}[{box!r}] has interface {a.interface}, "
                                            f"box declares {boxes[box].interface}")
        depth = 1 + max((c.depth for c in self.children.values()), default=0)
        if depth > MAX_DEPTH:
            raise DepthExceeded(f"hierarchy depth {depth} exceeds {MAX_DEPTH}")
        object.__setattr__(self, "depth", depth)

    @property
    def outer(self):
        return self.diagram.outer

    def __eq__(self, other):
        if not isinstance(other, HierarchicalModel):
            return NotImplemented
        return (self.diagram == other.diagram and self.children == other.children
                and self.machines == other.machines and self.systems == other.systems
                and self.contracts == other.contracts)

    __hash__ = None

    def walk(self, prefix=""):
        """Yield ``(path, model)`` for this model and every descendant."""
        yield prefix, self
        for b in self.diagram.box_ids:
            if b in self.children:
                yield from self.children[b].walk(f"{prefix}{b}/")


def _join(prefix, box):
    return f"{prefix}/{box}" if prefix else box


def locate(m: HierarchicalModel, path: str):
    """``(parent model, box id)`` for a slash-separated box path."""
    rest = path
    while True:
        if rest in m.diagram.box_ids:
            return m, rest
        for b in m.children:
            if rest.startswith(b + "/"):
                m, rest = m.children[b], rest[len(b) + 1:]
                break
        else:
            raise MissingAssignment(f"no box at path {path!r}")


# ---------------------------------------------------------------------------
# flattening
# ---------------------------------------------------------------------------

def flatten(m: HierarchicalModel):
    """Substitute every child bottom-up.

    Returns the leaf-level diagram and its provenance: a map from each
    flattened box id to the root-first tuple of paths of the boxes it sits
    inside.
    """
    d = m.diagram
    provenance = {}
    for b in m.diagram.box_ids:
        child = m.children.get(b)
        if child is None:
            provenance[b] = ()
            continue
        child_d, child_prov = flatten(child)
        try:
            d = substitute(d, b, child_d)
        except InterfaceMismatch as exc:
            raise InterfaceMismatch(f"at {b}: {exc}") from None
        for p, anc in child_prov.items():
            provenance[f"{b}/{p}"] = (b,) + tuple(f"{b}/{a}" for a in anc)
    return d, provenance


def leaf_assignments(m: HierarchicalModel, kind: str, prefix="") -> dict:
    """Assignments of ``kind`` on non-refined boxes, keyed by flattened path."""
    out = {}
    table = getattr(m, kind)
    for b in m.diagram.box_ids:
        path = _join(prefix, b)
        if b in m.children:
            out.update(leaf_assignments(m.children[b], kind, path))
        elif b in table:
            out[path] = table[b]
    return out


def flatten_model(m: HierarchicalModel) -> HierarchicalModel:
    """A depth-1 model over the flattened diagram with every leaf assignment."""
    d, _ = flatten(m)
    return HierarchicalModel(d, {}, leaf_assignments(m, "machines"),
                             leaf_assignments(m, "systems"),
                             leaf_assignments(m, "contracts"))


# ---------------------------------------------------------------------------
# behavior of boxes
# ---------------------------------------------------------------------------

def compose_moore(m: HierarchicalModel) -> MooreMachine:
    """Composite machine of ``m``, recursing into children (implementations
    win over abstract assignments)."""
    assign = {}
    for b in m.diagram.box_ids:
        if b in m.children:
            assign[b] = compose_moore(m.children[b])
        elif b in m.machines:
            assign[b] = m.machines[b]
        elif b in m.systems:
            raise MixedAlgebra(f"box {b!r} carries an LTI system, not a Moore machine")
        else:
            raise MissingAssignment(f"no Moore machine for box {b!r}")
    return apply_moore(m.diagram, assign)


def compose_lti(m: HierarchicalModel, eps=None) -> LtiSystem:
    d, _ = flatten(m)
    leaves = leaf_assignments(m, "systems")
    for b in d.box_ids:
        if b not in leaves:
            if b in leaf_assignments(m, "machines"):
                raise MixedAlgebra(f"leaf {b!r} carries a Moore machine, not an LTI system")
            raise MissingAssignment(f"no LTI system for leaf {b!r}")
    return apply_lti(d, leaves) if eps is None else apply_lti(d, leaves, eps)


def box_machine(m: HierarchicalModel, path: str) -> MooreMachine:
    """Behavior of the box at ``path``: its implementation if refined."""
    parent, b = locate(m, path)
    if b in parent.children:
        return compose_moore(parent.children[b])
    if b in parent.machines:
        return parent.machines[b]
    raise MissingAssignment(f"no Moore machine for box {path!r}")


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RefinementResult:
    holds: bool
    algebra: str
    horizon: int = None
    counterexample: tuple = None
    abstract_outputs: tuple = None
    implementation_outputs: tuple = None

    def __bool__(self):
        return self.holds


def _abstract_and_child(m, box, kind):
    parent, b = locate(m, box)
    table = getattr(parent, kind)
    if b not in table:
        other = "systems" if kind == "machines" else "machines"
        if b in getattr(parent, other):
            raise MixedAlgebra(f"box {box!r} has no abstract {kind[:-1]} "
                               f"(it carries one of {other})")
        raise MissingAssignment(f"box {box!r} has no abstract {kind[:-1]}")
    if b not in parent.children:
        raise MissingAssignment(f"box {box!r} is not refined by a sub-diagram")
    return table[b], parent.children[b]


def _outputs(mach, seq):
    s, outs = mach.init, []
    for v in seq:
        outs.append(mach.readout[s])
        s = mach.update[(s, v)]
    return tuple(outs)


def check_refinement_moore(m: HierarchicalModel, box: str, h: int = None) -> RefinementResult:
    """Trace equivalence of the box's abstract machine and its implementation.

    The default horizon is the product of the two state counts plus one.
    The counterexample is cut just after the first tick where outputs differ.
    """
    abstract, child = _abstract_and_child(m, box, "machines")
    impl = compose_moore(child)
    if h is None:
        h = len(abstract.states) * len(impl.states) + 1
    found = first_divergence(abstract, impl, h)
    if found is None:
        return RefinementResult(True, "moore", h)
    seq, tick = found
    seq = seq[:tick + 1]
    return RefinementResult(False, "moore", h, seq, _outputs(abstract, seq),
                            _outputs(impl, seq))


def check_refinement_lti(m: HierarchicalModel, box: str, tol: float = 1e-9) -> RefinementResult:
    abstract, child = _abstract_and_child(m, box, "systems")
    impl = compose_lti(child)
    return RefinementResult(lti_equivalent(abstract, impl, tol), "lti")


def check_refinement(m: HierarchicalModel, box: str, h=None, tol=1e-9) -> RefinementResult:
    """Dispatch on whichever algebra the box's abstract assignment uses."""
    parent, b = locate(m, box)
    if b in parent.machines:
        return check_refinement_moore(m, box, h)
    if b in parent.systems:
        return check_refinement_lti(m, box, tol)
    raise MissingAssignment(f"box {box!r} has no abstract assignment")


# ---------------------------------------------------------------------------
# change impact
# ---------------------------------------------------------------------------

def replace_machine(m: HierarchicalModel, path: str, machine: MooreMachine) -> HierarchicalModel:
    """Copy of ``m`` with the Moore machine at ``path`` replaced."""
    b = path if path in m.diagram.box_ids else None
    if b is not None:
        machines = dict(m.machines)
        machines[b] = machine
        return replace(m, machines=machines)
    for c in m.children:
        if path.startswith(c + "/"):
            children = dict(m.children)
            children[c] = replace_machine(m.children[c], path[len(c) + 1:], machine)
            return replace(m, children=children)
    raise MissingAssignment(f"no box at path {path!r}")


def contract_paths(m: HierarchicalModel):
    """Every box path carrying a contract, in tree order."""
    out = []
    for prefix, sub in m.walk():
        for b in sub.diagram.box_ids:
            if b in sub.contracts:
                out.append(prefix + b)
    return out


def _verdict(m, path, h, max_enum):
    parent, b = locate(m, path)
    contract = parent.contracts[b]
    mach = box_machine(m, path)
    if isinstance(contract, TraceContract):
        # trace contracts are compared through alpha at their own horizon
        return satisfies(mach, contract, max_enum=max_enum)
    return satisfies(mach, contract, h, max_enum)


@dataclass(frozen=True)
class ImpactEntry:
    path: str
    before: bool
    after: bool
    counterexample: tuple = None
    tick: int = None


@dataclass(frozen=True)
class ImpactReport:
    changed: tuple = ()
    skipped: tuple = ()  # (path, reason) pairs that could not be compared

    def __bool__(self):
        return bool(self.changed)

    def lines(self):
        out = []
        for e in self.changed:
            line = f"{e.path}: {'holds' if e.before else 'violated'} -> " \
                   f"{'holds' if e.after else 'violated'}"
            if e.counterexample is not None:
                line += f" counterexample={list(e.counterexample)} tick={e.tick}"
            out.append(line)
        out += [f"{p}: skipped ({reason})" for p, reason in self.skipped]
        return out


def _ancestors(path):
    parts = path.split("/")
    return ["/".join(parts[:k]) for k in range(len(parts), 0, -1)]


def propagate_change(m: HierarchicalModel, box: str, h: int, replacement=None,
                     max_enum=None) -> ImpactReport:
    """Contract verdicts that flip when the machine at ``box`` is replaced.

    The box and each of its ancestors carrying a contract are re-checked
    against their recomposed behavior; entries whose verdict changed are
    reported sorted by path.  ``replacement=None`` means no change.
    """
    locate(m, box)
    changed_model = m if replacement is None else replace_machine(m, box, replacement)
    changed, skipped = [], []
    for path in sorted(_ancestors(box)):
        try:
            parent, b = locate(m, path)
        except MissingAssignment:
            continue
        if b not in parent.contracts:
            continue
        try:
            before = _verdict(m, path, h, max_enum)
            after = _verdict(changed_model, path, h, max_enum)
        except (OpwireError, ValueError) as exc:
            skipped.append((path, str(exc)))
            continue
        if before.holds != after.holds:
            cx = after if not after.holds else before
            changed.append(ImpactEntry(path, before.holds, after.holds,
                                       cx.counterexample, cx.tick))
    return ImpactReport(tuple(changed), tuple(skipped))
