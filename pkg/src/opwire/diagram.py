"""Typed interfaces, boxes and wiring diagrams.

A :class:`WiringDiagram` is pure syntax: a list of inner boxes, an outer
interface, and two supplier maps.  ``phi_in`` says where every inner input
port reads from (an outer input or some inner output); ``phi_out`` says which
inner output every outer output port exposes.  Semantics are attached
elsewhere (:mod:`opwire.moore`, :mod:`opwire.lti`, :mod:`opwire.contracts`).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Union

from opwire.errors import InterfaceMismatch, InvalidDiagram

__all__ = [
    "Finite", "Real", "RealVector", "ValueType", "Interface", "BoxDecl",
    "OuterInput", "InnerOutput", "Supplier", "WiringDiagram", "Violation",
    "ValidationReport", "validate", "identity_wiring", "empty_diagram",
    "substitute", "tensor", "rename_boxes", "normalize",
    "structurally_equal", "export_dot", "finite_values", "port_width",
]


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Finite:
    """A finite enumerated type with ordered, distinct string labels."""

    labels: tuple

    def __post_init__(self):
        labels = tuple(self.labels)
        if not labels:
            raise ValueError("Finite type needs at least one label")
        if not all(isinstance(lab, str) for lab in labels):
            raise TypeError("Finite labels must be strings")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in {labels!r}")
        object.__setattr__(self, "labels", labels)

    def __str__(self):
        return "Finite{" + ",".join(self.labels) + "}"


@dataclass(frozen=True)
class Real:
    def __str__(self):
        return "Real"


@dataclass(frozen=True)
class RealVector:
    dim: int

    def __post_init__(self):
        if not isinstance(self.dim, int) or isinstance(self.dim, bool) or self.dim < 1:
            raise ValueError(f"RealVector dim must be a positive integer, got {self.dim!r}")

    def __str__(self):
        return f"RealVector[{self.dim}]"


ValueType = Union[Finite, Real, RealVector]
_VALUE_TYPES = (Finite, Real, RealVector)


def port_width(t: ValueType) -> int:
    """Number of real coordinates a port of type ``t`` occupies."""
    if isinstance(t, Real):
        return 1
    if isinstance(t, RealVector):
        return t.dim
    raise TypeError(f"{t} has no real width")


def _ports(ports, side):
    out = []
    for item in ports:
        name, typ = item
        if not isinstance(name, str):
            raise TypeError(f"{side} port name must be a string, got {name!r}")
        if not isinstance(typ, _VALUE_TYPES):
            raise TypeError(f"port {name!r} has non-ValueType {typ!r}")
        out.append((name, typ))
    names = [n for n, _ in out]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ValueError(f"duplicate {side} port names: {dupes}")
    return tuple(out)


@dataclass(frozen=True)
class Interface:
    """Ordered, named, typed input and output ports of a box."""

    inputs: tuple = ()
    outputs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "inputs", _ports(self.inputs, "input"))
        object.__setattr__(self, "outputs", _ports(self.outputs, "output"))

    @property
    def input_names(self):
        return tuple(n for n, _ in self.inputs)

    @property
    def output_names(self):
        return tuple(n for n, _ in self.outputs)

    def input_type(self, name):
        return dict(self.inputs).get(name)

    def output_type(self, name):
        return dict(self.outputs).get(name)

    def ports(self):
        return self.inputs + self.outputs

    def __str__(self):
        ins = ", ".join(f"{n}:{t}" for n, t in self.inputs)
        outs = ", ".join(f"{n}:{t}" for n, t in self.outputs)
        return f"({ins}) -> ({outs})"


@dataclass(frozen=True)
class BoxDecl:
    box_id: str
    interface: Interface


@dataclass(frozen=True)
class OuterInput:
    port: str

    def __str__(self):
        return f"in.{self.port}"


@dataclass(frozen=True)
class InnerOutput:
    box: str
    port: str

    def __str__(self):
        return f"{self.box}.{self.port}"


Supplier = Union[OuterInput, InnerOutput]


def _as_inner_output(target):
    if isinstance(target, InnerOutput):
        return target
    box, port = target
    return InnerOutput(box, port)


@dataclass(frozen=True)
class WiringDiagram:
    """Inner boxes wired into an outer interface.

    Parameters
    ----------
    inner : sequence of BoxDecl
        Inner boxes in a fixed order; the order is part of the structure.
    outer : Interface
        The interface of the composite box.
    phi_in : mapping
        ``(box_id, input_port) -> OuterInput | InnerOutput``.
    phi_out : mapping
        ``outer_output_port -> InnerOutput`` (plain ``(box, port)`` pairs are
        accepted).

    Construction does not validate; call :func:`validate`.
    """

    inner: tuple
    outer: Interface
    phi_in: Mapping = field(default_factory=dict)
    phi_out: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "inner", tuple(self.inner))
        phi_in = {}
        for key, sup in dict(self.phi_in).items():
            box, port = key
            phi_in[(box, port)] = sup
        phi_out = {q: _as_inner_output(t) for q, t in dict(self.phi_out).items()}
        object.__setattr__(self, "phi_in", MappingProxyType(phi_in))
        object.__setattr__(self, "phi_out", MappingProxyType(phi_out))

    __hash__ = None

    @property
    def box_ids(self):
        return tuple(b.box_id for b in self.inner)

    def box(self, box_id) -> BoxDecl:
        for b in self.inner:
            if b.box_id == box_id:
                return b
        raise KeyError(box_id)

    def __repr__(self):
        return (f"WiringDiagram(inner={list(self.box_ids)}, outer={self.outer}, "
                f"wires={len(self.phi_in)}+{len(self.phi_out)})")


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    code: str  # DuplicateId | MissingSupplier | TypeMismatch | DanglingReference
    location: str
    reason: str
    key: tuple = ()

    def __str__(self):
        return f"{self.code} at {self.location}: {self.reason}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok

    def codes(self):
        return [v.code for v in self.violations]

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


def validate(d: WiringDiagram) -> ValidationReport:
    """Check every structural invariant of ``d`` and report all violations."""
    out = []
    boxes = {}
    for b in d.inner:
        if b.box_id in boxes:
            out.append(Violation("DuplicateId", f"box {b.box_id}",
                                 f"box id {b.box_id!r} declared more than once",
                                 ("box", b.box_id)))
        else:
            boxes[b.box_id] = b

    def supplier_type(sup):
        if isinstance(sup, OuterInput):
            return d.outer.input_type(sup.port)
        if isinstance(sup, InnerOutput) and sup.box in boxes:
            return boxes[sup.box].interface.output_type(sup.port)
        return None

    consumers = set()
    for b in boxes.values():
        for port, typ in b.interface.inputs:
            key = (b.box_id, port)
            consumers.add(key)
            loc = f"phi_in[{b.box_id}.{port}]"
            if key not in d.phi_in:
                out.append(Violation("MissingSupplier", loc,
                                     f"inner input {b.box_id}.{port} has no supplier",
                                     ("phi_in", key)))
                continue
            sup = d.phi_in[key]
            styp = supplier_type(sup)
            if styp is None:
                out.append(Violation("DanglingReference", loc,
                                     f"supplier {sup} does not exist", ("phi_in", key)))
            elif styp != typ:
                out.append(Violation("TypeMismatch", loc,
                                     f"{sup} has type {styp} but {b.box_id}.{port} "
                                     f"expects {typ}", ("phi_in", key)))
    for key in d.phi_in:
        if key not in consumers:
            out.append(Violation("DanglingReference", f"phi_in[{key[0]}.{key[1]}]",
                                 f"no inner input port {key[0]}.{key[1]}",
                                 ("phi_in", key)))

    for port, typ in d.outer.outputs:
        loc = f"phi_out[{port}]"
        if port not in d.phi_out:
            out.append(Violation("MissingSupplier", loc,
                                 f"outer output {port} has no supplier", ("phi_out", port)))
            continue
        tgt = d.phi_out[port]
        styp = supplier_type(tgt)
        if styp is None:
            out.append(Violation("DanglingReference", loc,
                                 f"inner output {tgt} does not exist", ("phi_out", port)))
        elif styp != typ:
            out.append(Violation("TypeMismatch", loc,
                                 f"{tgt} has type {styp} but outer output {port} "
                                 f"expects {typ}", ("phi_out", port)))
    outer_outs = set(d.outer.output_names)
    for port in d.phi_out:
        if port not in outer_outs:
            out.append(Violation("DanglingReference", f"phi_out[{port}]",
                                 f"no outer output port {port}", ("phi_out", port)))
    return ValidationReport(tuple(out))


def require_valid(d: WiringDiagram) -> None:
    report = validate(d)
    if not report.ok:
        raise InvalidDiagram(report)


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------

def identity_wiring(x: Interface, box_id: str = "box") -> WiringDiagram:
    """The identity wiring on ``x``: one inner box, every port name-matched."""
    phi_in = {(box_id, p): OuterInput(p) for p in x.input_names}
    phi_out = {q: InnerOutput(box_id, q) for q in x.output_names}
    return WiringDiagram((BoxDecl(box_id, x),), x, phi_in, phi_out)


def empty_diagram() -> WiringDiagram:
    """The monoidal unit: no boxes, no ports."""
    return WiringDiagram((), Interface())


def substitute(f: WiringDiagram, slot: str, g: WiringDiagram) -> WiringDiagram:
    """Plug ``g`` into box ``slot`` of ``f`` and flatten.

    Boxes of ``g`` are renamed ``slot/<id>`` and take the slot's position in
    the inner order.  Suppliers that pointed through the slot boundary are
    chased to the box that actually produces the value.
    """
    try:
        slot_box = f.box(slot)
    except KeyError:
        raise InterfaceMismatch(f"diagram has no box {slot!r}") from None
    if g.outer != slot_box.interface:
        raise InterfaceMismatch(
            f"cannot substitute into {slot!r}: slot interface {slot_box.interface} "
            f"!= diagram outer interface {g.outer}")

    def pref(box_id):
        return f"{slot}/{box_id}"

    def through_slot(sup):
        # output q of the slot is really g's inner output phi_out(q)
        if isinstance(sup, InnerOutput) and sup.box == slot:
            tgt = g.phi_out.get(sup.port)
            if tgt is None:
                return sup
            return InnerOutput(pref(tgt.box), tgt.port)
        return sup

    inner = []
    for b in f.inner:
        if b.box_id == slot:
            inner.extend(BoxDecl(pref(gb.box_id), gb.interface) for gb in g.inner)
        else:
            inner.append(b)

    phi_in = {}
    for (box, port), sup in f.phi_in.items():
        if box != slot:
            phi_in[(box, port)] = through_slot(sup)
    for (box, port), sup in g.phi_in.items():
        if isinstance(sup, OuterInput):
            outer_sup = f.phi_in.get((slot, sup.port))
            if outer_sup is None:
                continue
            phi_in[(pref(box), port)] = through_slot(outer_sup)
        else:
            phi_in[(pref(box), port)] = InnerOutput(pref(sup.box), sup.port)

    phi_out = {q: through_slot(t) for q, t in f.phi_out.items()}
    return WiringDiagram(inner, f.outer, phi_in, phi_out)


def _fresh(name, taken):
    while name in taken:
        name += "'"
    return name


def tensor(f: WiringDiagram, g: WiringDiagram) -> WiringDiagram:
    """Juxtapose two diagrams side by side with no wires between them.

    Box ids and outer port names of ``g`` that collide with ``f``'s get a
    ``'`` suffix until unique.
    """
    taken = set(f.box_ids)
    box_map = {}
    for b in g.inner:
        box_map[b.box_id] = new = _fresh(b.box_id, taken)
        taken.add(new)
    taken_in = set(f.outer.input_names)
    in_map = {}
    for p in g.outer.input_names:
        in_map[p] = new = _fresh(p, taken_in)
        taken_in.add(new)
    taken_out = set(f.outer.output_names)
    out_map = {}
    for q in g.outer.output_names:
        out_map[q] = new = _fresh(q, taken_out)
        taken_out.add(new)

    outer = Interface(
        f.outer.inputs + tuple((in_map[p], t) for p, t in g.outer.inputs),
        f.outer.outputs + tuple((out_map[q], t) for q, t in g.outer.outputs))
    inner = f.inner + tuple(BoxDecl(box_map[b.box_id], b.interface) for b in g.inner)
    phi_in = dict(f.phi_in)
    for (box, port), sup in g.phi_in.items():
        if isinstance(sup, OuterInput):
            sup = OuterInput(in_map.get(sup.port, sup.port))
        else:
            sup = InnerOutput(box_map.get(sup.box, sup.box), sup.port)
        phi_in[(box_map.get(box, box), port)] = sup
    phi_out = dict(f.phi_out)
    for q, t in g.phi_out.items():
        phi_out[out_map.get(q, q)] = InnerOutput(box_map.get(t.box, t.box), t.port)
    return WiringDiagram(inner, outer, phi_in, phi_out)


def rename_boxes(d: WiringDiagram, rename: Callable[[str], str] | Mapping) -> WiringDiagram:
    """Apply an injective renaming to every box id of ``d``."""
    if isinstance(rename, Mapping):
        table = rename
        rename = lambda b: table.get(b, b)  # noqa: E731
    inner = [BoxDecl(rename(b.box_id), b.interface) for b in d.inner]

    def sup(s):
        return InnerOutput(rename(s.box), s.port) if isinstance(s, InnerOutput) else s

    phi_in = {(rename(b), p): sup(s) for (b, p), s in d.phi_in.items()}
    phi_out = {q: sup(t) for q, t in d.phi_out.items()}
    return WiringDiagram(inner, d.outer, phi_in, phi_out)


def normalize(d: WiringDiagram) -> WiringDiagram:
    """Rename boxes positionally (``#0``, ``#1``, ...), forgetting their ids."""
    table = {b.box_id: f"#{i}" for i, b in enumerate(d.inner)}
    return rename_boxes(d, table)


def structurally_equal(a: WiringDiagram, b: WiringDiagram) -> bool:
    """Equality up to box-id normalization (port order still matters)."""
    return normalize(a) == normalize(b)


# ---------------------------------------------------------------------------
# DOT export
# ---------------------------------------------------------------------------

def _q(text):
    return '"' + str(text).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _ports_label(ports):
    return ", ".join(f"{n}:{t}" for n, t in ports)


def export_dot(d: WiringDiagram, name: str = "wiring") -> str:
    """Render ``d`` as a Graphviz digraph.

    Output is a deterministic function of the diagram: nodes follow the
    declared port and box order, edges follow box order then input-port
    order, then outer-output order.
    """
    require_valid(d)
    lines = [f"digraph {_q(name)} {{", "  rankdir=LR;"]
    for p, t in d.outer.inputs:
        lines.append(f"  {_q('in:' + p)} [shape=invhouse, label={_q(f'{p}:{t}')}];")
    for b in d.inner:
        label = (f"{b.box_id}\\nin: {_ports_label(b.interface.inputs)}"
                 f"\\nout: {_ports_label(b.interface.outputs)}")
        # label built by hand so the \n escapes survive quoting
        label = '"' + label.replace('"', '\\"') + '"'
        lines.append(f"  {_q('box:' + b.box_id)} [shape=box, label={label}];")
    for q, t in d.outer.outputs:
        lines.append(f"  {_q('out:' + q)} [shape=house, label={_q(f'{q}:{t}')}];")
    for b in d.inner:
        for port in b.interface.input_names:
            sup = d.phi_in[(b.box_id, port)]
            if isinstance(sup, OuterInput):
                src, tail = "in:" + sup.port, sup.port
            else:
                src, tail = "box:" + sup.box, sup.port
            lines.append(f"  {_q(src)} -> {_q('box:' + b.box_id)} "
                         f"[label={_q(tail + ' -> ' + port)}];")
    for q in d.outer.output_names:
        tgt = d.phi_out[q]
        lines.append(f"  {_q('box:' + tgt.box)} -> {_q('out:' + q)} "
                     f"[label={_q(tgt.port + ' -> ' + q)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# finite valuations
# ---------------------------------------------------------------------------

def finite_values(ports: Iterable) -> list:
    """All valuations of Finite-typed ``ports`` as tuples, in lexicographic
    order of the declared label order."""
    return list(itertools.product(*(t.labels for _, t in ports)))
