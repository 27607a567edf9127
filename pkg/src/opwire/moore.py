"""Deterministic Moore machines as the discrete behavior algebra.

Valuations of a port list are tuples of labels in declared port order.  A
machine's output at tick ``t`` is the readout of the state it is in at ``t``,
before the tick-``t`` input is consumed; this is what makes arbitrary
feedback wiring well defined.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import prod
from types import MappingProxyType
from typing import Mapping, Sequence

from opwire.diagram import (Finite, Interface, OuterInput,
                            WiringDiagram, finite_values, require_valid)
from opwire.errors import (InterfaceMismatch, MissingAssignment, NonFiniteType,
                           PartialInput, UnknownState, check_cap)

__all__ = ["MooreMachine", "Trace", "coerce_valuation", "step", "simulate",
           "traces", "apply_moore", "first_divergence", "trace_equivalent",
           "delay_machine"]


def _require_finite(interface, what):
    for name, typ in interface.ports():
        if not isinstance(typ, Finite):
            raise NonFiniteType(f"{what}: port {name!r} has type {typ}, expected Finite")


def coerce_valuation(ports, value, what="input") -> tuple:
    """Turn a mapping or sequence into a label tuple in port order."""
    names = [n for n, _ in ports]
    if isinstance(value, Mapping):
        missing = [n for n in names if n not in value]
        if missing:
            raise PartialInput(f"{what} valuation missing ports {missing}")
        extra = sorted(set(value) - set(names))
        if extra:
            raise PartialInput(f"{what} valuation has unknown ports {extra}")
        value = tuple(value[n] for n in names)
    else:
        value = tuple(value)
        if len(value) != len(names):
            raise PartialInput(f"{what} valuation has {len(value)} entries, "
                               f"expected {len(names)} ({names})")
    for (name, typ), v in zip(ports, value):
        if isinstance(typ, Finite) and v not in typ.labels:
            raise ValueError(f"{what} port {name!r}: {v!r} not in {typ}")
    return value


@dataclass(frozen=True, eq=False)
class MooreMachine:
    """A deterministic Moore machine over a Finite-typed interface.

    ``readout`` maps each state to an output valuation; ``update`` maps
    ``(state, input valuation)`` to the next state.  Either may be given as
    a callable, in which case it is tabulated eagerly.  Both tables must be
    total.
    """

    interface: Interface
    states: tuple
    init: object
    readout: Mapping
    update: Mapping

    def __post_init__(self):
        _require_finite(self.interface, "MooreMachine")
        states = tuple(self.states)
        if not states:
            raise ValueError("a Moore machine needs at least one state")
        if len(set(states)) != len(states):
            raise ValueError("duplicate states")
        state_set = frozenset(states)
        if self.init not in state_set:
            raise UnknownState(f"initial state {self.init!r} is not a state")
        ins, outs = self.interface.inputs, self.interface.outputs

        readout = {}
        for s in states:
            if callable(self.readout):
                y = self.readout(s)
            elif s in self.readout:
                y = self.readout[s]
            else:
                raise ValueError(f"readout undefined for state {s!r}")
            readout[s] = coerce_valuation(outs, y, "readout")

        update = {}
        for s in states:
            for v in finite_values(ins):
                if callable(self.update):
                    nxt = self.update(s, v)
                elif (s, v) in self.update:
                    nxt = self.update[(s, v)]
                else:
                    raise ValueError(f"update undefined for state {s!r}, input {v!r}")
                if nxt not in state_set:
                    raise UnknownState(f"update({s!r}, {v!r}) = {nxt!r} is not a state")
                update[(s, v)] = nxt

        object.__setattr__(self, "states", states)
        object.__setattr__(self, "readout", MappingProxyType(readout))
        object.__setattr__(self, "update", MappingProxyType(update))
        object.__setattr__(self, "_state_set", state_set)

    def __eq__(self, other):
        if not isinstance(other, MooreMachine):
            return NotImplemented
        return (self.interface == other.interface and self.states == other.states
                and self.init == other.init and self.readout == other.readout
                and self.update == other.update)

    __hash__ = None

    def __repr__(self):
        return (f"MooreMachine({self.interface}, {len(self.states)} states, "
                f"init={self.init!r})")

    def has_state(self, s):
        return s in self._state_set

    def input_alphabet(self):
        return finite_values(self.interface.inputs)

    def with_init(self, init):
        return MooreMachine(self.interface, self.states, init, self.readout, self.update)


def delay_machine(labels=("0", "1"), init="0", inp="u", out="y"):
    """Unit delay: the state is the last input, the readout is the state."""
    t = Finite(tuple(labels))
    iface = Interface(((inp, t),), ((out, t),))
    return MooreMachine(iface, t.labels, init, lambda s: (s,), lambda s, v: v[0])


@dataclass(frozen=True)
class Trace:
    inputs: tuple
    outputs: tuple

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if len(self.inputs) != len(self.outputs):
            raise ValueError("trace inputs and outputs differ in length")

    def __len__(self):
        return len(self.inputs)


def step(m: MooreMachine, s, v):
    """One tick from state ``s`` on input ``v``: ``(next_state, output)``.

    The output is the readout of ``s`` itself.
    """
    if not m.has_state(s):
        raise UnknownState(f"{s!r} is not a state of {m!r}")
    v = coerce_valuation(m.interface.inputs, v)
    return m.update[(s, v)], m.readout[s]


def simulate(m: MooreMachine, inputs: Sequence) -> Trace:
    s = m.init
    ins, outs = [], []
    for v in inputs:
        v = coerce_valuation(m.interface.inputs, v)
        ins.append(v)
        outs.append(m.readout[s])
        s = m.update[(s, v)]
    return Trace(ins, outs)


def traces(m: MooreMachine, h: int, max_enum=None) -> frozenset:
    """Every trace of length ``h`` from the initial state."""
    if h < 0:
        raise ValueError("horizon must be non-negative")
    alphabet = m.input_alphabet()
    check_cap("trace enumeration", len(alphabet) ** h, max_enum)
    found = set()

    def walk(s, ins, outs):
        if len(ins) == h:
            found.add(Trace(ins, outs))
            return
        y = m.readout[s]
        for v in alphabet:
            walk(m.update[(s, v)], ins + (v,), outs + (y,))

    walk(m.init, (), ())
    return frozenset(found)


def apply_moore(d: WiringDiagram, assign: Mapping) -> MooreMachine:
    """The composite machine of ``d`` with box ``b`` inhabited by ``assign[b]``.

    Composite states are tuples of component states in inner-box order.
    """
    require_valid(d)
    _require_finite(d.outer, "outer interface")
    comps = []
    for b in d.inner:
        if b.box_id not in assign:
            raise MissingAssignment(f"no Moore machine assigned to box {b.box_id!r}")
        m = assign[b.box_id]
        if m.interface != b.interface:
            raise InterfaceMismatch(f"machine for {b.box_id!r} has interface "
                                    f"{m.interface}, box declares {b.interface}")
        comps.append(m)

    index = {b.box_id: j for j, b in enumerate(d.inner)}
    outer_in = {p: k for k, p in enumerate(d.outer.input_names)}
    out_pos = [{q: k for k, q in enumerate(b.interface.output_names)} for b in d.inner]

    def source(sup):
        if isinstance(sup, OuterInput):
            return (None, outer_in[sup.port])
        return (index[sup.box], out_pos[index[sup.box]][sup.port])

    plans = [[source(d.phi_in[(b.box_id, p)]) for p in b.interface.input_names]
             for b in d.inner]
    out_plan = [source(d.phi_out[q]) for q in d.outer.output_names]

    states = list(itertools.product(*(m.states for m in comps)))
    readout, update = {}, {}
    alphabet = finite_values(d.outer.inputs)
    for s in states:
        o = [m.readout[sj] for m, sj in zip(comps, s)]
        readout[s] = tuple(o[j][k] for j, k in out_plan)
        for v in alphabet:
            update[(s, v)] = tuple(
                m.update[(sj, tuple(v[k] if j is None else o[j][k] for j, k in plan))]
                for m, sj, plan in zip(comps, s, plans))
    init = tuple(m.init for m in comps)
    return MooreMachine(d.outer, states, init, readout, update)


def first_divergence(m1: MooreMachine, m2: MooreMachine, h: int):
    """Shortest, then lexicographically least, input sequence after which
    the two machines' outputs differ within ``h`` ticks.

    Returns ``(inputs, tick)``: ``inputs`` has length ``h`` (padded with the
    least valuation) and outputs first differ at ``tick``.  ``None`` if the
    machines agree on every length-``h`` run.  Breadth-first over reachable
    state pairs, visiting inputs in order, so the first path to each pair is
    its shortlex-least.
    """
    if m1.interface != m2.interface:
        raise InterfaceMismatch(f"{m1.interface} != {m2.interface}")
    alphabet = m1.input_alphabet()
    start = (m1.init, m2.init)
    frontier = [(start, ())]
    seen = {start}
    for t in range(h):
        for (s1, s2), path in frontier:
            if m1.readout[s1] != m2.readout[s2]:
                return path + (alphabet[0],) * (h - len(path)), t
        nxt = []
        for (s1, s2), path in frontier:
            for v in alphabet:
                pair = (m1.update[(s1, v)], m2.update[(s2, v)])
                if pair not in seen:
                    seen.add(pair)
                    nxt.append((pair, path + (v,)))
        frontier = nxt
    return None


def trace_equivalent(m1: MooreMachine, m2: MooreMachine, h: int) -> bool:
    return first_divergence(m1, m2, h) is None


def state_count(machines) -> int:
    return prod(len(m.states) for m in machines)
