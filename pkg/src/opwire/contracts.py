"""Contracts as input/output relations, composed along wiring diagrams.

A :class:`Contract` is a finite set of allowed ``(input valuation, output
valuation)`` pairs; a :class:`TraceContract` does the same for length-``h``
sequences.  Composition keeps an outer pair ``(i, o)`` exactly when some
assignment of values to every inner output port makes each box's local
pair allowed and reads ``o`` through the output wiring.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import prod
from typing import Callable, Mapping

import numpy as np

from opwire.diagram import (Finite, Interface, OuterInput, WiringDiagram,
                            finite_values, require_valid)
from opwire.errors import (DEFAULT_MAX_ENUM, ExplosionGuard, HorizonMismatch,
                           InterfaceMismatch, MissingAssignment, NonFiniteType,
                           check_cap)
from opwire.lti import LtiSystem, simulate_lti
from opwire.moore import MooreMachine, apply_moore, coerce_valuation, traces

__all__ = ["Contract", "TraceContract", "full_contract", "compose_contracts",
           "compose_trace_contracts", "alpha", "satisfies", "Verdict",
           "check_naturality", "NaturalityReport", "format_valuation",
           "format_pair", "sort_key", "trace_sort_key", "PredicateContract",
           "satisfies_sampled"]


def _require_finite(interface, what):
    for name, typ in interface.ports():
        if not isinstance(typ, Finite):
            raise NonFiniteType(f"{what}: port {name!r} has type {typ}, expected Finite")


@dataclass(frozen=True)
class Contract:
    """Allowed single-step ``(input, output)`` pairs over a Finite interface."""

    interface: Interface
    pairs: frozenset = frozenset()

    def __post_init__(self):
        _require_finite(self.interface, "Contract")
        ins, outs = self.interface.inputs, self.interface.outputs
        pairs = frozenset((coerce_valuation(ins, i, "contract input"),
                           coerce_valuation(outs, o, "contract output"))
                          for i, o in self.pairs)
        object.__setattr__(self, "pairs", pairs)

    def __contains__(self, pair):
        return pair in self.pairs

    def __len__(self):
        return len(self.pairs)

    def sorted_pairs(self):
        key = sort_key(self.interface)
        return sorted(self.pairs, key=key)


def full_contract(interface: Interface) -> Contract:
    """The vacuous contract admitting every pair."""
    return Contract(interface, itertools.product(finite_values(interface.inputs),
                                                 finite_values(interface.outputs)))


@dataclass(frozen=True)
class TraceContract:
    """Allowed ``(input sequence, output sequence)`` pairs of length ``horizon``."""

    interface: Interface
    horizon: int
    pairs: frozenset = frozenset()

    def __post_init__(self):
        _require_finite(self.interface, "TraceContract")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")
        ins, outs = self.interface.inputs, self.interface.outputs
        pairs = set()
        for pair in self.pairs:
            if hasattr(pair, "inputs"):
                pair = (pair.inputs, pair.outputs)
            iseq, oseq = pair
            iseq = tuple(coerce_valuation(ins, v, "trace input") for v in iseq)
            oseq = tuple(coerce_valuation(outs, v, "trace output") for v in oseq)
            if len(iseq) != self.horizon or len(oseq) != self.horizon:
                raise HorizonMismatch(f"trace pair of length {len(iseq)}/{len(oseq)} "
                                      f"in a horizon-{self.horizon} contract")
            pairs.add((iseq, oseq))
        object.__setattr__(self, "pairs", frozenset(pairs))

    def __contains__(self, pair):
        return pair in self.pairs

    def __len__(self):
        return len(self.pairs)

    def sorted_pairs(self):
        return sorted(self.pairs, key=trace_sort_key(self.interface))


# ---------------------------------------------------------------------------
# ordering and formatting
# ---------------------------------------------------------------------------

def _label_index(ports):
    return [{lab: k for k, lab in enumerate(t.labels)} for _, t in ports]


def sort_key(interface):
    """Key ordering ``(input, output)`` pairs by declared label order."""
    ii, oi = _label_index(interface.inputs), _label_index(interface.outputs)

    def key(pair):
        i, o = pair
        return (tuple(m[v] for m, v in zip(ii, i)), tuple(m[v] for m, v in zip(oi, o)))
    return key


def trace_sort_key(interface):
    """Key ordering trace pairs by input sequence, then output sequence."""
    ii, oi = _label_index(interface.inputs), _label_index(interface.outputs)

    def key(pair):
        iseq, oseq = pair
        return (tuple(tuple(m[v] for m, v in zip(ii, x)) for x in iseq),
                tuple(tuple(m[v] for m, v in zip(oi, y)) for y in oseq))
    return key


def format_valuation(ports, v) -> str:
    return "(" + ", ".join(f"{n}={x}" for (n, _), x in zip(ports, v)) + ")"


def format_pair(interface, pair) -> str:
    i, o = pair
    if i and isinstance(i[0], tuple) or o and isinstance(o[0], tuple):
        ins = " ".join(format_valuation(interface.inputs, v) for v in i)
        outs = " ".join(format_valuation(interface.outputs, v) for v in o)
        return f"[{ins}] -> [{outs}]"
    return f"{format_valuation(interface.inputs, i)} -> {format_valuation(interface.outputs, o)}"


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------

def _pullback(d, relations, outer_domains, max_enum):
    """Outer pairs admitted by per-box relations wired by ``d``.

    ``relations[j]`` holds ``(u, o)`` tuples for box ``j`` whose entries are
    opaque port values; ``outer_domains[k]`` lists the values an outer input
    may take when no box constrains it.  Boxes are joined in inner order:
    choosing a pair for box ``j`` binds its outputs and is checked against
    every wire whose endpoints are both bound.
    """
    boxes = d.inner
    index = {b.box_id: j for j, b in enumerate(boxes)}
    outer_pos = {p: k for k, p in enumerate(d.outer.input_names)}
    out_pos = [{q: k for k, q in enumerate(b.interface.output_names)} for b in boxes]

    own = [[] for _ in boxes]     # checks on box j's own inputs
    later = [[] for _ in boxes]   # checks on earlier boxes' inputs fed by box j
    used_outer = set()
    for j, b in enumerate(boxes):
        for k_in, port in enumerate(b.interface.input_names):
            sup = d.phi_in[(b.box_id, port)]
            if isinstance(sup, OuterInput):
                own[j].append(("outer", k_in, outer_pos[sup.port]))
                used_outer.add(outer_pos[sup.port])
            else:
                i = index[sup.box]
                k_out = out_pos[i][sup.port]
                if i <= j:
                    own[j].append(("inner", k_in, i, k_out))
                else:
                    later[i].append((j, k_in, k_out))
    free_outer = [k for k in range(len(d.outer.inputs)) if k not in used_outer]
    out_plan = [(index[t.box], out_pos[index[t.box]][t.port])
                for t in (d.phi_out[q] for q in d.outer.output_names)]

    rels = [list(r) for r in relations]
    cap = DEFAULT_MAX_ENUM if max_enum is None else max_enum
    # candidates examined so far: tried local pairs plus emitted outer pairs
    examined = [0]

    def tick(n):
        examined[0] += n
        if examined[0] > cap:
            raise ExplosionGuard("contract composition", examined[0], cap)

    result = set()
    chosen = [None] * len(boxes)
    bound = [None] * len(d.outer.inputs)

    def emit():
        outs = tuple(chosen[j][1][k] for j, k in out_plan)
        tick(prod(len(outer_domains[k]) for k in free_outer))
        for free in itertools.product(*(outer_domains[k] for k in free_outer)):
            ins = list(bound)
            for k, val in zip(free_outer, free):
                ins[k] = val
            result.add((tuple(ins), outs))

    def choose(j):
        if j == len(boxes):
            emit()
            return
        tick(len(rels[j]))
        for u, o in rels[j]:
            newly = []
            ok = True
            for chk in own[j]:
                if chk[0] == "outer":
                    _, k_in, k = chk
                    if bound[k] is None:
                        bound[k] = u[k_in]
                        newly.append(k)
                    elif bound[k] != u[k_in]:
                        ok = False
                        break
                else:
                    _, k_in, i, k_out = chk
                    src = o if i == j else chosen[i][1]
                    if src[k_out] != u[k_in]:
                        ok = False
                        break
            if ok:
                for jj, k_in, k_out in later[j]:
                    if chosen[jj][0][k_in] != o[k_out]:
                        ok = False
                        break
            if ok:
                chosen[j] = (u, o)
                choose(j + 1)
                chosen[j] = None
            for k in newly:
                bound[k] = None

    choose(0)
    return result


def _check_boxes(d, assign, kind):
    require_valid(d)
    _require_finite(d.outer, "outer interface")
    out = []
    for b in d.inner:
        if b.box_id not in assign:
            raise MissingAssignment(f"no contract assigned to box {b.box_id!r}")
        c = assign[b.box_id]
        if not isinstance(c, kind):
            raise TypeError(f"box {b.box_id!r}: expected {kind.__name__}, got {type(c).__name__}")
        if c.interface != b.interface:
            raise InterfaceMismatch(f"contract for {b.box_id!r} has interface "
                                    f"{c.interface}, box declares {b.interface}")
        out.append(c)
    return out


def compose_contracts(d: WiringDiagram, assign: Mapping, max_enum=None) -> Contract:
    """The composite contract of ``d`` from per-box contracts."""
    contracts = _check_boxes(d, assign, Contract)
    domains = [t.labels for _, t in d.outer.inputs]
    pairs = _pullback(d, [c.pairs for c in contracts], domains, max_enum)
    return Contract(d.outer, pairs)


def _transpose(seq, width):
    # time-major valuations -> port-major sequences
    return tuple(tuple(v[k] for v in seq) for k in range(width))


def _untranspose(ports_seq, horizon):
    return tuple(tuple(p[t] for p in ports_seq) for t in range(horizon))


def compose_trace_contracts(d: WiringDiagram, assign: Mapping, horizon=None,
                            max_enum=None) -> TraceContract:
    """Trace-level composition: every port carries a length-``h`` sequence."""
    contracts = _check_boxes(d, assign, TraceContract)
    horizons = {c.horizon for c in contracts}
    if horizon is not None:
        horizons.add(horizon)
    if len(horizons) > 1:
        raise HorizonMismatch(f"mixed horizons {sorted(horizons)}")
    h = horizons.pop() if horizons else 0
    relations = []
    for b, c in zip(d.inner, contracts):
        ni, no = len(b.interface.inputs), len(b.interface.outputs)
        relations.append([(_transpose(i, ni), _transpose(o, no)) for i, o in c.pairs])
    domains = [list(itertools.product(t.labels, repeat=h)) for _, t in d.outer.inputs]
    pairs = _pullback(d, relations, domains, max_enum)
    return TraceContract(d.outer, h, [(_untranspose(i, h), _untranspose(o, h))
                                      for i, o in pairs])


# ---------------------------------------------------------------------------
# behavior -> contracts
# ---------------------------------------------------------------------------

def alpha(m: MooreMachine, h: int, max_enum=None) -> TraceContract:
    """The trace contract of ``m``: every length-``h`` trace from its initial state."""
    return TraceContract(m.interface, h,
                         [(tr.inputs, tr.outputs) for tr in traces(m, h, max_enum)])


@dataclass(frozen=True)
class Verdict:
    holds: bool
    counterexample: tuple = None  # input sequence
    tick: int = None
    outputs: tuple = None

    def __bool__(self):
        return self.holds


def satisfies(m: MooreMachine, r, h: int = None, max_enum=None) -> Verdict:
    """Does every run of ``m`` stay inside contract ``r``?

    For a :class:`Contract`, every tick of every length-``h`` run must be an
    allowed pair.  For a :class:`TraceContract`, every trace of the
    contract's horizon must be listed (``h`` is ignored).  On failure the
    counterexample is the lexicographically least violating input sequence,
    and ``tick`` the first tick at which it leaves the contract.
    """
    if m.interface != r.interface:
        raise InterfaceMismatch(f"machine interface {m.interface} != contract {r.interface}")
    alphabet = m.input_alphabet()
    if isinstance(r, TraceContract):
        return _satisfies_traces(m, r, alphabet, max_enum)
    if h is None:
        raise ValueError("a horizon is required for single-step contracts")
    check_cap("satisfaction search", len(m.states) * len(alphabet) * max(h, 1), max_enum)
    safe = set()

    def walk(s, t):
        if t == h or (s, t) in safe:
            return None
        y = m.readout[s]
        for v in alphabet:
            if (v, y) not in r.pairs:
                return (v,), t
            found = walk(m.update[(s, v)], t + 1)
            if found is not None:
                return (v,) + found[0], found[1]
        safe.add((s, t))
        return None

    found = walk(m.init, 0)
    if found is None:
        return Verdict(True)
    prefix, tick = found
    seq = prefix + (alphabet[0],) * (h - len(prefix))
    return Verdict(False, seq, tick, _run(m, seq))


def _run(m, seq):
    s, outs = m.init, []
    for v in seq:
        outs.append(m.readout[s])
        s = m.update[(s, v)]
    return tuple(outs)


def _satisfies_traces(m, r, alphabet, max_enum):
    h = r.horizon
    check_cap("trace enumeration", len(alphabet) ** h, max_enum)
    prefixes = set()
    for i, o in r.pairs:
        for t in range(h + 1):
            prefixes.add((i[:t], o[:t]))
    for seq in itertools.product(alphabet, repeat=h):
        outs = _run(m, seq)
        if (seq, outs) not in r.pairs:
            tick = next(t for t in range(h) if (seq[:t + 1], outs[:t + 1]) not in prefixes)
            return Verdict(False, seq, tick, outs)
    return Verdict(True)


# ---------------------------------------------------------------------------
# real-valued interfaces: sampled checking only
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PredicateContract:
    """Allowed ``(u, y)`` pairs over a real interface, given as a predicate
    on the packed input and output vectors of one tick.

    Such a relation cannot be enumerated, so it is never composed; it is
    only checked against simulated traces with :func:`satisfies_sampled`.
    """

    interface: Interface
    predicate: Callable


def satisfies_sampled(s: LtiSystem, r: PredicateContract, samples, x0=None) -> Verdict:
    """Check ``r`` on every tick of the simulated response to each input
    sample (an array of shape ``(T, m)``), in order.

    A pass only says no violation was observed on these samples.  On
    failure the counterexample is the first violating sample, ``tick`` the
    first violating tick, and ``outputs`` the simulated outputs.
    """
    if s.interface != r.interface:
        raise InterfaceMismatch(f"system interface {s.interface} != contract {r.interface}")
    for u in samples:
        u = np.asarray(u, dtype=float).reshape(-1, s.m)
        ys = simulate_lti(s, x0, u)
        for t, (ut, yt) in enumerate(zip(u, ys)):
            if not r.predicate(ut, yt):
                return Verdict(False, tuple(map(tuple, u)), t, tuple(map(tuple, ys)))
    return Verdict(True)


@dataclass(frozen=True)
class NaturalityReport:
    """Both legs of the behavior-to-contract square, compared as sets."""

    interface: Interface
    horizon: int
    behavior_leg: frozenset      # alpha of the composite machine
    contract_leg: frozenset      # composite of the per-box alphas
    only_behavior: tuple = field(default=())
    only_contract: tuple = field(default=())

    @property
    def holds(self):
        return not self.only_behavior and not self.only_contract

    def __bool__(self):
        return self.holds

    def lines(self):
        out = [f"behavior-only {format_pair(self.interface, p)}" for p in self.only_behavior]
        out += [f"contract-only {format_pair(self.interface, p)}" for p in self.only_contract]
        return out


def check_naturality(d: WiringDiagram, assign: Mapping, h: int,
                     max_enum=None) -> NaturalityReport:
    """Compare ``alpha`` of the composite machine against the composite of
    the per-box ``alpha`` contracts."""
    left = alpha(apply_moore(d, assign), h, max_enum).pairs
    per_box = {b.box_id: alpha(assign[b.box_id], h, max_enum) for b in d.inner}
    right = compose_trace_contracts(d, per_box, horizon=h, max_enum=max_enum).pairs
    key = trace_sort_key(d.outer)
    order = lambda pairs: tuple(sorted(pairs, key=key))  # noqa: E731
    return NaturalityReport(d.outer, h, left, right,
                            order(left - right), order(right - left))

