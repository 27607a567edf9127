"""Discrete-time LTI state-space systems as the linear behavior algebra.

Ports pack into one input and one output vector in declared order; a
``RealVector[k]`` port takes ``k`` contiguous coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from opwire.diagram import (Interface, OuterInput, Real, RealVector,
                            WiringDiagram, port_width, require_valid)
from opwire.errors import (DimensionMismatch, IllPosedLoop, InterfaceMismatch,
                           MissingAssignment, NonRealType)
from opwire.linalg import SingularMatrix, block_diag, inverse

__all__ = ["LtiSystem", "static_gain", "apply_lti", "simulate_lti",
           "markov_parameters", "lti_equivalent", "similarity_transform",
           "port_offsets", "WELL_POSED_EPS"]

WELL_POSED_EPS = 1e-10


def _require_real(interface, what):
    for name, typ in interface.ports():
        if not isinstance(typ, (Real, RealVector)):
            raise NonRealType(f"{what}: port {name!r} has type {typ}, expected Real/RealVector")


def port_offsets(ports):
    """``{name: (start, stop)}`` slices of the packed vector, plus total width."""
    out, k = {}, 0
    for name, typ in ports:
        w = port_width(typ)
        out[name] = (k, k + w)
        k += w
    return out, k


def _matrix(x, rows, cols, name):
    arr = np.asarray(x, dtype=float)
    if arr.size == 0:
        arr = np.zeros((rows, cols))
    elif arr.ndim < 2:
        arr = np.atleast_2d(arr)
    if arr.shape != (rows, cols):
        raise DimensionMismatch(f"{name} must be {rows}x{cols}, got {arr.shape[0]}x"
                                f"{arr.shape[1] if arr.ndim > 1 else ''}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LtiSystem:
    """``x[t+1] = A x[t] + B u[t]``, ``y[t] = C x[t] + D u[t]``.

    ``n = 0`` (empty ``A``) is a static gain ``y = D u``.
    """

    interface: Interface
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        _require_real(self.interface, "LtiSystem")
        m = port_offsets(self.interface.inputs)[1]
        p = port_offsets(self.interface.outputs)[1]
        a = np.asarray(self.A, dtype=float)
        n = 0 if a.size == 0 else np.atleast_2d(a).shape[0]
        object.__setattr__(self, "A", _matrix(self.A, n, n, "A"))
        object.__setattr__(self, "B", _matrix(self.B, n, m, "B"))
        object.__setattr__(self, "C", _matrix(self.C, p, n, "C"))
        object.__setattr__(self, "D", _matrix(self.D, p, m, "D"))

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    def __eq__(self, other):
        if not isinstance(other, LtiSystem):
            return NotImplemented
        return (self.interface == other.interface
                and all(np.array_equal(getattr(self, k), getattr(other, k))
                        for k in "ABCD"))

    __hash__ = None

    def __repr__(self):
        return f"LtiSystem({self.interface}, n={self.n}, m={self.m}, p={self.p})"


def static_gain(interface, D):
    """A memoryless block ``y = D u``."""
    return LtiSystem(interface, np.zeros((0, 0)), [], [], D)


def similarity_transform(s: LtiSystem, T) -> LtiSystem:
    """The same system in coordinates ``z = T x``."""
    T = np.asarray(T, dtype=float)
    Ti = np.linalg.inv(T)
    return LtiSystem(s.interface, T @ s.A @ Ti, T @ s.B, s.C @ Ti, s.D)


def apply_lti(d: WiringDiagram, assign: Mapping, eps: float = WELL_POSED_EPS) -> LtiSystem:
    """Interconnect the systems assigned to ``d``'s boxes.

    Inner inputs satisfy ``u = E_y y + E_v v`` and outer outputs read
    ``F y``; the instantaneous loop through the feedthrough terms is
    resolved with ``(I - E_y D)^-1``, which must exist with every pivot at
    least ``eps`` in magnitude.
    """
    require_valid(d)
    _require_real(d.outer, "outer interface")
    systems = []
    for b in d.inner:
        if b.box_id not in assign:
            raise MissingAssignment(f"no LTI system assigned to box {b.box_id!r}")
        s = assign[b.box_id]
        if s.interface != b.interface:
            raise InterfaceMismatch(f"system for {b.box_id!r} has interface "
                                    f"{s.interface}, box declares {b.interface}")
        systems.append(s)

    in_base, out_base = {}, {}
    k_in = k_out = 0
    for b, s in zip(d.inner, systems):
        in_base[b.box_id] = (k_in, port_offsets(b.interface.inputs)[0])
        out_base[b.box_id] = (k_out, port_offsets(b.interface.outputs)[0])
        k_in += s.m
        k_out += s.p
    outer_in, m_outer = port_offsets(d.outer.inputs)
    outer_out, p_outer = port_offsets(d.outer.outputs)

    Ey = np.zeros((k_in, k_out))
    Ev = np.zeros((k_in, m_outer))
    F = np.zeros((p_outer, k_out))
    for (box, port), sup in d.phi_in.items():
        base, offs = in_base[box]
        r0, r1 = offs[port]
        rows = slice(base + r0, base + r1)
        if isinstance(sup, OuterInput):
            c0, c1 = outer_in[sup.port]
            Ev[rows, c0:c1] = np.eye(r1 - r0)
        else:
            obase, ooffs = out_base[sup.box]
            c0, c1 = ooffs[sup.port]
            Ey[rows, obase + c0:obase + c1] = np.eye(r1 - r0)
    for q, tgt in d.phi_out.items():
        r0, r1 = outer_out[q]
        obase, ooffs = out_base[tgt.box]
        c0, c1 = ooffs[tgt.port]
        F[r0:r1, obase + c0:obase + c1] = np.eye(r1 - r0)

    Ad = block_diag([s.A for s in systems])
    Bd = block_diag([s.B for s in systems])
    Cd = block_diag([s.C for s in systems])
    Dd = block_diag([s.D for s in systems])
    try:
        M = inverse(np.eye(k_in) - Ey @ Dd, eps)
    except SingularMatrix as exc:
        raise IllPosedLoop(f"instantaneous feedback loop is not well posed ({exc})") from None

    A = Ad + Bd @ M @ Ey @ Cd
    B = Bd @ M @ Ev
    C = F @ (Cd + Dd @ M @ Ey @ Cd)
    D = F @ Dd @ M @ Ev
    return LtiSystem(d.outer, A, B, C, D)


def simulate_lti(s: LtiSystem, x0=None, inputs=()) -> np.ndarray:
    """Outputs ``y[0..T-1]`` for inputs ``u[0..T-1]`` from state ``x0``."""
    x = np.zeros(s.n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x.shape != (s.n,):
        raise DimensionMismatch(f"initial state has dimension {x.size}, expected {s.n}")
    u = np.asarray(inputs, dtype=float)
    if u.ndim == 1 and u.size == 0:
        u = u.reshape(0, s.m)
    elif u.ndim == 1 and s.m == 1:
        u = u.reshape(-1, 1)
    if u.ndim != 2 or u.shape[1] != s.m:
        raise DimensionMismatch(f"inputs must have {s.m} columns, got shape {u.shape}")
    ys = np.zeros((u.shape[0], s.p))
    for t, ut in enumerate(u):
        ys[t] = s.C @ x + s.D @ ut
        x = s.A @ x + s.B @ ut
    return ys


def markov_parameters(s: LtiSystem, count: int) -> list:
    """``[D, CB, CAB, ..., C A^(count-2) B]``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    out = [s.D.copy()]
    AkB = s.B.copy()
    for _ in range(count - 1):
        out.append(s.C @ AkB)
        AkB = s.A @ AkB
    return out


def lti_equivalent(s1: LtiSystem, s2: LtiSystem, tol: float = 1e-9) -> bool:
    """Input/output equivalence from zero state, via ``n1 + n2 + 1`` Markov
    parameters compared entrywise within ``tol``."""
    if s1.interface != s2.interface:
        raise InterfaceMismatch(f"{s1.interface} != {s2.interface}")
    k = s1.n + s2.n + 1
    return all(np.all(np.abs(h1 - h2) <= tol)
               for h1, h2 in zip(markov_parameters(s1, k), markov_parameters(s2, k)))
