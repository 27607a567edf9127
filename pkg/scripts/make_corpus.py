"""Regenerate the example models under models/.

The UAV wiring is sensor L, controller C and dynamics D around an outer box
with inputs d (desired state) and e (environment) and output s (state);
s' is the sensed state and c the control action.  D is refined into an
embedded-architecture sub-diagram (autopilot, esc, airframe).  The
architecture is illustrative, not a verified hardware inventory.

    python scripts/make_corpus.py [outdir]
"""
import sys
from pathlib import Path

import numpy as np

from opwire.contracts import Contract
from opwire.diagram import (BoxDecl, Finite, InnerOutput, Interface, OuterInput,
                            Real, RealVector, WiringDiagram, identity_wiring)
from opwire.hierarchy import HierarchicalModel, box_machine
from opwire.lti import LtiSystem, similarity_transform, static_gain
from opwire.modelfile import ModelFile, serialize
from opwire.moore import MooreMachine, delay_machine, traces


def uav_diagram(t):
    """Top-level behavior diagram; ``t`` maps port name to type."""
    iface = lambda ins, outs: Interface([(p, t[p]) for p in ins],  # noqa: E731
                                        [(p, t[p]) for p in outs])
    boxes = [BoxDecl("L", iface(["s"], ["s'"])),
             BoxDecl("C", iface(["d", "s'"], ["c"])),
             BoxDecl("D", iface(["c", "e"], ["s"]))]
    phi_in = {("L", "s"): InnerOutput("D", "s"),
              ("C", "d"): OuterInput("d"),
              ("C", "s'"): InnerOutput("L", "s'"),
              ("D", "c"): InnerOutput("C", "c"),
              ("D", "e"): OuterInput("e")}
    return WiringDiagram(boxes, iface(["d", "e"], ["s"]), phi_in, {"s": ("D", "s")})


def architecture_diagram(t, outer):
    """Embedded implementation of D: autopilot -> esc -> airframe."""
    boxes = [BoxDecl("autopilot", Interface([("c", t["c"])], [("cmd", t["cmd"])])),
             BoxDecl("esc", Interface([("cmd", t["cmd"])], [("thrust", t["thrust"])])),
             BoxDecl("airframe", Interface([("thrust", t["thrust"]), ("e", t["e"])],
                                           [("s", t["s"])]))]
    phi_in = {("autopilot", "c"): OuterInput("c"),
              ("esc", "cmd"): InnerOutput("autopilot", "cmd"),
              ("airframe", "thrust"): InnerOutput("esc", "thrust"),
              ("airframe", "e"): OuterInput("e")}
    return WiringDiagram(boxes, outer, phi_in, {"s": ("airframe", "s")})


# ---------------------------------------------------------------------------
# finite (Moore) variant
# ---------------------------------------------------------------------------

FIN = {"d": Finite(("hold", "climb")), "e": Finite(("calm", "gust")),
       "s": Finite(("low", "high")), "s'": Finite(("low", "high")),
       "c": Finite(("idle", "thrust")), "cmd": Finite(("idle", "thrust")),
       "thrust": Finite(("off", "on"))}


def _airframe_next(alt, thrust, e, perturbed=False):
    if thrust == "on" and e == "calm":
        return "low" if perturbed and alt == "low" else "high"
    if thrust == "off":
        return "low"
    return alt


def finite_model(perturbed=False):
    top = uav_diagram(FIN)
    boxes = {b.box_id: b.interface for b in top.inner}
    sensor = MooreMachine(boxes["L"], ("low", "high"), "low",
                          lambda s: (s,), lambda s, v: v[0])
    controller = MooreMachine(
        boxes["C"], ("idle", "thrust"), "idle", lambda s: (s,),
        lambda s, v: "thrust" if v == ("climb", "low") else "idle")

    # abstract dynamics with a two-tick actuation lag:
    # state = latched command / esc output / altitude
    states = [f"{c}/{p}/{a}" for c in ("idle", "thrust") for p in ("off", "on")
              for a in ("low", "high")]

    def d_next(s, v):
        c, p, a = s.split("/")
        return f"{v[0]}/{'on' if c == 'thrust' else 'off'}/{_airframe_next(a, p, v[1])}"

    dynamics = MooreMachine(boxes["D"], states, "idle/off/low",
                            lambda s: (s.split("/")[2],), d_next)

    arch = architecture_diagram(FIN, boxes["D"])
    ab = {b.box_id: b.interface for b in arch.inner}
    autopilot = MooreMachine(ab["autopilot"], ("idle", "thrust"), "idle",
                             lambda s: (s,), lambda s, v: v[0])
    esc = MooreMachine(ab["esc"], ("off", "on"), "off", lambda s: (s,),
                       lambda s, v: "on" if v[0] == "thrust" else "off")
    airframe = MooreMachine(ab["airframe"], ("low", "high"), "low", lambda s: (s,),
                            lambda s, v: _airframe_next(s, v[0], v[1], perturbed))
    child = HierarchicalModel(arch, machines={"autopilot": autopilot, "esc": esc,
                                              "airframe": airframe})
    machines = {"L": sensor, "C": controller, "D": dynamics}

    # contracts: the step relation each box exhibits over 4 ticks
    probe = HierarchicalModel(top, {"D": child}, machines)
    contracts = {}
    for b in top.box_ids:
        m = box_machine(probe, b)
        pairs = {(i, o) for tr in traces(m, 4) for i, o in zip(tr.inputs, tr.outputs)}
        contracts[b] = Contract(m.interface, pairs)
    return HierarchicalModel(top, {"D": child}, machines, {}, contracts)


# ---------------------------------------------------------------------------
# linear variant
# ---------------------------------------------------------------------------

LIN = {"d": Real(), "e": Real(), "s": RealVector(2), "s'": RealVector(2),
       "c": Real(), "cmd": Real(), "thrust": Real()}
DT = 0.1
A_D = np.array([[1.0, DT], [0.0, 0.95]])
B_D = np.array([[0.0, 0.0], [DT, DT]])


def linear_model():
    top = uav_diagram(LIN)
    boxes = {b.box_id: b.interface for b in top.inner}
    sensor = static_gain(boxes["L"], np.eye(2))
    kp, kv = 0.8, 1.2
    controller = static_gain(boxes["C"], [[kp, -kp, -kv]])
    dynamics = LtiSystem(boxes["D"], A_D, B_D, np.eye(2), np.zeros((2, 2)))

    arch = architecture_diagram(LIN, boxes["D"])
    ab = {b.box_id: b.interface for b in arch.inner}
    autopilot = static_gain(ab["autopilot"], [[2.0]])
    esc = static_gain(ab["esc"], [[0.5]])
    # airframe in (altitude, altitude + dt*velocity) coordinates
    T = np.array([[1.0, 0.0], [1.0, DT]])
    airframe = similarity_transform(
        LtiSystem(ab["airframe"], A_D, B_D, np.eye(2), np.zeros((2, 2))), T)
    child = HierarchicalModel(arch, systems={"autopilot": autopilot, "esc": esc,
                                             "airframe": airframe})
    return HierarchicalModel(top, {"D": child},
                             systems={"L": sensor, "C": controller, "D": dynamics})


def delay_model():
    m = delay_machine()
    return HierarchicalModel(identity_wiring(m.interface, "delay"), machines={"delay": m})


def finite_inputs(n=100):
    rows = ["d,e"]
    for t in range(n):
        d = "climb" if (t // 5) % 3 != 2 else "hold"
        e = "gust" if t % 7 in (3, 4) else "calm"
        rows.append(f"{d},{e}")
    return "\n".join(rows) + "\n"


def linear_inputs(n=100):
    rows = ["d,e"]
    for t in range(n):
        d = 1.0 if t < 60 else 0.5
        e = round(0.05 * (((t * 37) % 11) - 5) / 5, 4)
        rows.append(f"{d!r},{e!r}")
    return "\n".join(rows) + "\n"


def main(outdir="models"):
    out = Path(outdir)
    out.mkdir(exist_ok=True)
    files = {
        "uav.model": ModelFile(linear_model(), metadata={
            "name": "uav", "algebra": "lti",
            "note": "illustrative embedded architecture for D"}),
        "uav-finite.model": ModelFile(finite_model(), metadata={
            "name": "uav-finite", "algebra": "moore",
            "note": "contracts are the step relations each box exhibits over 4 ticks"}),
        "uav-finite-perturbed.model": ModelFile(finite_model(perturbed=True), metadata={
            "name": "uav-finite-perturbed", "algebra": "moore",
            "note": "airframe fails to climb from low in calm air"}),
        "delay.model": ModelFile(delay_model(), metadata={"name": "delay"}),
    }
    for name, mf in files.items():
        (out / name).write_text(serialize(mf), encoding="utf-8")
    (out / "uav-finite.inputs.csv").write_text(finite_inputs(), encoding="utf-8")
    (out / "uav.inputs.csv").write_text(linear_inputs(), encoding="utf-8")
    (out / "delay.inputs.csv").write_text("u\n1\n0\n1\n", encoding="utf-8")


if __name__ == "__main__":
    main(*sys.argv[1:])
