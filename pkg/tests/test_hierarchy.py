from pathlib import Path

import numpy as np
import pytest

from gen import BIT
from opwire.contracts import Contract, full_contract
from opwire.diagram import (BoxDecl, InnerOutput, Interface, OuterInput, Real,
                            WiringDiagram, identity_wiring, structurally_equal,
                            substitute)
from opwire.errors import DepthExceeded, InterfaceMismatch, MissingAssignment, MixedAlgebra
from opwire.hierarchy import (MAX_DEPTH, HierarchicalModel, box_machine,
                              check_refinement, check_refinement_lti,
                              check_refinement_moore, compose_lti, compose_moore,
                              contract_paths, flatten, flatten_model, locate,
                              propagate_change)
from opwire.lti import LtiSystem, static_gain
from opwire.modelfile import load
from opwire.moore import MooreMachine, apply_moore, delay_machine, traces

from test_diagram import chain
from test_lti import canonical_forms

MODELS = Path(__file__).resolve().parent.parent / "models"
IO = Interface([("in", BIT)], [("out", BIT)])
DELAY = delay_machine(inp="in", out="out")


def two_level(child_machines, abstract=None, contracts=None, child_contracts=None):
    """Top: u -> P -> y, with P refined by the chain A -> B."""
    top = identity_wiring(IO, "P")
    child = HierarchicalModel(chain(["A", "B"], outer_in="in", outer_out="out"),
                              machines=child_machines, contracts=child_contracts or {})
    return HierarchicalModel(top, {"P": child},
                             machines={} if abstract is None else {"P": abstract},
                             contracts=contracts or {})


# ---------------------------------------------------------------------------
# construction / locate
# ---------------------------------------------------------------------------

def test_child_interface_checked():
    child = HierarchicalModel(identity_wiring(delay_machine().interface, "x"))
    with pytest.raises(InterfaceMismatch):
        HierarchicalModel(identity_wiring(IO, "P"), {"P": child})
    with pytest.raises(InterfaceMismatch):
        HierarchicalModel(identity_wiring(IO, "P"), machines={"Q": DELAY})


def test_depth_cap():
    m = HierarchicalModel(identity_wiring(IO, "x"), machines={"x": DELAY})
    for _ in range(MAX_DEPTH - 1):
        m = HierarchicalModel(identity_wiring(IO, "x"), {"x": m})
    assert m.depth == MAX_DEPTH
    with pytest.raises(DepthExceeded):
        HierarchicalModel(identity_wiring(IO, "x"), {"x": m})


def test_locate():
    m = two_level({"A": DELAY, "B": DELAY})
    parent, b = locate(m, "P/B")
    assert b == "B" and parent is m.children["P"]
    with pytest.raises(MissingAssignment):
        locate(m, "P/C")


# ---------------------------------------------------------------------------
# flatten
# ---------------------------------------------------------------------------

def test_flatten_depth_one():
    d = chain(["A", "B"])
    flat, prov = flatten(HierarchicalModel(d))
    assert flat == d
    assert prov == {"A": (), "B": ()}


def test_flatten_three_levels():
    inner = HierarchicalModel(chain(["x", "y"], outer_in="in", outer_out="out"))
    mid = HierarchicalModel(chain(["A", "B"], outer_in="in", outer_out="out"), {"B": inner})
    top = HierarchicalModel(identity_wiring(IO, "P"), {"P": mid})
    flat, prov = flatten(top)
    assert flat.box_ids == ("P/A", "P/B/x", "P/B/y")
    assert prov == {"P/A": ("P",), "P/B/x": ("P", "P/B"), "P/B/y": ("P", "P/B")}
    assert structurally_equal(flat, chain(["a", "b", "c"], outer_in="in", outer_out="out"))


def test_flatten_uav_corpus():
    mf = load(MODELS / "uav-finite.model")
    flat, prov = flatten(mf.model)
    assert "D/autopilot" in flat.box_ids
    assert set(prov) == set(flat.box_ids)
    assert prov["D/airframe"] == ("D",) and prov["L"] == ()
    fm = flatten_model(mf.model)
    assert fm.depth == 1 and set(fm.machines) == set(flat.box_ids)


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------

def test_compose_moore_uses_implementation():
    m = two_level({"A": DELAY, "B": DELAY}, abstract=DELAY)
    comp = compose_moore(m)
    assert len(comp.states) == 4
    assert box_machine(m, "P").states == tuple((a, b) for a in "01" for b in "01")
    assert traces(box_machine(m, "P"), 3) == traces(comp, 3)


def test_compose_lti_mixed_algebra():
    R = Real()
    iface = Interface([("u", R)], [("y", R)])
    m = HierarchicalModel(identity_wiring(IO, "x"), machines={"x": DELAY})
    with pytest.raises(MixedAlgebra):
        compose_lti(m)
    m2 = HierarchicalModel(identity_wiring(iface, "x"), systems={"x": static_gain(iface, [[1.0]])})
    with pytest.raises(MixedAlgebra):
        compose_moore(m2)


# ---------------------------------------------------------------------------
# refinement (Moore)
# ---------------------------------------------------------------------------

def test_self_refinement():
    impl = {"A": DELAY, "B": DELAY}
    abstract = apply_moore(chain(["A", "B"], outer_in="in", outer_out="out"), impl)
    assert check_refinement_moore(two_level(impl, abstract), "P")


def two_step_delay():
    """Hand-built 2-step delay: state = last two inputs."""
    states = ["00", "01", "10", "11"]
    return MooreMachine(IO, states, "00", lambda s: (s[0],), lambda s, v: s[1] + v[0])


def test_two_step_delay_refined_by_two_delays():
    assert check_refinement_moore(two_level({"A": DELAY, "B": DELAY}, two_step_delay()), "P")


def test_two_step_delay_vs_single_delay():
    # implementation: a single unit delay
    top = identity_wiring(IO, "P")
    child = HierarchicalModel(identity_wiring(IO, "A"), machines={"A": DELAY})
    m = HierarchicalModel(top, {"P": child}, machines={"P": two_step_delay()})
    res = check_refinement_moore(m, "P")
    assert not res
    assert res.counterexample == (("1",), ("0",))
    assert res.abstract_outputs == (("0",), ("0",))
    assert res.implementation_outputs == (("0",), ("1",))


def test_refinement_needs_abstract_and_child():
    m = two_level({"A": DELAY, "B": DELAY})
    with pytest.raises(MissingAssignment):
        check_refinement(m, "P")
    flat = HierarchicalModel(identity_wiring(IO, "P"), machines={"P": DELAY})
    with pytest.raises(MissingAssignment):
        check_refinement(flat, "P")


# ---------------------------------------------------------------------------
# refinement (LTI)
# ---------------------------------------------------------------------------

R = Real()
SISO = Interface([("u", R)], [("y", R)])


def lti_two_level(abstract, impl):
    """P refined by impl followed by a unity gain."""
    child_d = WiringDiagram([BoxDecl("plant", SISO), BoxDecl("gain", SISO)], SISO,
                            {("plant", "u"): OuterInput("u"),
                             ("gain", "u"): InnerOutput("plant", "y")}, {"y": ("gain", "y")})
    child = HierarchicalModel(child_d, systems={"plant": impl,
                                                "gain": static_gain(SISO, [[1.0]])})
    return HierarchicalModel(identity_wiring(SISO, "P"), {"P": child}, systems={"P": abstract})


def test_lti_self_refinement():
    ctrb, _ = canonical_forms(-1.2, 0.35, 0.5, -0.25)
    m = lti_two_level(ctrb, ctrb)
    assert check_refinement_lti(m, "P")
    assert check_refinement(m, "P").algebra == "lti"


def test_lti_canonical_forms_refine():
    ctrb, obsv = canonical_forms(-1.2, 0.35, 0.5, -0.25)
    assert check_refinement_lti(lti_two_level(ctrb, obsv), "P", 1e-9)


def test_lti_scaled_a_fails():
    ctrb, obsv = canonical_forms(-1.2, 0.35, 0.5, -0.25)
    scaled = LtiSystem(SISO, 1.01 * ctrb.A, ctrb.B, ctrb.C, ctrb.D)
    assert not check_refinement_lti(lti_two_level(scaled, obsv), "P", 1e-6)


def test_uav_linear_corpus_refines():
    mf = load(MODELS / "uav.model")
    assert check_refinement(mf.model, "D")
    sys_ = compose_lti(mf.model)
    assert sys_.n == 2 and np.all(np.isfinite(sys_.A))


# ---------------------------------------------------------------------------
# change impact
# ---------------------------------------------------------------------------

def sticky_source(flipped=False):
    """Readout 0 in state z and 1 in o; only the flipped variant ever
    reaches o (on input 1 from z)."""
    def upd(s, v):
        return "o" if flipped and s == "z" and v == ("1",) else "z"
    return MooreMachine(IO, ["z", "o"], "z", {"z": ("0",), "o": ("1",)}, upd)


ALWAYS_ZERO = Contract(IO, [(("0",), ("0",)), (("1",), ("0",))])


def test_no_change_no_impact():
    m = two_level({"A": sticky_source(), "B": DELAY}, contracts={"P": ALWAYS_ZERO})
    rep = propagate_change(m, "P/A", 3)
    assert rep.changed == () and rep.lines() == []


def test_flip_reports_violated_ancestor():
    m = two_level({"A": sticky_source(), "B": DELAY}, contracts={"P": ALWAYS_ZERO},
                  child_contracts={"A": full_contract(IO)})
    rep = propagate_change(m, "P/A", 3, sticky_source(flipped=True))
    assert [e.path for e in rep.changed] == ["P"]
    e = rep.changed[0]
    assert (e.before, e.after) == (True, False)
    assert e.counterexample == (("1",), ("0",), ("0",)) and e.tick == 2


def test_vacuous_parent_contract_absent():
    m = two_level({"A": sticky_source(), "B": DELAY}, contracts={"P": full_contract(IO)})
    rep = propagate_change(m, "P/A", 3, sticky_source(flipped=True))
    assert rep.changed == ()


def test_contract_paths_tree_order():
    m = two_level({"A": DELAY, "B": DELAY}, contracts={"P": ALWAYS_ZERO},
                  child_contracts={"B": full_contract(IO)})
    assert contract_paths(m) == ["P", "P/B"]


def test_substitute_then_compose_equals_staged():
    m = two_level({"A": DELAY, "B": DELAY})
    flat, _ = flatten(m)
    staged = compose_moore(m)
    nested = apply_moore(flat, {"P/A": DELAY, "P/B": DELAY})
    assert traces(staged, 4) == traces(nested, 4)
    assert flat == substitute(m.diagram, "P", m.children["P"].diagram)
