"""Typed wiring diagrams with Moore, LTI and contract semantics."""
from opwire.contracts import (Contract, TraceContract, alpha, check_naturality,
                              compose_contracts, compose_trace_contracts,
                              full_contract, satisfies)
from opwire.diagram import (BoxDecl, Finite, InnerOutput, Interface, OuterInput,
                            Real, RealVector, WiringDiagram, export_dot,
                            identity_wiring, structurally_equal, substitute,
                            tensor, validate)
from opwire.errors import (ExplosionGuard, IllPosedLoop, InterfaceMismatch,
                           OpwireError)
from opwire.hierarchy import (HierarchicalModel, check_refinement_lti,
                              check_refinement_moore, flatten, propagate_change)
from opwire.lti import (LtiSystem, apply_lti, lti_equivalent, markov_parameters,
                        simulate_lti, static_gain)
from opwire.modelfile import ModelFile, parse_model, serialize
from opwire.moore import (MooreMachine, Trace, apply_moore, simulate, step,
                          traces)

__version__ = "0.1.0"

__all__ = [
    "BoxDecl",
    "Contract",
    "ExplosionGuard",
    "Finite",
    "HierarchicalModel",
    "IllPosedLoop",
    "InnerOutput",
    "Interface",
    "InterfaceMismatch",
    "LtiSystem",
    "ModelFile",
    "MooreMachine",
    "OpwireError",
    "OuterInput",
    "Real",
    "RealVector",
    "Trace",
    "TraceContract",
    "WiringDiagram",
    "alpha",
    "apply_lti",
    "apply_moore",
    "check_naturality",
    "check_refinement_lti",
    "check_refinement_moore",
    "compose_contracts",
    "compose_trace_contracts",
    "export_dot",
    "flatten",
    "full_contract",
    "identity_wiring",
    "lti_equivalent",
    "markov_parameters",
    "parse_model",
    "propagate_change",
    "satisfies",
    "serialize",
    "simulate",
    "simulate_lti",
    "static_gain",
    "step",
    "structurally_equal",
    "substitute",
    "tensor",
    "traces",
    "validate",
]
