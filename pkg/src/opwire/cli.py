"""Command-line interface.

Exit codes: 0 success or property holds, 1 property violated (the
counterexample goes to stdout), 2 input error.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from opwire import contracts as C
from opwire.diagram import export_dot
from opwire.errors import DEFAULT_MAX_ENUM, OpwireError
from opwire.hierarchy import (box_machine, check_refinement, compose_lti,
                              compose_moore, contract_paths, flatten,
                              flatten_model, leaf_assignments, locate)
from opwire.lti import simulate_lti
from opwire.modelfile import (ModelFile, dumps, load, read_trace_csv, to_json,
                              write_trace_csv)
from opwire.moore import simulate

ENV_MAX_ENUM = "OPWIRE_MAX_ENUM"


class UsageError(OpwireError):
    pass


def _max_enum(args):
    if args.max_enum is not None:
        return args.max_enum
    env = os.environ.get(ENV_MAX_ENUM)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{ENV_MAX_ENUM}={env!r} is not an integer") from None
    return DEFAULT_MAX_ENUM


def _node(model, path):
    """The sub-model whose diagram a ``--box`` path refers to."""
    if not path:
        return model
    parent, b = locate(model, path)
    if b not in parent.children:
        raise UsageError(f"box {path!r} is not refined by a sub-diagram")
    return parent.children[b]


def _seq(ports, seq):
    return "[" + ", ".join(C.format_valuation(ports, v) for v in seq) + "]"


def _algebra(model, requested):
    if requested != "auto":
        return requested
    d, _ = flatten(model)
    if all(b in leaf_assignments(model, "machines") for b in d.box_ids):
        return "moore"
    if all(b in leaf_assignments(model, "systems") for b in d.box_ids):
        return "lti"
    raise UsageError("model leaves are not all Moore machines or all LTI systems")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_validate(args, mf, out):
    d, prov = flatten(mf.model)
    out.write(f"ok: {len(mf.model.diagram.inner)} boxes, depth {mf.model.depth}, "
              f"{len(prov)} leaf boxes\n")
    return 0


def cmd_flatten(args, mf, out):
    _, prov = flatten(mf.model)
    flat = ModelFile(flatten_model(mf.model), mf.version, dict(mf.metadata))
    doc = {"flattened": to_json(flat),
           "provenance": {p: list(anc) for p, anc in prov.items()}}
    out.write(dumps(doc))
    return 0


def cmd_simulate(args, mf, out):
    model = mf.model
    algebra = _algebra(model, args.algebra)
    with open(args.inputs, encoding="utf-8") as fh:
        rows = read_trace_csv(fh.read(), model.outer.inputs)
    if args.horizon is not None:
        if args.horizon > len(rows):
            raise UsageError(f"--horizon {args.horizon} exceeds the {len(rows)} rows "
                             f"of {args.inputs}")
        rows = rows[:args.horizon]
    if algebra == "moore":
        trace = simulate(compose_moore(model), rows)
        out.write(write_trace_csv(model.outer.outputs, trace.outputs))
    else:
        sys_ = compose_lti(model)
        ys = simulate_lti(sys_, None, np.asarray(rows, dtype=float).reshape(len(rows), sys_.m))
        out.write(write_trace_csv(model.outer.outputs, ys))
    return 0


def cmd_compose_contracts(args, mf, out):
    node = _node(mf.model, args.box)
    contracts = dict(node.contracts)
    kinds = {type(contracts.get(b)) for b in node.diagram.box_ids}
    me = _max_enum(args)
    if kinds == {C.TraceContract}:
        comp = C.compose_trace_contracts(node.diagram, contracts, max_enum=me)
    else:
        comp = C.compose_contracts(node.diagram, contracts, max_enum=me)
    where = args.box or "<root>"
    out.write(f"composite contract at {where}: {len(comp)} pairs\n")
    for pair in comp.sorted_pairs():
        out.write(C.format_pair(comp.interface, pair) + "\n")
    return 0


def cmd_check(args, mf, out):
    model, me = mf.model, _max_enum(args)
    failed = checked = 0
    for path in contract_paths(model):
        parent, b = locate(model, path)
        contract = parent.contracts[b]
        try:
            mach = box_machine(model, path)
        except OpwireError as exc:
            out.write(f"SKIP {path}: {exc}\n")
            continue
        checked += 1
        verdict = C.satisfies(mach, contract, args.horizon, me)
        if verdict:
            out.write(f"PASS {path}\n")
        else:
            failed += 1
            out.write(f"FAIL {path}: inputs {_seq(contract.interface.inputs, verdict.counterexample)} "
                      f"leave the contract at tick {verdict.tick}\n")
    out.write(f"{checked} contracts checked, {failed} violated\n")
    return 1 if failed else 0


def cmd_check_naturality(args, mf, out):
    node = _node(mf.model, args.box)
    prefix = f"{args.box}/" if args.box else ""
    assign = {b: box_machine(mf.model, prefix + b) for b in node.diagram.box_ids}
    rep = C.check_naturality(node.diagram, assign, args.horizon, _max_enum(args))
    if rep.holds:
        out.write(f"naturality holds ({len(rep.behavior_leg)} traces)\n")
        return 0
    out.write(f"naturality fails: {len(rep.only_behavior)} behavior-only, "
              f"{len(rep.only_contract)} contract-only traces\n")
    for line in rep.lines():
        out.write(line + "\n")
    return 1


def cmd_check_refinement(args, mf, out):
    res = check_refinement(mf.model, args.box, args.horizon, args.tol)
    if res.algebra == "lti":
        out.write(f"refinement {'holds' if res else 'violated'} (lti, tol {args.tol:g})\n")
        return 0 if res else 1
    if res:
        out.write(f"refinement holds (moore, horizon {res.horizon})\n")
        return 0
    parent, b = locate(mf.model, args.box)
    iface = parent.diagram.box(b).interface
    out.write(f"refinement violated (moore, horizon {res.horizon})\n")
    out.write(f"counterexample {_seq(iface.inputs, res.counterexample)}\n")
    out.write(f"abstract       {_seq(iface.outputs, res.abstract_outputs)}\n")
    out.write(f"implementation {_seq(iface.outputs, res.implementation_outputs)}\n")
    return 1


def cmd_export_dot(args, mf, out):
    d = flatten(mf.model)[0] if args.flat else mf.model.diagram
    out.write(export_dot(d, mf.metadata.get("name", "wiring")))
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="opwire", description=__doc__.splitlines()[0])
    p.add_argument("--max-enum", type=int, default=None,
                   help=f"enumeration cap (default {DEFAULT_MAX_ENUM}, env {ENV_MAX_ENUM})")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("file")
        sp.set_defaults(func=fn)
        return sp

    add("validate", cmd_validate, "parse and validate a model file")
    add("flatten", cmd_flatten, "flatten the hierarchy; print model and provenance")
    sp = add("simulate", cmd_simulate, "simulate the model on an input trace file")
    sp.add_argument("--inputs", required=True)
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--algebra", choices=("auto", "moore", "lti"), default="auto")
    sp = add("compose-contracts", cmd_compose_contracts, "compose box contracts")
    sp.add_argument("--box", default="")
    sp = add("check", cmd_check, "check every contract against its box's behavior")
    sp.add_argument("--horizon", type=int, default=3)
    sp = add("check-naturality", cmd_check_naturality, "check the behavior/contract square")
    sp.add_argument("--horizon", type=int, required=True)
    sp.add_argument("--box", default="")
    sp = add("check-refinement", cmd_check_refinement,
             "compare a box's abstract assignment with its implementation")
    sp.add_argument("--box", required=True)
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp = add("export-dot", cmd_export_dot, "print the wiring diagram as Graphviz DOT")
    sp.add_argument("--flat", action="store_true")
    return p


def run_cli(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    for name in ("horizon",):
        if getattr(args, name, None) is not None and getattr(args, name) < 0:
            stderr.write(f"opwire: error: --{name} must be non-negative\n")
            return 2
    try:
        _max_enum(args)
        mf = load(args.file)
        return args.func(args, mf, stdout)
    except (OpwireError, OSError, ValueError, TypeError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        stderr.write(f"opwire: error: {msg}\n")
        return 2


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
