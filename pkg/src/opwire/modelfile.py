"""JSON model files and CSV trace files.

A model file is UTF-8 JSON::

    {"version": "1.0", "metadata": {...}, "model": MODEL}

where ``MODEL`` holds ``interface`` (root only), ``boxes``, ``wires`` and
``outputs``.  Each box may carry a ``machine``, ``system``, ``contract``
and/or a ``refinement`` (a nested MODEL without ``interface``, inheriting
the box's).  Unknown keys are rejected everywhere.  :func:`serialize` is
canonical: sorted keys, structural lists in model order, floats in shortest
round-trip form, so ``serialize(parse_model(serialize(x)))`` is a fixed
point.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from opwire.contracts import Contract, TraceContract
from opwire.diagram import (BoxDecl, Finite, InnerOutput, Interface, OuterInput,
                            Real, RealVector, WiringDiagram, finite_values, validate)
from opwire.errors import (ModelSyntaxError, ModelValidationError, OpwireError,
                           SchemaError)
from opwire.hierarchy import HierarchicalModel
from opwire.lti import LtiSystem
from opwire.moore import MooreMachine

__all__ = ["FORMAT_VERSION", "ModelFile", "parse_model", "serialize",
           "load", "read_trace_csv", "write_trace_csv", "trace_columns"]

FORMAT_VERSION = "1.0"


@dataclass(frozen=True, eq=False)
class ModelFile:
    model: HierarchicalModel
    version: str = FORMAT_VERSION
    metadata: dict = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, ModelFile):
            return NotImplemented
        return (self.version == other.version and self.metadata == other.metadata
                and self.model == other.model)

    __hash__ = None


# ---------------------------------------------------------------------------
# reading helpers
# ---------------------------------------------------------------------------

def _ptr(path, key):
    key = str(key).replace("~", "~0").replace("/", "~1")
    return f"{path}/{key}"


def _obj(x, path, required=(), optional=()):
    if not isinstance(x, dict):
        raise SchemaError(path, f"expected an object, got {type(x).__name__}")
    allowed = set(required) | set(optional)
    for k in sorted(x):
        if k not in allowed:
            raise SchemaError(_ptr(path, k), "unknown key")
    for k in required:
        if k not in x:
            raise SchemaError(path, f"missing key {k!r}")
    return x


def _list(x, path):
    if not isinstance(x, list):
        raise SchemaError(path, f"expected an array, got {type(x).__name__}")
    return x


def _str(x, path):
    if not isinstance(x, str):
        raise SchemaError(path, f"expected a string, got {type(x).__name__}")
    return x


def _int(x, path):
    if not isinstance(x, int) or isinstance(x, bool) or x < 0:
        raise SchemaError(path, "expected a non-negative integer")
    return x


def _num(x, path):
    if not isinstance(x, (int, float)) or isinstance(x, bool):
        raise SchemaError(path, "expected a number")
    if not math.isfinite(x):
        raise SchemaError(path, "number must be finite")
    return float(x)


def _build(path, ctor, *args):
    try:
        return ctor(*args)
    except (OpwireError, ValueError, TypeError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        raise ModelValidationError(path, str(msg)) from None


def _no_duplicates(pairs):
    seen = {}
    for k, v in pairs:
        if k in seen:
            raise _DuplicateKey(k)
        seen[k] = v
    return seen


class _DuplicateKey(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _parse_type(x, path):
    if x == "real":
        return Real()
    if isinstance(x, dict) and "finite" in x:
        _obj(x, path, ("finite",))
        labels = [_str(v, f"{path}/finite/{i}") for i, v in enumerate(_list(x["finite"], f"{path}/finite"))]
        return _build(path, Finite, tuple(labels))
    if isinstance(x, dict) and "vector" in x:
        _obj(x, path, ("vector",))
        return _build(path, RealVector, _int(x["vector"], f"{path}/vector"))
    raise SchemaError(path, 'expected "real", {"finite": [...]} or {"vector": n}')


def _parse_ports(x, path):
    out = []
    for i, p in enumerate(_list(x, path)):
        pp = f"{path}/{i}"
        _obj(p, pp, ("name", "type"))
        out.append((_str(p["name"], f"{pp}/name"), _parse_type(p["type"], f"{pp}/type")))
    return out


def _parse_interface(x, path):
    _obj(x, path, ("inputs", "outputs"))
    return _build(path, Interface, _parse_ports(x["inputs"], f"{path}/inputs"),
                  _parse_ports(x["outputs"], f"{path}/outputs"))


def _parse_ref(x, path, allow_outer):
    if allow_outer and isinstance(x, dict) and "outer" in x:
        _obj(x, path, ("outer",))
        return OuterInput(_str(x["outer"], f"{path}/outer"))
    _obj(x, path, ("box", "port"))
    return InnerOutput(_str(x["box"], f"{path}/box"), _str(x["port"], f"{path}/port"))


def _parse_valuation(x, ports, path):
    _obj(x, path, [n for n, _ in ports])
    return tuple(_str(x[n], _ptr(path, n)) for n, _ in ports)


def _parse_machine(x, iface, path):
    _obj(x, path, ("states", "init", "readout", "transitions"))
    states = [_str(s, f"{path}/states/{i}") for i, s in enumerate(_list(x["states"], f"{path}/states"))]
    init = _str(x["init"], f"{path}/init")
    rx = _obj(x["readout"], f"{path}/readout", (), states)
    readout = {s: _parse_valuation(v, iface.outputs, _ptr(f"{path}/readout", s))
               for s, v in rx.items()}
    update = {}
    for i, t in enumerate(_list(x["transitions"], f"{path}/transitions")):
        tp = f"{path}/transitions/{i}"
        _obj(t, tp, ("state", "input", "next"))
        key = (_str(t["state"], f"{tp}/state"),
               _parse_valuation(t["input"], iface.inputs, f"{tp}/input"))
        if key in update:
            raise ModelValidationError(tp, "duplicate transition")
        update[key] = _str(t["next"], f"{tp}/next")
    return _build(path, MooreMachine, iface, states, init, readout, update)


def _parse_matrix(x, path):
    _obj(x, path, ("rows", "cols", "data"))
    rows, cols = _int(x["rows"], f"{path}/rows"), _int(x["cols"], f"{path}/cols")
    data = _list(x["data"], f"{path}/data")
    if len(data) != rows:
        raise ModelValidationError(f"{path}/data", f"expected {rows} rows, got {len(data)}")
    out = np.zeros((rows, cols))
    for i, row in enumerate(data):
        row = _list(row, f"{path}/data/{i}")
        if len(row) != cols:
            raise ModelValidationError(f"{path}/data/{i}", f"expected {cols} columns, got {len(row)}")
        for j, v in enumerate(row):
            out[i, j] = _num(v, f"{path}/data/{i}/{j}")
    return out


def _parse_system(x, iface, path):
    _obj(x, path, ("A", "B", "C", "D"))
    mats = [_parse_matrix(x[k], f"{path}/{k}") for k in "ABCD"]
    return _build(path, LtiSystem, iface, *mats)


def _parse_contract(x, iface, path):
    kind = x.get("kind") if isinstance(x, dict) else None
    if kind == "step":
        _obj(x, path, ("kind", "pairs"))
        pairs = []
        for i, p in enumerate(_list(x["pairs"], f"{path}/pairs")):
            pp = f"{path}/pairs/{i}"
            _obj(p, pp, ("input", "output"))
            pairs.append((_parse_valuation(p["input"], iface.inputs, f"{pp}/input"),
                          _parse_valuation(p["output"], iface.outputs, f"{pp}/output")))
        return _build(path, Contract, iface, pairs)
    if kind == "trace":
        _obj(x, path, ("kind", "horizon", "pairs"))
        h = _int(x["horizon"], f"{path}/horizon")
        pairs = []
        for i, p in enumerate(_list(x["pairs"], f"{path}/pairs")):
            pp = f"{path}/pairs/{i}"
            _obj(p, pp, ("inputs", "outputs"))
            ins = [_parse_valuation(v, iface.inputs, f"{pp}/inputs/{t}")
                   for t, v in enumerate(_list(p["inputs"], f"{pp}/inputs"))]
            outs = [_parse_valuation(v, iface.outputs, f"{pp}/outputs/{t}")
                    for t, v in enumerate(_list(p["outputs"], f"{pp}/outputs"))]
            pairs.append((ins, outs))
        return _build(path, TraceContract, iface, h, pairs)
    raise SchemaError(f"{path}/kind", 'expected "step" or "trace"')


def _parse_model_obj(x, path, interface=None):
    root = interface is None
    required = ("interface", "boxes", "wires", "outputs") if root else ("boxes", "wires", "outputs")
    _obj(x, path, required)
    outer = _parse_interface(x["interface"], f"{path}/interface") if root else interface

    boxes, box_paths, raw = [], {}, _list(x["boxes"], f"{path}/boxes")
    for i, b in enumerate(raw):
        bp = f"{path}/boxes/{i}"
        _obj(b, bp, ("id", "interface"), ("machine", "system", "contract", "refinement"))
        box_id = _str(b["id"], f"{bp}/id")
        boxes.append(BoxDecl(box_id, _parse_interface(b["interface"], f"{bp}/interface")))
        if box_id in box_paths:
            raise ModelValidationError(f"{bp}/id", f"DuplicateId: box id {box_id!r} "
                                       "declared more than once")
        box_paths[box_id] = bp

    phi_in, wire_paths = {}, {}
    for i, w in enumerate(_list(x["wires"], f"{path}/wires")):
        wp = f"{path}/wires/{i}"
        _obj(w, wp, ("from", "to"))
        to = _parse_ref(w["to"], f"{wp}/to", allow_outer=False)
        key = (to.box, to.port)
        if key in phi_in:
            raise ModelValidationError(wp, f"inner input {to} already has a supplier "
                                       "(fan-in is not allowed)")
        phi_in[key] = _parse_ref(w["from"], f"{wp}/from", allow_outer=True)
        wire_paths[key] = wp

    phi_out, out_paths = {}, {}
    for i, o in enumerate(_list(x["outputs"], f"{path}/outputs")):
        op = f"{path}/outputs/{i}"
        _obj(o, op, ("port", "from"))
        port = _str(o["port"], f"{op}/port")
        if port in phi_out:
            raise ModelValidationError(op, f"outer output {port!r} already has a supplier")
        phi_out[port] = _parse_ref(o["from"], f"{op}/from", allow_outer=False)
        out_paths[port] = op

    d = WiringDiagram(boxes, outer, phi_in, phi_out)
    report = validate(d)
    if not report.ok:
        v = report.violations[0]
        kind, key = v.key
        if kind == "phi_in":
            vp = wire_paths.get(key) or box_paths.get(key[0], f"{path}/wires")
        else:
            vp = out_paths.get(key, f"{path}/outputs")
        raise ModelValidationError(vp, str(v))

    children, machines, systems, contracts = {}, {}, {}, {}
    for b, rb in zip(boxes, raw):
        bp = box_paths[b.box_id]
        if "machine" in rb:
            machines[b.box_id] = _parse_machine(rb["machine"], b.interface, f"{bp}/machine")
        if "system" in rb:
            systems[b.box_id] = _parse_system(rb["system"], b.interface, f"{bp}/system")
        if "contract" in rb:
            contracts[b.box_id] = _parse_contract(rb["contract"], b.interface, f"{bp}/contract")
        if "refinement" in rb:
            children[b.box_id] = _parse_model_obj(rb["refinement"], f"{bp}/refinement",
                                                  b.interface)
    return _build(path, HierarchicalModel, d, children, machines, systems, contracts)


def parse_model(text: str) -> ModelFile:
    """Parse and fully validate a model file."""
    try:
        x = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    except _DuplicateKey as exc:
        raise SchemaError("", f"duplicate key {exc.args[0]!r}") from None
    _obj(x, "", ("version", "model"), ("metadata",))
    version = _str(x["version"], "/version")
    if version != FORMAT_VERSION:
        raise SchemaError("/version", f"unsupported version {version!r} (expected {FORMAT_VERSION!r})")
    meta = x.get("metadata", {})
    _obj(meta, "/metadata", (), list(meta) if isinstance(meta, dict) else ())
    metadata = {k: _str(v, _ptr("/metadata", k)) for k, v in meta.items()}
    return ModelFile(_parse_model_obj(x["model"], "/model"), version, metadata)


def load(path) -> ModelFile:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _dump_type(t):
    if isinstance(t, Real):
        return "real"
    if isinstance(t, RealVector):
        return {"vector": t.dim}
    return {"finite": list(t.labels)}


def _dump_interface(iface):
    return {"inputs": [{"name": n, "type": _dump_type(t)} for n, t in iface.inputs],
            "outputs": [{"name": n, "type": _dump_type(t)} for n, t in iface.outputs]}


def _dump_ref(sup):
    if isinstance(sup, OuterInput):
        return {"outer": sup.port}
    return {"box": sup.box, "port": sup.port}


def _valuation(ports, v):
    return {n: x for (n, _), x in zip(ports, v)}


def _dump_machine(m):
    for s in m.states:
        if not isinstance(s, str):
            raise TypeError(f"only string-labelled states serialize, got {s!r}")
    iface = m.interface
    return {
        "states": list(m.states),
        "init": m.init,
        "readout": {s: _valuation(iface.outputs, m.readout[s]) for s in m.states},
        "transitions": [{"state": s, "input": _valuation(iface.inputs, v),
                         "next": m.update[(s, v)]}
                        for s in m.states for v in finite_values(iface.inputs)],
    }


def _dump_matrix(a):
    return {"rows": a.shape[0], "cols": a.shape[1],
            "data": [[float(v) for v in row] for row in a]}


def _dump_contract(c):
    iface = c.interface
    if isinstance(c, TraceContract):
        return {"kind": "trace", "horizon": c.horizon,
                "pairs": [{"inputs": [_valuation(iface.inputs, v) for v in i],
                           "outputs": [_valuation(iface.outputs, v) for v in o]}
                          for i, o in c.sorted_pairs()]}
    return {"kind": "step",
            "pairs": [{"input": _valuation(iface.inputs, i),
                       "output": _valuation(iface.outputs, o)}
                      for i, o in c.sorted_pairs()]}


def _dump_model(m, root=True):
    d = m.diagram
    boxes = []
    for b in d.inner:
        entry = {"id": b.box_id, "interface": _dump_interface(b.interface)}
        if b.box_id in m.machines:
            entry["machine"] = _dump_machine(m.machines[b.box_id])
        if b.box_id in m.systems:
            s = m.systems[b.box_id]
            entry["system"] = {k: _dump_matrix(getattr(s, k)) for k in "ABCD"}
        if b.box_id in m.contracts:
            entry["contract"] = _dump_contract(m.contracts[b.box_id])
        if b.box_id in m.children:
            entry["refinement"] = _dump_model(m.children[b.box_id], root=False)
        boxes.append(entry)
    out = {
        "boxes": boxes,
        "wires": [{"to": {"box": b.box_id, "port": p}, "from": _dump_ref(d.phi_in[(b.box_id, p)])}
                  for b in d.inner for p in b.interface.input_names],
        "outputs": [{"port": q, "from": _dump_ref(d.phi_out[q])} for q in d.outer.output_names],
    }
    if root:
        out["interface"] = _dump_interface(d.outer)
    return out


def to_json(mf: ModelFile) -> dict:
    out = {"version": mf.version, "model": _dump_model(mf.model)}
    if mf.metadata:
        out["metadata"] = dict(mf.metadata)
    return out


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def serialize(mf: ModelFile) -> str:
    """Canonical text of a model file."""
    return dumps(to_json(mf))


# ---------------------------------------------------------------------------
# trace files
# ---------------------------------------------------------------------------

def trace_columns(ports):
    """CSV column names for ``ports``; vector ports expand to ``p[0]..p[k-1]``."""
    cols = []
    for name, t in ports:
        if isinstance(t, RealVector):
            cols.extend(f"{name}[{k}]" for k in range(t.dim))
        else:
            cols.append(name)
    return cols


def read_trace_csv(text: str, ports) -> list:
    """Input valuations from a CSV trace: a header row of port names, then
    one comma-separated row per tick.

    Finite ports yield label tuples; if every port is real the rows are
    packed float vectors in port order.
    """
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise SchemaError("/", "trace file has no header row")
    header = [c.strip() for c in rows[0]]
    expected = trace_columns(ports)
    if sorted(header) != sorted(expected) or len(set(header)) != len(header):
        raise SchemaError("/0", f"trace header {header} does not match input ports {expected}")
    pos = {c: i for i, c in enumerate(header)}
    finite = all(isinstance(t, Finite) for _, t in ports)
    if not finite and any(isinstance(t, Finite) for _, t in ports):
        raise SchemaError("/", "trace files need all-Finite or all-real ports")
    out = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ModelSyntaxError(f"expected {len(header)} fields, got {len(row)}", line, 1)
        cells = [c.strip() for c in row]
        if finite:
            v = tuple(cells[pos[n]] for n, _ in ports)
            for (n, t), x in zip(ports, v):
                if x not in t.labels:
                    raise ModelSyntaxError(f"{x!r} is not a label of {n}: {t}", line,
                                           pos[n] + 1)
            out.append(v)
        else:
            vec = []
            for c in expected:
                try:
                    vec.append(float(cells[pos[c]]))
                except ValueError:
                    raise ModelSyntaxError(f"column {c}: {cells[pos[c]]!r} is not a number",
                                           line, pos[c] + 1) from None
            out.append(vec)
    return out


def write_trace_csv(ports, rows, with_tick=True) -> str:
    """CSV text of output ``rows`` (label tuples or packed float vectors)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((["t"] if with_tick else []) + trace_columns(ports))
    for t, row in enumerate(rows):
        cells = [repr(float(x)) if not isinstance(x, str) else x for x in row]
        w.writerow(([t] if with_tick else []) + cells)
    return buf.getvalue()
