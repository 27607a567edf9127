import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import BIT, REALS, random_contract, random_diagram, random_lti, random_machine, rng_for
from opwire.contracts import alpha
from opwire.diagram import Real, RealVector, identity_wiring
from opwire.errors import ModelSyntaxError, ModelValidationError, SchemaError
from opwire.hierarchy import HierarchicalModel
from opwire.modelfile import (ModelFile, load, parse_model, read_trace_csv,
                              serialize, to_json, trace_columns, write_trace_csv)
from opwire.moore import delay_machine

MODELS = Path(__file__).resolve().parent.parent / "models"
CORPUS = sorted(MODELS.glob("*.model"))


def delay_doc():
    return json.loads((MODELS / "delay.model").read_text())


def parse_doc(doc):
    return parse_model(json.dumps(doc))


def test_corpus_present():
    assert {p.name for p in CORPUS} >= {"uav.model", "uav-finite.model",
                                        "uav-finite-perturbed.model", "delay.model"}


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.name)
def test_corpus_round_trip(path):
    text = path.read_text(encoding="utf-8")
    mf = parse_model(text)
    assert serialize(mf) == text
    assert parse_model(serialize(mf)) == mf


def test_minimal_delay_file():
    mf = load(MODELS / "delay.model")
    assert mf.model.machines["delay"] == delay_machine()
    assert mf.metadata == {"name": "delay"}


def test_nonexistent_port_reports_wire_path():
    doc = delay_doc()
    doc["model"]["wires"][0]["from"] = {"outer": "nope"}
    with pytest.raises(ModelValidationError) as exc:
        parse_doc(doc)
    assert exc.value.path == "/model/wires/0"
    assert "DanglingReference" in str(exc.value)


def test_bad_output_reports_output_path():
    doc = delay_doc()
    doc["model"]["outputs"][0]["from"] = {"box": "delay", "port": "zz"}
    with pytest.raises(ModelValidationError) as exc:
        parse_doc(doc)
    assert exc.value.path == "/model/outputs/0"


def test_syntax_error_position():
    with pytest.raises(ModelSyntaxError) as exc:
        parse_model('{\n  "version": "1.0",\n  "model": }')
    assert (exc.value.line, exc.value.column) == (3, 12)


def test_unknown_and_duplicate_keys():
    doc = delay_doc()
    doc["model"]["boxes"][0]["colour"] = "red"
    with pytest.raises(SchemaError) as exc:
        parse_doc(doc)
    assert exc.value.path == "/model/boxes/0/colour"
    with pytest.raises(SchemaError):
        parse_model('{"version": "1.0", "version": "1.0", "model": {}}')


def test_version_checked():
    doc = delay_doc()
    doc["version"] = "2.0"
    with pytest.raises(SchemaError) as exc:
        parse_doc(doc)
    assert exc.value.path == "/version"


def test_duplicate_box_id():
    doc = delay_doc()
    doc["model"]["boxes"].append(doc["model"]["boxes"][0])
    with pytest.raises(ModelValidationError) as exc:
        parse_doc(doc)
    assert exc.value.path == "/model/boxes/1/id"


def test_fan_in_rejected():
    doc = delay_doc()
    doc["model"]["wires"].append(doc["model"]["wires"][0])
    with pytest.raises(ModelValidationError) as exc:
        parse_doc(doc)
    assert "fan-in" in str(exc.value)


def test_bad_machine_reports_machine_path():
    doc = delay_doc()
    doc["model"]["boxes"][0]["machine"]["init"] = "7"
    with pytest.raises(ModelValidationError) as exc:
        parse_doc(doc)
    assert exc.value.path == "/model/boxes/0/machine"


def test_matrix_shape_errors():
    mf = load(MODELS / "uav.model")
    doc = to_json(mf)
    doc["model"]["boxes"][2]["system"]["A"]["data"][0].append(1.0)
    with pytest.raises(ModelValidationError) as exc:
        parse_doc(doc)
    assert exc.value.path == "/model/boxes/2/system/A/data/0"


def test_non_finite_number_rejected():
    doc = to_json(load(MODELS / "uav.model"))
    doc["model"]["boxes"][2]["system"]["A"]["data"][0][0] = float("nan")
    with pytest.raises(SchemaError) as exc:
        parse_doc(doc)
    assert exc.value.path == "/model/boxes/2/system/A/data/0/0"


def test_trace_contract_round_trip():
    m = delay_machine()
    model = HierarchicalModel(identity_wiring(m.interface, "d"), machines={"d": m},
                              contracts={"d": alpha(m, 2)})
    mf = ModelFile(model)
    assert parse_model(serialize(mf)) == mf


@given(st.integers(0, 10 ** 9))
@settings(max_examples=40, deadline=None)
def test_random_moore_model_round_trip(seed):
    rng = rng_for(seed)
    d = random_diagram(rng)
    model = HierarchicalModel(
        d, machines={b.box_id: random_machine(rng, b.interface) for b in d.inner},
        contracts={b.box_id: random_contract(rng, b.interface) for b in d.inner[:1]})
    mf = ModelFile(model, metadata={"seed": str(seed)})
    text = serialize(mf)
    assert parse_model(text) == mf
    assert serialize(parse_model(text)) == text


@given(st.integers(0, 10 ** 9))
@settings(max_examples=30, deadline=None)
def test_random_lti_model_round_trip(seed):
    rng = rng_for(seed)
    d = random_diagram(rng, types=REALS)
    model = HierarchicalModel(d, systems={b.box_id: random_lti(rng, b.interface)
                                          for b in d.inner})
    mf = ModelFile(model)
    assert parse_model(serialize(mf)) == mf


# ---------------------------------------------------------------------------
# CSV traces
# ---------------------------------------------------------------------------

def test_trace_columns_expand_vectors():
    ports = [("a", Real()), ("v", RealVector(2))]
    assert trace_columns(ports) == ["a", "v[0]", "v[1]"]


def test_read_finite_csv_any_column_order():
    ports = [("a", BIT), ("b", BIT)]
    assert read_trace_csv("b,a\n1,0\n0,0\n", ports) == [("0", "1"), ("0", "0")]


def test_read_real_csv():
    ports = [("a", Real()), ("v", RealVector(2))]
    rows = read_trace_csv("v[1],a,v[0]\n3,1,2\n", ports)
    assert rows == [[1.0, 2.0, 3.0]]


def test_csv_errors():
    ports = [("a", BIT)]
    with pytest.raises(SchemaError):
        read_trace_csv("b\n0\n", ports)
    with pytest.raises(ModelSyntaxError) as exc:
        read_trace_csv("a\n0\n2\n", ports)
    assert exc.value.line == 3
    with pytest.raises(ModelSyntaxError):
        read_trace_csv("a\nx\n", [("a", Real())])
    with pytest.raises(SchemaError):
        read_trace_csv("a,b\n0,1\n", [("a", BIT), ("b", Real())])


def test_write_csv():
    text = write_trace_csv([("y", Real())], np.array([[1.5], [-2.0]]))
    assert text == "t,y\n0,1.5\n1,-2.0\n"
    assert write_trace_csv([("s", BIT)], [("1",)]) == "t,s\n0,1\n"
