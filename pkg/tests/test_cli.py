import json

import numpy as np
import pytest

from frameforge.cli import main
from frameforge.io import dumps, frame_from_json, frame_to_json, model_from_json, model_to_json
from frameforge.core import Frame
from frameforge.continuous import exponential_on_set, quadrature_frame_operator


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_frame_json_round_trip():
    rng = np.random.default_rng(0)
    f = Frame("complex", 2, rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)), [0.1, 0.2, 0.3])
    g = frame_from_json(json.loads(dumps(frame_to_json(f))))
    assert np.array_equal(f.vectors, g.vectors) and np.array_equal(f.weights, g.weights)


def test_model_json_round_trip():
    m = exponential_on_set([[-0.5, 0.5]], domain="lattice")
    m2 = model_from_json(json.loads(dumps(model_to_json(m))))
    assert np.allclose(quadrature_frame_operator(m2).entries, np.eye(7), atol=1e-12)


def test_bounds_onb(tmp_path, capsys):
    p = write(tmp_path / "onb.json", {"field": "real", "dim": 3, "vectors": np.eye(3).tolist()})
    assert main(["bounds", "--input", p]) == 0
    assert capsys.readouterr().out.strip() == "A=1 B=1"


def test_partition_hundred_copies(tmp_path):
    p = write(tmp_path / "f.json", {"field": "real", "dim": 2, "vectors": np.vstack([np.eye(2)] * 100).tolist()})
    out = tmp_path / "out.json"
    assert main(["partition", "-i", p, "-o", str(out)]) == 0
    res = json.loads(out.read_text())
    assert len(res["parts"]) == 1 and res["bounds"][0] == pytest.approx([100, 100])


def test_partition_is_deterministic_and_reverifiable(tmp_path, capsys):
    rng = np.random.default_rng(1)
    from frameforge.synth import tight_onb_union
    f = tight_onb_union(rng, 2, 500.0)
    p = write(tmp_path / "f.json", frame_to_json(f))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["partition", "-i", p, "-o", str(a)]) == 0
    assert main(["partition", "-i", p, "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    res = json.loads(a.read_text())
    part = res["parts"][0]
    sub = write(tmp_path / "sub.json", frame_to_json(f.subframe(part)))
    capsys.readouterr()
    main(["bounds", "-i", sub])
    A, B = [float(t.split("=")[1]) for t in capsys.readouterr().out.split()]
    assert [A, B] == pytest.approx(res["bounds"][0], rel=1e-10)


def test_subset_quantize_sample(tmp_path):
    onb = write(tmp_path / "s.json", {"field": "real", "dim": 2, "vectors": np.eye(2).tolist(), "weights": [1, 1]})
    out = tmp_path / "q.json"
    assert main(["quantize", "-i", onb, "--n", "2", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["scalars"] == ["sqrt(4)/2", "sqrt(4)/2"]
    assert main(["sample", "-i", onb, "-o", str(out)]) == 0
    assert json.loads(out.read_text())["multiplicities"] == [1, 1]
    tight = write(tmp_path / "t.json", {"field": "real", "dim": 1, "vectors": [[0.5]] * 12})
    assert main(["subset", "-i", tight, "--n", "2", "-o", str(out)]) == 0
    assert 1 - 1e-8 <= json.loads(out.read_text())["bounds"][0]


def test_discretize_and_exit_codes(tmp_path):
    lat = write(tmp_path / "m.json", {"evaluator": "exponential",
                                      "params": {"intervals": [[-0.5, 0.5]], "domain": "lattice"}})
    out = tmp_path / "d.json"
    assert main(["discretize", "-i", lat, "--epsilon", "0.1", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["bounds"][0] > 0
    unb = write(tmp_path / "u.json", {"evaluator": "unbounded", "params": {"d": 3}})
    assert main(["discretize", "-i", unb]) == 1
    assert main(["bounds", "-i", str(tmp_path / "missing.json")]) == 1
    bad = write(tmp_path / "b.json", {"field": "real", "dim": 1, "vectors": [[2.0]] * 3})
    assert main(["partition", "-i", bad]) == 1


def test_certificate_failure_exit_code(tmp_path):
    # far too fine a net for the cell cap: the pipeline reports instead of guessing
    m = write(tmp_path / "m.json", {"evaluator": "exponential", "params": {"intervals": [[0, 0.5]]}})
    assert main(["discretize", "-i", m, "--net-epsilon", "1", "--max-cells", "5000", "--resolution", "4096"]) == 2


def test_counterexample_csv(tmp_path, capsys):
    out = tmp_path / "audit.csv"
    assert main(["counterexample", "--n", "3", "--exhaustive", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "subset,case,bound" and len(lines) == 12871
    assert max(float(l.split(",")[2]) for l in lines[1:]) <= 0.4 + 1e-10
    assert "max basis Riesz bound=0.4" in capsys.readouterr().err
