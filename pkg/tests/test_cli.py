import json
import math
from pathlib import Path

import pytest

from photonsim.cli import circuit_schema, main

CIRCUITS = Path(__file__).resolve().parent.parent / "circuits"


def write(tmp_path, doc, name="c.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(path)


def doc(simulator, modes, instructions, **config):
    return {"version": "1.0", "simulator": simulator, "modes": modes, "config": config, "instructions": instructions}


def test_run_writes_csv_and_sidecar(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["run", str(CIRCUITS / "gbs.json"), "--shots", "100", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "mode_0,mode_1,mode_2"
    assert len(lines) == 101
    meta = json.loads((tmp_path / "s.csv.meta.json").read_text())
    assert meta["seed"] == 42 and meta["shots"] == 100
    assert meta["diagnostics"]["generator"]


def test_run_repeatable_and_seed_sensitive(tmp_path):
    outs = []
    for i, seed in enumerate(["9", "9", "10"]):
        out = tmp_path / f"{i}.csv"
        assert main(["run", str(CIRCUITS / "boson_sampling.json"), "--seed", seed, "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0] != outs[2]


def test_run_stdout(capsys):
    assert main(["run", str(CIRCUITS / "squeezed_mode.json"), "--shots", "5"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 6


def test_kerr_under_gaussian_exits_3(tmp_path, capsys):
    path = write(tmp_path, doc("gaussian", 1, [{"name": "Kerr", "modes": [0], "params": {"kappa": 0.1}}]))
    assert main(["run", path]) == 3
    assert "instruction 0" in capsys.readouterr().err


def test_probs_vacuum(tmp_path):
    path = write(tmp_path, doc("gaussian", 2, [{"name": "ParticleNumberMeasurement"}]))
    out = tmp_path / "p.csv"
    assert main(["probs", path, "--max-total", "3", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "mode_0,mode_1,probability"
    values = {tuple(r.split(",")[:2]): float(r.split(",")[2]) for r in rows[1:]}
    assert values[("0", "0")] == pytest.approx(1.0, abs=1e-12)
    assert sum(values.values()) == pytest.approx(1.0, abs=1e-12)
    assert json.loads((tmp_path / "p.csv.meta.json").read_text())["tail_mass"] < 1e-12


def test_probs_hom_and_squeezed(tmp_path):
    out = tmp_path / "hom.csv"
    assert main(["probs", str(CIRCUITS / "hom.json"), "--max-total", "2", "--out", str(out)]) == 0
    rows = {tuple(r.split(",")[:2]): float(r.split(",")[2]) for r in out.read_text().splitlines()[1:]}
    assert abs(rows[("1", "1")]) < 1e-12
    assert rows[("2", "0")] == pytest.approx(0.5, abs=1e-12)

    out = tmp_path / "sq.csv"
    assert main(["probs", str(CIRCUITS / "squeezed_mode.json"), "--max-total", "6", "--out", str(out)]) == 0
    rows = {int(r.split(",")[0]): float(r.split(",")[1]) for r in out.read_text().splitlines()[1:]}
    assert rows[0] == pytest.approx(1 / math.cosh(0.5), abs=1e-12)
    assert all(abs(rows[n]) < 1e-15 for n in (1, 3, 5))


def test_probs_rejects_homodyne(tmp_path):
    assert main(["probs", str(CIRCUITS / "homodyne.json")]) == 2


def test_bench_csv(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--kernel", "hafnian", "--sizes", "2..12", "--reps", "2", "--runs", "3", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "kernel,size,repetitions,expanded_dim,seconds,runs,impl"
    assert [int(l.split(",")[1]) for l in lines[1:]] == [2, 4, 6, 8, 10, 12]
    assert all(int(l.split(",")[3]) == 2 * int(l.split(",")[1]) for l in lines[1:])
    out = tmp_path / "t.csv"
    assert main(["bench", "--kernel", "torontonian", "--sizes", "2..10", "--runs", "2", "--impl", "python", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 6


@pytest.mark.parametrize("args", [["--kernel", "hafnian", "--sizes", "3"], ["--kernel", "permanent", "--sizes", "41"], ["--kernel", "torontonian", "--sizes", "4", "--reps", "2"], ["--kernel", "hafnian", "--sizes", "9..2"]])
def test_bench_bad_sizes(args):
    assert main(["bench", *args]) == 2


def test_validate(tmp_path, capsys):
    for path in sorted(CIRCUITS.glob("*.json")):
        assert main(["validate", str(path)]) == 0, path
    bad = write(tmp_path, doc("pure_fock", 1, [{"name": "ThresholdMeasurement"}]))
    assert main(["validate", bad]) == 3
    assert "instruction 0" in capsys.readouterr().out
    assert main(["validate", write(tmp_path, "{not json", "broken.json")]) == 2
    assert main(["validate", str(tmp_path / "missing.json")]) == 2


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(extra=1),
        lambda d: d.update(version="2.0"),
        lambda d: d.update(simulator="tensor"),
        lambda d: d["instructions"].append({"name": "Squeezing", "modes": [0], "params": {"r": 0.1, "q": 1}}),
        lambda d: d["instructions"].append({"name": "Squeezing", "modes": [0], "params": {}}),
        lambda d: d["instructions"].append({"name": "Nope"}),
        lambda d: d["config"].update(shots=0),
    ],
)
def test_schema_violations_exit_2(tmp_path, mutate):
    d = doc("gaussian", 1, [], seed=1)
    mutate(d)
    assert main(["validate", write(tmp_path, d)]) == 2


def test_schema_covers_every_instruction():
    names = circuit_schema()["properties"]["instructions"]["items"]["properties"]["name"]["enum"]
    assert {"Kerr", "Loss", "ThresholdMeasurement", "GaussianTransform"} <= set(names)
