import json

import numpy as np
import pytest

from conftest import make_dataset
from ebfreq import io
from ebfreq.cli import main
from ebfreq.data import DataError
from ebfreq.estimate import estimate_arrays
from ebfreq.priors import EB1Prior
from ebfreq.simulate import SimConfig, simulate_dataset


def write(path, text):
    path.write_text(text)
    return path


COUNTS_HEAD = "#ebfreq-counts\tformat_version=1\nid\ttarget.x\ttarget.n\tb.x\tb.n\n"


# --- orientation --------------------------------------------------------------


def test_orient_examples():
    r = io.orient("m", "C", "T", [(10, 20), (5, 5)])
    assert (r.target.successes, r.target.trials) == (10, 30)
    r = io.orient("m", "G", "A", [(10, 20)])
    assert (r.target.successes, r.target.trials) == (20, 30)
    with pytest.raises(DataError, match="both alleles"):
        io.orient("m", "T", "T", [(1, 1)])
    with pytest.raises(DataError, match="unknown allele"):
        io.orient("m", "A", "N", [(1, 1)])


def test_read_raw(tmp_path):
    p = write(tmp_path / "raw.tsv", "#ebfreq-raw\tformat_version=1\n"
              "id\tallele1\tallele2\ttarget.1\ttarget.2\tceu.1\tceu.2\n"
              "rs1\tT\tC\t20\t10\t4\t6\nrs2\tA\tG\t3\t9\t8\t0\n")
    data = io.read_raw(p)
    assert list(data.y) == [10, 3] and list(data.n_y) == [30, 12]
    assert list(data.x[:, 0]) == [6, 8] and data.sample_names == ("target", "ceu")


# --- counts tables ------------------------------------------------------------


def test_golden_file(golden_path):
    data = io.read_dataset(golden_path)
    assert data.ids == ("rs1001", "rs1002", "rs1003")
    assert list(data.y) == [10, 0, 30] and list(data.n_y) == [30, 30, 30]
    assert list(data.x[:, 0]) == [31, 2, 90] and list(data.n_x[:, 0]) == [90, 88, 90]
    assert data.K == 1


def test_round_trip(tmp_path, golden_path):
    data = io.read_dataset(golden_path)
    out = tmp_path / "copy.tsv"
    io.write_dataset(data, out)
    assert out.read_bytes() == open(golden_path, "rb").read()
    again = io.read_dataset(out)
    assert again.content_hash() == data.content_hash()


@pytest.mark.parametrize(
    "body, where, message",
    [
        ("m1\t31\t30\t1\t2\n", ":3:2", "exceed"),
        ("m1\t3\t30\t1\n", ":3:", "expected 5 columns"),
        ("m1\t3\t30\t1\t2\nm1\t3\t30\t1\t2\n", ":4:1", "duplicate"),
        ("m1\t3\tx\t1\t2\n", ":3:3", "not an integer"),
        ("m1\t3\t30\t\t2\n", ":3:4", "missing"),
        ("m1\t3\t30\t-1\t2\n", ":3:4", "negative"),
        ("m1\t0\t0\t1\t2\n", ":3:3", "zero trials"),
    ],
)
def test_read_errors_name_line_and_column(tmp_path, body, where, message):
    p = write(tmp_path / "bad.tsv", COUNTS_HEAD + body)
    with pytest.raises(io.FormatError, match=message) as err:
        io.read_dataset(p)
    assert where in str(err.value)


def test_read_rejects_missing_version_and_bad_header(tmp_path):
    with pytest.raises(io.FormatError, match=":1:1"):
        io.read_dataset(write(tmp_path / "a.tsv", "id\ttarget.x\ttarget.n\n"))
    with pytest.raises(io.FormatError, match="expected column"):
        io.read_dataset(write(tmp_path / "b.tsv", "#ebfreq-counts\tformat_version=1\nid\tt.x\tt.count\n"))
    with pytest.raises(io.FormatError, match="format_version"):
        io.read_dataset(write(tmp_path / "c.tsv", "#ebfreq-counts\tformat_version=7\n"))


def test_estimate_table_round_trip_is_exact(tmp_path):
    data = make_dataset([3, 0, 29], [30, 30, 30], [40, 0, 90], [90, 90, 90])
    cols = estimate_arrays(EB1Prior(0.0816021636769281, (25.07491281563155,)), data)
    io.write_estimates(cols, tmp_path / "e.tsv")
    back = io.read_estimates(tmp_path / "e.tsv")
    for key in cols:
        assert list(back[key]) == list(cols[key])


def test_truth_and_model_files(tmp_path):
    data, truth = simulate_dataset(SimConfig(n_markers=50, seed=3))
    io.write_truth(truth, tmp_path / "t.tsv")
    back = io.read_truth(tmp_path / "t.tsv")
    assert [back[i] for i in truth.ids] == list(truth.q)
    model = EB1Prior(0.1 + 1e-17, (1 / 3,))
    io.save_model(model, tmp_path / "m.json", {"dataset_sha256": data.content_hash()})
    assert io.load_model(tmp_path / "m.json") == model
    write(tmp_path / "broken.json", "{not json")
    with pytest.raises(io.FormatError):
        io.load_model(tmp_path / "broken.json")


# --- command line -------------------------------------------------------------


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_identical_pipeline_recovers_nominal_size(tmp_path, capsys):
    d = tmp_path / "d.tsv"
    code, _, _ = run(["simulate", "--mode", "identical", "--n-x", 60, "--n-y", 60, "--n-markers", 30000,
                      "--seed", 8, "--output", d], capsys)
    assert code == 0
    code, out, _ = run(["fit", "--model", "eb1", "--input", d, "--output-model", tmp_path / "m.json"], capsys)
    assert code == 0 and "converged" in out
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["coefficients"]["betas"][0] == pytest.approx(60, rel=0.08)
    assert doc["fit"]["dataset_sha256"] == io.read_dataset(d).content_hash()


def test_cli_evaluate_perfect_estimates(tmp_path, capsys):
    d, t, e, m = (tmp_path / n for n in ("d.tsv", "t.tsv", "e.tsv", "m.json"))
    run(["simulate", "--n-markers", 300, "--seed", 1, "--output", d, "--truth-out", t], capsys)
    run(["fit", "--input", d, "--output-model", m], capsys)
    run(["estimate", "--model-file", m, "--input", d, "--output", e], capsys)
    truth = io.read_truth(t)
    cols = io.read_estimates(e)
    cols["q_eb"] = np.array([truth[i] for i in cols["id"]])
    io.write_estimates(cols, e)
    code, out, _ = run(["evaluate", "--estimates", e, "--truth", t, "--output", tmp_path / "r.tsv"], capsys)
    assert code == 0
    row = next(line.split() for line in out.splitlines() if line.startswith("q_eb"))
    assert float(row[3]) == 0.0
    assert (tmp_path / "r.tsv").read_text().startswith("#ebfreq-eval\tformat_version=1")


def test_cli_simulate_is_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        run(["simulate", "--n-markers", 500, "--seed", 42, "--output", tmp_path / f"{name}.tsv",
             "--truth-out", tmp_path / f"{name}.truth"], capsys)
    assert (tmp_path / "a.tsv").read_bytes() == (tmp_path / "b.tsv").read_bytes()
    assert (tmp_path / "a.truth").read_bytes() == (tmp_path / "b.truth").read_bytes()


def test_cli_split_and_orient(tmp_path, capsys, golden_path):
    code, _, _ = run(["split", "--input", golden_path, "--fraction", 0.5, "--seed", 3,
                      "--out-a", tmp_path / "a.tsv", "--out-b", tmp_path / "b.tsv", "--strip-boosters"], capsys)
    assert code == 0
    a, b = io.read_dataset(tmp_path / "a.tsv"), io.read_dataset(tmp_path / "b.tsv")
    assert a.K == 0 and list(a.y + b.y) == [10, 0, 30]
    raw = write(tmp_path / "raw.tsv", "#ebfreq-raw\tformat_version=1\nid\tallele1\tallele2\tt.1\tt.2\nr\tG\tA\t1\t3\n")
    assert run(["orient", "--input-raw", raw, "--output", tmp_path / "o.tsv"], capsys)[0] == 0
    assert list(io.read_dataset(tmp_path / "o.tsv").y) == [3]


def test_cli_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["fit", "--bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["evaluate", "--estimates", "x", "--truth", "t", "--validation", "v"])
    assert exc.value.code == 2


def test_cli_data_errors_exit_1_with_one_line(tmp_path, capsys):
    bad = write(tmp_path / "bad.tsv", COUNTS_HEAD + "m1\t31\t30\t1\t2\n")
    code, _, err = run(["fit", "--input", bad, "--output-model", tmp_path / "m.json"], capsys)
    assert code == 1
    assert err.count("\n") == 1 and err.startswith("error[format]: ") and "bad.tsv:3:2" in err
    code, _, err = run(["estimate", "--model-file", tmp_path / "none.json", "--input", bad, "--output", "x"], capsys)
    assert code == 1 and err.startswith("error[io]: ")
