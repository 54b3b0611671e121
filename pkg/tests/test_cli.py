import csv

import numpy as np
import pytest

from springlink import evalharness as eh
from springlink.baselines import common_neighbors
from springlink.cli import EVAL_COLUMNS, SWEEP_COLUMNS, main, params_digest
from springlink.graphs import GraphKind, parse_edge_list, with_edges


def write_edges(path, edges):
    path.write_text("".join(f"{a} {b}\n" for a, b in edges))
    return str(path)


def random_connected_edges(n, extra, seed):
    rng = np.random.default_rng(seed)
    edges = {(i, i + 1) for i in range(n - 1)}
    while len(edges) < n - 1 + extra:
        u, v = sorted(rng.integers(0, n, 2))
        if u != v:
            edges.add((int(u), int(v)))
    return [(f"n{u}", f"n{v}") for u, v in sorted(edges)]


@pytest.fixture
def dataset(tmp_path):
    return write_edges(tmp_path / "graph.txt",
                       random_connected_edges(14, 16, seed=0))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------------------
# prepare


def test_prepare_reports_icosphere_size(capsys):
    assert main(["prepare", "--icosphere", "1"]) == 0
    assert capsys.readouterr().out.strip() == "42 nodes, 120 edges"


def test_prepare_keeps_largest_component(tmp_path, capsys):
    src = write_edges(tmp_path / "two.txt",
                      [("a", "b"), ("b", "c"), ("x", "y")])
    out = tmp_path / "lcc.txt"
    assert main(["prepare", "--dataset", src, "--output", str(out)]) == 0
    assert capsys.readouterr().out.strip() == "3 nodes, 2 edges"
    with open(out) as fh:
        g = parse_edge_list(fh, GraphKind.UNDIRECTED)
    assert sorted(g.labels) == ["a", "b", "c"]


def test_prepare_requires_some_input(capsys):
    assert main(["prepare"]) == 1
    assert "dataset" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# embed


def test_embed_output_is_reproducible(tmp_path, dataset):
    out1 = tmp_path / "a" / "layout.txt"
    out2 = tmp_path / "b" / "layout.txt"
    argv = ["embed", "--dataset", dataset, "--seed", "3", "--max-iters", "200"]
    assert main(argv + ["--output", str(out1)]) == 0
    assert main(argv + ["--output", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    header = out1.read_text().splitlines()[0]
    assert header.startswith("# dim=2 seed=3")


def test_embed_directed_with_plain_sfdp_fails_helpfully(tmp_path, capsys):
    src = write_edges(tmp_path / "d.txt", [("a", "b"), ("b", "c"), ("c", "a")])
    code = main(["embed", "--dataset", src, "--kind", "directed",
                 "--output", str(tmp_path / "l.txt")])
    assert code == 1
    assert "di-sfdp" in capsys.readouterr().err


def test_embed_scorer_graph_kind_mismatches(tmp_path, dataset, capsys):
    assert main(["embed", "--dataset", dataset, "--scorer", "bi-sfdp",
                 "--output", str(tmp_path / "l.txt")]) == 1
    assert main(["embed", "--dataset", dataset, "--scorer", "cn",
                 "--output", str(tmp_path / "l.txt")]) == 1
    capsys.readouterr()


# ---------------------------------------------------------------------------
# evaluate


def test_evaluate_appends_csv_rows_reproducibly(tmp_path, dataset):
    out = tmp_path / "results.csv"
    argv = ["evaluate", "--dataset", dataset, "--scorer", "cn",
            "--trials", "3", "--seed", "1", "--out", str(out)]
    assert main(argv) == 0
    assert main(argv) == 0
    rows = read_csv(out)
    assert rows[0] == list(EVAL_COLUMNS)
    assert len(rows) == 3
    assert rows[1] == rows[2]  # identical options reproduce the same row
    row = dict(zip(EVAL_COLUMNS, rows[1]))
    assert row["dataset"] == "graph.txt"
    assert row["scorer"] == "cn"
    assert row["trials"] == "3"
    assert 0.0 <= float(row["mean_auc"]) <= 1.0


def test_evaluate_validates_options(tmp_path, dataset, capsys):
    out = str(tmp_path / "r.csv")
    assert main(["evaluate", "--dataset", dataset, "--fraction", "1.5",
                 "--out", out]) == 1
    assert main(["evaluate", "--dataset", dataset, "--trials", "0",
                 "--out", out]) == 1
    assert main(["evaluate", "--dataset", dataset, "--scorer", "nope",
                 "--out", out]) == 1
    assert main(["evaluate", "--dataset", str(tmp_path / "missing.txt"),
                 "--out", out]) == 1
    capsys.readouterr()


def test_digest_tracks_options_but_not_outdir(tmp_path, dataset):
    out = tmp_path / "r.csv"
    base = ["evaluate", "--dataset", dataset, "--scorer", "cn", "--trials", "1",
            "--out", str(out)]
    assert main(base + ["--outdir", str(tmp_path / "x")]) == 0
    assert main(base + ["--outdir", str(tmp_path / "y")]) == 0
    assert main(base + ["--seed", "9"]) == 0
    rows = read_csv(out)[1:]
    digests = [dict(zip(EVAL_COLUMNS, r))["params_digest"] for r in rows]
    assert digests[0] == digests[1]  # outdir is not part of the digest
    assert digests[2] != digests[0]  # the seed is


def test_params_digest_is_stable_and_short():
    options = {"seed": 0, "dim": 2, "outdir": "/tmp/a"}
    d1 = params_digest(options)
    d2 = params_digest({"seed": 0, "dim": 2, "outdir": "/somewhere/else"})
    assert d1 == d2
    assert len(d1) == 12
    assert params_digest({"seed": 1, "dim": 2, "outdir": "x"}) != d1


# ---------------------------------------------------------------------------
# configuration layering


def test_config_file_overrides_defaults_and_flags_override_config(tmp_path, dataset):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# experiment\nfraction = 0.4\ntrials = 2\nscorer = pa\n")
    out = tmp_path / "r.csv"
    assert main(["evaluate", "--dataset", dataset, "--config", str(cfg),
                 "--out", str(out)]) == 0
    assert main(["evaluate", "--dataset", dataset, "--config", str(cfg),
                 "--fraction", "0.2", "--out", str(out)]) == 0
    rows = [dict(zip(EVAL_COLUMNS, r)) for r in read_csv(out)[1:]]
    assert rows[0]["fraction"] == "0.4" and rows[0]["scorer"] == "pa"
    assert rows[0]["trials"] == "2"
    assert rows[1]["fraction"] == "0.2"  # explicit flag wins


def test_config_file_rejects_unknown_keys(tmp_path, dataset, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("fraction = 0.4\nbogus = 1\n")
    assert main(["evaluate", "--dataset", dataset, "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "bad.cfg:2" in err and "bogus" in err


def test_outdir_env_sets_default_location(tmp_path, dataset, monkeypatch):
    envdir = tmp_path / "fromenv"
    monkeypatch.setenv("SPRINGLINK_OUTDIR", str(envdir))
    assert main(["evaluate", "--dataset", dataset, "--scorer", "cn",
                 "--trials", "1"]) == 0
    assert (envdir / "results.csv").exists()
    # an explicit flag still beats the environment
    flagdir = tmp_path / "fromflag"
    assert main(["evaluate", "--dataset", dataset, "--scorer", "cn",
                 "--trials", "1", "--outdir", str(flagdir)]) == 0
    assert (flagdir / "results.csv").exists()


# ---------------------------------------------------------------------------
# sweep


def test_sweep_writes_a_row_per_value(tmp_path, dataset):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--dataset", dataset, "--scorer", "cn",
                 "--axis", "dim", "--values", "2,3", "--trials", "1",
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == list(SWEEP_COLUMNS)
    assert [r[1] for r in rows[1:]] == ["2", "3"]
    assert all(r[-1] == "ok" for r in rows[1:])


def test_sweep_records_failures_and_continues(tmp_path, dataset, capsys):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--dataset", dataset, "--scorer", "cn",
                 "--axis", "dim", "--values", "2,0", "--trials", "1",
                 "--out", str(out)])
    assert code == 2
    rows = read_csv(out)[1:]
    status = {r[1]: r[-1] for r in rows}
    assert status["2"] == "ok"
    assert status["0"].startswith("error:")
    capsys.readouterr()


def test_sweep_rejects_empty_values_and_bad_axis(tmp_path, dataset, capsys):
    assert main(["sweep", "--dataset", dataset, "--axis", "dim",
                 "--values", " , "]) == 1
    assert main(["sweep", "--dataset", dataset, "--axis", "K",
                 "--values", "1,2"]) == 1
    assert main(["sweep", "--dataset", dataset, "--axis", "dim",
                 "--values", "2,huge"]) == 1
    capsys.readouterr()


# ---------------------------------------------------------------------------
# split export and external scores


def test_split_command_writes_the_four_files(tmp_path, dataset, capsys):
    assert main(["split", "--dataset", dataset, "--seed", "4",
                 "--outdir", str(tmp_path), "--prefix", "t4"]) == 0
    for suffix in ("manifest.json", "train.edges", "pos.pairs", "neg.pairs"):
        assert (tmp_path / f"t4.{suffix}").exists()
    assert "t4" in capsys.readouterr().out


def test_external_scores_reproduce_direct_scorer(tmp_path, dataset):
    # export the exact split evaluate will regenerate for seed 7 / 1 trial
    assert main(["split", "--dataset", dataset, "--seed", "7",
                 "--fraction", "0.3", "--outdir", str(tmp_path)]) == 0
    with open(dataset) as fh:
        g = parse_edge_list(fh, GraphKind.UNDIRECTED)
    split = eh.load_split(str(tmp_path / "split.manifest.json"), g)
    train = with_edges(g, split.train_edges)
    score_path = tmp_path / "cn.scores"
    with open(score_path, "w") as fh:
        for u, v in (*split.positives, *split.negatives):
            fh.write(f"{g.labels[u]} {g.labels[v]} "
                     f"{common_neighbors(train, u, v)}\n")

    out = tmp_path / "r.csv"
    common = ["--dataset", dataset, "--fraction", "0.3", "--trials", "1",
              "--seed", "7", "--out", str(out)]
    assert main(["evaluate", "--scorer", "external-file",
                 "--scores", str(score_path)] + common) == 0
    assert main(["evaluate", "--scorer", "cn"] + common) == 0
    rows = [dict(zip(EVAL_COLUMNS, r)) for r in read_csv(out)[1:]]
    assert rows[0]["mean_auc"] == rows[1]["mean_auc"]


def test_external_scorer_missing_pair_is_a_runtime_failure(tmp_path, dataset, capsys):
    assert main(["split", "--dataset", dataset, "--seed", "7",
                 "--outdir", str(tmp_path)]) == 0
    with open(dataset) as fh:
        g = parse_edge_list(fh, GraphKind.UNDIRECTED)
    split = eh.load_split(str(tmp_path / "split.manifest.json"), g)
    score_path = tmp_path / "partial.scores"
    pairs = [*split.positives, *split.negatives][:-1]  # drop one pair
    with open(score_path, "w") as fh:
        for u, v in pairs:
            fh.write(f"{g.labels[u]} {g.labels[v]} 0.5\n")
    code = main(["evaluate", "--scorer", "external-file", "--scores",
                 str(score_path), "--dataset", dataset, "--trials", "1",
                 "--seed", "7", "--out", str(tmp_path / "r.csv")])
    assert code == 2
    assert "score" in capsys.readouterr().err.lower()
