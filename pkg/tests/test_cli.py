import numpy as np
import pytest

from dgcn.cli import main
from dgcn.graph import load_dense, load_features, load_graph, load_labels


def run(*argv):
    return main(["-q", *map(str, argv)])


@pytest.fixture(scope="module")
def sbm_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sbm")
    assert run("gen-sbm", "--n-per-class", 30, "--classes", 2, "--p-in", 0.3, "--p-out", 0.02,
               "--feat-dim", 8, "--seed", 4, "--out", out) == 0
    return out


def data_flags(d):
    return ["--graph", d / "graph.txt", "--features", d / "features.txt", "--labels", d / "labels.txt"]


FAST = ["--per-class", 5, "--val-size", 10, "--hidden", 8, "--max-epochs", 30, "--patience", 10, "--splits", 1,
        "--inits", 1]


# prox -------------------------------------------------------------------------


def test_prox_two_cycle(write, tmp_path):
    g = write("# nodes=2\n0\t1\n1\t0\n")
    assert run("prox", "--graph", g, "--out", tmp_path / "p") == 0
    names = {f.stem for f in (tmp_path / "p").iterdir()}
    assert names == {"a_f", "a_sin", "a_sout", "a_f_raw", "a_sin_raw", "a_sout_raw"}
    a_f = load_graph(tmp_path / "p" / "a_f.txt").adjacency.to_dense()
    np.testing.assert_allclose(a_f, 0.5, atol=1e-15)


def test_prox_eps_drops_small_entries(sbm_dir, tmp_path):
    assert run("prox", "--graph", sbm_dir / "graph.txt", "--out", tmp_path, "--prox-eps", 0.01) == 0
    for name in ("a_f", "a_sin", "a_sout"):
        vals = load_graph(tmp_path / f"{name}.txt").adjacency.values
        assert vals.size and vals.min() >= 0.01


def test_missing_input_is_usage_error(tmp_path):
    assert run("prox", "--graph", tmp_path / "nope.txt", "--out", tmp_path / "o") == 1


def test_bad_flag_is_usage_error():
    with pytest.raises(SystemExit) as e:
        run("train", "--model", "gat")
    assert e.value.code == 1


def test_domain_error_exits_2(write, tmp_path):
    g = write("# nodes=2\n0\t1\t-1.0\n")
    assert run("prox", "--graph", g, "--out", tmp_path / "o") == 2
    assert run("gen-sbm", "--p-in", 1.5, "--out", tmp_path / "s") == 2


def test_artifacts_carry_provenance(sbm_dir):
    for name in ("graph.txt", "features.txt", "labels.txt"):
        head = (sbm_dir / name).read_text().splitlines()[:3]
        assert any(line.startswith("# dgcn version=") and "cmd=gen-sbm" in line and "seed=4" in line
                   for line in head)


# smooth -----------------------------------------------------------------------


def smooth_rows(capsys, *argv):
    capsys.readouterr()
    assert run("smooth", *argv) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "metric\tedges\tvalue"
    return {(m, e): float(v) for m, e, v in (line.split("\t") for line in lines[1:])}


def test_smooth_constant_features_and_labels(write, capsys):
    g = write("# nodes=3\n0\t1\n2\t1\n")
    x = write("# nodes=3 dims=2\n0\t0\t2.0\n1\t0\t2.0\n2\t0\t2.0\n")
    y = write("0\t1\n1\t1\n2\t1\n")
    rows = smooth_rows(capsys, "--graph", g, "--features", x, "--labels", y)
    assert rows[("lambda_f", "1st")] == 0.0 and rows[("lambda_f", "1st&2nd")] == 0.0
    assert rows[("lambda_l", "1st")] == 1.0 and rows[("lambda_l", "1st&2nd")] == 1.0


def test_smooth_sbm_trend(sbm_dir, capsys):
    rows = smooth_rows(capsys, *data_flags(sbm_dir))
    assert rows[("lambda_f", "1st&2nd")] > rows[("lambda_f", "1st")]


def test_smooth_unlabeled_node_fails(write):
    g = write("# nodes=2\n0\t1\n")
    x = write("# nodes=2 dims=1\n0\t0\t1.0\n")
    y = write("0\t0\n")
    assert run("smooth", "--graph", g, "--features", x, "--labels", y) == 2


# train ------------------------------------------------------------------------


def test_train_writes_report_checkpoint_embeddings(sbm_dir, tmp_path):
    out = tmp_path / "t"
    assert run("train", *data_flags(sbm_dir), *FAST, "--emit-embeddings", "--out", out) == 0
    report = (out / "report.tsv").read_text().splitlines()
    assert report[-1].startswith("# mean=")
    rows = [r for r in report if not r.startswith("#")]
    assert len(rows) == 1 and len(rows[0].split("\t")) == 5
    emb = load_dense(out / "embeddings.txt")
    assert emb.shape == (60, 24)
    assert "kind=dgcn" in (out / "checkpoint.txt").read_text()


@pytest.mark.parametrize("flags,expect", [(["--model", "sgc"], "kind=sgc"), (["--layers", 2], "layer=conv1")])
def test_train_model_flags(sbm_dir, tmp_path, flags, expect):
    assert run("train", *data_flags(sbm_dir), *FAST, *flags, "--out", tmp_path) == 0
    assert expect in (tmp_path / "checkpoint.txt").read_text()


def test_train_reports_are_byte_identical(sbm_dir, tmp_path):
    for d in ("a", "b"):
        assert run("train", *data_flags(sbm_dir), *FAST, "--splits", 2, "--seed", 9, "--out", tmp_path / d) == 0
    for name in ("report.tsv", "checkpoint.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_train_default_flags_on_sbm(tmp_path):
    d = tmp_path / "data"
    assert run("gen-sbm", "--out", d, "--seed", 0) == 0
    # 300 nodes cannot host 500 validation nodes
    assert run("train", *data_flags(d), "--val-size", 100, "--splits", 1, "--inits", 1, "--out", tmp_path / "t") == 0
    mean = float((tmp_path / "t" / "report.tsv").read_text().splitlines()[-1].split()[1].split("=")[1])
    assert mean >= 0.95


def test_train_protocol_error_exits_2(sbm_dir, tmp_path):
    assert run("train", *data_flags(sbm_dir), "--per-class", 5, "--out", tmp_path) == 2


# split / evaluate / sweeps ----------------------------------------------------


def test_split_then_evaluate(sbm_dir, tmp_path, capsys):
    out = tmp_path / "t"
    assert run("train", *data_flags(sbm_dir), *FAST, "--out", out) == 0
    split = tmp_path / "split.txt"
    assert run("split", "--graph", sbm_dir / "graph.txt", "--labels", sbm_dir / "labels.txt",
               "--per-class", 5, "--val-size", 10, "--seed", 0, "--out", split) == 0
    capsys.readouterr()
    assert run("evaluate", *data_flags(sbm_dir), "--checkpoint", out / "checkpoint.txt", "--split", split) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [line.split("\t")[:2] for line in lines] == [["train", "10"], ["val", "10"], ["test", "40"]]
    assert all(0.0 <= float(line.split("\t")[2]) <= 1.0 for line in lines)


def table_rows(path):
    lines = [r for r in path.read_text().splitlines() if not r.startswith("#")]
    return lines[0].split("\t"), lines[1:]


def test_sweep_and_depth_tables(sbm_dir, tmp_path):
    short = ["--per-class", 5, "--val-size", 10, "--hidden", 4, "--max-epochs", 5, "--patience", 3, "--splits", 1,
             "--inits", 2]
    assert run("sweep", *data_flags(sbm_dir), *short, "--alphas", "0.5,1", "--betas", "1",
               "--out", tmp_path / "s.tsv") == 0
    header, rows = table_rows(tmp_path / "s.tsv")
    assert header == ["alpha", "beta", "val_acc", "test_acc"] and len(rows) == 2
    assert run("depth", *data_flags(sbm_dir), *short, "--depths", "1,2", "--out", tmp_path / "d.tsv") == 0
    header, rows = table_rows(tmp_path / "d.tsv")
    assert header[0] == "layers" and [r.split("\t")[0] for r in rows] == ["1", "2"]


# gen-sbm ----------------------------------------------------------------------


def test_gen_sbm_degenerate_probabilities(tmp_path):
    assert run("gen-sbm", "--n-per-class", 5, "--classes", 2, "--p-in", 1, "--p-out", 0, "--out", tmp_path) == 0
    a = load_graph(tmp_path / "graph.txt").adjacency.to_dense()
    y = load_labels(tmp_path / "labels.txt", 10).labels
    same = y[:, None] == y[None, :]
    np.testing.assert_array_equal(a, (same & ~np.eye(10, dtype=bool)).astype(float))


def test_gen_sbm_same_seed_same_files(tmp_path):
    for d in ("a", "b"):
        assert run("gen-sbm", "--n-per-class", 20, "--seed", 3, "--out", tmp_path / d) == 0
    for name in ("graph.txt", "features.txt", "labels.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert run("gen-sbm", "--n-per-class", 20, "--seed", 4, "--out", tmp_path / "c") == 0
    assert (tmp_path / "a" / "graph.txt").read_bytes() != (tmp_path / "c" / "graph.txt").read_bytes()


def test_gen_sbm_edge_count_binomial(tmp_path):
    n, k, p_in, p_out = 100, 3, 0.2, 0.02
    assert run("gen-sbm", "--n-per-class", n, "--classes", k, "--p-in", p_in, "--p-out", p_out,
               "--seed", 8, "--out", tmp_path) == 0
    g = load_graph(tmp_path / "graph.txt")
    n_in, n_out = k * n * (n - 1), k * n * (k - 1) * n
    mu = n_in * p_in + n_out * p_out
    sigma = np.sqrt(n_in * p_in * (1 - p_in) + n_out * p_out * (1 - p_out))
    assert abs(g.n_edges - mu) <= 5 * sigma
    x = load_features(tmp_path / "features.txt", g.n_nodes)
    assert x.shape == (300, 16)
