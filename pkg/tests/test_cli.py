from __future__ import annotations

import io
import os

import numpy as np
import pytest

from nearlang.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, main
from nearlang.evaluation import read_eval_report
from synth import separable_corpus

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@pytest.fixture(scope="module")
def corpus_tsv(tmp_path_factory) -> str:
    corpus = separable_corpus(n_per_lang=30, seed=23)
    path = tmp_path_factory.mktemp("data") / "corpus.tsv"
    path.write_text("".join(f"{s.label}\t{s.text}\n" for s in corpus.sentences), encoding="utf-8")
    return str(path)


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory, corpus_tsv) -> str:
    out = tmp_path_factory.mktemp("run")
    code = main(
        [
            "train",
            "--corpus", corpus_tsv,
            "--feature-set", "C1",
            "--seed", "11",
            "--c-grid", "1",
            "--out", str(out),
        ]
    )
    assert code == EXIT_OK
    return str(out)


class TestTrain:
    def test_outputs_exist(self, trained_dir):
        for name in ("model.nlm", "grid_report.tsv", "grid_curve.png", "train.tsv", "test.tsv"):
            assert os.path.exists(os.path.join(trained_dir, name)), name

    def test_grid_report_deterministic(self, tmp_path, corpus_tsv):
        args = ["train", "--corpus", corpus_tsv, "--feature-set", "C1",
                "--seed", "3", "--c-grid", "0.1,1"]
        assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
        assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
        first = (tmp_path / "a" / "grid_report.tsv").read_bytes()
        second = (tmp_path / "b" / "grid_report.tsv").read_bytes()
        assert first == second

    def test_figure_is_png(self, trained_dir):
        blob = open(os.path.join(trained_dir, "grid_curve.png"), "rb").read()
        assert blob.startswith(PNG_MAGIC)

    def test_invalid_feature_set_is_config_error(self, tmp_path, corpus_tsv):
        code = main(["train", "--corpus", corpus_tsv, "--feature-set", "C9", "--out", str(tmp_path)])
        assert code == EXIT_CONFIG

    def test_missing_corpus_is_data_error(self, tmp_path):
        code = main(["train", "--corpus", str(tmp_path / "nope.tsv"), "--out", str(tmp_path)])
        assert code == EXIT_DATA

    def test_no_corpus_is_config_error(self, tmp_path):
        assert main(["train", "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_split_files_are_loadable_corpora(self, trained_dir):
        from nearlang import load_corpus

        train = load_corpus(os.path.join(trained_dir, "train.tsv"))
        test = load_corpus(os.path.join(trained_dir, "test.tsv"))
        assert len(train) == 120 and len(test) == 30  # 5 langs x 30 @ 0.8

    def test_raw_order_escape_hatch(self, tmp_path, corpus_tsv):
        out = tmp_path / "raw"
        code = main(
            ["train", "--corpus", corpus_tsv, "--char-orders", "2", "--word-orders", "1",
             "--c-grid", "1", "--out", str(out)]
        )
        assert code == EXIT_OK
        from nearlang import load_model

        model = load_model(out / "model.nlm")
        assert model.feature_spec.char_orders == frozenset({2})
        assert model.feature_spec.word_orders == frozenset({1})


class TestEvaluate:
    def test_reports(self, tmp_path, trained_dir):
        out = tmp_path / "eval"
        code = main(
            [
                "evaluate",
                "--model", os.path.join(trained_dir, "model.nlm"),
                "--test", os.path.join(trained_dir, "test.tsv"),
                "--out", str(out),
            ]
        )
        assert code == EXIT_OK
        for name in ("metrics.tsv", "confusion.tsv", "errors.tsv", "report.txt", "confusion.png"):
            assert (out / name).exists(), name

        report = read_eval_report(
            (out / "metrics.tsv").read_text(encoding="utf-8"),
            (out / "confusion.tsv").read_text(encoding="utf-8"),
        )
        # separable data: perfect accuracy; confusion row sums = per-label test counts
        assert report.accuracy == 1.0
        assert report.confusion.row_sums().tolist() == [6, 6, 6, 6, 6]
        assert (out / "confusion.png").read_bytes().startswith(PNG_MAGIC)

    def test_unknown_test_label_is_data_error(self, tmp_path, trained_dir):
        stray = tmp_path / "stray.tsv"
        stray.write_text("martian\tzzz zzz\n", encoding="utf-8")
        code = main(
            [
                "evaluate",
                "--model", os.path.join(trained_dir, "model.nlm"),
                "--test", str(stray),
                "--out", str(tmp_path / "o"),
            ]
        )
        assert code == EXIT_DATA

    def test_corrupt_model_is_data_error(self, tmp_path, trained_dir):
        bad = tmp_path / "bad.nlm"
        bad.write_bytes(b"garbage")
        code = main(
            [
                "evaluate",
                "--model", str(bad),
                "--test", os.path.join(trained_dir, "test.tsv"),
                "--out", str(tmp_path / "o2"),
            ]
        )
        assert code == EXIT_DATA


class TestPredict:
    def test_thousand_lines_order_preserved(self, tmp_path, trained_dir, capsys):
        from nearlang import load_corpus

        test = load_corpus(os.path.join(trained_dir, "test.tsv"))
        lines = [test.sentences[i % len(test)].text for i in range(1000)]
        infile = tmp_path / "in.txt"
        # blank and whitespace-only lines interleaved; they must be skipped
        infile.write_text(
            "\n".join(lines[:500]) + "\n\n  \n" + "\n".join(lines[500:]) + "\n", encoding="utf-8"
        )
        code = main(["predict", "--model", os.path.join(trained_dir, "model.nlm"), "--input", str(infile)])
        assert code == EXIT_OK
        out_lines = capsys.readouterr().out.strip().splitlines()
        assert len(out_lines) == 1000
        expected_label = {s.text: s.label for s in test.sentences}
        for sent, out_line in zip(lines, out_lines):
            label, echoed = out_line.split("\t", 1)
            assert echoed == sent
            assert label == expected_label[sent]

    def test_stdin_and_scores(self, trained_dir, capsys, monkeypatch):
        from nearlang import load_corpus

        test = load_corpus(os.path.join(trained_dir, "test.tsv"))
        monkeypatch.setattr("sys.stdin", io.StringIO(test.sentences[0].text + "\n"))
        code = main(["predict", "--model", os.path.join(trained_dir, "model.nlm"), "--scores"])
        assert code == EXIT_OK
        out = capsys.readouterr().out.strip()
        fields = out.split("\t")
        assert len(fields) == 2 + 5  # label, sentence, five class=score fields
        assert all("=" in f for f in fields[2:])

    def test_unreadable_input_is_data_error(self, tmp_path, trained_dir):
        code = main(
            ["predict", "--model", os.path.join(trained_dir, "model.nlm"),
             "--input", str(tmp_path / "missing.txt")]
        )
        assert code == EXIT_DATA


class TestSimilarity:
    def test_overlap_tsv(self, tmp_path, corpus_tsv, capsys):
        out = tmp_path / "sim"
        code = main(["similarity", "--corpus", corpus_tsv, "--sample-size", "30", "--out", str(out)])
        assert code == EXIT_OK
        text = (out / "overlap.tsv").read_text(encoding="utf-8")
        lines = text.splitlines()
        labels = lines[0].split("\t")[1:]
        assert len(labels) == 5
        matrix = np.array([[int(v) for v in line.split("\t")[1:]] for line in lines[1:]])
        assert np.array_equal(matrix, matrix.T)
        assert (out / "overlap.png").read_bytes().startswith(PNG_MAGIC)

    def test_matches_library(self, tmp_path, corpus_tsv):
        from nearlang import SimilarityConfig, load_corpus, overlap_matrix

        out = tmp_path / "sim2"
        main(["similarity", "--corpus", corpus_tsv, "--sample-size", "30", "--seed", "4", "--out", str(out)])
        expected = overlap_matrix(load_corpus(corpus_tsv), SimilarityConfig(sample_size=30, seed=4))
        assert (out / "overlap.tsv").read_text(encoding="utf-8") == expected.to_tsv()


class TestDistance:
    def test_overall_tsv(self, tmp_path, corpus_tsv):
        out = tmp_path / "dist"
        code = main(["distance", "--corpus", corpus_tsv, "--sample-size", "20", "--out", str(out)])
        assert code == EXIT_OK
        text = (out / "distance_overall.tsv").read_text(encoding="utf-8")
        lines = text.splitlines()
        vals = np.array([[float(v) for v in line.split("\t")[1:]] for line in lines[1:]])
        assert np.array_equal(vals, vals.T)
        assert np.all(np.diag(vals) == 0.0)
        assert all(len(cell.split(".")[1]) == 3 for cell in lines[1].split("\t")[1:])

    def test_sampled_comment_line(self, tmp_path, corpus_tsv):
        out = tmp_path / "dist2"
        code = main(
            ["distance", "--corpus", corpus_tsv, "--sample-size", "20",
             "--pair-sample", "500", "--seed", "9", "--out", str(out)]
        )
        assert code == EXIT_OK
        first = (out / "distance_overall.tsv").read_text(encoding="utf-8").splitlines()[0]
        assert first == "# sampled pairs=500 seed=9"

    def test_length_controlled_variant(self, tmp_path, corpus_tsv):
        out = tmp_path / "dist3"
        code = main(
            ["distance", "--corpus", corpus_tsv, "--variant", "length-controlled",
             "--sample-size", "20", "--out", str(out)]
        )
        assert code == EXIT_OK
        assert (out / "distance_length_controlled.tsv").exists()


class TestConfigFile:
    def test_config_keys_used_and_flags_override(self, tmp_path, corpus_tsv):
        conf = tmp_path / "run.conf"
        conf.write_text(
            f"corpus = {corpus_tsv}\n"
            "feature_set = C1\n"
            "seed = 11\n"
            "c_grid = 1\n"
            f"out = {tmp_path / 'from_conf'}\n",
            encoding="utf-8",
        )
        assert main(["train", "--config", str(conf)]) == EXIT_OK
        assert (tmp_path / "from_conf" / "model.nlm").exists()

        # flag overrides the config's out dir
        assert main(["train", "--config", str(conf), "--out", str(tmp_path / "flag_out")]) == EXIT_OK
        assert (tmp_path / "flag_out" / "model.nlm").exists()

    def test_malformed_config_is_config_error(self, tmp_path, corpus_tsv):
        conf = tmp_path / "bad.conf"
        conf.write_text("just some words\n", encoding="utf-8")
        assert main(["train", "--config", str(conf), "--corpus", corpus_tsv]) == EXIT_CONFIG

    def test_threads_env_default(self, tmp_path, corpus_tsv, monkeypatch):
        monkeypatch.setenv("NEARLANG_THREADS", "2")
        out = tmp_path / "thr"
        code = main(["train", "--corpus", corpus_tsv, "--feature-set", "C1",
                     "--c-grid", "1", "--out", str(out)])
        assert code == EXIT_OK

    def test_bad_threads_is_config_error(self, tmp_path, corpus_tsv):
        code = main(["train", "--corpus", corpus_tsv, "--threads", "0", "--out", str(tmp_path)])
        assert code == EXIT_CONFIG


class TestRunConfig:
    def test_feature_set_validated_on_resolution(self, corpus_tsv):
        from nearlang.cli import build_parser, resolve_run_config
        from nearlang import ConfigError

        args = build_parser().parse_args(
            ["train", "--corpus", corpus_tsv, "--feature-set", "nope"]
        )
        with pytest.raises(ConfigError, match="nope"):
            resolve_run_config(args, {})

    def test_flags_win_over_config(self, corpus_tsv):
        from nearlang.cli import build_parser, resolve_run_config

        args = build_parser().parse_args(["train", "--corpus", corpus_tsv, "--seed", "9"])
        rc = resolve_run_config(args, {"seed": "4", "k_folds": "3"})
        assert rc.split.seed == 9  # flag beats config
        assert rc.train.k_folds == 3  # config beats default


class TestSweep:
    def test_sweep_summary(self, tmp_path, corpus_tsv):
        out = tmp_path / "sweep"
        code = main(
            ["sweep", "--corpus", corpus_tsv, "--seed", "2", "--c-grid", "1",
             "--k-folds", "2", "--out", str(out)]
        )
        assert code == EXIT_OK
        lines = (out / "sweep.tsv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "feature_set\tprecision\trecall\tf1\taccuracy\tbest_c"
        assert len(lines) == 1 + 15  # header + every named feature set
        names = [line.split("\t")[0] for line in lines[1:]]
        assert names[:6] == ["C1", "C2", "C3", "W1", "W2", "W3"]
        assert (out / "sweep.png").read_bytes().startswith(PNG_MAGIC)
