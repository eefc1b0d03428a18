"""End-to-end command-line tests driven through an in-process ``main()``."""

import csv
import hashlib
import json

import pytest

from cfspan.cli import (
    EXIT_INPUT,
    EXIT_OK,
    EXIT_USAGE,
    Settings,
    load_config_file,
    main,
)

from synthetic_grammar import task2_corpus

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _task1_csv(path, rows):
    return _write_csv(path, ["sentenceID", "sentence", "gold_label"], rows)


def _task2_csv(path, rows):
    header = [
        "sentenceID",
        "sentence",
        "antecedent_startid",
        "antecedent_endid",
        "consequent_startid",
        "consequent_endid",
    ]
    return _write_csv(path, header, rows)


def _read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.reader(fh))


def _grammar_rows(n, seed=5):
    return [
        (
            r.sentence_id,
            r.text,
            r.antecedent_start,
            r.antecedent_end,
            r.consequent_start,
            r.consequent_end,
        )
        for r in task2_corpus(n, seed=seed)
    ]


def _detection_rows(n=10):
    rows = []
    for i in range(n):
        if i % 2 == 0:
            rows.append((f"s{i}", f"if it had worked we would have shipped {i}", 1))
        else:
            rows.append((f"s{i}", f"the release went out on time {i}", 0))
    return rows


class TestConvert:
    def test_writes_tags_and_quarantines_bad_rows(self, tmp_path, capsys):
        rows = _grammar_rows(4)
        # Well-formed indexes but overlapping spans: survives loading,
        # rejected at encode time.
        rows.append(("bad-overlap", "abcdefghij klmnop qrstu", 0, 15, 10, 22))
        # Inverted span: rejected at load time.
        rows.append(("bad-inverted", "whatever here", 5, 2, -1, -1))
        gold = _task2_csv(tmp_path / "gold.csv", rows)
        out = tmp_path / "train.tags"

        assert main(["convert", "--input", str(gold), "--output", str(out)]) == EXIT_OK
        captured = capsys.readouterr()
        assert "wrote 4 sentences" in captured.out
        assert "quarantined 2 records" in captured.out

        blocks = out.read_text(encoding="utf-8").split("\n\n")
        assert len([b for b in blocks if b.strip()]) == 4
        first = blocks[0].splitlines()
        assert all(len(line.split("\t")) == 2 for line in first)

        rejects = _read_csv(tmp_path / "train.tags.rejects.csv")
        assert rejects[0] == ["sentenceID", "code", "message"]
        assert {(r[0], r[1]) for r in rejects[1:]} == {
            ("bad-overlap", "overlap"),
            ("bad-inverted", "inverted"),
        }

    def test_include_pos_requires_pos_file(self, tmp_path, capsys):
        gold = _task2_csv(tmp_path / "gold.csv", _grammar_rows(2))
        code = main(
            ["convert", "--input", str(gold), "--output", str(tmp_path / "o"), "--include-pos"]
        )
        assert code == EXIT_USAGE
        assert "--pos-file" in capsys.readouterr().err

    def test_pos_column_is_carried_through(self, tmp_path):
        gold = _task2_csv(tmp_path / "gold.csv", [("p1", "He ran.", 0, 5, -1, -1)])
        pos = tmp_path / "gold.pos"
        pos.write_text("He\tPRP\nran\tVBD\n.\t.\n", encoding="utf-8")
        out = tmp_path / "with_pos.tags"

        code = main(
            [
                "convert",
                "--input",
                str(gold),
                "--output",
                str(out),
                "--include-pos",
                "--pos-file",
                str(pos),
            ]
        )
        assert code == EXIT_OK
        assert out.read_text(encoding="utf-8") == "He\tante\tPRP\nran\tante\tVBD\n.\t0\t.\n"

    def test_misaligned_pos_blocks_fail(self, tmp_path, capsys):
        gold = _task2_csv(tmp_path / "gold.csv", [("p1", "He ran.", 0, 5, -1, -1)])
        pos = tmp_path / "gold.pos"
        pos.write_text("She\tPRP\nran\tVBD\n.\t.\n", encoding="utf-8")
        code = main(
            [
                "convert",
                "--input",
                str(gold),
                "--output",
                str(tmp_path / "o"),
                "--include-pos",
                "--pos-file",
                str(pos),
            ]
        )
        assert code == EXIT_INPUT
        assert "do not match" in capsys.readouterr().err


class TestSplit:
    def test_counts_follow_holdout_fraction(self, tmp_path):
        rows = [(f"n{i}", f"negative sentence {i}", 0) for i in range(30)]
        rows += [(f"p{i}", f"if only positive {i} would have", 1) for i in range(10)]
        gold = _task1_csv(tmp_path / "all.csv", rows)
        train, valid = tmp_path / "train.csv", tmp_path / "valid.csv"

        code = main(
            [
                "split",
                "--input",
                str(gold),
                "--holdout",
                "0.2",
                "--train-output",
                str(train),
                "--validation-output",
                str(valid),
            ]
        )
        assert code == EXIT_OK
        valid_rows = _read_csv(valid)[1:]
        assert len(valid_rows) == 8
        assert sum(1 for r in valid_rows if r[2] == "1") == 2
        assert len(_read_csv(train)[1:]) == 32

    def test_same_seed_reproduces_bytes(self, tmp_path):
        gold = _task1_csv(tmp_path / "all.csv", _detection_rows(20))
        outputs = []
        for run in ("a", "b"):
            train = tmp_path / f"train_{run}.csv"
            valid = tmp_path / f"valid_{run}.csv"
            args = [
                "split",
                "--input",
                str(gold),
                "--holdout",
                "0.25",
                "--seed",
                "9",
                "--train-output",
                str(train),
                "--validation-output",
                str(valid),
            ]
            assert main(args) == EXIT_OK
            outputs.append((train.read_bytes(), valid.read_bytes()))
        assert outputs[0] == outputs[1]


class TestStats:
    def test_prints_both_imbalance_views(self, tmp_path, capsys):
        rows = [(f"p{i}", f"pos {i}", 1) for i in range(3)]
        rows += [(f"n{i}", f"neg {i}", 0) for i in range(5)]
        gold = _task1_csv(tmp_path / "all.csv", rows)

        assert main(["stats", "--input", str(gold)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "37.5%" in out  # positives over total
        assert "60.0%" in out  # positives over negatives
        assert "positive_fraction=0.375" in out

    def test_output_stem_writes_reports_and_figure(self, tmp_path, capsys):
        gold = _task1_csv(tmp_path / "all.csv", _detection_rows(8))
        stem = tmp_path / "profile"
        assert main(["stats", "--input", str(gold), "--output", str(stem)]) == EXIT_OK
        capsys.readouterr()

        table = (tmp_path / "profile.txt").read_text(encoding="utf-8")
        assert table.splitlines()[0].startswith("Total")
        assert "over_length_count=0" in (tmp_path / "profile.kv").read_text(encoding="utf-8")
        assert (tmp_path / "profile.png").read_bytes()[:8] == PNG_MAGIC

        manifest = json.loads((tmp_path / "profile.manifest.json").read_text(encoding="utf-8"))
        assert manifest["tool"] == "cfspan"
        assert manifest["command"] == "stats"
        assert manifest["inputs"][str(gold)] == hashlib.sha256(gold.read_bytes()).hexdigest()
        assert str(tmp_path / "profile.png") in manifest["outputs"]

    def test_no_figures_skips_png(self, tmp_path, capsys):
        gold = _task1_csv(tmp_path / "all.csv", _detection_rows(4))
        stem = tmp_path / "profile"
        code = main(["stats", "--input", str(gold), "--output", str(stem), "--no-figures"])
        assert code == EXIT_OK
        capsys.readouterr()
        assert not (tmp_path / "profile.png").exists()
        assert (tmp_path / "profile.kv").exists()


class TestClean:
    def test_rewrites_text_and_drops_emptied_rows(self, tmp_path, capsys):
        rows = [
            ("c1", "#hope it's fine!", 1),
            ("c2", "###", 0),
            ("c3", "already plain", 0),
        ]
        gold = _task1_csv(tmp_path / "raw.csv", rows)
        out = tmp_path / "clean.csv"
        code = main(
            [
                "clean",
                "--input",
                str(gold),
                "--output",
                str(out),
                "--strip-punctuation",
                "--strip-hashtags",
            ]
        )
        assert code == EXIT_OK
        captured = capsys.readouterr()
        assert "cleaned 2 records" in captured.out
        assert "dropped 1 records" in captured.out
        cleaned = _read_csv(out)
        assert cleaned[1] == ["c1", "hope its fine", "1"]
        assert cleaned[2] == ["c3", "already plain", "0"]

    def test_refuses_extraction_data(self, tmp_path, capsys):
        gold = _task1_csv(tmp_path / "raw.csv", _detection_rows(2))
        code = main(
            ["clean", "--input", str(gold), "--output", str(tmp_path / "o.csv"), "--task", "2"]
        )
        assert code == EXIT_USAGE
        assert "gold span indexes" in capsys.readouterr().err


class TestAugment:
    def test_dedup_merge_and_report(self, tmp_path, capsys):
        base = _task1_csv(
            tmp_path / "base.csv",
            [("b1", "We won the game", 1), ("b2", "Nothing happened", 0)],
        )
        extra = _task1_csv(
            tmp_path / "extra.csv",
            [("a1", "we won the GAME!", 1), ("a2", "totally new sentence", 0)],
        )
        out = tmp_path / "merged.csv"
        code = main(
            ["augment", "--base", str(base), "--augmented", str(extra), "--output", str(out)]
        )
        assert code == EXIT_OK
        assert len(_read_csv(out)[1:]) == 3
        report = (tmp_path / "merged.csv.report.kv").read_text(encoding="utf-8")
        assert report == "added=1\nduplicates_skipped=1\nadded_label_0=1\n"


class TestConfigFile:
    def test_flag_beats_config_beats_default(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# training knobs\nepochs=7\nseed=11\nlearning-rate=0.2\n", encoding="utf-8"
        )
        gold = _task1_csv(tmp_path / "all.csv", _detection_rows(8))
        model = tmp_path / "model.json"
        code = main(
            [
                "train-detector",
                "--input",
                str(gold),
                "--output",
                str(model),
                "--config",
                str(cfg),
                "--epochs",
                "2",
            ]
        )
        assert code == EXIT_OK
        manifest = json.loads((tmp_path / "model.json.manifest.json").read_text(encoding="utf-8"))
        params = manifest["parameters"]
        assert params["epochs"] == 2  # flag wins
        assert params["seed"] == 11  # config file wins over the default
        assert params["learning_rate"] == 0.2
        assert params["batch_size"] == 32  # untouched default

    def test_malformed_config_line_is_a_usage_error(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("epochs\n", encoding="utf-8")
        gold = _task1_csv(tmp_path / "all.csv", _detection_rows(4))
        code = main(
            [
                "train-detector",
                "--input",
                str(gold),
                "--output",
                str(tmp_path / "m.json"),
                "--config",
                str(cfg),
            ]
        )
        assert code == EXIT_USAGE
        assert "expected key=value" in capsys.readouterr().err

    def test_loader_normalises_keys(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("max-length=64\n\n# comment\nbatch_size=8\n", encoding="utf-8")
        assert load_config_file(cfg) == {"max_length": "64", "batch_size": "8"}


class TestDetectionPipeline:
    def test_train_predict_eval_round_trip(self, tmp_path, capsys):
        gold = _task1_csv(tmp_path / "all.csv", _detection_rows(12))
        model = tmp_path / "model.json"
        preds = tmp_path / "preds.csv"

        assert main(["train-detector", "--input", str(gold), "--output", str(model)]) == EXIT_OK
        assert main(
            ["predict", "--model", str(model), "--input", str(gold), "--output", str(preds)]
        ) == EXIT_OK
        pred_rows = _read_csv(preds)
        assert pred_rows[0] == ["sentenceID", "pred_label", "score"]
        assert len(pred_rows) == 13
        capsys.readouterr()

        code = main(["eval", "--gold", str(gold), "--pred", str(preds), "--task", "1"])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert out.splitlines()[0].split() == ["F1", "Recall", "Precision", "Support"]
        assert "f1=1.0" in out
        assert "support=6" in out

    def test_eval_output_stem_writes_reports(self, tmp_path, capsys):
        gold = _task1_csv(tmp_path / "all.csv", _detection_rows(6))
        preds = _write_csv(
            tmp_path / "preds.csv",
            ["sentenceID", "pred_label"],
            [(r[0], r[2]) for r in _detection_rows(6)],
        )
        stem = tmp_path / "scores"
        code = main(
            [
                "eval",
                "--gold",
                str(gold),
                "--pred",
                str(preds),
                "--output",
                str(stem),
                "--no-figures",
            ]
        )
        assert code == EXIT_OK
        capsys.readouterr()
        assert "f1=1.0" in (tmp_path / "scores.kv").read_text(encoding="utf-8")
        manifest = json.loads((tmp_path / "scores.manifest.json").read_text(encoding="utf-8"))
        assert manifest["command"] == "eval"
        assert set(manifest["inputs"]) == {str(gold), str(preds)}

    def test_missing_prediction_rows_fail_eval(self, tmp_path, capsys):
        gold = _task1_csv(tmp_path / "all.csv", _detection_rows(4))
        preds = _write_csv(
            tmp_path / "preds.csv", ["sentenceID", "pred_label"], [("s0", 1), ("s1", 0)]
        )
        code = main(["eval", "--gold", str(gold), "--pred", str(preds)])
        assert code == EXIT_INPUT
        assert "no detection prediction" in capsys.readouterr().err


class TestSpanPipeline:
    def test_gold_tags_decode_back_to_perfect_scores(self, tmp_path, capsys):
        gold = _task2_csv(tmp_path / "gold.csv", _grammar_rows(20))
        tags = tmp_path / "gold.tags"
        decoded = tmp_path / "decoded.csv"

        assert main(["convert", "--input", str(gold), "--output", str(tags)]) == EXIT_OK
        assert main(
            [
                "decode",
                "--input",
                str(tags),
                "--sentences",
                str(gold),
                "--output",
                str(decoded),
            ]
        ) == EXIT_OK
        capsys.readouterr()

        code = main(["eval", "--task", "2", "--gold", str(gold), "--pred", str(decoded)])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "f1=1.0" in out
        assert "exact_match_rate=1.0" in out

    def test_zero_token_sentence_is_an_input_error(self, tmp_path, capsys):
        tags = tmp_path / "train.tags"
        tags.write_text("If\tante\nhe\tante\nran\tcons\n", encoding="utf-8")
        model = tmp_path / "tagger.json"
        assert main(["train-tagger", "--input", str(tags), "--output", str(model)]) == EXIT_OK
        capsys.readouterr()

        sentences = _write_csv(
            tmp_path / "sents.csv", ["sentenceID", "sentence"], [("s0", "   ")]
        )
        code = main(
            ["predict", "--model", str(model), "--input", str(sentences), "--output", str(tmp_path / "o")]
        )
        assert code == EXIT_INPUT
        assert "zero tokens" in capsys.readouterr().err


class TestDecodeFixture:
    @pytest.fixture()
    def expected(self, datadir):
        return json.loads((datadir / "external_tags_expected.json").read_text(encoding="utf-8"))

    def _decode(self, tmp_path, datadir, expected, extra_args):
        sentences = _write_csv(
            tmp_path / "sents.csv", ["sentenceID", "sentence"], [("104975", expected["sentence"])]
        )
        out = tmp_path / "decoded.csv"
        args = [
            "decode",
            "--input",
            str(datadir / "external_tags.txt"),
            "--sentences",
            str(sentences),
            "--output",
            str(out),
        ] + extra_args
        assert main(args) == EXIT_OK
        row = _read_csv(out)[1]
        assert row[0] == "104975"
        return [int(v) for v in row[1:]]

    def test_default_policy_bridges_single_gaps(self, tmp_path, datadir, expected, capsys):
        want = expected["decoded"]["bridge_gap_1"]
        assert self._decode(tmp_path, datadir, expected, []) == (
            want["antecedent"] + want["consequent"]
        )
        text = expected["sentence"]
        assert text[want["antecedent"][0] : want["antecedent"][1] + 1] == want["antecedent_text"]
        assert text[want["consequent"][0] : want["consequent"][1] + 1] == want["consequent_text"]

    def test_gap_zero_keeps_longest_runs_only(self, tmp_path, datadir, expected, capsys):
        want = expected["decoded"]["bridge_gap_0"]
        got = self._decode(tmp_path, datadir, expected, ["--max-bridge-gap", "0"])
        assert got == want["antecedent"] + want["consequent"]

    def test_piece_rows_are_merged_per_token(self, tmp_path, capsys):
        # Rows split below the token level: "abc" arrives as a/b/c and "xy"
        # stays whole.  first_piece keeps the a tag; majority outvotes it.
        tags = tmp_path / "pieces.tags"
        tags.write_text("a\tante\nb\t0\nc\t0\nxy\tcons\n", encoding="utf-8")
        sentences = _write_csv(
            tmp_path / "sents.csv", ["sentenceID", "sentence"], [("s0", "abc xy")]
        )

        out_first = tmp_path / "first.csv"
        assert main(
            [
                "decode",
                "--input",
                str(tags),
                "--sentences",
                str(sentences),
                "--output",
                str(out_first),
            ]
        ) == EXIT_OK
        assert _read_csv(out_first)[1] == ["s0", "0", "2", "4", "5"]

        out_majority = tmp_path / "majority.csv"
        assert main(
            [
                "decode",
                "--input",
                str(tags),
                "--sentences",
                str(sentences),
                "--output",
                str(out_majority),
                "--merge-strategy",
                "majority",
            ]
        ) == EXIT_OK
        assert _read_csv(out_majority)[1] == ["s0", "-1", "-1", "4", "5"]

    def test_unalignable_rows_fail(self, tmp_path, capsys):
        tags = tmp_path / "pieces.tags"
        tags.write_text("ab\tante\nzz\t0\n", encoding="utf-8")
        sentences = _write_csv(
            tmp_path / "sents.csv", ["sentenceID", "sentence"], [("s0", "abc xy")]
        )
        code = main(
            [
                "decode",
                "--input",
                str(tags),
                "--sentences",
                str(sentences),
                "--output",
                str(tmp_path / "o.csv"),
            ]
        )
        assert code == EXIT_INPUT
        assert "does not align" in capsys.readouterr().err


class TestEnsembleCli:
    def _pred_csv(self, path, rows):
        return _write_csv(path, ["sentenceID", "pred_label", "score"], rows)

    def test_majority_vote_with_mean_scores(self, tmp_path, capsys):
        inputs = [
            self._pred_csv(tmp_path / "m1.csv", [("1", 1, 0.75), ("2", 0, 0.25)]),
            self._pred_csv(tmp_path / "m2.csv", [("1", 1, 0.5), ("2", 0, 0.0)]),
            self._pred_csv(tmp_path / "m3.csv", [("1", 0, 1.0), ("2", 1, 0.5)]),
        ]
        out = tmp_path / "vote.csv"
        args = ["ensemble", "--output", str(out)]
        for path in inputs:
            args += ["--input", str(path)]
        assert main(args) == EXIT_OK
        assert "combined 3 prediction sets" in capsys.readouterr().out
        assert _read_csv(out)[1:] == [["1", "1", "0.75"], ["2", "0", "0.25"]]

    def test_tie_policy_flag(self, tmp_path, capsys):
        inputs = [
            self._pred_csv(tmp_path / "m1.csv", [("1", 0, 0.4)]),
            self._pred_csv(tmp_path / "m2.csv", [("1", 1, 0.9)]),
        ]
        out = tmp_path / "vote.csv"
        args = ["ensemble", "--output", str(out), "--tie-policy", "positive"]
        for path in inputs:
            args += ["--input", str(path)]
        assert main(args) == EXIT_OK
        capsys.readouterr()
        assert _read_csv(out)[1][1] == "1"


class TestExitCodes:
    def test_no_subcommand_is_usage(self, capsys):
        assert main([]) == EXIT_USAGE
        assert "subcommand is required" in capsys.readouterr().err

    def test_unknown_flag_is_usage(self, capsys):
        assert main(["stats", "--nope"]) == EXIT_USAGE
        capsys.readouterr()

    def test_missing_input_file_is_input_error(self, tmp_path, capsys):
        assert main(["stats", "--input", str(tmp_path / "absent.csv")]) == EXIT_INPUT
        capsys.readouterr()

    def test_wrong_header_is_input_error(self, tmp_path, capsys):
        bad = _write_csv(tmp_path / "bad.csv", ["id", "text"], [("1", "x")])
        assert main(["stats", "--input", str(bad)]) == EXIT_INPUT
        assert "expected header" in capsys.readouterr().err


class TestSettings:
    def test_resolution_order_is_recorded(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("holdout=0.3\n", encoding="utf-8")
        import argparse

        args = argparse.Namespace(config=str(cfg), holdout=None, seed=4)
        settings = Settings(args)
        assert settings.get("holdout", 0.05, float) == 0.3
        assert settings.get("seed", 2020, int) == 4
        assert settings.get("task", 1, int) == 1
        assert settings.resolved == {"holdout": 0.3, "seed": 4, "task": 1}
