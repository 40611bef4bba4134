import json
from pathlib import Path

import pytest

from ontosearch.cli import main

FIG = Path(__file__).parent / "data" / "asthenia"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def ontology_args():
    return [
        "--concepts", str(FIG / "concepts.tsv"),
        "--labels", str(FIG / "labels.tsv"),
        "--relations", str(FIG / "relations.tsv"),
    ]


@pytest.fixture
def built_index(tmp_path, capsys):
    """triplets -> train -> index (vector + bm25) on the asthenia fixture."""
    trip_dir = tmp_path / "triplets"
    model = tmp_path / "model.npz"
    index_dir = tmp_path / "index"
    assert main(["triplets", *ontology_args(), "--seed", "7",
                 "--out", str(trip_dir)]) == 0
    assert main([
        "train", "--triplets", str(trip_dir / "train.tsv"),
        "--dev", str(trip_dir / "dev.tsv"),
        "--dim", "16", "--buckets", "512", "--epochs", "2",
        "--lr", "0.001", "--seed", "7", "--out", str(model),
    ]) == 0
    assert main([
        "index", *ontology_args(), "--model", str(model),
        "--bm25", "--out", str(index_dir),
    ]) == 0
    capsys.readouterr()
    return index_dir


class TestIngest:
    def test_stats_line(self, capsys):
        code, out, _ = run(capsys, "ingest", *ontology_args())
        assert code == 0
        stats = json.loads(out)
        assert stats == {
            "concepts": 5, "labels": 7, "relations": 4, "roots": 1, "leaves": 3,
        }

    def test_invalid_ontology_reports_coded_error(self, capsys, tmp_path):
        (tmp_path / "c.tsv").write_text("A\ta\nA\ta2\n", encoding="utf-8")
        (tmp_path / "l.tsv").write_text("", encoding="utf-8")
        (tmp_path / "r.tsv").write_text("", encoding="utf-8")
        code, _, err = run(
            capsys, "ingest",
            "--concepts", str(tmp_path / "c.tsv"),
            "--labels", str(tmp_path / "l.tsv"),
            "--relations", str(tmp_path / "r.tsv"),
        )
        assert code == 1
        payload = json.loads(err)
        assert payload["error"] == "ontology.DuplicateConceptId"


class TestTriplets:
    def test_writes_split_and_manifest(self, capsys, tmp_path):
        out = tmp_path / "t"
        code, stdout, _ = run(
            capsys, "triplets", *ontology_args(), "--seed", "7", "--out", str(out)
        )
        assert code == 0
        summary = json.loads(stdout)
        assert summary["total"] == 12
        lines = []
        for name in ("train.tsv", "dev.tsv", "test.tsv"):
            lines += (out / name).read_text(encoding="utf-8").splitlines()
        assert len(lines) == 12
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 7

    def test_reruns_are_byte_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["triplets", *ontology_args(), "--seed", "3",
                         "--out", str(out)]) == 0
        capsys.readouterr()
        for name in ("train.tsv", "dev.tsv", "test.tsv", "manifest.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_bad_ratios(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "triplets", *ontology_args(), "--out", str(tmp_path / "x"),
            "--ratios", "0.5,0.5,0.5",
        )
        assert code == 2
        assert json.loads(err)["error"] == "app.UsageError"


class TestTrainCommand:
    def test_trains_and_reports_history(self, capsys, tmp_path):
        trip = tmp_path / "t"
        assert main(["triplets", *ontology_args(), "--seed", "1",
                     "--out", str(trip)]) == 0
        capsys.readouterr()
        model = tmp_path / "m.npz"
        code, out, _ = run(
            capsys, "train", "--triplets", str(trip / "train.tsv"),
            "--dim", "8", "--buckets", "128", "--epochs", "1",
            "--out", str(model),
        )
        assert code == 0
        summary = json.loads(out)
        assert len(summary["epochs"]) == 1
        assert model.exists()


class TestQuery:
    def test_vector_self_match(self, capsys, built_index):
        code, out, _ = run(
            capsys, "query", "--index", str(built_index),
            "--q", "Lassitude", "--k", "3",
        )
        assert code == 0
        hits = [json.loads(line) for line in out.splitlines()]
        assert hits[0]["concept_id"] == "asthenia"
        assert hits[0]["rank"] == 1
        assert hits[0]["score"] == pytest.approx(1.0, abs=1e-9)

    def test_k_clamps_and_ranks_consecutive(self, capsys, built_index):
        code, out, _ = run(
            capsys, "query", "--index", str(built_index), "--q", "Fatigue",
            "--k", "10",
        )
        hits = [json.loads(line) for line in out.splitlines()]
        assert len(hits) == 5  # five concepts in the fixture
        assert [h["rank"] for h in hits] == [1, 2, 3, 4, 5]

    def test_bm25_ranker(self, capsys, built_index):
        code, out, _ = run(
            capsys, "query", "--index", str(built_index),
            "--q", "energy stamina", "--ranker", "bm25", "--k", "5",
        )
        assert code == 0
        hits = [json.loads(line) for line in out.splitlines()]
        assert hits[0]["concept_id"] == "energy"

    def test_unknown_subcommand_is_usage_error(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == 2
        assert json.loads(err)["error"] == "app.UsageError"

    def test_missing_index(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "query", "--index", str(tmp_path / "absent"), "--q", "x"
        )
        assert code == 2
        assert "meta.json" in json.loads(err)["message"]


class TestMatch:
    def test_emits_one_line_per_source_concept(self, capsys, built_index, tmp_path):
        src_c = tmp_path / "src_concepts.tsv"
        src_l = tmp_path / "src_labels.tsv"
        src_c.write_text("s1\tLassitude\ns2\tWeariness\n", encoding="utf-8")
        src_l.write_text("s1\tAsthenia\n", encoding="utf-8")
        code, out, _ = run(
            capsys, "match", "--index", str(built_index),
            "--source-concepts", str(src_c), "--source-labels", str(src_l),
            "--k", "2",
        )
        assert code == 0
        lines = [json.loads(line) for line in out.splitlines()]
        assert [row["source_id"] for row in lines] == ["s1", "s2"]
        assert lines[0]["hits"][0]["concept_id"] == "asthenia"
        assert lines[1]["hits"][0]["concept_id"] == "fatigue"


class TestEval:
    def queries_file(self, tmp_path):
        path = tmp_path / "q.tsv"
        path.write_text(
            "q1\tLassitude\tasthenia\nq2\tWeariness\tfatigue\n", encoding="utf-8"
        )
        return path

    def test_report_written(self, capsys, built_index, tmp_path):
        out = tmp_path / "report.json"
        code, _, _ = run(
            capsys, "eval", "--index", str(built_index),
            "--queries", str(self.queries_file(tmp_path)),
            "--out", str(out),
        )
        assert code == 0
        report = json.loads(out.read_text(encoding="utf-8"))
        assert report["aggregates"]["hits@1"] == 1.0
        assert report["aggregates"]["mrr"] == 1.0
        assert len(report["per_query"]) == 2
        assert report["significance"] == []

    def test_baseline_significance(self, capsys, built_index, tmp_path):
        queries = self.queries_file(tmp_path)
        base = tmp_path / "base.json"
        ours = tmp_path / "ours.json"
        assert main(["eval", "--index", str(built_index), "--queries",
                     str(queries), "--ranker", "bm25", "--out", str(base)]) == 0
        assert main(["eval", "--index", str(built_index), "--queries",
                     str(queries), "--baseline-run", str(base),
                     "--stat", "hits", "--out", str(ours)]) == 0
        capsys.readouterr()
        report = json.loads(ours.read_text(encoding="utf-8"))
        assert len(report["significance"]) == 1
        entry = report["significance"][0]
        assert entry["baseline"] == "base.json"
        assert entry["stat"] == "hits@10"
        assert entry["n"] == 2
        assert 0.0 <= entry["p"] <= 1.0

    def test_multiple_baselines(self, capsys, built_index, tmp_path):
        queries = self.queries_file(tmp_path)
        base_a = tmp_path / "a.json"
        base_b = tmp_path / "b.json"
        ours = tmp_path / "ours.json"
        for path, ranker in ((base_a, "bm25"), (base_b, "vector")):
            assert main(["eval", "--index", str(built_index), "--queries",
                         str(queries), "--ranker", ranker,
                         "--out", str(path)]) == 0
        assert main(["eval", "--index", str(built_index), "--queries",
                     str(queries), "--baseline-run", str(base_a),
                     "--baseline-run", str(base_b), "--out", str(ours)]) == 0
        capsys.readouterr()
        report = json.loads(ours.read_text(encoding="utf-8"))
        assert [e["baseline"] for e in report["significance"]] == [
            "a.json", "b.json"
        ]
        # identical runs compare as no difference
        assert report["significance"][1]["t"] == 0.0
        assert report["significance"][1]["p"] == 1.0

    def test_concept_mode(self, capsys, built_index, tmp_path):
        path = tmp_path / "qc.tsv"
        path.write_text("q1\tAsthenia|Lassitude\tasthenia\n", encoding="utf-8")
        out = tmp_path / "report.json"
        code, _, _ = run(
            capsys, "eval", "--index", str(built_index), "--queries", str(path),
            "--mode", "concept", "--out", str(out),
        )
        assert code == 0
        report = json.loads(out.read_text(encoding="utf-8"))
        assert report["aggregates"]["hits@1"] == 1.0
        assert report["per_query"][0]["overlap_degree"] is None

    def test_reciprocal_rank_stat(self, capsys, built_index, tmp_path):
        queries = self.queries_file(tmp_path)
        base = tmp_path / "base.json"
        ours = tmp_path / "ours.json"
        assert main(["eval", "--index", str(built_index), "--queries",
                     str(queries), "--ranker", "bm25", "--out", str(base)]) == 0
        assert main(["eval", "--index", str(built_index), "--queries",
                     str(queries), "--baseline-run", str(base),
                     "--stat", "rr", "--out", str(ours)]) == 0
        capsys.readouterr()
        entry = json.loads(ours.read_text(encoding="utf-8"))["significance"][0]
        assert entry["stat"] == "rr"


class TestOtherEncoders:
    def test_word_vector_index(self, capsys, tmp_path):
        wv = tmp_path / "wv.txt"
        # tokens covering the fixture labels
        wv.write_text(
            "asthenia 1 0 0\nlassitude 1 0.1 0\nfatigue 0 1 0\n"
            "weariness 0 1 0.1\nexhaustion 0 0 1\n",
            encoding="utf-8",
        )
        index_dir = tmp_path / "index"
        assert main(["index", *ontology_args(), "--word-vectors", str(wv),
                     "--out", str(index_dir)]) == 0
        capsys.readouterr()
        code, out, _ = run(capsys, "query", "--index", str(index_dir),
                           "--q", "lassitude", "--k", "2")
        assert code == 0
        hits = [json.loads(line) for line in out.splitlines()]
        assert hits[0]["concept_id"] == "asthenia"

    def test_precomputed_index(self, capsys, tmp_path):
        pre = tmp_path / "pre.tsv"
        labels = {
            "Asthenia": "1 0", "Lassitude": "0.9 0.1",
            "Energy and stamina finding": "0 1", "Exhaustion": "0.1 0.9",
            "Fatigue": "0.5 0.5", "Weariness": "0.6 0.5",
            "Feeling tired": "0.4 0.6",
        }
        pre.write_text(
            "".join(f"{k}\t{v}\n" for k, v in labels.items()), encoding="utf-8"
        )
        index_dir = tmp_path / "index"
        assert main(["index", *ontology_args(), "--precomputed", str(pre),
                     "--out", str(index_dir)]) == 0
        capsys.readouterr()
        code, out, _ = run(capsys, "query", "--index", str(index_dir),
                           "--q", "Asthenia", "--k", "1")
        assert code == 0
        hit = json.loads(out.splitlines()[0])
        assert hit["concept_id"] == "asthenia"
        assert hit["score"] == pytest.approx(1.0, abs=1e-12)

    def test_index_without_anything_to_build(self, capsys, tmp_path):
        code, _, err = run(capsys, "index", *ontology_args(),
                           "--out", str(tmp_path / "x"))
        assert code == 2
        assert json.loads(err)["error"] == "app.UsageError"


class TestBm25OnlyIndex:
    def test_query_works_and_vector_reports_missing(self, capsys, tmp_path):
        index_dir = tmp_path / "kw"
        assert main(["index", *ontology_args(), "--bm25",
                     "--out", str(index_dir)]) == 0
        capsys.readouterr()
        code, out, _ = run(capsys, "query", "--index", str(index_dir),
                           "--q", "feeling tired", "--ranker", "bm25")
        assert code == 0
        assert json.loads(out.splitlines()[0])["concept_id"] == "feeling-tired"
        code, _, err = run(capsys, "query", "--index", str(index_dir),
                           "--q", "anything")
        assert code == 2
        assert "no vector ranker" in json.loads(err)["message"]


class TestArgumentValidation:
    def test_query_k_zero(self, capsys, tmp_path):
        code, _, err = run(capsys, "query", "--index", str(tmp_path),
                           "--q", "x", "--k", "0")
        assert code == 2
        assert json.loads(err)["error"] == "app.UsageError"

    def test_serve_bad_bind(self, capsys, built_index):
        code, _, err = run(capsys, "serve", "--index", str(built_index),
                           "--bind", "nonsense")
        assert code == 2
        assert json.loads(err)["error"] == "app.UsageError"


def test_console_script_entry_point(tmp_path):
    import subprocess

    result = subprocess.run(
        ["ontosearch", "ingest", *ontology_args()],
        capture_output=True, text=True, check=False,
    )
    assert result.returncode == 0
    assert json.loads(result.stdout)["concepts"] == 5
