"""Command-line surface: pipeline runs, eval reports, interchange files,
and error reporting, all driven through main() in process."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import pytest

from conseq.cli import main
from conseq.gateway.core import Gateway
from conseq.gateway.mock import MockProvider
from conseq.store import CatalogStore

from conftest import DATA_DIR, build_separable_corpus, make_article, make_card


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(
        json.dumps(
            {
                "db_path": str(tmp_path / "cli.db"),
                "mock_rules_path": str(DATA_DIR / "mock_rules.json"),
                "rpm": 1_000_000,
            }
        )
    )
    return str(path)


def run_cli(*argv):
    return main(list(argv))


class TestPipelineRun:
    def _run(self, tmp_path, config_path, *extra):
        out = tmp_path / "cards.ndjson"
        report = tmp_path / "report.json"
        code = run_cli(
            "pipeline", "run",
            "--config", config_path,
            "--domain", "social media",
            "--articles", str(DATA_DIR / "golden_articles.ndjson"),
            "--out", str(out),
            "--report", str(report),
            *extra,
        )
        return code, out, report

    def test_emits_expected_cards(self, tmp_path, config_path, capsys):
        code, out, report = self._run(tmp_path, config_path)
        assert code == 0

        emitted = [json.loads(l) for l in out.read_text().splitlines()]
        golden = [
            json.loads(l)
            for l in (DATA_DIR / "golden_cards.ndjson").read_text().splitlines()
        ]
        # The CLI stamps real creation times; identity and content are stable.
        assert [c["id"] for c in emitted] == [c["id"] for c in golden]
        assert [c["summary"] for c in emitted] == [c["summary"] for c in golden]
        assert [c["aspect"] for c in emitted] == [c["aspect"] for c in golden]

        # No title model configured, so every title passes; the content
        # filter does all the gating.
        funnel = json.loads(report.read_text())
        assert funnel["retrieved"] == 12
        assert funnel["after_title_filter"] == 12
        assert funnel["after_content_filter"] == 4
        assert funnel["cards_emitted"] == 4

        table = capsys.readouterr().out
        assert table.splitlines()[0] == (
            "News Source,Retrieved,Title Filter,Content Filter"
        )
        assert "Total,12,12 (100%),4 (33%)" in table

    def test_runs_are_reproducible(self, tmp_path, config_path):
        _, out1, _ = self._run(tmp_path, config_path)
        first = out1.read_bytes()
        _, out2, _ = self._run(tmp_path, config_path)
        ids = lambda blob: [json.loads(l)["id"] for l in blob.splitlines()]
        assert ids(first) == ids(out2.read_bytes())

    def test_publish_stores_cards(self, tmp_path, config_path):
        code, _, _ = self._run(tmp_path, config_path, "--publish")
        assert code == 0
        store = CatalogStore(tmp_path / "cli.db")
        try:
            assert store.count_cards() == 4
            assert store.count_articles() == 12
        finally:
            store.close()

    def test_missing_articles_file_fails_cleanly(self, config_path, capsys):
        code = run_cli(
            "pipeline", "run",
            "--config", config_path,
            "--domain", "social media",
            "--articles", "/nonexistent/articles.ndjson",
        )
        assert code == 1
        assert capsys.readouterr().err.startswith("error:")


class TestEval:
    def test_two_column_trains_baseline(self, tmp_path, capsys):
        corpus = build_separable_corpus()
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["title", "label"])
        for title, label in corpus:
            writer.writerow([title, "relevant" if label else "irrelevant"])
        path = tmp_path / "titles.csv"
        path.write_text(buf.getvalue())
        model_path = tmp_path / "baseline.json"

        code = run_cli(
            "eval", "--csv", str(path), "--seed", "42", "--save-model", str(model_path)
        )
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["items"] == 200
        assert out["train"] == 160 and out["test"] == 40
        assert out["f1"] >= 0.95
        assert model_path.exists()

        code = run_cli("eval", "--csv", str(path), "--seed", "42")
        again = json.loads(capsys.readouterr().out)
        del out["model_path"]
        assert again == out

    def test_three_column_reports_agreement(self, tmp_path, capsys):
        path = tmp_path / "labels.csv"
        path.write_text(
            "item,a,b\n"
            "one,x,x\n"
            "two,x,y\n"
            "three,y,x\n"
            "four,y,y\n"
        )
        assert run_cli("eval", "--csv", str(path)) == 0
        out = json.loads(capsys.readouterr().out)
        assert out == {"items": 4, "raw_agreement": 0.5, "cohen_kappa": 0.0}

    def test_bad_width_fails(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c,d\n1,2,3,4\n")
        assert run_cli("eval", "--csv", str(path)) == 1
        assert "error" in capsys.readouterr().err


class TestExportImport:
    def test_round_trip(self, tmp_path, capsys):
        db_a = tmp_path / "a.db"
        store = CatalogStore(
            db_a, embedder=Gateway(MockProvider(), rpm=1_000_000).embed
        )
        for i in range(3):
            art = make_article(i)
            store.add_article(art)
            store.upsert_card(make_card(art))
        store.close()

        cards = tmp_path / "cards.ndjson"
        sidecar = tmp_path / "sidecar.json"
        assert run_cli("export", "--db", str(db_a), "--cards", str(cards), "--sidecar", str(sidecar)) == 0
        assert "exported 3 cards" in capsys.readouterr().out

        db_b = tmp_path / "b.db"
        assert run_cli("import", "--db", str(db_b), "--cards", str(cards), "--sidecar", str(sidecar)) == 0
        assert "imported 3 cards" in capsys.readouterr().out

        cards2 = tmp_path / "cards2.ndjson"
        sidecar2 = tmp_path / "sidecar2.json"
        assert run_cli("export", "--db", str(db_b), "--cards", str(cards2), "--sidecar", str(sidecar2)) == 0
        assert cards2.read_bytes() == cards.read_bytes()

    def test_import_of_corrupt_card_reports_code(self, tmp_path, capsys):
        cards = tmp_path / "cards.ndjson"
        record = {
            "id": "a" * 16,
            "article_id": "b" * 16,
            "domain": "social media",
            "summary": "that the record carries an unknown category label here.",
            "aspect": "Vibes",
            "provenance": {"provider": "mock", "model": "m", "prompt_hashes": []},
            "created_at": "2025-07-01T12:00:00+00:00",
        }
        cards.write_text(json.dumps(record) + "\n")
        sidecar = tmp_path / "sidecar.json"
        sidecar.write_text(json.dumps({"domains": [], "articles": [], "pending_imports": []}))

        code = run_cli("import", "--db", str(tmp_path / "c.db"), "--cards", str(cards), "--sidecar", str(sidecar))
        assert code == 1
        assert "error [unknown_aspect]" in capsys.readouterr().err

    def test_missing_files_fail_cleanly(self, tmp_path, capsys):
        code = run_cli(
            "import",
            "--db", str(tmp_path / "d.db"),
            "--cards", str(tmp_path / "nope.ndjson"),
            "--sidecar", str(tmp_path / "nope.json"),
        )
        assert code == 1
        assert capsys.readouterr().err.startswith("error:")


class TestBulkImportErrors:
    def test_csv_without_url_column(self, tmp_path, config_path, capsys):
        path = tmp_path / "bulk.csv"
        path.write_text("link\nhttps://x.test/a\n")
        code = run_cli("bulk-import", "--config", config_path, "--csv", str(path))
        assert code == 1
        assert "url" in capsys.readouterr().err

    def test_row_without_domain(self, tmp_path, config_path, capsys):
        path = tmp_path / "bulk.csv"
        path.write_text("url\nhttps://x.test/a\n")
        code = run_cli("bulk-import", "--config", config_path, "--csv", str(path))
        assert code == 1
        assert "domain" in capsys.readouterr().err


class TestParser:
    @pytest.mark.parametrize(
        "argv",
        [
            ["serve", "--help"],
            ["pipeline", "run", "--help"],
            ["bulk-import", "--help"],
            ["eval", "--help"],
            ["export", "--help"],
            ["import", "--help"],
        ],
    )
    def test_help_screens_exist(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli(*argv)
        assert exc.value.code == 0
        assert "usage: conseq" in capsys.readouterr().out

    def test_unknown_command_exits_nonzero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("frobnicate")
        assert exc.value.code != 0
