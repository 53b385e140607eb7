import json

import pytest

import segtrack


def test_segment_and_instrument(pages):
    html = (pages / "five_blocks.html").read_text()
    result = segtrack.segment_page(html, page_url="/five", generated_at="2024-01-01T00:00:00Z")
    ids = [s.id for s in result.manifest.segments]
    assert ids == [1, 2, 3, 4, 5]
    assert result.manifest.generated_at == "2024-01-01T00:00:00Z"
    assert 'data-seg-id="3"' in result.annotated_html

    page = segtrack.instrument(result.annotated_html, result.manifest, "http://localhost:8423/v1/events")
    start = page.index('id="segtrack-config">') + len('id="segtrack-config">')
    config = json.loads(page[start : page.index("</script>", start)])
    assert config == {"endpoint": "http://localhost:8423/v1/events", "page_url": "/five", "v": 1}

    with pytest.raises(segtrack.SegtrackError) as err:
        segtrack.instrument(page, result.manifest, "http://x/v1/events")
    assert err.value.code == "AlreadyInstrumented"


def test_manifest_json_round_trip(pages):
    html = (pages / "news_article.html").read_text()
    manifest = segtrack.segment_page(html, generated_at="2024-01-01T00:00:00Z").manifest
    again = segtrack.PageManifest.from_json(manifest.to_json())
    assert [s.dom_path for s in again.segments] == [s.dom_path for s in manifest.segments]


def test_empty_document_error():
    with pytest.raises(segtrack.SegtrackError) as err:
        segtrack.segment_page("   \n")
    assert err.value.code == "EmptyDocument"


def test_table1_pipeline(tmp_path, table1):
    scenario = segtrack.load_scenario(table1)
    assert len(scenario.rows) == 21
    summary = segtrack.replay_to_file(scenario, tmp_path / "store.jsonl")
    assert (summary.sessions, summary.intervals, summary.records) == (4, 21, 29)

    read = segtrack.read_sessions([tmp_path / "store.jsonl"])
    assert read.skipped_lines == 0
    reports = {s.session_id: segtrack.analyze_session(s, segtrack.Threshold(0.0)) for s in read.sessions}
    ranked = [(d.segment_id, d.dwell_ms) for d in reports["sim-1"].retained]
    assert ranked == [(23, 25000), (14, 10000), (17, 5000), (6, 4000), (8, 3000)]
    assert [d.segment_id for d in reports["sim-3"].retained] == [22, 13, 17, 8]
    assert reports["sim-1"].render("csv").splitlines()[1] == "23,25.000"

    user1 = segtrack.aggregate_dwell(read.sessions[0])
    split = segtrack.apply_threshold(user1, segtrack.Threshold(4.0))
    assert sorted(d.segment_id for d in split.retained) == [14, 17, 23]
    assert sorted(d.segment_id for d in split.dropped) == [6, 8]

    rows = segtrack.cross_user_summary(read.sessions, segtrack.Threshold(1.0)).rows
    totals = {r.segment_id: (r.total_dwell_ms, r.session_count) for r in rows}
    assert totals[22] == (40000, 3)
    assert totals[14] == (31000, 3)


def test_scenario_errors():
    with pytest.raises(segtrack.SegtrackError) as err:
        segtrack.parse_scenario("user_id,segment_id,stay_seconds\n1,abc,5\n")
    assert err.value.code == "MalformedRow"
    assert "line 2" in str(err.value)
    with pytest.raises(segtrack.SegtrackError):
        segtrack.parse_scenario("user_id,segment_id,stay_seconds\n")


def test_record_round_trip():
    rows = segtrack.parse_scenario("user_id,segment_id,stay_seconds\n1,14,10\n").rows
    records = segtrack.synthesize_session(rows, "s", 0, "/p")
    assert [r.kind for r in records] == ["session_start", "interval", "session_end"]
    for r in records:
        assert segtrack.LogRecord.from_json(r.to_json()) == r
    assert list(json.loads(records[1].to_json())) == [
        "kind", "session_id", "page_url", "recv_ms", "en_ms", "ex_ms", "segment_id"]


def test_ingest_event_batch(tmp_path):
    service = segtrack.IngestService(tmp_path, clock=lambda: 1_700_000_000_000)
    batch = {"v": 1, "session_id": "s1", "page_url": "/p",
             "intervals": [{"segment_id": 14, "en_ms": 0, "ex_ms": 10000}]}
    assert service.handle_event_batch(json.dumps(batch)) == (204, "")
    store = tmp_path / segtrack.log_file_name(1_700_000_000_000)
    before = store.read_bytes()

    batch["intervals"].append({"segment_id": 3, "en_ms": 9, "ex_ms": 5})
    status, body = service.handle_event_batch(json.dumps(batch))
    assert status == 400
    assert json.loads(body)["error"] == "InvalidInterval"
    assert store.read_bytes() == before
    assert service.records_appended == 1
