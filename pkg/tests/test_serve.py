import json
import threading
import urllib.request

import pytest

from railguard.calibration import ScalarCalibration
from railguard.ingest import write_stream
from railguard.pipeline import AlertEvent, PipelineConfig, run_stream, format_alert
from railguard.serve import WebhookSink
from railguard.simgen import generate

from scenarios import linear_approach_scenario
from serve_utils import FlakyWebhookServer, ServiceHarness, tcp_session

CAL = ScalarCalibration(0.015625)
CFG = PipelineConfig(distance_mode="center_to_polyline")


def stream_text(header, frames):
    return "".join(line + "\n" for line in write_stream(header, frames))


@pytest.fixture
def harness():
    h = ServiceHarness(CAL, CFG)
    yield h
    h.close()


class TestTransportIndependence:
    def test_tcp_equals_direct_run(self, harness):
        scenario = linear_approach_scenario()
        header, frames, _ = generate(scenario)
        payload = stream_text(header, frames).encode("utf-8")

        response = tcp_session(harness.port, payload)

        _, events, summary = run_stream(header, frames, CAL, CFG)
        expected = "".join(format_alert(e) + "\n" for e in events).encode("utf-8")
        assert response == expected
        assert summary.frames == len(frames)

    def test_http_batch_same_alerts(self, harness):
        scenario = linear_approach_scenario()
        header, frames, _ = generate(scenario)
        body = stream_text(header, frames).encode("utf-8")
        req = urllib.request.Request(
            f"http://127.0.0.1:{harness.port}/ingest",
            data=body,
            headers={"Content-Type": "application/x-ndjson"},
            method="POST",
        )
        with urllib.request.urlopen(req, timeout=10) as resp:
            doc = json.loads(resp.read())
        _, events, _ = run_stream(header, frames, CAL, CFG)
        assert doc["frames"] == len(frames)
        assert doc["errors"] == []
        assert doc["summary"]["frames"] == len(frames)
        got = [json.dumps(a, separators=(",", ":")) for a in doc["alerts"]]
        expected = [format_alert(e) for e in events]
        assert got == expected


class TestSessionIsolation:
    def test_malformed_line_rejected_rest_processed(self, harness):
        scenario = linear_approach_scenario()
        header, frames, _ = generate(scenario)
        lines = stream_text(header, frames).splitlines()
        lines.insert(30, "{broken json")
        payload = ("\n".join(lines) + "\n").encode("utf-8")

        response_lines = tcp_session(harness.port, payload).decode().splitlines()
        errors = [json.loads(l) for l in response_lines if "error" in json.loads(l)]
        alerts = [json.loads(l) for l in response_lines if "kind" in json.loads(l)]
        assert len(errors) == 1
        assert errors[0]["line"] == 31
        # valid frames after the bad line still flow through the pipeline
        _, events, _ = run_stream(header, frames, CAL, CFG)
        assert [a["frame_index"] for a in alerts] == [e.frame_index for e in events]

    def test_order_violation_rejected_without_killing_session(self, harness):
        scenario = linear_approach_scenario()
        header, frames, _ = generate(scenario)
        lines = stream_text(header, frames).splitlines()
        lines.insert(50, lines[10])  # duplicate of an earlier frame: regression
        payload = ("\n".join(lines) + "\n").encode("utf-8")
        response_lines = tcp_session(harness.port, payload).decode().splitlines()
        errors = [json.loads(l) for l in response_lines if "error" in json.loads(l)]
        assert len(errors) == 1
        assert "not greater" in errors[0]["error"]

    def test_frame_before_header_rejected(self, harness):
        payload = b'{"type":"frame","frame_index":0,"timestamp_ms":0,"detections":[]}\n'
        response = tcp_session(harness.port, payload).decode()
        assert "header" in response

    def test_concurrent_sessions_isolated(self, harness):
        scenario = linear_approach_scenario()
        header, frames, _ = generate(scenario)
        payload = stream_text(header, frames).encode("utf-8")
        results = [None, None]

        def run(i):
            results[i] = tcp_session(harness.port, payload)

        threads = [threading.Thread(target=run, args=(i,)) for i in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join(15)
        assert results[0] == results[1]
        assert results[0]  # both sessions produced the alert lines


class TestWebhookDelivery:
    def test_retry_backoff_then_single_delivery(self):
        mock = FlakyWebhookServer(failures=2)
        sink = WebhookSink(f"http://127.0.0.1:{mock.port}/hook")
        event = AlertEvent("raised", "person:0", 42, 4200, 0.8)
        try:
            sink.submit(event, "cam-1")
            sink.close()
        finally:
            mock.close()

        assert len(mock.requests) == 3  # 2 failures + 1 success
        assert sink.delivered == 1
        assert sink.failed == 0
        gap1 = mock.requests[1]["time"] - mock.requests[0]["time"]
        gap2 = mock.requests[2]["time"] - mock.requests[1]["time"]
        assert gap1 >= 0.4  # base delay 500 ms
        assert gap2 >= 0.9  # doubled
        assert gap2 > gap1
        # retry metadata and a stable idempotency key for receiver dedupe
        assert [r["attempt"] for r in mock.requests] == ["1", "2", "3"]
        keys = {r["idempotency_key"] for r in mock.requests}
        assert keys == {"cam-1|person:0|42|raised"}
        body = mock.requests[-1]["body"]
        assert body["kind"] == "raised"
        assert body["distance_m"] == 0.8
        assert body["source_id"] == "cam-1"

    def test_gives_up_after_retry_cap(self):
        mock = FlakyWebhookServer(failures=10**6)
        sink = WebhookSink(
            f"http://127.0.0.1:{mock.port}/hook",
            base_delay_s=0.01,
            max_retries=3,
        )
        try:
            sink.submit(AlertEvent("raised", "person:0", 1, 100, 0.5), "cam-1")
            sink.close()
        finally:
            mock.close()
        assert len(mock.requests) == 4  # initial + 3 retries
        assert sink.failed == 1
        assert sink.delivered == 0

    def test_end_to_end_service_delivery(self):
        mock = FlakyWebhookServer(failures=0)
        sink = WebhookSink(f"http://127.0.0.1:{mock.port}/hook")
        harness = ServiceHarness(CAL, CFG, webhook=sink)
        try:
            scenario = linear_approach_scenario()
            header, frames, _ = generate(scenario)
            tcp_session(harness.port, stream_text(header, frames).encode())
            harness.close()
            sink.close()
        finally:
            mock.close()
        _, events, _ = run_stream(header, frames, CAL, CFG)
        assert len(mock.requests) == len(events)
        assert mock.requests[0]["body"]["source_id"] == header.source_id
