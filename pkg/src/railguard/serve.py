"""Network ingestion service and webhook alert sink.

One listening port accepts two transports:

* raw newline-delimited wire-format lines over a persistent TCP connection
  (one connection = one ingestion session; alert and error lines are written
  back on the same socket), and
* HTTP POST of a batch of wire-format lines (one request = one session;
  the response summarizes alerts and per-line errors).

Alert events additionally go to an output stream (stdout by default) and,
when configured, to a webhook with at-least-once delivery and exponential
backoff. Malformed lines get a per-line error response and never kill the
session.
"""

from __future__ import annotations

import asyncio
import json
import logging
import queue
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field

from .calibration import Calibration
from .errors import ParseError, SchemaError
from .ingest import StreamHeader, _decode_line, _parse_frame, _parse_header
from .pipeline import AlertEvent, PipelineConfig, StreamProcessor, format_alert

log = logging.getLogger("railguard.serve")

WEBHOOK_BASE_DELAY_S = 0.5
WEBHOOK_BACKOFF_FACTOR = 2.0
WEBHOOK_MAX_DELAY_S = 30.0
WEBHOOK_MAX_RETRIES = 8
WEBHOOK_QUEUE_SIZE = 1024


@dataclass
class DeliveryRecord:
    event: AlertEvent
    source_id: str
    attempts: int = 0
    delivered: bool = False


class WebhookSink:
    """Queue-backed webhook delivery worker (separate thread).

    At-least-once semantics while the process lives: an event is retried with
    exponential backoff up to the retry cap, then dropped with a loud error.
    The bounded queue applies back-pressure: submit() blocks when full.
    """

    def __init__(
        self,
        url: str,
        *,
        base_delay_s: float = WEBHOOK_BASE_DELAY_S,
        backoff_factor: float = WEBHOOK_BACKOFF_FACTOR,
        max_delay_s: float = WEBHOOK_MAX_DELAY_S,
        max_retries: int = WEBHOOK_MAX_RETRIES,
        queue_size: int = WEBHOOK_QUEUE_SIZE,
        timeout_s: float = 10.0,
    ):
        self.url = url
        self.base_delay_s = base_delay_s
        self.backoff_factor = backoff_factor
        self.max_delay_s = max_delay_s
        self.max_retries = max_retries
        self.timeout_s = timeout_s
        self.delivered = 0
        self.failed = 0
        self._queue: queue.Queue[DeliveryRecord | None] = queue.Queue(maxsize=queue_size)
        self._worker = threading.Thread(target=self._run, name="webhook-sink", daemon=True)
        self._worker.start()

    def submit(self, event: AlertEvent, source_id: str) -> None:
        self._queue.put(DeliveryRecord(event, source_id))

    def close(self) -> None:
        """Flush pending deliveries and stop the worker."""
        self._queue.put(None)
        self._worker.join()

    # -- worker side -----------------------------------------------------

    def _run(self) -> None:
        while True:
            record = self._queue.get()
            if record is None:
                return
            self._deliver(record)

    def _idempotency_key(self, record: DeliveryRecord) -> str:
        e = record.event
        return f"{record.source_id}|{e.object_key}|{e.frame_index}|{e.kind}"

    def _deliver(self, record: DeliveryRecord) -> None:
        e = record.event
        payload = json.dumps(
            {
                "kind": e.kind,
                "object_key": e.object_key,
                "frame_index": e.frame_index,
                "timestamp_ms": e.timestamp_ms,
                "distance_m": e.distance_m,
                "source_id": record.source_id,
                "idempotency_key": self._idempotency_key(record),
            },
            separators=(",", ":"),
        ).encode("utf-8")
        while True:
            record.attempts += 1
            try:
                req = urllib.request.Request(
                    self.url,
                    data=payload,
                    headers={
                        "Content-Type": "application/json",
                        "X-Idempotency-Key": self._idempotency_key(record),
                        "X-Delivery-Attempt": str(record.attempts),
                    },
                    method="POST",
                )
                with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                    if 200 <= resp.status < 300:
                        record.delivered = True
                        self.delivered += 1
                        return
                    reason: str = f"HTTP {resp.status}"
            except urllib.error.HTTPError as exc:
                reason = f"HTTP {exc.code}"
            except Exception as exc:  # connection refused, timeout, DNS
                reason = str(exc)
            retries_used = record.attempts - 1
            if retries_used >= self.max_retries:
                self.failed += 1
                log.error(
                    "webhook delivery failed permanently after %d attempts (%s): %s",
                    record.attempts,
                    reason,
                    self._idempotency_key(record),
                )
                return
            delay = min(
                self.base_delay_s * self.backoff_factor**retries_used,
                self.max_delay_s,
            )
            log.warning(
                "webhook attempt %d failed (%s); retrying in %.1fs",
                record.attempts,
                reason,
                delay,
            )
            time.sleep(delay)


@dataclass
class SessionResult:
    header: StreamHeader | None = None
    frames: int = 0
    alerts: list[AlertEvent] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)


class _Session:
    """One ingestion session: parses lines, runs the pipeline incrementally."""

    def __init__(self, service: ProximityService):
        self.service = service
        self.processor: StreamProcessor | None = None
        self.result = SessionResult()
        self.line_no = 0
        self.last_index = -1
        self.last_ts = -1

    def feed_line(self, text: str) -> tuple[list[AlertEvent], dict | None]:
        """Process one wire line; returns (alerts, error) for that line."""
        self.line_no += 1
        if not text.strip():
            return [], None
        try:
            payload = _decode_line(text, self.line_no)
            kind = payload.get("type")
            if self.processor is None:
                if kind != "header":
                    raise SchemaError("first record must be a header", self.line_no)
                header = _parse_header(payload, self.line_no)
                self.result.header = header
                self.processor = StreamProcessor(
                    header, self.service.cal, self.service.cfg
                )
                return [], None
            if kind == "header":
                raise SchemaError("unexpected second header record", self.line_no)
            if kind != "frame":
                raise SchemaError(f"unknown record type: {kind!r}", self.line_no)
            frame = _parse_frame(payload, self.line_no)
            if frame.frame_index <= self.last_index:
                raise SchemaError(
                    f"frame_index {frame.frame_index} not greater than previous "
                    f"{self.last_index}",
                    self.line_no,
                )
            if frame.timestamp_ms < self.last_ts:
                raise SchemaError(
                    f"timestamp_ms {frame.timestamp_ms} decreased from {self.last_ts}",
                    self.line_no,
                )
        except ParseError as exc:
            error = {"line": self.line_no, "error": str(exc)}
            self.result.errors.append(error)
            return [], error
        self.last_index = frame.frame_index
        self.last_ts = frame.timestamp_ms
        _, events = self.processor.process_frame(frame)
        self.result.frames += 1
        self.result.alerts.extend(events)
        for event in events:
            self.service.emit_alert(event, self.result.header.source_id)
        return events, None


class ProximityService:
    """Asyncio TCP/HTTP ingestion server sharing one pipeline config."""

    def __init__(
        self,
        host: str,
        port: int,
        cal: Calibration,
        cfg: PipelineConfig,
        webhook: WebhookSink | None = None,
        alert_writer=None,
    ):
        self.host = host
        self.port = port
        self.cal = cal
        self.cfg = cfg
        self.webhook = webhook
        self.alert_writer = alert_writer
        self._server: asyncio.base_events.Server | None = None
        self._write_lock = threading.Lock()

    # -- alert fan-out -----------------------------------------------------

    def emit_alert(self, event: AlertEvent, source_id: str) -> None:
        if self.alert_writer is not None:
            with self._write_lock:
                self.alert_writer.write(format_alert(event) + "\n")
                self.alert_writer.flush()
        if self.webhook is not None:
            self.webhook.submit(event, source_id)

    # -- server lifecycle ----------------------------------------------------

    async def start(self) -> None:
        self._server = await asyncio.start_server(
            self._handle_connection, self.host, self.port
        )
        addr = self._server.sockets[0].getsockname()
        self.port = addr[1]
        log.info("listening on %s:%d", addr[0], addr[1])

    async def serve_forever(self) -> None:
        if self._server is None:
            await self.start()
        async with self._server:
            await self._server.serve_forever()

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    # -- connection handling ---------------------------------------------

    async def _handle_connection(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        peer = writer.get_extra_info("peername")
        try:
            first = await reader.readline()
            if not first:
                return
            if first.startswith(b"POST ") or first.startswith(b"GET "):
                await self._handle_http(first, reader, writer)
            else:
                await self._handle_ndjson(first, reader, writer)
        except (ConnectionError, asyncio.IncompleteReadError) as exc:
            log.warning("connection %s dropped: %s", peer, exc)
        finally:
            try:
                writer.close()
                await writer.wait_closed()
            except (ConnectionError, OSError):
                pass

    async def _handle_ndjson(
        self,
        first_line: bytes,
        reader: asyncio.StreamReader,
        writer: asyncio.StreamWriter,
    ) -> None:
        session = _Session(self)
        line = first_line
        while line:
            alerts, error = session.feed_line(line.decode("utf-8", errors="replace"))
            if error is not None:
                writer.write(
                    (json.dumps(error, separators=(",", ":")) + "\n").encode("utf-8")
                )
            for event in alerts:
                writer.write((format_alert(event) + "\n").encode("utf-8"))
            await writer.drain()
            line = await reader.readline()
        log.info(
            "session closed: %d frames, %d alerts, %d rejected lines",
            session.result.frames,
            len(session.result.alerts),
            len(session.result.errors),
        )

    async def _handle_http(
        self,
        request_line: bytes,
        reader: asyncio.StreamReader,
        writer: asyncio.StreamWriter,
    ) -> None:
        method = request_line.split(b" ", 1)[0].decode("ascii", errors="replace")
        content_length = 0
        while True:
            header_line = await reader.readline()
            if header_line in (b"\r\n", b"\n", b""):
                break
            name, _, value = header_line.decode("latin-1").partition(":")
            if name.strip().lower() == "content-length":
                content_length = int(value.strip())
        if method != "POST":
            await self._http_response(writer, 405, {"error": "POST wire-format lines"})
            return
        body = await reader.readexactly(content_length) if content_length else b""
        session = _Session(self)
        for raw in body.decode("utf-8", errors="replace").splitlines():
            session.feed_line(raw)
        result = session.result
        payload = {
            "frames": result.frames,
            "alerts": [json.loads(format_alert(e)) for e in result.alerts],
            "errors": result.errors,
        }
        if session.processor is not None:
            summary = session.processor.summary
            payload["summary"] = {
                "frames": summary.frames,
                "statuses": summary.statuses,
                "breaches": summary.breaches,
                "unknown_distances": summary.unknown_distances,
                "alerts_raised": summary.alerts_raised,
                "alerts_cleared": summary.alerts_cleared,
            }
        await self._http_response(writer, 200, payload)

    async def _http_response(
        self, writer: asyncio.StreamWriter, status: int, payload: dict
    ) -> None:
        body = json.dumps(payload, separators=(",", ":")).encode("utf-8")
        reason = {200: "OK", 405: "Method Not Allowed"}.get(status, "Error")
        head = (
            f"HTTP/1.1 {status} {reason}\r\n"
            "Content-Type: application/json\r\n"
            f"Content-Length: {len(body)}\r\n"
            "Connection: close\r\n\r\n"
        ).encode("ascii")
        writer.write(head + body)
        await writer.drain()


def run_service(
    host: str,
    port: int,
    cal: Calibration,
    cfg: PipelineConfig,
    webhook_url: str | None = None,
    alert_writer=None,
) -> None:
    """Blocking entry point: serve until interrupted, then flush the webhook."""
    webhook = WebhookSink(webhook_url) if webhook_url else None
    service = ProximityService(host, port, cal, cfg, webhook, alert_writer)
    try:
        asyncio.run(service.serve_forever())
    except KeyboardInterrupt:
        log.info("interrupt: shutting down")
    finally:
        if webhook is not None:
            webhook.close()
