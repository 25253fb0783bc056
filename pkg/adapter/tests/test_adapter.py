import io
import json

import pytest

from railguard_adapter.adapter import AdapterConfig, VideoError, run_adapter
from railguard_adapter.cli import main
from railguard_adapter.detectors import ModelLoadError, build_detector
from railguard_adapter.resample import resample_indices
from railguard_adapter.sidecar import SidecarError, TrackSidecar

from conftest import write_fixture_video


def adapter_lines(cfg):
    buf = io.StringIO()
    run_adapter(cfg, buf)
    return buf.getvalue().splitlines()


class TestResample:
    def test_even_stride(self):
        assert resample_indices(5, 3) == [0, 2, 4]

    def test_invalid(self):
        with pytest.raises(ValueError):
            resample_indices(5, 6)
        with pytest.raises(ValueError):
            resample_indices(0, 1)


class TestRunAdapter:
    def test_identity_resampling_one_record_per_frame(self, fixture_video):
        lines = adapter_lines(AdapterConfig(fixture_video))
        assert len(lines) == 11  # header + 10 frames
        header = json.loads(lines[0])
        assert header["type"] == "header"
        assert (header["frame_width"], header["frame_height"]) == (64, 48)
        indices = [json.loads(l)["frame_index"] for l in lines[1:]]
        assert indices == list(range(10))

    def test_target_frame_count(self, fixture_video):
        lines = adapter_lines(AdapterConfig(fixture_video, target_frames=4))
        frames = [json.loads(l) for l in lines[1:]]
        assert len(frames) == 4
        # timestamps follow the source positions of the resampled frames
        expected_sources = resample_indices(10, 4)
        assert [f["timestamp_ms"] for f in frames] == [
            round(s * 100) for s in expected_sources
        ]

    def test_over_request_rejected(self, fixture_video):
        with pytest.raises(VideoError):
            adapter_lines(AdapterConfig(fixture_video, target_frames=11))

    def test_motion_detector_emits_objects(self, fixture_video):
        lines = adapter_lines(AdapterConfig(fixture_video, confidence_floor=0.1))
        classes = {
            d["class"] for l in lines[1:] for d in json.loads(l)["detections"]
        }
        assert classes == {"object"}

    def test_class_map_controls_labels(self, fixture_video):
        cfg = AdapterConfig(
            fixture_video, class_map={"moving": "person"}, confidence_floor=0.1
        )
        classes = {
            d["class"] for l in adapter_lines(cfg)[1:] for d in json.loads(l)["detections"]
        }
        assert classes == {"person"}

    def test_unmapped_labels_dropped(self, fixture_video):
        cfg = AdapterConfig(fixture_video, class_map={"something_else": "person"})
        assert all(
            json.loads(l)["detections"] == [] for l in adapter_lines(cfg)[1:]
        )

    def test_sidecar_track_boxes(self, fixture_video, track_sidecar_path):
        cfg = AdapterConfig(
            fixture_video,
            model="none",
            track_sidecar=TrackSidecar.load(track_sidecar_path),
        )
        frames = [json.loads(l) for l in adapter_lines(cfg)[1:]]
        assert frames[0]["detections"] == [
            {"class": "track", "bbox": [30.0, 0.0, 34.0, 48.0], "confidence": 1.0}
        ]
        assert frames[1]["detections"] == [
            {"class": "track", "bbox": [28.0, 0.0, 36.0, 48.0], "confidence": 1.0}
        ]

    def test_digest_reflects_normalization(self, fixture_video):
        frames = [json.loads(l) for l in adapter_lines(AdapterConfig(fixture_video))[1:]]
        for f in frames:
            lo, hi = f["intensity_digest"]
            assert 0.0 <= lo <= hi <= 1.0
        # bright block appears from frame 3 on
        assert frames[9]["intensity_digest"][1] > 0.5

    def test_invalid_config(self, fixture_video):
        with pytest.raises(ValueError):
            AdapterConfig(fixture_video, class_map={"moving": "train"})
        with pytest.raises(ValueError):
            AdapterConfig(fixture_video, confidence_floor=1.5)
        with pytest.raises(ValueError):
            AdapterConfig(fixture_video, target_frames=0)

    def test_unreadable_video(self, tmp_path):
        with pytest.raises(VideoError):
            adapter_lines(AdapterConfig(str(tmp_path / "missing.avi")))

    def test_unknown_model(self, fixture_video):
        with pytest.raises(ModelLoadError):
            build_detector("frcnn")


class TestSidecar:
    def test_malformed_rejected(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"static": [[1, 2, 3]]}', encoding="utf-8")
        with pytest.raises(SidecarError):
            TrackSidecar.load(str(bad))

    def test_corner_order_rejected(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"static": [[5, 0, 1, 1]]}', encoding="utf-8")
        with pytest.raises(SidecarError):
            TrackSidecar.load(str(bad))


class TestCli:
    def test_stream_to_stdout(self, fixture_video, capsys):
        assert main(["--video", fixture_video, "--model", "none"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 11

    def test_output_file(self, fixture_video, tmp_path):
        out = tmp_path / "stream.jsonl"
        assert main(["--video", fixture_video, "--out", str(out), "--frames", "5"]) == 0
        assert len(out.read_text().splitlines()) == 6

    def test_error_json_on_missing_video(self, tmp_path, capsys):
        code = main(["--video", str(tmp_path / "nope.avi")])
        assert code == 3
        err = json.loads(capsys.readouterr().err)
        assert err["error"]["kind"] == "video_unreadable"

    def test_error_json_on_bad_model(self, fixture_video, capsys):
        code = main(["--video", fixture_video, "--model", "not-a-model"])
        assert code == 4
        err = json.loads(capsys.readouterr().err)
        assert err["error"]["kind"] == "model_load_failed"

    def test_bad_map_is_usage_error(self, fixture_video, capsys):
        assert main(["--video", fixture_video, "--map", "nonsense"]) == 2

    def test_determinism(self, tmp_path):
        video = write_fixture_video(tmp_path / "clip.avi")
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert main(["--video", video, "--out", str(a)]) == 0
        assert main(["--video", video, "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
