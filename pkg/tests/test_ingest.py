import io
import json
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from railguard.errors import InvalidResample, OrderError, ParseError, SchemaError
from railguard.geometry import BoundingBox
from railguard.ingest import (
    Detection,
    FrameRecord,
    StreamHeader,
    check_normalization,
    dump_stream,
    parse_stream,
    resample_indices,
    write_stream,
)

from helpers import random_stream


def oracle_resample(n, m):
    """Round-half-up resampling via exact rationals, independent loop."""
    if m == 1:
        return [0]
    out = []
    for k in range(m):
        x = Fraction(k * (n - 1), m - 1)
        out.append(int(math.floor(x + Fraction(1, 2))))
    return out


class TestResampleIndices:
    def test_even_stride(self):
        assert resample_indices(5, 3) == [0, 2, 4]

    def test_identity_when_equal(self):
        assert resample_indices(7, 7) == [0, 1, 2, 3, 4, 5, 6]

    def test_single_target(self):
        assert resample_indices(9, 1) == [0]

    def test_paper_fixture_1800_to_1000(self):
        indices = resample_indices(1800, 1000)
        assert len(indices) == 1000
        assert indices[0] == 0
        assert indices[-1] == 1799
        assert all(b > a for a, b in zip(indices, indices[1:]))
        # interior values against the stated rounding formula, recomputed
        # with exact rational arithmetic
        assert indices == oracle_resample(1800, 1000)

    @pytest.mark.parametrize("n,m", [(5, 6), (0, 1), (5, 0), (0, 0)])
    def test_invalid_inputs(self, n, m):
        with pytest.raises(InvalidResample):
            resample_indices(n, m)

    @given(st.integers(1, 5000), st.data())
    def test_shape_properties(self, n, data):
        m = data.draw(st.integers(1, n))
        indices = resample_indices(n, m)
        assert len(indices) == m
        assert indices[0] == 0
        assert all(0 <= i <= n - 1 for i in indices)
        assert all(b > a for a, b in zip(indices, indices[1:]))
        if m >= 2:
            assert indices[-1] == n - 1
        assert indices == oracle_resample(n, m)


class TestCheckNormalization:
    def test_boundary_inclusive_pass(self):
        assert check_normalization([0.0, 0.5, 1.0]) is True

    def test_raw_intensity_fails(self):
        assert check_normalization([128.0]) is False

    def test_nan_fails(self):
        assert check_normalization([0.5, math.nan]) is False

    def test_eightbit_division_always_passes(self):
        # oracle: divide random 8-bit values by the 255 maximum
        rng = random.Random(3)
        for _ in range(100):
            raw = [rng.randint(0, 255) for _ in range(64)]
            assert check_normalization([v / 255 for v in raw]) is True

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            check_normalization([])


HEADER_LINE = '{"type":"header","source_id":"cam","frame_width":640,"frame_height":480,"fps":30.0}'


def frame_line(index, ts=None, detections="[]", extra=""):
    ts = index * 33 if ts is None else ts
    return (
        f'{{"type":"frame","frame_index":{index},"timestamp_ms":{ts},'
        f'"detections":{detections}{extra}}}'
    )


class TestParseStream:
    def test_happy_path(self):
        det = '[{"class":"person","bbox":[1.0,2.0,3.0,4.0],"confidence":0.75}]'
        header, frames = parse_stream([HEADER_LINE, frame_line(0, detections=det), frame_line(1)])
        assert header == StreamHeader("cam", 640, 480, 30.0)
        records = list(frames)
        assert len(records) == 2
        assert records[0].detections[0] == Detection(
            "person", BoundingBox(1.0, 2.0, 3.0, 4.0), 0.75
        )

    def test_streaming_is_lazy(self):
        def lines():
            yield HEADER_LINE
            yield frame_line(0)
            raise AssertionError("must not be pulled before iteration")

        header, frames = parse_stream(lines())
        assert header.source_id == "cam"

    def test_order_error_on_frame_index(self):
        _, frames = parse_stream([HEADER_LINE, frame_line(0), frame_line(2, ts=70), frame_line(1, ts=99)])
        with pytest.raises(OrderError) as err:
            list(frames)
        assert err.value.line == 4

    def test_order_error_on_timestamp_regression(self):
        _, frames = parse_stream([HEADER_LINE, frame_line(0, ts=100), frame_line(1, ts=50)])
        with pytest.raises(OrderError):
            list(frames)

    def test_confidence_out_of_range_names_field(self):
        det = '[{"class":"person","bbox":[0,0,1,1],"confidence":1.5}]'
        _, frames = parse_stream([HEADER_LINE, frame_line(0, detections=det)])
        with pytest.raises(SchemaError, match="confidence"):
            list(frames)

    def test_unknown_class_rejected(self):
        det = '[{"class":"train","bbox":[0,0,1,1],"confidence":0.5}]'
        _, frames = parse_stream([HEADER_LINE, frame_line(0, detections=det)])
        with pytest.raises(SchemaError, match="class"):
            list(frames)

    def test_extra_field_rejected(self):
        _, frames = parse_stream([HEADER_LINE, frame_line(0, extra=',"note":"hi"')])
        with pytest.raises(SchemaError, match="unknown fields"):
            list(frames)

    def test_missing_field_rejected(self):
        _, frames = parse_stream([HEADER_LINE, '{"type":"frame","frame_index":0}'])
        with pytest.raises(SchemaError, match="missing fields"):
            list(frames)

    def test_bbox_corner_order_rejected(self):
        det = '[{"class":"person","bbox":[5,0,1,1],"confidence":0.5}]'
        _, frames = parse_stream([HEADER_LINE, frame_line(0, detections=det)])
        with pytest.raises(SchemaError, match="bbox"):
            list(frames)

    def test_malformed_json_has_line_number(self):
        _, frames = parse_stream([HEADER_LINE, frame_line(0), "{oops"])
        with pytest.raises(ParseError) as err:
            list(frames)
        assert err.value.line == 3

    def test_first_record_must_be_header(self):
        with pytest.raises(SchemaError, match="header"):
            parse_stream([frame_line(0)])

    def test_second_header_rejected(self):
        _, frames = parse_stream([HEADER_LINE, HEADER_LINE])
        with pytest.raises(SchemaError, match="second header"):
            list(frames)

    def test_empty_stream_rejected(self):
        with pytest.raises(ParseError, match="empty"):
            parse_stream([])

    def test_bool_is_not_an_integer(self):
        _, frames = parse_stream(
            [HEADER_LINE, '{"type":"frame","frame_index":true,"timestamp_ms":0,"detections":[]}']
        )
        with pytest.raises(SchemaError, match="frame_index"):
            list(frames)

    def test_fractional_frame_index_rejected(self):
        _, frames = parse_stream([HEADER_LINE, frame_line(0).replace('"frame_index":0', '"frame_index":0.5')])
        with pytest.raises(SchemaError, match="frame_index"):
            list(frames)

    def test_nonpositive_header_dimensions_rejected(self):
        bad = HEADER_LINE.replace('"frame_width":640', '"frame_width":0')
        with pytest.raises(SchemaError, match="dimensions"):
            parse_stream([bad])

    def test_intensity_digest_parsed(self):
        _, frames = parse_stream([HEADER_LINE, frame_line(0, extra=',"intensity_digest":[0.0,1.0]')])
        assert next(iter(frames)).intensity_digest == (0.0, 1.0)

    def test_intensity_digest_wrong_arity_rejected(self):
        _, frames = parse_stream([HEADER_LINE, frame_line(0, extra=',"intensity_digest":[0.5]')])
        with pytest.raises(SchemaError, match="intensity_digest"):
            list(frames)


class TestRoundTrip:
    def test_empty_frame_sequence_is_header_only(self):
        header = StreamHeader("s", 10, 10, 1.0)
        lines = list(write_stream(header, []))
        assert len(lines) == 1
        assert json.loads(lines[0])["type"] == "header"

    def test_parse_write_identity_small(self):
        header, frames = random_stream(seed=1, n_frames=20)
        lines = list(write_stream(header, frames))
        header2, parsed = parse_stream(lines)
        assert header2 == header
        assert list(parsed) == frames

    def test_write_parse_write_byte_identical_1000_frames(self):
        header, frames = random_stream(seed=42, n_frames=1000)
        text = "".join(line + "\n" for line in write_stream(header, frames))
        header2, parsed2 = parse_stream(io.StringIO(text))
        text2 = "".join(line + "\n" for line in write_stream(header2, parsed2))
        assert text2 == text

    @settings(max_examples=40)
    @given(st.integers(0, 10_000), st.integers(0, 60))
    def test_generative_round_trip(self, seed, n_frames):
        header, frames = random_stream(seed=seed, n_frames=n_frames)
        header2, parsed = parse_stream(write_stream(header, frames))
        assert header2 == header
        assert list(parsed) == frames

    def test_dump_stream_appends_newlines(self):
        header, frames = random_stream(seed=5, n_frames=3)
        buf = io.StringIO()
        dump_stream(header, frames, buf)
        text = buf.getvalue()
        assert text.endswith("\n")
        assert len(text.strip().splitlines()) == 4
