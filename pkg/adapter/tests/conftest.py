import numpy as np
import pytest


def write_fixture_video(path, n_frames=10, width=64, height=48, fps=10.0):
    """Dark scene with a bright block that starts moving mid-clip."""
    import cv2

    writer = cv2.VideoWriter(
        str(path), cv2.VideoWriter_fourcc(*"MJPG"), fps, (width, height)
    )
    assert writer.isOpened(), "fixture video writer failed to open"
    for k in range(n_frames):
        frame = np.full((height, width, 3), 16, np.uint8)
        if k >= 3:  # give the background model a few frames, then move
            x = 8 + 3 * k
            frame[12:32, x : x + 14] = 230
        writer.write(frame)
    writer.release()
    return str(path)


@pytest.fixture(scope="session")
def fixture_video(tmp_path_factory):
    path = tmp_path_factory.mktemp("video") / "clip.avi"
    return write_fixture_video(path)


@pytest.fixture(scope="session")
def track_sidecar_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("sidecar") / "track.json"
    path.write_text(
        '{"static": [[28.0, 0.0, 36.0, 48.0]], "frames": {"0": [[30.0, 0.0, 34.0, 48.0]]}}',
        encoding="utf-8",
    )
    return str(path)
