"""Detector backends.

Every backend consumes frames already normalized to [0, 1] (float32) and
returns (label, (x1, y1, x2, y2), confidence) tuples in its own label
vocabulary; the adapter maps labels onto the wire-format classes.

Backends:
  motion                 background-subtraction moving-object detector
                         (works offline, the default)
  torchvision:<name>     any torchvision detection model, e.g.
                         torchvision:fasterrcnn_resnet50_fpn (needs weights)
  none                   emits nothing (sidecar-only streams)
"""

from __future__ import annotations

import numpy as np

RawDetection = tuple[str, tuple[float, float, float, float], float]


class ModelLoadError(Exception):
    """The requested detector could not be constructed."""


class NullDetector:
    labels = ()

    def detect(self, frame: np.ndarray) -> list[RawDetection]:
        return []


class MotionDetector:
    """MOG2 background subtraction over normalized frames.

    Confidence is the foreground density inside the box, so compact solid
    movers score high and speckle scores low. The first `history` frames
    build the background model and rarely fire.
    """

    labels = ("moving",)

    def __init__(self, history: int = 8, var_threshold: float = 16.0, min_area_px: int = 24):
        import cv2

        self._cv2 = cv2
        # varThreshold is calibrated for 8-bit squared differences; rescale
        # for unit-range inputs
        self._subtractor = cv2.createBackgroundSubtractorMOG2(
            history=history,
            varThreshold=var_threshold / (255.0**2),
            detectShadows=False,
        )
        self.min_area_px = min_area_px

    def detect(self, frame: np.ndarray) -> list[RawDetection]:
        cv2 = self._cv2
        mask = self._subtractor.apply(frame)
        binary = (mask > 0).astype(np.uint8)
        binary = cv2.morphologyEx(binary, cv2.MORPH_OPEN, np.ones((3, 3), np.uint8))
        contours, _ = cv2.findContours(binary, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)
        out: list[RawDetection] = []
        for contour in contours:
            x, y, w, h = cv2.boundingRect(contour)
            if w * h < self.min_area_px:
                continue
            density = float(binary[y : y + h, x : x + w].mean())
            confidence = min(1.0, max(0.0, density))
            out.append(("moving", (float(x), float(y), float(x + w), float(y + h)), confidence))
        out.sort(key=lambda d: d[1])
        return out


class TorchvisionDetector:
    """Pretrained torchvision detection model over normalized frames."""

    def __init__(self, model_name: str):
        try:
            import torch
            import torchvision
        except ImportError as exc:
            raise ModelLoadError(f"torch/torchvision not installed: {exc}") from exc
        try:
            factory = getattr(torchvision.models.detection, model_name)
            weights_enum = torchvision.models.get_model_weights(factory).DEFAULT
            self._model = factory(weights=weights_enum).eval()
            self._categories = weights_enum.meta["categories"]
        except Exception as exc:
            raise ModelLoadError(f"cannot load torchvision model {model_name!r}: {exc}") from exc
        self._torch = torch
        self.labels = tuple(self._categories)

    def detect(self, frame: np.ndarray) -> list[RawDetection]:
        torch = self._torch
        tensor = torch.from_numpy(frame.transpose(2, 0, 1).copy())
        with torch.no_grad():
            [result] = self._model([tensor])
        out: list[RawDetection] = []
        for box, label_idx, score in zip(
            result["boxes"].tolist(), result["labels"].tolist(), result["scores"].tolist()
        ):
            label = self._categories[label_idx]
            x1, y1, x2, y2 = box
            out.append((label, (x1, y1, x2, y2), float(score)))
        return out


def build_detector(model_name: str):
    if model_name == "none":
        return NullDetector()
    if model_name == "motion":
        try:
            return MotionDetector()
        except ImportError as exc:
            raise ModelLoadError(f"opencv unavailable: {exc}") from exc
    if model_name.startswith("torchvision:"):
        return TorchvisionDetector(model_name.split(":", 1)[1])
    raise ModelLoadError(
        f"unknown model {model_name!r}; expected 'motion', 'none', or 'torchvision:<name>'"
    )
