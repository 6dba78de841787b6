"""Image encoders and the indoor/outdoor scene scorer.

The default backend is `builtin-v1`: a deterministic classical feature
encoder (colour histograms over image thirds plus a gradient-orientation
histogram) with a sky/vegetation heuristic for the scene label. It needs
no model download, produces identical bytes on every run, and its version
string is embedded in the name so output provenance is pinned.

A `resnet18` backend is available when torchvision and its pretrained
weights are present locally; it swaps in CNN features but keeps the same
scene heuristic and output contract.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

BUILTIN_VERSION = "builtin-v1"

# below this confidence the label is not worth committing to; the core
# pipeline treats unknown conservatively
CONFIDENCE_FLOOR = 0.6

_RESIZE = (64, 64)


def _to_array(image: Image.Image) -> np.ndarray:
    rgb = image.convert("RGB").resize(_RESIZE, Image.BILINEAR)
    return np.asarray(rgb, dtype=np.float64) / 255.0


def builtin_features(image: Image.Image) -> np.ndarray:
    """Deterministic 88-dim feature vector, L2-normalised.

    Colour histograms (8 bins per channel) over the top, middle, and
    bottom thirds catch layout (sky up top, floors down low); a 16-bin
    gradient orientation histogram catches texture.
    """
    arr = _to_array(image)
    h = arr.shape[0]
    thirds = (arr[: h // 3], arr[h // 3 : 2 * h // 3], arr[2 * h // 3 :])
    features: list[np.ndarray] = []
    for block in thirds:
        for channel in range(3):
            hist, _ = np.histogram(block[:, :, channel], bins=8, range=(0.0, 1.0))
            features.append(hist / block[:, :, channel].size)

    gray = arr.mean(axis=2)
    gy, gx = np.gradient(gray)
    magnitude = np.hypot(gx, gy)
    orientation = np.arctan2(gy, gx)
    hist, _ = np.histogram(orientation, bins=16, range=(-np.pi, np.pi), weights=magnitude)
    total = hist.sum()
    features.append(hist / total if total > 0 else hist)

    vector = np.concatenate(features)
    norm = np.linalg.norm(vector)
    if norm == 0.0:
        vector = np.ones_like(vector)
        norm = np.linalg.norm(vector)
    return vector / norm


def outdoor_probability(image: Image.Image) -> float:
    """Sky-and-vegetation heuristic for the probability an image is outdoor."""
    arr = _to_array(image)
    h = arr.shape[0]
    top = arr[: h // 3]
    r, g, b = arr[:, :, 0], arr[:, :, 1], arr[:, :, 2]
    tr, tg, tb = top[:, :, 0], top[:, :, 1], top[:, :, 2]

    brightness_top = (tr + tg + tb) / 3.0
    sky = (tb > tr + 0.04) & (tb > tg + 0.02) & (brightness_top > 0.45)
    sky_fraction = float(sky.mean())

    vegetation = (g > r + 0.04) & (g > b + 0.04)
    vegetation_fraction = float(vegetation.mean())

    warm = (r > b + 0.06) & ((r + g + b) / 3.0 > 0.15)
    warm_fraction = float(warm.mean())

    score = 0.5 + 0.9 * sky_fraction + 0.6 * vegetation_fraction - 0.55 * warm_fraction
    return float(np.clip(score, 0.0, 1.0))


def classify_scene(image: Image.Image) -> tuple[str, float]:
    """(label, confidence); labels are indoor/outdoor/unknown.

    Confidence is distance from an even call; below the floor the label
    degrades to unknown rather than guessing.
    """
    p = outdoor_probability(image)
    confidence = max(p, 1.0 - p)
    if confidence < CONFIDENCE_FLOOR:
        return "unknown", confidence
    return ("outdoor" if p >= 0.5 else "indoor"), confidence


class BuiltinBackend:
    """Self-contained encoder + scene scorer; no downloads, bit-stable."""

    name = BUILTIN_VERSION
    dim = 88

    def encode(self, image: Image.Image) -> np.ndarray:
        return builtin_features(image)

    def scene(self, image: Image.Image) -> tuple[str, float]:
        return classify_scene(image)


class Resnet18Backend:
    """CNN features from a locally cached pretrained resnet18.

    Raises a clear error when torchvision or its weight files are missing;
    nothing is downloaded implicitly. The scene label still comes from the
    builtin heuristic: the ImageNet head knows objects, not rooms.
    """

    name = "resnet18-imagenet1k-v1"
    dim = 512

    def __init__(self) -> None:
        try:
            import torch
            import torchvision
        except ImportError as exc:
            raise RuntimeError("resnet18 backend needs torch and torchvision installed") from exc
        try:
            weights = torchvision.models.ResNet18_Weights.IMAGENET1K_V1
            model = torchvision.models.resnet18(weights=weights)
        except Exception as exc:
            raise RuntimeError(
                "pretrained resnet18 weights unavailable locally; "
                "use the default builtin backend or pre-seed the torch hub cache"
            ) from exc
        model.fc = torch.nn.Identity()
        model.eval()
        self._torch = torch
        self._model = model
        self._preprocess = weights.transforms()

    def encode(self, image: Image.Image) -> np.ndarray:
        tensor = self._preprocess(image.convert("RGB")).unsqueeze(0)
        with self._torch.no_grad():
            features = self._model(tensor)[0].numpy().astype(np.float64)
        norm = np.linalg.norm(features)
        return features / norm if norm > 0 else features

    def scene(self, image: Image.Image) -> tuple[str, float]:
        return classify_scene(image)


BACKENDS = {
    "builtin": BuiltinBackend,
    "resnet18": Resnet18Backend,
}


def make_backend(name: str):
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choices: {sorted(BACKENDS)}")
    return BACKENDS[name]()
