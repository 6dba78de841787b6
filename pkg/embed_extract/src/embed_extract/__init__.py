"""embed-extract: listing photos in, scene labels plus embedding vectors out."""

__version__ = "0.1.0"

from .backends import BACKENDS, BuiltinBackend, classify_scene, make_backend  # noqa: F401
from .extractor import ExtractStats, ManifestError, extract, read_manifest  # noqa: F401
