"""Model-export adapters for the image-text profiling pipeline.

Three standalone exporters turn a pair manifest plus images into the
pipeline's interchange files — embeddings, OCR spans, and variant scores —
using deterministic reference engines that real models can replace.
"""

from .export import (
    AdapterConfig,
    ExportSummary,
    export_embeddings,
    export_ocr,
    export_scores,
)

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "ExportSummary",
    "export_embeddings",
    "export_ocr",
    "export_scores",
    "__version__",
]
