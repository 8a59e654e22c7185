"""plens: profiling and curation toolkit for image-text datasets.

Quantifies how much of a caption is transcribed from text embedded in the
image pixels, and provides the surrounding machinery: dataset ingestion,
caption/OCR matching, embedding clustering, text-removal image variants,
synthetic text probes, relative scoring, curation filters and reports.
"""

__version__ = "0.1.0"
