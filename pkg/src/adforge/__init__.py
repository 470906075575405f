"""adforge: batch generation of two-product lifestyle ad images.

Pipeline: catalog ingestion -> product pairing (room type + camera-tilt
compatibility) -> layout generation on a 1024x1024 canvas -> masked
background inpainting with structural control -> VLM-judge evaluation.
All heavy models sit behind pluggable backends with deterministic mocks.
"""

__version__ = "0.1.0"
