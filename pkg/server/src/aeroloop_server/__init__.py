"""Reference model server for the aeroloop backend protocol.

Implements the five /v1 endpoints (chat, text-to-3d, text/image embedding,
feature maps) wire-compatibly with the refinement engine's clients, backed
by deterministic built-in models, with adapter hooks for real pretrained
models where weights are available locally.
"""

__version__ = "0.1.0"
