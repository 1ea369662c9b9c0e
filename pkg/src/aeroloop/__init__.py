"""Black-box refinement loop steering a prompt-generating model toward
3D shapes that score well on drag, domain alignment, and geometric novelty.

The package is organized around the evaluation pipeline:

- :mod:`aeroloop.mesh` / :mod:`aeroloop.shapes` — triangle meshes, repair,
  diagnostics, procedural fixtures.
- :mod:`aeroloop.render` — orthographic ray-traced multi-view images.
- :mod:`aeroloop.physics` / :mod:`aeroloop.simcase` — Newtonian panel
  surrogate and the external-simulator exchange.
- :mod:`aeroloop.semantics` / :mod:`aeroloop.novelty` — embedding-based
  alignment scores and multi-view geometric novelty.
- :mod:`aeroloop.objective` — combined candidate objective and benchmark
  metrics.
- :mod:`aeroloop.loop` — the iterative propose/evaluate/select engine.
- :mod:`aeroloop.backends` — wire protocol, HTTP clients, offline mocks.
- :mod:`aeroloop.service` / :mod:`aeroloop.cli` — FastAPI surface and the
  thin command-line client.
"""

__version__ = "0.1.0"
