"""Inductive structural node embeddings from distance-degree locality
encodings, with unsupervised (random-walk skip-gram) and supervised
(joint multi-label) training plus evaluation protocols.

Submodules are imported lazily so the CLI can configure the numerical
environment before numpy loads.
"""

__version__ = "0.1.0"

_SUBMODULES = (
    "graph", "encoder", "embedding", "walks", "unsupervised", "supervised",
    "metrics", "clustering", "centrality", "benchmark", "pipelines",
    "config", "cli",
)


def __getattr__(name):
    if name in _SUBMODULES:
        import importlib
        return importlib.import_module(f"structembed.{name}")
    raise AttributeError(f"module 'structembed' has no attribute {name!r}")
