"""Bundled test networks and evidence files."""

from importlib import resources
from pathlib import Path

from ..fileformat import load_evidence, load_network
from ..network import BeliefNetwork, Evidence

BUNDLED = (
    "deterministic.net",
    "deterministic-e-true.ev",
    "cooper-standin.net",
    "cooper-evidence.ev",
)


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise KeyError(f"no bundled file {name!r}; available: {BUNDLED}")
    with resources.as_file(resources.files(__package__) / name) as p:
        return Path(p)


def load_bundled_network(name: str) -> BeliefNetwork:
    return load_network(bundled_path(name).read_text())


def load_bundled_evidence(name: str, net: BeliefNetwork) -> Evidence:
    return load_evidence(bundled_path(name).read_text(), net)
