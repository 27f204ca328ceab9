"""Access to the agent models shipped with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .model import AgentModel, load_model


def model_path(name: str = "joi") -> Path:
    """Filesystem path of a bundled model file."""
    with resources.as_file(resources.files("korra.data").joinpath(f"{name}.json")) as path:
        return Path(path)


def demo_model(name: str = "joi") -> AgentModel:
    return load_model(model_path(name))
