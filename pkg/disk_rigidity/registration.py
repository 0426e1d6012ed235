"""
Experiment registry: ids mapped to "module:attribute" entry points, resolved lazily on make().
"""
import importlib
from dataclasses import dataclass


@dataclass
class ExperimentSpec:
    id: str
    entry_point: str
    description: str = ""

    def load(self):
        module_name, attribute = self.entry_point.split(":")
        return getattr(importlib.import_module(module_name), attribute)


registry = {}


def register(id, entry_point, description=""):
    if id in registry:
        raise ValueError(f"experiment '{id}' is already registered")
    registry[id] = ExperimentSpec(id, entry_point, description)


def make(id):
    if id not in registry:
        raise KeyError(f"no experiment registered as '{id}', available: {sorted(registry)}")
    return registry[id].load()
