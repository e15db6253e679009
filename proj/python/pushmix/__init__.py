"""Complementary push recommendations with a mixture of logistic experts."""

import json

from ._pushmix import *  # noqa: F401,F403
from ._pushmix import generate_direct as _generate_direct
from ._pushmix import generate_world as _generate_world

__all__ = [name for name in dir() if not name.startswith("_")]


def _spec_text(spec):
    if spec is None:
        return "{}"
    return spec if isinstance(spec, str) else json.dumps(spec)


def generate_world(spec=None):
    """Synthetic world from a spec dict or JSON string; defaults when omitted."""
    return _generate_world(_spec_text(spec))


def generate_direct(spec=None):
    """(dataset, planted params, contexts) from a direct-mode spec."""
    text = _spec_text(spec)
    doc = json.loads(text)
    doc.setdefault("mode", "direct")
    return _generate_direct(json.dumps(doc))
