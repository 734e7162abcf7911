from contextlib import contextmanager
from contextvars import ContextVar

from django.conf import settings

_scoped = ContextVar('quantum_games_overrides', default={})


def get(key, override=None):
    """Return an explicit override, a scoped override, or the QUANTUM_GAMES setting."""
    if override is not None:
        return override
    scoped = _scoped.get()
    if key in scoped:
        return scoped[key]
    return settings.QUANTUM_GAMES[key]


@contextmanager
def overrides(values):
    """Scope QUANTUM_GAMES overrides (a definition's ``tolerances``) to a block."""
    unknown = set(values) - set(settings.QUANTUM_GAMES)
    if unknown:
        raise KeyError(f"unknown QUANTUM_GAMES keys: {sorted(unknown)}")
    token = _scoped.set({**_scoped.get(), **values})
    try:
        yield
    finally:
        _scoped.reset(token)
