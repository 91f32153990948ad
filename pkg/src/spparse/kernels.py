"""Backend selection for the lexical search kernel.

The compiled extension is used when it was built; otherwise the pure-Python
loop is used. Both return identical results.
"""

from . import _lexical_py

try:
    from . import _lexical_kernel
except ImportError:  # extension not built
    _lexical_kernel = None

BACKENDS = {"python": _lexical_py.lexical_sssp}
if _lexical_kernel is not None:
    BACKENDS["compiled"] = _lexical_kernel.lexical_sssp

BACKEND = "compiled" if "compiled" in BACKENDS else "python"


def lexical_sssp(*args, backend: str | None = None):
    name = backend or BACKEND
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {', '.join(sorted(BACKENDS))}")
    return BACKENDS[name](*args)
