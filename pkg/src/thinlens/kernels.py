"""Backend selection for the hot numerical kernels.

The compiled ``_ckernels`` module is used when it imports; otherwise, or
when ``THINLENS_BACKEND=python`` is set, the numpy implementation in
``_pykernels`` is used.  Both expose ``evaluate``, ``newton_multistart``
and ``aberth`` with identical signatures.
"""
import os

from . import _pykernels

python_backend = _pykernels

try:
    from . import _ckernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("THINLENS_BACKEND", "").lower() != "python":
    active = compiled_backend
else:
    active = python_backend

BACKEND = active.BACKEND


def use(name):
    """Switch the process-wide backend to ``"cython"`` or ``"python"``."""
    global active, BACKEND
    if name == "python":
        active = python_backend
    elif name == "cython":
        if compiled_backend is None:
            raise RuntimeError("compiled kernels are not built")
        active = compiled_backend
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = active.BACKEND
    return active


def evaluate(plan, z):
    return active.evaluate(plan, z)


def newton_multistart(plan, starts, w, maxit=60, tol=1e-10, zmax=float("inf")):
    return active.newton_multistart(plan, starts, complex(w), maxit, tol, zmax)


def aberth(coeffs, starts, maxit=500):
    return active.aberth(coeffs, starts, maxit)
