"""Numeric kernel backend selection.

The environment variable ``STREAMMTL_BACKEND`` picks the implementation at
import time:

* ``auto`` (default): the compiled backend if numba imports, else numpy.
* ``numba``: require the compiled backend; raise if numba is unavailable.
* ``numpy``: force the pure-numpy fallback.

Callers should use the module-level names (``kernels.step_w`` etc.) so a
monkeypatched or re-selected backend takes effect; ``active_backend()``
reports which one is live.
"""

from __future__ import annotations

import os

from . import numpy_impl

ENV_VAR = "STREAMMTL_BACKEND"

_KERNEL_NAMES = (
    "decision_value",
    "hinge_loss",
    "hinge_subgradient",
    "step_w",
    "step_u",
    "step_v",
    "step_z",
    "mix_step",
    "total_hinge",
    "oracle_fit",
)


def _select():
    choice = os.environ.get(ENV_VAR, "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"{ENV_VAR} must be one of auto/numba/numpy, got {choice!r}"
        )
    if choice == "numpy":
        return numpy_impl, "numpy"
    try:
        from . import numba_impl
    except ImportError:
        if choice == "numba":
            raise
        return numpy_impl, "numpy"
    return numba_impl, "numba"


_impl, _name = _select()


def active_backend() -> str:
    return _name


def warm_up() -> None:
    """Run every kernel once on tiny inputs.

    With the compiled backend this forces JIT compilation up front so the
    first measured round does not pay the compile cost; with the numpy
    backend it is a no-op beyond a few microseconds.
    """
    import numpy as np

    w = np.array([0.5, -0.25])
    x = np.array([1.0, 2.0])
    stack = np.stack([w, x])
    eye = np.eye(2)
    decision_value(w, x)
    hinge_loss(w, x, 1.0)
    hinge_subgradient(w, x, 1.0)
    step_w(w, w, w, w, x, 0.1, 1.0)
    step_u(stack, stack, 0.1, 0.01, 0.1, 0.01)
    step_v(w, x, stack, eye, 0, 0.1, 0.01, 0.1, 0.01, 0.01)
    step_z(w, x, w, x, 0.1)
    mix_step(stack, np.array([0.5, 0.5]), x, 0.1)
    total_hinge(stack, np.array([1.0, -1.0]), w)
    oracle_fit(stack, np.array([1.0, -1.0]), 2, 1.0)


decision_value = _impl.decision_value
hinge_loss = _impl.hinge_loss
hinge_subgradient = _impl.hinge_subgradient
step_w = _impl.step_w
step_u = _impl.step_u
step_v = _impl.step_v
step_z = _impl.step_z
mix_step = _impl.mix_step
total_hinge = _impl.total_hinge
oracle_fit = _impl.oracle_fit

__all__ = ["ENV_VAR", "active_backend", "warm_up", *_KERNEL_NAMES]
