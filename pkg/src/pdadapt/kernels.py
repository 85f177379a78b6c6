"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise, or
when ``PDADAPT_PURE_PYTHON`` is set to a non-empty value other than ``0``,
the pure-Python ``_fallback`` module is used. ``BACKEND`` names the active one.
"""

import os

from . import _fallback

SQUARED = _fallback.SQUARED
LOGISTIC = _fallback.LOGISTIC

_force_pure = os.environ.get("PDADAPT_PURE_PYTHON", "") not in ("", "0")

if _force_pure:
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _fallback
        BACKEND = "python"
    else:
        BACKEND = "cython"

spdc_epoch = _impl.spdc_epoch
svrg_epoch = _impl.svrg_epoch
saga_epoch = _impl.saga_epoch
logistic_prox = _impl.logistic_prox


def backend(name):
    """Return the kernel module called ``name`` (``"python"`` or ``"cython"``)."""
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def loss_code(loss):
    codes = {"squared": SQUARED, "logistic": LOGISTIC}
    try:
        return codes[loss.name]
    except KeyError:
        raise ValueError(f"no kernel for loss {loss.name!r}") from None


def reg_weights(reg):
    """``(l1, l2)`` weights of the regularizer as the kernels expect them."""
    return getattr(reg, "lam1", 0.0), reg.lam
