"""Backend selection: compiled extension when built, numpy fallback otherwise.

Both backends implement the same two entry points with bit-identical
results (see the benchmark in benchmarks/bench_backends.py for the speed
difference). ``SCOTOSIM_BACKEND=python`` or ``=compiled`` forces a choice;
the default tries the extension and falls back silently.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels_np

_requested = os.environ.get("SCOTOSIM_BACKEND", "auto").lower()

if _requested in ("auto", "", "compiled", "cython"):
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested in ("compiled", "cython"):
            raise ImportError(
                "SCOTOSIM_BACKEND=compiled but the extension is not built; "
                "run `pip install -e . --no-build-isolation` or "
                "`python setup.py build_ext --inplace`"
            )
        _impl = _kernels_np
elif _requested == "python":
    _impl = _kernels_np
else:
    raise ImportError(f"unknown SCOTOSIM_BACKEND={_requested!r}")

BACKEND = _impl.NAME


def available_backends() -> dict:
    """Name -> module for every importable backend (used by benchmarks/tests)."""
    impls = {"python": _kernels_np}
    try:
        from . import _kernels  # type: ignore[attr-defined]

        impls["compiled"] = _kernels
    except ImportError:
        pass
    return impls


def invert_fixed_point(du, dv, tol: float, max_iter: int, impl=None):
    impl = impl or _impl
    du = np.ascontiguousarray(du, dtype=np.float64)
    dv = np.ascontiguousarray(dv, dtype=np.float64)
    return impl.invert_fixed_point(du, dv, tol, max_iter)


def gather_bilinear(src, xs, ys, threads: int = 1, impl=None):
    """Backend bilinear gather, optionally split across row blocks.

    Threaded and serial runs are bit-identical: blocks are disjoint output
    rows of a pure gather. Returns xs.shape + (C,).
    """
    impl = impl or _impl
    src = np.ascontiguousarray(src, dtype=np.float64)
    if threads <= 1 or xs.shape[0] < 2 * threads:
        return np.asarray(impl.gather_bilinear(src, xs, ys))
    out = np.empty(xs.shape + (src.shape[2],))
    bounds = np.linspace(0, xs.shape[0], threads + 1, dtype=int)
    def run(a, b):
        out[a:b] = impl.gather_bilinear(src, xs[a:b], ys[a:b])
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(lambda ab: run(*ab), zip(bounds[:-1], bounds[1:])))
    return out
