"""BLAS thread pinning for bit-reproducible results.

Threaded GEMM in OpenBLAS-style backends changes the summation order with
the thread count, so the same computation can return different last bits on
different machines or under different thread caps. Every numerically
sensitive entry point in this package therefore runs on a fixed
single-threaded BLAS schedule; the ADAAM_THREADS environment variable can
cap parallelism elsewhere in the process without changing results.
"""

from functools import wraps

from threadpoolctl import threadpool_limits

_PINNED_THREADS = 1


def pinned_blas(func):
    """Decorate ``func`` to run under a fixed BLAS thread count."""

    @wraps(func)
    def wrapper(*args, **kwargs):
        with threadpool_limits(limits=_PINNED_THREADS, user_api="blas"):
            return func(*args, **kwargs)

    return wrapper
