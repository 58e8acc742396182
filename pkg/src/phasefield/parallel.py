"""Bounded thread pool with order-preserving results."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_WORKERS = "PF_WORKERS"


def resolve_workers(requested=None):
    """Worker count: ``PF_WORKERS`` wins over ``requested``; at least 1."""
    env = os.environ.get(ENV_WORKERS)
    if env not in (None, ""):
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"{ENV_WORKERS} must be an integer, got {env!r}") from None
    return max(1, int(requested or 1))


def pmap(func, items, workers=1):
    """``[func(x) for x in items]`` across ``workers`` threads.

    Results come back in input order, so reductions over them do not
    depend on scheduling.
    """
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, items))
