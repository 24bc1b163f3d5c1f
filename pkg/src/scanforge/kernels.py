"""Prefix-scan kernels, generic over any store and any associative operator.

Every kernel is an in-place instruction stream of the single update shape

    store.put(i, op(store.get(j), store.get(i)))   with j < i

so the same code computes concrete scans, records access traces, or runs
in parallel depending on what the store hands back.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional

from .stores import ScanStore


def iceil_log2(n: int) -> int:
    """Exact ceil(log2(n)) for n >= 1 via bit arithmetic (0 for n == 0)."""
    if n <= 0:
        return 0
    return (n - 1).bit_length()


def scan_serial(store: ScanStore, op: Callable) -> ScanStore:
    """Left-to-right cumulative reduction; n-1 operator applications."""
    for i in range(2, len(store) + 1):
        store.put(i, op(store.get(i - 1), store.get(i)))
    return store


def scan_brent_kung_8(store: ScanStore, op: Callable) -> ScanStore:
    """The fixed-width double-tree scan, written out row by row for n = 8."""
    if len(store) != 8:
        raise ValueError("length 8 only")
    for i in (2, 4, 6, 8):
        store.put(i, op(store.get(i - 1), store.get(i)))
    for i in (4, 8):
        store.put(i, op(store.get(i - 2), store.get(i)))
    for i in (8,):
        store.put(i, op(store.get(i - 4), store.get(i)))
    for i in (6,):
        store.put(i, op(store.get(i - 2), store.get(i)))
    for i in (3, 5, 7):
        store.put(i, op(store.get(i - 1), store.get(i)))
    return store


def scan_brent_kung(store: ScanStore, op: Callable) -> ScanStore:
    """General double-tree scan: a reduce tree followed by a broadcast tree.

    Loop bounds are kept in the min(l, 2**k) form even where an iteration
    range comes out empty; non-power-of-two lengths need no padding.
    """
    l = len(store)
    k = iceil_log2(l)
    # The "reduce" tree
    for j in range(1, k + 1):
        for i in range(2 ** j, min(l, 2 ** k) + 1, 2 ** j):
            store.put(i, op(store.get(i - 2 ** (j - 1)), store.get(i)))
    # The "broadcast" tree
    for j in range(k - 1, 0, -1):
        for i in range(3 * 2 ** (j - 1), min(l, 2 ** k) + 1, 2 ** j):
            store.put(i, op(store.get(i - 2 ** (j - 1)), store.get(i)))
    return store


class _ScheduleStore:
    """Minimal store that records (source, target) pairs instead of values.

    Used to extract the chunk-level Brent-Kung schedule without pulling in
    the full tracing machinery.
    """

    def __init__(self, n: int):
        self.n = n
        self._reads: list[int] = []
        self.pairs: list[tuple[int, int]] = []

    def __len__(self) -> int:
        return self.n

    def get(self, i: int):
        self._reads.append(i)
        return None

    def put(self, i: int, v) -> None:
        self.pairs.append((self._reads[0], i))
        self._reads.clear()


def chunk_schedule(nchunks: int) -> list[tuple[int, int]]:
    """(left, target) chunk pairs in the order scan_brent_kung combines them."""
    sched = _ScheduleStore(nchunks)
    scan_brent_kung(sched, lambda a, b: None)
    return sched.pairs


def scan_then_fan(store: ScanStore, op: Callable, chunks: int) -> ScanStore:
    """Chunked scan: serial scan per chunk, then Brent-Kung over the chunks.

    The chunk-level pass combines chunks by offsetting every element of the
    target chunk with the last element of the source chunk, expanded here
    into per-element store updates so the whole kernel stays a stream of
    two-read/one-write transactions.
    """
    if chunks < 1:
        raise ValueError("chunks must be >= 1")
    n = len(store)
    if n == 0:
        return store
    size = -(-n // chunks)
    bounds = [(lo, min(lo + size - 1, n)) for lo in range(1, n + 1, size)]
    for lo, hi in bounds:
        for i in range(lo + 1, hi + 1):
            store.put(i, op(store.get(i - 1), store.get(i)))
    for left, target in chunk_schedule(len(bounds)):
        src = bounds[left - 1][1]
        lo, hi = bounds[target - 1]
        for i in range(lo, hi + 1):
            store.put(i, op(store.get(src), store.get(i)))
    return store


@dataclass(frozen=True)
class ScanKernel:
    """A named scan kernel: apply(store, op) mutates and returns the store."""

    name: str
    fn: Callable[[ScanStore, Callable], ScanStore]
    fixed_length: Optional[int] = None

    def apply(self, store: ScanStore, op: Callable) -> ScanStore:
        return self.fn(store, op)

    def __call__(self, store: ScanStore, op: Callable) -> ScanStore:
        return self.fn(store, op)


SERIAL = ScanKernel("serial", scan_serial)
BRENT_KUNG = ScanKernel("brent-kung", scan_brent_kung)
BRENT_KUNG_8 = ScanKernel("brent-kung-8", scan_brent_kung_8, fixed_length=8)


def scan_then_fan_kernel(chunks: int) -> ScanKernel:
    return ScanKernel(
        f"scan-then-fan[{chunks}]",
        lambda store, op, c=chunks: scan_then_fan(store, op, c),
    )


KERNEL_NAMES = ("serial", "brent-kung", "brent-kung-8", "scan-then-fan")


def get_kernel(name: str, chunks: int = 4) -> ScanKernel:
    if name == "serial":
        return SERIAL
    if name == "brent-kung":
        return BRENT_KUNG
    if name == "brent-kung-8":
        return BRENT_KUNG_8
    if name == "scan-then-fan":
        return scan_then_fan_kernel(chunks)
    raise KeyError(f"unknown kernel {name!r}; choose from {', '.join(KERNEL_NAMES)}")
