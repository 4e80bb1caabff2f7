# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled weighted edit distance over integer symbol codes."""

from libc.stdlib cimport free, malloc


def weighted_edit_distance_codes(const long long[::1] a, const long long[::1] b):
    """Same contract as ``_editdist_py.weighted_edit_distance_codes``."""
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], i, j
    cdef long long dele, best, d
    cdef long long *prev = <long long *> malloc((m + 1) * sizeof(long long))
    cdef long long *cur = <long long *> malloc((m + 1) * sizeof(long long))
    cdef long long *ins = <long long *> malloc((m + 1) * sizeof(long long))
    cdef long long *tmp
    if prev == NULL or cur == NULL or ins == NULL:
        free(prev)
        free(cur)
        free(ins)
        raise MemoryError()
    try:
        ins[0] = 2
        for j in range(1, m + 1):
            ins[j] = 1 if j > 1 and b[j - 1] == b[j - 2] else 2
        prev[0] = 0
        for j in range(1, m + 1):
            prev[j] = prev[j - 1] + ins[j]
        for i in range(1, n + 1):
            dele = 1 if i > 1 and a[i - 1] == a[i - 2] else 2
            cur[0] = prev[0] + dele
            for j in range(1, m + 1):
                best = prev[j - 1] if a[i - 1] == b[j - 1] else prev[j - 1] + 2
                d = prev[j] + dele
                if d < best:
                    best = d
                d = cur[j - 1] + ins[j]
                if d < best:
                    best = d
                cur[j] = best
            tmp = prev
            prev = cur
            cur = tmp
        return prev[m]
    finally:
        free(prev)
        free(cur)
        free(ins)
