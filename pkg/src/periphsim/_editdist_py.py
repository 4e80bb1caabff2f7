"""Pure-Python weighted edit distance over integer symbol codes.

Used when the compiled ``_editdist`` extension is unavailable. Both
implementations must agree exactly; the test suite checks this.
"""


def weighted_edit_distance_codes(a, b):
    """Repetition-discounted edit distance from ``a`` to ``b``.

    Match 0, substitution 2. Deleting ``a[i]`` costs 1 when it equals
    ``a[i-1]``, inserting ``b[j]`` costs 1 when it equals ``b[j-1]``;
    every other insertion or deletion costs 2.
    """
    n, m = len(a), len(b)
    ins = [2] * (m + 1)
    for j in range(2, m + 1):
        if b[j - 1] == b[j - 2]:
            ins[j] = 1
    prev = [0] * (m + 1)
    for j in range(1, m + 1):
        prev[j] = prev[j - 1] + ins[j]
    for i in range(1, n + 1):
        ai = a[i - 1]
        dele = 1 if i > 1 and ai == a[i - 2] else 2
        cur = [prev[0] + dele] + [0] * m
        for j in range(1, m + 1):
            best = prev[j - 1] if ai == b[j - 1] else prev[j - 1] + 2
            d = prev[j] + dele
            if d < best:
                best = d
            d = cur[j - 1] + ins[j]
            if d < best:
                best = d
            cur[j] = best
        prev = cur
    return prev[m]
