"""Pure-Python closed-walk enumeration (fallback for :mod:`fklab._kernels`)."""
import numpy as np


def closed_walk_counts(nbr, deg, adj, occ, kmax):
    n = len(deg)
    counts = np.zeros((kmax + 1, kmax + 1), dtype=np.int64)
    if kmax < 2:
        return counts
    neighbors = [[int(nbr[x, i]) for i in range(deg[x])] for x in range(n)]
    empty = [1 - int(v) for v in occ]
    adjacent = [set(row) for row in neighbors]
    table = [[0] * (kmax + 1) for _ in range(kmax + 1)]

    for start in range(n):
        closes = [start in adjacent[y] for y in range(n)]
        # stack of (site, walk length, empties so far)
        stack = [(start, 1, empty[start])]
        while stack:
            x, length, m = stack.pop()
            if length == kmax:
                continue
            for y in neighbors[x]:
                my = m + empty[y]
                if closes[y]:
                    table[length + 1][my] += 1
                stack.append((y, length + 1, my))

    counts[:, :] = table
    return counts
