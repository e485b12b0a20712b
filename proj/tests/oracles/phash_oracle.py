#!/usr/bin/env python3
"""Independent box-filter dHash reference for the frozen values in test_phash.cpp.

Works in real-valued pixel coordinates with exact fractions: target cell j of
an axis of length n spans [j*n/9, (j+1)*n/9); a cell value is the exact area
mean of the gray image over that rectangle, truncated.
"""
from fractions import Fraction


def pixel(x, y, c):
    return (x * 37 + y * 91 + x * y * 13 + c * 71) % 256


def luma(r, g, b):
    return (299 * r + 587 * g + 114 * b + 500) // 1000


def overlap(a0, a1, b0, b1):
    return max(Fraction(0), min(a1, b1) - max(a0, b0))


def grid_of(gray, w, h):
    out = []
    for r in range(9):
        y0, y1 = Fraction(r * h, 9), Fraction((r + 1) * h, 9)
        row = []
        for c in range(9):
            x0, x1 = Fraction(c * w, 9), Fraction((c + 1) * w, 9)
            total = Fraction(0)
            for y in range(h):
                oy = overlap(y0, y1, y, y + 1)
                if not oy:
                    continue
                for x in range(w):
                    ox = overlap(x0, x1, x, x + 1)
                    if ox:
                        total += ox * oy * gray[y][x]
            area = (x1 - x0) * (y1 - y0)
            row.append(int(total / area))
        out.append(row)
    return out


def dhash(g):
    rows = ''.join('1' if g[r][c] < g[r][c + 1] else '0' for r in range(8) for c in range(8))
    cols = ''.join('1' if g[r][c] < g[r + 1][c] else '0' for c in range(8) for r in range(8))
    return '%016x%016x' % (int(rows, 2), int(cols, 2))


W, H = 23, 17
gray = [[luma(pixel(x, y, 0), pixel(x, y, 1), pixel(x, y, 2)) for x in range(W)] for y in range(H)]
g = grid_of(gray, W, H)
print('rgb 23x17 grid:')
for row in g:
    print('  ', row)
print('rgb 23x17 key:', dhash(g))
