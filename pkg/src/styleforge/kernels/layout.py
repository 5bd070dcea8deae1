"""Packed array layouts shared by the numpy and numba kernel backends.

Track geometry is flattened into one float64 row per segment so the hot
queries (nearest-centerline, observation rendering) can run without touching
Python objects.  Column meanings:

    0  kind        0.0 = straight, 1.0 = arc
    1  s_start     arc-length at segment start
    2  length      segment arc length
    3  x0, 4 y0    start point
    5  heading0    heading at segment start
    6  curvature   0 on straights, +1/R left arcs, -1/R right arcs
    7  cx, 8 cy    arc center (unused for straights)
    9  alpha0      angle of the start point as seen from the arc center
    10 dx, 11 dy   unit direction (cos/sin of heading0, for straights)
"""

K_KIND = 0
K_SSTART = 1
K_LEN = 2
K_X0 = 3
K_Y0 = 4
K_H0 = 5
K_KAPPA = 6
K_CX = 7
K_CY = 8
K_A0 = 9
K_DX = 10
K_DY = 11

SEG_COLS = 12
