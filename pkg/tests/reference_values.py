"""Printed reference matrices for the three fixture families (frame order as in the fixtures)."""
from __future__ import annotations

Z6 = [0, 0, 0, 0, 0, 0]

N1_229 = [Z6, [1, 0, 0, 0, 0, 0], Z6, [0, 0, 1, 0, 0, 0], [0, 1, 0, 0, 0, 0], [0, 0, 0, 1, 0, 0]]
N2_229 = [Z6, Z6, [1, 0, 0, 0, 0, 0], [0, 1, 1, 0, 0, 0], [0, 0, -1, 0, 0, 0], [0, 0, 0, 1, 1, 0]]
Q_229 = [
    [0, 0, 0, 0, 0, 1],
    [0, 0, 0, -1, 0, 0],
    [0, 0, 0, -1, -1, 0],
    [0, 1, 1, 0, 0, 0],
    [0, 0, 1, 0, 0, 0],
    [-1, 0, 0, 0, 0, 0],
]

N1_238 = [Z6, [1, 0, 0, 0, 0, 0], Z6, [0, 3, 1, 0, 0, 0], Z6, [0, 0, 0, 3, 1, 0]]
N2_238 = [Z6, Z6, [1, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0], [0, 0, 0, 1, 0, 0]]
Q_238 = [
    [0, 0, 0, 0, 0, 1],
    [0, 0, 0, -1, 0, 0],
    [0, 0, 0, -3, -1, 0],
    [0, 1, 3, 0, 0, 0],
    [0, 0, 1, 0, 0, 0],
    [-1, 0, 0, 0, 0, 0],
]

N1_286 = [Z6, [1, 0, 0, 0, 0, 0], Z6, [0, 0, 1, 0, 0, 0], [0, 1, 0, 0, 0, 0], [0, 0, 0, 1, 2, 0]]
N2_286 = [Z6, Z6, [1, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0], Z6, [0, 0, 0, 0, 1, 0]]
Q_286 = [
    [0, 0, 0, 0, 0, 1],
    [0, 0, 0, -1, -2, 0],
    [0, 0, 0, 0, -1, 0],
    [0, 1, 0, 0, 0, 0],
    [0, 2, 1, 0, 0, 0],
    [-1, 0, 0, 0, 0, 0],
]

# cone tables; labels list the lead type first, alternatives in parentheses
CONES_229 = [
    "<III0|IV2|III0>",
    "<III0|IV2|IV1>",
    "<IV1|IV2(IV1)|IV1>",
    "<IV1|IV2(IV1)|IV1>",
    "<I1|IV2|IV1>",
]
CONES_238 = {
    ("D_v1", "D_v2"): "<IV1|IV2|III0>",
    ("D_v2", "E3"): "<III0|III0(IV2)|III0>",
    ("E1", "E2"): "<III0|III0(IV2)|III0>",
    ("E2", "E3"): "<III0|III0(IV2)|III0>",
    ("D_A", "E3"): "<I1|III0(IV2)|III0>",
    ("D_v1", "D_1"): "<IV1|IV2|I1>",
    ("D_v2", "D_v3"): "<III0|III0(IV2)|I1>",
    ("D_v3", "D_A"): "<I1|I2(I1)|I1>",
    ("D_v1", "D_v3"): "<IV1|IV2|I1>",
    ("D_A", "E0"): "<I1|III0(IV2)|III0>",
    ("D_1", "E0"): "<I1|III0(IV2)|III0>",
}
CONES_286 = {
    "sigma12": "<IV2|IV2|II1>",
    "sigma13": "<IV2|IV2|I1>",
    "sigma34": "<I1|I2|I1>",
    "sigma63": "<I1|I2|I1>",
    "sigma67": "<I1|I2|I1>",
    "sigma45": "<I1|II1|II0>",
    "sigma52": "<II0|II1|II1>",
}
