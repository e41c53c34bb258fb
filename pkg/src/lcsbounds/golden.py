"""Published lower bounds used as regression fixtures.

``BINARY`` maps ell to the bound on gamma_{2,2}; ``GENERAL`` maps
``(sigma, d, ell)`` to the bound on gamma_{sigma,d}. Values carry six
decimals as published, some truncated and some rounded, so comparisons use
``TOLERANCE``.
"""

TOLERANCE = 2e-6

BINARY = {
    1: 0.666666, 2: 0.727272, 3: 0.747922, 4: 0.758576, 5: 0.765446,
    6: 0.770273, 7: 0.773975, 8: 0.776860, 9: 0.779259, 10: 0.781281,
    11: 0.783005, 12: 0.784515, 13: 0.785841, 14: 0.787017, 15: 0.788071,
    16: 0.789021, 17: 0.789882, 18: 0.790668, 19: 0.791389, 20: 0.792052,
    21: 0.792665,
}

# ell -> {d: [values for sigma = 2, 3, ...]}
_GENERAL_ROWS = {
    1: {
        2: [0.666666, 0.500000, 0.400000, 0.333333, 0.285714, 0.250000, 0.222222, 0.200000, 0.181818],
        3: [0.666666, 0.488372, 0.384615, 0.317073, 0.269662, 0.234567, 0.207547, 0.186104, 0.168674],
        4: [0.666666, 0.450000, 0.352583, 0.289398, 0.245283, 0.212786, 0.187869, 0.168164, 0.152193],
        5: [0.666666, 0.432494, 0.335517, 0.273884, 0.231234, 0.200004],
        6: [0.592592, 0.421434, 0.324014, 0.263369],
        7: [0.592592, 0.413611, 0.317032],
        8: [0.579185, 0.405539],
        9: [0.579185, 0.400949],
        10: [0.570155],
        11: [0.570155],
        12: [0.563566],
        13: [0.563566],
        14: [0.558494],
        15: [0.558494],
    },
    2: {
        2: [0.727273, 0.620690, 0.542373, 0.480769, 0.431138, 0.390438, 0.356545, 0.327935, 0.303490],
        3: [0.673913, 0.516896, 0.421518, 0.356717, 0.309424, 0.273275, 0.244710, 0.221555, 0.202402],
        4: [0.643216, 0.484937, 0.389008, 0.324338, 0.277835, 0.242798],
        5: [0.626506, 0.461402, 0.365329, 0.302236],
        6: [0.610925, 0.445434, 0.349848],
        7: [0.602493, 0.434514],
        8: [0.594016, 0.425774],
        9: [0.587900],
        10: [0.582349],
        11: [0.578464],
        12: [0.574269],
        13: [0.571067],
    },
    3: {
        2: [0.747922, 0.644966, 0.573254, 0.521091, 0.479452, 0.444577, 0.414651, 0.388537, 0.365485],
        3: [0.687410, 0.545373, 0.457311, 0.394945, 0.347798],
        4: [0.651309, 0.498525, 0.405702],
        5: [0.632165, 0.474304],
        6: [0.617761],
        7: [0.607261],
        8: [0.598782],
        9: [0.592177],
    },
    4: {
        2: [0.758576, 0.657642, 0.589484, 0.539129, 0.499229, 0.466481, 0.438799, 0.414876, 0.393811],
        3: [0.692950, 0.556649, 0.472979],
        4: [0.657241, 0.509237],
        5: [0.636022],
        6: [0.621057],
    },
    5: {
        2: [0.765446, 0.665874, 0.599248, 0.549817],
        3: [0.697737, 0.564841],
        4: [0.661274],
        5: [0.639248],
    },
    6: {2: [0.770273, 0.671697, 0.605786], 3: [0.701317], 4: [0.664722]},
    7: {2: [0.773975, 0.676041, 0.610590], 3: [0.704473]},
    8: {2: [0.776860, 0.679441, 0.614333], 3: [0.707165]},
    9: {2: [0.779259, 0.682218], 3: [0.709501]},
    10: {2: [0.781281], 3: [0.711548]},
}

GENERAL = {
    (sigma, d, ell): value
    for ell, rows in _GENERAL_ROWS.items()
    for d, values in rows.items()
    for sigma, value in enumerate(values, start=2)
}


def general_cells(max_states=1 << 20):
    """Fixture cells whose vectors have at most ``max_states`` coordinates, smallest first."""
    cells = [
        (key, value) for key, value in GENERAL.items()
        if key[0] ** (key[1] * key[2]) <= max_states
    ]
    return sorted(cells, key=lambda kv: (kv[0][0] ** (kv[0][1] * kv[0][2]), kv[0]))
