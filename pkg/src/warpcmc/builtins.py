"""Catalog of builtin warping functions, weights, scenarios and verification suites."""

from __future__ import annotations

TAU_CATALOG = {
    "euclidean": {
        "tau": "t",
        "oracle": "phi(t) = t/m, C0 = inf m/t = 0 (reported at t_max, flagged)",
        "m_dependence": "phi scales as 1/m; ball quotient m/r",
        "provenance": "closed form",
    },
    "hyperbolic": {
        "tau": "sinh t",
        "oracle": "C0 = m - 1; m=2: phi(t) = tanh(t/2), quotient coth(r/2)",
        "m_dependence": "C0 = m - 1 for every m >= 2",
        "provenance": "closed form",
    },
    "spherical": {
        "tau": "sin t (t_max < pi)",
        "oracle": "m=2: phi(t) = tan(t/2), quotient cot(r/2)",
        "m_dependence": "1/phi decreasing on (0, pi) for every m",
        "provenance": "closed form",
    },
    "custom-series": {
        "tau": "sum a_k t^k with a0 = 0, a1 = 1, a2 = 0",
        "oracle": "none; validated against finite differences",
        "m_dependence": "user supplied",
        "provenance": "user coefficients",
    },
}

PSI_CATALOG = {
    "zero": {"Psi": "0", "oracle": "unweighted case", "provenance": "closed form"},
    "log-cosh": {"Psi": "log cosh t", "oracle": "Psi' = tanh t, Psi'(0) = 0", "provenance": "closed form"},
    "series": {"Psi": "sum b_k t^k with b1 = 0", "oracle": "polynomial derivative",
               "provenance": "user coefficients"},
}

SCENARIOS = {
    "hyperbolic-m2-cmc": {
        "name": "hyperbolic-m2-cmc",
        "space": {"tau": "hyperbolic", "Psi": "zero", "m": 2, "t_max": 30.0},
        "graph": {"kind": "cmc-radial", "c": 0.5, "d": 0.0},
        "probes": {"radii": [0.5, 1.0, 2.0]},
        "spectral": {"radii": [1.0, 2.0, 5.0, 10.0, 20.0]},
    },
    "hyperbolic-m3-cmc": {
        "name": "hyperbolic-m3-cmc",
        "space": {"tau": "hyperbolic", "Psi": "zero", "m": 3, "t_max": 30.0},
        "graph": {"kind": "cmc-radial", "c": 1.0, "d": 0.0},
        "probes": {"radii": [0.5, 1.0, 2.0]},
        "spectral": {"radii": [1.0, 5.0, 10.0]},
    },
    "hyperbolic-m2-weighted-cmc": {
        "name": "hyperbolic-m2-weighted-cmc",
        "space": {"tau": "hyperbolic", "Psi": "log-cosh", "m": 2, "t_max": 15.0},
        "graph": {"kind": "cmc-radial", "c": 1.2, "d": 0.5},
        "probes": {"radii": [0.5, 1.0, 2.0]},
        "spectral": {"radii": [1.0, 5.0, 10.0]},
    },
    "hyperbolic-m2-slice": {
        "name": "hyperbolic-m2-slice",
        "space": {"tau": "hyperbolic", "Psi": "zero", "m": 2, "t_max": 30.0},
        "graph": {"kind": "constant", "value": [0.3]},
        "probes": {"radii": [0.5, 1.0, 2.0]},
        "spectral": {"radii": [1.0, 10.0]},
    },
    "hyperbolic-m2-affine-sphere": {
        "name": "hyperbolic-m2-affine-sphere",
        "space": {"tau": "hyperbolic", "Psi": {"series": [0.0, 0.0, 0.1]}, "m": 2, "t_max": 8.0},
        "fiber": {"dim": 2, "metric": "round-sphere"},
        "graph": {"kind": "affine", "matrix": [[0.3, -0.2], [0.1, 0.4]], "offset": [0.2, -0.1]},
        "probes": {"radii": [0.5, 1.0, 1.5]},
        "spectral": {"radii": [1.0, 3.0]},
    },
    "euclidean-m2-slice": {
        "name": "euclidean-m2-slice",
        "space": {"tau": "euclidean", "Psi": "zero", "m": 2, "t_max": 10.0},
        "graph": {"kind": "constant", "value": [0.0]},
        "probes": {"radii": [0.5, 1.0]},
        "spectral": {"radii": [0.5, 1.0, 2.0], "setti": {"alpha": 0.0, "delta": 0.0}},
    },
    "euclidean-m3-cmc": {
        "name": "euclidean-m3-cmc",
        "space": {"tau": "euclidean", "Psi": "zero", "m": 3, "t_max": 10.0},
        "graph": {"kind": "cmc-radial", "c": 0.2, "d": 0.0},
        "probes": {"radii": [0.5, 1.0, 2.0]},
        "spectral": {"radii": [1.0, 2.0]},
    },
    "gaussian-m2-slice": {
        "name": "gaussian-m2-slice",
        "space": {"tau": "euclidean", "Psi": {"series": [0.0, 0.0, -0.25]}, "m": 2, "t_max": 5.0},
        "graph": {"kind": "constant", "value": [0.0]},
        "probes": {"radii": [0.5, 1.0]},
        "spectral": {"radii": [0.5, 1.0], "setti": {"alpha": 0.5, "delta": 0.25}},
    },
    "spherical-m2-slice": {
        "name": "spherical-m2-slice",
        "space": {"tau": "spherical", "Psi": "zero", "m": 2, "t_max": 2.5},
        "graph": {"kind": "constant", "value": [1.0]},
        "probes": {"radii": [0.5, 1.0]},
        "spectral": {"radii": [0.5, 1.0, 2.0], "setti": {"alpha": 1.0, "delta": 0.0}},
    },
    "series-m3-affine": {
        "name": "series-m3-affine",
        "space": {"tau": "custom-series", "coefficients": [0.0, 1.0, 0.0, 0.05], "Psi": "zero",
                  "m": 3, "t_max": 4.0},
        "graph": {"kind": "affine", "matrix": [[0.2, 0.1, -0.3]], "offset": [0.0]},
        "probes": {"radii": [0.5, 1.0]},
        "spectral": {"radii": [1.0, 2.0]},
    },
}

SUITES = {
    "smoke": ["hyperbolic-m2-cmc"],
    "hyperbolic": ["hyperbolic-m2-cmc", "hyperbolic-m3-cmc", "hyperbolic-m2-weighted-cmc",
                   "hyperbolic-m2-slice", "hyperbolic-m2-affine-sphere"],
    "comparison": ["euclidean-m2-slice", "gaussian-m2-slice", "spherical-m2-slice"],
    "all": list(SCENARIOS),
}
