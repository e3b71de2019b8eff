"""Builtin example problems.

These are the standard benchmark matrices used throughout the test suite:
a real symmetric pair with eigenvalues {1, x} (positive and negated), a
non-hermitian variant with the same spectrum, the Bose-Einstein vortex
asymptotics (parameters k and omega), and a scalar quadratic profile for
order-scaling studies.
"""

from __future__ import annotations

import json

from .errors import UnknownExample

_FEX1 = {
    "n": 2,
    "form": "reduced",
    "R": [
        ["x*cos(x)^2 + sin(x)^2", "(x - 1)*cos(x)*sin(x)"],
        ["(x - 1)*cos(x)*sin(x)", "x*sin(x)^2 + cos(x)^2"],
    ],
    "params": {},
    "domain": [0.2, 12.0],
    "hermitian_hint": "real_symmetric",
    "lambda": 1.0,
}

_FEX3 = {
    "n": 2,
    "form": "reduced",
    "R": [
        ["-(x*cos(x)^2 + sin(x)^2)", "(x - 1)*cos(x)*sin(x)"],
        ["(x - 1)*cos(x)*sin(x)", "-(x*sin(x)^2 + cos(x)^2)"],
    ],
    "params": {},
    "domain": [0.2, 12.0],
    "hermitian_hint": "real_symmetric",
    "lambda": 1.0,
}

_FEX4 = {
    "n": 2,
    "form": "reduced",
    "R": [
        ["x*cos(x)^2 + sin(x)^2", "2*i*(x - 1)*cos(x)*sin(x)"],
        ["-i*(x - 1)*cos(x)*sin(x)/2", "x*sin(x)^2 + cos(x)^2"],
    ],
    "params": {},
    "domain": [0.2, 12.0],
    "hermitian_hint": "general",
    "lambda": 1.0,
}

_H0 = "-1 - k^2 + 1/(4*x^2) + 4/x^4 + 38/x^6 + 748/x^8"
_H1 = "2*(omega + 1/x^2)"
_H2 = "-1 + 1/x^2 + 2/x^4 + 19/x^6 + 374/x^8"

_BEC = {
    "n": 2,
    "form": "reduced",
    "R": [
        [f"{_H0} - {_H1}", _H2],
        [_H2, f"{_H0} + {_H1}"],
    ],
    "params": {"k": 0.04, "omega": 0.002604},
    "domain": [10.0, 200.0],
    "hermitian_hint": "real_symmetric",
    "lambda": 1.0,
}

_SCALAR_QUADRATIC = {
    "n": 1,
    "form": "reduced",
    "R": [["x^2 + 1"]],
    "params": {},
    "domain": [-8.0, 8.0],
    "hermitian_hint": "real_symmetric",
    "lambda": 1.0,
}

EXAMPLES = {
    "fulling-pos": _FEX1,
    "fulling-neg": _FEX3,
    "nonhermitian": _FEX4,
    "bec-vortex": _BEC,
    "scalar-quadratic": _SCALAR_QUADRATIC,
}


def example_problem(name: str) -> dict:
    try:
        return json.loads(json.dumps(EXAMPLES[name]))
    except KeyError:
        raise UnknownExample(
            f"unknown example {name!r}; available: "
            + ", ".join(sorted(EXAMPLES))) from None
