"""Regenerate quadrature_norms.json.

Values are computed with scipy's adaptive QUADPACK routines directly on the
squared regions, with no code from the package under test.
"""

import json
import math
from pathlib import Path

from scipy import integrate

OUT = Path(__file__).with_name("quadrature_norms.json")


def disk(k):
    val, _ = integrate.quad(lambda t: t**k, 0.0, 1.0, epsabs=0, epsrel=1e-13)
    return math.pi * val


def polydisk(a1, a2):
    val, _ = integrate.nquad(
        lambda t1, t2: t1**a1 * t2**a2,
        [[0.0, 1.0], [0.0, 1.0]],
        opts={"epsabs": 0, "epsrel": 1e-13},
    )
    return math.pi**2 * val


def ball2(a1, a2):
    val, _ = integrate.dblquad(
        lambda t2, t1: t1**a1 * t2**a2,
        0.0, 1.0, 0.0, lambda t1: 1.0 - t1,
        epsabs=0, epsrel=1e-13,
    )
    return math.pi**2 * val


def main():
    data = {
        "disk": {str(k): disk(k) for k in range(11)},
        "polydisk2": {f"{a},{b}": polydisk(a, b) for a in range(11) for b in range(11)},
        "ball2": {f"{a},{b}": ball2(a, b) for a in range(11) for b in range(11)},
    }
    OUT.write_text(json.dumps(data, indent=1, sort_keys=True))


if __name__ == "__main__":
    main()
