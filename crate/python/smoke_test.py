"""Smoke test for the stablefluct_py extension module.

Build and install first, e.g.

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/stablefluct-*.whl
"""

import math
import sys

import stablefluct_py as sf


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    p = sf.StableParams(2, 1.0)
    assert p.d == 2 and p.alpha == 1.0, p

    checks = {
        "survival 2/3": close(sf.survival_probability(p, [2.0, 0.0], 1.0), 2.0 / 3.0, 1e-10),
        "closest reach sqrt(3)/pi^2": close(
            sf.closest_reach_density(p, [2.0, 0.0], [1.0, 0.0]), math.sqrt(3.0) / math.pi**2, 1e-12
        ),
        "stationary moment 2/3": close(sf.stationary_radial_moment(p, 1.0), 2.0 / 3.0, 1e-12),
        "Phi-(2) = 2": close(sf.ladder_laplace_exponent(p, 2.0), 2.0, 1e-12),
        "kelvin involution": all(
            close(a, b, 1e-15) for a, b in zip(sf.kelvin_invert(sf.kelvin_invert([0.3, -2.0])), [0.3, -2.0])
        ),
    }

    reports = sf.run_check("phi-minus", p, 1e-8)
    checks["phi-minus suite"] = all(r.passed for r in reports)
    report = sf.factorization_residual(p, 0.5)
    checks["factorisation f = 1"] = report.passed

    res = sf.simulate(p, "first-entrance-position", [2.0, 0.0], 2000, seed=5, workers=2, r=1.0)
    again = sf.simulate(p, "first-entrance-position", [2.0, 0.0], 2000, seed=5, workers=2, r=1.0)
    checks["simulate reproducible"] = (res.estimate, res.ks) == (again.estimate, again.ks)
    checks["simulate near reference"] = abs(res.estimate - res.reference) < 5 * res.stderr + 1e-3

    try:
        sf.survival_probability(p, [0.5, 0.0], 1.0)
        checks["domain error raised"] = False
    except ValueError as e:
        checks["domain error raised"] = "require |x| > r" in str(e)

    try:
        sf.StableParams(2, 3.0)
        checks["bad alpha rejected"] = False
    except ValueError:
        checks["bad alpha rejected"] = True

    for name, ok in checks.items():
        print(f"{'ok  ' if ok else 'FAIL'} {name}")
    print(f"suites: {', '.join(sf.suites())}")
    print(res)
    return 0 if all(checks.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
