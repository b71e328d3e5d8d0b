"""Smoke test for the photontail_py extension module.

Build and install first:  pip install --no-build-isolation -e crates/python
"""

import math

import photontail_py as pt

SMALL = """
modes.n_radial = 1
fock.n_max = 2
coupling.g = 0.05
asym.radii = 1:1000:7
asym.ahat_max_radius = 1000
"""


def main():
    cfg = pt.RunConfig(SMALL)
    assert cfg.g == 0.05 and cfg.n_max == 2

    model = pt.Model(cfg)
    assert model.dim == 182
    assert model.gap > 0
    assert abs(sum(abs(z) ** 2 for z in model.ground_vector) - 1) < 1e-12

    lhs, rhs = model.number_check()
    assert abs(lhs - rhs) <= 1e-12 * (1 + rhs)

    k = [0.3, -0.2, 0.5]
    amp = model.amplitude(k)
    assert len(amp) == 3 and all(len(c) == model.dim for c in amp)
    norm = math.sqrt(sum(abs(z) ** 2 for c in amp for z in c))
    assert abs(norm - model.amplitude_norm(k)) < 1e-15
    assert norm <= model.amplitude_bound(k)

    report = model.decay_report()
    assert abs(report.kappa_oracle - pt.kappa_oracle()) < 1e-15
    assert len(report.samples()) == 7 * len(report.directions())
    perp = max(report.directions(), key=lambda d: d["cross_norm"])
    print(
        f"kappa measured {report.kappa_measured:.6f}, oracle {report.kappa_oracle:.6f}, "
        f"stated {pt.STATED_CONSTANT:.6f}, proof chain {pt.PROOF_CHAIN_CONSTANT:.6f}"
    )
    assert abs(perp["density_exponent"] + 5) < 0.2

    try:
        pt.Model(pt.RunConfig(SMALL + "field.bext = 0,0,0\n"))
    except pt.DegenerateGroundStateError:
        pass
    else:
        raise AssertionError("zero field should be degenerate")

    try:
        pt.RunConfig("no.such.key = 1")
    except pt.ConfigError:
        pass
    else:
        raise AssertionError("unknown key accepted")

    print(f"{model!r}: smoke test passed")


if __name__ == "__main__":
    main()
