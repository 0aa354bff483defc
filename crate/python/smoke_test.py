"""Smoke test for the pywavepeel extension.

Build and run from the repository root:

    cargo build -p wavepeel-py --features extension-module --release
    cp target/release/libpywavepeel.so python/pywavepeel.so
    python3 python/smoke_test.py
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pywavepeel as wp


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    crit = wp.critical_constant(2.0)
    assert close(crit.factor, 2.16169, 1e-3), crit
    assert wp.fm_bound(2.0) > crit.factor
    assert wp.classify_regime(0.9 * crit.factor, 2.0) == "subcritical"

    unstable, stable, contraction = wp.supercritical_structure(1.15 * crit.factor, 2.0)
    assert unstable < stable and 0.0 < contraction < 1.0
    assert close(math.sqrt(stable), 2.282306848, 1e-6)

    m = wp.ReducedMap(1.15 * crit.factor, 2.0)
    assert close(m.value(stable), stable, 1e-9)

    law = wp.GgdParams(1.0, 2.0)
    z = law.sample(7, 20000)
    fit = wp.estimate_params(z)
    assert close(fit.shape, 2.0, 0.1) and close(fit.sigma, 1.0, 0.05), fit

    trace = wp.run_peeling(z, 1.15 * crit.factor, stop="fixed", iterations=10)
    assert trace.iterations == 10
    assert math.isinf(trace.u[0])
    assert all(b <= a for a, b in zip(trace.u, trace.u[1:]))
    assert json.loads(trace.to_json())["u"][0] is None

    cat = wp.threshold_catalog(1.0, 2.0, z)
    assert set(cat) == {"T_c05", "T_c15", "T_cm", "That_c05", "That_c15", "That_cm", "T_m"}
    assert close(cat["That_c15"], cat["T_c15"], 0.1)

    x = wp.make_benchmark("Blocks", 1024)
    c = wp.dwt(x, "sym8")
    y = wp.idwt(c)
    assert max(abs(a - b) for a, b in zip(x, y)) < 1e-9
    assert c.with_flat(c.flatten()).details == c.details

    assert close(wp.universal_threshold(10000, 1.0), 4.29, 0.005)
    assert wp.sure_threshold(z, 1.0) >= 0.0
    assert wp.apply_threshold([-3.0, 0.5, 2.0], 1.0) == [-2.0, 0.0, 1.0]
    assert wp.snr_den(x, x) == math.inf or wp.snr_den(x, x) > 100

    csv = wp.run_bench("signal = Doppler\nn = 512\nreplications = 3\nseed = 1\n", workers=2)
    assert csv.splitlines()[-1].startswith("Doppler,512,")
    table = json.loads(wp.run_converge("n = 1024\nreplications = 8\n", format="json"))
    assert table["regime"].lower() == "supercritical"

    try:
        wp.critical_constant(-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    print("pywavepeel smoke test passed")


if __name__ == "__main__":
    main()
