"""Time both methods across a size sweep and check the growth exponents.

The generative apply is O(N): wall time should double when N doubles.  The
baseline's FFT-based forward pass is O(N log N): slightly above doubling.
This desk-scale sweep uses modest sizes so it finishes in seconds; the CLI
(`icrgp bench`) runs the same harness with configurable sizes and writes CSV.
"""

import time

import numpy as np
from threadpoolctl import threadpool_limits

from icrgp import (
    IdentityChart,
    Matern32,
    RefinementSpec,
    apply_sqrt,
    build_kiss,
    build_model,
    draw_latent,
    kiss_forward_pass,
    nearest_base_size,
)

SIZES = [2**12, 2**13, 2**14, 2**15]
kernel = Matern32(rho=1.0)


def median_ms(fn, reps=5):
    fn()  # warmup
    times = []
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        times.append((time.perf_counter() - start) * 1e3)
    return float(np.median(times))


rows = []
with threadpool_limits(limits=1):  # deterministic single-threaded timing
    for target in SIZES:
        # the size recurrence cannot hit every integer; use the nearest size
        n0, achieved = nearest_base_size(3, 2, 10, target)
        model = build_model(
            kernel, IdentityChart(), RefinementSpec(n0=n0, n_lvl=10, n_csz=3, n_fsz=2)
        )
        latent = draw_latent(model, np.random.default_rng(0))
        icr_ms = median_ms(lambda: apply_sqrt(model, latent))

        coords = np.arange(float(target))
        kiss_model = build_kiss(kernel, coords, m=target, padding_factor=0.5)
        s = np.random.default_rng(0).standard_normal(target)
        kiss_ms = median_ms(lambda: kiss_forward_pass(kiss_model, s))
        rows.append((target, achieved, icr_ms, kiss_ms))

print(f"{'target':>8} {'n(gen)':>8} {'generative':>12} {'baseline':>12} {'speedup':>9}")
for target, achieved, icr_ms, kiss_ms in rows:
    print(
        f"{target:>8} {achieved:>8} {icr_ms:>10.3f}ms {kiss_ms:>10.2f}ms "
        f"{kiss_ms / icr_ms:>8.1f}x"
    )

print("\ndoubling ratios (2.0 = linear growth):")
for (lo, _, lo_icr, lo_kiss), (hi, _, hi_icr, hi_kiss) in zip(rows, rows[1:]):
    print(
        f"  {lo:>6} -> {hi:>6}:  generative {hi_icr / lo_icr:.2f}   "
        f"baseline {hi_kiss / lo_kiss:.2f}"
    )
print(
    "\nat these small sizes the sub-millisecond generative apply is still\n"
    "overhead-dominated, so its ratio sits below 2; from ~2^16 points up it\n"
    "converges to clean doubling (the acceptance suite checks 2^16..2^19)"
)
