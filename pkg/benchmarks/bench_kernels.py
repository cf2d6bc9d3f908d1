"""Timing comparison of the compiled hot kernels against the numpy fallback.

Runs the Monte Carlo position sampler through both code paths and prints a
small table.  The fallback is selected the same way production code selects
it: by re-importing the package in a subprocess with KPZ_EXACT_NO_NUMBA=1,
so the benchmark also exercises the environment-flag dispatch.
"""

import json
import os
import subprocess
import sys
import time

_SNIPPET = """
import json, time
from kpz_exact._accel import NUMBA_ENABLED
from kpz_exact.simulate import RngStream, mc_positions
# warm-up (JIT compilation, allocator)
mc_positions(0.5, 5, 1.0, 10_000, RngStream(1))
t0 = time.perf_counter()
mc_positions({q}, {N}, {t}, {samples}, RngStream(2))
elapsed = time.perf_counter() - t0
print(json.dumps({{"numba": bool(NUMBA_ENABLED), "seconds": elapsed}}))
"""


def run_once(no_numba, N=8, q=0.5, t=2.0, samples=200_000):
    env = dict(os.environ)
    if no_numba:
        env["KPZ_EXACT_NO_NUMBA"] = "1"
    else:
        env.pop("KPZ_EXACT_NO_NUMBA", None)
    code = _SNIPPET.format(N=N, q=q, t=t, samples=samples)
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    samples = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
    rows = []
    for no_numba in (False, True):
        started = time.perf_counter()
        result = run_once(no_numba, samples=samples)
        total = time.perf_counter() - started
        rows.append((result["numba"], result["seconds"], total))
    print(f"{'backend':<10} {'kernel_s':>10} {'subprocess_s':>13}")
    for numba_on, seconds, total in rows:
        name = "numba" if numba_on else "numpy"
        print(f"{name:<10} {seconds:>10.4f} {total:>13.2f}")
    fast = next(s for n, s, _ in rows if n)
    slow = next(s for n, s, _ in rows if not n)
    print(f"speedup: {slow / fast:.2f}x")


if __name__ == "__main__":
    main()
