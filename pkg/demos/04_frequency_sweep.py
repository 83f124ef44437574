# Sweep the reference over 35-65 Hz and tabulate detector accuracy and settling.
#
# Run: python demos/04_frequency_sweep.py [workers]

# %%
import sys
import time

from gridsync import load_scenario, sweep

template = load_scenario("fig2_freq50")
workers = int(sys.argv[1]) if len(sys.argv) > 1 else 1

t0 = time.perf_counter()
rows = sweep(35.0, 65.0, 1.0, template, workers=workers)
elapsed = time.perf_counter() - t0

# %% Two periods of the reference is the settling bound; the last column shows the margin.
print("   f (Hz)   error (Hz)   settle (ms)   2T (ms)")
for r in rows:
    m = r.metrics
    print(f"{r.frequency_hz:9.2f}   {m.zcd_final_error_hz:10.2e}   {m.zcd_settling_s * 1e3:11.2f}   {2e3 / r.frequency_hz:7.2f}")
print(f"worst error {max(r.metrics.zcd_final_error_hz for r in rows):.2e} Hz, {len(rows)} rows in {elapsed:.2f} s")
