"""How the mean exit time responds to the desorption rate.

A particle searching for an arc on the circle can either crawl along the
boundary (rate lambda = 0) or gamble on bulk excursions.  Whether the
gamble pays off depends on the bulk diffusivity: above the critical
value the exit-time curve dips to an interior minimum before climbing
to its large-rate plateau; below it, leaving the surface only hurts.

Run from the repository root:  python demos/01_exit_time_vs_desorption_rate.py
"""
import numpy as np

from diskescape import (
    ModelParams,
    assemble_vtv,
    d2_crit,
    decompose,
    find_optimal_lambda,
    met,
    met_curve,
)

A, EPS = 0.01, 0.01
N_TRUNC = 1024

print(f"ejection distance a = {A}, target half-width eps = {EPS}")
crit = d2_crit(ModelParams(a=A, epsilon=EPS))
print(f"critical bulk diffusivity: {crit:.4f} (in units of the surface one)\n")

lams = np.logspace(-2, 4, 31)
curves = {}
for d2 in (0.5, 2.0):
    p = ModelParams(a=A, epsilon=EPS, d2=d2)
    s = decompose(assemble_vtv(p, N_TRUNC))
    curves[d2] = met_curve(s, lams)
    label = "above" if d2 > crit else "below"
    print(f"d2 = {d2} ({label} critical): zero-rate value {met(s, 0.0).value:.4f}, "
          f"plateau {curves[d2].limit_t:.4f}")
    if d2 > crit:
        lam_star = find_optimal_lambda(s, (1e-2, 1e4))
        print(f"  optimal rate {lam_star:.1f} gives {met(s, lam_star).value:.4f}")

print("\n   lambda      met (d2=0.5)   met (d2=2)")
for lam, lo, hi in zip(lams[::5], curves[0.5].values[::5], curves[2.0].values[::5]):
    print(f"{lam:10.3g}   {lo:12.4f}   {hi:10.4f}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for d2, style in ((0.5, "-"), (2.0, "--")):
        ax.semilogx(lams, curves[d2].values, style, label=f"bulk diffusivity {d2}")
        if curves[d2].limit_t:
            ax.axhline(curves[d2].limit_t, color="gray", lw=0.5)
    ax.set_xlabel("desorption rate")
    ax.set_ylabel("mean exit time")
    ax.legend()
    fig.tight_layout()
    fig.savefig("demo01_exit_time_curves.png", dpi=120)
    print("\nwrote demo01_exit_time_curves.png")
except ImportError:
    print("\nmatplotlib not available; skipped the figure")
