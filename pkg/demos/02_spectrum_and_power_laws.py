"""Eigenvalue and weight spectra and their power-law regimes.

The transfer operator's eigenvalues fall like 1/n up to the ejection
crossover 1/a and like 1/n^2 beyond it, with a tail coefficient that
depends only on the target size.  The spectral weights show up to three
regimes (slopes -3, -4, -6).  This script decomposes one operator,
fits the regimes, and prints the extracted coefficients next to their
conjectured values.

Run from the repository root:  python demos/02_spectrum_and_power_laws.py
"""
import math

import numpy as np

from diskescape import (
    ModelParams,
    assemble_vtv,
    decompose,
    fit_asymptotics,
    fit_eigenvalue_regimes,
    fit_weight_regimes,
)

A, EPS, N_TRUNC = 0.002, 0.05, 3072

p = ModelParams(a=A, epsilon=EPS)
s = decompose(assemble_vtv(p, N_TRUNC))

eig = fit_eigenvalue_regimes(s)
print(f"a = {A}, eps = {EPS}, truncation {N_TRUNC}")
print(f"eigenvalue head  ~ {eig.a_tilde.coefficient:.4g} / n      "
      f"(free slope {eig.a_tilde.exponent_free:+.2f}, window {eig.a_tilde.window})")
print(f"eigenvalue tail  ~ {eig.a_eps.coefficient:.4g} / n^2    "
      f"(free slope {eig.a_eps.exponent_free:+.2f}, window {eig.a_eps.window})")
conjecture = (1.0 - EPS / math.pi) ** 2
print(f"tail coefficient vs (1 - eps/pi)^2: {eig.a_eps.coefficient:.4f} vs {conjecture:.4f}\n")

wts = fit_weight_regimes(s)
for name, fit, slope in (
    ("weight head", wts.b_tilde, -3),
    ("weight middle", wts.b_prime, -4),
    ("weight tail", wts.b_eps, -6),
):
    if fit is None:
        print(f"{name:14s} absent at these scales")
    else:
        print(f"{name:14s} ~ {fit.coefficient:.4g} * n^{slope} "
              f"(free slope {fit.exponent_free:+.2f}, window {fit.window})")
print(f"\nhead coefficient vs 2 pi a = {2 * math.pi * A:.4g}")

bundle = fit_asymptotics(s)
print(f"large-rate correction coefficient c1 = {bundle.c1:.4g}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n = np.arange(1, N_TRUNC + 1)
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].loglog(n, s.eigenvalues, lw=0.8)
    axes[0].loglog(n, eig.a_tilde.coefficient / n, ":", label="~1/n")
    axes[0].loglog(n, eig.a_eps.coefficient / n**2.0, "--", label="~1/n^2")
    axes[0].axvline(1 / A, color="gray", lw=0.5)
    axes[0].set_title("eigenvalues")
    axes[0].legend()
    axes[1].loglog(n, s.weights, lw=0.8)
    for fit, slope in ((wts.b_tilde, -3), (wts.b_prime, -4), (wts.b_eps, -6)):
        if fit is not None:
            axes[1].loglog(n, fit.coefficient * n**float(slope), "--",
                           label=f"~n^{slope}")
    axes[1].set_ylim(s.weights[s.weights > 0].min() * 0.5, None)
    axes[1].set_title("spectral weights")
    axes[1].legend()
    for ax in axes:
        ax.set_xlabel("mode index n")
    fig.tight_layout()
    fig.savefig("demo02_power_laws.png", dpi=120)
    print("wrote demo02_power_laws.png")
except ImportError:
    print("matplotlib not available; skipped the figure")
