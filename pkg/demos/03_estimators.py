# %% [markdown]
# # Two ways to estimate Sobol' indices
#
# Monte Carlo pick-and-freeze needs (N + 2) * N_s model runs and converges
# like 1/sqrt(N_s).  A polynomial chaos surrogate reads the indices off its
# coefficients, so a smooth model is captured with a handful of runs.
# The Ishigami function shows the difference.

# %%
import math

import numpy as np

import effgsa as eg
from effgsa.pipeline import UQSettings

space = eg.ParameterSpace(eg.RandomParameter(f"x{i}", 0.0, -math.pi, math.pi) for i in (1, 2, 3))


def ishigami(x, names=None):
    return (np.sin(x[:, 0]) + 7 * np.sin(x[:, 1]) ** 2 + 0.1 * x[:, 2] ** 4 * np.sin(x[:, 0]))[:, None]


# analytic values for a = 7, b = 0.1
v1 = 0.5 * (1 + 0.1 * math.pi**4 / 5) ** 2
v2 = 49 / 8
v13 = 0.01 * math.pi**8 * (1 / 18 - 1 / 50)
var = v1 + v2 + v13
exact = np.array([v1 / var, v2 / var, 0.0])
print("exact first-order:", np.round(exact, 4))

# %%
print("Monte Carlo")
for n in (500, 5_000, 50_000):
    cost = eg.CostReport()
    res, _ = eg.run_mc_gsa(ishigami, space, UQSettings(method="mc", n_samples=n, seed=4), cost)
    err = np.max(np.abs(res.per_component_first[:, 0] - exact))
    print(f"  N_s = {n:>6}: {cost.model_evaluations:>7} runs, max error {err:.4f}")

print("Polynomial chaos")
for degree in (4, 8, 12):
    cost = eg.CostReport()
    pce = eg.run_pce(ishigami, space, UQSettings(degree=degree, oversampling=3.0, seed=4), cost)
    err = np.max(np.abs(eg.pce_sobol(pce).per_component_first[:, 0] - exact))
    print(f"  P = {degree:>2}: {cost.model_evaluations:>7} runs, max error {err:.4f}")
