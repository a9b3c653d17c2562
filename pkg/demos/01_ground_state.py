"""Ground state of the 3-D cubic equation and the constants it fixes.

Run with ``python demos/01_ground_state.py``.
"""
# %%
import math

from nlslab import NlsParams, RadialGrid
from nlslab.ground_state import gagliardo_nirenberg_ratio, solve_ground_state

grid = RadialGrid.from_spacing(0.01, 30.0)
gs = solve_ground_state(NlsParams(3, 3.0), grid)
print(f"Q(0) = {gs.q0:.12f}  after {len(gs.lower_history)} bisection steps")

# %% Pohozaev: ||grad Q|| = ||Q|| and ||Q||_4^4 = 2 ||Q||^2 for this normalisation
print("||grad Q|| / ||Q||      =", math.sqrt(gs.grad_Q_sq / gs.mass_Q))
print("||Q||_4^4 / ||Q||^2     =", gs.lp1_Q / gs.mass_Q)

# %% sharp Gagliardo-Nirenberg constant and the mass-energy threshold
print("c_GN                    =", gs.c_gn)
print("sigma                   =", gs.sigma_pn)
print("threshold sqrt(E M)     =", gs.lambda_threshold)
print("GN ratio of Q itself    =", gagliardo_nirenberg_ratio(gs.profile, gs))

# %% the soliton u = e^{it/2} Q(sqrt(3/2) r) carries these values
print("soliton mass, energy    =", gs.soliton_mass(), gs.soliton_energy())
