"""Frozen golden values, computed before the implementation from the
independent oracles in oracles.py (delta = 1/2 arctan forms, Euler
series) composed with scipy.integrate.quad at tolerance <= 1e-10, and
one 1e7-sample Monte Carlo estimate of the power-control triple
integral.  See the commit history of this file for the generating
snippets; the values are inputs to the tests, never recomputed from the
package code under test.
"""

# theta = 2^(75/100) - 1
THETA_K75_T100 = 0.681792830507429

# lam=1, alpha=4 (delta=1/2), K=75, N=100 unless stated otherwise
COV_HALF_AT_THETA = 1.5699205191830745          # 1 + sqrt(t) atan sqrt(t)
CCDF_CI_T100 = 0.3630250781610517               # 1 - 1/cov
PS_CI_100_A4 = 0.6369749218389483               # 1/cov
PS_CI_75_A3 = 0.37434989042936073               # 1/cov(1, 2/3), Euler series

E1_AT_1 = 0.2193839343955205                    # series

MU_100_A4 = 41.4195482139327                    # quad of 1 - muker_half
ETBAR_100_A4 = 55.598901985755106               # quad of interferer CCDF
OMEGA_N_100_A4 = 0.555989019857551              # ETBAR / N
OMEGA_60_100_A4 = 0.725639766408209             # W(60)/60
PS_BOUND_SYNC_60 = 0.43994765344327147          # 1 - 1/cov(omega*theta_60)
PBAR_AT_2MU = 0.278367471951236                 # theta_t(2mu) = 0.87302428456
INT_PC_100_A4 = 61.27867220756481               # int_0^100 of the CI CCDF
RATE_CI_100_A4 = 0.7796043454744367             # 75 * ps / int_pc
PS_THIN_100_A4 = 0.7463907064301185             # 1/cov(theta * omega_N)
INT_PS_100_A4 = 56.33857632015124               # int_0^100 of the sync bound
RATE_THIN_100_A4 = 0.9936229602989834           # 75 * ps_thin / int_ps

# fixed-rate policies
PS_PLTHR_B155_A3_N200 = 0.6459085228026893      # beta=1.55, Euler-series H
PS_FADTHR_B01_A4_N100 = 0.723470128870246       # beta=0.1, arctan forms
# inversion-policy values: scipy.quad misreports its error near the log
# endpoint of e^y E1(y) y^-delta, so these three are pinned by 30-digit
# mpmath quadrature of the raw form (series-E1/scipy route agrees to 4e-6)
G_THETA1_BETA0_A4 = 1.96460383271065            # int of e^y E1(y) / (2 sqrt y)
PS_TCI_B0_THETA1_A4 = 0.3373131981299713        # 1/(1+G)
PS_TCI_B0_A4_N100 = 0.3960483653964171          # theta = 2^0.75 - 1
PS_TCI_B0_A4_N200 = 0.5382942125684453          # theta = 2^0.375 - 1

# Monte Carlo, 1e7 samples (replicates 0.52945 / 0.52961); tau=1,
# beta=1.55, lam=1, alpha=4, theta = 2^0.75 - 1
PS_FPC_TAU1_B155_A4_N100_MC = 0.52945
PS_FPC_MC_TOL = 0.005
