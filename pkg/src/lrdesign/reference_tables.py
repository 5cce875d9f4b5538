"""Published table values used as golden references by ``lrdesign table``.

All designs are for regression through the origin on ``[-1, 1]``.
"""

T = 1.0

# Table 1: long-range optimum, columns alpha, mu, tau, sqrt(tau/mu), eff_uni
TABLE1_ALPHAS = (0.05, 0.25, 0.50, 0.75, 0.95)
TABLE1 = (
    (0.05, 2.34, 1.06, 0.67, 0.40),
    (0.25, 3.19, 0.96, 0.55, 0.59),
    (0.50, 4.32, 0.70, 0.40, 0.78),
    (0.75, 6.84, 0.44, 0.25, 0.93),
    (0.95, 24.78, 0.25, 0.10, 0.99),
)

# Table 2: efficiencies of the polynomial approximation to the maximin design
TABLE2_ALPHAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
TABLE2 = (0.84, 0.92, 0.97, 0.99, 0.99, 0.97, 0.94, 0.89, 0.84)
# p(t) = (a2 t^2 + a0 + a4 t^4)_+
MAXIMIN_APPROX = {"a0": -1.16963, "a2": 5.7275, "a4": -3.0264}

# Table 3: short-range optimum, columns lambda, gamma, mu, tau, sqrt(tau/mu), eff_uni
SHORTRANGE_CONTEXTS = ((0.5, 0.5), (0.5, 0.1), (0.5, 0.9), (0.1, 0.5), (2.5, 0.5))
TABLE3 = (
    (0.5, 0.5, 3.41, 0.32, 0.30, 0.89),
    (0.5, 0.1, 9.82, 3.23, 0.57, 0.63),
    (0.5, 0.9, 2.38, 0.08, 0.18, 0.97),
    (0.1, 0.5, 12.70, 0.22, 0.13, 0.99),
    (2.5, 0.5, 1.45, 0.54, 0.61, 0.57),
)

# Table 4: short-range designs (rows, by context) under long-range truth (columns, by alpha)
CROSS_ALPHAS = (0.05, 0.25, 0.50, 0.75, 0.95)
TABLE4 = (
    (0.62, 0.82, 0.96, 1.00, 0.97),
    (0.81, 0.97, 0.99, 0.89, 0.77),
    (0.53, 0.73, 0.90, 0.99, 1.00),
    (0.50, 0.70, 0.88, 0.98, 1.00),
    (0.81, 0.97, 0.98, 0.89, 0.77),
)

# Table 5: long-range designs (rows, by alpha) under short-range truth (columns, by context)
TABLE5 = (
    (0.19, 0.40, 0.15, 0.15, 0.35),
    (0.69, 0.94, 0.59, 0.58, 0.93),
    (0.94, 0.98, 0.87, 0.86, 0.98),
    (1.00, 0.88, 0.98, 0.98, 0.85),
    (0.95, 0.73, 0.99, 1.00, 0.68),
)

# acceptance tolerances (absolute unless noted)
TOL_MU = 0.05
TOL_MU_REL_LARGE = 0.01     # relative, for Table 1's alpha = 0.95 row
TOL_TAU = 0.02
TOL_EDGE = 0.01
TOL_EFF_UNI = 0.01
TOL_EFF = 0.02
