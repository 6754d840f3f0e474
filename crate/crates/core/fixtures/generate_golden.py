"""Regenerates golden.toml from closed forms and brute-force sums (mpmath, 50 digits)."""
from itertools import product

from mpmath import mp, mpf, sqrt, log, diff

mp.dps = 50
c = sqrt(mpf(8) / 3)


def h(q):
    return (-(2 - q) + sqrt(4 * q * q - q + 4)) / (3 * q) if q != 0 else mpf(1) / 4


def prob(p, w):
    out = mpf(1)
    for x in w:
        out *= p if x else 1 - p
    return out


def tv(p, q, n):
    return sum(abs(prob(p, w) - prob(q, w)) for w in product([0, 1], repeat=n)) / 2


def kl(p, q, n):
    return sum(prob(p, w) * log(prob(p, w) / prob(q, w)) for w in product([0, 1], repeat=n))


def mse_mean(p, n):
    return sum(prob(p, w) * (mpf(sum(w)) / n - p) ** 2 for w in product([0, 1], repeat=n))


r1 = (sqrt(7) - 1) / 3
beta = mpf(2) / 3 - sqrt(7) / 6
rg = r1
q2 = mpf(1) / 4 + 1 / (2 * c)

fixtures = [
    ("r_half", h(mpf(1) / 2), 1e-12, "optimal r at q = 1/2"),
    ("r_one", h(mpf(1)), 1e-12, "optimal r at q = 1"),
    ("h_prime_zero", diff(lambda q: (1 + q) / (sqrt(4 * q * q - q + 4) + 2 - q), 0), 1e-12, "h'(0)"),
    ("beta", diff(h, 1), 1e-12, "h'(1)"),
    ("phi_star_half", log(1 + 1 / sqrt(2)) + log(1 + sqrt(2) - 1), 1e-12, "optimal log1p utility at q = 1/2"),
    ("x_star_one_x2", 1 - r1 ** 2, 1e-12, "second coordinate of the optimum at q = 1"),
    ("numeric_beta_mid", diff(h, mpf(3) / 4), 1e-6, "min of h' over [1/4, 3/4]"),
    ("shannon_full", mpf("0.7") * log(4), 1e-12, "Shannon FDM point, theta = 1, B = 0.7, P/N = 3"),
    ("shannon_half", mpf("0.35") * log(1 + 3 / mpf("0.5")), 1e-12, "Shannon FDM point, theta = 1/2"),
    ("log1p_ones", 2 * log(2), 1e-12, "log1p utility at (1, 1)"),
    ("greedy_avg_x1", mpf(1) / 2 + rg / 2, 1e-12, "greedy mean rate of user 1, q = 1/2"),
    ("greedy_avg_x2", (1 - rg ** 2) / 2, 1e-12, "greedy mean rate of user 2, q = 1/2"),
    ("greedy_certified_gap", beta ** 2 / 8 * mpf(1) / 4, 1e-12, "T -> inf certified gap for greedy at q = 1/2"),
    ("measure_threshold", 3 * beta ** 2 / 8192, 1e-15, "3 beta^2 / 2^13"),
    ("epsilon_one", 1 / (2 * c), 1e-12, "eps[1]"),
    ("truncation_cap_one", (1 / (2 * c)) ** 2 / 8, 1e-12, "eps[1]^2 / 8"),
    ("two_point_lhs", mse_mean(mpf(1) / 4, 1) + mse_mean(q2, 1), 1e-12, "two-point lhs at p = 1/4, |p - q| = eps[1]"),
    ("mse_half_four", mse_mean(mpf(1) / 2, 4), 1e-12, "empirical mean MSE, p = 1/2, n = 4"),
    ("v_three_two", sum(mpf(1) / n for n in range(1, 4)), 1e-12, "V_3(2)"),
    ("lower_const_alpha2", 1 / (c ** 2 * 2 ** 7), 1e-15, "lower constant, alpha = 2"),
    ("lower_const_alpha1", 1 / (16 * c), 1e-15, "lower constant, alpha = 1, (m+1)^(1/2) - 1 normalization"),
    ("gap_alpha2", (mpf(1) / 4) / (1 / (c ** 2 * 2 ** 7)), 1e-9, "upper / lower constant, alpha = 2"),
    ("gap_alpha1", (mpf(1) / 2) / (1 / (c * 2 ** 5)), 1e-9, "upper / lower constant, alpha = 1"),
    ("kl_half_quarter_two", kl(mpf(1) / 2, mpf(1) / 4, 2), 1e-12, "D(B_2^{1/2} || B_2^{1/4})"),
    ("kl_three_quarter_one", kl(mpf(3) / 4, mpf(1) / 4, 1), 1e-12, "D(B_1^{3/4} || B_1^{1/4})"),
    ("kl_counterexample", kl(mpf(1) / 2, mpf(9) / 16, 1), 1e-12, "per-coordinate divergence, p = 1/2, q = 9/16"),
    ("tv_half_quarter_two", tv(mpf(1) / 2, mpf(1) / 4, 2), 1e-12, "tv(1/2, 1/4, 2)"),
    ("tv_half_055_ten", tv(mpf(1) / 2, mpf("0.55"), 10), 1e-12, "tv(1/2, 0.55, 10)"),
    ("pinsker_half_quarter_two", min(sqrt(kl(mpf(1) / 2, mpf(1) / 4, 2) / 2), sqrt(kl(mpf(1) / 4, mpf(1) / 2, 2) / 2)), 1e-12, "Pinsker rhs at (1/2, 1/4, 2)"),
]

with open("golden.toml", "w") as f:
    f.write("# Generated by generate_golden.py; do not edit by hand.\n")
    for name, value, tol, what in fixtures:
        f.write(f"\n[{name}]\nvalue = {mp.nstr(value, 20)}\ntol = {tol}\nwhat = \"{what}\"\n")
