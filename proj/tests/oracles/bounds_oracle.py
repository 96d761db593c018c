#!/usr/bin/env python3
"""Arbitrary-precision reference values for the PAC bound formulas.

Evaluates delta' and epsilon at fixed parameter points with mpmath (60
significant digits, untruncated Poisson sums) and prints the values that
tests/test_bounds.cpp freezes. Run: python3 tests/oracles/bounds_oracle.py
"""

from mpmath import mp, mpf, exp, sqrt, log, e, pi, nsum, inf, factorial

mp.dps = 60


def psi_bernoulli(p, amin_alpha, amax_alpha, a_min, a_max):
    upper = a_min * (p - amax_alpha) ** 2 / (1 + a_max * (amin_alpha - p) / 3)
    lower = (p - amin_alpha) ** 2
    return min(upper, lower)


def clamp01(x):
    return min(max(x, mpf(0)), mpf(1))


def zeta_bern(n, p, alpha_min, alpha_max, a_min, a_max):
    psi = psi_bernoulli(p, alpha_min, alpha_max, a_min, a_max)
    return clamp01(1 - 2 * exp(-psi * a_min * n / (2 * p)))


def zeta_pois(n, lam_r, dt, a_min):
    return clamp01(1 - 2 * exp(-n * a_min * lam_r * dt))


def mixing(blocks, beta):
    return sum(beta(mpf(a)) for a in blocks[1:-1])


def delta_prime_general(pt):
    L = pt["lambda_u"] * pi * pt["R"] ** 2
    blocks = pt["blocks"]
    a_min, a_max = mpf(min(blocks)), mpf(max(blocks))

    def zeta(n):
        if pt["arrivals"] == "bernoulli":
            return zeta_bern(n, pt["p"], pt["alpha_min"], pt["alpha_max"], a_min, a_max)
        return zeta_pois(n, pt["lambda_r"], pt["delta_slot"], a_min)

    def term(j):
        j = int(j)
        return exp(-L) * L ** j / factorial(j) * sum(1 - zeta(j) for _ in blocks)

    mass = nsum(term, [1, inf])
    void = exp(-L)
    mix = mixing(blocks, pt["beta"])
    return pt["delta"] / 2 - void - mix - mass


def bracket(L, phi, m):
    return 4 * m * exp(-L) * (exp(-L * exp(-phi)) - 1)


def delta_prime_bernoulli(pt):
    L = pt["lambda_u"] * pi * pt["R"] ** 2
    blocks = pt["blocks"]
    a_min, a_max = mpf(min(blocks)), mpf(max(blocks))
    p = pt["p"]
    phi = a_min * psi_bernoulli(p, pt["alpha_min"], pt["alpha_max"], a_min, a_max) / (2 * p)
    m = len(blocks) // 2
    return pt["delta"] / 2 - (exp(-L) + mixing(blocks, pt["beta"]) + bracket(L, phi, m))


def delta_prime_poisson(pt):
    L = pt["lambda_u"] * pi * pt["R"] ** 2
    blocks = pt["blocks"]
    a_min = mpf(min(blocks))
    m = len(blocks) // 2
    phi = a_min * pt["lambda_r"] * pt["delta_slot"]
    return pt["delta"] / 2 - (exp(-L) + mixing(blocks, pt["beta"]) + bracket(L, phi, m))


def epsilon(pt, dp):
    if dp <= 0:
        return None
    blocks = pt["blocks"]
    a_min, a_max = mpf(min(blocks)), mpf(max(blocks))
    t = mpf(sum(blocks))
    N, B, R0 = mpf(pt["N"]), mpf(pt["B"]), mpf(pt["R0"])
    if pt["model"] == "poisson":
        coef = N * B * a_max * e / (a_min * R0)
    else:
        coef = N * pt["alpha_max"] * B * a_max / (R0 * a_min * pt["alpha_min"])
    dev = coef * sqrt(a_max * log(2 / dp) / t)
    return 2 * max(pt["R_e"], pt["R_o"]) + max(pt["D_e"], pt["D_o"]) + dev


def base(**kw):
    pt = dict(N=100, B=mpf(1), R0=mpf(1), R=mpf(1000), delta_slot=mpf(1),
              R_e=mpf("0.01"), R_o=mpf("0.012"), D_e=mpf("0.003"), D_o=mpf("0.002"),
              beta=lambda s: mpf(0))
    pt.update(kw)
    return pt


POINTS = {
    # Bernoulli spot point: lambda_u pi R^2 = 3, phi_p = 2, m = 5.
    "bernoulli_spot": base(model="bernoulli", arrivals="bernoulli", lambda_u=mpf(3) / (pi * mpf(10) ** 6),
                           p=mpf("0.1"), alpha_min=mpf("0.2"), alpha_max=mpf("0.9"),
                           blocks=[40] * 10, delta=mpf("0.2")),
    # Poisson model at the published densities, a_min = 10, m = 5.
    "poisson_paper": base(model="poisson", arrivals="poisson", lambda_u=mpf("1e-4"), lambda_r=mpf("0.09"),
                          blocks=[10] * 10, delta=mpf("0.2")),
    # General form with Poisson zeta and geometric mixing.
    "general_poisson": base(model="general", arrivals="poisson", lambda_u=mpf(20) / (pi * mpf(10) ** 6),
                            lambda_r=mpf("0.09"), alpha_min=mpf("0.09") / e ** 2, alpha_max=mpf("0.09") * e,
                            blocks=[20] * 20, delta=mpf("0.1"), beta=lambda s: mpf("0.5") ** s),
    # General form with Bernoulli zeta; unequal blocks (a_min = 19, a_max = 20).
    "general_bernoulli": base(model="general", arrivals="bernoulli", lambda_u=mpf(30) / (pi * mpf(10) ** 6),
                              p=mpf("0.1"), alpha_min=mpf("0.2"), alpha_max=mpf("0.9"),
                              blocks=[20] * 6 + [19] * 4, delta=mpf("0.3"), beta=lambda s: mpf("0.7") ** s),
    # General form where the request-count mass makes delta' negative.
    "general_infeasible": base(model="general", arrivals="poisson", lambda_u=mpf(3) / (pi * mpf(10) ** 6),
                               lambda_r=mpf("0.09"), alpha_min=mpf("0.09") / e ** 2, alpha_max=mpf("0.09") * e,
                               blocks=[10] * 10, delta=mpf("0.5")),
}


def main():
    for name, pt in POINTS.items():
        if pt["model"] == "bernoulli":
            dp = delta_prime_bernoulli(pt)
        elif pt["model"] == "poisson":
            dp = delta_prime_poisson(pt)
        else:
            dp = delta_prime_general(pt)
        eps = epsilon(pt, dp)
        eps_txt = mp.nstr(eps, 20) if eps is not None else "NaN"
        print(f"{name}: delta_prime = {mp.nstr(dp, 20)}, epsilon = {eps_txt}")


if __name__ == "__main__":
    main()
