"""Reference values for the unit tests, computed independently with mpmath.

Run: python3 tests/oracles/golden.py
"""
import math

import mpmath as mp

mp.mp.dps = 40
BASE = 12 * mp.sqrt(3)


def dfact(n):
    return mp.mpf(1) if n <= 0 else mp.fac2(n)


def card_t1(L, k):
    return 4 ** (k - 1) * dfact(2 * L + 3 * k - 5) / (mp.factorial(k) * dfact(2 * L + k - 1)) * L * mp.binomial(2 * L, L)


def card_t2(L, p, k):
    s = 2 * (L + p)
    return 4 ** k * dfact(s + 3 * k - 2) / (mp.factorial(k) * dfact(s + k)) * L * mp.binomial(2 * L, L) * p * mp.binomial(2 * p, p)


def _partial(term, k0, K):
    return math.fsum(term(k) for k in range(k0, K + 1))


def _log_dfact(n):
    if n <= 0:
        return 0.0
    if n % 2 == 0:
        return (n // 2) * math.log(2) + math.lgamma(n // 2 + 1)
    m = (n + 1) // 2
    return math.lgamma(2 * m + 1) - m * math.log(2) - math.lgamma(m + 1)


def _richardson(term, k0, K, tail_power):
    # tail of the series past K behaves like c K^{-tail_power}
    s1, s4 = _partial(term, k0, K), _partial(term, k0, K // 4)
    f = 4.0 ** tail_power
    return (f * s1 - s4) / (f - 1)


def z1_sum(L, K=400000):
    lb = math.log(12 * math.sqrt(3))
    t = lambda k: math.exp((k - 1) * math.log(4) + _log_dfact(2 * L + 3 * k - 5) - math.lgamma(k + 1)
                           - _log_dfact(2 * L + k - 1) + math.log(L * math.comb(2 * L, L)) - k * lb)
    return _richardson(t, 1 if L == 1 else 0, K, 1.5)


def z2_sum(L, p, K=400000):
    lb = math.log(12 * math.sqrt(3))
    s = 2 * (L + p)
    t = lambda k: math.exp(k * math.log(4) + _log_dfact(s + 3 * k - 2) - math.lgamma(k + 1) - _log_dfact(s + k)
                           + math.log(L * math.comb(2 * L, L) * p * math.comb(2 * p, p)) - k * lb)
    return _richardson(t, 0, K, 0.5)


def z2_closed(L, p):
    # identified from the sums above; consistent with the h-transform form of q_L
    r = lambda n: math.comb(2 * n, n) * n / (2 * 4 ** (n - 1))
    return 18 * 12 ** (L + p - 2) * r(L) * r(p) / (L + p)


def c1(k):
    return mp.mpf(3) ** (k - 2) / (4 * mp.sqrt(2 * mp.pi)) * k * mp.binomial(2 * k, k)


def z1(L):
    if L == 0:
        return 1 / (24 * mp.sqrt(3))
    if L == 1:
        return 1 / mp.mpf(2) - mp.sqrt(3) / 4  # identified from z1_sum(1)
    return mp.mpf(6) ** L * dfact(2 * L - 5) / (8 * mp.sqrt(3) * mp.factorial(L))


def q_inf(k, m):
    return 2 * z1(m + 1) * c1(k - m) / c1(k)


def main():
    print("z1(1) series", repr(z1_sum(1)), "1/2 - sqrt(3)/4 =", mp.nstr(z1(1), 20))
    for L in (2, 5):
        print(f"z1({L}) series", repr(z1_sum(L)), "closed", mp.nstr(z1(L), 20))
    for L, p in ((1, 1), (1, 2), (2, 3), (3, 3)):
        print(f"z2({L},{p}) series", repr(z2_sum(L, p)), "closed", z2_closed(L, p))
    print("q_inf(7, 3)", mp.nstr(q_inf(7, 3), 20))
    print("q_1(3, 1)", mp.nstr(mp.mpf(1) / (1 + 2) / (mp.mpf(1) / (1 + 3)) * q_inf(3, 1), 20))
    pre = mp.sqrt(3 / (2 * mp.pi))
    occ = pre * mp.quad(lambda y: y * mp.exp(-y) / (mp.sqrt(y) * (1 + y)), [0, 1, mp.inf])
    print("occupation y exp(-y)", mp.nstr(occ, 20))
    dens = lambda y, r=1, a=1: 3 * pre / r ** 3 * (a / (a + y)) * mp.sqrt(y) * mp.exp(-3 * y / (2 * r * r))
    print("hull mass r=1 a=1", mp.nstr(mp.quad(dens, [0, 1, mp.inf]), 20))
    print("hull mass r=2 a=0.5", mp.nstr(mp.quad(lambda y: dens(y, 2, 0.5), [0, 1, mp.inf]), 20))
    kolm = lambda x: 1 - 2 * mp.nsum(lambda j: (-1) ** (j - 1) * mp.exp(-2 * j * j * x * x), [1, mp.inf])
    for x in (0.5, 1.0, 1.36, 1.95):
        print("kolmogorov", x, mp.nstr(kolm(x), 20))
    print("P(K=2 | boundary 3)", mp.nstr(card_t1(3, 2) / BASE ** 2 / z1(3), 20))
    print("P(K=0 | boundary 1)", "excluded; P(K=1 | boundary 1)", mp.nstr(card_t1(1, 1) / BASE / z1(1), 20))


if __name__ == "__main__":
    main()
