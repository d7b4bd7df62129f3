"""Arbitrary-precision recomputation of the s1-base regret bound.

Every quantity is rebuilt from the published parameter table with 2-state
closed forms, independently of the Rust code. The printed values are frozen
into the acceptance tests.

    python3 bound_oracle.py
"""
from mpmath import mp, mpf, log, ceil

mp.dps = 50

EPS = mpf("0.05")
TIMES = [100, 1000, 10000]

# global chain: p00 = 0.4, p10 = 0.75
PG = [[mpf("0.4"), mpf("0.6")], [mpf("0.75"), mpf("0.25")]]
# per global state: (p11, p21, r1, r2) per arm
TABLE = [
    [("0.5", "0.5", 4, 6), ("0.6", "0.4", "5.8", "8.2"), ("0.7", "0.3", 1, 2)],
    [("0.55", "0.45", 10, 14), ("0.65", "0.35", 9, 11), ("0.75", "0.25", "2.5", 3)],
]
NS, N = 2, 3


def chain(p11, p21):
    p11, p21 = mpf(p11), mpf(p21)
    pi1 = p21 / (1 - p11 + p21)
    lam = abs(p11 - p21)
    m_max = max(1 / (1 - p11), 1 / p21)
    return pi1, 1 - pi1, lam, m_max


pi_g0 = PG[1][0] / (PG[0][1] + PG[1][0])
pi_g = [pi_g0, 1 - pi_g0]

mu = [[None] * N for _ in range(NS)]
pis, lams = [], []
m_max = [mpf(0)] * N
x_max = mpf(0)
for s in range(NS):
    for i, (p11, p21, r1, r2) in enumerate(TABLE[s]):
        a, b, lam, m = chain(p11, p21)
        r1, r2 = mpf(r1), mpf(r2)
        mu[s][i] = a * r1 + b * r2
        pis += [a, b]
        lams.append(lam)
        m_max[i] = max(m_max[i], m)
        x_max = max(x_max, r1, r2)

v = [[sum(PG[s][k] * mu[k][i] for k in range(NS)) for i in range(N)] for s in range(NS)]
v_star = [max(row) for row in v]
gap2 = [[(v_star[s] - v[s][i]) ** 2 for i in range(N)] for s in range(NS)]
delta_s = [min(g for g in gap2[s] if g > 0) for s in range(NS)]
delta = min(delta_s)
pi_min = min(pis)
pi_hat_max = max(max(p, 1 - p) for p in pis)
lam_bar_min = 1 - max(lams)
v_star_max = max(v_star)
x_card = 2

i_l = lam_bar_min / (3072 * ((x_max + 2) ** 2 * x_card * pi_hat_max * NS * (v_star_max + 2)) ** 2)
i_g = 1 / (128 * ((x_max + 2) * NS * (v_star_max + 2)) ** 2)
L = max(1 / i_l, 1 / i_g) / (16 * (v_star_max + 2) ** 2)
c1 = 2 / (EPS ** 2 * i_l)
c2 = 2 / (EPS ** 2 * i_g)

k_sets = []
for s in range(NS):
    order = sorted(range(N), key=lambda i: -v[s][i])
    k_sets.append({i for i in order[1:] if gap2[s][i] - 2 * EPS > delta_s[s]})

A = []
for i in range(N):
    if all(i in k for k in k_sets):
        dm = [4 * L / (gap2[s][i] - 2 * EPS) for s in range(NS) if gap2[s][i] - 2 * EPS > 0]
        A.append(max(c1, c2, max(dm)))
    else:
        A.append(max(c1, c2, 4 * L / delta))


def bound(a, t):
    t = mpf(t)
    explore = sum(
        (4 * (3 * a[i] * log(t) + 1) - 1) / 3 + m_max[i] * log(3 * a[i] * log(t) + 1, 4) for i in range(N)
    )
    k = ceil(log(mpf(3) / 2 * t + 1, 4))
    exploit = 6 * N * NS * (NS * x_card / pi_min + 2 * NS) * max(pi_g) * k
    return x_max * (explore + exploit)


print("I_L", mp.nstr(i_l, 20))
print("I_G", mp.nstr(i_g, 20))
print("L", mp.nstr(L, 20))
print("A", [mp.nstr(a, 20) for a in A])
for t in TIMES:
    print("theoretical", t, mp.nstr(bound(A, t), 20))
for t in TIMES:
    print("A=100", t, mp.nstr(bound([mpf(100)] * N, t), 20))
