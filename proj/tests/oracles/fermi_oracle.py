"""Independent high-precision reference values for the C++ test suites.

Fermi functions are evaluated with mpmath: Dirichlet eta at z=1, the
polylogarithm series for |z| < 1, and the Bose-Einstein style integral (mpmath.quad at 40 digits, variable t = u^(1/alpha)
below alpha = 1 so the integrand is bounded at the origin) elsewhere, cross-checked against
mpmath.polylog where it converges. Nothing here shares code with the C++
implementation.
"""
import mpmath as mp

mp.mp.dps = 40


def fermi(alpha, z):
    alpha = mp.mpf(alpha)
    z = mp.mpc(z)
    if z == 1:
        return mp.altzeta(alpha)
    if abs(z) < 1:
        return -mp.polylog(alpha, -z)
    g = lambda t: z * mp.e ** (-t) / (1 + z * mp.e ** (-t))
    p = min(alpha, 1)
    f = lambda u: u ** ((alpha - p) / p) * g(u ** (1 / p)) / p
    if abs(z) > 1:
        c = mp.log(abs(z))
        tpts = [0, c / 2, c, c + 5, c + 50]
    else:
        tpts = [0, 5, 60]
    pole = mp.log(-z)
    d = abs(mp.im(pole))
    if d < 1:
        c = max(mp.re(pole), 0)
        tpts += [c + s * d * 4 ** k for k in range(14) for s in (-1, 1)] + [c]
        tpts = sorted(set(t for t in tpts if t >= 0))
    v = mp.quad(f, [t ** p for t in tpts], maxdegree=10) / mp.gamma(alpha)
    try:
        w = -mp.polylog(alpha, -z)
        assert abs(v - w) <= mp.mpf(10) ** -17 * abs(w), (alpha, z, v, w)
    except (NotImplementedError, ValueError):
        pass
    return v


def main():
    cases = [(0.5, 1), (1.5, 1), (2.5, 1),
             (0.5, 0.7), (1.5, 0.7), (2.5, 0.7),
             (1.5, 2.0), (2.5, 10.0), (1.5, 1000.0), (0.5, 50.0),
             (1.5, -0.9), (2.5, mp.mpc(3, 4)), (1.5, mp.mpc(-5, 0.1)),
             (0.5, mp.mpc(-0.3, 0.6)), (0.25, 3.0), (4.0, 2.0),
             (1.5, mp.mpc(-1.5, 1e-5)), (0.5, mp.mpc(-30, 1e-5)),
             (2.5, mp.mpc(-1000, 0.01)), (0.5, mp.mpc(-1, 2e-6))]
    for a, z in cases:
        v = fermi(a, z)
        print(f"alpha={a} z={mp.nstr(mp.mpc(z), 8)} -> {mp.nstr(v.real, 17)} {mp.nstr(v.imag, 17)}")
    print("(2pi)^-1.5 =", mp.nstr((2 * mp.pi) ** -1.5, 17))
    print("P_bulk(1,1,0) =", mp.nstr((2 * mp.pi) ** -1.5 * fermi(2.5, 1), 17))
    print("rho_bulk(1,1,0) =", mp.nstr((2 * mp.pi) ** -1.5 * fermi(1.5, 1), 17))
    print("chi2_bulk(1,1,0) =", mp.nstr(-(2 * mp.pi) ** -1.5 * fermi(0.5, 1) / 12, 17))
    s = mp.mpf(1) / 2
    d = (2 * mp.pi) ** -1.5 * mp.mpf(1) / 2 * (mp.sinh(s) - s * mp.cosh(s)) / mp.sinh(s) ** 2
    print("dG/domega(beta=1,omega=1) =", mp.nstr(d, 17))
    s = mp.mpf(1) / 4
    d = (2 * mp.pi * 0.5) ** -1.5 * mp.mpf(1) / 4 * (mp.sinh(s) - s * mp.cosh(s)) / mp.sinh(s) ** 2
    print("dG/domega(beta=0.5,omega=1) =", mp.nstr(d, 17))
    print("mehler diag beta=1 omega=2 =", mp.nstr((2 * mp.pi) ** -1.5 / mp.sinh(1), 17))
    print("free gaussian (1,1,1) =", mp.nstr((2 * mp.pi) ** -1.5 * mp.e ** -1.5, 17))
    # Landau sum, beta=1 z=0.5 omega=1 by direct mpmath sum
    for (b, z, w) in [(1, 0.5, 1), (1, 0.5, 2), (0.5, 0.3, 1)]:
        P = w * (2 * mp.pi * b) ** -1.5 * mp.nsum(lambda k: fermi(1.5, z * mp.e ** (-(k + 0.5) * w * b)), [0, 60])
        print(f"P_bulk({b},{z},{w}) =", mp.nstr(P, 17))


if __name__ == "__main__":
    main()
