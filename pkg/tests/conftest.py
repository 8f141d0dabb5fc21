from fractions import Fraction

from superholder.core.puiseux import PuiseuxSeries


def series(p: int, coeffs: dict, prec: Fraction | int) -> PuiseuxSeries:
    return PuiseuxSeries.from_coeffs(p, {Fraction(e): c for e, c in coeffs.items()}, prec)


X_P2 = series(2, {1: 1}, 16)
X_P3 = series(3, {1: 1}, 16)
ONE_PLUS_X_P3 = series(3, {0: 1, 1: 1}, 9)
SQRT_X_P2 = series(2, {Fraction(1, 2): 1}, 3)
# γ_4(X) = (1+X)^4 − 1 over F_3
GAMMA_4_P3 = series(3, {1: 1, 3: 1, 4: 1}, 9)
# γ_5(X) = (1+X)^5 − 1 over F_2
GAMMA_5_P2 = series(2, {1: 1, 4: 1, 5: 1}, 8)
