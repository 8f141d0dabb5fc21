from fractions import Fraction

import pytest

import superholder.core.phigamma as pg
from superholder.core.arith import GammaElement
from superholder.core.errors import (
    ContextMismatch,
    NotInvertible,
    PreconditionViolation,
    RPreconditionFailed,
    TooFewPoints,
)
from superholder.core.puiseux import PuiseuxSeries
from superholder.core.valuation import Valuation, Verdict
from tests.conftest import series

PREC = 40


def upper_unipotent(p: int = 3, prec: int = 8) -> pg.MatrixSeries:
    one, zero = PuiseuxSeries.constant(p, 1, prec), PuiseuxSeries.zero(p, prec)
    return pg.MatrixSeries(((one, series(p, {1: 1}, prec)), (zero, one)))


@pytest.fixture
def gauged() -> pg.PhiGammaModule:
    # U = 1 + X over F_3, so P = (1+X)^2 and G_g = (1+X)^(a−1)
    return pg.gauge_module(pg.MatrixSeries.scalar(series(3, {0: 1, 1: 1}, PREC)), 1)


def test_unipotent_det_and_inverse():
    u = upper_unipotent()
    assert u.det() == PuiseuxSeries.constant(3, 1, 8)
    inv = u.inverse()
    assert inv.rows[0][1] == series(3, {1: 2}, 8)
    assert (u * inv).is_identity()


def test_inverse_scaled_pulls_out_monomial():
    e, w = pg.MatrixSeries.scalar(series(3, {2: 1, 3: 1}, 10)).inverse_scaled()
    assert e == 2
    assert w.rows[0][0].val() == Valuation.exact(0)


@pytest.mark.parametrize(
    "m",
    [
        pytest.param(pg.MatrixSeries.scalar(series(3, {1: 1}, 8)), id="det has positive valuation"),
        pytest.param(pg.MatrixSeries.scalar(PuiseuxSeries.zero(3, 8)), id="det vanishes"),
    ],
)
def test_inverse_rejects(m):
    with pytest.raises(NotInvertible):
        m.inverse()


def test_non_square_rejected():
    one = PuiseuxSeries.constant(3, 1, 8)
    with pytest.raises(ContextMismatch):
        pg.MatrixSeries(((one, one),))


def test_apply_rank_mismatch():
    with pytest.raises(ContextMismatch):
        upper_unipotent().apply((PuiseuxSeries.constant(3, 1, 8),))


def test_trivial_module_validates():
    d = pg.trivial_module(3, 2, 1, 20)
    report = pg.validate_module(d, pg.module_samples(d, 1))
    assert report.verdict == Verdict.CERTIFIED
    assert report.commutation


def test_trivial_module_has_no_profile():
    with pytest.raises(TooFewPoints):
        pg.matrix_sh_profile(pg.trivial_module(3, 1, 1, 20), 2)


def test_gauge_module_frobenius_matrix(gauged):
    assert gauged.P.rows[0][0] == series(3, {0: 1, 1: 2, 2: 1}, PREC)
    assert pg.minimal_r(gauged) == 1


def test_gauge_module_validates(gauged):
    assert pg.validate_module(gauged, pg.module_samples(gauged, 1)).verdict == Verdict.CERTIFIED


@pytest.mark.parametrize("inverse", [False, True])
def test_gauge_module_profile(gauged, inverse):
    profile = pg.matrix_sh_profile(gauged, 2, inverse=inverse)
    assert profile.floors == {i: Valuation.exact(3 ** (1 + i)) for i in range(3)}
    assert (profile.lam, profile.mu) == (1, 0)


def test_fixed_point_series_matches_cocycle(gauged):
    g = GammaElement.from_coordinate(1, 3, 1)
    result = pg.fixed_point_series(gauged, g, 1, i_max=1)
    # H_g = X^(−1)((1+X)^3 − 1) = X^2
    assert result.target.rows[0][0].coefficients() == {Fraction(2): 1}
    assert result.term_vals[0] == Valuation.exact(2)
    assert result.agrees


def test_fixed_point_series_needs_displacement_above_r(gauged):
    with pytest.raises(RPreconditionFailed):
        pg.fixed_point_series(gauged, GammaElement.from_coordinate(1, 3, 1), 5)


def test_frobenius_power_bound(gauged):
    assert pg.frobenius_power_bound(gauged, GammaElement.from_coordinate(1, 3, 1)) == (
        1,
        Verdict.CERTIFIED,
    )


def test_frobenius_power_bound_needs_moving_g():
    with pytest.raises(PreconditionViolation):
        pg.frobenius_power_bound(pg.trivial_module(3, 1, 1, 20), GammaElement.from_coordinate(1, 3, 1))


@pytest.mark.parametrize(
    ("x", "m_hat"),
    [
        pytest.param(series(3, {1: 1}, 30), 0, id="X is fixed by level 0"),
        pytest.param(series(3, {Fraction(1, 3): 1}, 30), 1, id="X^(1/3) needs level 1"),
    ],
)
def test_vector_sh_profile(x, m_hat):
    d = pg.trivial_module(3, 1, 1, 30)
    assert pg.vector_sh_profile(d, (x,), 2).m_hat == m_hat


def test_tabulated_cocycle(gauged):
    samples = pg.module_samples(gauged, 1)
    table = gauged.tabulate(samples)
    assert table.G(samples[0]) == gauged.G(samples[0])
    with pytest.raises(PreconditionViolation):
        table.G(GammaElement.from_coordinate(5, 3, 1))


def test_cocycle_rejects_other_depth(gauged):
    with pytest.raises(ContextMismatch):
        gauged.G(GammaElement.from_coordinate(1, 3, 2))


def test_validate_module_needs_unit_cocycle():
    x = pg.MatrixSeries.scalar(series(3, {1: 1}, 20))
    d = pg.PhiGammaModule(pg.MatrixSeries.identity(3, 1, 20), 1, lambda _g: x)
    report = pg.validate_module(d, pg.module_samples(d, 1))
    assert {v for _, v in report.determinants} == {Valuation.exact(1)}
    assert report.verdict == Verdict.REFUTED


def test_validate_module_below_min_prec_is_unresolved():
    d = pg.trivial_module(3, 1, 1, 20)
    samples = pg.module_samples(d, 1)
    assert pg.validate_module(d, samples, min_prec=20).verdict == Verdict.CERTIFIED
    report = pg.validate_module(d, samples, min_prec=50)
    assert {v for _, v in report.determinants} == {Valuation.exact(0)}
    assert report.verdict == Verdict.UNRESOLVED
