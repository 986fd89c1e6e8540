import numpy as np
import pytest

from paircause.contrasts import (CustomContrast, Difference, Lexicographic,
                                 WeightedAggregate, WinHalfTie, WinStrict,
                                 antisymmetry_constant, eval_contrast)


def test_difference():
    assert eval_contrast(Difference(), [3.0], [5.0]) == -2.0


def test_win_half_tie_tie_is_half():
    assert eval_contrast(WinHalfTie(), [4.0], [4.0]) == 0.5
    assert eval_contrast(WinHalfTie(), [5.0], [4.0]) == 1.0
    assert eval_contrast(WinHalfTie(), [3.0], [4.0]) == 0.0


def test_win_strict_self_is_zero():
    assert eval_contrast(WinStrict(), [4.0], [4.0]) == 0.0


def test_weighted_aggregate_example():
    spec = WeightedAggregate(weights=(0.5, 0.5),
                             components=(WinHalfTie(), WinStrict()))
    assert eval_contrast(spec, [2.0, 1.0], [2.0, 0.0]) == pytest.approx(0.75, abs=0)


def test_lexicographic_first_tie_second_decides():
    spec = Lexicographic(directions=("higher", "higher"))
    assert eval_contrast(spec, [2.0, 1.0], [2.0, 3.0]) == 0.0
    assert eval_contrast(spec, [2.0, 3.0], [2.0, 1.0]) == 1.0
    assert eval_contrast(spec, [3.0, 0.0], [2.0, 9.0]) == 1.0


def test_lexicographic_full_tie_conventions():
    half = Lexicographic(directions=("higher", "higher"))
    literal = Lexicographic(directions=("higher", "higher"), ties="literal")
    y = [2.0, 3.0]
    assert eval_contrast(half, y, y) == 0.5
    assert eval_contrast(literal, y, y) == 1.0


def test_lexicographic_lower_is_better():
    spec = Lexicographic(directions=("lower",))
    assert eval_contrast(spec, [1.0], [2.0]) == 1.0
    assert eval_contrast(spec, [2.0], [1.0]) == 0.0


def test_antisymmetry_constants():
    assert antisymmetry_constant(Difference()) == 0.0
    assert antisymmetry_constant(WinHalfTie()) == 1.0
    assert antisymmetry_constant(WinStrict()) is None
    assert antisymmetry_constant(Lexicographic(directions=("higher",))) is None
    agg = WeightedAggregate(weights=(0.25, 0.75),
                            components=(Difference(), WinHalfTie()))
    assert antisymmetry_constant(agg) == pytest.approx(0.75)
    mixed = WeightedAggregate(weights=(0.5, 0.5),
                              components=(WinHalfTie(), WinStrict()))
    assert antisymmetry_constant(mixed) is None


def test_declared_constant_overrides():
    spec = Lexicographic(directions=("higher",), declared_constant=1.0)
    assert antisymmetry_constant(spec) == 1.0


def test_antisymmetry_property_on_random_probes(rng):
    specs = [
        Difference(),
        WinHalfTie(),
        WeightedAggregate(weights=(0.3, 0.7),
                          components=(WinHalfTie(), Difference())),
        Lexicographic(directions=("higher", "lower"), declared_constant=1.0),
    ]
    for spec in specs:
        c = antisymmetry_constant(spec)
        assert c is not None
        for _ in range(200):
            y1 = rng.integers(0, 4, size=spec.dim).astype(float)
            y2 = rng.integers(0, 4, size=spec.dim).astype(float)
            total = eval_contrast(spec, y1, y2) + eval_contrast(spec, y2, y1)
            assert abs(total - c) < 1e-12


def test_weight_linearity(rng):
    w_a = (0.2, 0.8)
    w_b = (0.6, 0.4)
    comps = (WinHalfTie(), WinStrict())
    for alpha in (0.0, 0.25, 0.7, 1.0):
        blended = tuple(alpha * a + (1 - alpha) * b for a, b in zip(w_a, w_b))
        spec_blend = WeightedAggregate(weights=blended, components=comps)
        spec_a = WeightedAggregate(weights=w_a, components=comps)
        spec_b = WeightedAggregate(weights=w_b, components=comps)
        for _ in range(30):
            y1 = rng.integers(0, 3, size=2).astype(float)
            y2 = rng.integers(0, 3, size=2).astype(float)
            expect = (alpha * eval_contrast(spec_a, y1, y2)
                      + (1 - alpha) * eval_contrast(spec_b, y1, y2))
            assert eval_contrast(spec_blend, y1, y2) == pytest.approx(expect, abs=1e-12)


def test_matrix_agrees_with_scalar(rng):
    spec = WeightedAggregate(weights=(0.5, 0.5),
                             components=(WinHalfTie(), Difference()))
    yl = rng.integers(0, 3, size=(5, 2)).astype(float)
    yr = rng.integers(0, 3, size=(4, 2)).astype(float)
    mat = spec.matrix(yl, yr)
    for i in range(5):
        for j in range(4):
            assert mat[i, j] == pytest.approx(spec(yl[i], yr[j]), abs=0)


def test_custom_contrast():
    spec = CustomContrast(fn=lambda a, b: float(a[0] >= b[0]), ndim=1,
                          label="geq")
    assert eval_contrast(spec, [2.0], [2.0]) == 1.0
    assert antisymmetry_constant(spec) is None


def test_dimension_mismatch_raises():
    with pytest.raises(ValueError, match="dimension"):
        eval_contrast(Difference(), [1.0, 2.0], [1.0])
    with pytest.raises(ValueError, match="expects"):
        eval_contrast(Lexicographic(directions=("higher", "higher")),
                      [1.0], [2.0])


def test_non_finite_raises():
    with pytest.raises(ValueError, match="non-finite"):
        eval_contrast(Difference(), [np.nan], [1.0])
    with pytest.raises(ValueError, match="non-finite"):
        eval_contrast(WinHalfTie(), [1.0], [np.inf])


def test_bad_weights_raise():
    with pytest.raises(ValueError, match="sum to 1"):
        WeightedAggregate(weights=(0.5, 0.6),
                          components=(WinHalfTie(), WinHalfTie()))
    with pytest.raises(ValueError, match="non-negative"):
        WeightedAggregate(weights=(-0.5, 1.5),
                          components=(WinHalfTie(), WinHalfTie()))
    with pytest.raises(ValueError, match="univariate"):
        WeightedAggregate(weights=(1.0,),
                          components=(Lexicographic(directions=("higher", "lower")),))


def test_bad_directions_raise():
    with pytest.raises(ValueError, match="higher"):
        Lexicographic(directions=("up",))
