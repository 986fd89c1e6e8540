import numpy as np
import pytest

from paircause import ObservedDataset, PotentialPopulation, UnitRecord


def test_basic_properties(t4):
    assert t4.n == 4
    assert t4.n1 == 2 and t4.n0 == 2
    assert t4.pi1 == 0.5 and t4.pi0 == 0.5
    assert t4.n_outcomes == 1
    assert t4.n_covariates == 0


def test_from_units_round_trip(t4):
    rebuilt = ObservedDataset.from_units(t4.units())
    assert np.array_equal(rebuilt.treat, t4.treat)
    assert np.array_equal(rebuilt.y, t4.y)
    assert list(rebuilt.ids) == list(t4.ids)


def test_too_small_raises():
    with pytest.raises(ValueError, match="at least 4"):
        ObservedDataset(treat=[1, 0, 1], y=[1.0, 2.0, 3.0])


def test_empty_arm_raises():
    with pytest.raises(ValueError, match="arms"):
        ObservedDataset(treat=[1, 1, 1, 1], y=[1.0, 2.0, 3.0, 4.0])


def test_nonbinary_treatment_raises():
    with pytest.raises(ValueError, match="0/1"):
        ObservedDataset(treat=[1, 0, 2, 0], y=[1.0, 2.0, 3.0, 4.0])


def test_duplicate_ids_raise():
    with pytest.raises(ValueError, match="unique"):
        ObservedDataset(treat=[1, 0, 1, 0], y=[1.0, 2.0, 3.0, 4.0],
                        ids=["a", "a", "b", "c"])


def test_nonfinite_outcome_raises():
    with pytest.raises(ValueError, match="non-finite"):
        ObservedDataset(treat=[1, 0, 1, 0], y=[1.0, np.nan, 3.0, 4.0])


def test_covariate_length_mismatch_raises():
    units = [
        UnitRecord("a", 1, (1.0,), (0.5,)),
        UnitRecord("b", 0, (2.0,), (0.5, 1.0)),
        UnitRecord("c", 1, (3.0,), (0.5,)),
        UnitRecord("d", 0, (4.0,), (0.5,)),
    ]
    with pytest.raises(ValueError, match="covariate length"):
        ObservedDataset.from_units(units)


def test_population_reveal():
    pop = PotentialPopulation(y_treated=[1.0, 2.0, 3.0, 4.0],
                              y_control=[0.0, 0.0, 0.0, 0.0],
                              x=np.arange(8.0).reshape(4, 2))
    ds = pop.reveal([1, 0, 0, 1])
    assert ds.y[:, 0].tolist() == [1.0, 0.0, 0.0, 4.0]
    assert np.array_equal(ds.x, pop.x)
    with pytest.raises(ValueError, match="length"):
        pop.reveal([1, 0])


def test_population_arm_shapes_must_match():
    with pytest.raises(ValueError, match="same shape"):
        PotentialPopulation(y_treated=[[1.0, 2.0]] * 4, y_control=[1.0] * 4)
