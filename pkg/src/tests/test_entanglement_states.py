import math

import numpy as np
import pytest

from src.network.states import (
    EntanglementError,
    TwoQubitState,
    concurrence,
    measurement_probabilities,
    wilk_states,
)


@pytest.mark.parametrize("sign", ["+", "-"])
def test_emitted_states_are_maximally_entangled(sign):
    psi_a, psi_b = wilk_states(sign)
    assert psi_a.norm == pytest.approx(1.0, abs=1e-12)
    assert psi_b.norm == pytest.approx(1.0, abs=1e-12)
    assert concurrence(psi_a) == pytest.approx(1.0)
    assert concurrence(psi_b) == pytest.approx(1.0)
    assert psi_a.labels == ("atom", "photon")
    assert psi_b.labels == ("photon", "photon")


def test_outcome_correlations():
    psi_a, psi_b = wilk_states()
    assert measurement_probabilities(psi_a) == pytest.approx(
        {"00": 0.5, "01": 0.0, "10": 0.0, "11": 0.5}
    )
    # After mapping, the two photons always carry opposite polarizations.
    assert measurement_probabilities(psi_b) == pytest.approx(
        {"00": 0.0, "01": 0.5, "10": 0.5, "11": 0.0}
    )


def test_signs_give_orthogonal_states():
    plus_a, plus_b = wilk_states("+")
    minus_a, minus_b = wilk_states("-")
    assert abs(plus_a.inner(minus_a)) == pytest.approx(0.0, abs=1e-12)
    assert abs(plus_b.inner(minus_b)) == pytest.approx(0.0, abs=1e-12)
    for state in (plus_a, plus_b, minus_a, minus_b):
        assert state.inner(state).real == pytest.approx(1.0, abs=1e-12)


def test_product_state_has_no_concurrence():
    r = 1.0 / math.sqrt(2.0)
    product = TwoQubitState(np.array([r, r, 0.0, 0.0]))
    assert concurrence(product) == pytest.approx(0.0)


def test_unnormalized_state_is_rejected():
    with pytest.raises(EntanglementError, match="not normalized"):
        concurrence(TwoQubitState(np.array([1.0, 1.0, 0.0, 0.0])))
    with pytest.raises(EntanglementError):
        measurement_probabilities(TwoQubitState(np.zeros(4)))


def test_construction_errors():
    with pytest.raises(EntanglementError):
        TwoQubitState(np.ones(3))
    with pytest.raises(EntanglementError):
        wilk_states("x")


def test_repr_lists_populated_terms():
    psi_a, _ = wilk_states()
    text = repr(psi_a)
    assert "|00⟩" in text and "|11⟩" in text
    assert "|01⟩" not in text
