import json

import pytest

from core.errors import (
    BergdistError,
    BudgetExceeded,
    ConfigurationError,
    HypothesisViolation,
    InsufficientLevels,
    NotConvergent,
    NotReproducible,
    OutOfDomain,
    UnboundedFunction,
    UnsupportedDimension,
)


@pytest.mark.parametrize(
    "error, code",
    [
        (HypothesisViolation("q > 0", q=0.0), 2),
        (UnsupportedDimension(3), 2),
        (OutOfDomain(1 + 0j, "upper half-plane"), 2),
        (UnboundedFunction("grows"), 2),
        (ConfigurationError("missing"), 2),
        (BudgetExceeded(100, 1.5, 0.1), 3),
        (InsufficientLevels(3), 3),
        (NotReproducible("Divergent"), 4),
        (NotConvergent(0.5, "Inconclusive"), 4),
    ],
)
def test_exit_codes(error, code):
    assert isinstance(error, BergdistError)
    assert error.exit_code == code
    assert error.to_dict()["exit_code"] == code


def test_payload_is_json():
    payload = BudgetExceeded(10, 2 + 1j, 0.5).to_dict()
    text = json.dumps(payload)
    assert json.loads(text)["details"]["estimate"] == [2.0, 1.0]
    assert payload["error"] == "BudgetExceeded"


def test_hypothesis_message_names_inequality():
    exc = HypothesisViolation("t > s", t=1.0, s=1.0)
    assert exc.inequality == "t > s"
    assert "t > s" in exc.message
