import pytest
from hypothesis import given, strategies as st

from floorpricer.events import (
    AuctionEvent,
    EventValidationError,
    FullCensored,
    HalfCensored,
    Lost,
    Uncensored,
    Won,
    derive_censorship,
    event_from_ground_truth,
    realized_revenue,
)


def test_revenue_rule_cases():
    assert realized_revenue(0, 100, 60) == 60
    assert realized_revenue(80, 100, 60) == 80
    assert realized_revenue(100, 100, 60) == 100
    assert realized_revenue(101, 100, 60) == 0
    assert realized_revenue(50, 100, 60) == 60
    with pytest.raises(EventValidationError):
        realized_revenue(0, 50, 60)


@given(
    floor=st.integers(0, 200),
    b1=st.integers(0, 200),
    b2=st.integers(0, 200),
)
def test_revenue_additive_identity(floor, b1, b2):
    # max(f, b2) * 1{f <= b1} == (b2 - f)^+ + f * 1{f <= b1} whenever b2 <= b1
    if b2 > b1:
        b1, b2 = b2, b1
    assert realized_revenue(floor, b1, b2) == max(b2 - floor, 0) + (
        floor if floor <= b1 else 0
    )


def test_event_validation():
    with pytest.raises(EventValidationError):
        AuctionEvent(0, "u", "p", -1, Lost())
    with pytest.raises(EventValidationError):
        AuctionEvent(0, "u", "p", 100, Won(first_bid=90, closing_price=90))
    with pytest.raises(EventValidationError):
        AuctionEvent(0, "u", "p", 100, Won(first_bid=200, closing_price=90))
    with pytest.raises(EventValidationError):
        AuctionEvent(0, "u", "p", 100, Won(first_bid=200, closing_price=300))
    AuctionEvent(0, "u", "p", 100, Won(first_bid=200, closing_price=100))


def test_ground_truth_round_trip_exhaustive():
    """Every (floor, b1, b2) on a small lattice classifies consistently."""
    for floor in range(0, 12):
        for b1 in range(0, 12):
            for b2 in range(0, b1 + 1):
                ev = event_from_ground_truth(5, "u", "p", floor, b1, b2)
                status = derive_censorship(ev)
                if b1 < floor:
                    assert status == FullCensored(censor_point=floor)
                elif b2 <= floor:
                    assert status == HalfCensored(b1=b1, censor_point=floor)
                else:
                    assert status == Uncensored(b1=b1, b2=b2)
                # observable closing price matches the revenue rule
                if isinstance(ev.outcome, Won):
                    assert ev.outcome.closing_price == realized_revenue(floor, b1, b2)
                else:
                    assert realized_revenue(floor, b1, b2) == 0


def test_ground_truth_rejects_inverted_bids():
    with pytest.raises(EventValidationError):
        event_from_ground_truth(0, "u", "p", 10, 50, 60)
