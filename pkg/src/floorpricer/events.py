"""Auction events and censorship classification.

A second-price auction with reserve ``f`` and top bids ``b1 >= b2`` pays
``max(f, b2)`` if ``f <= b1`` and nothing otherwise. The observable outcome
is censored: a lost auction reveals neither bid; a win at exactly the floor
reveals ``b1`` but only bounds ``b2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


class EventValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Lost:
    pass


@dataclass(frozen=True)
class Won:
    first_bid: int
    closing_price: int


Outcome = Union[Lost, Won]


@dataclass(frozen=True)
class AuctionEvent:
    """One auction's observables. Timestamps are milliseconds since epoch."""

    timestamp: int
    user_id: str
    placement_id: str
    applied_floor: int
    outcome: Outcome

    def __post_init__(self):
        if self.applied_floor < 0:
            raise EventValidationError("applied_floor must be nonnegative")
        out = self.outcome
        if isinstance(out, Won):
            if out.first_bid < self.applied_floor:
                raise EventValidationError("won auction requires first_bid >= floor")
            if not (self.applied_floor <= out.closing_price <= out.first_bid):
                raise EventValidationError(
                    "closing price must lie in [floor, first_bid]"
                )


@dataclass(frozen=True)
class Uncensored:
    b1: int
    b2: int


@dataclass(frozen=True)
class HalfCensored:
    b1: int
    censor_point: int


@dataclass(frozen=True)
class FullCensored:
    censor_point: int


CensorshipStatus = Union[Uncensored, HalfCensored, FullCensored]


def derive_censorship(event: AuctionEvent) -> CensorshipStatus:
    """Classify an event's censorship.

    Lost -> fully censored at the floor; won at exactly the floor -> the
    second bid is censored below the floor; won above the floor -> the
    closing price is the second bid exactly.
    """
    out = event.outcome
    if isinstance(out, Lost):
        return FullCensored(censor_point=event.applied_floor)
    if out.closing_price == event.applied_floor:
        return HalfCensored(b1=out.first_bid, censor_point=event.applied_floor)
    return Uncensored(b1=out.first_bid, b2=out.closing_price)


def event_from_ground_truth(
    timestamp: int, user_id: str, placement_id: str, floor: int, b1: int, b2: int
) -> AuctionEvent:
    """Build the observable event a (floor, b1, b2) triple induces."""
    if b2 > b1:
        raise EventValidationError("second bid cannot exceed first bid")
    if b1 < floor:
        outcome: Outcome = Lost()
    else:
        outcome = Won(first_bid=b1, closing_price=max(b2, floor))
    return AuctionEvent(timestamp, user_id, placement_id, floor, outcome)


def realized_revenue(floor: int, b1: int, b2: int) -> int:
    """Publisher revenue of one auction: ``max(floor, b2)`` if ``floor <= b1``."""
    if b2 > b1:
        raise EventValidationError("second bid cannot exceed first bid")
    return max(floor, b2) if floor <= b1 else 0
