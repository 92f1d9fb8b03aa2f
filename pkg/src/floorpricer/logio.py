"""Reading and writing auction logs as JSON lines.

One auction per line:

    {"ts": 1700000000000, "user": "u1", "placement": "p1",
     "floor": 120000, "outcome": {"b1": 900000, "close": 500000}}

with ``"outcome": "lost"`` for auctions the floor killed. All money fields
are integer micro-units.
"""

from __future__ import annotations

import json
import logging
from typing import IO, Iterator

from .events import AuctionEvent, EventValidationError, Lost, Won

logger = logging.getLogger(__name__)


class LogFormatError(ValueError):
    """A malformed line, annotated with its 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def _parse_record(obj: dict, line_number: int) -> AuctionEvent:
    try:
        ts = obj["ts"]
        user = obj["user"]
        placement = obj["placement"]
        floor = obj["floor"]
        outcome = obj["outcome"]
    except (KeyError, TypeError) as exc:
        raise LogFormatError(line_number, f"missing field: {exc}") from None
    if outcome == "lost":
        parsed = Lost()
    elif isinstance(outcome, dict):
        try:
            parsed = Won(first_bid=outcome["b1"], closing_price=outcome["close"])
        except KeyError as exc:
            raise LogFormatError(line_number, f"missing outcome field: {exc}") from None
        except (TypeError, EventValidationError) as exc:
            raise LogFormatError(line_number, str(exc)) from None
    else:
        raise LogFormatError(line_number, f"outcome must be 'lost' or an object, got {outcome!r}")
    try:
        return AuctionEvent(
            timestamp=ts,
            user_id=user,
            placement_id=placement,
            applied_floor=floor,
            outcome=parsed,
        )
    except (EventValidationError, TypeError) as exc:
        raise LogFormatError(line_number, str(exc)) from None


def read_events(fp: IO[str], strict: bool = True) -> Iterator[AuctionEvent]:
    """Yield events from a JSONL stream.

    In strict mode any malformed line raises :class:`LogFormatError`; in
    lenient mode it is logged with its line number and skipped. Blank lines
    are always ignored.
    """
    for i, line in enumerate(fp, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise LogFormatError(i, "record must be a JSON object")
            yield _parse_record(obj, i)
        except (json.JSONDecodeError, LogFormatError) as exc:
            if strict:
                if isinstance(exc, LogFormatError):
                    raise
                raise LogFormatError(i, f"invalid JSON: {exc}") from None
            logger.warning("skipping malformed record: %s", exc)


def event_to_record(event: AuctionEvent) -> dict:
    if isinstance(event.outcome, Lost):
        outcome = "lost"
    else:
        outcome = {"b1": event.outcome.first_bid, "close": event.outcome.closing_price}
    return {
        "ts": event.timestamp,
        "user": event.user_id,
        "placement": event.placement_id,
        "floor": event.applied_floor,
        "outcome": outcome,
    }


def write_events(fp: IO[str], events) -> int:
    """Write events as JSONL; returns the number written."""
    n = 0
    for event in events:
        fp.write(json.dumps(event_to_record(event), separators=(",", ":")))
        fp.write("\n")
        n += 1
    return n
