"""Pairwise return construction and closing-hour alignment.

For an ordered market pair (source -> target) the steps are:

1. intersect the two trading calendars (drop dates where either market
   did not trade),
2. compute log returns over consecutive retained days, where consecutive
   means adjacent week days or a Friday -> Monday span,
3. pair the most current admissible source return with each target return:
   when the source closes at or after the target on a date (UTC), the
   source return of the previous trading day is used; when the source
   closes strictly earlier, the same-day return is used.

The shift rule is evaluated date by date from the clock metadata, so a
closing-hour change inside a sample splits the pairing at the change date
instead of discarding the sample.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .ingestion import MarketClock, PriceSeries, utc_close_instant

__all__ = [
    "AlignmentError",
    "ReturnSeries",
    "AlignedPair",
    "pairwise_calendar",
    "compute_returns",
    "align",
    "previous_trading_day",
]


class AlignmentError(ValueError):
    """Raised when calendars or clocks cannot support an alignment."""


def _is_weekday(d: dt.date) -> bool:
    return d.weekday() < 5


def consecutive_weekdays(d1: dt.date, d2: dt.date) -> bool:
    """True when d1 -> d2 are adjacent week days or a Friday -> Monday span."""
    if not (_is_weekday(d1) and _is_weekday(d2)):
        return False
    delta = (d2 - d1).days
    if delta == 1:
        return True
    return delta == 3 and d1.weekday() == 4


def previous_trading_day(d: dt.date) -> dt.date:
    """The week day whose session immediately precedes ``d``'s session."""
    return d - dt.timedelta(days=3 if d.weekday() == 0 else 1)


@dataclass(frozen=True)
class ReturnSeries:
    """Log returns keyed by the terminal date of each return."""

    market_id: str
    dates: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if len(self.dates) != values.size:
            raise AlignmentError(f"{self.market_id}: dates/values length mismatch")

    def __len__(self) -> int:
        return len(self.dates)

    def by_date(self) -> dict[dt.date, float]:
        return dict(zip(self.dates, self.values.tolist()))


@dataclass(frozen=True)
class AlignedPair:
    """Lag-shifted, jointly filtered value vectors for one ordered pair.

    Row u pairs the most current admissible source observation with the
    target observation dated ``dates[u]``.  ``shifts[u]`` is 1 when the
    source side was taken one trading day back, 0 for same-day pairing.
    """

    source_id: str
    target_id: str
    dates: tuple[dt.date, ...]
    source: np.ndarray
    target: np.ndarray
    shifts: np.ndarray
    closes_coincide: bool

    def __post_init__(self) -> None:
        if not (len(self.dates) == self.source.size == self.target.size == self.shifts.size):
            raise AlignmentError("aligned columns must have equal length")

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def shift(self) -> int:
        """Modal shift of the pair (the per-date value when not mixed)."""
        if self.shifts.size == 0:
            return 0
        return int(np.bincount(self.shifts.astype(int), minlength=2).argmax())

    @property
    def mixed_shift(self) -> bool:
        return self.shifts.size > 0 and len(set(self.shifts.tolist())) > 1


def pairwise_calendar(
    series_i: PriceSeries, series_j: PriceSeries
) -> tuple[dt.date, ...]:
    """Common trading dates of two price series, order preserved."""
    if not len(series_i) or not len(series_j):
        raise AlignmentError("empty price series")
    other = set(series_j.dates)
    common = tuple(d for d in series_i.dates if d in other)
    if not common:
        raise AlignmentError(
            f"no common trading dates for {series_i.market_id}/{series_j.market_id}"
        )
    return common


def compute_returns(
    series: PriceSeries, retained_dates: tuple[dt.date, ...] | list[dt.date]
) -> ReturnSeries:
    """Log returns between consecutive retained dates.

    Returns spanning anything other than adjacent week days or a
    Friday -> Monday weekend are dropped, so holidays removed upstream never
    leak into a multi-day return.
    """
    retained = list(retained_dates)
    available = set(series.dates)
    missing = [d for d in retained if d not in available]
    if missing:
        raise AlignmentError(
            f"{series.market_id}: retained dates not in series, e.g. {missing[0]}"
        )
    if len(retained) < 2:
        raise AlignmentError(f"{series.market_id}: need at least 2 retained dates")
    closes = dict(zip(series.dates, series.closes.tolist()))
    out_dates: list[dt.date] = []
    out_vals: list[float] = []
    for prev, cur in zip(retained, retained[1:]):
        if consecutive_weekdays(prev, cur):
            out_dates.append(cur)
            out_vals.append(float(np.log(closes[cur] / closes[prev])))
    return ReturnSeries(series.market_id, tuple(out_dates), np.array(out_vals))


def align(
    returns_i: ReturnSeries,
    returns_j: ReturnSeries,
    clock_i: MarketClock,
    clock_j: MarketClock,
) -> AlignedPair:
    """Pair source (i) values with target (j) values per the shift rule.

    Both inputs must sit on the same (pairwise) calendar, i.e. have the
    same return dates.  For each date t the UTC closes decide the pairing:
    close_i(t) >= close_j(t) pairs i's previous-day value with j's value at
    t (shift 1); close_i(t) < close_j(t) pairs same-day values (shift 0).
    Rows whose shifted source value does not exist are dropped.
    """
    if returns_i.dates != returns_j.dates:
        raise AlignmentError(
            f"{returns_i.market_id}/{returns_j.market_id}: "
            "inputs are not on a common calendar"
        )
    vals_i = returns_i.by_date()
    vals_j = returns_j.by_date()
    dates: list[dt.date] = []
    src: list[float] = []
    tgt: list[float] = []
    shifts: list[int] = []
    coincide = True
    for t in returns_j.dates:
        ci = utc_close_instant(clock_i, t)
        cj = utc_close_instant(clock_j, t)
        if ci != cj:
            coincide = False
        if ci >= cj:
            prev = previous_trading_day(t)
            if prev not in vals_i:
                continue
            dates.append(t)
            src.append(vals_i[prev])
            tgt.append(vals_j[t])
            shifts.append(1)
        else:
            dates.append(t)
            src.append(vals_i[t])
            tgt.append(vals_j[t])
            shifts.append(0)
    return AlignedPair(
        returns_i.market_id,
        returns_j.market_id,
        tuple(dates),
        np.array(src),
        np.array(tgt),
        np.array(shifts, dtype=int),
        coincide,
    )
