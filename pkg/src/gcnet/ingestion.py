"""Loading and validation of daily closing prices, FX rates and market clocks.

Input files
-----------
Price CSV (wide): header ``date,<market_id>,...``, ISO-8601 dates, decimal
closes, empty cell = missing observation for that market on that date.

FX CSV (long): header ``date,pair,rate`` with pairs like ``EURUSD``.

Market metadata: per-market blocks of the form ::

    market XY {
      timezone = Europe/Vienna
      currency = EUR
      epoch { from = 2006-01-02, to = 2013-12-31, close_local = "17:30", auction = last }
    }

``auction`` is one of ``last``, ``fixed`` or ``window:<minutes>``.  For a
windowed closing auction the effective close used everywhere downstream is
the last possible instant of the window, i.e. ``close_local + minutes``.
"""

from __future__ import annotations

import csv
import datetime as dt
import re
from dataclasses import dataclass, field
from zoneinfo import ZoneInfo

import numpy as np

__all__ = [
    "IngestionError",
    "PriceSeries",
    "FxSeries",
    "AuctionPolicy",
    "ClockEpoch",
    "MarketClock",
    "load_prices",
    "load_fx",
    "load_market_clocks",
    "convert_to_usd",
    "utc_close_instant",
    "write_prices",
]


class IngestionError(ValueError):
    """Raised for malformed or inconsistent input data."""


def _parse_date(text: str, where: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise IngestionError(f"malformed date {text!r} at {where}") from None


@dataclass(frozen=True)
class PriceSeries:
    """Daily closing prices of one market, strictly increasing dates."""

    market_id: str
    dates: tuple[dt.date, ...]
    closes: np.ndarray
    currency: str = "USD"

    def __post_init__(self) -> None:
        closes = np.asarray(self.closes, dtype=float)
        object.__setattr__(self, "closes", closes)
        if len(self.dates) != closes.size:
            raise IngestionError(
                f"{self.market_id}: {len(self.dates)} dates vs {closes.size} closes"
            )
        for a, b in zip(self.dates, self.dates[1:]):
            if a >= b:
                raise IngestionError(
                    f"{self.market_id}: dates not strictly increasing at {b}"
                )
        if closes.size and (not np.all(np.isfinite(closes)) or np.any(closes <= 0)):
            bad = int(np.flatnonzero(~np.isfinite(closes) | (closes <= 0))[0])
            raise IngestionError(
                f"{self.market_id}: non-positive or non-finite close at {self.dates[bad]}"
            )

    def __len__(self) -> int:
        return len(self.dates)

    def restrict(self, keep: set[dt.date]) -> "PriceSeries":
        idx = [k for k, d in enumerate(self.dates) if d in keep]
        return PriceSeries(
            self.market_id,
            tuple(self.dates[k] for k in idx),
            self.closes[idx],
            self.currency,
        )


@dataclass(frozen=True)
class FxSeries:
    """Daily FX fixings for one currency pair, quoted as USD per 1 unit."""

    pair: str
    dates: tuple[dt.date, ...]
    rates: np.ndarray

    def __post_init__(self) -> None:
        rates = np.asarray(self.rates, dtype=float)
        object.__setattr__(self, "rates", rates)
        for a, b in zip(self.dates, self.dates[1:]):
            if a >= b:
                raise IngestionError(f"fx {self.pair}: dates not strictly increasing")
        if rates.size and (not np.all(np.isfinite(rates)) or np.any(rates <= 0)):
            raise IngestionError(f"fx {self.pair}: non-positive rate")

    def as_dict(self) -> dict[dt.date, float]:
        return dict(zip(self.dates, self.rates.tolist()))


@dataclass(frozen=True)
class AuctionPolicy:
    """Closing-auction regime; ``window_minutes`` only for kind='window'."""

    kind: str  # last | fixed | window
    window_minutes: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("last", "fixed", "window"):
            raise IngestionError(f"unknown auction policy {self.kind!r}")
        if self.kind == "window" and self.window_minutes <= 0:
            raise IngestionError("auction window requires positive minutes")

    @property
    def extra_minutes(self) -> int:
        # Windowed auctions end at the last possible instant of the window.
        return self.window_minutes if self.kind == "window" else 0


@dataclass(frozen=True)
class ClockEpoch:
    effective_from: dt.date
    effective_to: dt.date
    close_minutes: int  # local minutes after midnight of the regular close
    auction: AuctionPolicy = AuctionPolicy("last")

    def __post_init__(self) -> None:
        if self.effective_from > self.effective_to:
            raise IngestionError("epoch from-date after to-date")
        if not 0 <= self.close_minutes < 24 * 60:
            raise IngestionError("close_local outside 00:00..23:59")

    @property
    def effective_close_minutes(self) -> int:
        return self.close_minutes + self.auction.extra_minutes


@dataclass(frozen=True)
class MarketClock:
    """Closing-hour history of one market.

    Epochs must partition the market's full date range: contiguous, ordered,
    no gaps and no overlaps.
    """

    market_id: str
    timezone_id: str
    epochs: tuple[ClockEpoch, ...]
    currency: str = "USD"
    tz: ZoneInfo = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.epochs:
            raise IngestionError(f"{self.market_id}: clock has no epochs")
        for a, b in zip(self.epochs, self.epochs[1:]):
            if b.effective_from != a.effective_to + dt.timedelta(days=1):
                raise IngestionError(
                    f"{self.market_id}: epochs must be contiguous "
                    f"({a.effective_to} then {b.effective_from})"
                )
        try:
            object.__setattr__(self, "tz", ZoneInfo(self.timezone_id))
        except Exception:
            raise IngestionError(
                f"{self.market_id}: unknown timezone {self.timezone_id!r}"
            ) from None

    def epoch_for(self, date: dt.date) -> ClockEpoch:
        for ep in self.epochs:
            if ep.effective_from <= date <= ep.effective_to:
                return ep
        raise IngestionError(
            f"{self.market_id}: date {date} outside all clock epochs"
        )


def utc_close_instant(clock: MarketClock, date: dt.date) -> dt.datetime:
    """UTC instant of the effective close of ``clock``'s market on ``date``.

    The covering epoch's local close (plus any auction-window allowance) is
    interpreted in the market's IANA timezone for that specific date, so DST
    shifts and historical offset changes are resolved by the tz database.
    """
    ep = clock.epoch_for(date)
    minutes = ep.effective_close_minutes
    local = dt.datetime(
        date.year, date.month, date.day, minutes // 60, minutes % 60, tzinfo=clock.tz
    )
    return local.astimezone(dt.timezone.utc)


# ---------------------------------------------------------------------------
# file loaders


def load_prices(
    path: str,
    currencies: dict[str, str] | None = None,
) -> dict[str, PriceSeries]:
    """Parse a wide price CSV into one PriceSeries per market column.

    Empty cells become absent dates for that market (never zeros).  Rows with
    malformed dates, non-positive closes or duplicated dates are hard errors
    naming the offending row.
    """
    currencies = currencies or {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: empty file") from None
        if not header or header[0].strip().lower() != "date":
            raise IngestionError(f"{path}: first header column must be 'date'")
        markets = [h.strip() for h in header[1:]]
        if len(set(markets)) != len(markets):
            raise IngestionError(f"{path}: duplicate market columns")
        per_market: dict[str, list[tuple[dt.date, float]]] = {m: [] for m in markets}
        seen: set[dt.date] = set()
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            date = _parse_date(row[0], f"{path} row {row_no}")
            if date in seen:
                raise IngestionError(f"{path}: duplicate date {date} at row {row_no}")
            seen.add(date)
            for col, market in enumerate(markets, start=1):
                cell = row[col].strip() if col < len(row) else ""
                if not cell:
                    continue
                try:
                    close = float(cell)
                except ValueError:
                    raise IngestionError(
                        f"{path}: unparseable close {cell!r} at row {row_no}"
                    ) from None
                if not np.isfinite(close) or close <= 0:
                    raise IngestionError(
                        f"{path}: non-positive price at row {row_no} ({market})"
                    )
                per_market[market].append((date, close))
    out = {}
    for market, obs in per_market.items():
        obs.sort(key=lambda t: t[0])
        out[market] = PriceSeries(
            market,
            tuple(d for d, _ in obs),
            np.array([c for _, c in obs]),
            currencies.get(market, "USD"),
        )
    return out


def load_fx(path: str) -> dict[str, FxSeries]:
    """Parse a long FX CSV ``date,pair,rate`` into per-pair series."""
    rows: dict[str, list[tuple[dt.date, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:3]] != [
            "date",
            "pair",
            "rate",
        ]:
            raise IngestionError(f"{path}: expected header date,pair,rate")
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            date = _parse_date(row[0], f"{path} row {row_no}")
            pair = row[1].strip().upper()
            try:
                rate = float(row[2])
            except (ValueError, IndexError):
                raise IngestionError(f"{path}: bad rate at row {row_no}") from None
            if rate <= 0 or not np.isfinite(rate):
                raise IngestionError(f"{path}: non-positive rate at row {row_no}")
            rows.setdefault(pair, []).append((date, rate))
    out = {}
    for pair, obs in rows.items():
        obs.sort(key=lambda t: t[0])
        dates = tuple(d for d, _ in obs)
        if len(set(dates)) != len(dates):
            raise IngestionError(f"{path}: duplicate date for pair {pair}")
        out[pair] = FxSeries(pair, dates, np.array([r for _, r in obs]))
    return out


def convert_to_usd(
    series: PriceSeries,
    fx: FxSeries | None,
    missing: str = "error",
) -> PriceSeries:
    """Convert a price series into USD by an exact-date join with ``fx``.

    Rates are USD per one unit of the series currency, so converted closes
    are ``close * rate``.  No interpolation is ever performed; with
    ``missing='error'`` uncovered dates raise, with ``missing='drop'`` they
    are removed from the output (the caller is expected to count them).
    USD input is returned unchanged.
    """
    if series.currency == "USD":
        return series
    if missing not in ("error", "drop"):
        raise ValueError("missing must be 'error' or 'drop'")
    if fx is None:
        raise IngestionError(f"{series.market_id}: no FX series for {series.currency}")
    table = fx.as_dict()
    absent = [d for d in series.dates if d not in table]
    if absent and missing == "error":
        shown = ", ".join(str(d) for d in absent[:5])
        more = "" if len(absent) <= 5 else f" (+{len(absent) - 5} more)"
        raise IngestionError(
            f"{series.market_id}: FX {fx.pair} missing dates {shown}{more}"
        )
    keep = [k for k, d in enumerate(series.dates) if d in table]
    dates = tuple(series.dates[k] for k in keep)
    closes = series.closes[keep] * np.array([table[d] for d in dates])
    return PriceSeries(series.market_id, dates, closes, "USD")


def write_prices(path: str, panel: dict[str, PriceSeries]) -> None:
    """Write a wide price CSV (the inverse of :func:`load_prices`)."""
    markets = sorted(panel)
    all_dates = sorted({d for s in panel.values() for d in s.dates})
    lookups = {m: dict(zip(panel[m].dates, panel[m].closes.tolist())) for m in markets}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + markets)
        for d in all_dates:
            row = [d.isoformat()]
            for m in markets:
                v = lookups[m].get(d)
                row.append("" if v is None else repr(v))
            writer.writerow(row)


# ---------------------------------------------------------------------------
# market metadata parser

_MARKET_RE = re.compile(r"^market\s+(\S+)\s*\{$")
_KV_RE = re.compile(r"^(\w+)\s*=\s*(.+)$")
_EPOCH_RE = re.compile(r"^epoch\s*\{(.*)\}$")
_CLOSE_RE = re.compile(r'^"?(\d{1,2}):(\d{2})"?$')


def _parse_auction(text: str) -> AuctionPolicy:
    text = text.strip()
    if text in ("last", "fixed"):
        return AuctionPolicy(text)
    if text.startswith("window:"):
        return AuctionPolicy("window", int(text.split(":", 1)[1]))
    raise IngestionError(f"unknown auction spec {text!r}")


def _parse_epoch(body: str, where: str) -> ClockEpoch:
    fields: dict[str, str] = {}
    for part in body.split(","):
        part = part.strip()
        if not part:
            continue
        m = _KV_RE.match(part)
        if not m:
            raise IngestionError(f"{where}: bad epoch field {part!r}")
        fields[m.group(1)] = m.group(2).strip()
    for key in ("from", "to", "close_local"):
        if key not in fields:
            raise IngestionError(f"{where}: epoch missing {key!r}")
    cm = _CLOSE_RE.match(fields["close_local"])
    if not cm:
        raise IngestionError(f"{where}: bad close_local {fields['close_local']!r}")
    minutes = int(cm.group(1)) * 60 + int(cm.group(2))
    auction = _parse_auction(fields.get("auction", "last"))
    return ClockEpoch(
        _parse_date(fields["from"], where),
        _parse_date(fields["to"], where),
        minutes,
        auction,
    )


def load_market_clocks(path: str) -> dict[str, MarketClock]:
    """Parse the per-market metadata file into MarketClock objects."""
    clocks: dict[str, MarketClock] = {}
    current: str | None = None
    timezone_id: str | None = None
    currency = "USD"
    epochs: list[ClockEpoch] = []
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            where = f"{path} line {line_no}"
            m = _MARKET_RE.match(line)
            if m:
                if current is not None:
                    raise IngestionError(f"{where}: nested market block")
                current, timezone_id, currency, epochs = m.group(1), None, "USD", []
                continue
            if line == "}":
                if current is None:
                    raise IngestionError(f"{where}: stray closing brace")
                if timezone_id is None:
                    raise IngestionError(f"{path}: market {current} missing timezone")
                epochs.sort(key=lambda e: e.effective_from)
                clocks[current] = MarketClock(
                    current, timezone_id, tuple(epochs), currency
                )
                current = None
                continue
            if current is None:
                raise IngestionError(f"{where}: content outside market block")
            em = _EPOCH_RE.match(line)
            if em:
                epochs.append(_parse_epoch(em.group(1), where))
                continue
            kv = _KV_RE.match(line)
            if kv and kv.group(1) == "timezone":
                timezone_id = kv.group(2).strip()
                continue
            if kv and kv.group(1) == "currency":
                currency = kv.group(2).strip().upper()
                continue
            raise IngestionError(f"{where}: unrecognised line {line!r}")
    if current is not None:
        raise IngestionError(f"{path}: unterminated market block {current!r}")
    return clocks
