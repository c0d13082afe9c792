"""Ingestion of spot/futures/rate quote files and panel persistence.

Input format: delimited text, one file per instrument family, all with
the header ``date,code,field,value``:

* ``spot.csv``    -- rows ``<date>,<index code>,close,<price>``
* ``futures.csv`` -- rows ``<date>,<contract>,close,<price>`` plus one
  ``<expiry date>,<contract>,expiry,`` row per contract
* ``rates.csv``   -- rows ``<date>,<code>,rate,<annual rate>``
* ``etn.csv``     -- optional, rows ``<date>,<code>,close,<price>``

A loaded panel keeps, per trading day, the spot level, the front
contracts sorted by expiry with their times to maturity (in trading
years, actual trading-day counts to expiry over 252), the overnight
rate, and a compounded money-market account value.  Days missing the
spot, the rate, or any of the front-``n_ranks`` futures are dropped
with a logged count.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataError
from .model import MarketConfig, TRADING_DAYS_PER_YEAR
from .simulate import FuturesPanel

__all__ = [
    "PricePanel",
    "load_panel",
    "write_panel",
    "read_panel",
    "normalize_to_100",
    "split_in_out",
    "panel_from_simulation",
]

log = logging.getLogger(__name__)

# Overnight money-market compounding: simple interest, ACT/360.
MM_DAY_BASIS = 360.0


@dataclass
class PricePanel:
    """Date-aligned spot, futures curve, and money-market data.

    ``dates`` is either an array of ``datetime64[D]`` (ingested data) or
    integer day indices (simulated data).  Per-day contract arrays are
    sorted by expiry and include a contract on its final settlement day
    (ttm = 0) when a quote exists; ranks count only contracts with
    ttm > 0.
    """

    dates: np.ndarray
    spot: np.ndarray
    contract_ids: list
    ttms: list
    prices: list
    rates: np.ndarray
    mm_value: np.ndarray
    etn: np.ndarray | None = None
    n_dropped: int = 0

    @property
    def n_days(self) -> int:
        return self.spot.size

    def tradable(self, j: int) -> np.ndarray:
        """Indices into day ``j``'s contract arrays with ttm > 0."""
        return np.flatnonzero(self.ttms[j] > 0)

    def n_tradable(self, j: int) -> int:
        return int(np.count_nonzero(self.ttms[j] > 0))

    def rank_id(self, j: int, rank: int) -> str:
        tr = self.tradable(j)
        if rank < 1 or rank > tr.size:
            raise DataError(f"rank {rank} not available on day {j}")
        return self.contract_ids[j][tr[rank - 1]]

    def rank_price(self, j: int, rank: int) -> float:
        tr = self.tradable(j)
        if rank < 1 or rank > tr.size:
            raise DataError(f"rank {rank} not available on day {j}")
        return float(self.prices[j][tr[rank - 1]])

    def rank_ttm(self, j: int, rank: int) -> float:
        tr = self.tradable(j)
        if rank < 1 or rank > tr.size:
            raise DataError(f"rank {rank} not available on day {j}")
        return float(self.ttms[j][tr[rank - 1]])

    def price_of(self, j: int, contract_id: str):
        """Quoted price of ``contract_id`` on day ``j`` or None."""
        ids = self.contract_ids[j]
        hits = np.flatnonzero(ids == contract_id)
        if hits.size == 0:
            return None
        return float(self.prices[j][hits[0]])

    def slice(self, start: int, stop: int) -> "PricePanel":
        """Row-range view [start, stop) as a new panel."""
        return PricePanel(
            dates=self.dates[start:stop],
            spot=self.spot[start:stop],
            contract_ids=self.contract_ids[start:stop],
            ttms=self.ttms[start:stop],
            prices=self.prices[start:stop],
            rates=self.rates[start:stop],
            mm_value=self.mm_value[start:stop],
            etn=None if self.etn is None else self.etn[start:stop],
            n_dropped=self.n_dropped,
        )

    def observations(self) -> list:
        """Per-day (spot, [(ttm, price), ...]) pairs over tradable
        contracts, as consumed by the risk-neutral curve fit."""
        out = []
        for j in range(self.n_days):
            tr = self.tradable(j)
            out.append(
                (
                    float(self.spot[j]),
                    [(float(self.ttms[j][i]), float(self.prices[j][i])) for i in tr],
                )
            )
        return out


def _parse_quote_file(path: Path):
    """Yield (line_no, date, code, field, value_str) rows."""
    rows = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line_no == 1 and line.lower().startswith("date,"):
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise DataError(
                    f"{path.name}:{line_no}: expected 4 fields, got {len(parts)}"
                )
            rows.append((line_no, *parts))
    return rows


def _parse_date(path: Path, line_no: int, text: str) -> np.datetime64:
    try:
        return np.datetime64(text, "D")
    except ValueError:
        raise DataError(f"{path.name}:{line_no}: bad date {text!r}") from None


def _parse_float(path: Path, line_no: int, text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"{path.name}:{line_no}: bad number {text!r}") from None
    if not math.isfinite(v):
        raise DataError(f"{path.name}:{line_no}: non-finite value {text!r}")
    return v


def _trading_days_to(date: np.datetime64, expiry: np.datetime64) -> int:
    """Weekdays d with date < d <= expiry."""
    one = np.timedelta64(1, "D")
    return int(np.busday_count(date + one, expiry + one))


def load_panel(
    data_dir,
    window=None,
    n_ranks: int = 7,
    max_drop_frac: float = 0.05,
) -> PricePanel:
    """Load and align quote files from ``data_dir``.

    Parameters
    ----------
    data_dir : path-like
        Directory holding spot.csv, futures.csv, rates.csv and an
        optional etn.csv.
    window : (start, end) of date-like, optional
        Inclusive date range to keep.
    n_ranks : int
        Number of front contracts required per day; contracts beyond
        this rank are dropped on load.
    max_drop_frac : float
        Abort when more than this fraction of candidate days has to be
        dropped for missing data.
    """
    data_dir = Path(data_dir)
    spot_path = data_dir / "spot.csv"
    fut_path = data_dir / "futures.csv"
    rate_path = data_dir / "rates.csv"
    etn_path = data_dir / "etn.csv"
    for p in (spot_path, fut_path, rate_path):
        if not p.exists():
            raise DataError(f"missing input file {p}")

    spot_by_date: dict = {}
    for line_no, d, code, fld, val in _parse_quote_file(spot_path):
        if fld != "close":
            raise DataError(f"{spot_path.name}:{line_no}: unknown field {fld!r}")
        date = _parse_date(spot_path, line_no, d)
        price = _parse_float(spot_path, line_no, val)
        if price <= 0:
            raise DataError(f"{spot_path.name}:{line_no}: nonpositive price")
        spot_by_date[date] = price

    futures_by_date: dict = {}
    expiry_by_code: dict = {}
    for line_no, d, code, fld, val in _parse_quote_file(fut_path):
        date = _parse_date(fut_path, line_no, d)
        if fld == "expiry":
            expiry_by_code[code] = date
        elif fld == "close":
            price = _parse_float(fut_path, line_no, val)
            if price <= 0:
                raise DataError(f"{fut_path.name}:{line_no}: nonpositive price")
            futures_by_date.setdefault(date, {})[code] = price
        else:
            raise DataError(f"{fut_path.name}:{line_no}: unknown field {fld!r}")

    rate_by_date: dict = {}
    for line_no, d, code, fld, val in _parse_quote_file(rate_path):
        if fld != "rate":
            raise DataError(f"{rate_path.name}:{line_no}: unknown field {fld!r}")
        rate_by_date[_parse_date(rate_path, line_no, d)] = _parse_float(
            rate_path, line_no, val
        )

    etn_by_date: dict = {}
    if etn_path.exists():
        for line_no, d, code, fld, val in _parse_quote_file(etn_path):
            if fld != "close":
                raise DataError(f"{etn_path.name}:{line_no}: unknown field {fld!r}")
            etn_by_date[_parse_date(etn_path, line_no, d)] = _parse_float(
                etn_path, line_no, val
            )

    candidates = sorted(spot_by_date)
    if window is not None:
        lo = np.datetime64(window[0], "D")
        hi = np.datetime64(window[1], "D")
        candidates = [d for d in candidates if lo <= d <= hi]
    if not candidates:
        raise DataError("no trading days in the requested window")

    dates, spot, rows_ids, rows_ttm, rows_px, rates, etn = [], [], [], [], [], [], []
    n_dropped = 0
    have_etn = bool(etn_by_date)
    for date in candidates:
        quotes = futures_by_date.get(date, {})
        rate = rate_by_date.get(date)
        etn_px = etn_by_date.get(date) if have_etn else None
        with_expiry = [
            (expiry_by_code[c], c, p)
            for c, p in quotes.items()
            if c in expiry_by_code
        ]
        with_expiry.sort()
        live = [(e, c, p) for e, c, p in with_expiry if e > date]
        settling = [(e, c, p) for e, c, p in with_expiry if e == date]
        usable = (
            rate is not None
            and len(live) >= n_ranks
            and (not have_etn or etn_px is not None)
        )
        if not usable:
            n_dropped += 1
            continue
        kept = settling + live[:n_ranks]
        dates.append(date)
        spot.append(spot_by_date[date])
        rows_ids.append(np.array([c for _, c, _ in kept]))
        rows_ttm.append(
            np.array(
                [_trading_days_to(date, e) / TRADING_DAYS_PER_YEAR for e, _, _ in kept]
            )
        )
        rows_px.append(np.array([p for _, _, p in kept]))
        rates.append(rate)
        etn.append(etn_px)

    if n_dropped:
        log.info("dropped %d of %d candidate days for missing data", n_dropped, len(candidates))
    if n_dropped > max_drop_frac * len(candidates):
        raise DataError(
            f"{n_dropped} of {len(candidates)} days dropped "
            f"(> {max_drop_frac:.0%}); refusing to build a panel"
        )
    if not dates:
        raise DataError("no usable trading days after alignment")

    dates_arr = np.array(dates, dtype="datetime64[D]")
    rates_arr = np.array(rates)
    mm = np.empty(len(dates))
    mm[0] = 1.0
    for j in range(len(dates) - 1):
        gap = (dates_arr[j + 1] - dates_arr[j]) / np.timedelta64(1, "D")
        mm[j + 1] = mm[j] * (1.0 + rates_arr[j] * gap / MM_DAY_BASIS)
    return PricePanel(
        dates=dates_arr,
        spot=np.array(spot),
        contract_ids=rows_ids,
        ttms=rows_ttm,
        prices=rows_px,
        rates=rates_arr,
        mm_value=mm,
        etn=np.array(etn) if have_etn else None,
        n_dropped=n_dropped,
    )


def panel_from_simulation(fp: FuturesPanel, mkt: MarketConfig) -> PricePanel:
    """Flatten a simulated futures panel into the rank-based form used
    by the static optimizer and the analytics."""
    cal = fp.calendar
    n = fp.n_days
    ids_all = np.array([f"C{i + 1:02d}" for i in range(cal.n_contracts)])
    rows_ids, rows_ttm, rows_px = [], [], []
    for j in range(n):
        q = cal.quotable(j)
        rows_ids.append(ids_all[q])
        rows_ttm.append(np.array([cal.ttm(j, i) for i in q]))
        rows_px.append(fp.prices[j, q])
    days = np.arange(n)
    return PricePanel(
        dates=days,
        spot=fp.spot.copy(),
        contract_ids=rows_ids,
        ttms=rows_ttm,
        prices=rows_px,
        rates=np.full(n, mkt.r),
        mm_value=np.exp(mkt.r * mkt.dt * days),
        etn=None,
    )


def normalize_to_100(series: np.ndarray, anchor_day: int = 0) -> np.ndarray:
    """Scale a series so the anchor-day value is exactly 100."""
    series = np.asarray(series, dtype=float)
    anchor = series[anchor_day]
    if anchor == 0:
        raise ValueError(f"anchor value on day {anchor_day} is zero")
    return series * (100.0 / anchor)


def split_in_out(panel: PricePanel, boundary) -> tuple:
    """Split a panel at a boundary date (or day index for simulated
    panels): in-sample strictly before, out-of-sample from the boundary
    on.  Both halves are nonempty."""
    if np.issubdtype(panel.dates.dtype, np.integer):
        b = int(boundary)
    else:
        b = np.datetime64(boundary, "D")
    if not (panel.dates[0] < b <= panel.dates[-1]):
        raise DataError(
            f"boundary {boundary} outside the panel window "
            f"[{panel.dates[0]}, {panel.dates[-1]}]"
        )
    cut = int(np.searchsorted(panel.dates, b, side="left"))
    return panel.slice(0, cut), panel.slice(cut, panel.n_days)


_PANEL_HEADER = "# vixtrack panel v1"


def write_panel(panel: PricePanel, path) -> None:
    """Serialize a panel to a delimited text file (full float precision,
    so a read round-trips bit-exactly)."""
    path = Path(path)
    int_dates = np.issubdtype(panel.dates.dtype, np.integer)
    lines = [
        _PANEL_HEADER,
        f"# date_kind={'int' if int_dates else 'iso'}",
        f"# n_dropped={panel.n_dropped}",
        f"# has_etn={int(panel.etn is not None)}",
    ]
    for j in range(panel.n_days):
        quotes = ";".join(
            f"{cid}:{float(ttm)!r}:{float(px)!r}"
            for cid, ttm, px in zip(
                panel.contract_ids[j], panel.ttms[j], panel.prices[j]
            )
        )
        etn = "" if panel.etn is None else repr(float(panel.etn[j]))
        lines.append(
            "\t".join(
                [
                    str(panel.dates[j]),
                    repr(float(panel.spot[j])),
                    repr(float(panel.rates[j])),
                    repr(float(panel.mm_value[j])),
                    etn,
                    quotes,
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")


def read_panel(path) -> PricePanel:
    """Read a panel written by :func:`write_panel`."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0] != _PANEL_HEADER:
        raise DataError(f"{path.name}: not a panel file")
    meta = {}
    body = []
    for line in lines[1:]:
        if line.startswith("# "):
            k, v = line[2:].split("=", 1)
            meta[k] = v
        elif line:
            body.append(line)
    int_dates = meta.get("date_kind") == "int"
    has_etn = meta.get("has_etn") == "1"
    dates, spot, rates, mm, etn = [], [], [], [], []
    rows_ids, rows_ttm, rows_px = [], [], []
    for line in body:
        d, s, r, m, e, quotes = line.split("\t")
        dates.append(int(d) if int_dates else np.datetime64(d, "D"))
        spot.append(float(s))
        rates.append(float(r))
        mm.append(float(m))
        if has_etn:
            etn.append(float(e))
        ids, ttms, pxs = [], [], []
        if quotes:
            for q in quotes.split(";"):
                cid, ttm, px = q.split(":")
                ids.append(cid)
                ttms.append(float(ttm))
                pxs.append(float(px))
        rows_ids.append(np.array(ids))
        rows_ttm.append(np.array(ttms))
        rows_px.append(np.array(pxs))
    return PricePanel(
        dates=np.array(dates, dtype=(np.int64 if int_dates else "datetime64[D]")),
        spot=np.array(spot),
        contract_ids=rows_ids,
        ttms=rows_ttm,
        prices=rows_px,
        rates=np.array(rates),
        mm_value=np.array(mm),
        etn=np.array(etn) if has_etn else None,
        n_dropped=int(meta.get("n_dropped", 0)),
    )
