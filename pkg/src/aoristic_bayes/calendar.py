"""Integer study days, calendar dates, weekdays and week blocks.

Day 1 is the first day of the study span. Weeks are 7-day blocks anchored at
day 1; a trailing remainder of fewer than 7 days is folded into the last week.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

DOW_NAMES = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


@dataclass(frozen=True)
class CalendarSpan:
    start_date: dt.date = dt.date(2016, 1, 1)
    n_days: int = 731
    n_weeks: int = field(init=False)

    def __post_init__(self) -> None:
        if self.n_days < 1:
            raise DomainError(f"n_days must be >= 1, got {self.n_days}")
        object.__setattr__(self, "n_weeks", max(1, self.n_days // 7))

    @classmethod
    def between(cls, first: dt.date, last: dt.date) -> "CalendarSpan":
        return cls(first, (last - first).days + 1)

    def check(self, d: int) -> None:
        if not 1 <= d <= self.n_days:
            raise DomainError(f"study day {d} outside [1, {self.n_days}]")

    def day_lookup(self) -> tuple[np.ndarray, np.ndarray]:
        """Zero-based (weekday, week) arrays indexed by study day.

        Index 0 is padding so that ``lut[day]`` works directly with 1-based days.
        """
        days = np.arange(0, self.n_days + 1)
        first = self.start_date.weekday()
        dow = (first + days - 1) % 7
        week = np.minimum((days - 1) // 7, self.n_weeks - 1)
        dow[0] = week[0] = -1
        return dow, week


STUDY_SPAN = CalendarSpan()


def day_to_date(d: int, span: CalendarSpan = STUDY_SPAN) -> dt.date:
    span.check(d)
    return span.start_date + dt.timedelta(days=d - 1)


def date_to_day(date: dt.date, span: CalendarSpan = STUDY_SPAN) -> int:
    d = (date - span.start_date).days + 1
    span.check(d)
    return d


def parse_day(text: str, span: CalendarSpan = STUDY_SPAN) -> int:
    """Accept either an integer study day or an ISO ``YYYY-MM-DD`` date."""
    text = text.strip()
    if "-" in text[1:]:
        return date_to_day(dt.date.fromisoformat(text), span)
    d = int(text)
    span.check(d)
    return d


def day_of_week(d: int, span: CalendarSpan = STUDY_SPAN) -> int:
    """ISO weekday of a study day: Monday is 1, Sunday is 7."""
    return day_to_date(d, span).isoweekday()


def week_of(d: int, span: CalendarSpan = STUDY_SPAN) -> int:
    span.check(d)
    return min((d + 6) // 7, span.n_weeks)
