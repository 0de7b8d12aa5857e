//! Day-of-year arithmetic and epidemiological week conventions.

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

/// Number of days in a calendar year.
pub fn days_in_year(year: i32) -> u32 {
    if NaiveDate::from_ymd_opt(year, 2, 29).is_some() {
        366
    } else {
        365
    }
}

pub fn is_leap(year: i32) -> bool {
    days_in_year(year) == 366
}

/// Position of a date in a 366-slot leap calendar (1-based); Feb 29 is slot 60
/// and in non-leap years March 1 maps to slot 61.
pub fn leap_slot(date: NaiveDate) -> usize {
    let ordinal = date.ordinal() as usize;
    if !is_leap(date.year()) && ordinal >= 60 {
        ordinal + 1
    } else {
        ordinal
    }
}

/// Calendar date of a 1-based day-of-year.
pub fn date_of(year: i32, doy: u32) -> Option<NaiveDate> {
    NaiveDate::from_yo_opt(year, doy)
}

/// How weekly case reports map onto days of the year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeekConvention {
    /// Week `w` covers days `7(w-1)+1 ..= 7w`, anchored at January 1.
    #[default]
    SevenDayBlocks,
    /// CDC MMWR weeks: Sunday-start weeks, week 1 is the first week with at
    /// least four days in January.
    Mmwr,
}

impl WeekConvention {
    /// Day-of-year on which `week` starts. May be `<= 0` for MMWR week 1 when
    /// it begins in late December of the previous year.
    pub fn raw_week_start(self, year: i32, week: u32) -> i64 {
        match self {
            WeekConvention::SevenDayBlocks => 7 * (week as i64 - 1) + 1,
            WeekConvention::Mmwr => mmwr_year_start_offset(year) + 7 * (week as i64 - 1) + 1,
        }
    }

    /// First day of `week`, clamped into the year.
    pub fn week_start(self, year: i32, week: u32) -> u32 {
        self.raw_week_start(year, week).clamp(1, days_in_year(year) as i64) as u32
    }

    /// Inclusive day range of `week`, clipped to the calendar year. Empty
    /// weeks (entirely outside the year) yield `None`.
    pub fn week_days(self, year: i32, week: u32) -> Option<(u32, u32)> {
        let n = days_in_year(year) as i64;
        let start = self.raw_week_start(year, week);
        let end = start + 6;
        if end < 1 || start > n {
            return None;
        }
        Some((start.max(1) as u32, end.min(n) as u32))
    }

    /// Week containing a day-of-year.
    pub fn week_of_day(self, year: i32, doy: u32) -> u32 {
        let offset = match self {
            WeekConvention::SevenDayBlocks => 0,
            WeekConvention::Mmwr => mmwr_year_start_offset(year),
        };
        let rel = doy as i64 - 1 - offset;
        if rel < 0 {
            // belongs to the last MMWR week of the previous year; report week 1
            1
        } else {
            (rel / 7 + 1) as u32
        }
    }
}

/// Offset (in days, relative to Jan 1) of the first day of MMWR week 1.
fn mmwr_year_start_offset(year: i32) -> i64 {
    let jan1 = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
    let wd = jan1.weekday().num_days_from_sunday() as i64;
    if wd <= Weekday::Wed.num_days_from_sunday() as i64 {
        -wd
    } else {
        7 - wd
    }
}
