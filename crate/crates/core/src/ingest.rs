//! Loading and preprocessing of daily temperature and weekly case records.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::{self, days_in_year, leap_slot, WeekConvention};

/// Plausibility bound on daily mean temperature, in °C.
pub const TEMP_SANITY_BOUND: f64 = 60.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("gap in dates: {0} is missing")]
    GapInDates(NaiveDate),
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("row {0}: temperature is not numeric")]
    NonNumericTemp(usize),
    #[error("row {0}: temperature outside ±{TEMP_SANITY_BOUND} °C")]
    TempOutOfRange(usize),
    #[error("row {0}: unparseable date")]
    BadDate(usize),
    #[error("row {row}: column `{column}` is not an integer")]
    NonNumericField { row: usize, column: String },
    #[error("row {0}: negative case count")]
    NegativeCount(usize),
    #[error("row {0}: week outside 1..=53")]
    WeekOutOfRange(usize),
    #[error("duplicate case row for {0}-W{1}")]
    DuplicateWeek(i32, u32),
    #[error("temperature series does not fully cover year {0}")]
    IncompleteYear(i32),
    #[error("no years requested for climatology")]
    NoClimatologyYears,
    #[error("empty observation series")]
    EmptyObservation,
    #[error("observations must start on January 1 (got {0})")]
    NotYearStart(NaiveDate),
    #[error("empty temperature file")]
    EmptySeries,
}

/// Gap-free daily mean temperature record for one location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSeries {
    pub location_id: String,
    pub start_date: NaiveDate,
    pub temps: Vec<f64>,
}

impl TemperatureSeries {
    pub fn new(location_id: impl Into<String>, start_date: NaiveDate, temps: Vec<f64>) -> Self {
        Self {
            location_id: location_id.into(),
            start_date,
            temps,
        }
    }

    pub fn len(&self) -> usize {
        self.temps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.temps.is_empty()
    }

    pub fn date(&self, index: usize) -> NaiveDate {
        self.start_date + Duration::days(index as i64)
    }

    pub fn end_date(&self) -> Option<NaiveDate> {
        (!self.temps.is_empty()).then(|| self.date(self.temps.len() - 1))
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.temps.len()).map(|i| self.date(i))
    }

    pub fn value_on(&self, date: NaiveDate) -> Option<f64> {
        let idx = (date - self.start_date).num_days();
        if idx < 0 {
            return None;
        }
        self.temps.get(idx as usize).copied()
    }

    /// Whether every day of `year` is present.
    pub fn covers_year(&self, year: i32) -> bool {
        let (Some(first), Some(last)) = (
            NaiveDate::from_ymd_opt(year, 1, 1),
            NaiveDate::from_ymd_opt(year, 12, 31),
        ) else {
            return false;
        };
        match self.end_date() {
            Some(end) => self.start_date <= first && end >= last,
            None => false,
        }
    }

    /// Calendar years fully covered by the record.
    pub fn full_years(&self) -> Vec<i32> {
        let Some(end) = self.end_date() else {
            return Vec::new();
        };
        (self.start_date.year()..=end.year())
            .filter(|&y| self.covers_year(y))
            .collect()
    }

    /// Sub-series for a single calendar year.
    pub fn year(&self, year: i32) -> Result<TemperatureSeries, IngestError> {
        if !self.covers_year(year) {
            return Err(IngestError::IncompleteYear(year));
        }
        let first = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
        let offset = (first - self.start_date).num_days() as usize;
        let n = days_in_year(year) as usize;
        Ok(TemperatureSeries::new(
            self.location_id.clone(),
            first,
            self.temps[offset..offset + n].to_vec(),
        ))
    }

    /// The first `days` days of `year` (or fewer if the record ends earlier).
    pub fn year_prefix(&self, year: i32, days: usize) -> Result<TemperatureSeries, IngestError> {
        let first = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
        let offset = (first - self.start_date).num_days();
        if offset < 0 || offset as usize >= self.temps.len() {
            return Err(IngestError::IncompleteYear(year));
        }
        let offset = offset as usize;
        let end = (offset + days.min(days_in_year(year) as usize)).min(self.temps.len());
        Ok(TemperatureSeries::new(
            self.location_id.clone(),
            first,
            self.temps[offset..end].to_vec(),
        ))
    }
}

/// Column mapping for temperature files.
///
/// Dates come either from a single ISO-8601 column or from a pair of
/// year / day-of-year columns (the NASA POWER daily layout).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemperatureSchema {
    pub date_column: String,
    pub year_column: Option<String>,
    pub doy_column: Option<String>,
    pub temperature_column: String,
    /// Fill isolated single-day gaps by linear interpolation instead of failing.
    pub interpolate: bool,
}

impl Default for TemperatureSchema {
    fn default() -> Self {
        Self {
            date_column: "date".into(),
            year_column: None,
            doy_column: None,
            temperature_column: "temp".into(),
            interpolate: false,
        }
    }
}

impl TemperatureSchema {
    /// Layout of a NASA POWER daily CSV export (`YEAR,DOY,T2M`).
    pub fn nasa_power() -> Self {
        Self {
            date_column: String::new(),
            year_column: Some("YEAR".into()),
            doy_column: Some("DOY".into()),
            temperature_column: "T2M".into(),
            interpolate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaseSchema {
    pub year_column: String,
    pub week_column: String,
    pub count_column: String,
}

impl Default for CaseSchema {
    fn default() -> Self {
        Self {
            year_column: "year".into(),
            week_column: "week".into(),
            count_column: "count".into(),
        }
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize, IngestError> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(name))
        .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
}

/// Drops a NASA POWER style `-BEGIN HEADER- ... -END HEADER-` preamble.
fn strip_preamble(text: &str) -> &str {
    match text.find("-END HEADER-") {
        Some(pos) => {
            let rest = &text[pos..];
            match rest.find('\n') {
                Some(nl) => &rest[nl + 1..],
                None => "",
            }
        }
        None => text,
    }
}

pub fn load_temperature_csv(
    path: impl AsRef<Path>,
    schema: &TemperatureSchema,
) -> Result<TemperatureSeries, IngestError> {
    let path = path.as_ref();
    let location = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    read_temperature_csv(text.as_bytes(), schema, location)
}

/// Parses a temperature CSV from any reader. Row numbers in errors are
/// 1-based data rows (the header is not counted).
pub fn read_temperature_csv<R: Read>(
    mut reader: R,
    schema: &TemperatureSchema,
    location_id: impl Into<String>,
) -> Result<TemperatureSeries, IngestError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let body = strip_preamble(&text);
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let headers = rdr.headers()?.clone();
    let temp_idx = column_index(&headers, &schema.temperature_column)?;
    enum DateSrc {
        Iso(usize),
        YearDoy(usize, usize),
    }
    let date_src = match (&schema.year_column, &schema.doy_column) {
        (Some(y), Some(d)) => DateSrc::YearDoy(column_index(&headers, y)?, column_index(&headers, d)?),
        _ => DateSrc::Iso(column_index(&headers, &schema.date_column)?),
    };

    let mut rows: Vec<(usize, NaiveDate, f64)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let date = match date_src {
            DateSrc::Iso(c) => NaiveDate::parse_from_str(rec.get(c).unwrap_or(""), "%Y-%m-%d")
                .map_err(|_| IngestError::BadDate(row))?,
            DateSrc::YearDoy(yc, dc) => {
                let y: i32 = rec.get(yc).unwrap_or("").parse().map_err(|_| IngestError::BadDate(row))?;
                let d: u32 = rec.get(dc).unwrap_or("").parse().map_err(|_| IngestError::BadDate(row))?;
                NaiveDate::from_yo_opt(y, d).ok_or(IngestError::BadDate(row))?
            }
        };
        let temp: f64 = rec
            .get(temp_idx)
            .unwrap_or("")
            .parse()
            .map_err(|_| IngestError::NonNumericTemp(row))?;
        if !temp.is_finite() {
            return Err(IngestError::NonNumericTemp(row));
        }
        if temp.abs() > TEMP_SANITY_BOUND {
            return Err(IngestError::TempOutOfRange(row));
        }
        rows.push((row, date, temp));
    }
    if rows.is_empty() {
        return Err(IngestError::EmptySeries);
    }
    rows.sort_by_key(|r| r.1);

    let start = rows[0].1;
    let mut temps = Vec::with_capacity(rows.len());
    let mut prev: Option<(NaiveDate, f64)> = None;
    for &(_, date, temp) in &rows {
        if let Some((pd, pt)) = prev {
            let step = (date - pd).num_days();
            if step == 0 {
                return Err(IngestError::DuplicateDate(date));
            }
            if step == 2 && schema.interpolate {
                temps.push(0.5 * (pt + temp));
            } else if step > 1 {
                return Err(IngestError::GapInDates(pd + Duration::days(1)));
            }
        }
        temps.push(temp);
        prev = Some((date, temp));
    }
    Ok(TemperatureSeries::new(location_id, start, temps))
}

/// Writes `date,temp` rows. Values use Rust's shortest round-trip float
/// formatting, so reloading reproduces the series exactly.
pub fn write_temperature_csv<W: Write>(series: &TemperatureSeries, writer: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "temp"])?;
    for (date, t) in series.dates().zip(&series.temps) {
        w.write_record([date.format("%Y-%m-%d").to_string(), t.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One weekly surveillance record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseEntry {
    pub year: i32,
    pub week: u32,
    pub count: u32,
}

/// Weekly reported human case counts, sorted by `(year, week)`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CaseSeries {
    pub location_id: String,
    entries: Vec<CaseEntry>,
}

impl CaseSeries {
    /// Builds a series, sorting entries; duplicate `(year, week)` pairs are rejected.
    pub fn new(location_id: impl Into<String>, mut entries: Vec<CaseEntry>) -> Result<Self, IngestError> {
        entries.sort_by_key(|e| (e.year, e.week));
        for pair in entries.windows(2) {
            if (pair[0].year, pair[0].week) == (pair[1].year, pair[1].week) {
                return Err(IngestError::DuplicateWeek(pair[1].year, pair[1].week));
            }
        }
        for e in &entries {
            if !(1..=53).contains(&e.week) {
                return Err(IngestError::WeekOutOfRange(0));
            }
        }
        Ok(Self {
            location_id: location_id.into(),
            entries,
        })
    }

    pub fn entries(&self) -> &[CaseEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, year: i32, week: u32) -> u32 {
        self.entries
            .binary_search_by_key(&(year, week), |e| (e.year, e.week))
            .map(|i| self.entries[i].count)
            .unwrap_or(0)
    }

    pub fn year_total(&self, year: i32) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.year == year)
            .map(|e| e.count as u64)
            .sum()
    }

    /// Years that appear in the record with at least one row.
    pub fn years(&self) -> Vec<i32> {
        let mut ys: Vec<i32> = self.entries.iter().map(|e| e.year).collect();
        ys.dedup();
        ys
    }

    /// Years with a nonzero total.
    pub fn case_years(&self) -> Vec<i32> {
        self.years().into_iter().filter(|&y| self.year_total(y) > 0).collect()
    }

    /// First week of `year` with a nonzero count.
    pub fn first_case_week(&self, year: i32) -> Option<u32> {
        self.entries
            .iter()
            .find(|e| e.year == year && e.count > 0)
            .map(|e| e.week)
    }

    /// Counts for each week in `weeks`; weeks without a row are zero.
    pub fn weekly_counts(&self, year: i32, weeks: std::ops::RangeInclusive<u32>) -> Vec<u32> {
        weeks.map(|w| self.count(year, w)).collect()
    }

    /// Daily expansion: each week's count is attributed to the week's first day.
    pub fn reporting_days(&self, year: i32, convention: WeekConvention) -> BTreeMap<u32, u32> {
        let mut out = BTreeMap::new();
        for e in self.entries.iter().filter(|e| e.year == year && e.count > 0) {
            if calendar::WeekConvention::week_days(convention, year, e.week).is_some() {
                *out.entry(convention.week_start(year, e.week)).or_insert(0) += e.count;
            }
        }
        out
    }

    /// Copy of the series with one year removed.
    pub fn without_year(&self, year: i32) -> CaseSeries {
        CaseSeries {
            location_id: self.location_id.clone(),
            entries: self.entries.iter().filter(|e| e.year != year).copied().collect(),
        }
    }

    /// Copy restricted to the given years.
    pub fn only_years(&self, years: &[i32]) -> CaseSeries {
        CaseSeries {
            location_id: self.location_id.clone(),
            entries: self
                .entries
                .iter()
                .filter(|e| years.contains(&e.year))
                .copied()
                .collect(),
        }
    }
}

pub fn load_cases_csv(path: impl AsRef<Path>, schema: &CaseSchema) -> Result<CaseSeries, IngestError> {
    let path = path.as_ref();
    let location = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_cases_csv(BufReader::new(File::open(path)?), schema, location)
}

pub fn read_cases_csv<R: BufRead>(
    reader: R,
    schema: &CaseSchema,
    location_id: impl Into<String>,
) -> Result<CaseSeries, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let yi = column_index(&headers, &schema.year_column)?;
    let wi = column_index(&headers, &schema.week_column)?;
    let ci = column_index(&headers, &schema.count_column)?;
    let mut entries = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let field = |idx: usize, name: &str| -> Result<i64, IngestError> {
            rec.get(idx)
                .unwrap_or("")
                .parse::<i64>()
                .map_err(|_| IngestError::NonNumericField {
                    row,
                    column: name.to_string(),
                })
        };
        let year = field(yi, &schema.year_column)?;
        let week = field(wi, &schema.week_column)?;
        let count = field(ci, &schema.count_column)?;
        if !(1..=53).contains(&week) {
            return Err(IngestError::WeekOutOfRange(row));
        }
        if count < 0 {
            return Err(IngestError::NegativeCount(row));
        }
        entries.push(CaseEntry {
            year: year as i32,
            week: week as u32,
            count: count as u32,
        });
    }
    CaseSeries::new(location_id, entries)
}

pub fn write_cases_csv<W: Write>(cases: &CaseSeries, writer: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["year", "week", "count"])?;
    for e in cases.entries() {
        w.write_record([e.year.to_string(), e.week.to_string(), e.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean temperature for each of 366 leap-calendar day-of-year slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyClimatology {
    pub temps: Vec<f64>,
}

impl DailyClimatology {
    /// Slot value for a 1-based leap-calendar slot.
    pub fn slot(&self, slot: usize) -> f64 {
        self.temps[slot - 1]
    }

    /// Climatological temperature for a date; non-leap years skip slot 60.
    pub fn on(&self, date: NaiveDate) -> f64 {
        self.slot(leap_slot(date))
    }

    /// A full calendar year built purely from the climatology.
    pub fn year_series(&self, location_id: &str, year: i32) -> TemperatureSeries {
        let first = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
        let temps = (0..days_in_year(year))
            .map(|i| self.on(first + Duration::days(i as i64)))
            .collect();
        TemperatureSeries::new(location_id, first, temps)
    }
}

/// Per-day-of-year mean over `years`. The Feb 29 slot averages only leap
/// years; when none are present it is the mean of its two neighbours.
pub fn build_climatology(series: &TemperatureSeries, years: &[i32]) -> Result<DailyClimatology, IngestError> {
    if years.is_empty() {
        return Err(IngestError::NoClimatologyYears);
    }
    let mut sums = vec![0.0; 366];
    let mut counts = vec![0usize; 366];
    let mut sorted = years.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &year in &sorted {
        let ys = series.year(year)?;
        for (date, t) in ys.dates().zip(&ys.temps) {
            let s = leap_slot(date) - 1;
            sums[s] += t;
            counts[s] += 1;
        }
    }
    let mut temps: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect();
    if counts[59] == 0 {
        temps[59] = 0.5 * (temps[58] + temps[60]);
    }
    Ok(DailyClimatology { temps })
}

/// Splices observed temperatures for days `1..=min(cutoff_day, len)` of the
/// target year with climatology for the rest of the year.
pub fn hybrid_forecast_temps(
    observed: &TemperatureSeries,
    climatology: &DailyClimatology,
    cutoff_day: u32,
) -> Result<TemperatureSeries, IngestError> {
    if observed.is_empty() {
        return Err(IngestError::EmptyObservation);
    }
    if observed.start_date.ordinal() != 1 {
        return Err(IngestError::NotYearStart(observed.start_date));
    }
    let year = observed.start_date.year();
    let n = days_in_year(year) as usize;
    let keep = (cutoff_day as usize).min(observed.len()).min(n);
    let mut temps = Vec::with_capacity(n);
    temps.extend_from_slice(&observed.temps[..keep]);
    for i in keep..n {
        temps.push(climatology.on(observed.start_date + Duration::days(i as i64)));
    }
    Ok(TemperatureSeries::new(observed.location_id.clone(), observed.start_date, temps))
}

/// The up-to-`n` full years immediately preceding `target` that are present
/// in `available`; when none precede it, the nearest following years are used.
pub fn reference_years(target: i32, available: &[i32], n: usize) -> Vec<i32> {
    let mut before: Vec<i32> = available.iter().copied().filter(|&y| y < target).collect();
    before.sort_unstable();
    let picked: Vec<i32> = before.iter().rev().take(n).copied().collect();
    if !picked.is_empty() {
        let mut p = picked;
        p.sort_unstable();
        return p;
    }
    let mut after: Vec<i32> = available.iter().copied().filter(|&y| y > target).collect();
    after.sort_unstable();
    after.truncate(n);
    after
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, dd: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, dd).unwrap()
    }

    #[test]
    fn reads_three_rows() {
        let csv = "date,temp\n2020-01-01,10\n2020-01-02,11\n2020-01-03,12\n";
        let s = read_temperature_csv(csv.as_bytes(), &TemperatureSchema::default(), "x").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.start_date, d(2020, 1, 1));
        assert_eq!(s.temps, vec![10.0, 11.0, 12.0]);
    }

    #[test]
    fn gap_is_an_error() {
        let csv = "date,temp\n2020-01-01,10\n2020-01-03,12\n";
        let err = read_temperature_csv(csv.as_bytes(), &TemperatureSchema::default(), "x").unwrap_err();
        assert!(matches!(err, IngestError::GapInDates(g) if g == d(2020, 1, 2)));
    }

    #[test]
    fn single_gap_interpolated_when_enabled() {
        let csv = "date,temp\n2020-01-01,10\n2020-01-03,12\n";
        let schema = TemperatureSchema {
            interpolate: true,
            ..Default::default()
        };
        let s = read_temperature_csv(csv.as_bytes(), &schema, "x").unwrap();
        assert_eq!(s.temps, vec![10.0, 11.0, 12.0]);
        // two missing days are still an error
        let csv = "date,temp\n2020-01-01,10\n2020-01-04,12\n";
        assert!(read_temperature_csv(csv.as_bytes(), &schema, "x").is_err());
    }

    #[test]
    fn non_numeric_temperature_reports_row() {
        let csv = "date,temp\n2020-01-01,10\n2020-01-02,abc\n";
        let err = read_temperature_csv(csv.as_bytes(), &TemperatureSchema::default(), "x").unwrap_err();
        assert!(matches!(err, IngestError::NonNumericTemp(2)));
    }

    #[test]
    fn duplicate_date_rejected() {
        let csv = "date,temp\n2020-01-01,10\n2020-01-01,11\n";
        let err = read_temperature_csv(csv.as_bytes(), &TemperatureSchema::default(), "x").unwrap_err();
        assert!(matches!(err, IngestError::DuplicateDate(_)));
    }

    #[test]
    fn missing_column() {
        let csv = "day,temp\n2020-01-01,10\n";
        let err = read_temperature_csv(csv.as_bytes(), &TemperatureSchema::default(), "x").unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn(c) if c == "date"));
    }

    #[test]
    fn out_of_range_temperature() {
        let csv = "date,temp\n2020-01-01,-999\n";
        let err = read_temperature_csv(csv.as_bytes(), &TemperatureSchema::default(), "x").unwrap_err();
        assert!(matches!(err, IngestError::TempOutOfRange(1)));
    }

    #[test]
    fn nasa_power_layout() {
        let text = "-BEGIN HEADER-\nNASA/POWER\n-END HEADER-\nYEAR,DOY,T2M\n2021,1,5.5\n2021,2,6.25\n";
        let s = read_temperature_csv(text.as_bytes(), &TemperatureSchema::nasa_power(), "p").unwrap();
        assert_eq!(s.start_date, d(2021, 1, 1));
        assert_eq!(s.temps, vec![5.5, 6.25]);
    }

    #[test]
    fn cases_read_back() {
        let csv = "year,week,count\n2023,34,2\n2023,38,1\n";
        let c = read_cases_csv(csv.as_bytes(), &CaseSchema::default(), "c").unwrap();
        assert_eq!(c.entries().len(), 2);
        assert_eq!(c.count(2023, 34), 2);
        assert_eq!(c.count(2023, 35), 0);
        assert_eq!(c.first_case_week(2023), Some(34));
    }

    #[test]
    fn case_validation() {
        let bad_week = "year,week,count\n2023,0,1\n";
        assert!(matches!(
            read_cases_csv(bad_week.as_bytes(), &CaseSchema::default(), "c"),
            Err(IngestError::WeekOutOfRange(1))
        ));
        let negative = "year,week,count\n2023,10,-1\n";
        assert!(matches!(
            read_cases_csv(negative.as_bytes(), &CaseSchema::default(), "c"),
            Err(IngestError::NegativeCount(1))
        ));
        let dup = "year,week,count\n2023,10,1\n2023,10,2\n";
        assert!(matches!(
            read_cases_csv(dup.as_bytes(), &CaseSchema::default(), "c"),
            Err(IngestError::DuplicateWeek(2023, 10))
        ));
    }

    #[test]
    fn cases_sorted_on_load() {
        let csv = "year,week,count\n2023,38,1\n2022,40,0\n2023,34,2\n";
        let c = read_cases_csv(csv.as_bytes(), &CaseSchema::default(), "c").unwrap();
        let keys: Vec<_> = c.entries().iter().map(|e| (e.year, e.week)).collect();
        assert_eq!(keys, vec![(2022, 40), (2023, 34), (2023, 38)]);
        assert_eq!(c.case_years(), vec![2023]);
        assert_eq!(c.weekly_counts(2023, 33..=35), vec![0, 2, 0]);
    }

    fn constant_years(years: std::ops::RangeInclusive<i32>, f: impl Fn(NaiveDate) -> f64) -> TemperatureSeries {
        let start = d(*years.start(), 1, 1);
        let end = d(*years.end(), 12, 31);
        let n = (end - start).num_days() as usize + 1;
        let temps = (0..n).map(|i| f(start + Duration::days(i as i64))).collect();
        TemperatureSeries::new("t", start, temps)
    }

    #[test]
    fn climatology_of_constant_year() {
        let s = constant_years(2019..=2019, |_| 15.0);
        let c = build_climatology(&s, &[2019]).unwrap();
        assert_eq!(c.temps.len(), 366);
        assert!(c.temps.iter().all(|&t| t == 15.0));
    }

    #[test]
    fn climatology_two_year_mean() {
        let s = constant_years(2018..=2019, |dt| if dt.year() == 2018 { 10.0 } else { 20.0 });
        let c = build_climatology(&s, &[2018, 2019]).unwrap();
        assert_eq!(c.slot(1), 15.0);
    }

    #[test]
    fn climatology_brute_force_mod7() {
        // day-d temperature = d mod 7 on the leap-calendar slot index
        let s = constant_years(2016..=2020, |dt| (leap_slot(dt) % 7) as f64);
        let years = [2016, 2017, 2018, 2019, 2020];
        let c = build_climatology(&s, &years).unwrap();
        for slot in 1..=366usize {
            // brute-force oracle: walk every date and average the matching slot
            let mut acc = 0.0;
            let mut n = 0;
            for y in years {
                for dt in s.year(y).unwrap().dates() {
                    if leap_slot(dt) == slot {
                        acc += s.value_on(dt).unwrap();
                        n += 1;
                    }
                }
            }
            assert_eq!(c.slot(slot), acc / n as f64);
            assert_eq!(c.slot(slot), (slot % 7) as f64);
        }
    }

    #[test]
    fn climatology_incomplete_year() {
        let s = constant_years(2019..=2019, |_| 15.0);
        assert!(matches!(build_climatology(&s, &[2020]), Err(IngestError::IncompleteYear(2020))));
    }

    #[test]
    fn hybrid_splice() {
        let clim = DailyClimatology { temps: vec![20.0; 366] };
        let obs = TemperatureSeries::new("x", d(2023, 1, 1), vec![12.0; 140]);
        let h = hybrid_forecast_temps(&obs, &clim, 140).unwrap();
        assert_eq!(h.len(), 365);
        assert!(h.temps[..140].iter().all(|&t| t == 12.0));
        assert!(h.temps[140..].iter().all(|&t| t == 20.0));

        let h0 = hybrid_forecast_temps(&obs, &clim, 0).unwrap();
        assert!(h0.temps.iter().all(|&t| t == 20.0));

        let short = TemperatureSeries::new("x", d(2023, 1, 1), vec![12.0; 100]);
        let h = hybrid_forecast_temps(&short, &clim, 140).unwrap();
        assert!(h.temps[..100].iter().all(|&t| t == 12.0));
        assert!(h.temps[100..].iter().all(|&t| t == 20.0));

        let empty = TemperatureSeries::new("x", d(2023, 1, 1), vec![]);
        assert!(matches!(
            hybrid_forecast_temps(&empty, &clim, 140),
            Err(IngestError::EmptyObservation)
        ));
    }

    #[test]
    fn hybrid_skips_leap_slot_in_common_years() {
        let mut temps = vec![0.0; 366];
        for (i, t) in temps.iter_mut().enumerate() {
            *t = (i + 1) as f64;
        }
        let clim = DailyClimatology { temps };
        let obs = TemperatureSeries::new("x", d(2023, 1, 1), vec![1.0]);
        let h = hybrid_forecast_temps(&obs, &clim, 0).unwrap();
        assert_eq!(h.temps[58], 59.0);
        assert_eq!(h.temps[59], 61.0);
        assert_eq!(h.temps[364], 366.0);
        let leap = hybrid_forecast_temps(&TemperatureSeries::new("x", d(2024, 1, 1), vec![1.0]), &clim, 0).unwrap();
        assert_eq!(leap.len(), 366);
        assert_eq!(leap.temps[59], 60.0);
    }

    #[test]
    fn reference_year_selection() {
        let avail: Vec<i32> = (2001..=2024).collect();
        assert_eq!(reference_years(2024, &avail, 5), vec![2019, 2020, 2021, 2022, 2023]);
        assert_eq!(reference_years(2003, &avail, 5), vec![2001, 2002]);
        assert_eq!(reference_years(2001, &avail, 2), vec![2002, 2003]);
    }
}
