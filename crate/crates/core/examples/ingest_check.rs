//! Loading temperature and case files, including a NASA POWER export.

use std::io::Cursor;

use wnvcast::ingest::{load_cases_csv, load_temperature_csv, read_temperature_csv, CaseSchema, TemperatureSchema};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/synthetic");

fn main() -> wnvcast::Result<()> {
    let temps = load_temperature_csv(format!("{FIXTURE}/temperature.csv"), &TemperatureSchema::default())?;
    let cases = load_cases_csv(format!("{FIXTURE}/cases.csv"), &CaseSchema::default())?;
    println!(
        "{} days from {} to {}",
        temps.len(),
        temps.start_date,
        temps.end_date().unwrap()
    );
    println!("full years: {:?}", temps.full_years());
    for y in cases.case_years() {
        println!(
            "  {y}: {:>3} cases, first case in week {:?}",
            cases.year_total(y),
            cases.first_case_week(y)
        );
    }

    // NASA POWER daily layout: header block, then YEAR,DOY,T2M
    let power = "-BEGIN HEADER-\nNASA/POWER daily\n-END HEADER-\nYEAR,DOY,T2M\n2024,1,9.8\n2024,2,10.4\n2024,3,11.1\n";
    let s = read_temperature_csv(Cursor::new(power), &TemperatureSchema::nasa_power(), "power")?;
    println!("NASA POWER sample: {} days starting {}, {:?}", s.len(), s.start_date, s.temps);
    Ok(())
}
