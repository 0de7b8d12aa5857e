use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wnvcast::ingest::{write_cases_csv, write_temperature_csv, CaseSeries};
use wnvcast::manifest::RunManifest;
use wnvcast::synth::{SyntheticClimate, SyntheticCounty};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_wnvcast"));
    c.env_remove(wnvcast::config::OUTPUT_DIR_ENV);
    c
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--output-dir")
        .arg(out)
        .output()
        .unwrap()
}

/// Five synthetic years (2016–2020) plus a config, written to `dir`.
fn small_county(dir: &Path, keep_case_years: Option<&[i32]>) -> PathBuf {
    let spec = SyntheticCounty {
        climate: SyntheticClimate {
            start_year: 2016,
            end_year: 2020,
            seed: 5,
            ..Default::default()
        },
        ..Default::default()
    };
    let g = spec.generate().unwrap();
    let cases = match keep_case_years {
        Some(years) => {
            let entries = g
                .county
                .cases
                .entries()
                .iter()
                .map(|e| {
                    let mut e = *e;
                    if !years.contains(&e.year) {
                        e.count = 0;
                    }
                    e
                })
                .collect();
            CaseSeries::new("small", entries).unwrap()
        }
        None => g.county.cases.clone(),
    };
    write_temperature_csv(&g.county.temps, File::create(dir.join("temperature.csv")).unwrap()).unwrap();
    write_cases_csv(&cases, File::create(dir.join("cases.csv")).unwrap()).unwrap();
    let config = dir.join("config.toml");
    fs::write(
        &config,
        "location_id = \"small\"\n[paths]\ntemperature = \"temperature.csv\"\ncases = \"cases.csv\"\n",
    )
    .unwrap();
    config
}

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                files.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn forecast_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_county(dir.path(), None);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["forecast", "--target-year", "2020"], &config, out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (outputs(&a), outputs(&b));
    assert!(fa.iter().any(|(n, _)| n == "forecast_2020.json"));
    assert_eq!(fa, fb);

    let manifest: RunManifest = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.command, "forecast");
    assert_eq!(manifest.inputs.len(), 2);
    assert_eq!(manifest.outputs.len(), fa.len());
}

#[test]
fn loyo_over_five_years() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_county(dir.path(), None);
    let out = dir.path().join("out");
    let o = run(&["evaluate-loyo"], &config, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: wnvcast::eval::CvReport = serde_json::from_slice(&fs::read(out.join("cv_report.json")).unwrap()).unwrap();
    assert_eq!(report.folds.len(), 5);
    assert_eq!(report.location_id, "small");
    assert!(out.join("loyo_intervals.csv").is_file());

    let p = run(&["plot"], &config, &out);
    assert!(p.status.success(), "{}", String::from_utf8_lossy(&p.stderr));
    assert!(out.join("figures/loyo_nrmse.svg").is_file());
}

#[test]
fn environment_sets_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_county(dir.path(), None);
    let target = dir.path().join("from-env");
    let o = bin()
        .args(["ingest-check", "--config"])
        .arg(&config)
        .env(wnvcast::config::OUTPUT_DIR_ENV, &target)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join("ingest_summary.json").is_file());
    assert!(target.join("manifest.json").is_file());
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_county(dir.path(), None);
    let out = dir.path().join("out");
    let o = bin()
        .args(["simulate", "--year", "2017", "--set", "model.carrying_capacity=5e4", "--config"])
        .arg(&config)
        .arg("--output-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("trajectories/2017.csv").is_file());
    assert!(!out.join("trajectories/2016.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_county(dir.path(), None);
    let out = dir.path().join("out");

    // missing input file
    let missing = dir.path().join("missing.toml");
    fs::write(&missing, "[paths]\ntemperature = \"nope.csv\"\ncases = \"cases.csv\"\n").unwrap();
    assert_eq!(run(&["ingest-check"], &missing, &out).status.code(), Some(2));
    // unreadable config and bad values
    assert_eq!(run(&["ingest-check"], &dir.path().join("absent.toml"), &out).status.code(), Some(2));
    let o = bin()
        .args(["ingest-check", "--set", "forecast.delay_days=\"soon\"", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    // unknown subcommand
    assert_eq!(bin().arg("predict").output().unwrap().status.code(), Some(2));

    // malformed data
    fs::write(dir.path().join("temperature.csv"), "date,temp\n2016-01-01,warm\n").unwrap();
    assert_eq!(run(&["ingest-check"], &config, &out).status.code(), Some(3));
}

#[test]
fn too_few_onsets_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_county(dir.path(), Some(&[2016, 2017]));
    let o = run(&["fit-onset"], &config, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}
