use std::fmt::Write as _;
use std::fs;

use jumplab_core::harness::{ingest_csv_days, ingest_day_csv, read_ticks, Session};
use jumplab_core::JumpError;

fn clock(secs: u32) -> String {
    format!("{:02}:{:02}:{:02}", secs / 3600, secs / 60 % 60, secs % 60)
}

fn tick_file(rows: impl IntoIterator<Item = (String, f64)>) -> tempfile::NamedTempFile {
    let mut s = String::from("timestamp,price\n");
    for (t, p) in rows {
        writeln!(s, "{t},{p}").unwrap();
    }
    let f = tempfile::NamedTempFile::new().unwrap();
    fs::write(f.path(), s).unwrap();
    f
}

const OPEN: u32 = 9 * 3600 + 1800;

fn wiggle(i: u32) -> f64 {
    100.0 + ((i * 7919) % 13) as f64 * 0.01
}

#[test]
fn three_second_day_has_7799_increments() {
    let f = tick_file((0..7800).map(|i| (format!("2024-03-01T{}", clock(OPEN + 3 * i)), wiggle(i))));
    let path = ingest_day_csv(f.path(), &Session::default()).unwrap();
    assert_eq!(path.n(), 7799);
    assert!((path.delta() - 3.0 / 23_400.0).abs() < 1e-15);
    assert!((path.values()[5] - wiggle(5).ln()).abs() < 1e-12);
}

#[test]
fn flat_day_is_flagged() {
    let f = tick_file((0..500).map(|i| (format!("2024-03-01 {}", clock(OPEN + 3 * i)), 42.0)));
    assert!(matches!(ingest_day_csv(f.path(), &Session::default()), Err(JumpError::FlaggedFlat)));
}

#[test]
fn pre_market_rows_are_dropped() {
    let pre = (0..200).map(|i| (format!("2024-03-01T{}", clock(OPEN - 600 + 3 * i)), 500.0 + i as f64));
    let f = tick_file(pre.chain((0..100).map(|i| (format!("2024-03-01T{}", clock(OPEN + 3 * i)), wiggle(i)))));
    let path = ingest_day_csv(f.path(), &Session::default()).unwrap();
    let ticks = read_ticks(f.path()).unwrap();
    let first_inside = ticks.iter().find(|t| t.time.time() >= Session::default().start).unwrap();
    assert_eq!(first_inside.time.format("%H:%M:%S").to_string(), "09:30:00");
    assert_eq!(path.values()[0], first_inside.price.ln());
    assert!(path.values().iter().all(|v| *v < 200.0f64.ln()));
}

#[test]
fn gaps_are_forward_filled() {
    let times = [0u32, 3, 6, 15, 18, 21];
    let f = tick_file(times.iter().enumerate().map(|(i, &s)| (format!("2024-03-01T{}", clock(OPEN + s)), 10.0 + i as f64)));
    let path = ingest_day_csv(f.path(), &Session::default()).unwrap();
    let expect: Vec<f64> = [10.0, 11.0, 12.0, 12.0, 12.0, 13.0, 14.0, 15.0].iter().map(|p: &f64| p.ln()).collect();
    assert_eq!(path.values(), expect.as_slice());
}

#[test]
fn epoch_timestamps_are_accepted() {
    // 2024-03-01 09:30:00 UTC
    let base = 1_709_285_400u64;
    let f = tick_file((0..50).map(|i| ((base + 3 * i as u64).to_string(), wiggle(i))));
    assert_eq!(ingest_day_csv(f.path(), &Session::default()).unwrap().n(), 49);
}

#[test]
fn parse_errors() {
    let bad_price = tick_file([("2024-03-01T09:30:00".to_string(), 1.0), ("2024-03-01T09:30:03".to_string(), -1.0)]);
    assert!(matches!(ingest_day_csv(bad_price.path(), &Session::default()), Err(JumpError::Parse(_))));
    let f = tempfile::NamedTempFile::new().unwrap();
    fs::write(f.path(), "time,value\n2024-03-01T09:30:00,1\n").unwrap();
    assert!(matches!(ingest_day_csv(f.path(), &Session::default()), Err(JumpError::Parse(_))));
    assert!(ingest_day_csv(std::path::Path::new("/nonexistent/ticks.csv"), &Session::default()).is_err());
}

#[test]
fn multi_day_files_split_by_date() {
    let rows = ["2024-03-01", "2024-03-04"]
        .iter()
        .flat_map(|d| (0..100).map(move |i| (format!("{d}T{}", clock(OPEN + 3 * i)), wiggle(i))));
    let f = tick_file(rows);
    assert!(ingest_day_csv(f.path(), &Session::default()).is_err());
    let days = ingest_csv_days(f.path(), &Session::default()).unwrap();
    assert_eq!(days.len(), 2);
    assert!(days.iter().all(|(_, p)| p.as_ref().unwrap().n() == 99));
}
