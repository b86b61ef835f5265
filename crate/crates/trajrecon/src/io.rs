//! File formats: the trip CSV, the ground-truth sidecar, and evaluation
//! report emission.
//!
//! Trip CSV schema: header `trip_id,t,x,v,stopped`; rows grouped by trip
//! and time-sorted within it; `v` may be empty, but uniformly so within a
//! trip; `stopped` is 0 or 1. All numbers are written with the shortest
//! representation that round-trips, so identical data yields identical
//! bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluate::{EvaluationReport, Mape, MeanSd};
use crate::preprocess::PreprocessReport;
use crate::series::{Observation, ObservationSeries};
use crate::synthetic::GroundTruth;

const TRIP_HEADER: [&str; 5] = ["trip_id", "t", "x", "v", "stopped"];

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, reason: reason.into() }
}

fn parse_f64(path: &Path, line: usize, field: &str, raw: &str) -> Result<f64> {
    let value: f64 = raw
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("{field} is not a number: {raw:?}")))?;
    if !value.is_finite() {
        return Err(parse_err(path, line, format!("{field} is not finite: {raw:?}")));
    }
    Ok(value)
}

/// Reads a trip CSV into validated series, one per contiguous trip_id
/// group. Errors carry the 1-based line number of the offending row.
pub fn read_trips(path: &Path) -> Result<Vec<ObservationSeries>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != TRIP_HEADER {
        return Err(parse_err(
            path,
            1,
            format!("expected header {:?}, got {:?}", TRIP_HEADER.join(","), headers),
        ));
    }

    fn flush(
        trips: &mut Vec<ObservationSeries>,
        id: Option<String>,
        samples: &mut Vec<Observation>,
    ) -> Result<()> {
        if let Some(id) = id {
            trips.push(ObservationSeries::new(id, std::mem::take(samples))?);
        }
        Ok(())
    }

    let mut trips: Vec<ObservationSeries> = Vec::new();
    let mut current_id: Option<String> = None;
    let mut samples: Vec<Observation> = Vec::new();
    let mut trip_has_velocity = false;

    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != TRIP_HEADER.len() {
            return Err(parse_err(path, line, format!("expected 5 fields, got {}", record.len())));
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(parse_err(path, line, "empty trip_id"));
        }
        let t = parse_f64(path, line, "t", &record[1])?;
        let x = parse_f64(path, line, "x", &record[2])?;
        let v = match record[3].trim() {
            "" => None,
            raw => Some(parse_f64(path, line, "v", raw)?),
        };
        let stopped = match record[4].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(path, line, format!("stopped must be 0 or 1, got {other:?}")))
            }
        };

        if current_id.as_deref() != Some(id.as_str()) {
            flush(&mut trips, current_id.take(), &mut samples)?;
            if trips.iter().any(|done| done.trip_id() == id) {
                return Err(parse_err(path, line, format!("rows for trip {id:?} not contiguous")));
            }
            current_id = Some(id);
            trip_has_velocity = v.is_some();
        } else {
            if let Some(last) = samples.last() {
                if t <= last.t {
                    return Err(parse_err(
                        path,
                        line,
                        format!("time not increasing within trip: {t} after {}", last.t),
                    ));
                }
            }
            if v.is_some() != trip_has_velocity {
                return Err(parse_err(path, line, "velocity must be all-or-none within a trip"));
            }
        }
        samples.push(Observation { t, x, v, stopped });
    }
    flush(&mut trips, current_id, &mut samples)?;
    Ok(trips)
}

/// Writes trips in the trip CSV schema. Bytes are deterministic for equal
/// inputs.
pub fn write_trips(path: &Path, trips: &[ObservationSeries]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(TRIP_HEADER)?;
    for trip in trips {
        for s in trip.samples() {
            writer.write_record([
                trip.trip_id(),
                &s.t.to_string(),
                &s.x.to_string(),
                &s.v.map(|v| v.to_string()).unwrap_or_default(),
                if s.stopped { "1" } else { "0" },
            ])?;
        }
    }
    writer.flush().map_err(Error::Io)?;
    Ok(())
}

pub fn write_truths(path: &Path, truths: &[GroundTruth]) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    serde_json::to_writer(file, truths)?;
    Ok(())
}

pub fn read_truths(path: &Path) -> Result<Vec<GroundTruth>> {
    let file = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(file)?)
}

pub fn write_preprocess_report(path: &Path, report: &PreprocessReport) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, report)?;
    file.write_all(b"\n")?;
    Ok(())
}

fn cell(value: f64) -> String {
    value.to_string()
}

fn mean_sd_cells(m: &MeanSd) -> [String; 2] {
    [cell(m.mean), cell(m.sd)]
}

fn opt_mean_sd_cells(m: &Option<MeanSd>) -> [String; 2] {
    m.as_ref().map(mean_sd_cells).unwrap_or_default()
}

fn mape_cells(m: &Mape) -> [String; 2] {
    [cell(m.value), m.excluded.to_string()]
}

/// Writes the three report tables, the timing table, and a consolidated
/// JSON. Timing lives only in `timings.csv`; every other artifact is
/// byte-deterministic for identical inputs.
pub fn write_report(dir: &Path, report: &EvaluationReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    let mut fit = csv::Writer::from_path(dir.join("fit_metrics.csv"))?;
    fit.write_record([
        "method",
        "dataset",
        "trips",
        "skipped",
        "rmse_pos_mean",
        "rmse_pos_sd",
        "mae_pos_mean",
        "mae_pos_sd",
        "rmse_vel_mean",
        "rmse_vel_sd",
        "mae_vel_mean",
        "mae_vel_sd",
        "violation_rate_mean",
        "violation_rate_sd",
        "mon_success",
    ])?;
    for row in &report.fit {
        let mut record: Vec<String> = vec![
            row.method.clone(),
            row.dataset.clone(),
            row.trips.to_string(),
            row.skipped.to_string(),
        ];
        record.extend(mean_sd_cells(&row.rmse_pos));
        record.extend(mean_sd_cells(&row.mae_pos));
        record.extend(opt_mean_sd_cells(&row.rmse_vel));
        record.extend(opt_mean_sd_cells(&row.mae_vel));
        record.extend(mean_sd_cells(&row.violation_rate));
        record.push(cell(row.mon_success));
        fit.write_record(&record)?;
    }
    fit.flush().map_err(Error::Io)?;

    let mut profile = csv::Writer::from_path(dir.join("profile_metrics.csv"))?;
    profile.write_record([
        "method",
        "dataset",
        "adherence_tight_mean",
        "adherence_tight_sd",
        "adherence_loose_mean",
        "adherence_loose_sd",
        "stop_2_mean",
        "stop_2_sd",
        "stop_5_mean",
        "stop_5_sd",
        "stop_10_mean",
        "stop_10_sd",
    ])?;
    for row in &report.profile {
        let mut record: Vec<String> = vec![row.method.clone(), row.dataset.clone()];
        record.extend(mean_sd_cells(&row.adherence_tight));
        record.extend(mean_sd_cells(&row.adherence_loose));
        record.extend(opt_mean_sd_cells(&row.stop_2));
        record.extend(opt_mean_sd_cells(&row.stop_5));
        record.extend(opt_mean_sd_cells(&row.stop_10));
        profile.write_record(&record)?;
    }
    profile.flush().map_err(Error::Io)?;

    let mut inter = csv::Writer::from_path(dir.join("intersection_metrics.csv"))?;
    inter.write_record([
        "method",
        "dataset",
        "non_monotone_windows",
        "travel_time_mean",
        "travel_time_sd",
        "mean_speed_mean",
        "mean_speed_sd",
        "speed_volatility_mean",
        "speed_volatility_sd",
        "deceleration_mean",
        "deceleration_sd",
        "mape_travel_time",
        "mape_travel_time_excluded",
        "mape_mean_speed",
        "mape_mean_speed_excluded",
        "mape_speed_volatility",
        "mape_speed_volatility_excluded",
        "mape_deceleration",
        "mape_deceleration_excluded",
    ])?;
    for row in &report.intersections {
        let mut record: Vec<String> = vec![
            row.method.clone(),
            row.dataset.clone(),
            row.non_monotone_windows.to_string(),
        ];
        record.extend(mean_sd_cells(&row.travel_time));
        record.extend(mean_sd_cells(&row.mean_speed));
        record.extend(mean_sd_cells(&row.speed_volatility));
        record.extend(mean_sd_cells(&row.deceleration));
        record.extend(mape_cells(&row.mape_travel_time));
        record.extend(mape_cells(&row.mape_mean_speed));
        record.extend(mape_cells(&row.mape_speed_volatility));
        record.extend(mape_cells(&row.mape_deceleration));
        inter.write_record(&record)?;
    }
    inter.flush().map_err(Error::Io)?;

    let mut timings = csv::Writer::from_path(dir.join("timings.csv"))?;
    timings.write_record(["method", "dataset", "comp_time_ms_mean", "comp_time_ms_sd"])?;
    for row in &report.timings {
        let mut record: Vec<String> = vec![row.method.clone(), row.dataset.clone()];
        record.extend(mean_sd_cells(&row.comp_time_ms));
        timings.write_record(&record)?;
    }
    timings.flush().map_err(Error::Io)?;

    // The consolidated JSON stays timing-free so identical runs emit
    // identical bytes.
    let mut stable = report.clone();
    stable.timings.clear();
    let mut file = BufWriter::new(File::create(dir.join("report.json"))?);
    serde_json::to_writer_pretty(&mut file, &stable)?;
    file.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::{FitRow, IntersectionRow, ProfileRow, TimingRow};

    fn write_file(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn two_row_file_parses_to_one_series() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "trips.csv",
            "trip_id,t,x,v,stopped\nA,0,0,12.5,0\nA,10,120,0,1\n",
        );
        let trips = read_trips(&path).unwrap();
        assert_eq!(trips.len(), 1);
        assert_eq!(trips[0].len(), 2);
        assert_eq!(trips[0].trip_id(), "A");
        assert_eq!(trips[0].samples()[0].v, Some(12.5));
        assert!(trips[0].samples()[1].stopped);
    }

    #[test]
    fn decreasing_time_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "trips.csv",
            "trip_id,t,x,v,stopped\nA,0,0,,0\nA,10,120,,0\nA,5,130,,0\n",
        );
        let err = read_trips(&path).unwrap_err();
        match err {
            Error::Parse { line, reason, .. } => {
                assert_eq!(line, 4);
                assert!(reason.contains("time not increasing"), "{reason}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn mixed_velocity_presence_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "trips.csv",
            "trip_id,t,x,v,stopped\nA,0,0,5,0\nA,10,120,,0\n",
        );
        let err = read_trips(&path).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn velocity_free_trip_parses_without_velocity() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "trips.csv",
            "trip_id,t,x,v,stopped\nA,0,0,,0\nA,10,120,,0\n",
        );
        let trips = read_trips(&path).unwrap();
        assert!(!trips[0].has_velocity());
    }

    #[test]
    fn bad_stopped_and_bad_header_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "bad_stop.csv",
            "trip_id,t,x,v,stopped\nA,0,0,,yes\n",
        );
        assert!(matches!(read_trips(&path), Err(Error::Parse { line: 2, .. })));

        let path = write_file(dir.path(), "bad_header.csv", "id,time,pos,vel,flag\nA,0,0,,0\n");
        assert!(matches!(read_trips(&path), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn non_contiguous_trip_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "trips.csv",
            "trip_id,t,x,v,stopped\nA,0,0,,0\nA,5,1,,0\nB,0,0,,0\nB,5,2,,0\nA,10,3,,0\n",
        );
        let err = read_trips(&path).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 6, .. }), "{err:?}");
    }

    #[test]
    fn trips_round_trip_exactly() {
        use crate::synthetic::{generate_trip, CorridorSpec};
        let spec = CorridorSpec::default();
        let trips: Vec<ObservationSeries> =
            (0..3).map(|s| generate_trip(&spec, s).unwrap().1).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trips.csv");
        write_trips(&path, &trips).unwrap();
        let back = read_trips(&path).unwrap();
        assert_eq!(trips, back);

        write_trips(&dir.path().join("again.csv"), &back).unwrap();
        let a = std::fs::read(&path).unwrap();
        let b = std::fs::read(dir.path().join("again.csv")).unwrap();
        assert_eq!(a, b, "same data must serialize to identical bytes");
    }

    #[test]
    fn truths_round_trip() {
        use crate::synthetic::{generate_truth, CorridorSpec};
        let spec = CorridorSpec::default();
        let truths: Vec<GroundTruth> =
            (0..3).map(|s| generate_truth(&spec, s).unwrap()).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.json");
        write_truths(&path, &truths).unwrap();
        assert_eq!(read_truths(&path).unwrap(), truths);
    }

    fn tiny_report() -> EvaluationReport {
        let ms = |mean, sd| MeanSd { mean, sd };
        EvaluationReport {
            baseline_method: "VCHIP-ME".into(),
            baseline_dataset: "dense".into(),
            fit: vec![FitRow {
                method: "PCHIP".into(),
                dataset: "sparse".into(),
                trips: 4,
                skipped: 0,
                rmse_pos: ms(10.0, 2.0),
                mae_pos: ms(8.0, 1.5),
                rmse_vel: None,
                mae_vel: None,
                violation_rate: ms(0.0, 0.0),
                mon_success: 1.0,
            }],
            profile: vec![ProfileRow {
                method: "PCHIP".into(),
                dataset: "sparse".into(),
                adherence_tight: ms(97.0, 1.0),
                adherence_loose: ms(99.0, 0.5),
                stop_2: None,
                stop_5: None,
                stop_10: Some(ms(88.0, 3.0)),
            }],
            intersections: vec![IntersectionRow {
                method: "PCHIP".into(),
                dataset: "sparse".into(),
                non_monotone_windows: 0,
                travel_time: ms(14.0, 3.0),
                mean_speed: ms(21.0, 4.0),
                speed_volatility: ms(1.2, 0.3),
                deceleration: ms(0.8, 0.2),
                mape_travel_time: Mape { value: 12.0, excluded: 0 },
                mape_mean_speed: Mape { value: 9.0, excluded: 0 },
                mape_speed_volatility: Mape { value: 30.0, excluded: 1 },
                mape_deceleration: Mape { value: 25.0, excluded: 2 },
            }],
            timings: vec![TimingRow {
                method: "PCHIP".into(),
                dataset: "sparse".into(),
                comp_time_ms: ms(0.5, 0.1),
            }],
        }
    }

    #[test]
    fn report_files_have_sd_columns_and_stable_json() {
        let report = tiny_report();
        let dir = tempfile::tempdir().unwrap();
        write_report(dir.path(), &report).unwrap();

        for name in
            ["fit_metrics.csv", "profile_metrics.csv", "intersection_metrics.csv", "timings.csv"]
        {
            let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
            let header = text.lines().next().unwrap();
            for column in header.split(',') {
                if let Some(stem) = column.strip_suffix("_mean") {
                    assert!(
                        header.split(',').any(|c| c == format!("{stem}_sd")),
                        "{name}: no sd column for {column}"
                    );
                }
            }
            assert_eq!(text.lines().count(), 2, "{name}: expected header + 1 row");
        }

        let text = std::fs::read_to_string(dir.path().join("fit_metrics.csv")).unwrap();
        let row = text.lines().nth(1).unwrap();
        assert!(row.starts_with("PCHIP,sparse,4,0,10,2,8,1.5,,,,,0,0,1"), "{row}");

        let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let back: EvaluationReport = serde_json::from_str(&json).unwrap();
        assert!(back.timings.is_empty(), "consolidated JSON must stay timing-free");
        let mut expect = report.clone();
        expect.timings.clear();
        assert_eq!(back, expect);
    }
}
