//! File-level ingestion tests: schema validation, error reporting with line
//! numbers, missing-observation handling and the write/ingest round trip.

use std::fs;
use std::path::Path;

use topocal::data::{ingest, write_forecasts_csv, write_stations_csv, DataError};

const STATIONS: &str = "\
station_id,lat,lon,height_m,dem31_m,dem15_m
ABO,46.49,7.56,1320,1650.5,1411.25
GVE,46.25,6.13,420,455.125,431.5
";

fn write(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

#[test]
fn two_row_file_yields_two_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let stations = write(dir.path(), "stations.csv", STATIONS);
    let forecasts = write(
        dir.path(),
        "forecasts.csv",
        "station_id,date,lead_time,obs,m01,m02,m03\n\
         ABO,2017-01-03,1,4.5,0,1.25,3.5\n\
         GVE,2017-01-03,1,0,0,0,0.5\n",
    );
    let dataset = ingest(&forecasts, &stations).unwrap();
    assert_eq!(dataset.pairs().len(), 2);
    assert_eq!(dataset.ensemble_size(), 3);
    assert_eq!(dataset.dropped_missing(), 0);
    assert_eq!(dataset.stations().len(), 2);
    let pair = &dataset.pairs()[0];
    assert_eq!(pair.station_id, "ABO");
    assert_eq!(pair.observation, 4.5);
    assert_eq!(pair.forecast.members(), &[0.0, 1.25, 3.5]);
    assert_eq!(dataset.station("ABO").unwrap().dem_31km, 1650.5);
}

#[test]
fn inconsistent_member_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let stations = write(dir.path(), "stations.csv", STATIONS);
    let forecasts = write(
        dir.path(),
        "forecasts.csv",
        "station_id,date,lead_time,obs,m01,m02,m03\n\
         ABO,2017-01-03,1,4.5,0,1.25,3.5\n\
         GVE,2017-01-03,1,0,0,0\n",
    );
    match ingest(&forecasts, &stations) {
        Err(DataError::InconsistentEnsembleSize {
            line,
            expected,
            found,
        }) => {
            assert_eq!(line, 3);
            assert_eq!(expected, 3);
            assert_eq!(found, 2);
        }
        other => panic!("expected inconsistent ensemble size, got {other:?}"),
    }
}

#[test]
fn unknown_station_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let stations = write(dir.path(), "stations.csv", STATIONS);
    let forecasts = write(
        dir.path(),
        "forecasts.csv",
        "station_id,date,lead_time,obs,m01,m02,m03\n\
         ZRH,2017-01-03,1,4.5,0,1.25,3.5\n",
    );
    match ingest(&forecasts, &stations) {
        Err(DataError::UnknownStation { line, station_id }) => {
            assert_eq!(line, 2);
            assert_eq!(station_id, "ZRH");
        }
        other => panic!("expected unknown station, got {other:?}"),
    }
}

#[test]
fn malformed_rows_name_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let stations = write(dir.path(), "stations.csv", STATIONS);
    for (row, needle) in [
        ("ABO,2017-13-03,1,4.5,0,1.25,3.5", "date"),
        ("ABO,2017-01-03,1.7,4.5,0,1.25,3.5", "lead time"),
        ("ABO,2017-01-03,1,abc,0,1.25,3.5", "obs"),
        ("ABO,2017-01-03,1,4.5,0,x,3.5", "m02"),
        ("ABO,2017-01-03,1,-4.5,0,1.25,3.5", "observation"),
    ] {
        let forecasts = write(
            dir.path(),
            "forecasts.csv",
            &format!(
                "station_id,date,lead_time,obs,m01,m02,m03\nGVE,2017-01-02,1,0,0,0,0\n{row}\n"
            ),
        );
        let err = ingest(&forecasts, &stations).unwrap_err();
        let message = err.to_string();
        assert!(
            message.contains('3'),
            "line number missing in '{message}' for {needle}"
        );
        assert!(
            message.to_lowercase().contains(needle),
            "expected '{needle}' in '{message}'"
        );
    }
}

#[test]
fn missing_observations_are_dropped_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    let stations = write(dir.path(), "stations.csv", STATIONS);
    let forecasts = write(
        dir.path(),
        "forecasts.csv",
        "station_id,date,lead_time,obs,m01,m02,m03\n\
         ABO,2017-01-03,1,4.5,0,1.25,3.5\n\
         ABO,2017-01-04,1,,0,1,2\n\
         GVE,2017-01-04,1,NA,0,1,2\n\
         GVE,2017-01-05,1,1.5,0,1,2\n",
    );
    let dataset = ingest(&forecasts, &stations).unwrap();
    assert_eq!(dataset.pairs().len(), 2);
    assert_eq!(dataset.dropped_missing(), 2);
}

#[test]
fn bad_headers_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let stations = write(dir.path(), "stations.csv", STATIONS);
    let forecasts = write(
        dir.path(),
        "forecasts.csv",
        "id,date,lead_time,obs,m01\nABO,2017-01-03,1,4.5,0\n",
    );
    assert!(matches!(
        ingest(&forecasts, &stations),
        Err(DataError::BadHeader { .. })
    ));

    let bad_stations = write(
        dir.path(),
        "bad_stations.csv",
        "station_id,lat,lon\nABO,46,7\n",
    );
    let ok_forecasts = write(
        dir.path(),
        "ok.csv",
        "station_id,date,lead_time,obs,m01\nABO,2017-01-03,1,4.5,0\n",
    );
    assert!(matches!(
        ingest(&ok_forecasts, &bad_stations),
        Err(DataError::BadHeader { .. })
    ));
}

#[test]
fn write_then_ingest_preserves_every_numeric_field() {
    // synthesize a dataset with awkward float values, write it, read it back
    let config = topocal::synth::SynthConfig {
        stations: 5,
        months: 2,
        ..topocal::synth::SynthConfig::default()
    };
    let dataset = topocal::synth::generate_synthetic(&config, 77)
        .unwrap()
        .dataset;

    let dir = tempfile::tempdir().unwrap();
    let forecasts = dir.path().join("forecasts.csv");
    let stations = dir.path().join("stations.csv");
    write_forecasts_csv(&dataset, &forecasts).unwrap();
    write_stations_csv(&dataset, &stations).unwrap();
    let back = ingest(&forecasts, &stations).unwrap();

    assert_eq!(back.pairs().len(), dataset.pairs().len());
    for (a, b) in back.pairs().iter().zip(dataset.pairs()) {
        assert_eq!(a.station_id, b.station_id);
        assert_eq!(a.date, b.date);
        assert_eq!(a.lead_time, b.lead_time);
        assert!((a.observation - b.observation).abs() <= 1e-12 * b.observation.abs().max(1.0));
        for (x, y) in a.forecast.members().iter().zip(b.forecast.members()) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }
    for (id, meta) in back.stations() {
        let original = dataset.station(id).unwrap();
        assert_eq!(meta.latitude, original.latitude);
        assert_eq!(meta.dem_31km, original.dem_31km);
        assert_eq!(meta.dem_15km, original.dem_15km);
        assert_eq!(meta.height, original.height);
    }
}
