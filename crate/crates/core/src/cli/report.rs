//! CSV and JSON outputs.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::{AggregateRow, EpisodeRecord, StaticMissRow};

/// Column set of the aggregate table.
pub const AGGREGATE_COLUMNS: [&str; 6] = [
    "method",
    "epsilon",
    "collision_rate",
    "misdetection_rate",
    "goal_rate",
    "mean_path_length_m",
];

pub const EPISODE_COLUMNS: [&str; 13] = [
    "method",
    "epsilon",
    "env_id",
    "q_hat",
    "collision",
    "misdetection",
    "goal_reached",
    "timed_out",
    "stalled",
    "path_length_m",
    "steps",
    "sensing_steps",
    "braking_steps",
];

pub const MISS_COLUMNS: [&str; 5] = ["method", "epsilon", "q_hat", "environments", "miss_rate"];

pub fn fmt_epsilon(e: Option<f64>) -> String {
    e.map(|e| e.to_string()).unwrap_or_default()
}

pub fn fmt_margin(q: f64) -> String {
    if q.is_infinite() {
        if q > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{q:.6}")
    }
}

fn fmt_rate(r: f64) -> String {
    format!("{r:.4}")
}

/// Write `bytes` next to `path` and rename into place, so readers never see
/// a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &AGGREGATE_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.method.to_string(),
                fmt_epsilon(r.epsilon),
                fmt_rate(r.collision_rate),
                fmt_rate(r.misdetection_rate),
                fmt_rate(r.goal_rate),
                r.mean_path_length_m.map(|l| format!("{l:.4}")).unwrap_or_default(),
            ]
        }),
    )
}

pub fn episodes_csv(records: &[EpisodeRecord]) -> Result<Vec<u8>> {
    csv_bytes(
        &EPISODE_COLUMNS,
        records.iter().map(|r| {
            let m = &r.metrics;
            vec![
                r.method.to_string(),
                fmt_epsilon(r.epsilon),
                r.env_id.to_string(),
                fmt_margin(r.q_hat),
                u8::from(m.collision).to_string(),
                u8::from(m.misdetection).to_string(),
                u8::from(m.goal_reached).to_string(),
                u8::from(m.timed_out).to_string(),
                u8::from(m.stalled).to_string(),
                format!("{:.4}", m.path_length),
                m.wall_time_steps.to_string(),
                m.sensing_steps.to_string(),
                m.braking_steps.to_string(),
            ]
        }),
    )
}

pub fn miss_csv(rows: &[StaticMissRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &MISS_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.method.to_string(),
                fmt_epsilon(r.epsilon),
                fmt_margin(r.q_hat),
                r.environments.to_string(),
                fmt_rate(r.miss_rate),
            ]
        }),
    )
}
