use std::fmt::{self, Write as _};
use std::io::{self, Read, Write};
use std::path::Path;

use super::{open, IngestError};
use crate::model::{TelemetryEvent, TrainId};

/// Telemetry CSV columns, in the order [`write_csv`] emits them.
pub const HEADER: [&str; 12] = [
    "train_id",
    "ts_ms",
    "lon",
    "lat",
    "speed_mps",
    "battery_v",
    "battery_temp_c",
    "brake_bar",
    "emergency_brake",
    "noise_db",
    "axle_load_kg",
    "doors_open",
];

/// A row that could not be turned into an event.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeError {
    /// 1-based line in the file, header included.
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

impl std::error::Error for DecodeError {}

/// Events from a telemetry CSV in file order. Columns are matched by header
/// name, so their order is free and extra columns are ignored.
pub struct CsvSource {
    reader: csv::Reader<Box<dyn Read + Send>>,
    columns: [usize; 12],
    record: csv::StringRecord,
    done: bool,
}

pub fn replay_csv(path: &Path) -> Result<CsvSource, IngestError> {
    replay_reader(io::BufReader::new(open(path)?))
}

pub fn replay_reader(reader: impl Read + Send + 'static) -> Result<CsvSource, IngestError> {
    let boxed: Box<dyn Read + Send> = Box::new(reader);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(boxed);
    let headers = reader
        .headers()
        .map_err(|e| IngestError::parse("telemetry header", e))?
        .clone();
    let mut columns = [0; 12];
    let mut missing = Vec::new();
    for (slot, name) in columns.iter_mut().zip(HEADER) {
        match headers.iter().position(|h| h.trim() == name) {
            Some(i) => *slot = i,
            None => missing.push(name.to_owned()),
        }
    }
    if !missing.is_empty() {
        return Err(IngestError::HeaderMismatch { missing });
    }
    Ok(CsvSource {
        reader,
        columns,
        record: csv::StringRecord::new(),
        done: false,
    })
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

impl CsvSource {
    fn decode(&self) -> Result<TelemetryEvent, String> {
        let field = |i: usize| self.record.get(self.columns[i]).map(str::trim).unwrap_or("");
        let num = |i: usize| -> Result<f64, String> {
            let raw = field(i);
            raw.parse::<f64>()
                .map_err(|_| format!("{}: `{raw}` is not a number", HEADER[i]))
        };
        let flag = |i: usize| -> Result<bool, String> {
            let raw = field(i);
            parse_bool(raw).ok_or_else(|| format!("{}: `{raw}` is not a boolean", HEADER[i]))
        };
        if self.record.len() < HEADER.len() {
            return Err(format!(
                "expected at least {} fields, found {}",
                HEADER.len(),
                self.record.len()
            ));
        }
        let train = field(0);
        if train.is_empty() {
            return Err("train_id is empty".into());
        }
        let ts_raw = field(1);
        let ts = ts_raw
            .parse::<i64>()
            .map_err(|_| format!("ts_ms: `{ts_raw}` is not an integer"))?;
        let speed = match field(4) {
            "" => None,
            _ => Some(num(4)?),
        };
        let ev = TelemetryEvent {
            train_id: TrainId::new(train),
            ts,
            lon: num(2)?,
            lat: num(3)?,
            speed,
            battery_voltage: num(5)?,
            battery_temp: num(6)?,
            brake_pressure: num(7)?,
            emergency_brake: flag(8)?,
            noise_db: num(9)?,
            axle_load: num(10)?,
            doors_open: flag(11)?,
        };
        ev.validate().map_err(|e| e.to_string())?;
        Ok(ev)
    }
}

impl Iterator for CsvSource {
    type Item = Result<TelemetryEvent, DecodeError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.reader.read_record(&mut self.record) {
            Ok(false) => {
                self.done = true;
                None
            }
            Ok(true) => {
                let line = self.record.position().map_or(0, |p| p.line());
                Some(self.decode().map_err(|reason| DecodeError { line, reason }))
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                // an I/O failure ends the stream; malformed data does not
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    self.done = true;
                }
                Some(Err(DecodeError {
                    line,
                    reason: e.to_string(),
                }))
            }
        }
    }
}

/// Appends the CSV row for `ev` (with its newline) to `buf`. Floats use the
/// shortest representation that parses back to the same value.
pub fn format_row(ev: &TelemetryEvent, buf: &mut String) {
    let id = ev.train_id.as_str();
    if id.contains([',', '"', '\n', '\r']) {
        buf.push('"');
        buf.push_str(&id.replace('"', "\"\""));
        buf.push('"');
    } else {
        buf.push_str(id);
    }
    let _ = write!(buf, ",{},{},{},", ev.ts, ev.lon, ev.lat);
    if let Some(v) = ev.speed {
        let _ = write!(buf, "{v}");
    }
    let _ = writeln!(
        buf,
        ",{},{},{},{},{},{},{}",
        ev.battery_voltage,
        ev.battery_temp,
        ev.brake_pressure,
        ev.emergency_brake,
        ev.noise_db,
        ev.axle_load,
        ev.doors_open
    );
}

/// Serialized length of `ev`'s row in bytes, newline included.
pub fn row_len(ev: &TelemetryEvent) -> usize {
    let mut buf = String::with_capacity(128);
    format_row(ev, &mut buf);
    buf.len()
}

/// Writes the header and one row per event. Returns the bytes written.
pub fn write_csv<'a>(
    mut out: impl Write,
    events: impl IntoIterator<Item = &'a TelemetryEvent>,
) -> io::Result<u64> {
    let mut buf = HEADER.join(",");
    buf.push('\n');
    let mut total = 0u64;
    for ev in events {
        format_row(ev, &mut buf);
        if buf.len() >= 64 * 1024 {
            out.write_all(buf.as_bytes())?;
            total += buf.len() as u64;
            buf.clear();
        }
    }
    out.write_all(buf.as_bytes())?;
    total += buf.len() as u64;
    out.flush()?;
    Ok(total)
}
