use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};

use super::{open, IngestError};
use crate::engine::{Record, Sink};
use crate::model::Alert;

/// Writes alerts as JSON Lines; events are ignored. The file is created up
/// front, so a run without alerts leaves an empty file.
pub struct JsonlSink<W: Write = BufWriter<File>> {
    out: W,
    written: u64,
}

impl JsonlSink {
    pub fn create(path: &Path) -> io::Result<Self> {
        Ok(JsonlSink::new(BufWriter::new(File::create(path)?)))
    }
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        JsonlSink { out, written: 0 }
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> Sink for JsonlSink<W> {
    fn accept(&mut self, rec: Record) -> io::Result<()> {
        if let Record::Alert(alert) = rec {
            serde_json::to_writer(&mut self.out, &alert)?;
            self.out.write_all(b"\n")?;
            self.written += 1;
        }
        Ok(())
    }

    fn finish(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// A FeatureCollection with one Point feature per alert.
pub fn alerts_to_geojson(alerts: &[Alert]) -> Value {
    let features: Vec<Value> = alerts
        .iter()
        .map(|a| {
            json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [a.lon, a.lat]},
                "properties": {
                    "type": a.kind,
                    "train_id": a.train_id,
                    "ts": a.ts,
                    "severity": a.severity,
                    "payload": a.payload,
                },
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

/// Converts an alert JSONL file to GeoJSON. Returns the number of alerts.
pub fn export_geojson(input: &Path, output: &Path) -> Result<usize, IngestError> {
    let reader = io::BufReader::new(open(input)?);
    let mut alerts = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| IngestError::Io {
            path: input.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let alert: Alert = serde_json::from_str(&line)
            .map_err(|e| IngestError::parse(format!("{} line {}", input.display(), i + 1), e))?;
        alerts.push(alert);
    }
    let io_err = |source| IngestError::Io {
        path: output.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(output).map_err(io_err)?);
    serde_json::to_writer_pretty(&mut out, &alerts_to_geojson(&alerts))
        .map_err(|e| io_err(e.into()))?;
    out.write_all(b"\n").map_err(io_err)?;
    out.flush().map_err(io_err)?;
    Ok(alerts.len())
}
