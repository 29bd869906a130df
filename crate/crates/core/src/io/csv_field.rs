use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifting::{OrientationField, OrientationRecord};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    x: f64,
    y: f64,
    angle: f64,
    magnitude: f64,
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!("checked to be an I/O error"),
        }
    } else {
        Error::format("csv", e.to_string())
    }
}

/// Read `x,y,angle,magnitude` rows (header required; angles in radians).
pub fn read_field_csv(path: impl AsRef<Path>) -> Result<OrientationField> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["x", "y", "angle", "magnitude"] {
        return Err(Error::format("csv", "header must be x,y,angle,magnitude"));
    }
    let records = reader
        .deserialize::<Row>()
        .map(|row| {
            let r = row.map_err(csv_error)?;
            Ok(OrientationRecord::new(r.x, r.y, r.angle, r.magnitude))
        })
        .collect::<Result<_>>()?;
    Ok(OrientationField::new(records))
}

pub fn write_field_csv(path: impl AsRef<Path>, field: &OrientationField) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in &field.records {
        writer
            .serialize(Row {
                x: r.x,
                y: r.y,
                angle: r.angle,
                magnitude: r.magnitude,
            })
            .map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}
