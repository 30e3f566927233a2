//! CSV formats: the points file read by every command, and the segments,
//! error-signal and training tables written by the CLI.
//!
//! Points file columns: `traj_id,t,lat,lon,label`. The `label` column may be
//! omitted; an empty label means unlabeled. Rows of one trajectory may be
//! interleaved with other trajectories and appear in any time order.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, TimedPoint};
use crate::segment::SegmentationResult;
use crate::signal::ErrorSignal;
use crate::training::TrainingSample;
use crate::trajectory::Trajectory;

pub const POINTS_HEADER: [&str; 5] = ["traj_id", "t", "lat", "lon", "label"];

struct Columns {
    id: usize,
    t: usize,
    lat: usize,
    lon: usize,
    label: Option<usize>,
}

fn columns(header: &csv::StringRecord) -> Result<Columns> {
    let find = |name: &str| header.iter().position(|h| h.trim() == name);
    let require = |name: &str| {
        find(name).ok_or_else(|| Error::Schema {
            row: 1,
            reason: format!("missing column '{name}' (expected header {})", POINTS_HEADER.join(",")),
        })
    };
    Ok(Columns {
        id: require("traj_id")?,
        t: require("t")?,
        lat: require("lat")?,
        lon: require("lon")?,
        label: find("label"),
    })
}

struct Row {
    line: usize,
    t: i64,
    pos: GeoPoint,
    label: Option<String>,
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Schema {
            row,
            reason: format!("{kind:?}"),
        },
    }
}

/// Reads a points file. Trajectories come back in order of first
/// appearance, each sorted by time.
pub fn read_trajectories<R: Read>(reader: R) -> Result<Vec<Trajectory>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.is_empty() {
        return Err(Error::Schema {
            row: 1,
            reason: "missing header row".into(),
        });
    }
    let cols = columns(&header)?;

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<Row>> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let schema = |reason: String| Error::Schema { row: line, reason };

        let id = field(cols.id);
        if id.is_empty() {
            return Err(schema("empty traj_id".into()));
        }
        let t: i64 = field(cols.t)
            .parse()
            .map_err(|_| schema(format!("t = '{}' is not an integer", field(cols.t))))?;
        let parse_coord = |i: usize, name: &'static str| -> Result<f64> {
            let v: f64 = field(i)
                .parse()
                .map_err(|_| schema(format!("{name} = '{}' is not a number", field(i))))?;
            let bound = if name == "lat" { 90.0 } else { 180.0 };
            if !v.is_finite() || v.abs() > bound {
                return Err(Error::RowRange {
                    row: line,
                    field: name,
                    value: v,
                });
            }
            Ok(v)
        };
        let lat = parse_coord(cols.lat, "lat")?;
        let lon = parse_coord(cols.lon, "lon")?;
        let label = cols.label.map(field).filter(|l| !l.is_empty()).map(str::to_string);

        if !groups.contains_key(id) {
            order.push(id.to_string());
        }
        groups.entry(id.to_string()).or_default().push(Row {
            line,
            t,
            pos: GeoPoint::new(lat, lon)?,
            label,
        });
    }

    order
        .into_iter()
        .map(|id| {
            let mut rows = groups.remove(&id).expect("grouped above");
            rows.sort_by_key(|r| (r.t, r.line));
            if let Some(pair) = rows.windows(2).find(|w| w[0].t == w[1].t) {
                return Err(Error::DuplicateTimestamp {
                    row: pair[0].line.max(pair[1].line),
                    id,
                    t: pair[1].t,
                });
            }
            let labeled = rows.iter().filter(|r| r.label.is_some()).count();
            let labels = match labeled {
                0 => None,
                n if n == rows.len() => Some(rows.iter_mut().map(|r| r.label.take().unwrap()).collect()),
                _ => return Err(Error::PartialLabels(id)),
            };
            let points = rows
                .iter()
                .map(|r| TimedPoint {
                    pos: r.pos,
                    t: r.t as f64,
                })
                .collect();
            Trajectory::new(id, points, labels)
        })
        .collect()
}

/// Opens and reads a points file; a missing or unreadable file is reported
/// as a validation error naming the path.
pub fn load_trajectories(path: &Path) -> Result<Vec<Trajectory>> {
    let file = File::open(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot open '{}': {e}", path.display())))?;
    read_trajectories(file)
}

/// Writes trajectories in the points-file format. Timestamps are written as
/// integer seconds and coordinates with their shortest exact representation,
/// so reading the output back gives the same trajectories.
pub fn write_trajectories<W: Write>(writer: W, trajs: &[Trajectory]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(POINTS_HEADER).map_err(csv_error)?;
    for traj in trajs {
        for (i, p) in traj.points().iter().enumerate() {
            let label = traj.labels().map_or("", |l| l[i].as_str());
            w.write_record([
                traj.id(),
                &format!("{}", p.t.round() as i64),
                &format!("{}", p.pos.lat),
                &format!("{}", p.pos.lon),
                label,
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_segments<W: Write>(writer: W, results: &[(SegmentationResult, &Trajectory)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["trajectory_id", "segment_id", "start_index", "end_index", "start_t", "end_t"])
        .map_err(csv_error)?;
    for (result, traj) in results {
        for (k, &(a, b)) in result.segments.iter().enumerate() {
            let pts = traj.points();
            w.write_record([
                result.trajectory_id.clone(),
                k.to_string(),
                a.to_string(),
                b.to_string(),
                (pts[a].t.round() as i64).to_string(),
                (pts[b].t.round() as i64).to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_error_signals<W: Write>(writer: W, signals: &[ErrorSignal]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["trajectory_id", "point_index", "error_m"]).map_err(csv_error)?;
    for s in signals {
        for &(i, e) in &s.values {
            w.write_record([s.trajectory_id.clone(), i.to_string(), e.to_string()])
                .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `trajectory_id,start_index,e1..eq,label` with label 0/1.
pub fn write_training<W: Write>(writer: W, samples: &[TrainingSample], q: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["trajectory_id".to_string(), "start_index".to_string()];
    header.extend((1..=q).map(|k| format!("e{k}")));
    header.push("label".into());
    w.write_record(&header).map_err(csv_error)?;
    for s in samples {
        if s.features.len() != q {
            return Err(Error::FeatureLength {
                expected: q,
                actual: s.features.len(),
            });
        }
        let mut row = vec![s.trajectory_id.clone(), s.start_index.to_string()];
        row.extend(s.features.iter().map(f64::to_string));
        row.push(u8::from(s.label).to_string());
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
