//! CSV ingestion and export.
//!
//! Recording schema: header `time,ch1,...,chd[,label]`, one row per sample.
//! The time column is informational (grids are uniform by construction); the
//! optional label column holds an integer class per timepoint.

use crate::curves::{Grid, Label, LabeledSample, MultiCurve};
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

/// Parse a multichannel recording, returning the channels and, when a label
/// column is present, one class label per timepoint.
pub fn read_recording_csv(path: impl AsRef<Path>) -> Result<(MultiCurve, Option<Vec<usize>>)> {
    let file = std::fs::File::open(path)?;
    read_recording(file)
}

/// Reader-based variant of [`read_recording_csv`].
pub fn read_recording(reader: impl Read) -> Result<(MultiCurve, Option<Vec<usize>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    if headers.is_empty() || headers.get(0) != Some("time") {
        return Err(Error::Csv {
            line: 1,
            msg: "header must start with `time`".into(),
        });
    }
    let has_label = headers.iter().last() == Some("label");
    let n_channels = headers.len() - 1 - usize::from(has_label);
    if n_channels == 0 {
        return Err(Error::Csv {
            line: 1,
            msg: "no channel columns between `time` and `label`".into(),
        });
    }

    let mut channels: Vec<Vec<f64>> = vec![Vec::new(); n_channels];
    let mut labels: Vec<usize> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Csv {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(Error::Csv {
                line,
                msg: format!("expected {} fields, got {}", headers.len(), record.len()),
            });
        }
        for (i, ch) in channels.iter_mut().enumerate() {
            let raw = record.get(i + 1).unwrap();
            let v: f64 = raw.parse().map_err(|_| Error::Csv {
                line,
                msg: format!("bad value {raw:?} in column {}", i + 2),
            })?;
            ch.push(v);
        }
        if has_label {
            let raw = record.get(headers.len() - 1).unwrap();
            let l: usize = raw.parse().map_err(|_| Error::Csv {
                line,
                msg: format!("bad label {raw:?}"),
            })?;
            if l == 0 {
                return Err(Error::Csv {
                    line,
                    msg: "labels are 1-based".into(),
                });
            }
            labels.push(l);
        }
    }
    let len = channels[0].len();
    let grid = Grid::new(len)?;
    let mc = MultiCurve::from_values(grid, channels)?;
    Ok((mc, has_label.then_some(labels)))
}

/// Write a recording in the ingestion schema.
pub fn write_recording_csv(
    path: impl AsRef<Path>,
    recording: &MultiCurve,
    labels: Option<&[usize]>,
) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != recording.len() {
            return Err(Error::LengthMismatch {
                expected: recording.len(),
                got: l.len(),
            });
        }
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "time")?;
    for i in 1..=recording.num_channels() {
        write!(out, ",ch{i}")?;
    }
    if labels.is_some() {
        write!(out, ",label")?;
    }
    writeln!(out)?;
    let grid = recording.grid();
    for t in 0..recording.len() {
        write!(out, "{}", grid.point(t))?;
        for ch in recording.channels() {
            write!(out, ",{}", ch.values()[t])?;
        }
        if let Some(l) = labels {
            write!(out, ",{}", l[t])?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Export a generated dataset for inspection, one row per sample-timepoint:
/// `sample,time,ch1,...,chd,label` (scalar labels only).
pub fn export_dataset_csv(path: impl AsRef<Path>, data: &[LabeledSample]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidConfig("dataset is empty".into()));
    }
    let d = data[0].data.num_channels();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "sample,time")?;
    for i in 1..=d {
        write!(out, ",ch{i}")?;
    }
    writeln!(out, ",label")?;
    for (idx, s) in data.iter().enumerate() {
        let class = match &s.label {
            Label::Class(c) => *c,
            Label::Curves(_) => {
                return Err(Error::InvalidConfig(
                    "dataset export requires scalar labels".into(),
                ))
            }
        };
        let grid = s.data.grid();
        for t in 0..s.data.len() {
            write!(out, "{},{}", idx, grid.point(t))?;
            for ch in s.data.channels() {
                write!(out, ",{}", ch.values()[t])?;
            }
            writeln!(out, ",{class}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Export example curves per class (plot data for the sample-curve figures):
/// `class,example,channel,time,value`.
pub fn export_class_examples_csv(
    path: impl AsRef<Path>,
    data: &[LabeledSample],
    per_class: usize,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "class,example,channel,time,value")?;
    let classes: Vec<usize> = {
        let mut cs: Vec<usize> = data
            .iter()
            .filter_map(|s| match &s.label {
                Label::Class(c) => Some(*c),
                Label::Curves(_) => None,
            })
            .collect();
        cs.sort_unstable();
        cs.dedup();
        cs
    };
    for class in classes {
        let examples = data
            .iter()
            .filter(|s| s.label == Label::Class(class))
            .take(per_class);
        for (ei, s) in examples.enumerate() {
            let grid = s.data.grid();
            for (ci, ch) in s.data.channels().iter().enumerate() {
                for t in 0..ch.len() {
                    writeln!(
                        out,
                        "{},{},{},{},{}",
                        class,
                        ei,
                        ci + 1,
                        grid.point(t),
                        ch.values()[t]
                    )?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::Grid;

    #[test]
    fn roundtrip_recording_with_labels() {
        let grid = Grid::new(5).unwrap();
        let mc = MultiCurve::from_values(
            grid,
            vec![vec![1.0, 2.0, 3.5, -0.25, 0.0], vec![0.1, 0.2, 0.3, 0.4, 0.5]],
        )
        .unwrap();
        let labels = vec![1, 1, 2, 2, 3];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        write_recording_csv(&path, &mc, Some(&labels)).unwrap();
        let (mc2, labels2) = read_recording_csv(&path).unwrap();
        assert_eq!(mc, mc2);
        assert_eq!(labels2, Some(labels));
    }

    #[test]
    fn roundtrip_recording_without_labels() {
        let grid = Grid::new(3).unwrap();
        let mc = MultiCurve::from_values(grid, vec![vec![1.0, 2.0, 3.0]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        write_recording_csv(&path, &mc, None).unwrap();
        let (mc2, labels) = read_recording_csv(&path).unwrap();
        assert_eq!(mc, mc2);
        assert_eq!(labels, None);
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let text = "time,ch1,label\n0.5,1.0,1\n1.0,oops,2\n";
        let err = read_recording(text.as_bytes()).unwrap_err();
        match err {
            Error::Csv { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("oops"), "{msg}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn missing_time_header_is_rejected() {
        let text = "t,ch1\n0.5,1.0\n";
        assert!(matches!(
            read_recording(text.as_bytes()),
            Err(Error::Csv { line: 1, .. })
        ));
    }

    #[test]
    fn short_row_is_rejected_with_line() {
        let text = "time,ch1,ch2\n0.5,1.0,2.0\n1.0,3.0\n";
        match read_recording(text.as_bytes()).unwrap_err() {
            Error::Csv { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other}"),
        }
    }
}
