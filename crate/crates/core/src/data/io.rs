//! Dataset CSV files.
//!
//! ```text
//! # dim=2 num_classes=3 regime=in_domain layout=plane
//! x0,x1,label
//! 0.12,-1.9,0
//! ```
//!
//! The first line carries the metadata; `layout` is `plane` or
//! `image:<width>x<height>`. The label column is empty for out-of-domain rows.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{LabeledDataset, Layout, Regime};
use crate::classifier::{FeatureVector, Label};
use crate::error::{Error, Result};

pub fn write_dataset<W: Write>(data: &LabeledDataset, writer: W) -> Result<()> {
    let dim = data.dim().unwrap_or(match data.layout() {
        Layout::Image { width, height } => width * height,
        Layout::Plane => 0,
    });
    let layout = match data.layout() {
        Layout::Plane => "plane".to_string(),
        Layout::Image { width, height } => format!("image:{width}x{height}"),
    };
    let mut writer = BufWriter::new(writer);
    let io_err = |e| Error::io("<dataset writer>", e);
    writeln!(
        writer,
        "# dim={dim} num_classes={} regime={} layout={layout}",
        data.num_classes(),
        data.regime().as_str()
    )
    .map_err(io_err)?;

    let mut csv = csv::Writer::from_writer(writer);
    let header: Vec<String> = (0..dim).map(|j| format!("x{j}")).chain(["label".into()]).collect();
    csv.write_record(&header)?;
    let mut row = Vec::with_capacity(dim + 1);
    for (i, p) in data.points().iter().enumerate() {
        row.clear();
        row.extend(p.values().iter().map(|v| v.to_string()));
        row.push(data.labels().map(|ls| ls[i].to_string()).unwrap_or_default());
        csv.write_record(&row)?;
    }
    csv.flush().map_err(io_err)?;
    Ok(())
}

fn parse_meta(line: &str) -> Result<(usize, usize, Regime, Layout)> {
    let bad = |message: String| Error::MalformedDataset { line: 1, message };
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| bad("missing '#' metadata line".into()))?;
    let (mut dim, mut classes, mut regime, mut layout) = (None, None, None, None);
    for field in body.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, got `{field}`")))?;
        match key {
            "dim" => dim = value.parse().ok(),
            "num_classes" => classes = value.parse().ok(),
            "regime" => regime = Regime::parse(value),
            "layout" => {
                layout = if value == "plane" {
                    Some(Layout::Plane)
                } else {
                    value
                        .strip_prefix("image:")
                        .and_then(|wh| wh.split_once('x'))
                        .and_then(|(w, h)| {
                            Some(Layout::Image {
                                width: w.parse().ok()?,
                                height: h.parse().ok()?,
                            })
                        })
                }
            }
            other => return Err(bad(format!("unknown metadata key `{other}`"))),
        }
    }
    Ok((
        dim.ok_or_else(|| bad("missing or invalid `dim`".into()))?,
        classes.ok_or_else(|| bad("missing or invalid `num_classes`".into()))?,
        regime.ok_or_else(|| bad("missing or invalid `regime`".into()))?,
        layout.ok_or_else(|| bad("missing or invalid `layout`".into()))?,
    ))
}

pub fn read_dataset<R: Read>(reader: R) -> Result<LabeledDataset> {
    let mut reader = BufReader::new(reader);
    let mut first = String::new();
    reader
        .read_line(&mut first)
        .map_err(|e| Error::io("<dataset reader>", e))?;
    let (dim, num_classes, regime, layout) = parse_meta(first.trim_end())?;

    let mut csv = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = csv.headers()?.clone();
    if header.len() != dim + 1 {
        return Err(Error::MalformedDataset {
            line: 2,
            message: format!("header has {} columns, expected {}", header.len(), dim + 1),
        });
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let line = i + 3;
        let record = record?;
        let bad = |message: String| Error::MalformedDataset { line, message };
        if record.len() != dim + 1 {
            return Err(bad(format!("{} columns, expected {}", record.len(), dim + 1)));
        }
        let values = record
            .iter()
            .take(dim)
            .map(|s| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        points.push(FeatureVector::new(values).map_err(|e| bad(e.to_string()))?);
        let label = &record[dim];
        match (regime, label.is_empty()) {
            (Regime::Ood, true) => {}
            (Regime::Ood, false) => return Err(bad("out-of-domain rows must not be labeled".into())),
            (_, true) => return Err(bad("missing label".into())),
            (_, false) => labels.push(Label(label.parse().map_err(|e| bad(format!("label `{label}`: {e}")))?)),
        }
    }
    let labels = (regime != Regime::Ood).then_some(labels);
    LabeledDataset::from_parts(points, labels, num_classes, regime, layout)
}

pub fn save_dataset(data: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(data, file)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_blobs, make_glyphs, make_ood, Centers};

    fn round_trip(d: &LabeledDataset) -> LabeledDataset {
        let mut buf = Vec::new();
        write_dataset(d, &mut buf).unwrap();
        read_dataset(buf.as_slice()).unwrap()
    }

    #[test]
    fn all_regimes_round_trip() {
        let d = make_blobs(3, 4, &Centers::Auto { dim: 2 }, 0.5, 1).unwrap();
        assert_eq!(round_trip(&d), d);
        let ood = make_ood(5, &d, 1.0, 2).unwrap();
        assert_eq!(round_trip(&ood), ood);
        let g = make_glyphs(2, 3, 4, 0.1, 3).unwrap();
        assert_eq!(round_trip(&g), g);
    }

    #[test]
    fn header_and_empty_label_column() {
        let d = make_blobs(2, 1, &Centers::Auto { dim: 2 }, 0.5, 1).unwrap();
        let ood = make_ood(1, &d, 1.0, 2).unwrap();
        let mut buf = Vec::new();
        write_dataset(&ood, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# dim=2 num_classes=2 regime=ood layout=plane");
        assert_eq!(lines[1], "x0,x1,label");
        assert!(lines[2].ends_with(','));
    }

    #[test]
    fn malformed_rows_report_line() {
        let text = "# dim=2 num_classes=2 regime=in_domain layout=plane\nx0,x1,label\n0,1,0\n0,abc,1\n";
        match read_dataset(text.as_bytes()) {
            Err(Error::MalformedDataset { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let missing_meta = "x0,x1,label\n0,1,0\n";
        assert!(read_dataset(missing_meta.as_bytes()).is_err());
    }
}
