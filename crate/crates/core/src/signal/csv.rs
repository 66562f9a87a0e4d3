//! `labels.csv` ("epoch,label") and `positions.csv` ("channel,x,y,z").

use std::fmt::Write as _;
use std::path::Path;

use super::{ElectrodePositions, LabelSet};
use crate::error::{Error, Result};
use crate::fsutil::{read_to_string, write_atomic};

fn parse_err(file: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        msg: msg.into(),
    }
}

/// Non-blank data lines after the expected header, with 1-based line numbers.
fn data_lines<'a>(
    text: &'a str,
    header: &str,
    file: &str,
) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some((i, h)) => {
            return Err(parse_err(
                file,
                i + 1,
                format!("expected header {header:?}, found {:?}", h.trim()),
            ))
        }
        None => return Err(parse_err(file, 1, "empty file")),
    }
    Ok(lines.map(|(i, l)| (i + 1, l.split(',').map(str::trim).collect())))
}

pub fn parse_labels(text: &str, n_classes: usize, file: &str) -> Result<LabelSet> {
    let mut rows: Vec<(usize, usize, usize)> = Vec::new();
    for (line, fields) in data_lines(text, "epoch,label", file)? {
        if fields.len() != 2 {
            return Err(parse_err(file, line, format!("expected 2 fields, got {}", fields.len())));
        }
        let epoch = fields[0]
            .parse::<usize>()
            .map_err(|e| parse_err(file, line, format!("epoch: {e}")))?;
        let label = fields[1]
            .parse::<usize>()
            .map_err(|e| parse_err(file, line, format!("label: {e}")))?;
        if label >= n_classes {
            return Err(parse_err(
                file,
                line,
                format!("label {label} outside [0, {n_classes})"),
            ));
        }
        rows.push((epoch, label, line));
    }
    let mut labels = vec![None; rows.len()];
    for (epoch, label, line) in rows {
        match labels.get_mut(epoch) {
            Some(slot @ None) => *slot = Some(label),
            Some(Some(_)) => return Err(parse_err(file, line, format!("duplicate epoch {epoch}"))),
            None => {
                return Err(parse_err(
                    file,
                    line,
                    format!("epoch {epoch} out of range for {} rows", labels.len()),
                ))
            }
        }
    }
    LabelSet::new(labels.into_iter().map(Option::unwrap).collect(), n_classes)
}

pub fn read_labels(path: impl AsRef<Path>, n_classes: usize) -> Result<LabelSet> {
    let path = path.as_ref();
    parse_labels(&read_to_string(path)?, n_classes, &path.display().to_string())
}

pub fn write_labels(path: impl AsRef<Path>, labels: &LabelSet) -> Result<()> {
    let mut out = String::from("epoch,label\n");
    for (i, y) in labels.labels().iter().enumerate() {
        writeln!(out, "{i},{y}").unwrap();
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

pub fn parse_positions(text: &str, file: &str) -> Result<ElectrodePositions> {
    let mut entries = Vec::new();
    for (line, fields) in data_lines(text, "channel,x,y,z", file)? {
        if fields.len() != 4 {
            return Err(parse_err(file, line, format!("expected 4 fields, got {}", fields.len())));
        }
        let mut p = [0.0; 3];
        for (c, f) in p.iter_mut().zip(&fields[1..]) {
            *c = f
                .parse::<f64>()
                .map_err(|e| parse_err(file, line, format!("coordinate {f:?}: {e}")))?;
            if !c.is_finite() {
                return Err(parse_err(file, line, "non-finite coordinate"));
            }
        }
        if entries.iter().any(|(n, _): &(String, _)| n == fields[0]) {
            return Err(parse_err(file, line, format!("duplicate channel {:?}", fields[0])));
        }
        entries.push((fields[0].to_string(), p));
    }
    ElectrodePositions::new(entries)
}

pub fn read_positions(path: impl AsRef<Path>) -> Result<ElectrodePositions> {
    let path = path.as_ref();
    parse_positions(&read_to_string(path)?, &path.display().to_string())
}

pub fn write_positions(path: impl AsRef<Path>, pos: &ElectrodePositions) -> Result<()> {
    let mut out = String::from("channel,x,y,z\n");
    for (name, [x, y, z]) in pos.entries() {
        writeln!(out, "{name},{x},{y},{z}").unwrap();
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_in_any_row_order() {
        let l = parse_labels("epoch,label\n1,3\n0,2\n2,0\n", 5, "t").unwrap();
        assert_eq!(l.labels(), [2, 3, 0]);
    }

    #[test]
    fn label_errors_carry_line() {
        let err = parse_labels("epoch,label\n0,1\n1,9\n", 5, "labels.csv").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(parse_labels("epoch,label\n0,1\n0,2\n", 5, "t").is_err());
        assert!(parse_labels("epoch,label\n0,1\n5,2\n", 5, "t").is_err());
        assert!(parse_labels("idx,y\n0,1\n", 5, "t").is_err());
    }

    #[test]
    fn positions_parse() {
        let p = parse_positions("channel,x,y,z\nF3,0.1,0.2,0.3\nF4,-0.1,0.2,0.3\n", "t").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.entries()[1].1, [-0.1, 0.2, 0.3]);
        assert!(parse_positions("channel,x,y,z\nF3,0,0\n", "t").is_err());
        assert!(parse_positions("channel,x,y,z\nF3,0,0,0\nF3,1,1,1\n", "t").is_err());
    }
}
