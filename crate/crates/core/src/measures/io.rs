//! CSV formats.
//!
//! A measure is written as a header `x1,...,xd,weight` followed by one row per
//! atom. Atoms of a table-metric space have no coordinates and are written as
//! `point,weight` with the index of the underlying point.
//!
//! A space is written as a metadata line `# metric=<kind>` followed by a
//! header and one row per point: coordinates `x1,...,xd` or, for tables, the
//! row of distances `d0,...,d{n-1}`.

use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::{Error, Result};

use super::measure::DiscreteMeasure;
use super::space::{MetricKind, MetricSpace};

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse(format!("line {line}: `{field}` is not a number")))
}

fn coordinate_header(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}

pub fn write_measure_csv(m: &DiscreteMeasure, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let space = m.space();
    let mut header = if space.has_coordinates() { coordinate_header(space.dim()) } else { vec!["point".to_string()] };
    header.push("weight".into());
    w.write_record(&header).map_err(csv_err)?;
    for (i, &wt) in m.weights().iter().enumerate() {
        let mut row: Vec<String> = if space.has_coordinates() {
            m.atom(i).iter().map(|x| format!("{x}")).collect()
        } else {
            vec![space.resolve(m.support()[i]).1.to_string()]
        };
        row.push(format!("{wt}"));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a coordinate measure; every row becomes its own point of a fresh
/// space with metric `kind`.
pub fn read_measure_csv(input: impl std::io::Read, kind: MetricKind) -> Result<DiscreteMeasure> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.len() < 2 || &header[header.len() - 1] != "weight" {
        return Err(Error::Parse("measure CSV needs columns x1,...,xd,weight".into()));
    }
    let dim = header.len() - 1;
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        for f in rec.iter().take(dim) {
            coords.push(parse_f64(f, line + 2)?);
        }
        weights.push(parse_f64(&rec[dim], line + 2)?);
    }
    let space = Arc::new(MetricSpace::from_flat(dim, coords, kind)?);
    let n = weights.len();
    DiscreteMeasure::new(space, (0..n).collect(), weights)
}

/// Reads a `point,weight` measure on an existing space.
pub fn read_indexed_measure_csv(input: impl std::io::Read, space: Arc<MetricSpace>) -> Result<DiscreteMeasure> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut support = Vec::new();
    let mut weights = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 2 {
            return Err(Error::Parse(format!("line {}: expected point,weight", line + 2)));
        }
        support.push(rec[0].parse::<usize>().map_err(|_| Error::Parse(format!("line {}: bad point index", line + 2)))?);
        weights.push(parse_f64(&rec[1], line + 2)?);
    }
    DiscreteMeasure::new(space, support, weights)
}

pub fn write_space_csv(space: &MetricSpace, mut out: impl Write) -> Result<()> {
    writeln!(out, "# metric={}", space.kind())?;
    let mut w = csv::Writer::from_writer(out);
    if space.has_coordinates() {
        w.write_record(coordinate_header(space.dim())).map_err(csv_err)?;
        for i in 0..space.len() {
            w.write_record(space.point(i).iter().map(|x| format!("{x}"))).map_err(csv_err)?;
        }
    } else {
        let n = space.len();
        w.write_record((0..n).map(|j| format!("d{j}"))).map_err(csv_err)?;
        for i in 0..n {
            w.write_record((0..n).map(|j| format!("{}", space.distance(i, j)))).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_space_csv(mut input: impl BufRead) -> Result<MetricSpace> {
    let mut first = String::new();
    input.read_line(&mut first)?;
    let kind = first
        .trim()
        .strip_prefix('#')
        .and_then(|s| s.trim().strip_prefix("metric="))
        .ok_or_else(|| Error::Parse("space CSV must start with `# metric=<kind>`".into()))
        .and_then(MetricKind::parse)?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let width = r.headers().map_err(csv_err)?.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        for f in rec.iter() {
            values.push(parse_f64(f, line + 3)?);
        }
        rows += 1;
    }
    match kind {
        MetricKind::Table => {
            if rows != width {
                return Err(Error::Parse(format!("distance table has {rows} rows and {width} columns")));
            }
            MetricSpace::from_table(rows, values)
        }
        _ => MetricSpace::from_flat(width, values, kind),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_round_trip() {
        let space = Arc::new(MetricSpace::euclidean(vec![vec![0.1, 2.0], vec![-3.5, 1e-300], vec![0.1, 2.0]]).unwrap());
        let m = DiscreteMeasure::new(space, vec![0, 1, 2], vec![0.2, 0.3, 0.5]).unwrap();
        let mut buf = Vec::new();
        write_measure_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,weight\n"));
        let back = read_measure_csv(buf.as_slice(), MetricKind::Euclidean).unwrap();
        assert_eq!(back.weights(), m.weights());
        for i in 0..3 {
            assert_eq!(back.atom(i), m.atom(i));
        }
    }

    #[test]
    fn space_round_trip_both_kinds() {
        let coords = MetricSpace::from_points(vec![vec![1.0], vec![2.5]], MetricKind::SupNorm).unwrap();
        let table = MetricSpace::from_table(2, vec![0.0, 0.7, 0.7, 0.0]).unwrap();
        for s in [coords, table] {
            let mut buf = Vec::new();
            write_space_csv(&s, &mut buf).unwrap();
            let back = read_space_csv(buf.as_slice()).unwrap();
            assert_eq!(back.kind(), s.kind());
            assert_eq!(back.len(), 2);
            assert_eq!(back.distance(0, 1), s.distance(0, 1));
        }
    }

    #[test]
    fn indexed_measure_on_table() {
        let table = Arc::new(MetricSpace::from_table(2, vec![0.0, 0.7, 0.7, 0.0]).unwrap());
        let m = DiscreteMeasure::new(table.clone(), vec![1], vec![1.0]).unwrap();
        let mut buf = Vec::new();
        write_measure_csv(&m, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "point,weight\n1,1\n");
        let back = read_indexed_measure_csv(buf.as_slice(), table).unwrap();
        assert_eq!(back.support(), &[1]);
    }

    #[test]
    fn missing_metadata_line_is_an_error() {
        assert!(read_space_csv("x1\n0\n".as_bytes()).is_err());
    }
}
