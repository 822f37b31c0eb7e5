//! Reading count series from CSV files.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{HarnessError, Result};

/// Observed counts with optional time labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CountSeries {
    pub values: Vec<u64>,
    pub labels: Option<Vec<String>>,
}

pub fn read_counts(path: &Path, column: Option<&str>) -> Result<CountSeries> {
    let file = File::open(path).map_err(|e| HarnessError::Data(format!("cannot open {}: {e}", path.display())))?;
    parse_counts(file, column)
}

/// Parses counts from CSV text.
///
/// Lines starting with `#` are skipped. Without a header the file holds one
/// count per row, or `label,count` pairs. A header row selects the column
/// named `column` (default `x`), or the only column if there is one; with a
/// `t` column, the row `t = 0` (the initial state of a simulated trajectory)
/// is skipped.
pub fn parse_counts<R: Read>(reader: R, column: Option<&str>) -> Result<CountSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records().peekable();
    let mut value_col = None;
    let mut label_col = None;

    if let Some(Ok(first)) = records.peek() {
        let mut fields = first.iter().filter(|f| !f.is_empty()).peekable();
        let is_header = fields.peek().is_some() && fields.all(|f| f.parse::<f64>().is_err());
        if is_header {
            let wanted = column.unwrap_or("x");
            value_col = first.iter().position(|f| f.eq_ignore_ascii_case(wanted));
            if value_col.is_none() && first.len() == 1 && column.is_none() {
                value_col = Some(0);
            }
            if value_col.is_none() {
                return Err(HarnessError::Data(format!("no column named {wanted:?} in header")));
            }
            label_col = first.iter().position(|f| f.eq_ignore_ascii_case("t")).filter(|&i| Some(i) != value_col);
            records.next();
        }
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| HarnessError::Data(e.to_string()))?;
        let row = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let (vi, li) = match value_col {
            Some(v) => (v, label_col),
            None if rec.len() == 2 => (1, Some(0)),
            None if rec.len() == 1 => (0, None),
            None => {
                return Err(HarnessError::Data(format!(
                    "row {row}: expected one value or a label,value pair, found {} fields",
                    rec.len()
                )))
            }
        };
        let field = rec
            .get(vi)
            .ok_or_else(|| HarnessError::Data(format!("row {row}: missing value column")))?;
        let label = li.map(|i| rec.get(i).unwrap_or("").to_string());
        if value_col.is_some() && label.as_deref() == Some("0") {
            continue;
        }
        values.push(parse_count(field).map_err(|msg| HarnessError::Data(format!("row {row}: {msg}")))?);
        labels.extend(label);
    }
    let labels = (!labels.is_empty()).then_some(labels);
    Ok(CountSeries { values, labels })
}

fn parse_count(field: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = field.parse::<u64>() {
        return Ok(v);
    }
    match field.parse::<f64>() {
        Ok(v) if v < 0.0 => Err(format!("negative count {field:?}")),
        Ok(v) if v.fract() == 0.0 && v < 2f64.powi(64) => Ok(v as u64),
        Ok(_) => Err(format!("non-integer count {field:?}")),
        Err(_) => Err(format!("not a number: {field:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<CountSeries> {
        parse_counts(text.as_bytes(), None)
    }

    #[test]
    fn plain_column() {
        let s = parse("3\n0\n17\n").unwrap();
        assert_eq!(s.values, vec![3, 0, 17]);
        assert_eq!(s.labels, None);
    }

    #[test]
    fn header_and_comments() {
        let s = parse("# from somewhere\ncases\n1\n2\n").unwrap();
        assert_eq!(s.values, vec![1, 2]);
        let s = parse("t,sigma,x,c_exo\n0,1,0,\n1,2.5,3,0\n").unwrap();
        assert_eq!(s.values, vec![3]);
        assert_eq!(s.labels, Some(vec!["1".into()]));
    }

    #[test]
    fn labelled_pairs() {
        let s = parse("2020-03-01,5\n2020-03-02,8\n").unwrap();
        assert_eq!(s.values, vec![5, 8]);
        assert_eq!(s.labels.unwrap()[1], "2020-03-02");
        assert_eq!(parse("day,cases\n1,2\n").unwrap_err().exit_code(), 3);
        let s = parse("day,x\n2020-03-01,5\n2020-03-02,8\n").unwrap();
        assert_eq!(s.values, vec![5, 8]);
        let s = parse("1,5\n2,8\n").unwrap();
        assert_eq!(s.labels, Some(vec!["1".into(), "2".into()]));
    }

    #[test]
    fn errors_name_the_row() {
        let e = parse("1\n2\n-4\n").unwrap_err();
        assert!(e.to_string().contains("row 3") && e.to_string().contains("negative"), "{e}");
        let e = parse("x\n1\n2.5\n").unwrap_err();
        assert!(e.to_string().contains("row 3") && e.to_string().contains("non-integer"), "{e}");
        assert_eq!(parse("1\nabc\n").unwrap_err().exit_code(), 3);
    }

    #[test]
    fn integral_floats_are_accepted() {
        assert_eq!(parse("4.0\n1e3\n").unwrap().values, vec![4, 1000]);
    }
}
