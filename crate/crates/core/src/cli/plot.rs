//! Long-format plot data `(series, x, y)` derived from result CSVs.
//!
//! Every known result file starts with zero or more grouping columns,
//! followed by one x column and the value columns. Each source cell becomes
//! one long row whose series name is `value(x)` or `value(x)[g=v,...]`, so
//! the source table can be rebuilt exactly, row order included.

use crate::error::{Error, Result};

/// Number of leading grouping columns of each known result file.
const SCHEMAS: [(&str, usize); 15] = [
    ("spectroscopy.csv", 0),
    ("calibration_map.csv", 1),
    ("contours.csv", 2),
    ("ptm.csv", 0),
    ("ptm_corrected.csv", 0),
    ("stark.csv", 0),
    ("density.csv", 0),
    ("repeated_lru.csv", 0),
    ("parity_rounds.csv", 1),
    ("parity_assignment.csv", 0),
    ("bell.csv", 1),
    ("readout_shots.csv", 2),
    ("assignment_matrix.csv", 2),
    ("measurement_tensor.csv", 2),
    ("joint_frequencies.csv", 2),
];

fn group_columns(file_name: &str) -> Result<usize> {
    SCHEMAS
        .iter()
        .find(|(n, _)| *n == file_name)
        .map(|(_, g)| *g)
        .ok_or_else(|| Error::UnknownSchema(file_name.to_string()))
}

pub fn has_schema(file_name: &str) -> bool {
    group_columns(file_name).is_ok()
}

/// A plain table: header and string cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.iter().map(String::from).collect();
        let rows = rd
            .records()
            .map(|rec| Ok(rec?.iter().map(String::from).collect()))
            .collect::<Result<_>>()?;
        Ok(Table { header, rows })
    }

    pub fn write<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.header)?;
        for r in &self.rows {
            wr.write_record(r)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn check_name(s: &str) -> Result<()> {
    if s.contains(['(', ')', '[', ']', ',', '=']) {
        return Err(Error::UnknownSchema(format!("'{s}' cannot be encoded in a series name")));
    }
    Ok(())
}

/// Source table → long table for the result file `file_name`.
pub fn to_long(file_name: &str, source: &Table) -> Result<Table> {
    let g = group_columns(file_name)?;
    let h = &source.header;
    if h.len() < g + 2 {
        return Err(Error::UnknownSchema(format!("{file_name}: expected at least {} columns", g + 2)));
    }
    for name in h {
        check_name(name)?;
    }
    let mut rows = Vec::with_capacity(source.rows.len() * (h.len() - g - 1));
    for r in &source.rows {
        if r.len() != h.len() {
            return Err(Error::DimensionMismatch {
                expected: h.len(),
                got: r.len(),
            });
        }
        let groups: Vec<String> = (0..g)
            .map(|k| {
                check_name(&r[k])?;
                Ok(format!("{}={}", h[k], r[k]))
            })
            .collect::<Result<_>>()?;
        let suffix = if g == 0 { String::new() } else { format!("[{}]", groups.join(",")) };
        for k in g + 1..h.len() {
            rows.push(vec![format!("{}({}){}", h[k], h[g], suffix), r[g].clone(), r[k].clone()]);
        }
    }
    Ok(Table {
        header: vec!["series".into(), "x".into(), "y".into()],
        rows,
    })
}

struct Series {
    value: String,
    x_name: String,
    groups: Vec<(String, String)>,
}

fn parse_series(s: &str) -> Result<Series> {
    let bad = || Error::UnknownSchema(format!("malformed series name '{s}'"));
    let open = s.find('(').ok_or_else(bad)?;
    let close = s.find(')').ok_or_else(bad)?;
    let rest = &s[close + 1..];
    let groups = if rest.is_empty() {
        vec![]
    } else {
        let inner = rest.strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(bad)?;
        inner
            .split(',')
            .map(|kv| {
                kv.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(bad)
            })
            .collect::<Result<_>>()?
    };
    Ok(Series {
        value: s[..open].to_string(),
        x_name: s[open + 1..close].to_string(),
        groups,
    })
}

/// Rebuilds the source table from its long form.
pub fn from_long(long: &Table) -> Result<Table> {
    if long.header != ["series", "x", "y"] {
        return Err(Error::UnknownSchema("long table must have columns series, x, y".into()));
    }
    let Some(first) = long.rows.first() else {
        return Err(Error::InsufficientData("empty long table".into()));
    };
    let first = parse_series(&first[0])?;
    // Value columns of one source row appear consecutively in header order.
    let mut values = vec![first.value.clone()];
    for r in &long.rows[1..] {
        let s = parse_series(&r[0])?;
        if s.value == values[0] {
            break;
        }
        values.push(s.value);
    }
    let k = values.len();
    if long.rows.len() % k != 0 {
        return Err(Error::UnknownSchema("long table rows do not tile the value columns".into()));
    }
    let mut header: Vec<String> = first.groups.iter().map(|(n, _)| n.clone()).collect();
    header.push(first.x_name.clone());
    header.extend(values.iter().cloned());

    let mut rows = Vec::with_capacity(long.rows.len() / k);
    for chunk in long.rows.chunks(k) {
        let head = parse_series(&chunk[0][0])?;
        let mut row: Vec<String> = head.groups.iter().map(|(_, v)| v.clone()).collect();
        row.push(chunk[0][1].clone());
        for (j, r) in chunk.iter().enumerate() {
            let s = parse_series(&r[0])?;
            if s.value != values[j] || s.groups != head.groups || r[1] != chunk[0][1] {
                return Err(Error::UnknownSchema("inconsistent series layout in long table".into()));
            }
            row.push(r[2].clone());
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Long-format bytes for one result file.
pub fn emit_plot_data(file_name: &str, source_csv: &[u8]) -> Result<Vec<u8>> {
    let long = to_long(file_name, &Table::read(source_csv)?)?;
    let mut buf = Vec::new();
    long.write(&mut buf)?;
    Ok(buf)
}
