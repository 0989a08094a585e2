use std::io;

use serde::ser::{Serialize, SerializeMap, SerializeSeq, Serializer};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::args::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    OptNum(Option<f64>),
    Int(u64),
    Bool(bool),
    Str(String),
}

impl Field {
    /// Shortest representation that round-trips.
    fn plain(&self) -> String {
        match self {
            Field::Num(v) | Field::OptNum(Some(v)) => {
                let m = v.abs();
                if m == 0.0 || !m.is_finite() || (1e-4..1e16).contains(&m) {
                    format!("{v}")
                } else {
                    format!("{v:e}")
                }
            }
            Field::OptNum(None) => String::new(),
            Field::Int(v) => v.to_string(),
            Field::Bool(v) => v.to_string(),
            Field::Str(s) => s.clone(),
        }
    }
}

impl Serialize for Field {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Field::Num(v) => s.serialize_f64(*v),
            Field::OptNum(v) => v.serialize(s),
            Field::Int(v) => s.serialize_u64(*v),
            Field::Bool(v) => s.serialize_bool(*v),
            Field::Str(v) => s.serialize_str(v),
        }
    }
}

/// Rows sharing one set of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Field>>,
}

struct Row<'a>(&'a [&'static str], &'a [Field]);

impl Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

struct Rows<'a>(&'a Table);

impl Serialize for Rows<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.rows.len()))?;
        for row in &self.0.rows {
            seq.serialize_element(&Row(&self.0.columns, row))?;
        }
        seq.end()
    }
}

impl Table {
    pub fn single(pairs: Vec<(&'static str, Field)>) -> Self {
        let (columns, row) = pairs.into_iter().unzip();
        Self { columns, rows: vec![row] }
    }

    /// One object for a single row, an array otherwise.
    pub fn to_json(&self) -> String {
        if self.rows.len() == 1 {
            to_json(&Row(&self.columns, &self.rows[0]))
        } else {
            to_json(&Rows(self))
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|f| csv_escape(&f.plain())).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// A single row prints as `key  value` lines, several rows as aligned columns.
    pub fn to_table(&self) -> String {
        if self.rows.len() == 1 {
            let width = self.columns.iter().map(|c| c.len()).max().unwrap_or(0);
            return self
                .columns
                .iter()
                .zip(&self.rows[0])
                .map(|(c, f)| format!("{c:<width$}  {}\n", f.plain()))
                .collect();
        }
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Field::plain).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| cells.iter().map(|r| r[j].len()).chain([self.columns[j].len()]).max().unwrap_or(0))
            .collect();
        let line = |items: Vec<&str>| -> String {
            let padded: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
            format!("{}\n", padded.join("  ").trim_end())
        };
        let mut out = line(self.columns.clone());
        for row in &cells {
            out.push_str(&line(row.iter().map(String::as_str).collect()));
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
            Format::Table => self.to_table(),
        }
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Pretty JSON with every float written to 17 significant digits.
struct FixedDigits<'a>(PrettyFormatter<'a>);

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}
