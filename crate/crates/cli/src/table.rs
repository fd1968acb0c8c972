use std::fs;
use std::io::{self, Write};
use std::path::Path;

/// A named CSV table. Commands produce a list of these and the output
/// options decide where they go.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&str]) -> Self {
        Table {
            name,
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        let row: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Reads a table from CSV text with a header line.
    pub fn from_csv(name: &'static str, text: &str) -> io::Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers()?.iter().map(str::to_string).collect();
        let rows = reader
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Table { name, header, rows })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 cells")
    }

    /// Left-aligned columns under a title line.
    pub fn to_pretty(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = format!("{}\n", self.name);
        out += &line(&self.header);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out += &line(&rule);
        for row in &self.rows {
            out += &line(row);
        }
        out
    }
}

/// Where tables go: CSV files under `out` if set; otherwise CSV on `stdout`
/// separated by blank lines. `pretty` prints aligned tables to `stdout`
/// instead of CSV.
pub fn emit(
    tables: &[Table],
    out: Option<&Path>,
    pretty: bool,
    stdout: &mut dyn Write,
) -> io::Result<()> {
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        for t in tables {
            fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv())?;
        }
    }
    if pretty {
        let blocks: Vec<String> = tables.iter().map(Table::to_pretty).collect();
        stdout.write_all(blocks.join("\n").as_bytes())?;
    } else if out.is_none() {
        let blocks: Vec<String> = tables.iter().map(Table::to_csv).collect();
        stdout.write_all(blocks.join("\n").as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_quotes_commas() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(["1", "x,y"]);
        let text = t.to_csv();
        assert_eq!(text, "a,b\n1,\"x,y\"\n");
        assert_eq!(Table::from_csv("t", &text).unwrap(), t);
    }

    #[test]
    fn pretty_aligns_columns() {
        let mut t = Table::new("demo", &["time", "label"]);
        t.push(["8:40", "shared:1"]);
        t.push(["9:00", "none"]);
        assert_eq!(
            t.to_pretty(),
            "demo\ntime  label\n----  --------\n8:40  shared:1\n9:00  none\n"
        );
    }
}
