//! CSV form of [`BenchRecord`]s.
//!
//! The first line names the schema version; the second is the column
//! header. Floats are written in shortest round-trip form, so reading a
//! file back gives the same records bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::{BenchError, BenchRecord};

pub const SCHEMA_LINE: &str = "# quadmat-bench records v1";

pub const HEADER: &str = "case_id,family,mode,n,b,n_workers,repeat,wall_seconds,flops,efficiency,\
bytes_min,bytes_mean,bytes_max,tasks_min,tasks_mean,tasks_max";

pub fn write_records<W: Write>(mut w: W, records: &[BenchRecord]) -> Result<(), BenchError> {
    writeln!(w, "{SCHEMA_LINE}\n{HEADER}").map_err(BenchError::Write)?;
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for r in records {
        out.serialize(r).map_err(|e| BenchError::Csv(e.to_string()))?;
    }
    out.flush().map_err(BenchError::Write)
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<BenchRecord>, BenchError> {
    let mut r = BufReader::new(r);
    let mut first = String::new();
    r.read_line(&mut first).map_err(BenchError::Write)?;
    if first.trim_end() != SCHEMA_LINE {
        return Err(BenchError::Csv(format!(
            "unsupported schema line `{}`",
            first.trim_end()
        )));
    }
    let mut input = csv::Reader::from_reader(r);
    let header = input.headers().map_err(|e| BenchError::Csv(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != HEADER {
        return Err(BenchError::Csv("column header does not match the v1 schema".into()));
    }
    input
        .deserialize()
        .map(|row| row.map_err(|e| BenchError::Csv(e.to_string())))
        .collect()
}

pub fn emit_csv(records: &[BenchRecord], path: &Path) -> Result<(), BenchError> {
    if records.is_empty() {
        return Err(BenchError::Config("no records to write".into()));
    }
    let file = File::create(path).map_err(|e| BenchError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    write_records(file, records)
}

pub fn load_csv(path: &Path) -> Result<Vec<BenchRecord>, BenchError> {
    let file = File::open(path).map_err(|e| BenchError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    read_records(file)
}
