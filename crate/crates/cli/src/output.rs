use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use mindisk::Vec3;

use crate::config::{CliError, CliResult};

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn vec3(v: &Vec3) -> String {
    format!("{},{},{}", num(v[0]), num(v[1]), num(v[2]))
}

pub fn write_csv(dir: &Path, name: &str, header: &str, rows: &[String]) -> CliResult<()> {
    let path = dir.join(name);
    let io = |source| CliError::Io { path: path.clone(), source };
    let mut w = BufWriter::new(File::create(&path).map_err(io)?);
    writeln!(w, "{header}").map_err(io)?;
    for row in rows {
        writeln!(w, "{row}").map_err(io)?;
    }
    w.flush().map_err(io)
}
