//! CSV emission with a reproducibility preamble.
//!
//! Every file records the seed; the wall-clock line can be suppressed so
//! repeated runs are byte-identical.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    pub seed: u64,
    pub timestamp: bool,
}

pub fn write_csv<P: AsRef<Path>>(
    path: P,
    opts: CsvOptions,
    header: &str,
    comments: &[String],
    rows: impl IntoIterator<Item = String>,
) -> std::io::Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# seed={}", opts.seed)?;
    if opts.timestamp {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        writeln!(w, "# generated_unix={now}")?;
    }
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()
}
