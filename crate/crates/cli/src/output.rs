use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::ValueEnum;
use cwpotts::export::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Where tables go: one file per table in `dir`, or standard output.
pub struct Output {
    dir: Option<PathBuf>,
    format: Format,
    header: Vec<String>,
    written: usize,
}

impl Output {
    pub fn new(dir: Option<PathBuf>, format: Format, command: &str, config: &[(&str, String)]) -> io::Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)?;
        }
        let cfg: Vec<String> = config.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let header = vec![
            format!("cwpotts {}", env!("CARGO_PKG_VERSION")),
            format!("command: {command} {}", cfg.join(" ")),
        ];
        Ok(Self { dir, format, header, written: 0 })
    }

    /// Adds a header line to every table written afterwards.
    pub fn note(&mut self, line: impl Into<String>) {
        self.header.push(line.into());
    }

    pub fn emit(&mut self, name: &str, mut table: Table) -> io::Result<()> {
        table.prepend_comments(self.header.iter().cloned().chain([format!("table: {name}")]));
        match &self.dir {
            Some(d) => {
                let path = d.join(format!("{name}.{}", self.format.extension()));
                let mut w = BufWriter::new(File::create(path)?);
                self.write(&table, &mut w)?;
                w.flush()?;
            }
            None => {
                let stdout = io::stdout();
                let mut w = stdout.lock();
                if self.written > 0 {
                    writeln!(w)?;
                }
                self.write(&table, &mut w)?;
                w.flush()?;
            }
        }
        self.written += 1;
        Ok(())
    }

    fn write(&self, table: &Table, w: &mut impl Write) -> io::Result<()> {
        match self.format {
            Format::Csv => table.write_csv(&mut *w),
            Format::Json => {
                table.write_json(&mut *w)?;
                writeln!(w)
            }
        }
    }
}
