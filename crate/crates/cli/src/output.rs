use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use flate2::write::GzEncoder;
use flate2::Compression;
use serde::Serialize;

use crate::error::CliError;

/// Output directory that remembers which files were written.
pub struct OutDir {
    pub root: PathBuf,
    pub files: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(CliError::io(root))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn open(&mut self, name: &str) -> Result<(PathBuf, File), CliError> {
        let path = self.root.join(name);
        let file = File::create(&path).map_err(CliError::io(&path))?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_owned());
        }
        Ok((path, file))
    }

    /// Comma-separated rows under `header`; floats use the shortest
    /// round-trip form, so equal values give equal bytes.
    pub fn csv<I, R>(&mut self, name: &str, header: &str, rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[String]>,
    {
        let (path, file) = self.open(name)?;
        write_rows(BufWriter::new(file), header, rows).map(drop).map_err(CliError::io(path))
    }

    pub fn csv_gz<I, R>(&mut self, name: &str, header: &str, rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[String]>,
    {
        let (path, file) = self.open(name)?;
        // fixed header fields keep the archive byte-identical across runs
        let gz = flate2::GzBuilder::new().mtime(0).write(BufWriter::new(file), Compression::default());
        finish_gz(gz, header, rows).map_err(CliError::io(path))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let (path, file) = self.open(name)?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, value)
            .map_err(std::io::Error::from)
            .and_then(|_| writeln!(w))
            .and_then(|_| w.flush())
            .map_err(CliError::io(path))
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let (path, mut file) = self.open(name)?;
        file.write_all(body.as_bytes()).map_err(CliError::io(path))
    }
}

fn write_rows<W: Write, I, R>(mut w: W, header: &str, rows: I) -> std::io::Result<W>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[String]>,
{
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{}", row.as_ref().join(","))?;
    }
    w.flush()?;
    Ok(w)
}

fn finish_gz<W: Write, I, R>(gz: GzEncoder<W>, header: &str, rows: I) -> std::io::Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[String]>,
{
    write_rows(gz, header, rows)?.finish()?.flush()
}

/// CSV cell rendering; floats use the shortest round-trip form with an
/// exponent for tiny or huge magnitudes.
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        format!("{self:?}")
    }
}

impl<T: Cell + ?Sized> Cell for &T {
    fn cell(&self) -> String {
        (**self).cell()
    }
}

macro_rules! display_cell {
    ($($t:ty),*) => {$(
        impl Cell for $t {
            fn cell(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
display_cell!(u8, u32, u64, usize, bool, str, String);

/// Shorthand for building CSV rows.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::cell(&$x)),*] };
}
