//! File formats and configuration.

pub mod config;
pub mod interchange;
pub mod wav;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::Result;

fn staging_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".{}.partial", std::process::id()));
    path.with_file_name(name)
}

/// Writes through `body` into a sibling file, then renames it over `path`.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let staging = staging_path(path);
    let outcome = (|| {
        let mut out = BufWriter::new(File::create(&staging)?);
        body(&mut out)?;
        out.flush()?;
        out.get_ref().sync_all()?;
        Ok(())
    })();
    match outcome {
        Ok(()) => Ok(fs::rename(&staging, path)?),
        Err(e) => {
            let _ = fs::remove_file(&staging);
            Err(e)
        }
    }
}
