use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::CliError;

/// Writes output files under one config header. Each file is rendered in memory, written
/// to a hidden temporary next to its target and renamed into place.
pub struct Outputs<'a> {
    dir: PathBuf,
    config: &'a RunConfig,
    written: Vec<PathBuf>,
}

impl<'a> Outputs<'a> {
    pub fn in_dir(dir: &Path, config: &'a RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Outputs { dir: dir.to_path_buf(), config, written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, self.config, body)?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn write_atomic(
    path: &Path,
    config: &RunConfig,
    body: impl FnOnce(&mut Vec<u8>) -> io::Result<()>,
) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut buf = Vec::new();
    writeln!(buf, "{}", config.header()).map_err(io_err)?;
    body(&mut buf).map_err(io_err)?;

    let name = path.file_name().ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&buf)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(e));
    }
    Ok(())
}
