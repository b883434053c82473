use std::path::{Path, PathBuf};

use serde::Serialize;
use twophoton::experiment::Series;

use crate::error::CliError;

/// Where an artifact goes: an absolute configured path as is, a relative one
/// under `dir` (or the working directory), else `dir/default_name`.
pub fn resolve(dir: Option<&Path>, configured: Option<&PathBuf>, default_name: &str) -> PathBuf {
    let base = dir.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    match configured {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => base.join(p),
        None => base.join(default_name),
    }
}

/// `dir/stem_suffix.ext` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Output(format!("cannot create {}: {e}", parent.display())))?;
    }
    Ok(())
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `t` and the named columns of `series` (all of them when `select`
/// is `None`), 17 significant digits per value.
pub fn write_csv(path: &Path, series: &Series, select: Option<&[String]>) -> Result<(), CliError> {
    ensure_parent(path)?;
    let names: Vec<String> = match select {
        Some(s) => s.to_vec(),
        None => series.names.clone(),
    };
    let cols: Vec<&[f64]> = names
        .iter()
        .map(|n| {
            series
                .column(n)
                .ok_or_else(|| CliError::Validation(format!("no column {n:?} in this run")))
        })
        .collect::<Result<_, _>>()?;
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (k, t) in series.times.iter().enumerate() {
        let mut row = Vec::with_capacity(cols.len() + 1);
        row.push(format_value(*t));
        row.extend(cols.iter().map(|c| format_value(c[k])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths() {
        let d = Path::new("/tmp/out");
        assert_eq!(resolve(Some(d), None, "a.csv"), PathBuf::from("/tmp/out/a.csv"));
        assert_eq!(resolve(Some(d), Some(&PathBuf::from("x/b.csv")), "a.csv"), PathBuf::from("/tmp/out/x/b.csv"));
        assert_eq!(resolve(Some(d), Some(&PathBuf::from("/abs.csv")), "a.csv"), PathBuf::from("/abs.csv"));
        assert_eq!(resolve(None, None, "a.csv"), PathBuf::from("./a.csv"));
        assert_eq!(sibling(Path::new("/o/cmp.csv"), "full"), PathBuf::from("/o/cmp_full.csv"));
    }

    #[test]
    fn seventeen_digits() {
        let s = format_value(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        let third = 1.0 / 3.0;
        assert_eq!(format_value(third).parse::<f64>().unwrap(), third);
    }
}
