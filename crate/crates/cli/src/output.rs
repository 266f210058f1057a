//! CSV and plot-data writers.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::run::Row;

pub const CURVES: [&str; 3] = ["lower", "mmm", "upper"];

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

fn write_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    }
}

/// Header `sweep_value,regime,lower,mmm,upper`, prefixed by a `model`
/// column when any row carries a model name. Six decimals, LF endings.
pub fn write_csv<W: Write>(rows: &[Row], out: W) -> std::io::Result<()> {
    let with_model = rows.iter().any(|r| r.model.is_some());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = vec!["sweep_value", "regime", "lower", "mmm", "upper"];
    if with_model {
        header.insert(0, "model");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            fixed(r.sweep_value),
            r.regime.to_string(),
            fixed(r.lower),
            fixed(r.mmm),
            fixed(r.upper),
        ];
        if with_model {
            rec.insert(0, r.model.clone().unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()
}

pub fn csv_string(rows: &[Row]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn write_csv_file(rows: &[Row], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(write_error(dir))?;
    }
    let file = std::fs::File::create(path).map_err(write_error(path))?;
    write_csv(rows, std::io::BufWriter::new(file)).map_err(write_error(path))
}

fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect();
    s.trim_matches('_').to_string()
}

fn series_name(model: Option<&str>, regime: usize, curve: &str) -> String {
    match model {
        Some(m) => format!("{}_regime{regime}_{curve}.dat", slug(m)),
        None => format!("regime{regime}_{curve}.dat"),
    }
}

/// Writes one two-column `x y` file per (model, regime, curve) into `dir`
/// and returns their paths in a fixed order. An empty row set writes
/// nothing and prints a warning.
pub fn emit_plot_data(rows: &[Row], dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        eprintln!("warning: no rows, no plot data written");
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(dir).map_err(write_error(dir))?;

    let mut keys: Vec<(Option<&str>, usize)> = Vec::new();
    for r in rows {
        let key = (r.model.as_deref(), r.regime);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }

    let mut written = Vec::new();
    for (model, regime) in keys {
        let series: Vec<&Row> = rows
            .iter()
            .filter(|r| r.model.as_deref() == model && r.regime == regime)
            .collect();
        for (c, curve) in CURVES.iter().enumerate() {
            let path = dir.join(series_name(model, regime, curve));
            let mut text = format!("# sweep_value {curve}\n");
            for r in &series {
                let y = [r.lower, r.mmm, r.upper][c];
                text.push_str(&format!("{} {}\n", fixed(r.sweep_value), fixed(y)));
            }
            std::fs::write(&path, text).map_err(write_error(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}
