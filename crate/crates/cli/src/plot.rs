//! Two-column accuracy series for external plotting.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fedsel_core::metrics::read_round_csv;

/// Round logs in `dir`, sorted by name.
pub fn find_logs(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir)
        .with_context(|| format!("cannot read log directory {}", dir.display()))?;
    let mut logs = Vec::new();
    for e in entries {
        let path = e?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == "csv") {
            logs.push(path);
        }
    }
    logs.sort();
    if logs.is_empty() {
        bail!("no round logs (*.csv) in {}", dir.display());
    }
    Ok(logs)
}

/// Writes `<out>/<log stem>.csv` with `round,balanced_accuracy` rows. The accuracy
/// cell is copied from the log verbatim.
pub fn emit_plot_data(log_dir: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let logs = find_logs(log_dir)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut written = Vec::with_capacity(logs.len());
    for log in logs {
        let file =
            fs::File::open(&log).with_context(|| format!("cannot open {}", log.display()))?;
        let rows =
            read_round_csv(file).with_context(|| format!("bad round log {}", log.display()))?;
        let target = out.join(log.file_name().expect("log has a file name"));
        let mut w = csv::Writer::from_path(&target)
            .with_context(|| format!("cannot create {}", target.display()))?;
        w.write_record(["round", "balanced_accuracy"])?;
        for r in &rows {
            w.write_record([r.round.to_string().as_str(), r.acc_text.as_str()])?;
        }
        w.flush()?;
        written.push(target);
    }
    Ok(written)
}
