//! Run manifests: the resolved settings in config-file syntax, so
//! `ncd <command> --config <manifest>` repeats the run, preceded by `#`
//! comment lines with the command and machine details.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub fn machine_info() -> Vec<(String, String)> {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| "unknown".into());
    vec![
        ("os".into(), std::env::consts::OS.into()),
        ("arch".into(), std::env::consts::ARCH.into()),
        ("cpu".into(), cpu),
        (
            "cores".into(),
            std::thread::available_parallelism().map_or(0, |n| n.get()).to_string(),
        ),
        ("threads".into(), rayon::current_num_threads().to_string()),
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
    ]
}

pub fn write_manifest(
    run_dir: &Path,
    command: &str,
    settings: &[(String, String)],
    results: &[(String, String)],
) -> Result<PathBuf> {
    std::fs::create_dir_all(run_dir).with_context(|| format!("creating run directory {}", run_dir.display()))?;
    let mut s = format!("# ncd {command}\n");
    for (k, v) in machine_info() {
        let _ = writeln!(s, "# machine.{k}: {v}");
    }
    for (k, v) in results {
        let _ = writeln!(s, "# result.{k}: {v}");
    }
    for (k, v) in settings {
        let _ = writeln!(s, "{k} = {v}");
    }
    let path = run_dir.join(format!("{command}.manifest"));
    std::fs::write(&path, s).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
