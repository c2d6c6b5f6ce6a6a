//! Run directory: config snapshot, loss history, metrics and checkpoints.

use std::fs;
use std::path::{Path, PathBuf};

use qst_core::io::atomic_write;

use crate::error::{Result, TrainError};
use crate::eval::{metrics_csv, MetricRow};
use crate::train::History;

/// Files written by a stage `s`: `s.config`, `s_loss.csv`, `s_metrics.csv`.
pub fn config_file(stage: &str) -> String {
    format!("{stage}.config")
}

pub fn loss_file(stage: &str) -> String {
    format!("{stage}_loss.csv")
}

pub fn metrics_file(stage: &str) -> String {
    format!("{stage}_metrics.csv")
}

#[derive(Clone, Debug)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(RunDir { root: root.to_path_buf() })
    }

    /// Opens an existing run directory.
    pub fn open(root: &Path) -> Result<Self> {
        if !root.is_dir() {
            return Err(TrainError::Config(format!("run directory {} does not exist", root.display())));
        }
        Ok(RunDir { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).exists()
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        atomic_write(&self.path(name), text.as_bytes())?;
        Ok(())
    }

    pub fn read_text(&self, name: &str) -> Result<String> {
        let p = self.path(name);
        fs::read_to_string(&p).map_err(|e| TrainError::Config(format!("expected file {}: {e}", p.display())))
    }

    pub fn write_config(&self, stage: &str, text: &str) -> Result<()> {
        self.write_text(&config_file(stage), text)
    }

    pub fn write_history(&self, stage: &str, h: &History) -> Result<()> {
        self.write_text(&loss_file(stage), &h.to_csv())
    }

    pub fn write_metrics(&self, stage: &str, rows: &[MetricRow]) -> Result<()> {
        self.write_text(&metrics_file(stage), &metrics_csv(rows))
    }

    /// Every `*metrics.csv` file in the directory, sorted by name.
    pub fn metrics_files(&self) -> Result<Vec<PathBuf>> {
        let mut out: Vec<PathBuf> = fs::read_dir(&self.root)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with("metrics.csv")))
            .collect();
        out.sort();
        Ok(out)
    }
}
