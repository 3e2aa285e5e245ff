use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Output directory that only hands out paths directly inside itself.
pub struct OutDir {
    root: PathBuf,
}

/// Reduces a name to `[A-Za-z0-9_-]` so it cannot leave the directory.
pub fn file_stem(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect();
    if s.is_empty() || s.chars().all(|c| c == '_') {
        "scenario".into()
    } else {
        s
    }
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self { root: root.to_path_buf() })
    }

    /// Path of `<stem><suffix>` inside the directory.
    pub fn file(&self, stem: &str, suffix: &str) -> PathBuf {
        self.root.join(format!("{}{suffix}", file_stem(stem)))
    }

    pub fn write(&self, stem: &str, suffix: &str, contents: &str) -> Result<PathBuf> {
        let path = self.file(stem, suffix);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
