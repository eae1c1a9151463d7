use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::log::StoreError;

/// Full instruction text of one course exercise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExerciseText {
    pub exercise_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExerciseFailure {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExerciseLoad {
    pub exercises: Vec<ExerciseText>,
    pub failures: Vec<ExerciseFailure>,
}

/// Load every `*.txt` file in `dir` as an exercise keyed by file stem,
/// sorted by id. Files that cannot be read, are not UTF-8, or are empty are
/// reported in `failures`; the rest still load.
pub fn import_exercises(dir: &Path) -> Result<ExerciseLoad, StoreError> {
    let entries = std::fs::read_dir(dir).map_err(|source| StoreError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut load = ExerciseLoad::default();
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext == "txt"))
        .collect();
    paths.sort();
    for path in paths {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let fail = |reason: String| ExerciseFailure {
            path: path.clone(),
            reason,
        };
        match std::fs::read(&path) {
            Err(e) => load.failures.push(fail(e.to_string())),
            Ok(bytes) => match String::from_utf8(bytes) {
                Err(e) => load.failures.push(fail(format!("not valid UTF-8: {e}"))),
                Ok(text) if text.trim().is_empty() => {
                    load.failures.push(fail("exercise text is empty".into()))
                }
                Ok(text) => load.exercises.push(ExerciseText {
                    exercise_id: id,
                    text,
                }),
            },
        }
    }
    Ok(load)
}

/// Write exercises as `<id>.txt` files.
pub fn write_exercises(dir: &Path, exercises: &[ExerciseText]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for e in exercises {
        std::fs::write(dir.join(format!("{}.txt", e.exercise_id)), &e.text)?;
    }
    Ok(())
}
