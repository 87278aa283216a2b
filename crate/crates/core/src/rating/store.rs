//! Append-only rating log with an in-memory index rebuilt on open.

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use super::RatingError;
use crate::subjective::RatingEvent;

/// Durable, duplicate-free list of [`RatingEvent`]s.
///
/// Each append is written as one JSON line and synced before it is
/// acknowledged. A torn final line left by a crash is dropped on reopen.
#[derive(Debug)]
pub struct RatingStore {
    path: PathBuf,
    file: File,
    events: Vec<RatingEvent>,
    rated: HashMap<String, HashSet<String>>,
}

impl RatingStore {
    pub fn open(path: &Path) -> Result<Self, RatingError> {
        let io = |e: std::io::Error| RatingError::Store(format!("{}: {e}", path.display()));
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(path)
            .map_err(io)?;

        let mut events = Vec::new();
        let mut rated: HashMap<String, HashSet<String>> = HashMap::new();
        let mut valid_len = 0u64;
        let mut reader = BufReader::new(&file);
        let mut line = String::new();
        let mut line_no = 0;
        loop {
            line.clear();
            let n = reader.read_line(&mut line).map_err(io)?;
            if n == 0 {
                break;
            }
            line_no += 1;
            let complete = line.ends_with('\n');
            if line.trim().is_empty() {
                valid_len += n as u64;
                continue;
            }
            match serde_json::from_str::<RatingEvent>(line.trim_end()) {
                Ok(ev) => {
                    if !rated.entry(ev.evaluator_id.clone()).or_default().insert(ev.image_id.clone()) {
                        return Err(RatingError::Store(format!(
                            "{} line {line_no}: duplicate rating of `{}` by `{}`",
                            path.display(),
                            ev.image_id,
                            ev.evaluator_id
                        )));
                    }
                    events.push(ev);
                    valid_len += n as u64;
                }
                Err(_) if !complete => break,
                Err(e) => {
                    return Err(RatingError::Store(format!("{} line {line_no}: {e}", path.display())));
                }
            }
        }
        drop(reader);
        if file.metadata().map_err(io)?.len() != valid_len {
            file.set_len(valid_len).map_err(io)?;
            file.seek(SeekFrom::End(0)).map_err(io)?;
        }
        Ok(Self {
            path: path.to_path_buf(),
            file,
            events,
            rated,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn events(&self) -> &[RatingEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn contains(&self, evaluator_id: &str, image_id: &str) -> bool {
        self.rated.get(evaluator_id).is_some_and(|s| s.contains(image_id))
    }

    pub fn rated_by(&self, evaluator_id: &str) -> Option<&HashSet<String>> {
        self.rated.get(evaluator_id)
    }

    /// Writes and syncs `event`; returns only once it is on disk.
    pub fn append(&mut self, event: RatingEvent) -> Result<(), RatingError> {
        if self.contains(&event.evaluator_id, &event.image_id) {
            return Err(RatingError::Duplicate {
                evaluator_id: event.evaluator_id,
                image_id: event.image_id,
            });
        }
        let mut line = serde_json::to_vec(&event).map_err(|e| RatingError::Store(e.to_string()))?;
        line.push(b'\n');
        let io = |e: std::io::Error| RatingError::Store(format!("{}: {e}", self.path.display()));
        self.file.write_all(&line).map_err(io)?;
        self.file.sync_data().map_err(io)?;
        self.rated
            .entry(event.evaluator_id.clone())
            .or_default()
            .insert(event.image_id.clone());
        self.events.push(event);
        Ok(())
    }
}

/// Reads a store file without opening it for writing.
pub fn read_events(path: &Path) -> Result<Vec<RatingEvent>, RatingError> {
    let file = File::open(path).map_err(|e| RatingError::Store(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| RatingError::Store(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| RatingError::Store(format!("{} line {}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}
