//! On-disk session format: one directory per participant holding a
//! `manifest.json` and one headerized CSV per recorded channel.
//!
//! Channel files are UTF-8 text. Line 1 is the start time (epoch seconds),
//! line 2 the sample rate in Hz, and every following line one sample.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ChannelKind, SampledSignal};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gpa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sex: Option<String>,
}

/// Task label. `Code` is the positive class throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TaskKind {
    Code,
    Prose,
}

impl TaskKind {
    /// Display time before the task times out, in seconds.
    pub fn nominal_duration(self) -> f64 {
        match self {
            TaskKind::Code => 60.0,
            TaskKind::Prose => 30.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Code => "CODE",
            TaskKind::Prose => "PROSE",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Answer {
    Accept,
    Reject,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEvent {
    pub task_id: String,
    pub kind: TaskKind,
    pub session_index: u32,
    pub position_in_session: u32,
    pub t_answer: Option<f64>,
    pub answer: Answer,
}

impl TaskEvent {
    pub fn is_answered(&self) -> bool {
        self.answer != Answer::None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpan {
    pub start: f64,
    pub end: f64,
}

/// One participant's full recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub participant: Participant,
    pub t_start_experiment: f64,
    /// Calibration video; its last 30 s form the baseline.
    pub baseline: TimeSpan,
    pub channels: BTreeMap<ChannelKind, SampledSignal>,
    /// Sorted by `(session_index, position_in_session)`.
    pub events: Vec<TaskEvent>,
}

impl Session {
    pub fn baseline_end(&self) -> f64 {
        self.baseline.end
    }

    /// Number of experiment runs (the largest session index).
    pub fn sessions(&self) -> u32 {
        self.events.iter().map(|e| e.session_index).max().unwrap_or(0)
    }

    pub fn channel(&self, kind: ChannelKind) -> Result<&SampledSignal> {
        self.channels.get(&kind).ok_or_else(|| Error::MissingChannel {
            session: self.participant.id.clone(),
            kind,
            detail: "not recorded".into(),
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    participant: Participant,
    t_start_experiment: f64,
    baseline: TimeSpan,
    events: Vec<TaskEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    channels: Option<Vec<ChannelKind>>,
}

fn parse_line(path: &Path, line_no: usize, text: Option<&str>, what: &str) -> Result<f64> {
    let text = text.ok_or_else(|| Error::Format {
        path: path.to_path_buf(),
        line: line_no,
        message: format!("missing {what}"),
    })?;
    let value: f64 = text.trim().parse().map_err(|_| Error::Format {
        path: path.to_path_buf(),
        line: line_no,
        message: format!("{what} `{}` is not a number", text.trim()),
    })?;
    if !value.is_finite() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            line: line_no,
            message: format!("{what} is not finite"),
        });
    }
    Ok(value)
}

/// Reads one channel file.
pub fn load_channel(path: &Path, kind: ChannelKind) -> Result<SampledSignal> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_channel(path, &text, kind)
}

fn parse_channel(path: &Path, text: &str, kind: ChannelKind) -> Result<SampledSignal> {
    let mut lines = text.lines();
    let start_time = parse_line(path, 1, lines.next(), "start time")?;
    let sample_rate = parse_line(path, 2, lines.next(), "sample rate")?;
    if sample_rate <= 0.0 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            line: 2,
            message: format!("sample rate must be positive, got {sample_rate}"),
        });
    }
    let mut body: Vec<&str> = lines.collect();
    while body.last().is_some_and(|l| l.trim().is_empty()) {
        body.pop();
    }
    let values = body
        .iter()
        .enumerate()
        .map(|(i, l)| parse_line(path, i + 3, Some(l), "sample"))
        .collect::<Result<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(Error::EmptyChannel(path.to_path_buf()));
    }
    Ok(SampledSignal {
        kind,
        sample_rate,
        start_time,
        values,
    })
}

/// Writes a channel file that [`load_channel`] reads back bit-exactly.
pub fn write_channel(path: &Path, signal: &SampledSignal) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        writeln!(out, "{}", signal.start_time)?;
        writeln!(out, "{}", signal.sample_rate)?;
        for v in &signal.values {
            writeln!(out, "{v}")?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

fn manifest_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn check_events(path: &Path, events: &mut [TaskEvent]) -> Result<()> {
    let mut ids = BTreeSet::new();
    for e in events.iter() {
        if e.session_index < 1 || e.position_in_session < 1 {
            return Err(manifest_error(
                path,
                format!("task {}: session_index and position_in_session start at 1", e.task_id),
            ));
        }
        if (e.answer == Answer::None) != e.t_answer.is_none() {
            return Err(manifest_error(
                path,
                format!("task {}: answer NONE must coincide with a null t_answer", e.task_id),
            ));
        }
        if e.t_answer.is_some_and(|t| !t.is_finite()) {
            return Err(manifest_error(
                path,
                format!("task {}: t_answer is not finite", e.task_id),
            ));
        }
        if !ids.insert(e.task_id.clone()) {
            return Err(manifest_error(path, format!("duplicate task_id `{}`", e.task_id)));
        }
    }
    events.sort_by_key(|e| (e.session_index, e.position_in_session));
    for pair in events.windows(2) {
        if (pair[0].session_index, pair[0].position_in_session) == (pair[1].session_index, pair[1].position_in_session)
        {
            return Err(manifest_error(
                path,
                format!(
                    "tasks {} and {} share session {} position {}",
                    pair[0].task_id, pair[1].task_id, pair[0].session_index, pair[0].position_in_session
                ),
            ));
        }
    }
    Ok(())
}

/// Loads a session directory. Channels listed in the manifest must exist;
/// without a `channels` key every standard channel file present is loaded.
pub fn load_session(dir: &Path) -> Result<Session> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = read_manifest(&manifest_path)?;

    let listed = manifest.channels.clone();
    let kinds: Vec<ChannelKind> = match &listed {
        Some(list) => list.clone(),
        None => ChannelKind::ALL
            .into_iter()
            .filter(|k| dir.join(k.file_name()).is_file())
            .collect(),
    };
    let mut channels = BTreeMap::new();
    for kind in kinds {
        let path = dir.join(kind.file_name());
        if !path.is_file() {
            return Err(Error::MissingChannel {
                session: manifest.participant.id.clone(),
                kind,
                detail: format!("{} not found", path.display()),
            });
        }
        let signal = load_channel(&path, kind)?;
        if (signal.sample_rate - kind.nominal_rate()).abs() > 1e-9 {
            log::warn!(
                "{}: sample rate {} Hz differs from the nominal {} Hz",
                path.display(),
                signal.sample_rate,
                kind.nominal_rate()
            );
        }
        channels.insert(kind, signal);
    }

    let session = Session {
        participant: manifest.participant,
        t_start_experiment: manifest.t_start_experiment,
        baseline: manifest.baseline,
        channels,
        events: manifest.events,
    };
    check_session_times(&manifest_path, &session)?;
    Ok(session)
}

fn read_manifest(path: &Path) -> Result<Manifest> {
    if !path.is_file() {
        return Err(manifest_error(path, "manifest not found"));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut manifest: Manifest = serde_json::from_str(&text).map_err(|e| manifest_error(path, e.to_string()))?;
    check_events(path, &mut manifest.events)?;
    Ok(manifest)
}

/// Participant records of every session under `root`, read from the
/// manifests alone.
pub fn load_participants(root: &Path) -> Result<Vec<Participant>> {
    session_dirs(root)?
        .iter()
        .map(|d| Ok(read_manifest(&d.join(MANIFEST_FILE))?.participant))
        .collect()
}

fn check_session_times(path: &Path, s: &Session) -> Result<()> {
    if !(s.t_start_experiment.is_finite() && s.baseline.start.is_finite() && s.baseline.end.is_finite()) {
        return Err(manifest_error(path, "timestamps must be finite"));
    }
    if s.baseline.start > s.baseline.end {
        return Err(manifest_error(path, "baseline.start is after baseline.end"));
    }
    if s.t_start_experiment < s.baseline.end {
        return Err(manifest_error(
            path,
            "t_start_experiment precedes the end of the baseline",
        ));
    }
    let earliest = s.channels.values().map(|c| c.start_time).fold(f64::INFINITY, f64::min);
    if earliest.is_finite() && s.baseline.end < earliest {
        return Err(manifest_error(
            path,
            "baseline ends before any channel starts recording",
        ));
    }
    Ok(())
}

/// Writes `session` in the directory layout [`load_session`] expects.
pub fn write_session(dir: &Path, session: &Session) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for signal in session.channels.values() {
        write_channel(&dir.join(signal.kind.file_name()), signal)?;
    }
    let manifest = Manifest {
        participant: session.participant.clone(),
        t_start_experiment: session.t_start_experiment,
        baseline: session.baseline,
        events: session.events.clone(),
        channels: Some(session.channels.keys().copied().collect()),
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

/// Session directories under `root`, sorted by name.
pub fn session_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        if entry.path().is_dir() {
            dirs.push(entry.path());
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Loads every session under `root`.
pub fn load_corpus(root: &Path) -> Result<Vec<Session>> {
    let sessions = session_dirs(root)?
        .par_iter()
        .map(|d| load_session(d))
        .collect::<Result<Vec<_>>>()?;
    let mut ids = BTreeSet::new();
    for s in &sessions {
        if !ids.insert(s.participant.id.clone()) {
            return Err(manifest_error(
                root,
                format!("duplicate participant id `{}`", s.participant.id),
            ));
        }
    }
    Ok(sessions)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub dir: PathBuf,
    pub participant_id: Option<String>,
    pub channels: Vec<ChannelKind>,
    pub events: usize,
    pub answered: usize,
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub root: PathBuf,
    pub sessions: Vec<SessionReport>,
    /// Corpus-level problems (unreadable root, no sessions, duplicate ids).
    pub errors: Vec<String>,
}

impl ValidationReport {
    /// Every session loads cleanly and the corpus-level checks pass, which
    /// is what [`load_corpus`] requires.
    pub fn analyzable(&self) -> bool {
        !self.sessions.is_empty() && self.error_count() == 0
    }

    pub fn error_count(&self) -> usize {
        self.errors.len() + self.sessions.iter().map(|s| s.errors.len()).sum::<usize>()
    }
}

fn validate_session(dir: &Path) -> SessionReport {
    let mut report = SessionReport {
        dir: dir.to_path_buf(),
        ..SessionReport::default()
    };
    let session = match load_session(dir) {
        Ok(s) => s,
        Err(e) => {
            report.errors.push(e.to_string());
            return report;
        }
    };
    report.participant_id = Some(session.participant.id.clone());
    report.channels = session.channels.keys().copied().collect();
    report.events = session.events.len();
    report.answered = session.events.iter().filter(|e| e.is_answered()).count();

    for kind in ChannelKind::ALL {
        match session.channels.get(&kind) {
            None => report.warnings.push(format!("{kind} channel absent")),
            Some(c) if (c.sample_rate - kind.nominal_rate()).abs() > 1e-9 => report.warnings.push(format!(
                "{kind} sampled at {} Hz, nominal {} Hz",
                c.sample_rate,
                kind.nominal_rate()
            )),
            Some(_) => {}
        }
    }
    let unanswered = report.events - report.answered;
    if report.answered == 0 {
        report
            .warnings
            .push("no usable windows: every task is unanswered".into());
    } else if unanswered > 0 {
        report.warnings.push(format!("{unanswered} unanswered task(s)"));
    }

    let baseline_start = session.baseline.end - crate::preprocess::BASELINE_SECONDS;
    let last_answer = session
        .events
        .iter()
        .filter_map(|e| e.t_answer)
        .fold(f64::NEG_INFINITY, f64::max);
    for c in session.channels.values() {
        let tol = 1.0 / c.sample_rate;
        if c.start_time > baseline_start + tol {
            report.errors.push(format!(
                "{} starts at {} after the baseline window begins ({baseline_start})",
                c.kind, c.start_time
            ));
        }
        if last_answer.is_finite() && c.end_time() + tol < last_answer {
            report.warnings.push(format!(
                "{} ends at {} before the last answer ({last_answer})",
                c.kind,
                c.end_time()
            ));
        }
    }
    report
}

/// Checks every session under `root`. Problems are report content, never
/// an `Err`.
pub fn validate_corpus(root: &Path) -> ValidationReport {
    let mut report = ValidationReport {
        root: root.to_path_buf(),
        ..ValidationReport::default()
    };
    let dirs = match session_dirs(root) {
        Ok(d) => d,
        Err(e) => {
            report.errors.push(e.to_string());
            return report;
        }
    };
    if dirs.is_empty() {
        report.errors.push("no sessions".into());
        return report;
    }
    report.sessions = dirs.iter().map(|d| validate_session(d)).collect();
    let mut seen = BTreeMap::new();
    for s in &report.sessions {
        if let Some(id) = &s.participant_id {
            *seen.entry(id.clone()).or_insert(0usize) += 1;
        }
    }
    for (id, n) in seen {
        if n > 1 {
            report
                .errors
                .push(format!("participant id `{id}` used by {n} sessions"));
        }
    }
    report
}
