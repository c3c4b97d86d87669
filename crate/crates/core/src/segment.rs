//! Task display schedule and per-task signal windows.
//!
//! Task start times are not logged; they are reconstructed from the start of
//! the experiment and the fixed display time of each task kind, with a 10 s
//! fixation cross between experiment runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Session, TaskKind};
use crate::signal::SampledSignal;

/// Fixation period between consecutive experiment runs.
pub const FIXATION_SECONDS: f64 = 10.0;
/// Tolerance on answers arriving after the display timeout.
pub const TIMEOUT_SLACK_SECONDS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskWindow {
    pub task_id: String,
    pub kind: TaskKind,
    pub t_start: f64,
    pub t_end: f64,
}

impl TaskWindow {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule {
    /// Windows of answered tasks, in display order.
    pub windows: Vec<TaskWindow>,
    /// Scheduled start of every event, answered or not.
    pub starts: Vec<f64>,
    pub warnings: Vec<String>,
}

pub fn compute_task_windows(session: &Session) -> Result<Schedule> {
    let events = &session.events;
    for pair in events.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if (a.session_index, a.position_in_session) >= (b.session_index, b.position_in_session) {
            return Err(Error::Schedule(format!(
                "task {} (session {}, position {}) is not before task {} (session {}, position {})",
                a.task_id, a.session_index, a.position_in_session, b.task_id, b.session_index, b.position_in_session
            )));
        }
    }

    let mut starts = Vec::with_capacity(events.len());
    let mut t = session.t_start_experiment;
    for (i, e) in events.iter().enumerate() {
        if i > 0 {
            let prev = &events[i - 1];
            t += prev.kind.nominal_duration();
            t += FIXATION_SECONDS * (e.session_index - prev.session_index) as f64;
        }
        starts.push(t);
    }

    let mut schedule = Schedule {
        starts,
        ..Schedule::default()
    };
    for (i, e) in events.iter().enumerate() {
        let Some(t_answer) = e.t_answer.filter(|_| e.is_answered()) else {
            continue;
        };
        let t_start = schedule.starts[i];
        if t_answer <= t_start {
            schedule.warnings.push(format!(
                "task {}: answer at {t_answer} does not follow its scheduled start {t_start}; dropped",
                e.task_id
            ));
            continue;
        }
        // Windows never run past the timeout slack or into the next task.
        let mut limit = t_start + e.kind.nominal_duration() + TIMEOUT_SLACK_SECONDS;
        if let Some(next) = schedule.starts.get(i + 1) {
            limit = limit.min(*next);
        }
        let t_end = if t_answer > limit {
            schedule.warnings.push(format!(
                "task {}: answer {:.3} s after start exceeds the display time; window capped",
                e.task_id,
                t_answer - t_start
            ));
            limit
        } else {
            t_answer
        };
        schedule.windows.push(TaskWindow {
            task_id: e.task_id.clone(),
            kind: e.kind,
            t_start,
            t_end,
        });
    }
    Ok(schedule)
}

/// Samples with timestamps in `[t_start, t_end]`, both ends inclusive.
pub fn slice(signal: &SampledSignal, t_start: f64, t_end: f64) -> Result<SampledSignal> {
    let (lo, hi) = signal.index_range(t_start, t_end).ok_or(Error::EmptyWindow {
        start: t_start,
        end: t_end,
    })?;
    Ok(SampledSignal {
        kind: signal.kind,
        sample_rate: signal.sample_rate,
        start_time: signal.timestamp(lo),
        values: signal.values[lo..=hi].to_vec(),
    })
}

pub fn slice_window(signal: &SampledSignal, w: &TaskWindow) -> Result<SampledSignal> {
    slice(signal, w.t_start, w.t_end)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::ingest::{Answer, Participant, TaskEvent, TimeSpan};
    use crate::signal::ChannelKind;

    fn event(id: &str, kind: TaskKind, session: u32, pos: u32, t_answer: Option<f64>) -> TaskEvent {
        TaskEvent {
            task_id: id.into(),
            kind,
            session_index: session,
            position_in_session: pos,
            t_answer,
            answer: if t_answer.is_some() {
                Answer::Accept
            } else {
                Answer::None
            },
        }
    }

    fn session(events: Vec<TaskEvent>) -> Session {
        Session {
            participant: Participant {
                id: "p".into(),
                gpa: None,
                sex: None,
            },
            t_start_experiment: 1000.0,
            baseline: TimeSpan {
                start: 900.0,
                end: 990.0,
            },
            channels: BTreeMap::new(),
            events,
        }
    }

    #[test]
    fn single_session_schedule() {
        let s = session(vec![
            event("a", TaskKind::Prose, 1, 1, Some(1010.0)),
            event("b", TaskKind::Prose, 1, 2, Some(1050.0)),
            event("c", TaskKind::Code, 1, 3, Some(1100.0)),
        ]);
        let sch = compute_task_windows(&s).unwrap();
        assert_eq!(sch.starts, vec![1000.0, 1030.0, 1060.0]);
        assert_eq!(sch.windows.len(), 3);
        assert_eq!(sch.windows[2].t_end, 1100.0);
    }

    #[test]
    fn fixation_between_runs() {
        let s = session(vec![
            event("a", TaskKind::Prose, 1, 1, Some(1010.0)),
            event("b", TaskKind::Prose, 2, 1, Some(1050.0)),
            event("c", TaskKind::Code, 2, 2, Some(1100.0)),
        ]);
        let sch = compute_task_windows(&s).unwrap();
        assert_eq!(sch.starts, vec![1000.0, 1040.0, 1070.0]);
    }

    #[test]
    fn unanswered_and_early_answers_emit_nothing() {
        let s = session(vec![
            event("a", TaskKind::Prose, 1, 1, None),
            event("b", TaskKind::Prose, 1, 2, Some(1020.0)),
            event("c", TaskKind::Code, 1, 3, Some(1070.0)),
        ]);
        let sch = compute_task_windows(&s).unwrap();
        assert_eq!(sch.windows.len(), 1);
        assert_eq!(sch.windows[0].task_id, "c");
        assert_eq!(sch.warnings.len(), 1);
    }

    #[test]
    fn late_answer_is_capped() {
        let s = session(vec![
            event("a", TaskKind::Prose, 1, 1, Some(1045.0)),
            event("b", TaskKind::Code, 1, 2, Some(1200.0)),
        ]);
        let sch = compute_task_windows(&s).unwrap();
        assert_eq!(sch.windows[0].t_end, 1030.0);
        assert_eq!(sch.windows[1].t_end, 1030.0 + 60.5);
        assert_eq!(sch.warnings.len(), 2);
    }

    #[test]
    fn out_of_order_events_fail() {
        let s = session(vec![
            event("a", TaskKind::Prose, 2, 1, Some(1010.0)),
            event("b", TaskKind::Prose, 1, 2, Some(1050.0)),
        ]);
        assert!(matches!(compute_task_windows(&s), Err(Error::Schedule(_))));
    }

    #[test]
    fn slicing_bounds() {
        let sig = SampledSignal::new(ChannelKind::Eda, 4.0, 1000.0, vec![0.0; 400]).unwrap();
        let w = slice(&sig, 1010.0, 1040.0).unwrap();
        assert_eq!(w.len(), 121);
        assert_eq!(w.start_time, 1010.0);
        let w = slice(&sig, 1010.1, 1040.1).unwrap();
        assert_eq!(w.len(), 120);
        assert_eq!(slice(&sig, sig.start_time, sig.end_time()).unwrap(), sig);
        assert!(matches!(slice(&sig, 900.0, 950.0), Err(Error::EmptyWindow { .. })));
    }
}
