use serde::{Deserialize, Serialize};

use super::{AlgorithmOutcome, Termination};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::user::{ExplorativeUser, Response, Verdict};

/// One line of a transcript: `{"t": 1, "arm": 0, "decision": "A"}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub t: u64,
    pub arm: usize,
    pub decision: Verdict,
}

/// The binary interaction history, as the system sees it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn push(&mut self, entry: TranscriptEntry) {
        debug_assert!(self.entries.last().is_none_or(|e| e.t + 1 == entry.t));
        self.entries.push(entry);
    }

    /// The shortest prefix containing `n` acceptances (or everything).
    pub fn prefix_with_acceptances(&self, n: u64) -> &[TranscriptEntry] {
        let mut seen = 0;
        for (i, e) in self.entries.iter().enumerate() {
            if e.decision.is_accept() {
                seen += 1;
                if seen == n {
                    return &self.entries[..=i];
                }
            }
        }
        &self.entries
    }

    pub fn to_json_lines(&self) -> String {
        let mut out = String::with_capacity(self.entries.len() * 32);
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("plain struct"));
            out.push('\n');
        }
        out
    }

    pub fn from_json_lines(text: &str) -> Result<Self> {
        let mut transcript = Transcript::default();
        for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let entry: TranscriptEntry = serde_json::from_str(line)
                .map_err(|e| Error::InvalidParameter(format!("transcript line {}: {e}", i + 1)))?;
            let expected = transcript.entries.last().map_or(entry.t, |l| l.t + 1);
            if entry.t != expected {
                return Err(Error::InvalidParameter(format!(
                    "transcript line {}: step {} does not follow {}",
                    i + 1,
                    entry.t,
                    expected - 1
                )));
            }
            transcript.entries.push(entry);
        }
        Ok(transcript)
    }
}

/// Counters captured when a policy starts, so that it can report only its
/// own share of a session that may have run something else before.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mark {
    steps: u64,
    rejections: u64,
    accepts: Vec<u64>,
}

/// The three-party loop: system picks, user decides, environment pays.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    env: Environment,
    user: ExplorativeUser,
    transcript: Option<Transcript>,
    accepts: Vec<u64>,
    rejects: Vec<u64>,
    steps: u64,
}

impl Session {
    pub fn new(env: Environment, user: ExplorativeUser) -> Result<Self> {
        let k = env.num_arms();
        if user.state().num_arms() != k {
            return Err(Error::ArmCountMismatch {
                cell: user.state().num_arms(),
                instance: k,
            });
        }
        Ok(Self {
            env,
            user,
            transcript: Some(Transcript::default()),
            accepts: vec![0; k],
            rejects: vec![0; k],
            steps: 0,
        })
    }

    /// Stops recording the transcript.
    pub fn without_transcript(mut self) -> Self {
        self.transcript = None;
        self
    }

    pub fn num_arms(&self) -> usize {
        self.accepts.len()
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn user(&self) -> &ExplorativeUser {
        &self.user
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn acceptances(&self) -> u64 {
        self.steps - self.rejections()
    }

    pub fn rejections(&self) -> u64 {
        self.rejects.iter().sum()
    }

    pub fn accepts(&self) -> &[u64] {
        &self.accepts
    }

    pub fn rejects(&self) -> &[u64] {
        &self.rejects
    }

    pub fn transcript(&self) -> Option<&Transcript> {
        self.transcript.as_ref()
    }

    pub fn into_transcript(self) -> Option<Transcript> {
        self.transcript
    }

    /// Recommends `arm` and returns the user's response.
    pub fn interact(&mut self, arm: usize) -> Result<Response> {
        let response = self.user.respond(arm, &mut self.env)?;
        self.steps += 1;
        match response.verdict {
            Verdict::Accept => self.accepts[arm] += 1,
            Verdict::Reject => self.rejects[arm] += 1,
        }
        if let Some(t) = self.transcript.as_mut() {
            t.push(TranscriptEntry {
                t: self.steps,
                arm,
                decision: response.verdict,
            });
        }
        Ok(response)
    }

    pub fn mark(&self) -> Mark {
        Mark {
            steps: self.steps,
            rejections: self.rejections(),
            accepts: self.accepts.clone(),
        }
    }

    pub fn accepts_since(&self, mark: &Mark) -> Vec<u64> {
        self.accepts
            .iter()
            .zip(&mark.accepts)
            .map(|(now, then)| now - then)
            .collect()
    }

    pub fn steps_since(&self, mark: &Mark) -> u64 {
        self.steps - mark.steps
    }

    pub fn outcome_since(
        &self,
        mark: &Mark,
        chosen_arm: usize,
        termination: Termination,
        phase_boundary: Option<u64>,
    ) -> AlgorithmOutcome {
        AlgorithmOutcome {
            chosen_arm,
            total_steps: self.steps - mark.steps,
            total_rejections: self.rejections() - mark.rejections,
            per_arm_accepts: self.accepts_since(mark),
            termination,
            phase_boundary,
        }
    }
}
