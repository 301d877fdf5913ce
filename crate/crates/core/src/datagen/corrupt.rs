//! Dropping and perturbing intermediate steps.

use super::rng::SplitMix64;
use crate::error::{Error, Result};
use crate::sample::{CotSample, Task};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionConfig {
    pub gamma: f64,
    pub seed: u64,
}

impl CorruptionConfig {
    pub fn new(gamma: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Invalid(format!("gamma {gamma} outside [0, 1]")));
        }
        Ok(CorruptionConfig { gamma, seed })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorruptionStats {
    pub steps: usize,
    pub dropped: usize,
    pub corrupted: usize,
}

impl CorruptionStats {
    pub fn omission_rate(&self) -> f64 {
        self.dropped as f64 / self.steps.max(1) as f64
    }

    /// Fraction of surviving steps that were altered.
    pub fn corruption_rate(&self) -> f64 {
        self.corrupted as f64 / (self.steps - self.dropped).max(1) as f64
    }

    pub fn merge(&mut self, o: CorruptionStats) {
        self.steps += o.steps;
        self.dropped += o.dropped;
        self.corrupted += o.corrupted;
    }
}

/// Steps strictly between problem and answer.
fn intermediate_count(s: &CotSample) -> usize {
    if s.task.answer_in_steps() {
        s.steps.len().saturating_sub(1)
    } else {
        s.steps.len()
    }
}

/// Each intermediate step is dropped with probability `gamma`; each
/// survivor, with probability `gamma`, gets one uniformly chosen token
/// replaced by a different token from `vocab`.
pub fn corrupt(sample: &CotSample, gamma: f64, rng: &mut SplitMix64, vocab: &[String]) -> (CotSample, CorruptionStats) {
    let k = intermediate_count(sample);
    let mut stats = CorruptionStats { steps: k, ..Default::default() };
    let mut steps = Vec::with_capacity(sample.steps.len());
    for (idx, step) in sample.steps.iter().enumerate() {
        if idx >= k {
            steps.push(step.clone());
            continue;
        }
        if rng.bernoulli(gamma) {
            stats.dropped += 1;
            continue;
        }
        let mut step = step.clone();
        if rng.bernoulli(gamma) && !step.is_empty() {
            let pos = rng.index(step.len());
            let choices: Vec<&String> = vocab.iter().filter(|v| **v != step[pos]).collect();
            if !choices.is_empty() {
                step[pos] = (*rng.choose(&choices)).clone();
                stats.corrupted += 1;
            }
        }
        steps.push(step);
    }
    (CotSample { steps, ..sample.clone() }, stats)
}

/// Token alphabet of a task, used for replacement draws.
pub fn task_vocab(task: Task, p: u64, size: usize) -> Vec<String> {
    let mut v: Vec<String> = Vec::new();
    match task {
        Task::Arithmetic => {
            v.extend((0..p).map(|x| x.to_string()));
            v.extend(["+", "−", "×", "÷", "(", ")"].map(String::from));
        }
        Task::Equation => {
            v.extend((0..p).map(|x| x.to_string()));
            v.extend((1..=size).map(|k| format!("x{k}")));
            v.extend(["+", "=", ","].map(String::from));
        }
        Task::Lis => {
            v.extend((1..=size).map(|x| x.to_string()));
            v.extend((super::generators::LIS_LO..=super::generators::LIS_HI).map(|x| x.to_string()));
        }
        Task::Ed => {
            // Row values never exceed 2 * (n1 + n2) with the dataset costs.
            v.extend((0..=4 * (size + 2)).map(|x| x.to_string()));
        }
        Task::Cfg => {
            v.extend(["0", "1"].map(String::from));
        }
    }
    v
}
