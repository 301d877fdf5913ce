//! Chain-of-thought samples shared by every task.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Arithmetic,
    Equation,
    Lis,
    Ed,
    Cfg,
}

impl Task {
    /// Token that separates the problem from each step in serialized text.
    pub fn separator(self) -> &'static str {
        match self {
            Task::Arithmetic => "=",
            _ => "[SEP]",
        }
    }

    /// Arithmetic and equation traces end with the answer as their last
    /// step; DP traces print the answer as a separate final block.
    pub fn answer_in_steps(self) -> bool {
        matches!(self, Task::Arithmetic | Task::Equation)
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Arithmetic => "arithmetic",
            Task::Equation => "equation",
            Task::Lis => "lis",
            Task::Ed => "ed",
            Task::Cfg => "cfg",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Task> {
        Ok(match s {
            "arithmetic" | "arith" => Task::Arithmetic,
            "equation" | "eq" => Task::Equation,
            "lis" => Task::Lis,
            "ed" => Task::Ed,
            "cfg" => Task::Cfg,
            _ => return Err(Error::Invalid(format!("unknown task {s:?}"))),
        })
    }
}

/// A problem, its intermediate states and its answer, as token strings.
///
/// For arithmetic and equations the last step equals the answer; a problem
/// that is already solved has no steps.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CotSample {
    pub task: Task,
    pub problem: Vec<String>,
    pub steps: Vec<Vec<String>>,
    pub answer: Vec<String>,
}

impl CotSample {
    fn blocks(&self) -> Vec<&Vec<String>> {
        let mut blocks: Vec<&Vec<String>> = self.steps.iter().collect();
        if !self.task.answer_in_steps() || self.steps.is_empty() {
            blocks.push(&self.answer);
        }
        blocks
    }

    /// Space-separated text: problem, then each step, joined by the task
    /// separator. The answer block is appended unless it already closes the
    /// step list.
    pub fn to_text(&self) -> String {
        let sep = format!(" {} ", self.task.separator());
        let mut out = vec![self.problem.join(" ")];
        out.extend(self.blocks().iter().map(|b| b.join(" ")));
        out.join(&sep)
    }

    /// Problem and answer only.
    pub fn to_direct_text(&self) -> String {
        format!("{} {} {}", self.problem.join(" "), self.task.separator(), self.answer.join(" "))
    }

    /// Inverse of [`to_text`](Self::to_text). `zero_step` tells whether the
    /// problem needs no steps (e.g. a lone numeral).
    pub fn from_text(task: Task, text: &str, zero_step: bool) -> Result<CotSample> {
        let sep = task.separator();
        let mut blocks: Vec<Vec<String>> = vec![Vec::new()];
        for tok in text.split_whitespace() {
            if tok == sep {
                blocks.push(Vec::new());
            } else {
                blocks.last_mut().unwrap().push(tok.to_string());
            }
        }
        if blocks.len() < 2 || blocks.iter().any(|b| b.is_empty()) {
            return Err(Error::Parse { pos: 0, msg: "expected problem and answer blocks".into() });
        }
        let problem = blocks.remove(0);
        let answer = blocks.last().unwrap().clone();
        let steps = if zero_step {
            Vec::new()
        } else if task.answer_in_steps() {
            blocks
        } else {
            blocks[..blocks.len() - 1].to_vec()
        };
        Ok(CotSample { task, problem, steps, answer })
    }

    /// The full token stream a model sees: problem, separator, steps.
    pub fn sequence_tokens(&self) -> Vec<String> {
        let mut out = self.problem.clone();
        for b in self.blocks() {
            out.push(self.task.separator().to_string());
            out.extend(b.iter().cloned());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let s = CotSample {
            task: Task::Equation,
            problem: vec!["5".into(), "x1".into(), "=".into(), "3".into(), ",".into()],
            steps: vec![vec!["x1".into(), "=".into(), "5".into(), ",".into()]],
            answer: vec!["x1".into(), "=".into(), "5".into(), ",".into()],
        };
        let t = s.to_text();
        assert_eq!(t, "5 x1 = 3 , [SEP] x1 = 5 ,");
        assert_eq!(CotSample::from_text(Task::Equation, &t, false).unwrap(), s);
        assert_eq!("lis".parse::<Task>().unwrap(), Task::Lis);
    }
}
