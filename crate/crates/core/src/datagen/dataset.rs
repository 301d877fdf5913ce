//! Seeded, sharded dataset construction with train/test dedup.

use super::generators::{gen_arithmetic, gen_cfg, gen_ed, gen_equation, gen_lis};
use super::rng::{derive, SplitMix64};
use crate::dp::cfg::cfg_sample;
use crate::dp::ed::{ed_sample, EdCosts};
use crate::dp::lis::lis_sample;
use crate::error::{Error, Result};
use crate::field::is_prime;
use crate::sample::{CotSample, Task};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashSet;
use std::path::Path;

pub const EOS: &str = "<eos>";

/// Nonterminal and rule budgets for random grammars.
pub const CFG_NONTERMINALS: usize = 3;
pub const CFG_RULES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Cot,
    Direct,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Format> {
        match s {
            "cot" => Ok(Format::Cot),
            "direct" => Ok(Format::Direct),
            _ => Err(Error::Invalid(format!("unknown format {s:?}"))),
        }
    }
}

/// `size` is the operator count, variable count, sequence length, string
/// length or word length depending on the task. `p` is ignored by the DP
/// tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    pub p: u64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub task: Task,
    pub params: GenParams,
    pub train: usize,
    pub test: usize,
    pub seed: u64,
    pub format: Format,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let GenParams { p, size } = self.params;
        let bad = |m: &str| Err(Error::Invalid(m.to_string()));
        match self.task {
            Task::Arithmetic | Task::Equation if !is_prime(p) => Err(Error::NotPrime(p)),
            Task::Equation if size == 0 => bad("equation needs at least one variable"),
            Task::Lis if !(3..=150).contains(&size) => bad("lis length must be in 3..=150"),
            Task::Ed if size < 3 => bad("ed string length must be at least 3"),
            Task::Cfg if size > 12 => bad("cfg word length above 12 is not supported"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub task: Task,
    pub params: GenParams,
    pub problem_tokens: Vec<String>,
    pub step_tokens: Vec<Vec<String>>,
    pub answer_tokens: Vec<String>,
    pub seed: u64,
}

impl Record {
    pub fn sample(&self) -> CotSample {
        CotSample {
            task: self.task,
            problem: self.problem_tokens.clone(),
            steps: self.step_tokens.clone(),
            answer: self.answer_tokens.clone(),
        }
    }

    /// One plain-text line without the trailing newline.
    pub fn line(&self, format: Format) -> String {
        let s = self.sample();
        let body = match format {
            Format::Cot => s.to_text(),
            Format::Direct => s.to_direct_text(),
        };
        format!("{body} {EOS}")
    }

    pub fn problem_hash(&self) -> [u8; 32] {
        Sha256::digest(self.problem_tokens.join(" ").as_bytes()).into()
    }
}

/// The sample at position `index` of the candidate stream.
pub fn generate_one(task: Task, params: GenParams, seed: u64, index: u64) -> Result<Record> {
    let s = derive(seed, index);
    let mut rng = SplitMix64::new(s);
    let GenParams { p, size } = params;
    let sample = match task {
        Task::Arithmetic => gen_arithmetic(&mut rng, size, p).0.trace()?,
        Task::Equation => gen_equation(&mut rng, size, p).trace()?,
        Task::Lis => lis_sample(&gen_lis(&mut rng, size).0),
        Task::Ed => {
            let e = gen_ed(&mut rng, size);
            ed_sample(&e.s1, &e.s2, EdCosts::EXPERIMENT)
        }
        Task::Cfg => {
            let g = gen_cfg(&mut rng, CFG_NONTERMINALS, CFG_RULES);
            let word: Vec<char> = (0..size).map(|_| *rng.choose(&g.terminals)).collect();
            cfg_sample(&g, &word)?
        }
    };
    Ok(Record {
        task,
        params,
        problem_tokens: sample.problem,
        step_tokens: sample.steps,
        answer_tokens: sample.answer,
        seed: s,
    })
}

/// Candidates `start..end`, generated on `shards` threads over contiguous
/// index ranges and concatenated in index order.
pub fn generate_range(task: Task, params: GenParams, seed: u64, start: u64, end: u64, shards: usize) -> Result<Vec<Record>> {
    let total = end.saturating_sub(start);
    let shards = shards.max(1) as u64;
    let chunk = total.div_ceil(shards).max(1);
    let parts: Vec<Result<Vec<Record>>> = std::thread::scope(|sc| {
        let handles: Vec<_> = (0..shards)
            .map(|k| {
                let lo = (start + k * chunk).min(end);
                let hi = (lo + chunk).min(end);
                sc.spawn(move || (lo..hi).map(|i| generate_one(task, params, seed, i)).collect())
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("generator thread panicked")).collect()
    });
    let mut out = Vec::with_capacity(total as usize);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub train: Vec<Record>,
    pub test: Vec<Record>,
    /// Test candidates rejected because their problem was already used.
    pub duplicates: usize,
}

/// Train takes candidates `0..train` as they come. Test then scans the
/// following candidates and keeps those whose problem appears in neither
/// train nor the test set so far.
pub fn build_dataset(cfg: &GenConfig, shards: usize) -> Result<Dataset> {
    cfg.validate()?;
    let train = generate_range(cfg.task, cfg.params, cfg.seed, 0, cfg.train as u64, shards)?;
    let mut seen: HashSet<[u8; 32]> = train.iter().map(Record::problem_hash).collect();
    let mut test = Vec::with_capacity(cfg.test);
    let mut next = cfg.train as u64;
    let mut duplicates = 0;
    let budget = cfg.train as u64 + 100 * cfg.test as u64 + 1000;
    while test.len() < cfg.test {
        if next >= budget {
            return Err(Error::Invalid(format!(
                "only {} unique test problems found in {} candidates",
                test.len(),
                budget - cfg.train as u64
            )));
        }
        let want = ((cfg.test - test.len()) as u64 * 5 / 4 + 16).min(budget - next);
        for r in generate_range(cfg.task, cfg.params, cfg.seed, next, next + want, shards)? {
            if test.len() == cfg.test {
                break;
            }
            next += 1;
            if seen.insert(r.problem_hash()) {
                test.push(r);
            } else {
                duplicates += 1;
            }
        }
    }
    Ok(Dataset { train, test, duplicates })
}

pub fn lines(records: &[Record], format: Format) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.line(format));
        out.push('\n');
    }
    out
}

pub fn jsonl(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: GenConfig,
    pub train_count: usize,
    pub test_count: usize,
    pub duplicates_skipped: usize,
    /// File name to sha256 of its contents.
    pub files: Vec<(String, String)>,
}

/// Writes `train.txt`, `test.txt`, `train.jsonl`, `test.jsonl` and
/// `manifest.json` into `dir`.
pub fn write_dataset(cfg: &GenConfig, data: &Dataset, dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let files = [
        ("train.txt", lines(&data.train, cfg.format)),
        ("test.txt", lines(&data.test, cfg.format)),
        ("train.jsonl", jsonl(&data.train)),
        ("test.jsonl", jsonl(&data.test)),
    ];
    let mut hashes = Vec::new();
    for (name, body) in &files {
        std::fs::write(dir.join(name), body)?;
        hashes.push((name.to_string(), sha256_hex(body.as_bytes())));
    }
    let manifest = Manifest {
        config: cfg.clone(),
        train_count: data.train.len(),
        test_count: data.test.len(),
        duplicates_skipped: data.duplicates,
        files: hashes,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(task: Task, size: usize) -> GenConfig {
        GenConfig { task, params: GenParams { p: 11, size }, train: 40, test: 10, seed: 7, format: Format::Cot }
    }

    #[test]
    fn shards_match_and_splits_are_disjoint() {
        for (task, size) in [(Task::Arithmetic, 3), (Task::Equation, 2), (Task::Lis, 8), (Task::Ed, 5), (Task::Cfg, 3)] {
            let c = cfg(task, size);
            let a = build_dataset(&c, 1).unwrap();
            let b = build_dataset(&c, 4).unwrap();
            assert_eq!(a, b);
            let train: HashSet<_> = a.train.iter().map(Record::problem_hash).collect();
            assert!(a.test.iter().all(|r| !train.contains(&r.problem_hash())));
        }
    }

    #[test]
    fn formats() {
        let c = cfg(Task::Arithmetic, 2);
        let r = generate_one(c.task, c.params, c.seed, 0).unwrap();
        let cot = r.line(Format::Cot);
        let direct = r.line(Format::Direct);
        assert!(cot.ends_with(" <eos>") && direct.ends_with(" <eos>"));
        assert_eq!(direct.matches(" = ").count(), 1);
        assert!(cot.matches(" = ").count() >= 2);
    }

    #[test]
    fn exhausted_space_is_an_error() {
        let mut c = cfg(Task::Arithmetic, 0);
        c.test = 20;
        assert!(build_dataset(&c, 1).is_err());
    }
}
