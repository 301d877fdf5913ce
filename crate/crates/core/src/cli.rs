//! The `cotlab` command line. [`run`] returns the process exit code:
//! 0 on success, 1 on a usage or validation error, 2 when a verification
//! finds mismatches.

use crate::arith::Expr;
use crate::constructed::arithmetic::{arithmetic_reference, build_arithmetic_model};
use crate::constructed::equation::{build_equation_model, equation_reference};
use crate::constructed::verify::{arithmetic_instances, equation_instances, verify, VerifyReport};
use crate::constructed::ModelSpec;
use crate::datagen::corrupt::{corrupt, CorruptionConfig, CorruptionStats};
use crate::datagen::dataset::{build_dataset, generate_range, lines, write_dataset, Format, GenConfig, GenParams, EOS};
use crate::datagen::reduce::{reduce_automaton, reduce_boolean, Automaton, Formula};
use crate::datagen::rng::{derive, SplitMix64};
use crate::dp::cfg::{cfg_sample, Cfg};
use crate::dp::ed::{ed_sample, EdCosts};
use crate::dp::lis::lis_sample;
use crate::equation::{solve_direct, LinearSystem};
use crate::error::{Error, Result};
use crate::nn::bundle::write_bundle;
use crate::nn::certify::{certify_all, LemmaConfig};
use crate::sample::{CotSample, Task};
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeSet;
use std::io::{BufWriter, Read, Write};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "cotlab", version, about = "Finite-field chain-of-thought lab")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Generate a dataset: `--count` lines into `--out`, or a train/test
    /// split with manifest into `--dir`.
    Gen(GenArgs),
    /// Write the oracle trace of every problem in a file, one per line.
    Solve(SolveArgs),
    /// Drop and perturb intermediate steps of a dataset file.
    Corrupt(CorruptArgs),
    /// Encode Boolean formulas as arithmetic or automaton runs as linear
    /// systems, and check each encoding against direct evaluation.
    Reduce(ReduceArgs),
    /// Certify the gadget constructions numerically.
    VerifyLemmas(LemmaArgs),
    /// Build a hand-constructed model and decode random prompts with it.
    VerifyConstruction(ConstructionArgs),
    /// Summarize a dataset file; with `--predictions`, score answers.
    Stats(StatsArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// arithmetic, equation, lis, ed or cfg.
    #[arg(long)]
    pub task: Task,
    /// Problem size: operators, variables, sequence or word length.
    #[arg(long, alias = "ops", alias = "vars", alias = "len")]
    pub size: usize,
    /// Prime modulus for the algebraic tasks.
    #[arg(long, default_value_t = 11)]
    pub p: u64,
    /// Number of lines to write.
    #[arg(long)]
    pub count: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Train split size (with `--dir`).
    #[arg(long)]
    pub train: Option<usize>,
    /// Test split size, deduplicated against train.
    #[arg(long)]
    pub test: Option<usize>,
    /// Directory for the split files and manifest.
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// `cot` for full traces, `direct` for answers only.
    #[arg(long, default_value = "cot")]
    pub format: Format,
    /// Required; every draw derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads. Output does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Task the problems belong to.
    #[arg(long)]
    pub task: Task,
    /// Prime modulus for the algebraic tasks.
    #[arg(long, default_value_t = 11)]
    pub p: u64,
    /// Problem file, one problem per line as it appears before the first
    /// separator of a dataset line; `-` reads standard input.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `cot` or `direct`.
    #[arg(long, default_value = "cot")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct CorruptArgs {
    /// Probability of dropping a step, and of altering a kept one.
    #[arg(long)]
    pub gamma: f64,
    /// Required; line i uses a stream derived from (seed, i).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset file to read.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Where to write the corrupted lines.
    #[arg(long)]
    pub out: PathBuf,
    /// Inferred from the separators when absent.
    #[arg(long)]
    pub task: Option<Task>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceFrom {
    Boolean,
    Automaton,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    /// Source problem: boolean or automaton.
    #[arg(long)]
    pub from: ReduceFrom,
    /// Prime modulus of the target problems.
    #[arg(long, default_value_t = 11)]
    pub p: u64,
    /// Boolean: every formula with up to this many connectives.
    #[arg(long, default_value_t = 3)]
    pub max_connectives: usize,
    /// Boolean: read formulas from a file instead of enumerating.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Automaton: random strings to reduce.
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Automaton: longest random string.
    #[arg(long, default_value_t = 6)]
    pub max_len: usize,
    /// Required for random automata and strings.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the encoded problems here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LemmaArgs {
    /// Accuracy every gadget is built for and held to.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Random inputs per randomized check.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Required.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct ConstructionArgs {
    /// arithmetic or equation.
    #[arg(long)]
    pub task: Task,
    /// Prime modulus.
    #[arg(long, default_value_t = 11)]
    pub p: u64,
    /// Arithmetic: most operators per random prompt.
    #[arg(long, default_value_t = 7)]
    pub max_ops: usize,
    /// Equation: most unknowns (the model is built for this many).
    #[arg(long, default_value_t = 3)]
    pub vars: usize,
    /// Longest arithmetic prompt the model is built for.
    #[arg(long, default_value_t = 64)]
    pub n_max: usize,
    /// End-to-end error budget the weights are sized for.
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    /// Random prompts to decode.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Round the stream to this many mantissa bits after each layer.
    #[arg(long)]
    pub quantize_bits: Option<u32>,
    /// Required.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write the model's weights as a tensor bundle.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Dataset file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// One decoded line per line of `--in`.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

/// Parse `args` (program name first) and run. Output goes to `out`, errors
/// and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.cmd, out, err) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn need_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| Error::Invalid("--seed is required; nothing here draws from the clock".into()))
}

/// `Ok(false)` means a verification failed.
fn dispatch(cmd: Cmd, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool> {
    match cmd {
        Cmd::Gen(a) => gen(a, out).map(|_| true),
        Cmd::Solve(a) => solve(a, out).map(|_| true),
        Cmd::Corrupt(a) => corrupt_file(a, out).map(|_| true),
        Cmd::Reduce(a) => reduce(a, out, err),
        Cmd::VerifyLemmas(a) => {
            let cfg = LemmaConfig { eps: a.eps, trials: a.trials, seed: need_seed(a.seed)? };
            if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
                return Err(Error::Invalid("--eps must lie in (0, 1)".into()));
            }
            let res = certify_all(&cfg)?;
            for r in &res {
                writeln!(out, "{r}")?;
            }
            let ok = res.iter().all(|r| r.passed());
            writeln!(out, "result: {}", if ok { "PASS" } else { "FAIL" })?;
            Ok(ok)
        }
        Cmd::VerifyConstruction(a) => verify_construction(a, out),
        Cmd::Stats(a) => stats(a, out).map(|_| true),
    }
}

fn sink(path: &Option<PathBuf>, out: &mut dyn Write, body: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, body)?,
        None => out.write_all(body.as_bytes())?,
    }
    Ok(())
}

fn read_input(path: &PathBuf) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(std::fs::read_to_string(path)?)
    }
}

fn gen(a: GenArgs, out: &mut dyn Write) -> Result<()> {
    let seed = need_seed(a.seed)?;
    let params = GenParams { p: a.p, size: a.size };
    match (a.count, a.dir) {
        (Some(n), None) => {
            let cfg = GenConfig { task: a.task, params, train: n, test: 0, seed, format: a.format };
            cfg.validate()?;
            let recs = generate_range(a.task, params, seed, 0, n as u64, a.shards)?;
            sink(&a.out, out, &lines(&recs, a.format))
        }
        (None, Some(dir)) => {
            let train = a.train.ok_or_else(|| Error::Invalid("--dir needs --train".into()))?;
            let cfg = GenConfig { task: a.task, params, train, test: a.test.unwrap_or(0), seed, format: a.format };
            let data = build_dataset(&cfg, a.shards)?;
            let m = write_dataset(&cfg, &data, &dir)?;
            writeln!(out, "wrote {} train / {} test to {}", m.train_count, m.test_count, dir.display())?;
            Ok(())
        }
        _ => Err(Error::Invalid("give exactly one of --count (with --out) or --dir".into())),
    }
}

/// Oracle trace of one problem written the way dataset lines write it.
pub fn solve_problem(task: Task, p: u64, text: &str) -> Result<CotSample> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let split_bar = || -> Result<(Vec<char>, Vec<char>)> {
        let bar = toks.iter().position(|t| *t == "|").ok_or_else(|| Error::Parse { pos: 0, msg: "expected '|'".into() })?;
        let chars = |ts: &[&str]| ts.iter().flat_map(|t| t.chars()).collect::<Vec<char>>();
        Ok((chars(&toks[..bar]), chars(&toks[bar + 1..])))
    };
    match task {
        Task::Arithmetic => Expr::parse(text, p)?.trace(),
        Task::Equation => LinearSystem::parse(text, p)?.trace(),
        Task::Lis => {
            let seq: std::result::Result<Vec<i64>, _> = toks.iter().map(|t| t.parse::<i64>()).collect();
            let seq = seq.map_err(|_| Error::Parse { pos: 0, msg: "LIS input must be integers".into() })?;
            Ok(lis_sample(&seq))
        }
        Task::Ed => {
            let (s1, s2) = split_bar()?;
            Ok(ed_sample(&s1, &s2, EdCosts::EXPERIMENT))
        }
        Task::Cfg => {
            let bar = text.rfind('|').ok_or_else(|| Error::Parse { pos: 0, msg: "expected 'rules | word'".into() })?;
            let g = Cfg::parse(&text[..bar])?;
            let word: Vec<char> = text[bar + 1..].chars().filter(|c| !c.is_whitespace()).collect();
            cfg_sample(&g, &word)
        }
    }
}

fn solve(a: SolveArgs, out: &mut dyn Write) -> Result<()> {
    let text = read_input(&a.input)?;
    let mut body = String::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let s = solve_problem(a.task, a.p, line).map_err(|e| Error::Invalid(format!("line {}: {e}", i + 1)))?;
        let t = match a.format {
            Format::Cot => s.to_text(),
            Format::Direct => s.to_direct_text(),
        };
        body.push_str(&format!("{t} {EOS}\n"));
    }
    sink(&a.out, out, &body)
}

/// Task whose layout matches a dataset line, for files without a task tag.
pub fn infer_task(line: &str) -> Task {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if !toks.contains(&"[SEP]") {
        Task::Arithmetic
    } else if toks.iter().any(|t| t.strip_prefix('x').is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))) {
        Task::Equation
    } else {
        Task::Lis
    }
}

/// Parse a dataset line (trailing `<eos>` optional).
pub fn parse_line(task: Task, line: &str) -> Result<CotSample> {
    let body = line.trim().strip_suffix(EOS).unwrap_or(line.trim());
    let n_sep = body.split_whitespace().filter(|t| *t == task.separator()).count();
    let first = body.split_whitespace().take_while(|t| *t != task.separator()).count();
    let zero_step = task == Task::Arithmetic && n_sep == 1 && first == 1;
    CotSample::from_text(task, body, zero_step)
}

fn corrupt_file(a: CorruptArgs, out: &mut dyn Write) -> Result<()> {
    let seed = need_seed(a.seed)?;
    let cfg = CorruptionConfig::new(a.gamma, seed)?;
    let text = read_input(&a.input)?;
    let all: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let task = match (a.task, all.first()) {
        (Some(t), _) => t,
        (None, Some(l)) => infer_task(l),
        (None, None) => Task::Arithmetic,
    };
    let samples: Vec<CotSample> = all
        .iter()
        .enumerate()
        .map(|(i, l)| parse_line(task, l).map_err(|e| Error::Invalid(format!("line {}: {e}", i + 1))))
        .collect::<Result<_>>()?;
    // Replacement tokens: everything the file's steps and answers use.
    let vocab: Vec<String> = samples
        .iter()
        .flat_map(|s| s.steps.iter().flatten().chain(&s.answer))
        .cloned()
        .collect::<BTreeSet<String>>()
        .into_iter()
        .collect();
    let mut total = CorruptionStats::default();
    let mut body = String::new();
    for (i, s) in samples.iter().enumerate() {
        let mut rng = SplitMix64::new(derive(cfg.seed, i as u64));
        let (c, st) = corrupt(s, cfg.gamma, &mut rng, &vocab);
        total.merge(st);
        body.push_str(&format!("{} {EOS}\n", c.to_text()));
    }
    std::fs::write(&a.out, body)?;
    writeln!(
        out,
        "{} lines, {} intermediate steps: dropped {} ({:.4}), corrupted {} ({:.4})",
        samples.len(),
        total.steps,
        total.dropped,
        total.omission_rate(),
        total.corrupted,
        total.corruption_rate()
    )?;
    Ok(())
}

fn random_automaton(rng: &mut SplitMix64) -> Result<Automaton> {
    let states = 2 + rng.index(3);
    let delta = (0..states).map(|_| (0..2).map(|_| rng.index(states)).collect()).collect();
    let accept = (0..states).map(|_| rng.bernoulli(0.5)).collect();
    Automaton::new(vec!['a', 'b'], delta, accept, 0)
}

fn reduce(a: ReduceArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool> {
    let mut body = String::new();
    let mut bad = 0;
    let mut total = 0;
    match a.from {
        ReduceFrom::Boolean => {
            let formulas: Vec<Formula> = match &a.input {
                Some(p) => read_input(p)?.lines().filter(|l| !l.trim().is_empty()).map(Formula::parse).collect::<Result<_>>()?,
                None => (0..=a.max_connectives).flat_map(Formula::enumerate).collect(),
            };
            for f in &formulas {
                let e = reduce_boolean(f, a.p)?;
                let v = e.evaluate()?;
                let ok = v == f.eval() as u64;
                bad += !ok as usize;
                total += 1;
                body.push_str(&format!("{}\t{}\t{}\t{}\n", f.text(), e.compact(), f.eval() as u8, v));
            }
        }
        ReduceFrom::Automaton => {
            let seed = need_seed(a.seed)?;
            for i in 0..a.count {
                let mut rng = SplitMix64::new(derive(seed, i as u64));
                let aut = random_automaton(&mut rng)?;
                let len = rng.index(a.max_len + 1);
                let word: Vec<char> = (0..len).map(|_| *rng.choose(&aut.alphabet)).collect();
                let (sys, star) = reduce_automaton(&aut, &word, a.p)?;
                let x = solve_direct(&sys)?;
                let want = aut.accepts(&word)? as u64;
                let ok = x[star] == want;
                bad += !ok as usize;
                total += 1;
                let w: String = word.iter().collect();
                body.push_str(&format!("{w}\t{}\t{want}\t{}\n", sys.render(), x[star]));
            }
        }
    }
    sink(&a.out, out, &body)?;
    writeln!(err, "{total} reductions, {bad} disagree with direct evaluation")?;
    Ok(bad == 0)
}

/// Build the requested model and run the verifier.
pub fn build_and_verify(a: &ConstructionArgs) -> Result<(ModelSpec, VerifyReport)> {
    let seed = need_seed(a.seed)?;
    match a.task {
        Task::Arithmetic => {
            let m = build_arithmetic_model(a.n_max, a.p, a.eps)?;
            let insts = arithmetic_instances(a.max_ops, a.p, a.trials, seed);
            let (vocab, p) = (m.vocab.clone(), a.p);
            let r = move |t: &[String]| arithmetic_reference(t, &vocab, p);
            let rep = verify(&m, &insts, a.quantize_bits, &r);
            Ok((m, rep))
        }
        Task::Equation => {
            let m = build_equation_model(a.vars, a.p, a.eps)?;
            let insts = equation_instances(a.vars, a.p, a.trials, seed);
            let mv = a.vars;
            let r = move |t: &[String]| equation_reference(t, mv);
            let rep = verify(&m, &insts, a.quantize_bits, &r);
            Ok((m, rep))
        }
        t => Err(Error::Invalid(format!("no constructed model for task {t}"))),
    }
}

fn verify_construction(a: ConstructionArgs, out: &mut dyn Write) -> Result<bool> {
    let (m, rep) = build_and_verify(&a)?;
    let text = rep.render();
    out.write_all(text.as_bytes())?;
    if let Some(p) = &a.report {
        std::fs::write(p, &text)?;
    }
    if let Some(p) = &a.dump {
        let f = BufWriter::new(std::fs::File::create(p)?);
        write_bundle(f, &m.named_weights())?;
    }
    Ok(rep.passed())
}

/// Final answer block of a dataset or prediction line.
pub fn answer_of(line: &str) -> Vec<String> {
    let toks: Vec<&str> = line.split_whitespace().filter(|t| *t != EOS).collect();
    let sep = if toks.contains(&"[SEP]") { "[SEP]" } else { "=" };
    let start = toks.iter().rposition(|t| *t == sep).map_or(0, |k| k + 1);
    toks[start..].iter().map(|s| s.to_string()).collect()
}

fn stats(a: StatsArgs, out: &mut dyn Write) -> Result<()> {
    let text = read_input(&a.input)?;
    let all: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let lens: Vec<usize> = all.iter().map(|l| l.split_whitespace().count()).collect();
    let task = all.first().map(|l| infer_task(l)).unwrap_or(Task::Arithmetic);
    let steps: Vec<usize> = all.iter().map(|l| l.split_whitespace().filter(|t| *t == task.separator()).count()).collect();
    let n = all.len().max(1) as f64;
    writeln!(out, "lines: {}", all.len())?;
    writeln!(out, "layout: {}", if task == Task::Arithmetic { "'=' separated" } else { "[SEP] separated" })?;
    writeln!(
        out,
        "tokens per line: mean {:.2}  min {}  max {}",
        lens.iter().sum::<usize>() as f64 / n,
        lens.iter().min().copied().unwrap_or(0),
        lens.iter().max().copied().unwrap_or(0)
    )?;
    writeln!(out, "separators per line: mean {:.2}", steps.iter().sum::<usize>() as f64 / n)?;
    if let Some(p) = &a.predictions {
        let pred = read_input(p)?;
        let pred: Vec<&str> = pred.lines().collect();
        if pred.len() < all.len() {
            return Err(Error::Invalid(format!("{} predictions for {} lines", pred.len(), all.len())));
        }
        let hits = all.iter().zip(&pred).filter(|(g, q)| answer_of(g) == answer_of(q)).count();
        writeln!(out, "answer accuracy: {hits}/{} = {:.4}", all.len(), hits as f64 / n)?;
    }
    Ok(())
}
