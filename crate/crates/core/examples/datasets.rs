//! Seeded dataset generation with a train/test split, then step corruption.
//!
//!     cargo run --example datasets

use cotlab::datagen::corrupt::{corrupt, task_vocab, CorruptionStats};
use cotlab::datagen::dataset::{build_dataset, write_dataset, Format, GenConfig, GenParams};
use cotlab::datagen::rng::{derive, SplitMix64};
use cotlab::sample::Task;

fn main() -> cotlab::Result<()> {
    let cfg = GenConfig {
        task: Task::Arithmetic,
        params: GenParams { p: 11, size: 4 },
        train: 2000,
        test: 200,
        seed: 7,
        format: Format::Cot,
    };
    // Shard count changes the schedule, never the bytes.
    let data = build_dataset(&cfg, 4)?;
    assert_eq!(data, build_dataset(&cfg, 1)?);
    let dir = std::env::temp_dir().join("cotlab-example-dataset");
    let m = write_dataset(&cfg, &data, &dir)?;
    println!("{} train, {} test ({} duplicate test candidates skipped) in {}", m.train_count, m.test_count, m.duplicates_skipped, dir.display());
    for (name, hash) in &m.files {
        println!("  {name:<12} {}", &hash[..16]);
    }
    for r in data.train.iter().take(3) {
        println!("{}", r.line(Format::Cot));
    }

    let vocab = task_vocab(Task::Arithmetic, 11, 4);
    let mut stats = CorruptionStats::default();
    for (i, r) in data.train.iter().enumerate() {
        let mut rng = SplitMix64::new(derive(1, i as u64));
        let (c, st) = corrupt(&r.sample(), 0.2, &mut rng, &vocab);
        if i < 3 {
            println!("γ=0.2: {}", c.to_text());
        }
        stats.merge(st);
    }
    println!("omitted {:.3}, corrupted {:.3} of {} steps", stats.omission_rate(), stats.corruption_rate(), stats.steps);
    Ok(())
}
