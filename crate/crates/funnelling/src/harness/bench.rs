use funnel_core::funnel::FunnelConfig;
use funnel_core::metrics::mean_and_sd;
use serde::Serialize;

use super::{run_method, CorpusProvider, CorpusSource, Method};
use crate::Result;

/// Where the timings were taken.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HardwareInfo {
    /// Worker threads of the current pool.
    pub threads: usize,
    /// Cores reported by the operating system.
    pub cores: usize,
    pub os: String,
    pub arch: String,
}

impl HardwareInfo {
    pub fn current() -> Self {
        Self {
            threads: rayon::current_num_threads(),
            cores: std::thread::available_parallelism().map_or(1, |n| n.get()),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: String,
    /// `train` or `test`.
    pub phase: String,
    pub mean_seconds: f64,
    pub sd_seconds: f64,
    pub trials: usize,
    pub threads: usize,
    pub cores: usize,
    pub os: String,
    pub arch: String,
}

/// Wall-clock train and test seconds of each method, over `trials` runs
/// with seeds `seed..seed + trials`. Methods run one after another so their
/// timings do not compete for cores.
pub fn run_bench(
    source: &CorpusSource,
    methods: &[Method],
    trials: usize,
    seed: u64,
    cfg: &FunnelConfig,
) -> Result<Vec<BenchRow>> {
    let provider = CorpusProvider::new(source)?;
    let hardware = HardwareInfo::current();
    let mut times = vec![(Vec::new(), Vec::new()); methods.len()];
    for trial in 0..trials {
        let s = seed.wrapping_add(trial as u64);
        let data = provider.trial(s)?;
        let cfg = cfg.clone().with_seed(s);
        for (m, (train, test)) in methods.iter().zip(times.iter_mut()) {
            let reports = run_method(*m, &data, &cfg, trial)?;
            // Every report of a run carries the same timings.
            if let Some(r) = reports.first() {
                train.push(r.meta.train_seconds);
                test.push(r.meta.test_seconds);
            }
        }
    }
    let mut rows = Vec::new();
    for (m, (train, test)) in methods.iter().zip(&times) {
        for (phase, values) in [("train", train), ("test", test)] {
            let (mean, sd) = mean_and_sd(values);
            rows.push(BenchRow {
                method: m.name().into(),
                phase: phase.into(),
                mean_seconds: mean,
                sd_seconds: sd,
                trials: values.len(),
                threads: hardware.threads,
                cores: hardware.cores,
                os: hardware.os.clone(),
                arch: hardware.arch.clone(),
            });
        }
    }
    Ok(rows)
}
