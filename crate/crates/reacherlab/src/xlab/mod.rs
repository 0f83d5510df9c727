//! Experiment front door: configuration, seed discipline, analyses and
//! file outputs.
//!
//! Controlled comparisons depend on seed discipline: every named random
//! stream is derived from `(master seed, label)` only, so two configs
//! that differ in medium, injectors, action space or cycle time still
//! share the same policy initialization and the same target sequence.

pub mod analysis;
pub mod config;
pub mod output;
pub mod runner;

pub use analysis::{cross_correlation, paired_bootstrap_p, Correlogram};
pub use config::{AgentKind, ExperimentConfig, Medium, TaskVariant};
pub use output::{write_run_csv, RunMetadata};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::harness::HarnessSeeds;
use crate::util::fnv1a64;

/// Named, mutually independent random streams derived from one master
/// seed. The `policy` and `targets` streams depend only on the master
/// seed, never on any configuration axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStreams {
    master: u64,
}

impl SeedStreams {
    pub fn derive(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Stream for an arbitrary label: seeded by a stable hash expansion
    /// of `(master, label)`.
    pub fn stream(&self, label: &str) -> ChaCha12Rng {
        let mut seed = [0u8; 32];
        for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
            let mut bytes = Vec::with_capacity(label.len() + 9);
            bytes.extend_from_slice(&self.master.to_le_bytes());
            bytes.extend_from_slice(label.as_bytes());
            bytes.push(i as u8);
            chunk.copy_from_slice(&fnv1a64(&bytes).to_le_bytes());
        }
        ChaCha12Rng::from_seed(seed)
    }

    pub fn policy(&self) -> ChaCha12Rng {
        self.stream("policy")
    }

    pub fn targets(&self) -> ChaCha12Rng {
        self.stream("targets")
    }

    pub fn medium(&self) -> ChaCha12Rng {
        self.stream("medium")
    }

    pub fn injector(&self) -> ChaCha12Rng {
        self.stream("injector")
    }

    pub fn exploration(&self) -> ChaCha12Rng {
        self.stream("exploration")
    }

    /// The stream bundle consumed by one harness run.
    pub fn harness_seeds(&self) -> HarnessSeeds {
        HarnessSeeds {
            targets: self.stream("targets"),
            medium_status: self.stream("medium/status"),
            medium_command: self.stream("medium/command"),
            injector_action: self.stream("injector/action"),
            injector_actuation: self.stream("injector/actuation"),
            sensor_noise: self.stream("medium/sensor-noise"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn first_draws(mut rng: ChaCha12Rng, n: usize) -> Vec<u64> {
        (0..n).map(|_| rng.gen()).collect()
    }

    #[test]
    fn same_seed_same_label_same_stream() {
        let a = SeedStreams::derive(0);
        let b = SeedStreams::derive(0);
        assert_eq!(first_draws(a.targets(), 10), first_draws(b.targets(), 10));
    }

    #[test]
    fn different_seeds_differ() {
        let a = SeedStreams::derive(0);
        let b = SeedStreams::derive(1);
        assert_ne!(first_draws(a.policy(), 4), first_draws(b.policy(), 4));
    }

    #[test]
    fn different_labels_differ() {
        let s = SeedStreams::derive(0);
        assert_ne!(first_draws(s.policy(), 4), first_draws(s.targets(), 4));
    }
}
