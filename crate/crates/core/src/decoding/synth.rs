//! A token-level noise process standing in for LLM sampling, so that
//! decoding experiments can run without a model.
//!
//! Every token of the reference gets a small outcome distribution: keep it,
//! replace it through a confusion entry, drop it, or duplicate it.
//! Candidate 0 is the greedy pass (each token takes its most probable
//! outcome); the remaining candidates sample each token from the
//! nucleus-truncated distribution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::nucleus::{nucleus_truncate, sample_index};
use crate::error::{Error, Result};
use crate::model::{Candidate, CandidatePool, SentenceKey};
use crate::text::split_whitespace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub num_samples: usize,
    pub nucleus_p: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            num_samples: 50,
            nucleus_p: 0.9,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 {
            return Err(Error::InvalidArgument("num_samples must be >= 1".into()));
        }
        if !(self.nucleus_p > 0.0 && self.nucleus_p <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "nucleus_p = {} outside (0, 1]",
                self.nucleus_p
            )));
        }
        Ok(())
    }
}

/// Replace token `from` (exact, case-sensitive) by `to` with probability `prob`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Confusion {
    pub from: String,
    pub to: String,
    pub prob: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Per-token probability of dropping the token.
    pub drop: f64,
    /// Per-token probability of emitting the token twice.
    pub duplicate: f64,
    pub confusions: Vec<Confusion>,
}

#[derive(Debug, Clone, PartialEq)]
enum Outcome<'a> {
    Keep,
    Replace(&'a str),
    Drop,
    Duplicate,
}

impl NoiseModel {
    /// Light drop/duplicate noise used when no noise file is supplied.
    pub fn builtin_default() -> Self {
        Self::from_toml(include_str!("../../resources/noise/default.toml")).expect("bundled noise model parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let model: NoiseModel = toml::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("noise model: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [self.drop, self.duplicate]
            .into_iter()
            .chain(self.confusions.iter().map(|c| c.prob));
        for p in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "noise probability {p} outside [0, 1]"
                )));
            }
        }
        if self.drop + self.duplicate > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "drop + duplicate = {} > 1",
                self.drop + self.duplicate
            )));
        }
        for c in &self.confusions {
            let mass = self.perturbation_mass(&c.from);
            if mass > 1.0 + 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "perturbations of `{}` have total probability {mass} > 1",
                    c.from
                )));
            }
        }
        Ok(())
    }

    fn perturbation_mass(&self, token: &str) -> f64 {
        self.drop
            + self.duplicate
            + self
                .confusions
                .iter()
                .filter(|c| c.from == token)
                .map(|c| c.prob)
                .sum::<f64>()
    }

    /// Outcome distribution of one token, `Keep` first. Zero-probability
    /// perturbations are omitted.
    fn outcomes<'a>(&'a self, token: &str) -> Vec<(Outcome<'a>, f64)> {
        let keep = (1.0 - self.perturbation_mass(token)).max(0.0);
        let mut out = vec![(Outcome::Keep, keep)];
        for c in self.confusions.iter().filter(|c| c.from == token) {
            out.push((Outcome::Replace(&c.to), c.prob));
        }
        out.push((Outcome::Drop, self.drop));
        out.push((Outcome::Duplicate, self.duplicate));
        out.retain(|(o, p)| *p > 0.0 || *o == Outcome::Keep);
        // renormalize away floating error so the nucleus check passes
        let total: f64 = out.iter().map(|(_, p)| p).sum();
        out.iter_mut().for_each(|(_, p)| *p /= total);
        out
    }
}

/// Seed for one sentence, derived from the run seed and the sentence key so
/// that pools do not depend on processing order.
pub fn sentence_seed(seed: u64, key: &SentenceKey) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((key.doc_id.len() as u64).to_le_bytes());
    h.update(key.doc_id.as_bytes());
    h.update((key.index as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn render(reference: &str, tokens: &[&str], changed: bool) -> String {
    if changed {
        tokens.join(" ")
    } else {
        reference.to_string()
    }
}

/// `sampler.num_samples` candidates for `reference`; the candidate
/// log-probability is the sum of the chosen outcomes' log-probabilities
/// under the untruncated token distributions.
pub fn synth_candidates(
    reference: &str,
    sampler: &SamplerConfig,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<Candidate>> {
    sampler.validate()?;
    noise.validate()?;
    let tokens = split_whitespace(reference);
    let dists: Vec<Vec<(Outcome<'_>, f64)>> = tokens.iter().map(|t| noise.outcomes(t)).collect();
    let truncated: Vec<Vec<(Outcome<'_>, f64)>> = dists
        .iter()
        .map(|d| nucleus_truncate(d, sampler.nucleus_p))
        .collect::<Result<_>>()?;

    let build = |choices: &[&Outcome<'_>], logprob: f64| {
        let mut out = Vec::with_capacity(tokens.len() + 2);
        let mut changed = false;
        for (tok, choice) in tokens.iter().zip(choices) {
            match choice {
                Outcome::Keep => out.push(*tok),
                Outcome::Replace(to) => {
                    out.push(*to);
                    changed = true;
                }
                Outcome::Drop => changed = true,
                Outcome::Duplicate => {
                    out.push(*tok);
                    out.push(*tok);
                    changed = true;
                }
            }
        }
        Candidate::new(render(reference, &out, changed)).with_logprob(logprob)
    };

    let mut candidates = Vec::with_capacity(sampler.num_samples);

    let mut greedy = Vec::with_capacity(tokens.len());
    let mut greedy_lp = 0.0;
    for d in &dists {
        let probs: Vec<f64> = d.iter().map(|(_, p)| *p).collect();
        let best = super::argmax_first(&probs).expect("nonempty outcome list");
        greedy.push(&d[best].0);
        greedy_lp += probs[best].ln();
    }
    candidates.push(build(&greedy, greedy_lp.min(0.0)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 1..sampler.num_samples {
        let mut choices = Vec::with_capacity(tokens.len());
        let mut lp = 0.0;
        for (d, t) in dists.iter().zip(&truncated) {
            let weights: Vec<f64> = t.iter().map(|(_, p)| *p).collect();
            let k = sample_index(&weights, &mut rng);
            let outcome = &t[k].0;
            let p = d.iter().find(|(o, _)| o == outcome).map_or(1.0, |(_, p)| *p);
            lp += p.ln();
            choices.push(outcome);
        }
        candidates.push(build(&choices, lp.min(0.0)));
    }
    Ok(candidates)
}

pub fn synth_pool(
    key: &SentenceKey,
    reference: &str,
    sampler: &SamplerConfig,
    noise: &NoiseModel,
) -> Result<CandidatePool> {
    let candidates = synth_candidates(reference, sampler, noise, sentence_seed(sampler.seed, key))?;
    CandidatePool::new(key.doc_id.clone(), key.index, candidates)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> SentenceKey {
        SentenceKey::new("doc", 3)
    }

    fn noisy() -> NoiseModel {
        NoiseModel {
            drop: 0.05,
            duplicate: 0.03,
            confusions: vec![Confusion {
                from: "Sie".into(),
                to: "du".into(),
                prob: 0.4,
            }],
        }
    }

    #[test]
    fn zero_noise_copies_the_reference() {
        let reference = "Können  Sie mir helfen ?";
        let pool = synth_pool(&key(), reference, &SamplerConfig::default(), &NoiseModel::default()).unwrap();
        assert_eq!(pool.len(), 50);
        assert!(pool.candidates.iter().all(|c| c.text == reference));
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let s = SamplerConfig { seed: 7, ..Default::default() };
        let a = synth_pool(&key(), "Können Sie mir bitte helfen", &s, &noisy()).unwrap();
        let b = synth_pool(&key(), "Können Sie mir bitte helfen", &s, &noisy()).unwrap();
        assert_eq!(a, b);
        let other = SamplerConfig { seed: 8, ..Default::default() };
        let c = synth_pool(&key(), "Können Sie mir bitte helfen", &other, &noisy()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn candidate_zero_is_the_greedy_pass() {
        let s = SamplerConfig { seed: 1, ..Default::default() };
        let pool = synth_pool(&key(), "Können Sie mir helfen", &s, &noisy()).unwrap();
        assert_eq!(pool.candidates[0].text, "Können Sie mir helfen");
        // greedy has the highest log-probability
        let lp0 = pool.candidates[0].model_logprob.unwrap();
        assert!(pool.candidates.iter().all(|c| c.model_logprob.unwrap() <= lp0 + 1e-12));
    }

    #[test]
    fn corruption_rate_matches_confusion_probability() {
        // one confusable token; 49 sampled candidates per seed
        let noise = NoiseModel {
            confusions: vec![Confusion { from: "Sie".into(), to: "du".into(), prob: 0.4 }],
            ..Default::default()
        };
        let mut corrupted = 0;
        let mut total = 0;
        for seed in 0..4 {
            let s = SamplerConfig { seed, ..Default::default() };
            let pool = synth_pool(&key(), "Haben Sie Zeit", &s, &noise).unwrap();
            for c in &pool.candidates[1..] {
                total += 1;
                corrupted += usize::from(c.text.contains("du"));
            }
        }
        // 99.9% normal-approximation interval around 0.4
        let n = total as f64;
        let half = 3.29 * (0.4f64 * 0.6 / n).sqrt();
        let frac = corrupted as f64 / n;
        assert!((frac - 0.4).abs() <= half, "fraction {frac} outside 0.4 +- {half}");
    }

    #[test]
    fn nucleus_cuts_rare_outcomes() {
        // keep 0.55, du 0.4, drop 0.05: p = 0.9 keeps only the first two
        let noise = NoiseModel {
            drop: 0.05,
            duplicate: 0.0,
            confusions: vec![Confusion { from: "Sie".into(), to: "du".into(), prob: 0.4 }],
        };
        let s = SamplerConfig { seed: 3, num_samples: 200, nucleus_p: 0.9 };
        let pool = synth_pool(&key(), "Sie", &s, &noise).unwrap();
        assert!(pool.candidates.iter().all(|c| c.text == "Sie" || c.text == "du"));
    }

    #[test]
    fn invalid_noise_is_rejected() {
        let bad = NoiseModel { drop: 0.7, duplicate: 0.5, confusions: vec![] };
        assert!(bad.validate().is_err());
        assert!(NoiseModel::from_toml("drop = 0.1\nunknown = 1").is_err());
        let parsed = NoiseModel::from_toml(
            "drop = 0.1\n[[confusions]]\nfrom = \"Sie\"\nto = \"du\"\nprob = 0.4\n",
        )
        .unwrap();
        assert_eq!(parsed.confusions.len(), 1);
    }
}
