//! Factored linear-softmax planner policy.
//!
//! Every decision factor of the action schema has its own weight matrix
//! (`cardinality × feature_dim`) mapping featurized memory to logits. An
//! action's log-probability is the sum of its factors' log-probabilities, so
//! factors play the role tokens play in a language-model planner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orchestrator::action::{TOOL_BIT_KEYFRAMES, TOOL_BIT_REFINER, TOOL_BIT_SOLVER};
use crate::orchestrator::{Action, Factor, FactorChoice, MemoryPool};
use crate::scene::ScenarioKind;

/// Layout of [`StateFeatures`].
pub mod feature {
    pub const BIAS: usize = 0;
    /// One-hot over scenario kinds, three slots.
    pub const KIND: usize = 1;
    pub const CYCLE: usize = 4;
    pub const LAST_SA: usize = 5;
    pub const LAST_PC: usize = 6;
    pub const VALID_COMPUTATION: usize = 7;
    pub const KEYFRAMES: usize = 8;
    pub const PROMPT_REFINED: usize = 9;
    pub const GENERATIONS: usize = 10;
    pub const DIM: usize = 11;
}

pub const FEATURE_DIM: usize = feature::DIM;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateFeatures(pub Vec<f64>);

impl StateFeatures {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Fixed-length encoding of memory for cycle `|entries| + 1` of `cycles`.
pub fn featurize(memory: &MemoryPool, cycles: usize) -> StateFeatures {
    let mut x = vec![0.0; feature::DIM];
    x[feature::BIAS] = 1.0;
    x[feature::KIND + memory.query.scenario_kind.index()] = 1.0;
    x[feature::CYCLE] = memory.next_cycle() as f64 / cycles.max(1) as f64;
    if let Some(s) = memory.last_score() {
        x[feature::LAST_SA] = s.sa;
        x[feature::LAST_PC] = s.pc;
    }
    x[feature::VALID_COMPUTATION] = f64::from(u8::from(memory.has_valid_computation()));
    x[feature::KEYFRAMES] = f64::from(u8::from(memory.has_keyframes()));
    x[feature::PROMPT_REFINED] = f64::from(u8::from(memory.prompt_refined()));
    x[feature::GENERATIONS] = memory.generations() as f64;
    StateFeatures(x)
}

/// Per-factor log-probabilities of the chosen indices, aligned with
/// `Action::decision_factors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FactorLogProbs(pub Vec<f64>);

impl FactorLogProbs {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Flat gradient with the same layout as [`PolicyParams::weights`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient(pub Vec<f64>);

impl ParamGradient {
    pub fn zeros_like(params: &PolicyParams) -> Self {
        ParamGradient(vec![0.0; params.weights.len()])
    }

    pub fn add_scaled(&mut self, other: &ParamGradient, scale: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.0.iter_mut().for_each(|v| *v *= s);
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub version: u64,
    pub feature_dim: usize,
    /// Indexed by `Factor::index`.
    pub cardinalities: Vec<usize>,
    /// Row-major per factor, factors concatenated in `Factor::ALL` order.
    pub weights: Vec<f64>,
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

fn sample_index(log_probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, lp) in log_probs.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding slack above the last cumulative sum
    log_probs
        .iter()
        .rposition(|lp| lp.exp() > 0.0)
        .unwrap_or(log_probs.len() - 1)
}

/// KL divergence and entropy of the current policy, with their gradients.
#[derive(Debug, Clone)]
pub struct KlEntropy {
    pub kl: f64,
    pub entropy: f64,
    pub kl_grad: ParamGradient,
    pub entropy_grad: ParamGradient,
}

impl PolicyParams {
    /// All-zero weights: every factor uniform.
    pub fn zeros() -> Self {
        Self::with_schema(FEATURE_DIM, Factor::cardinalities())
    }

    pub fn with_schema(feature_dim: usize, cardinalities: Vec<usize>) -> Self {
        let n = feature_dim * cardinalities.iter().sum::<usize>();
        PolicyParams {
            version: 0,
            feature_dim,
            cardinalities,
            weights: vec![0.0; n],
        }
    }

    /// Gaussian weights with standard deviation `scale`.
    pub fn random(scale: f64, seed: u64) -> Self {
        let mut p = Self::zeros();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in &mut p.weights {
            let n: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            *w = scale * n;
        }
        p
    }

    pub fn check(&self) -> Result<()> {
        if self.cardinalities != Factor::cardinalities() {
            return Err(Error::Contract(format!(
                "factor cardinalities {:?} do not match the action schema {:?}",
                self.cardinalities,
                Factor::cardinalities()
            )));
        }
        if self.feature_dim != FEATURE_DIM {
            return Err(Error::Contract(format!(
                "feature dim {} != {FEATURE_DIM}",
                self.feature_dim
            )));
        }
        if self.weights.len() != self.feature_dim * self.cardinalities.iter().sum::<usize>() {
            return Err(Error::Contract("weight count does not match the schema".into()));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Contract("non-finite policy weight".into()));
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &PolicyParams) -> Result<()> {
        if self.feature_dim != other.feature_dim
            || self.cardinalities != other.cardinalities
            || self.weights.len() != other.weights.len()
        {
            return Err(Error::Contract("policy parameter shapes differ".into()));
        }
        Ok(())
    }

    pub(crate) fn check_features(&self, x: &StateFeatures) -> Result<()> {
        if x.0.len() != self.feature_dim {
            return Err(Error::Contract(format!(
                "feature vector has {} entries, policy expects {}",
                x.0.len(),
                self.feature_dim
            )));
        }
        Ok(())
    }

    fn offset(&self, factor: Factor) -> usize {
        self.cardinalities[..factor.index()].iter().sum::<usize>() * self.feature_dim
    }

    pub fn logits(&self, factor: Factor, x: &StateFeatures) -> Vec<f64> {
        let d = self.feature_dim;
        let base = self.offset(factor);
        (0..self.cardinalities[factor.index()])
            .map(|r| {
                let row = &self.weights[base + r * d..base + (r + 1) * d];
                row.iter().zip(&x.0).map(|(w, v)| w * v).sum()
            })
            .collect()
    }

    pub fn factor_log_probs(&self, factor: Factor, x: &StateFeatures) -> Vec<f64> {
        log_softmax(&self.logits(factor, x))
    }

    /// Samples every factor the schema asks for, in order. Deterministic in
    /// `seed`; returned log-probabilities are exact.
    pub fn sample_action(&self, x: &StateFeatures, seed: u64) -> (Action, FactorLogProbs) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut choices = Vec::with_capacity(Factor::ALL.len());
        let mut log_probs = Vec::with_capacity(Factor::ALL.len());
        let mut pick = |factor: Factor| -> usize {
            let lp = self.factor_log_probs(factor, x);
            let i = sample_index(&lp, rng.random::<f64>());
            choices.push(FactorChoice::new(factor, i));
            log_probs.push(lp[i]);
            i
        };
        let mask = pick(Factor::Tools);
        if mask & TOOL_BIT_SOLVER != 0 {
            pick(Factor::SolverKind);
            pick(Factor::SolverSource);
        }
        if mask & TOOL_BIT_KEYFRAMES != 0 {
            pick(Factor::KeyframePositions);
        }
        if mask & TOOL_BIT_REFINER != 0 {
            pick(Factor::RefineFlags);
        }
        pick(Factor::Generate);
        let action = Action::from_choices(choices).expect("sampled factors follow the schema");
        (action, FactorLogProbs(log_probs))
    }

    pub(crate) fn check_choice(&self, c: &FactorChoice) -> Result<()> {
        let card = self.cardinalities[c.factor.index()];
        if c.cardinality != card || c.index >= card {
            return Err(Error::Contract(format!(
                "choice {c:?} out of range for cardinality {card}"
            )));
        }
        Ok(())
    }

    pub fn log_prob(&self, x: &StateFeatures, action: &Action) -> Result<FactorLogProbs> {
        self.check_features(x)?;
        action
            .decision_factors
            .iter()
            .map(|c| {
                self.check_choice(c)?;
                Ok(self.factor_log_probs(c.factor, x)[c.index])
            })
            .collect::<Result<Vec<_>>>()
            .map(FactorLogProbs)
    }

    /// Adds `coeff * d log p(choice | x) / d weights` into `grad`.
    pub(crate) fn add_choice_grad(&self, x: &StateFeatures, c: &FactorChoice, coeff: f64, grad: &mut [f64]) {
        let d = self.feature_dim;
        let base = self.offset(c.factor);
        let lp = self.factor_log_probs(c.factor, x);
        for (r, lpr) in lp.iter().enumerate() {
            let g = coeff * (f64::from(u8::from(r == c.index)) - lpr.exp());
            if g == 0.0 {
                continue;
            }
            let row = &mut grad[base + r * d..base + (r + 1) * d];
            for (gw, xv) in row.iter_mut().zip(&x.0) {
                *gw += g * xv;
            }
        }
    }

    /// Gradient of the action's total log-probability (sum over factors).
    pub fn grad_log_prob(&self, x: &StateFeatures, action: &Action) -> Result<ParamGradient> {
        self.check_features(x)?;
        let mut grad = ParamGradient::zeros_like(self);
        for c in &action.decision_factors {
            self.check_choice(c)?;
            self.add_choice_grad(x, c, 1.0, &mut grad.0);
        }
        Ok(grad)
    }

    /// Closed-form categorical KL(self ‖ reference) and entropy, summed over
    /// every factor and averaged over the batch, with gradients.
    pub fn kl_entropy(&self, reference: &PolicyParams, batch: &[StateFeatures]) -> Result<KlEntropy> {
        self.same_shape(reference)?;
        let mut out = KlEntropy {
            kl: 0.0,
            entropy: 0.0,
            kl_grad: ParamGradient::zeros_like(self),
            entropy_grad: ParamGradient::zeros_like(self),
        };
        if batch.is_empty() {
            return Ok(out);
        }
        let d = self.feature_dim;
        let inv = 1.0 / batch.len() as f64;
        for x in batch {
            self.check_features(x)?;
            for factor in Factor::ALL {
                let lp = self.factor_log_probs(factor, x);
                let lq = reference.factor_log_probs(factor, x);
                let p: Vec<f64> = lp.iter().map(|v| v.exp()).collect();
                let kl: f64 = p.iter().zip(lp.iter().zip(&lq)).map(|(pi, (a, b))| pi * (a - b)).sum();
                let h: f64 = -p.iter().zip(&lp).map(|(pi, a)| pi * a).sum::<f64>();
                out.kl += inv * kl;
                out.entropy += inv * h;
                let base = self.offset(factor);
                for r in 0..p.len() {
                    let gk = inv * p[r] * (lp[r] - lq[r] - kl);
                    let gh = -inv * p[r] * (lp[r] + h);
                    for (k, xv) in x.0.iter().enumerate() {
                        out.kl_grad.0[base + r * d + k] += gk * xv;
                        out.entropy_grad.0[base + r * d + k] += gh * xv;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn kl_and_entropy(&self, reference: &PolicyParams, batch: &[StateFeatures]) -> Result<(f64, f64)> {
        self.kl_entropy(reference, batch).map(|k| (k.kl, k.entropy))
    }

    /// `weights += step * grad`, bumping the version. A zero step is a no-op.
    pub fn ascend(&mut self, grad: &ParamGradient, step: f64) {
        if step == 0.0 {
            return;
        }
        for (w, g) in self.weights.iter_mut().zip(&grad.0) {
            *w += step * g;
        }
        self.version += 1;
    }

    /// Sets the bias weight of one factor row, for hand-built policies.
    pub fn set_bias(&mut self, factor: Factor, index: usize, value: f64) {
        let i = self.offset(factor) + index * self.feature_dim + feature::BIAS;
        self.weights[i] = value;
    }

    /// Per-kind bias, for hand-built policies.
    pub fn set_kind_weight(&mut self, factor: Factor, index: usize, kind: ScenarioKind, value: f64) {
        let i = self.offset(factor) + index * self.feature_dim + feature::KIND + kind.index();
        self.weights[i] = value;
    }
}
