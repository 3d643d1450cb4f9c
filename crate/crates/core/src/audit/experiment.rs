//! Realization of the two-wing measurement scenario with an optional disclosure
//! measurement on the hidden state: draws settings from their priors, a state
//! of reality from the chosen model, computes outcomes and the disclosure
//! output, and tallies the joint occurrence table.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::table::{ProbabilityTable, VariableSpec};
use crate::epistemic::{in_e0, sample_epistemic_with, E0Sampler};
use crate::hilbert::{JointEigenbasis, Setting, StateVector};
use crate::ontic::{assigned_index, index_from_cumulative, sample_ontic, ModelKind, OnticSampler, OnticState};
use crate::{Error, Result};

/// What the disclosure measurement reveals about the state of reality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// The hidden coordinate quantized to the per-setting bit width.
    TauBits,
    /// Membership bit of the shared redistribution region.
    E0Bit,
    /// Membership bit joined with the quantized hidden coordinate.
    Composite,
    /// No information (the output is always 0).
    Constant,
}

/// The disclosure measurement: its kind and the menu of granularities the
/// disclosure setting C selects from (one bit width per C value).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DisclosureChannel {
    pub kind: ChannelKind,
    pub menu: Vec<u8>,
}

impl DisclosureChannel {
    pub fn new(kind: ChannelKind, menu: Vec<u8>) -> Result<Self> {
        if menu.is_empty() {
            return Err(Error::EmptyMenu {
                which: "disclosure menu",
            });
        }
        if menu.iter().any(|b| *b > 16) {
            return Err(Error::InvalidTable {
                reason: "disclosure granularity is limited to 16 bits".into(),
            });
        }
        Ok(Self { kind, menu })
    }

    pub fn constant() -> Self {
        Self {
            kind: ChannelKind::Constant,
            menu: vec![0],
        }
    }

    fn max_bits(&self) -> u8 {
        self.menu.iter().copied().max().unwrap_or(0)
    }

    pub fn settings(&self) -> usize {
        self.menu.len()
    }

    pub fn output_domain_size(&self) -> usize {
        match self.kind {
            ChannelKind::TauBits => 1usize << self.max_bits(),
            ChannelKind::E0Bit => 2,
            ChannelKind::Composite => 1usize << (self.max_bits() + 1),
            ChannelKind::Constant => 1,
        }
    }

    /// Disclosure output for state `lambda` under the C value `c_idx`.
    pub fn disclose(&self, lambda: &OnticState, reference: &StateVector, c_idx: usize) -> i64 {
        let bits = self.menu[c_idx];
        match self.kind {
            ChannelKind::Constant => 0,
            ChannelKind::TauBits => quantize(lambda.tau(), bits),
            ChannelKind::E0Bit => in_e0(lambda, reference) as i64,
            ChannelKind::Composite => {
                ((in_e0(lambda, reference) as i64) << bits) | quantize(lambda.tau(), bits)
            }
        }
    }
}

fn quantize(tau: f64, bits: u8) -> i64 {
    let cells = 1i64 << bits;
    ((tau * cells as f64) as i64).min(cells - 1)
}

/// How the hidden state enters the table as the coarse-grained variable `L`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LambdaBinning {
    /// The hidden coordinate is quantized into `2^bits` equal bins.
    pub bits: u8,
    /// Prepend the redistribution-region membership bit to the bin index.
    pub include_e0: bool,
}

impl Default for LambdaBinning {
    fn default() -> Self {
        Self {
            bits: 6,
            include_e0: false,
        }
    }
}

impl LambdaBinning {
    fn domain_size(&self) -> usize {
        (1usize << self.bits) << (self.include_e0 as u8)
    }

    fn bin(&self, lambda: &OnticState, reference: &StateVector) -> i64 {
        let base = quantize(lambda.tau(), self.bits);
        if self.include_e0 {
            ((in_e0(lambda, reference) as i64) << self.bits) | base
        } else {
            base
        }
    }
}

/// Full description of one tabulation run.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub sampler: OnticSampler,
    pub menu_a: Vec<Setting>,
    pub menu_b: Vec<Setting>,
    /// Priors over the menu indices; `None` means uniform.
    pub prior_a: Option<Vec<f64>>,
    pub prior_b: Option<Vec<f64>>,
    pub prior_c: Option<Vec<f64>>,
    pub channel: DisclosureChannel,
    pub samples: u64,
    /// When present, the table carries the hidden-state bin variable `L`.
    pub lambda: Option<LambdaBinning>,
}

fn cumulative_prior(prior: &Option<Vec<f64>>, len: usize, which: &'static str) -> Result<Vec<f64>> {
    let p = match prior {
        None => vec![1.0 / len as f64; len],
        Some(p) => {
            if p.len() != len {
                return Err(Error::InvalidPrior {
                    which,
                    reason: format!("expected {len} entries, got {}", p.len()),
                });
            }
            if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidPrior {
                    which,
                    reason: "entries must be finite and non-negative".into(),
                });
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidPrior {
                    which,
                    reason: format!("sums to {total}"),
                });
            }
            p.clone()
        }
    };
    let mut cum = Vec::with_capacity(len);
    let mut acc = 0.0;
    for x in &p {
        acc += x;
        cum.push(acc);
    }
    cum[len - 1] = 1.0;
    Ok(cum)
}

fn draw<R: Rng + ?Sized>(cum: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>();
    cum.iter().position(|c| u < *c).unwrap_or(cum.len() - 1)
}

/// Fixed number of independent random substreams the sample budget is split
/// over. Tallies merge by addition, so the result does not depend on how the
/// substreams are scheduled over worker threads.
const STREAM_CHUNKS: u64 = 64;

struct RunContext {
    vars: Vec<VariableSpec>,
    strides: Vec<usize>,
    kind: ModelKind,
    psi: StateVector,
    reference: StateVector,
    menu_b_len: usize,
    bases: Vec<JointEigenbasis>,
    psi_cums: Vec<[f64; 4]>,
    labels: Vec<[(i8, i8); 4]>,
    cum_a: Vec<f64>,
    cum_b: Vec<f64>,
    cum_c: Vec<f64>,
    channel: DisclosureChannel,
    lambda: Option<LambdaBinning>,
}

impl RunContext {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        if cfg.menu_a.is_empty() {
            return Err(Error::EmptyMenu { which: "menu_a" });
        }
        if cfg.menu_b.is_empty() {
            return Err(Error::EmptyMenu { which: "menu_b" });
        }
        if cfg.samples == 0 {
            return Err(Error::ZeroSamples);
        }
        let cum_a = cumulative_prior(&cfg.prior_a, cfg.menu_a.len(), "A")?;
        let cum_b = cumulative_prior(&cfg.prior_b, cfg.menu_b.len(), "B")?;
        let cum_c = cumulative_prior(&cfg.prior_c, cfg.channel.settings(), "C")?;

        let psi = *cfg.sampler.psi();
        let reference = *cfg.sampler.reference();
        let mut bases = Vec::with_capacity(cfg.menu_a.len() * cfg.menu_b.len());
        let mut psi_cums = Vec::with_capacity(bases.capacity());
        let mut labels = Vec::with_capacity(bases.capacity());
        for a in &cfg.menu_a {
            for b in &cfg.menu_b {
                let basis = JointEigenbasis::new(*a, *b, reference);
                psi_cums.push(basis.cumulative_weights(&psi));
                labels.push(*basis.outcomes());
                bases.push(basis);
            }
        }

        let mut vars = vec![
            VariableSpec::indexed("A", cfg.menu_a.len())?,
            VariableSpec::indexed("B", cfg.menu_b.len())?,
            VariableSpec::indexed("C", cfg.channel.settings())?,
            VariableSpec::sign("X"),
            VariableSpec::sign("Y"),
            VariableSpec::indexed("Z", cfg.channel.output_domain_size())?,
        ];
        if let Some(binning) = &cfg.lambda {
            vars.push(VariableSpec::indexed("L", binning.domain_size())?);
        }
        let mut strides = vec![1usize; vars.len()];
        for i in (0..vars.len() - 1).rev() {
            strides[i] = strides[i + 1] * vars[i + 1].domain.len();
        }
        Ok(Self {
            vars,
            strides,
            kind: cfg.sampler.kind(),
            psi,
            reference,
            menu_b_len: cfg.menu_b.len(),
            bases,
            psi_cums,
            labels,
            cum_a,
            cum_b,
            cum_c,
            channel: cfg.channel.clone(),
            lambda: cfg.lambda,
        })
    }

    fn num_cells(&self) -> usize {
        self.vars.iter().map(|v| v.domain.len()).product()
    }

    fn run_chunk<R: Rng + ?Sized>(
        &self,
        n: u64,
        rng: &mut R,
        region: &mut E0Sampler,
        tally: &mut [u64],
    ) -> Result<()> {
        let nb = self.menu_b_len;
        for _ in 0..n {
            let a = draw(&self.cum_a, rng);
            let b = draw(&self.cum_b, rng);
            let c = draw(&self.cum_c, rng);
            let lambda = match self.kind {
                ModelKind::Ontic => sample_ontic(&self.psi, rng),
                ModelKind::Epistemic => sample_epistemic_with(region, &self.psi, rng)?,
            };
            let pair = a * nb + b;
            let j = if lambda.phi().bit_equal(&self.psi) {
                index_from_cumulative(&self.psi_cums[pair], lambda.tau())
            } else {
                assigned_index(&lambda, &self.bases[pair])
            };
            let (x, y) = self.labels[pair][j];
            let z = self.channel.disclose(&lambda, &self.reference, c) as usize;

            let mut idx = a * self.strides[0]
                + b * self.strides[1]
                + c * self.strides[2]
                + ((x > 0) as usize) * self.strides[3]
                + ((y > 0) as usize) * self.strides[4]
                + z * self.strides[5];
            if let Some(binning) = &self.lambda {
                idx += binning.bin(&lambda, &self.reference) as usize * self.strides[6];
            }
            tally[idx] += 1;
        }
        Ok(())
    }
}

/// Runs the scenario for `cfg.samples` trials and returns the joint occurrence
/// table over `(A, B, C, X, Y, Z)` and, when configured, the hidden-state bin
/// `L`.
///
/// The sample budget is split over [`STREAM_CHUNKS`] independent seeded
/// substreams, so the resulting table is bit-identical for a fixed
/// `(config, seed)` regardless of `workers`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    seed: u64,
    workers: usize,
) -> Result<ProbabilityTable> {
    let ctx = RunContext::new(cfg)?;
    let num_cells = ctx.num_cells();
    let chunk_sizes: Vec<u64> = (0..STREAM_CHUNKS)
        .map(|c| cfg.samples / STREAM_CHUNKS + u64::from(c < cfg.samples % STREAM_CHUNKS))
        .collect();
    let workers = workers.clamp(1, STREAM_CHUNKS as usize);

    let next = AtomicU64::new(0);
    let ctx_ref = &ctx;
    let chunks_ref = &chunk_sizes;
    let next_ref = &next;
    let locals: Vec<Result<Vec<u64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(move || -> Result<Vec<u64>> {
                    let mut local = vec![0u64; num_cells];
                    let mut region = E0Sampler::new(ctx_ref.reference);
                    loop {
                        let chunk = next_ref.fetch_add(1, Ordering::Relaxed);
                        if chunk >= STREAM_CHUNKS {
                            break;
                        }
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        rng.set_stream(chunk + 1);
                        ctx_ref.run_chunk(
                            chunks_ref[chunk as usize],
                            &mut rng,
                            &mut region,
                            &mut local,
                        )?;
                    }
                    Ok(local)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("tabulation worker panicked"))
            .collect()
    });

    let mut counts = vec![0u64; num_cells];
    for local in locals {
        for (total, x) in counts.iter_mut().zip(local?) {
            *total += x;
        }
    }
    ProbabilityTable::from_counts(ctx.vars, counts)
}
