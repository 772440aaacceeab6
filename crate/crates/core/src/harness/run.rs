use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{RefinementChoice, ScenarioConfig, Scheme};
use crate::ahp::{ao_shp, mkm_ahp};
use crate::channel::{generate_channels, CombinerSet};
use crate::digital::{full_digital_precoder, HybridPrecoder, LinkContext, Structure};
use crate::error::{Error, Result};
use crate::fhp::hac_fhp;
use crate::metrics::{
    power_consumption, power_efficiency, sinr_from_cascade, spectral_efficiency, MetricsRecord,
};
use crate::numerics::CMatrix;

/// Transmit power; the SNR sweep moves the noise floor instead.
pub const TX_POWER: f64 = 1.0;

/// Noise power for `snr_db` under `SNR = P / sigma^2` with `P = 1`.
pub fn noise_power(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial`, a pure function of the master seed and the index.
pub fn child_seed(master_seed: u64, trial: usize) -> u64 {
    splitmix64(master_seed ^ splitmix64(trial as u64))
}

/// Per-trial samples behind one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSamples {
    pub rates: Vec<f64>,
    /// Fingerprint of the channel realization each trial's design consumed.
    pub channel_hashes: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub library_version: String,
    pub timestamp_unix: u64,
    pub master_seed: u64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: ScenarioConfig,
    pub records: Vec<MetricsRecord>,
    /// Aligned with `records` when `keep_raw` is set.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub raw: Option<Vec<RawSamples>>,
    pub provenance: Provenance,
}

impl RunResult {
    pub fn record(
        &self,
        scheme: Scheme,
        n_rf: usize,
        q_bits: Option<u32>,
        snr_db: f64,
    ) -> Option<&MetricsRecord> {
        self.records.iter().find(|r| {
            r.scheme == scheme.name() && r.n_rf == n_rf && r.q_bits == q_bits && r.snr_db == snr_db
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Sample {
    rate: f64,
    outer: Option<f64>,
    inner: Option<f64>,
    channel_hash: u64,
}

struct Layout {
    n_q: usize,
    n_rf: usize,
    n_schemes: usize,
    n_snr: usize,
}

impl Layout {
    fn new(config: &ScenarioConfig) -> Self {
        Self {
            n_q: config.q_bits.len(),
            n_rf: config.n_rf.len(),
            n_schemes: config.schemes.len(),
            n_snr: config.snr_db.len(),
        }
    }

    fn len(&self) -> usize {
        self.n_q * self.n_rf * self.n_schemes * self.n_snr
    }

    fn index(&self, q: usize, rf: usize, scheme: usize, snr: usize) -> usize {
        ((q * self.n_rf + rf) * self.n_schemes + scheme) * self.n_snr + snr
    }
}

struct Designed {
    precoder: HybridPrecoder,
    outer: Option<f64>,
    inner: Option<f64>,
}

fn design(
    config: &ScenarioConfig,
    scheme: Scheme,
    f_opt: &CMatrix,
    n_rf: usize,
    ctx: &LinkContext<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<Designed> {
    let method = config.method();
    Ok(match scheme {
        Scheme::FullDigital => Designed {
            precoder: HybridPrecoder::digital(f_opt.clone()),
            outer: None,
            inner: None,
        },
        Scheme::FhpHac => Designed {
            precoder: hac_fhp(f_opt, n_rf, config.refinement_for(n_rf), ctx)?.precoder,
            outer: None,
            inner: None,
        },
        Scheme::MkmAhp => {
            let d = mkm_ahp(f_opt, n_rf, &config.ao, method, ctx, rng)?;
            Designed {
                outer: Some(d.outer_iterations as f64),
                inner: Some(d.mean_inner_iterations()),
                precoder: d.precoder,
            }
        }
        Scheme::AoShp => {
            let d = ao_shp(f_opt, n_rf, &config.ao, method, ctx, rng)?;
            Designed {
                outer: None,
                inner: Some(d.mean_inner_iterations()),
                precoder: d.precoder,
            }
        }
    })
}

/// RNG for one design. It does not depend on the SNR point or the phase
/// resolution, so those sweeps reuse the same random initializations.
fn design_rng(trial_seed: u64, scheme: Scheme, rf_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let code = Scheme::ALL
        .iter()
        .position(|s| *s == scheme)
        .expect("known scheme") as u64;
    rng.set_stream(1 + ((code << 32) | rf_index as u64));
    rng
}

fn evaluate_trial(config: &ScenarioConfig, layout: &Layout, seed: u64) -> Result<Vec<Sample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let realization = generate_channels(&config.channel_params(), &mut rng)?;
    let channel_hash = realization.fingerprint();
    let method = config.method();
    let noises: Vec<f64> = config.snr_db.iter().map(|&s| noise_power(s)).collect();
    let mut samples = vec![Sample::default(); layout.len()];

    for q in 0..layout.n_q {
        let bits = config.bits_at(q);
        let combiner_bits = bits.filter(|_| config.quantize_combiner);
        let rf_bits = bits.filter(|_| config.quantize_precoder);
        let combiners = CombinerSet::design(&realization, combiner_bits)?;
        let h_eq = &combiners.h_eq;

        // A design that does not depend on the noise level is computed once
        // and evaluated at every SNR point.
        let per_snr = method.depends_on_snr();
        let targets: Vec<CMatrix> = if per_snr {
            noises
                .iter()
                .map(|&n| full_digital_precoder(h_eq, method, TX_POWER, n))
                .collect::<Result<_>>()?
        } else {
            vec![full_digital_precoder(h_eq, method, TX_POWER, noises[0])?]
        };

        for (ri, &n_rf) in config.n_rf.iter().enumerate() {
            for (si, &scheme) in config.schemes.iter().enumerate() {
                let mut designed: Option<Designed> = None;
                for (snr_i, &noise) in noises.iter().enumerate() {
                    if per_snr || designed.is_none() {
                        let f_opt = &targets[if per_snr { snr_i } else { 0 }];
                        let ctx =
                            LinkContext::new(h_eq, TX_POWER, noise).with_rf_phase_bits(rf_bits);
                        let mut rng = design_rng(seed, scheme, ri);
                        designed = Some(design(config, scheme, f_opt, n_rf, &ctx, &mut rng)?);
                    }
                    let d = designed.as_ref().expect("designed above");
                    let sinrs = sinr_from_cascade(h_eq, &d.precoder.cascade(), TX_POWER, noise)?;
                    samples[layout.index(q, ri, si, snr_i)] = Sample {
                        rate: spectral_efficiency(&sinrs)?,
                        outer: d.outer,
                        inner: d.inner,
                        channel_hash,
                    };
                }
            }
        }
    }
    Ok(samples)
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

/// Runs every trial and aggregates one record per
/// (phase resolution, RF chain count, scheme, SNR point), in that nesting order.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunResult> {
    run_with(config, &RunOptions::default())
}

pub fn run_with(config: &ScenarioConfig, options: &RunOptions) -> Result<RunResult> {
    config.validate()?;
    let layout = Layout::new(config);
    let seeds: Vec<u64> = (0..config.trials)
        .map(|t| child_seed(config.master_seed, t))
        .collect();

    let evaluate = || -> Vec<Result<Vec<Sample>>> {
        (0..config.trials)
            .into_par_iter()
            .map(|t| evaluate_trial(config, &layout, seeds[t]))
            .collect()
    };
    let outcomes = match options.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(evaluate),
        None => evaluate(),
    };
    let mut trials = Vec::with_capacity(outcomes.len());
    for (t, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(samples) => trials.push(samples),
            Err(source) => {
                return Err(Error::Trial {
                    trial: t,
                    seed: seeds[t],
                    source: Box::new(source),
                })
            }
        }
    }

    let n = config.trials;
    let nt = config.tx_antennas();
    let mut records = Vec::with_capacity(layout.len());
    let mut raw = config.keep_raw.then(Vec::new);
    for q in 0..layout.n_q {
        for (ri, &n_rf) in config.n_rf.iter().enumerate() {
            for (si, &scheme) in config.schemes.iter().enumerate() {
                for (snr_i, &snr_db) in config.snr_db.iter().enumerate() {
                    let idx = layout.index(q, ri, si, snr_i);
                    let column = || trials.iter().map(move |s| s[idx]);
                    let mean_rate = mean(column().map(|s| s.rate), n);
                    let structure = scheme.structure();
                    let chains = if structure == Structure::Digital {
                        nt
                    } else {
                        n_rf
                    };
                    let power_watts = power_consumption(structure, nt, chains, &config.power);
                    let outer = column()
                        .next()
                        .and_then(|s| s.outer)
                        .map(|_| mean(column().map(|s| s.outer.unwrap_or(0.0)), n));
                    let inner = column()
                        .next()
                        .and_then(|s| s.inner)
                        .map(|_| mean(column().map(|s| s.inner.unwrap_or(0.0)), n));
                    records.push(MetricsRecord {
                        scenario: config.name.clone(),
                        scheme: scheme.name().into(),
                        structure,
                        snr_db,
                        n_rf,
                        q_bits: config.bits_at(q),
                        mean_rate,
                        power_watts,
                        eta: power_efficiency(mean_rate, power_watts)?,
                        mean_outer_iters: outer,
                        mean_inner_iters: inner,
                        trials: n,
                        seed: config.master_seed,
                    });
                    if let Some(raw) = raw.as_mut() {
                        raw.push(RawSamples {
                            rates: column().map(|s| s.rate).collect(),
                            channel_hashes: column().map(|s| s.channel_hash).collect(),
                        });
                    }
                }
            }
        }
    }

    let mut notes = Vec::new();
    if config.schemes.contains(&Scheme::FullDigital) {
        notes.push(
            "full_digital power assumes one RF chain and amplifier per antenna and no phase shifters (extrapolated model)"
                .to_string(),
        );
    }
    if config.schemes.contains(&Scheme::FhpHac) && config.n_rf.iter().any(|&r| r > 2 * config.users)
    {
        notes.push(
            "fhp_hac with more than 2K RF chains repeats the exact decomposition's columns"
                .to_string(),
        );
    }
    Ok(RunResult {
        config: config.clone(),
        records,
        raw,
        provenance: Provenance {
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            master_seed: config.master_seed,
            notes,
        },
    })
}

/// Largest RF chain count in `config.n_rf` at which effective-channel
/// refinement still matches or beats least squares for the fully-connected
/// design, averaged over the SNR grid. `None` if LS wins everywhere.
pub fn measure_refinement_threshold(config: &ScenarioConfig) -> Result<Option<usize>> {
    let mut base = config.clone();
    base.schemes = vec![Scheme::FhpHac];
    base.keep_raw = false;
    base.fhp_refinement = RefinementChoice::Ls;
    let ls = run_scenario(&base)?;
    base.fhp_refinement = RefinementChoice::Effective;
    let effective = run_scenario(&base)?;
    let average = |r: &RunResult, n_rf: usize| {
        let rates: Vec<f64> = r
            .records
            .iter()
            .filter(|x| x.n_rf == n_rf)
            .map(|x| x.mean_rate)
            .collect();
        rates.iter().sum::<f64>() / rates.len() as f64
    };
    Ok(config
        .n_rf
        .iter()
        .copied()
        .filter(|&n| average(&effective, n) >= average(&ls, n))
        .max())
}
