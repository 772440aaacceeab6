//! SINR, sum rate, hardware power consumption and power efficiency.

use serde::{Deserialize, Serialize};

use crate::channel::{equivalent_channel, ChannelRealization};
use crate::digital::{HybridPrecoder, Structure};
use crate::error::{Error, Result};
use crate::numerics::{CMatrix, CVector};

/// Per-user SINR with transmit power `power` split evenly over the `K`
/// streams and total noise `K * noise`:
/// `P |G_kk|^2 / (K sigma^2 + sum_{l != k} P |G_kl|^2)`, `G = H_eq F`.
pub fn sinr_from_cascade(
    h_eq: &CMatrix,
    cascade: &CMatrix,
    power: f64,
    noise: f64,
) -> Result<Vec<f64>> {
    if h_eq.ncols() != cascade.nrows() || h_eq.nrows() != cascade.ncols() {
        return Err(Error::InvalidInput(format!(
            "H_eq is {}x{} but the precoder is {}x{}",
            h_eq.nrows(),
            h_eq.ncols(),
            cascade.nrows(),
            cascade.ncols()
        )));
    }
    let k = h_eq.nrows();
    let gains = h_eq * cascade;
    Ok((0..k)
        .map(|u| {
            let signal = power * gains[(u, u)].norm_sqr();
            let interference: f64 = (0..k)
                .filter(|&l| l != u)
                .map(|l| power * gains[(u, l)].norm_sqr())
                .sum();
            signal / (k as f64 * noise + interference)
        })
        .collect())
}

pub fn sinr_per_user(
    realization: &ChannelRealization,
    combiners: &[CVector],
    precoder: &HybridPrecoder,
    power: f64,
    noise: f64,
) -> Result<Vec<f64>> {
    let h_eq = equivalent_channel(realization, combiners)?;
    sinr_from_cascade(&h_eq, &precoder.cascade(), power, noise)
}

/// `sum_k log2(1 + SINR_k)`.
pub fn spectral_efficiency(sinrs: &[f64]) -> Result<f64> {
    if let Some(bad) = sinrs.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "SINR must be nonnegative, got {bad}"
        )));
    }
    Ok(sinrs
        .iter()
        .map(|s| s.ln_1p() / std::f64::consts::LN_2)
        .sum())
}

/// Hardware power figures in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerParams {
    /// Baseband and common circuitry.
    pub common: f64,
    pub rf_chain: f64,
    pub power_amplifier: f64,
    pub phase_shifter: f64,
    pub switch: f64,
}

impl Default for PowerParams {
    fn default() -> Self {
        Self {
            common: 10.0,
            rf_chain: 0.1,
            power_amplifier: 0.1,
            phase_shifter: 0.02,
            switch: 0.01,
        }
    }
}

impl PowerParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.common,
            self.rf_chain,
            self.power_amplifier,
            self.phase_shifter,
            self.switch,
        ];
        if all.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidConfig(
                "power figures must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Total transmitter power for `antennas` antennas and `rf_chains` chains.
///
/// Fully connected: one phase shifter per (chain, antenna) pair. Sub and
/// adaptive: one phase shifter per antenna, plus one switch per antenna for
/// the adaptive network. Digital: one chain and amplifier per antenna.
pub fn power_consumption(
    structure: Structure,
    antennas: usize,
    rf_chains: usize,
    params: &PowerParams,
) -> f64 {
    let nt = antennas as f64;
    let n_rf = rf_chains as f64;
    // Summed in a fixed order: common, amplifiers, phase shifters, switches,
    // chains. This order reproduces the reference wattages bit for bit.
    let amplified = params.common + nt * params.power_amplifier;
    match structure {
        Structure::Full => amplified + n_rf * nt * params.phase_shifter + n_rf * params.rf_chain,
        Structure::Sub => amplified + nt * params.phase_shifter + n_rf * params.rf_chain,
        Structure::Adaptive => {
            amplified + nt * params.phase_shifter + nt * params.switch + n_rf * params.rf_chain
        }
        Structure::Digital => amplified + nt * params.rf_chain,
    }
}

/// `R / P`.
pub fn power_efficiency(rate: f64, power_watts: f64) -> Result<f64> {
    if !(power_watts > 0.0) {
        return Err(Error::InvalidInput(format!(
            "power must be positive, got {power_watts}"
        )));
    }
    Ok(rate / power_watts)
}

/// Aggregate over the trials of one (scenario, scheme, grid point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub scenario: String,
    pub scheme: String,
    pub structure: Structure,
    pub snr_db: f64,
    pub n_rf: usize,
    /// Phase resolution in bits; `None` for unquantized.
    pub q_bits: Option<u32>,
    pub mean_rate: f64,
    pub power_watts: f64,
    pub eta: f64,
    pub mean_outer_iters: Option<f64>,
    pub mean_inner_iters: Option<f64>,
    pub trials: usize,
    pub seed: u64,
}
