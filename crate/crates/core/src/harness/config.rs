use serde::{Deserialize, Serialize};

use crate::ahp::AoConfig;
use crate::channel::{AngularModel, ArrayGeometry, ChannelParams, OffsetShape, SpreadAxes};
use crate::digital::{DigitalMethod, Structure};
use crate::error::{Error, Result};
use crate::fhp::Refinement;
use crate::metrics::PowerParams;

/// Precoding scheme evaluated by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    FhpHac,
    MkmAhp,
    AoShp,
    FullDigital,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::FhpHac,
        Scheme::MkmAhp,
        Scheme::AoShp,
        Scheme::FullDigital,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::FhpHac => "fhp_hac",
            Scheme::MkmAhp => "mkm_ahp",
            Scheme::AoShp => "ao_shp",
            Scheme::FullDigital => "full_digital",
        }
    }

    pub fn structure(&self) -> Structure {
        match self {
            Scheme::FhpHac => Structure::Full,
            Scheme::MkmAhp => Structure::Adaptive,
            Scheme::AoShp => Structure::Sub,
            Scheme::FullDigital => Structure::Digital,
        }
    }

    fn needs_equal_blocks(&self) -> bool {
        matches!(self, Scheme::MkmAhp | Scheme::AoShp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Mf,
    Zf,
    Rzf,
}

/// How the fully-connected design refines its baseband stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinementChoice {
    /// Effective-channel precoding up to `refinement_threshold` RF chains,
    /// least squares above.
    Auto,
    Ls,
    Effective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub clusters: usize,
    pub paths: usize,
    pub spread_deg: f64,
    pub offset: OffsetShape,
    pub axes: SpreadAxes,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            clusters: 5,
            paths: 10,
            spread_deg: 10.0,
            offset: OffsetShape::Uniform,
            axes: SpreadAxes::Both,
        }
    }
}

/// One Monte Carlo experiment. Every field has a default, so an empty
/// document describes the 8x8-antenna, 8-user reference setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub users: usize,
    /// RF chain counts to sweep.
    pub n_rf: Vec<usize>,
    pub snr_db: Vec<f64>,
    /// Phase resolutions to sweep; `0` means unquantized.
    pub q_bits: Vec<u32>,
    pub quantize_combiner: bool,
    pub quantize_precoder: bool,
    pub trials: usize,
    pub master_seed: u64,
    pub schemes: Vec<Scheme>,
    pub digital_method: MethodName,
    /// RZF regularizer; defaults to `K sigma^2 / P`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rzf_beta: Option<f64>,
    pub fhp_refinement: RefinementChoice,
    pub refinement_threshold: usize,
    /// Keep per-trial rates in the result.
    pub keep_raw: bool,
    pub bs_array: ArrayGeometry,
    pub user_array: ArrayGeometry,
    pub channel: ChannelConfig,
    pub ao: AoConfig,
    pub power: PowerParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            users: 8,
            n_rf: vec![8],
            snr_db: (-30..=0).step_by(5).map(f64::from).collect(),
            q_bits: vec![0],
            quantize_combiner: false,
            quantize_precoder: false,
            trials: 1000,
            master_seed: 1,
            schemes: Scheme::ALL.to_vec(),
            digital_method: MethodName::Zf,
            rzf_beta: None,
            fhp_refinement: RefinementChoice::Auto,
            refinement_threshold: 10,
            keep_raw: false,
            bs_array: ArrayGeometry::half_wavelength(8, 8),
            user_array: ArrayGeometry::half_wavelength(2, 2),
            channel: ChannelConfig::default(),
            ao: AoConfig::default(),
            power: PowerParams::default(),
        }
    }
}

fn bad(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::config(path, message)
}

fn check_array(path: &str, geom: &ArrayGeometry) -> Result<()> {
    if geom.horizontal == 0 {
        return Err(bad(format!("{path}.horizontal"), "must be at least 1"));
    }
    if geom.vertical == 0 {
        return Err(bad(format!("{path}.vertical"), "must be at least 1"));
    }
    if !(geom.spacing_ratio > 0.0 && geom.spacing_ratio.is_finite()) {
        return Err(bad(format!("{path}.spacing_ratio"), "must be positive"));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn tx_antennas(&self) -> usize {
        self.bs_array.elements()
    }

    pub fn method(&self) -> DigitalMethod {
        match self.digital_method {
            MethodName::Mf => DigitalMethod::Mf,
            MethodName::Zf => DigitalMethod::Zf,
            MethodName::Rzf => DigitalMethod::Rzf {
                beta: self.rzf_beta,
            },
        }
    }

    /// Baseband refinement the fully-connected design uses at `n_rf` chains.
    pub fn refinement_for(&self, n_rf: usize) -> Refinement {
        match self.fhp_refinement {
            RefinementChoice::Ls => Refinement::LeastSquares,
            RefinementChoice::Effective => Refinement::Effective(self.method()),
            RefinementChoice::Auto if n_rf <= self.refinement_threshold => {
                Refinement::Effective(self.method())
            }
            RefinementChoice::Auto => Refinement::LeastSquares,
        }
    }

    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams {
            bs_array: self.bs_array,
            user_arrays: vec![self.user_array; self.users],
            clusters_per_user: self.channel.clusters,
            paths_per_cluster: self.channel.paths,
            angular: AngularModel {
                spread: self.channel.spread_deg.to_radians(),
                shape: self.channel.offset,
                axes: self.channel.axes,
            },
        }
    }

    /// Phase resolution for index `q` of the sweep; `None` when unquantized.
    pub fn bits_at(&self, q: usize) -> Option<u32> {
        match self.q_bits[q] {
            0 => None,
            b => Some(b),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(bad("trials", "must be at least 1"));
        }
        if self.users == 0 {
            return Err(bad("users", "must be at least 1"));
        }
        check_array("bs_array", &self.bs_array)?;
        check_array("user_array", &self.user_array)?;
        let nt = self.tx_antennas();
        if self.users > nt {
            return Err(bad(
                "users",
                format!("{} users exceed {nt} transmit antennas", self.users),
            ));
        }
        for (field, empty) in [
            ("n_rf", self.n_rf.is_empty()),
            ("snr_db", self.snr_db.is_empty()),
            ("q_bits", self.q_bits.is_empty()),
            ("schemes", self.schemes.is_empty()),
        ] {
            if empty {
                return Err(bad(field, "must not be empty"));
            }
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return Err(bad(
                    format!("schemes[{i}]"),
                    format!("{} listed twice", s.name()),
                ));
            }
        }
        let equal_blocks = self.schemes.iter().any(Scheme::needs_equal_blocks);
        for (i, &n_rf) in self.n_rf.iter().enumerate() {
            if n_rf < self.users {
                return Err(bad(
                    format!("n_rf[{i}]"),
                    format!("{n_rf} RF chains cannot serve {} users", self.users),
                ));
            }
            if equal_blocks && !nt.is_multiple_of(n_rf) {
                return Err(bad(
                    format!("n_rf[{i}]"),
                    format!("{nt} antennas do not divide evenly over {n_rf} RF chains"),
                ));
            }
        }
        for (i, snr) in self.snr_db.iter().enumerate() {
            if !snr.is_finite() {
                return Err(bad(format!("snr_db[{i}]"), "must be finite"));
            }
        }
        for (i, &q) in self.q_bits.iter().enumerate() {
            if q > 32 {
                return Err(bad(format!("q_bits[{i}]"), "at most 32 bits"));
            }
        }
        if let Some(beta) = self.rzf_beta {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(bad("rzf_beta", "must be positive"));
            }
        }
        if self.channel.clusters == 0 {
            return Err(bad("channel.clusters", "must be at least 1"));
        }
        if self.channel.paths == 0 {
            return Err(bad("channel.paths", "must be at least 1"));
        }
        if !(self.channel.spread_deg >= 0.0 && self.channel.spread_deg.is_finite()) {
            return Err(bad("channel.spread_deg", "must be finite and nonnegative"));
        }
        if !(self.ao.epsilon > 0.0 && self.ao.epsilon.is_finite()) {
            return Err(bad("ao.epsilon", "must be positive"));
        }
        if self.ao.max_inner_iters == 0 {
            return Err(bad("ao.max_inner_iters", "must be at least 1"));
        }
        if self.ao.max_outer_iters == 0 {
            return Err(bad("ao.max_outer_iters", "must be at least 1"));
        }
        let p = &self.power;
        for (field, value) in [
            ("power.common", p.common),
            ("power.rf_chain", p.rf_chain),
            ("power.power_amplifier", p.power_amplifier),
            ("power.phase_shifter", p.phase_shifter),
            ("power.switch", p.switch),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(bad(field, "must be finite and nonnegative"));
            }
        }
        Ok(())
    }

    /// Serializes to the TOML form accepted by [`parse_config`].
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Parses and validates a TOML scenario; missing fields take their defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| bad("", e.message()))?;
    let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        bad(
            if path == "." { String::new() } else { path },
            e.inner().message(),
        )
    })?;
    config.validate()?;
    Ok(config)
}
