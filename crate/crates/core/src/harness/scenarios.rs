//! Built-in named experiments, `fig2` through `fig8`.

use super::config::{MethodName, RefinementChoice, ScenarioConfig, Scheme};
use crate::ahp::InitMode;
use crate::channel::ArrayGeometry;
use crate::error::{Error, Result};

/// A named experiment; some figures need more than one run.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedScenario {
    pub name: &'static str,
    pub description: &'static str,
    pub configs: Vec<ScenarioConfig>,
}

pub const SCENARIO_NAMES: [&str; 7] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"];

const HYBRID: [Scheme; 3] = [Scheme::FhpHac, Scheme::MkmAhp, Scheme::AoShp];

fn base(name: impl Into<String>) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        ..ScenarioConfig::default()
    }
}

fn spectral_efficiency_vs_snr() -> Vec<ScenarioConfig> {
    vec![base("fig2")]
}

fn quantization() -> Vec<ScenarioConfig> {
    let mut c = base("fig3");
    c.snr_db = vec![-5.0];
    c.q_bits = vec![0, 1, 2, 3, 4, 5];
    c.quantize_combiner = true;
    c.quantize_precoder = true;
    c.schemes = HYBRID.to_vec();
    vec![c]
}

fn array_and_method() -> Vec<ScenarioConfig> {
    let mut out = Vec::new();
    for (label, vertical) in [("8x8", 8), ("8x32", 32)] {
        for method in [MethodName::Mf, MethodName::Zf, MethodName::Rzf] {
            let name = format!("fig4_{}_{label}", format!("{method:?}").to_lowercase());
            let mut c = base(name);
            c.bs_array = ArrayGeometry::half_wavelength(8, vertical);
            c.digital_method = method;
            c.schemes = vec![Scheme::MkmAhp];
            out.push(c);
        }
    }
    out
}

fn refinement_vs_chains() -> Vec<ScenarioConfig> {
    [
        ("ls", RefinementChoice::Ls),
        ("effective", RefinementChoice::Effective),
    ]
    .into_iter()
    .map(|(label, refinement)| {
        let mut c = base(format!("fig5_{label}"));
        c.snr_db = vec![-10.0];
        c.n_rf = vec![8, 10, 12, 14, 16];
        c.schemes = vec![Scheme::FhpHac];
        c.fhp_refinement = refinement;
        c
    })
    .collect()
}

fn power_efficiency() -> Vec<ScenarioConfig> {
    let mut c = base("fig6");
    c.snr_db = vec![-10.0];
    c.n_rf = vec![8, 16, 32, 64];
    c.schemes = HYBRID.to_vec();
    vec![c]
}

fn initialization(figure: &str, keep_raw: bool) -> Vec<ScenarioConfig> {
    [
        ("specific", InitMode::Specific),
        ("random", InitMode::Random),
    ]
    .into_iter()
    .map(|(label, mode)| {
        let mut c = base(format!("{figure}_{label}"));
        c.schemes = vec![Scheme::MkmAhp, Scheme::AoShp];
        c.ao.init_mode = mode;
        c.keep_raw = keep_raw;
        c
    })
    .collect()
}

pub fn named_scenarios() -> Vec<NamedScenario> {
    vec![
        NamedScenario {
            name: "fig2",
            description: "spectral efficiency vs SNR, all structures, N_RF = K = 8",
            configs: spectral_efficiency_vs_snr(),
        },
        NamedScenario {
            name: "fig3",
            description: "spectral efficiency vs phase-shifter resolution at -5 dB",
            configs: quantization(),
        },
        NamedScenario {
            name: "fig4",
            description: "adaptive design with MF/ZF/RZF targets on 8x8 and 8x32 arrays",
            configs: array_and_method(),
        },
        NamedScenario {
            name: "fig5",
            description: "fully-connected design vs RF chains, LS and effective-channel refinement, -10 dB",
            configs: refinement_vs_chains(),
        },
        NamedScenario {
            name: "fig6",
            description: "power efficiency vs RF chains at -10 dB",
            configs: power_efficiency(),
        },
        NamedScenario {
            name: "fig7",
            description: "spectral efficiency with specific vs random AO initialization (per-trial rates kept)",
            configs: initialization("fig7", true),
        },
        NamedScenario {
            name: "fig8",
            description: "AO iteration counts with specific vs random initialization",
            configs: initialization("fig8", false),
        },
    ]
}

pub fn scenario(name: &str) -> Result<NamedScenario> {
    named_scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "unknown scenario `{name}`; expected one of {}",
                SCENARIO_NAMES.join(", ")
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;

    #[test]
    fn every_named_scenario_is_valid_and_round_trips() {
        let all = named_scenarios();
        assert_eq!(
            all.iter().map(|s| s.name).collect::<Vec<_>>(),
            SCENARIO_NAMES
        );
        for s in all {
            assert!(!s.configs.is_empty());
            for c in &s.configs {
                c.validate().unwrap();
                assert_eq!(&parse_config(&c.to_toml().unwrap()).unwrap(), c);
            }
        }
    }

    #[test]
    fn lookup() {
        assert_eq!(scenario("fig4").unwrap().configs.len(), 6);
        assert_eq!(scenario("fig4").unwrap().configs[5].name, "fig4_rzf_8x32");
        assert!(scenario("fig9").is_err());
    }
}
