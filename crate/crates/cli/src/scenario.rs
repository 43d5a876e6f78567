//! Scenario files: TOML documents with `[channel]`, `[feedback]`, `[power]`,
//! `[optimizer]` and `[sim]` sections. Unknown keys are rejected and powers
//! given in dB are converted to linear scale while parsing.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use wiretap::channel::ColluderModel;
use wiretap::mc::SimConfig;
use wiretap::optimizer::OptimizerSpec;
use wiretap::{FeedbackTopology, GainDistribution, Scenario};

/// A gain law as written in a scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LawSpec {
    /// Rayleigh fading: exponential power gain with the given mean.
    Rayleigh { mean: f64 },
    Exponential { mean: f64 },
    Erlang { shape: u32, scale: f64 },
    PointMass { value: f64 },
    Empirical { samples: Vec<f64> },
}

impl LawSpec {
    pub fn build(&self) -> wiretap::Result<GainDistribution> {
        match self {
            LawSpec::Rayleigh { mean } => GainDistribution::rayleigh(*mean),
            LawSpec::Exponential { mean } => GainDistribution::exponential(*mean),
            LawSpec::Erlang { shape, scale } => GainDistribution::erlang(*shape, *scale),
            LawSpec::PointMass { value } => GainDistribution::point_mass(*value),
            LawSpec::Empirical { samples } => GainDistribution::empirical(samples.clone()),
        }
    }
}

fn unit_rayleigh() -> LawSpec {
    LawSpec::Rayleigh { mean: 1.0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(rename = "K")]
    pub k: usize,
    /// Law shared by all receivers, unless `mains` lists one per receiver.
    #[serde(default = "unit_rayleigh")]
    pub main: LawSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mains: Option<Vec<LawSpec>>,
    /// Per-eavesdropper law; defaults to Rayleigh with mean `sigma_e2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eve: Option<LawSpec>,
    #[serde(default = "one")]
    pub sigma_e2: f64,
    #[serde(default = "single")]
    pub colluders: ColluderModel,
}

fn one() -> f64 {
    1.0
}

fn single() -> ColluderModel {
    ColluderModel::Single
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackSection {
    pub b: u32,
    #[serde(default)]
    pub topology: FeedbackTopology,
    #[serde(default)]
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPower {
    #[serde(rename = "P_avg_dB")]
    db: Option<f64>,
    #[serde(rename = "P_avg")]
    linear: Option<f64>,
}

/// Average power, always linear after parsing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    #[serde(rename = "P_avg")]
    pub p_avg: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    channel: ChannelSection,
    feedback: FeedbackSection,
    power: RawPower,
    #[serde(default)]
    optimizer: OptimizerSpec,
    #[serde(default)]
    sim: SimConfig,
}

/// Parsed, canonical scenario document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub channel: ChannelSection,
    pub feedback: FeedbackSection,
    pub power: PowerSection,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub sim: SimConfig,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}

impl Default for ScenarioFile {
    /// Three unit-mean Rayleigh receivers, a unit-mean eavesdropper, two bits, 5 dB.
    fn default() -> Self {
        ScenarioFile {
            channel: ChannelSection {
                k: 3,
                main: unit_rayleigh(),
                mains: None,
                eve: None,
                sigma_e2: 1.0,
                colluders: ColluderModel::Single,
            },
            feedback: FeedbackSection { b: 2, topology: FeedbackTopology::PerReceiver, epsilon: 0.0 },
            power: PowerSection { p_avg: db_to_linear(5.0) },
            optimizer: OptimizerSpec::default(),
            sim: SimConfig::default(),
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawFile = toml::from_str(text).context("invalid scenario file")?;
        let p_avg = match (raw.power.db, raw.power.linear) {
            (Some(db), None) => db_to_linear(db),
            (None, Some(p)) => p,
            _ => bail!("[power] needs exactly one of P_avg_dB and P_avg"),
        };
        let file = ScenarioFile {
            channel: raw.channel,
            feedback: raw.feedback,
            power: PowerSection { p_avg },
            optimizer: raw.optimizer,
            sim: raw.sim,
        };
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(m) = &self.channel.mains {
            if m.len() != self.channel.k {
                bail!("[channel] mains lists {} laws but K = {}", m.len(), self.channel.k);
            }
        }
        self.optimizer.validate().context("[optimizer]")?;
        self.sim.validate().context("[sim]")?;
        self.scenario().map(|_| ())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario files always serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn eve_base(&self) -> LawSpec {
        self.channel.eve.clone().unwrap_or(LawSpec::Rayleigh { mean: self.channel.sigma_e2 })
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let c = &self.channel;
        let mains = match &c.mains {
            Some(m) => m.iter().map(LawSpec::build).collect::<wiretap::Result<Vec<_>>>()?,
            None => vec![c.main.build().context("[channel] main")?; c.k],
        };
        let eve = c.colluders.effective_law(&self.eve_base().build().context("[channel] eve")?, self.sim.seed)?;
        let scn = Scenario::new(mains, eve, self.feedback.b, self.power.p_avg)
            .context("[channel]/[feedback]/[power]")?
            .with_epsilon(self.feedback.epsilon)
            .context("[feedback] epsilon")?
            .with_topology(self.feedback.topology);
        Ok(scn)
    }

    /// Copy with the seed of both the optimizer and the simulator replaced.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.optimizer.seed = seed;
        self.sim.seed = seed;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"
[channel]
K = 3
sigma_e2 = 0.5

[feedback]
b = 2
epsilon = 0.2

[power]
P_avg_dB = 10.0

[optimizer]
restarts = 4

[sim]
num_blocks = 20000
batch_size = 200
"#;

    #[test]
    fn parses_and_converts_db() {
        let f = ScenarioFile::parse(DOC).unwrap();
        assert!((f.power.p_avg - 10.0).abs() < 1e-12);
        assert_eq!(f.optimizer.restarts, 4);
        let scn = f.scenario().unwrap();
        assert_eq!((scn.k(), scn.b, scn.epsilon), (3, 2, 0.2));
        assert!((scn.eve.mean() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn round_trip_keeps_hash() {
        let f = ScenarioFile::parse(DOC).unwrap();
        let again = ScenarioFile::parse(&f.to_toml().unwrap()).unwrap();
        assert_eq!(f, again);
        assert_eq!(f.hash(), again.hash());
        assert_eq!(f.hash().len(), 64);
        assert_ne!(f.hash(), f.clone().with_seed(9).hash());
    }

    #[test]
    fn rejects_unknown_keys_with_location() {
        let err = ScenarioFile::parse(&DOC.replace("sigma_e2", "sigma_e")).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("sigma_e") && msg.contains("line"), "{msg}");
        assert!(ScenarioFile::parse(&DOC.replace("restarts", "restart")).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ScenarioFile::parse(&DOC.replace("epsilon = 0.2", "epsilon = 1.5")).is_err());
        assert!(ScenarioFile::parse(&DOC.replace("P_avg_dB = 10.0", "P_avg_dB = 1.0\nP_avg = 2.0")).is_err());
        assert!(ScenarioFile::parse(&DOC.replace("batch_size = 200", "batch_size = 300")).is_err());
    }

    #[test]
    fn per_receiver_and_colluding_laws() {
        let doc = r#"
[channel]
K = 2
mains = [{ law = "rayleigh", mean = 1.0 }, { law = "erlang", shape = 2, scale = 0.5 }]
eve = { law = "exponential", mean = 0.4 }
colluders = { mode = "colluding", count = 3 }

[feedback]
b = 1

[power]
P_avg = 2.0
"#;
        let f = ScenarioFile::parse(doc).unwrap();
        let scn = f.scenario().unwrap();
        assert_eq!(scn.eve, GainDistribution::erlang(3, 0.4).unwrap());
        assert!(ScenarioFile::parse(&doc.replace("K = 2", "K = 3")).is_err());
    }
}
