use super::GainDistribution;
use crate::{invalid, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Number of draws used when a colluding sum has no closed form.
pub const CONVOLUTION_SAMPLES: usize = 100_000;

/// How several eavesdroppers combine into one effective gain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "count", rename_all = "lowercase")]
pub enum ColluderModel {
    Single,
    /// Each decodes alone; the strongest one matters.
    NonColluding(u32),
    /// Observations are combined; gains add up.
    Colluding(u32),
}

impl ColluderModel {
    pub fn count(&self) -> u32 {
        match self {
            ColluderModel::Single => 1,
            ColluderModel::NonColluding(m) | ColluderModel::Colluding(m) => *m,
        }
    }

    /// Effective eavesdropper law built from the per-eavesdropper `base`.
    /// `seed` is only used for the sampled convolution fallback.
    pub fn effective_law(&self, base: &GainDistribution, seed: u64) -> Result<GainDistribution> {
        let m = self.count();
        if m == 0 {
            return invalid("eavesdropper count must be at least 1");
        }
        if m == 1 {
            return Ok(base.clone());
        }
        match self {
            ColluderModel::Single => Ok(base.clone()),
            ColluderModel::NonColluding(_) => GainDistribution::iid_max(base.clone(), m as u64),
            ColluderModel::Colluding(_) => match base {
                GainDistribution::Exponential { mean } => GainDistribution::erlang(m, *mean),
                GainDistribution::Erlang { shape, scale } => GainDistribution::erlang(shape * m, *scale),
                GainDistribution::PointMass { value } => GainDistribution::point_mass(value * m as f64),
                _ => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let samples = (0..CONVOLUTION_SAMPLES)
                        .map(|_| (0..m).map(|_| base.sample(&mut rng)).sum())
                        .collect();
                    GainDistribution::empirical(samples)
                }
            },
        }
    }
}
