//! Channel-gain laws, eavesdropper combinations and the expectations built on them.

mod colluder;
mod expect;
mod law;

pub use colluder::{ColluderModel, CONVOLUTION_SAMPLES};
pub use expect::{
    conditional_pos_part_expectation, high_snr_ratio_partial, high_snr_threshold_expectation,
    interval_mass, log1p_expectation, log1p_partial, log2_partial_moment, pos_part_log_ratio_expectation,
    pos_part_log_ratio_partial,
};
pub(crate) use expect::mass_between;
pub use law::{Callback, CustomLaw, EmpiricalLaw, GainDistribution, IndependentMaxLaw, MaxOrderStatistic, SelfTest};
