use proptest::prelude::*;
use wiretap::bccm::{bccm_point_bec, bccm_region, BccmMode};
use wiretap::mc::{mc_lower, SimConfig};
use wiretap::quantizer::{average_power, feasible};
use wiretap::rates::{cm_lower, cm_upper, im_lower, im_upper, Evaluator, Message};
use wiretap::{QuantizerPolicy, Scenario};

fn policy(scn: &Scenario, gaps: &[f64], weights: &[f64], p0: f64) -> QuantizerPolicy {
    let mut t = Vec::new();
    let mut x = 0.0;
    for g in gaps {
        x += g;
        t.push(x);
    }
    let gate = Evaluator::new(scn, Message::Common).gate().clone();
    let p = QuantizerPolicy::new(t, weights.to_vec()).unwrap().with_p0(p0);
    let used = average_power(&p, &gate);
    p.scaled(scn.p_avg / used * (1.0 - 1e-12))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bounds_are_ordered_for_any_policy(
        k in 1usize..5,
        b in 0u32..3,
        p_db in -5.0f64..25.0,
        s in 0.3f64..3.0,
        gaps in proptest::collection::vec(0.01f64..1.5, 4),
        weights in proptest::collection::vec(0.1f64..4.0, 4),
        p0 in 0.0f64..2.0,
    ) {
        let scn = Scenario::rayleigh(k, b, 10f64.powf(p_db / 10.0), s).unwrap();
        let q = scn.q();
        let pol = policy(&scn, &gaps[..q], &weights[..q], p0);
        let cm_gate = Evaluator::new(&scn, Message::Common).gate().clone();
        prop_assert!(feasible(&pol, &cm_gate, scn.p_avg));
        let lower = pol.clone().with_p0(0.0);
        let (cl, cu) = (cm_lower(&scn, &lower).unwrap(), cm_upper(&scn, &pol).unwrap());
        prop_assert!(cl >= 0.0 && cl <= cu + 1e-9);
        // The independent-message gate is the strongest receiver, so the same
        // thresholds may need rescaling there.
        let im_gate = Evaluator::new(&scn, Message::Independent).gate().clone();
        let im_pol = pol.scaled(scn.p_avg / average_power(&pol, &im_gate) * (1.0 - 1e-12));
        let (il, iu) = (im_lower(&scn, &im_pol.clone().with_p0(0.0)).unwrap(), im_upper(&scn, &im_pol).unwrap());
        prop_assert!(il >= 0.0 && il <= iu + 1e-9);
    }

    #[test]
    fn extra_bits_never_hurt_under_erasures(eps in 0.0f64..1.0, s in 0.3f64..2.0) {
        let scn = Scenario::rayleigh(2, 1, 3.0, s).unwrap().with_epsilon(eps).unwrap();
        let one = bccm_region(&scn, BccmMode::Bec { bits: 1 }, 4).unwrap().max_r1();
        let two = bccm_region(&scn, BccmMode::Bec { bits: 2 }, 4).unwrap().max_r1();
        prop_assert!(two >= one - 1e-9);
    }
}

#[test]
fn sampled_lower_bound_tracks_the_analytic_one() {
    let scn = Scenario::rayleigh(3, 2, 5.0, 0.8).unwrap();
    let pol = policy(&scn, &[0.1, 0.3, 0.5, 0.9], &[1.0, 2.0, 3.0, 4.0], 0.0);
    let sim = SimConfig::with_blocks(200_000, 9);
    for message in [Message::Common, Message::Independent] {
        let eval = Evaluator::new(&scn, message);
        let p = pol.scaled(scn.p_avg / average_power(&pol, eval.gate()) * (1.0 - 1e-12));
        let exact = eval.lower(&p).unwrap();
        let est = mc_lower(&scn, message, &p, &sim).unwrap();
        assert!(est.agrees_with(exact, 4.0), "{message:?}: {exact} vs {} +- {}", est.mean, est.stderr);
    }
}

#[test]
fn full_erasure_removes_the_confidential_rate() {
    let scn = Scenario::rayleigh(1, 1, 5.0, 1.0).unwrap();
    let split = wiretap::bccm::PowerSplit::new(0.5, 2.0, 0.5).unwrap();
    let clean = bccm_point_bec(&scn, &split, 1).unwrap();
    assert!(clean.r0 > 0.0 && clean.r1 > 0.0);
    let lost = bccm_point_bec(&scn.with_epsilon(1.0).unwrap(), &split, 1).unwrap();
    assert_eq!(lost.r1, 0.0);
    assert!(lost.r0 > 0.0);
}
