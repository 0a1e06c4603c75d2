use irs_core::channel::{draw_realization, seeded_rng, ScenarioConfig};
use irs_core::oracle::enumerate_schedules;
use irs_core::system::{
    check_feasibility, effective_channel, effective_channel_cascaded, element_signal_power, harvested_power,
    irs_consumption, levels, mode_set, sinrs, sum_rate, ConstraintSet, IrsSchedule, PrecoderSet, SystemParams,
};
use irs_core::{Channel64, Cx};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;

fn scenario(seed: u64, users: usize, antennas: usize, elements: usize, bits: u32) -> (Channel64, SystemParams<f64>) {
    let cfg = ScenarioConfig { users, antennas, elements, bits, seed, ..Default::default() };
    let (_, ch) = draw_realization::<f64, _>(&cfg, &mut seeded_rng(seed, 0)).unwrap();
    (ch, SystemParams::from_config(&cfg))
}

fn random_precoders(seed: u64, users: usize, antennas: usize, power: f64) -> PrecoderSet<f64> {
    let mut rng = seeded_rng(seed, 77);
    let w: Vec<DVector<Cx<f64>>> = (0..users)
        .map(|_| DVector::from_fn(antennas, |_, _| Cx::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
        .collect();
    let p = PrecoderSet::new(w);
    let total = p.total_power();
    p.scaled((power / total).sqrt())
}

fn random_schedule(seed: u64, elements: usize, bits: u32) -> IrsSchedule<f64> {
    let mut rng = seeded_rng(seed, 78);
    let modes: Vec<usize> = (0..elements).map(|_| rng.random_range(0..=levels(bits))).collect();
    IrsSchedule::from_modes(bits, &modes).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rates_are_finite_and_nonnegative(seed in 0u64..10_000, users in 1usize..4, n in 1usize..12, bits in 1u32..4) {
        let (ch, sys) = scenario(seed, users, 3, n, bits);
        let irs = random_schedule(seed, n, bits);
        let p = random_precoders(seed, users, 3, sys.p_max);
        let r = sum_rate(&ch, &irs, &p).unwrap();
        prop_assert!(r.is_finite() && r >= 0.0);
        prop_assert_eq!(sum_rate(&ch, &irs, &p.scaled(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn sinr_ignores_common_phase(seed in 0u64..10_000, phase in 0.0f64..6.3) {
        let (ch, sys) = scenario(seed, 2, 4, 8, 2);
        let irs = random_schedule(seed, 8, 2);
        let p = random_precoders(seed, 2, 4, sys.p_max);
        let rotated = PrecoderSet::new(p.w.iter().map(|w| w.scale(1.0).map(|x| x * Cx::from_polar(1.0, phase))).collect());
        let a = sinrs(&ch, &irs, &p).unwrap();
        let b = sinrs(&ch, &irs, &rotated).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1e-30));
        }
    }

    #[test]
    fn cascaded_identity(seed in 0u64..10_000, n in 1usize..16, bits in 1u32..4) {
        let (ch, _) = scenario(seed, 2, 3, n, bits);
        let irs = random_schedule(seed, n, bits);
        for k in 0..2 {
            let direct = effective_channel(&ch, &irs, k).unwrap();
            let cascaded = effective_channel_cascaded(&ch, &irs.v(), k).unwrap();
            prop_assert!((&direct - &cascaded).norm() <= 1e-12 * direct.norm().max(1e-300));
        }
    }

    #[test]
    fn harvest_is_quadratic_in_precoder_scale(seed in 0u64..10_000, scale in 0.0f64..3.0) {
        let (ch, sys) = scenario(seed, 2, 4, 10, 2);
        let irs = random_schedule(seed, 10, 2);
        let p = random_precoders(seed, 2, 4, 1.0);
        let noise = sys.eta_h * ch.sigma_a2 * irs.harvesting_count();
        let base = harvested_power(&ch, &irs, &p, sys.eta_h).unwrap() - noise;
        let scaled = harvested_power(&ch, &irs, &p.scaled(scale), sys.eta_h).unwrap() - noise;
        prop_assert!((scaled - scale * scale * base).abs() <= 1e-9 * base.abs().max(1e-30));
    }

    #[test]
    fn modes_round_trip(seed in 0u64..10_000, n in 1usize..20, bits in 1u32..5) {
        let irs = random_schedule(seed, n, bits);
        let modes = irs.modes().unwrap();
        prop_assert_eq!(IrsSchedule::<f64>::from_modes(bits, &modes).unwrap(), irs.clone());
        prop_assert!(irs.is_binary() && irs.phases_in_set());
        let set = mode_set::<f64>(bits).unwrap();
        for (n, m) in modes.iter().enumerate() {
            prop_assert!((irs.alpha()[n] - set[*m]).norm() < 1e-15);
        }
        prop_assert_eq!(irs.harvesting_count(), modes.iter().filter(|m| **m == 0).count() as f64);
    }

    #[test]
    fn feasibility_report_matches_its_parts(seed in 0u64..10_000, load in 0.1f64..1.5) {
        let (ch, sys) = scenario(seed, 2, 4, 6, 2);
        let irs = random_schedule(seed, 6, 2);
        let p = random_precoders(seed, 2, 4, load * sys.p_max);
        let report = check_feasibility(&ch, &irs, &p, &sys, ConstraintSet::FULL).unwrap();
        prop_assert!((report.c1_slack - (sys.p_max - p.total_power())).abs() <= 1e-12 * sys.p_max);
        let c3 = harvested_power(&ch, &irs, &p, sys.eta_h).unwrap() - irs_consumption(&irs, sys.p_irs);
        prop_assert_eq!(report.c3_slack, c3);
        let expected = report.c1_slack >= -1e-7 * sys.p_max && c3 >= -1e-9;
        prop_assert_eq!(report.is_feasible(1e-7 * sys.p_max, 1e-9), expected);
        prop_assert!(report.worst_violation >= 0.0);
    }
}

#[test]
fn all_harvest_with_silent_ap_collects_only_noise() {
    let (ch, sys) = scenario(3, 2, 4, 12, 2);
    let irs = IrsSchedule::all_harvest(12, 2).unwrap();
    let silent = PrecoderSet::zeros(2, 4);
    let h = harvested_power(&ch, &irs, &silent, sys.eta_h).unwrap();
    assert!((h - sys.eta_h * 12.0 * ch.sigma_a2).abs() <= 1e-15 * h);
    assert_eq!(irs_consumption(&irs, sys.p_irs), 0.0);
    assert!(element_signal_power(&ch, &silent).iter().all(|e| *e == 0.0));
}

#[test]
fn enumeration_size_matches_radix() {
    for (n, bits) in [(1, 1), (2, 2), (4, 1), (3, 3)] {
        let count = enumerate_schedules(n, bits).unwrap().count();
        assert_eq!(count, (levels(bits) + 1).pow(n as u32));
    }
}

#[test]
fn evaluation_is_generic_over_precision() {
    let (ch, _) = scenario(9, 2, 4, 8, 2);
    let irs = random_schedule(9, 8, 2);
    let p = random_precoders(9, 2, 4, 1.0);
    let r64 = sum_rate(&ch, &irs, &p).unwrap();
    let ch32 = ch.cast::<f32>();
    let irs32 = IrsSchedule::<f32>::from_modes(2, &irs.modes().unwrap()).unwrap();
    let p32 = PrecoderSet::new(p.w.iter().map(|w| w.map(|x| Cx::new(x.re as f32, x.im as f32))).collect());
    let r32 = sum_rate(&ch32, &irs32, &p32).unwrap();
    assert!((r32 as f64 - r64).abs() <= 1e-3 * r64.max(1.0), "{r32} vs {r64}");
}
