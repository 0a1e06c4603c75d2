//! End-to-end acceptance run: eight checks at their full sizes, one PASS/FAIL
//! line each. Exits non-zero if any check fails.

use std::time::{Duration, Instant};

use irs_core::channel::{draw_realization, seeded_rng, ScenarioConfig};
use irs_core::irs::{d2, grad_d2};
use irs_core::oracle::{exhaustive_oracle, finite_diff_check, montecarlo_harvest};
use irs_core::precoder::{channel_products, dc_parts, grad_d1, run_algorithm1, Alg1Params, Repair};
use irs_core::schemes::{run_proposed, run_scheme, SchemeKind, SchemeParams, SchemeResult};
use irs_core::system::{
    effective_channel_cascaded, harvested_power, sinrs, sinrs_from_effective, IrsSchedule, PrecoderSet, SystemParams,
};
use irs_core::{CMatrix, Channel64};
use irs_experiment::config::{SweepSpec, SweepVariable};
use irs_experiment::sweep::{run_sweep, write_csv_to, SweepTable};
use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn instance(seed: u64, users: usize, antennas: usize, elements: usize, bits: u32) -> (Channel64, SystemParams<f64>) {
    let cfg = ScenarioConfig { users, antennas, elements, bits, seed, ..Default::default() };
    let (_, ch) = draw_realization::<f64, _>(&cfg, &mut seeded_rng(seed, 0)).expect("valid scenario");
    (ch, SystemParams::from_config(&cfg))
}

fn random_modes(rng: &mut impl Rng, n: usize, bits: u32) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..=(1usize << bits))).collect()
}

/// Hermitian basis coordinates of a list of matrices.
fn to_coords(w: &[CMatrix<f64>]) -> Vec<f64> {
    let mut x = Vec::new();
    for m in w {
        let d = m.nrows();
        for i in 0..d {
            x.push(m[(i, i)].re);
            for j in i + 1..d {
                x.push(m[(i, j)].re);
                x.push(m[(i, j)].im);
            }
        }
    }
    x
}

fn from_coords(x: &[f64], users: usize, d: usize) -> Vec<CMatrix<f64>> {
    let mut it = x.iter();
    (0..users)
        .map(|_| {
            let mut m = DMatrix::zeros(d, d);
            for i in 0..d {
                m[(i, i)] = Complex::new(*it.next().unwrap(), 0.0);
                for j in i + 1..d {
                    let z = Complex::new(*it.next().unwrap(), *it.next().unwrap());
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
            m
        })
        .collect()
}

/// Gradient in the same coordinates: `d/dx Re tr(G W(x))`.
fn grad_coords(g: &[CMatrix<f64>]) -> Vec<f64> {
    let mut x = Vec::new();
    for m in g {
        let d = m.nrows();
        for i in 0..d {
            x.push(m[(i, i)].re);
            for j in i + 1..d {
                // W_ij = a + ib, W_ji = a - ib: tr(GW) gains G_ji (a + ib) + G_ij (a - ib).
                x.push((m[(j, i)] + m[(i, j)]).re);
                x.push((m[(j, i)] - m[(i, j)]).im * -1.0);
            }
        }
    }
    x
}

fn formula_oracles() -> Outcome {
    let mut rng = seeded_rng(11, 1);
    let mut worst_d1 = 0.0f64;
    for seed in 0..10 {
        let (ch, sys) = instance(100 + seed, 2, 2, 8, 2);
        let schedule = IrsSchedule::from_modes(2, &random_modes(&mut rng, 8, 2)).unwrap();
        let (_, m) = channel_products(&ch, &schedule).unwrap();
        // Random feasible lifted precoders: PSD, total trace below the budget.
        let mut w: Vec<CMatrix<f64>> = (0..2)
            .map(|_| {
                let a = DMatrix::from_fn(2, 2, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                &a * a.adjoint()
            })
            .collect();
        let total: f64 = w.iter().map(|x| x.trace().re).sum();
        let scale = sys.p_max * rng.random_range(0.2..1.0) / total;
        w.iter_mut().for_each(|x| *x = x.scale(scale));
        // Independent D1: minus the log of noise plus interference, summed over users.
        let d1 = |x: &[f64]| {
            let w = from_coords(x, 2, 2);
            (0..2)
                .map(|k| {
                    let interference: f64 = (0..2).filter(|j| *j != k).map(|j| (&w[j] * &m[k]).trace().re).sum();
                    -(ch.sigma_k2[k] + interference).log2()
                })
                .sum::<f64>()
        };
        let x = to_coords(&w);
        assert!((d1(&x) - dc_parts(&w, &m, &ch.sigma_k2).1).abs() <= 1e-9 * d1(&x).abs());
        let g = grad_coords(&grad_d1(&w, &m, &ch.sigma_k2));
        worst_d1 = worst_d1.max(finite_diff_check(d1, &g, &x, 1e-6).unwrap());
    }

    let (ch, sys) = instance(7, 2, 4, 16, 2);
    let sigma2 = ch.sigma_k2[0];
    let mut worst_d2 = 0.0f64;
    for iota in [0.0, 1e-6, 1e-3] {
        // Interference in units of the noise power, so the step scales with it.
        let f = |u: &[f64]| d2(u[0] * sigma2, sigma2);
        let u = iota / sigma2;
        let g = [grad_d2(iota, sigma2) * sigma2];
        worst_d2 = worst_d2.max(finite_diff_check(f, &g, &[u], 1e-6).unwrap());
    }

    let schedule = IrsSchedule::from_modes(2, &random_modes(&mut rng, 16, 2)).unwrap();
    let p = PrecoderSet::new(ch.h_d.iter().map(|h| h.unscale(h.norm()).scale((sys.p_max / 2.0).sqrt())).collect());
    let trace_form = harvested_power(&ch, &schedule, &p, sys.eta_h).unwrap();
    let empirical = montecarlo_harvest(&ch, &schedule, &p, sys.eta_h, 100_000, &mut seeded_rng(5, 9));
    let harvest_err = (empirical - trace_form).abs() / trace_form;

    let mut worst_sinr = 0.0f64;
    for seed in 0..10 {
        let (ch, _) = instance(200 + seed, 2, 4, 16, 2);
        let schedule = IrsSchedule::from_modes(2, &random_modes(&mut rng, 16, 2)).unwrap();
        let via_m = sinrs(&ch, &schedule, &p).unwrap();
        let v = schedule.v();
        let m: Vec<DVector<Complex<f64>>> = (0..2).map(|k| effective_channel_cascaded(&ch, &v, k).unwrap()).collect();
        let via_l = sinrs_from_effective(&m, &p, &ch.sigma_k2);
        for (a, b) in via_m.iter().zip(&via_l) {
            worst_sinr = worst_sinr.max((a - b).abs() / a.abs().max(1e-300));
        }
    }
    Outcome {
        pass: worst_d1 <= 1e-5 && worst_d2 <= 1e-5 && harvest_err <= 0.01 && worst_sinr <= 1e-12,
        detail: format!(
            "grad D1 err {worst_d1:.1e}, grad D2 err {worst_d2:.1e}, harvest MC err {:.3}%, SINR identity err {worst_sinr:.1e}",
            100.0 * harvest_err
        ),
    }
}

struct Desk {
    seeds: Vec<(Channel64, SystemParams<f64>)>,
    results: Vec<Vec<SchemeResult>>,
}

fn desk_runs() -> Desk {
    let params = SchemeParams::default();
    let seeds: Vec<_> = (0..20).map(|s| instance(s, 2, 4, 16, 2)).collect();
    let results = seeds
        .iter()
        .map(|(ch, sys)| SchemeKind::ALL.iter().map(|k| run_scheme(*k, ch, sys, &params).expect("scheme runs")).collect())
        .collect();
    Desk { seeds, results }
}

fn monotonicity(desk: &Desk) -> Outcome {
    let mut alg1 = 0.0f64;
    let mut alg2 = 0.0f64;
    let mut alg3 = 0.0f64;
    let mut rejected_steps = 0;
    for runs in &desk.results {
        let proposed = &runs[0];
        let d = &proposed.diagnostics;
        for (trace, rejected) in d.alg1_traces.iter().zip(&d.alg1_rejected) {
            for pair in trace.windows(2) {
                alg1 = alg1.max(pair[1] - pair[0]);
            }
            if let (Some(r), Some(last)) = (rejected, trace.last()) {
                alg1 = alg1.max(r - last);
            }
        }
        for steps in &d.alg2_steps {
            for s in steps {
                alg2 = alg2.max(s.after - s.before);
                rejected_steps += usize::from(!s.accepted);
            }
        }
        for trace in &d.start_traces {
            for pair in trace.windows(2) {
                alg3 = alg3.max(pair[0] - pair[1]);
            }
        }
    }
    Outcome {
        pass: alg1 <= 1e-6 && alg2 <= 1e-6 && alg3 <= 1e-5,
        detail: format!(
            "worst increase: precoder loop {alg1:.1e}, IRS loop {alg2:.1e} ({rejected_steps} steps not kept); worst outer decrease {alg3:.1e}"
        ),
    }
}

fn rank_one(desk: &Desk) -> Outcome {
    let params = Alg1Params::default();
    let mut tight = 0;
    let mut repaired_ok = 0;
    let mut worst: f64 = 0.0;
    for ((ch, sys), runs) in desk.seeds.iter().zip(&desk.results) {
        // Terminal iterate of a precoder loop on the final proposed schedule,
        // where the harvest constraint is typically active.
        let proposed = &runs[0];
        let schedule = proposed.schedule.as_ref().unwrap();
        let out = run_algorithm1(ch, schedule, &proposed.precoders, sys, &params).unwrap();
        let ratio = out.extraction.ratios.iter().fold(0.0f64, |m, r| m.max(*r));
        worst = worst.max(ratio);
        if ratio <= 1e-6 {
            tight += 1;
        } else if out.extraction.feasible && out.extraction.repair != Repair::Fallback {
            repaired_ok += 1;
        }
    }
    Outcome {
        pass: tight >= 19 && tight + repaired_ok == 20,
        detail: format!("{tight}/20 rank-one within 1e-6 (worst ratio {worst:.1e}), {repaired_ok} repaired to feasibility"),
    }
}

fn oracle_equivalence(results: &mut Vec<(SchemeKind, bool)>) -> Outcome {
    let params = SchemeParams::default();
    let mut hits = 0;
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let (ch, sys) = instance(seed, 1, 2, 2, 1);
        let oracle = exhaustive_oracle(&ch, &sys, 0).unwrap();
        let r = run_proposed(&ch, &sys, &params).unwrap();
        results.push((SchemeKind::Proposed, r.is_feasible(sys.p_max)));
        let gap = oracle.best_rate - r.sum_rate;
        worst = worst.max(gap);
        if gap <= 1e-3 {
            hits += 1;
        }
    }
    Outcome { pass: hits >= 45, detail: format!("{hits}/50 within 1e-3 of exhaustive search (largest gap {worst:.3})") }
}

fn feasibility(desk: &Desk, extra: &[(SchemeKind, bool)]) -> Outcome {
    let mut total = 0;
    let mut bad = Vec::new();
    for ((_, sys), runs) in desk.seeds.iter().zip(&desk.results) {
        for r in runs {
            total += 1;
            if !r.is_feasible(sys.p_max) {
                bad.push(format!("{} ({:e})", r.scheme.name(), r.feasibility.worst_violation));
            }
        }
    }
    for (kind, ok) in extra {
        total += 1;
        if !ok {
            bad.push(kind.name().to_string());
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("{total}/{total} outputs feasible")
        } else {
            format!("{} of {total} infeasible: {}", bad.len(), bad.join(", "))
        },
    }
}

fn mean(table: &SweepTable, value: f64, kind: SchemeKind) -> f64 {
    table.row(value, kind).map_or(f64::NAN, |r| r.mean_rate)
}

fn distance_trend() -> Outcome {
    let spec = SweepSpec {
        variable: SweepVariable::DistanceD,
        values: vec![5.0, 15.0, 30.0, 45.0, 55.0],
        schemes: vec![SchemeKind::Proposed, SchemeKind::Baseline1, SchemeKind::Baseline2, SchemeKind::UpperBound],
        trials: 20,
        base: ScenarioConfig { elements: 64, ..Default::default() },
        output_path: None,
        timing: false,
    };
    let table = run_sweep(&spec, &SchemeParams::default(), 1);
    let mut ordered = true;
    let mut curve = Vec::new();
    for d in &spec.values {
        let [p, b1, b2, ub] = [SchemeKind::Proposed, SchemeKind::Baseline1, SchemeKind::Baseline2, SchemeKind::UpperBound]
            .map(|k| mean(&table, *d, k));
        ordered &= ub >= p && p >= b2 && b2 >= b1;
        curve.push(format!("d={d}: UB {ub:.2} P {p:.2} B2 {b2:.2} B1 {b1:.2}"));
    }
    let proposed: Vec<f64> = spec.values.iter().map(|d| mean(&table, *d, SchemeKind::Proposed)).collect();
    let argmin = (0..proposed.len()).min_by(|a, b| proposed[*a].total_cmp(&proposed[*b])).unwrap();
    let interior = argmin > 0 && argmin + 1 < proposed.len();
    let failures: usize = table.rows.iter().map(|r| r.failures).sum();
    Outcome {
        pass: ordered && interior && failures == 0,
        detail: format!(
            "ordering {}, minimum at d={} ({}), {failures} failed trials; {}",
            if ordered { "holds" } else { "violated" },
            spec.values[argmin],
            if interior { "interior" } else { "at an end" },
            curve.join("; ")
        ),
    }
}

fn elements_trend() -> Outcome {
    let spec = SweepSpec {
        variable: SweepVariable::NumElementsN,
        values: vec![16.0, 32.0, 64.0],
        schemes: vec![SchemeKind::Proposed, SchemeKind::UpperBound, SchemeKind::UpperBoundContinuous],
        trials: 20,
        base: ScenarioConfig { bits: 2, ..Default::default() },
        output_path: None,
        timing: false,
    };
    let table = run_sweep(&spec, &SchemeParams::default(), 1);
    let proposed: Vec<f64> = spec.values.iter().map(|n| mean(&table, *n, SchemeKind::Proposed)).collect();
    let nondecreasing = proposed.windows(2).all(|w| w[1] >= w[0]);
    let ub = mean(&table, 64.0, SchemeKind::UpperBound);
    let ubc = mean(&table, 64.0, SchemeKind::UpperBoundContinuous);
    let gap = (ubc - ub) / ubc;
    let failures: usize = table.rows.iter().map(|r| r.failures).sum();
    Outcome {
        pass: nondecreasing && gap <= 0.05 && failures == 0,
        detail: format!(
            "proposed means {:?}; at N=64 two-bit bound {ub:.3} vs continuous {ubc:.3}, gap {:.2}%; {failures} failed trials",
            proposed.iter().map(|x| (x * 1e3).round() / 1e3).collect::<Vec<_>>(),
            100.0 * gap
        ),
    }
}

fn determinism() -> Outcome {
    let spec = SweepSpec {
        variable: SweepVariable::DistanceD,
        values: vec![5.0, 30.0],
        schemes: SchemeKind::ALL.to_vec(),
        trials: 3,
        base: ScenarioConfig { elements: 16, antennas: 4, bits: 2, seed: 3, ..Default::default() },
        output_path: None,
        timing: false,
    };
    let render = |jobs: usize| {
        let mut buf = Vec::new();
        write_csv_to(&run_sweep(&spec, &SchemeParams::default(), jobs), &mut buf).unwrap();
        buf
    };
    let first = render(1);
    let second = render(1);
    let threaded = render(2);
    Outcome {
        pass: first == second && first == threaded,
        detail: format!("{} bytes; repeat identical: {}, two jobs identical: {}", first.len(), first == second, first == threaded),
    }
}

fn report(id: usize, name: &str, limit: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = run();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = out.pass && in_time;
    println!(
        "criterion {id} [{name}]: {} ({}; {:.1} s of {} s)",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn main() {
    let minutes = |m: u64| Duration::from_secs(60 * m);
    let mut all = true;
    all &= report(1, "formula oracles", minutes(1), formula_oracles);

    // Criteria 2, 3 and 5 share the desk-scale runs.
    let start = Instant::now();
    let desk = desk_runs();
    let shared = start.elapsed();
    println!("shared desk-scale runs: 20 seeds x {} schemes in {:.1} s", SchemeKind::ALL.len(), shared.as_secs_f64());
    all &= report(2, "SCA monotonicity", minutes(10).saturating_sub(shared), || monotonicity(&desk));
    all &= report(3, "rank-one tightness", minutes(5), || rank_one(&desk));
    let mut oracle_runs = Vec::new();
    all &= report(4, "oracle equivalence", minutes(10), || oracle_equivalence(&mut oracle_runs));
    all &= report(5, "feasibility", minutes(1), || feasibility(&desk, &oracle_runs));
    all &= report(6, "distance trend", minutes(60), distance_trend);
    all &= report(7, "element-count trend", minutes(60), elements_trend);
    all &= report(8, "determinism", minutes(5), determinism);
    if !all {
        std::process::exit(1);
    }
}
