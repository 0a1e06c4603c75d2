//! The proposed alternating scheme and the comparison schemes.
//!
//! * `Proposed`: alternate the precoder loop and the IRS loop, accepting a
//!   half-step only when it does not lower the true sum-rate.
//! * `Baseline1`: no IRS; MRT directions on the direct channels with optimized powers.
//! * `Baseline2`: MRT directions on the effective channels, optimized powers
//!   and a self-sustainable IRS schedule.
//! * `UpperBound`: every element reflects at no power cost, discrete or
//!   continuous phases.

use std::time::Instant;

use nalgebra::{Complex, DVector};

use crate::channel::ChannelRealization;
use crate::convex::{solve, Affine, ConvexProblem, Func, SolveParams, SparseVec, Status};
use crate::error::{Error, Result};
use crate::irs::{run_algorithm2, Alg2Params, IrsVariant, Sp2Step};
use crate::precoder::{
    channel_products, harvest_deficit, harvest_form, run_algorithm1, steered_precoders, Alg1Params, Repair,
};
use crate::scalar::CVector;
use crate::system::{
    check_feasibility, effective_channel, mode_set, sum_rate, ConstraintSet, FeasibilityReport, IrsSchedule, PrecoderSet,
    SystemParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    Proposed,
    Baseline1,
    Baseline2,
    UpperBound,
    UpperBoundContinuous,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::Proposed,
        SchemeKind::Baseline1,
        SchemeKind::Baseline2,
        SchemeKind::UpperBound,
        SchemeKind::UpperBoundContinuous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Proposed => "proposed",
            SchemeKind::Baseline1 => "baseline1",
            SchemeKind::Baseline2 => "baseline2",
            SchemeKind::UpperBound => "upper_bound",
            SchemeKind::UpperBoundContinuous => "upper_bound_continuous",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Constraints the scheme's output is held to.
    pub fn constraints(self) -> ConstraintSet {
        match self {
            SchemeKind::Proposed | SchemeKind::Baseline2 => ConstraintSet::FULL,
            SchemeKind::Baseline1 => ConstraintSet { self_sustaining: false, discrete_phases: true },
            SchemeKind::UpperBound => ConstraintSet { self_sustaining: false, discrete_phases: true },
            SchemeKind::UpperBoundContinuous => ConstraintSet { self_sustaining: false, discrete_phases: false },
        }
    }
}

/// Which channel the baseline-2 MRT directions match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrtBasis {
    Direct,
    Effective,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeParams {
    pub max_outer: usize,
    /// Outer stopping threshold on the sum-rate change, bits/s/Hz.
    pub tol: f64,
    pub alg1: Alg1Params,
    pub alg2: Alg2Params,
    pub mrt_basis: MrtBasis,
    /// SCA iterations of the power-allocation step.
    pub power_iter: usize,
    /// Extra starts of the proposed scheme: precoders steered toward the IRS
    /// by each of these fractions, followed by an IRS step.
    pub warm_steering: Vec<f64>,
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self {
            max_outer: 20,
            tol: 1e-4,
            alg1: Alg1Params::default(),
            alg2: Alg2Params::default(),
            mrt_basis: MrtBasis::Effective,
            power_iter: 50,
            warm_steering: vec![1.0, 0.5],
        }
    }
}

/// Per-round records kept for convergence and rank diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Precoder-loop objective traces, one per outer round.
    pub alg1_traces: Vec<Vec<f64>>,
    /// Objective of the discarded final candidate of each precoder loop.
    pub alg1_rejected: Vec<Option<f64>>,
    /// `lambda_2 / lambda_1` of the final lifted iterate, one list per outer round.
    pub alg1_ratios: Vec<Vec<f64>>,
    pub alg1_repairs: Vec<Repair>,
    pub alg2_steps: Vec<Vec<Sp2Step>>,
    /// Rounding needed a harvest repair.
    pub alg2_repaired: Vec<bool>,
    /// Half-steps discarded because they lowered the sum-rate.
    pub rejected: usize,
    /// Outer traces of every start, the returned one included.
    pub start_traces: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResult {
    pub scheme: SchemeKind,
    pub sum_rate: f64,
    /// Absent for baseline 1, which has no IRS.
    pub schedule: Option<IrsSchedule<f64>>,
    pub precoders: PrecoderSet<f64>,
    /// Sum-rate after each outer round, starting with the initial point.
    pub outer_trace: Vec<f64>,
    pub feasibility: FeasibilityReport<f64>,
    pub wall_time: f64,
    pub diagnostics: Diagnostics,
}

impl SchemeResult {
    /// Checks the output against its scheme's constraints at the standard tolerances.
    pub fn is_feasible(&self, p_max: f64) -> bool {
        self.feasibility.is_feasible(1e-7 * p_max, 1e-9)
    }
}

/// Runs any scheme by kind.
pub fn run_scheme(
    kind: SchemeKind,
    ch: &ChannelRealization<f64>,
    sys: &SystemParams<f64>,
    params: &SchemeParams,
) -> Result<SchemeResult> {
    match kind {
        SchemeKind::Proposed => run_proposed(ch, sys, params),
        SchemeKind::Baseline1 => run_baseline1(ch, sys, params),
        SchemeKind::Baseline2 => run_baseline2(ch, sys, params),
        SchemeKind::UpperBound => run_upper_bound(ch, sys, params, false),
        SchemeKind::UpperBoundContinuous => run_upper_bound(ch, sys, params, true),
    }
}

fn unit_or_first(v: &CVector<f64>) -> CVector<f64> {
    let n = v.norm();
    if n > 0.0 {
        v.unscale(n)
    } else {
        let mut e = DVector::zeros(v.len());
        if !e.is_empty() {
            e[0] = Complex::new(1.0, 0.0);
        }
        e
    }
}

/// Equal-power MRT on the effective channels of `irs`, scaled to the budget.
pub fn mrt_precoders(ch: &ChannelRealization<f64>, irs: &IrsSchedule<f64>, sys: &SystemParams<f64>) -> Result<PrecoderSet<f64>> {
    let (m, _) = channel_products(ch, irs)?;
    let per_user = (sys.p_max / ch.users() as f64).sqrt();
    Ok(PrecoderSet::new(m.iter().map(|mk| unit_or_first(mk).scale(per_user)).collect()))
}

fn finish(
    scheme: SchemeKind,
    ch: &ChannelRealization<f64>,
    sys: &SystemParams<f64>,
    schedule: IrsSchedule<f64>,
    keep_schedule: bool,
    precoders: PrecoderSet<f64>,
    outer_trace: Vec<f64>,
    diagnostics: Diagnostics,
    started: Instant,
) -> Result<SchemeResult> {
    let sum_rate = sum_rate(ch, &schedule, &precoders)?;
    let feasibility = check_feasibility(ch, &schedule, &precoders, sys, scheme.constraints())?;
    Ok(SchemeResult {
        scheme,
        sum_rate,
        schedule: keep_schedule.then_some(schedule),
        precoders,
        outer_trace,
        feasibility,
        wall_time: started.elapsed().as_secs_f64(),
        diagnostics,
    })
}

/// Alternating optimization of precoders and IRS schedule.
///
/// The first start is the all-harvest schedule with equal-power MRT. From
/// there the precoders never pay for reflection, so further starts steer the
/// precoders toward the IRS and let an IRS step choose the reflecting set
/// before alternating. The best start wins.
pub fn run_proposed(ch: &ChannelRealization<f64>, sys: &SystemParams<f64>, params: &SchemeParams) -> Result<SchemeResult> {
    let started = Instant::now();
    let variant = IrsVariant::SelfSustaining;
    let harvest = IrsSchedule::all_harvest(ch.elements(), sys.bits)?;
    let mut best = alternate(ch, sys, params, variant, harvest.clone(), mrt_precoders(ch, &harvest, sys)?, false)?;
    let mut traces = vec![best.2.clone()];
    let mut extra = Diagnostics::default();
    if ch.elements() > 0 && sys.p_max > 0.0 {
        for &tau in &params.warm_steering {
            let p = steered_precoders(ch, &harvest, sys, tau)?;
            let alg2 = Alg2Params { variant, ..params.alg2 };
            let out2 = run_algorithm2(ch, &p, &harvest, sys, &alg2)?;
            if out2.schedule.harvesting_count() == ch.elements() as f64 {
                continue;
            }
            let run = alternate(ch, sys, params, variant, out2.schedule, p, false)?;
            traces.push(run.2.clone());
            let rate = *run.2.last().expect("trace starts non-empty");
            if rate > *best.2.last().expect("trace starts non-empty") {
                extra = merge(extra, std::mem::take(&mut best.3));
                best = run;
            } else {
                extra = merge(extra, run.3);
            }
        }
    }
    let (schedule, precoders, trace, diag) = best;
    let mut diag = merge(diag, extra);
    diag.start_traces = traces;
    finish(SchemeKind::Proposed, ch, sys, schedule, true, precoders, trace, diag, started)
}

fn merge(mut a: Diagnostics, b: Diagnostics) -> Diagnostics {
    a.alg1_traces.extend(b.alg1_traces);
    a.alg1_rejected.extend(b.alg1_rejected);
    a.alg1_ratios.extend(b.alg1_ratios);
    a.alg1_repairs.extend(b.alg1_repairs);
    a.alg2_steps.extend(b.alg2_steps);
    a.alg2_repaired.extend(b.alg2_repaired);
    a.rejected += b.rejected;
    a
}

/// Upper bound: every element reflects for free. The continuous variant
/// relaxes to `|v_n| <= 1` and projects to unit modulus after each IRS step.
pub fn run_upper_bound(
    ch: &ChannelRealization<f64>,
    sys: &SystemParams<f64>,
    params: &SchemeParams,
    continuous: bool,
) -> Result<SchemeResult> {
    let started = Instant::now();
    let n = ch.elements();
    if continuous {
        let (schedule, precoders, trace, mut diag) = continuous_bound(ch, sys, params)?;
        diag.start_traces = vec![trace.clone()];
        return finish(SchemeKind::UpperBoundContinuous, ch, sys, schedule, true, precoders, trace, diag, started);
    }
    // Zero reflection to start; the first IRS step always replaces it.
    let harvest = IrsSchedule::all_harvest(n, sys.bits)?;
    let precoders = mrt_precoders(ch, &harvest, sys)?;
    let mut best = alternate(ch, sys, params, IrsVariant::FreeDiscrete, harvest, precoders, n > 0)?;
    let mut traces = vec![best.2.clone()];
    if n > 0 {
        // Second start: the continuous bound with every phase quantized.
        let (relaxed, p, _, _) = continuous_bound(ch, sys, params)?;
        let quantized = quantize(relaxed.alpha(), sys.bits)?;
        let run = alternate(ch, sys, params, IrsVariant::FreeDiscrete, quantized, p, false)?;
        traces.push(run.2.clone());
        if run.2.last() > best.2.last() {
            best = (run.0, run.1, run.2, merge(run.3, best.3));
        } else {
            best.3 = merge(best.3, run.3);
        }
    }
    let (schedule, precoders, trace, mut diag) = best;
    diag.start_traces = traces;
    finish(SchemeKind::UpperBound, ch, sys, schedule, true, precoders, trace, diag, started)
}

fn continuous_bound(ch: &ChannelRealization<f64>, sys: &SystemParams<f64>, params: &SchemeParams) -> Result<Run> {
    let n = ch.elements();
    let zero = IrsSchedule::continuous(sys.bits, DVector::from_element(n, Complex::new(0.0, 0.0)));
    let precoders = mrt_precoders(ch, &zero, sys)?;
    alternate(ch, sys, params, IrsVariant::FreeContinuous, zero, precoders, n > 0)
}

/// Reflecting schedule with each coefficient replaced by the nearest discrete phase.
pub fn quantize(alpha: &CVector<f64>, bits: u32) -> Result<IrsSchedule<f64>> {
    let set = mode_set::<f64>(bits)?;
    let modes: Vec<usize> = alpha
        .iter()
        .map(|a| {
            // Mode 0 (harvest) is excluded: pick the closest unit-modulus mode.
            (1..set.len())
                .min_by(|i, j| (set[*i] - a).norm().total_cmp(&(set[*j] - a).norm()))
                .unwrap_or(1)
        })
        .collect();
    IrsSchedule::from_modes(bits, &modes)
}

type Run = (IrsSchedule<f64>, PrecoderSet<f64>, Vec<f64>, Diagnostics);

/// Alternates the precoder loop and the IRS loop from a feasible start,
/// keeping each half-step only if the sum-rate does not drop. With
/// `placeholder`, the first IRS step is taken unconditionally.
fn alternate(
    ch: &ChannelRealization<f64>,
    sys: &SystemParams<f64>,
    params: &SchemeParams,
    variant: IrsVariant,
    mut schedule: IrsSchedule<f64>,
    mut precoders: PrecoderSet<f64>,
    mut placeholder: bool,
) -> Result<Run> {
    let sustain = variant == IrsVariant::SelfSustaining;
    let constraints = ConstraintSet { self_sustaining: sustain, discrete_phases: variant != IrsVariant::FreeContinuous };
    let n = ch.elements();
    let mut rate = sum_rate(ch, &schedule, &precoders)?;
    let mut trace = vec![rate];
    let mut diag = Diagnostics::default();
    let alg1 = Alg1Params { self_sustaining: sustain, ..params.alg1 };
    let alg2 = Alg2Params { variant, ..params.alg2 };

    for _ in 0..params.max_outer {
        let previous = rate;

        let out1 = run_algorithm1(ch, &schedule, &precoders, sys, &alg1)?;
        diag.alg1_traces.push(out1.state.objective_trace.clone());
        diag.alg1_rejected.push(out1.state.rejected);
        diag.alg1_ratios.push(out1.extraction.ratios.clone());
        diag.alg1_repairs.push(out1.extraction.repair);
        if out1.extraction.feasible {
            let r = sum_rate(ch, &schedule, &out1.extraction.precoders)?;
            if r >= rate {
                rate = r;
                precoders = out1.extraction.precoders;
            } else {
                diag.rejected += 1;
            }
        }

        if n > 0 {
            let out2 = run_algorithm2(ch, &precoders, &schedule, sys, &alg2)?;
            diag.alg2_steps.push(out2.steps.clone());
            diag.alg2_repaired.push(out2.repaired);
            let ok = check_feasibility(ch, &out2.schedule, &precoders, sys, constraints)?.is_feasible(1e-7 * sys.p_max, 0.0);
            if ok && (placeholder || out2.rounded_rate >= rate) {
                rate = out2.rounded_rate;
                schedule = out2.schedule;
                placeholder = false;
            } else {
                diag.rejected += 1;
            }
        }

        trace.push(rate);
        if (rate - previous).abs() < params.tol && !placeholder {
            break;
        }
    }
    Ok((schedule, precoders, trace, diag))
}

/// Power allocation over fixed unit directions by SCA on the d.c. sum-rate.
///
/// `irs` fixes the effective channels and, if `sustain`, the harvest budget.
/// Several starts are tried; the best feasible allocation is returned, or
/// `None` if no start satisfies the harvest budget.
pub fn allocate_power(
    ch: &ChannelRealization<f64>,
    irs: &IrsSchedule<f64>,
    dirs: &[CVector<f64>],
    sys: &SystemParams<f64>,
    sustain: bool,
    max_iter: usize,
) -> Result<Option<PrecoderSet<f64>>> {
    let k_users = ch.users();
    if dirs.len() != k_users {
        return Err(Error::Dimension(format!("{} directions for {k_users} users", dirs.len())));
    }
    let (m, _) = channel_products(ch, irs)?;
    // gain[k][j] = P |m_k^H u_j|^2 / sigma_k^2
    let gain: Vec<Vec<f64>> = (0..k_users)
        .map(|k| dirs.iter().map(|u| sys.p_max * m[k].dotc(u).norm_sqr() / ch.sigma_k2[k]).collect())
        .collect();
    let harvest = if sustain {
        let deficit = harvest_deficit(ch, irs, sys);
        let q = harvest_form(ch, irs);
        let per: Vec<f64> = dirs.iter().map(|u| sys.eta_h * sys.p_max * u.dotc(&(&q * u)).re).collect();
        (deficit > 0.0).then_some((deficit, per))
    } else {
        None
    };
    let rate = |p: &[f64]| -> f64 {
        (0..k_users)
            .map(|k| {
                let total: f64 = (0..k_users).map(|j| gain[k][j] * p[j]).sum();
                let interf = total - gain[k][k] * p[k];
                ((1.0 + total) / (1.0 + interf)).log2()
            })
            .sum()
    };
    let feasible = |p: &[f64]| -> bool {
        p.iter().all(|x| *x >= 0.0)
            && p.iter().sum::<f64>() <= 1.0 + 1e-9
            && harvest.as_ref().is_none_or(|(d, per)| p.iter().zip(per).map(|(x, c)| x * c).sum::<f64>() >= *d)
    };

    let mut starts = vec![vec![1.0 / k_users as f64; k_users]];
    if k_users > 1 {
        for k in 0..k_users {
            let mut p = vec![1e-3 / k_users as f64; k_users];
            p[k] = 1.0 - 1e-3 * (k_users - 1) as f64 / k_users as f64;
            starts.push(p);
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let mut p = start;
        if !feasible(&p) {
            match power_step(&gain, harvest.as_ref(), None) {
                Some(x) if feasible(&x) => p = x,
                _ => continue,
            }
        }
        let mut value = rate(&p);
        for _ in 0..max_iter {
            let Some(next) = power_step(&gain, harvest.as_ref(), Some(&p)) else { break };
            let v = rate(&next);
            if !feasible(&next) || !v.is_finite() || v < value {
                break;
            }
            let delta = v - value;
            p = next;
            value = v;
            if delta < 1e-9 {
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, p));
        }
    }
    Ok(best.map(|(_, p)| {
        PrecoderSet::new(dirs.iter().zip(&p).map(|(u, x)| u.scale((x.max(0.0) * sys.p_max).sqrt())).collect())
    }))
}

/// One convexified power step around `anchor` (normalized powers). Without an
/// anchor, only a feasible point is sought.
fn power_step(gain: &[Vec<f64>], harvest: Option<&(f64, Vec<f64>)>, anchor: Option<&[f64]>) -> Option<Vec<f64>> {
    let k_users = gain.len();
    let ln2 = std::f64::consts::LN_2;
    let mut problem = ConvexProblem::new();
    problem.add_vector(k_users, 0, Some(vec![0.0; k_users]), None);
    problem.add_inequality("power", Func::Affine(Affine::new(SparseVec::from_dense(0, &vec![1.0; k_users]), -1.0)));
    if let Some((deficit, per)) = harvest {
        let a = SparseVec::from_dense(0, &per.iter().map(|c| -c / deficit).collect::<Vec<_>>());
        problem.add_inequality("harvest", Func::Affine(Affine::new(a, 1.0)));
    }
    match anchor {
        None => {
            let a = SparseVec::from_dense(0, &vec![-1.0; k_users]);
            problem.objective = Func::Affine(Affine::new(a, 0.0));
        }
        Some(p) => {
            let mut terms = Vec::with_capacity(k_users);
            let mut linear = SparseVec::new();
            let mut constant = 0.0;
            for k in 0..k_users {
                terms.push((1.0 / ln2, Affine::new(SparseVec::from_dense(0, &gain[k]), 1.0)));
                let interf: f64 = (0..k_users).filter(|j| *j != k).map(|j| gain[k][j] * p[j]).sum();
                for j in (0..k_users).filter(|j| *j != k) {
                    linear.push(j, gain[k][j] / (ln2 * (1.0 + interf)));
                }
                constant += (1.0 + interf).log2() - interf / (ln2 * (1.0 + interf));
            }
            problem.objective = Func::NegLogSum { terms, linear: Affine::new(linear, constant) };
            problem.start = Some(p.iter().map(|x| 0.98 * x + 0.01 / k_users as f64).collect());
        }
    }
    let result = solve(&problem, &SolveParams::default());
    match result.status {
        Status::Infeasible => None,
        _ => Some(result.x.iter().map(|x| x.max(0.0)).collect()),
    }
}

/// Baseline 1: no IRS; MRT on the direct channels with optimized powers.
pub fn run_baseline1(ch: &ChannelRealization<f64>, sys: &SystemParams<f64>, params: &SchemeParams) -> Result<SchemeResult> {
    let started = Instant::now();
    let schedule = IrsSchedule::all_harvest(ch.elements(), sys.bits)?;
    let dirs: Vec<CVector<f64>> = ch.h_d.iter().map(unit_or_first).collect();
    let precoders = allocate_power(ch, &schedule, &dirs, sys, false, params.power_iter)?
        .ok_or_else(|| Error::Infeasible("power allocation found no feasible start".into()))?;
    let rate = sum_rate(ch, &schedule, &precoders)?;
    finish(SchemeKind::Baseline1, ch, sys, schedule, false, precoders, vec![rate], Diagnostics::default(), started)
}

/// Baseline 2: MRT directions with optimized powers, alternating with the
/// IRS loop. Returns the best feasible iterate.
pub fn run_baseline2(ch: &ChannelRealization<f64>, sys: &SystemParams<f64>, params: &SchemeParams) -> Result<SchemeResult> {
    let started = Instant::now();
    let mut schedule = IrsSchedule::all_harvest(ch.elements(), sys.bits)?;
    let directions = |irs: &IrsSchedule<f64>| -> Result<Vec<CVector<f64>>> {
        (0..ch.users())
            .map(|k| match params.mrt_basis {
                MrtBasis::Direct => Ok(unit_or_first(&ch.h_d[k])),
                MrtBasis::Effective => effective_channel(ch, irs, k).map(|m| unit_or_first(&m)),
            })
            .collect()
    };
    let mut dirs = directions(&schedule)?;
    let mut precoders = allocate_power(ch, &schedule, &dirs, sys, true, params.power_iter)?
        .ok_or_else(|| Error::Infeasible("power allocation found no feasible start".into()))?;
    let mut rate = sum_rate(ch, &schedule, &precoders)?;
    let mut trace = vec![rate];
    let mut diag = Diagnostics::default();
    let alg2 = Alg2Params { variant: IrsVariant::SelfSustaining, ..params.alg2 };

    for _ in 0..params.max_outer {
        let previous = rate;
        if ch.elements() > 0 {
            let out2 = run_algorithm2(ch, &precoders, &schedule, sys, &alg2)?;
            diag.alg2_steps.push(out2.steps.clone());
            diag.alg2_repaired.push(out2.repaired);
            if out2.rounded_rate >= rate {
                rate = out2.rounded_rate;
                schedule = out2.schedule;
            } else {
                diag.rejected += 1;
            }
        }
        // Re-steer to the new effective channels; keep the old directions if
        // the new ones cannot sustain the IRS or do worse.
        let new_dirs = directions(&schedule)?;
        let candidate = allocate_power(ch, &schedule, &new_dirs, sys, true, params.power_iter)?;
        let kept = allocate_power(ch, &schedule, &dirs, sys, true, params.power_iter)?;
        let options = [(candidate, new_dirs), (kept, dirs.clone())];
        for (p, d) in options {
            if let Some(p) = p {
                let r = sum_rate(ch, &schedule, &p)?;
                if r > rate {
                    rate = r;
                    precoders = p;
                    dirs = d;
                }
            }
        }
        trace.push(rate);
        if (rate - previous).abs() < params.tol {
            break;
        }
    }
    finish(SchemeKind::Baseline2, ch, sys, schedule, true, precoders, trace, diag, started)
}
