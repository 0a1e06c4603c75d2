//! Reference computations that do not share code paths with the optimizers:
//! exhaustive schedule enumeration with an exact single-user inner solution,
//! central finite differences and a Monte-Carlo harvest estimate.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::scalar::{CMatrix, CVector};
use crate::system::{effective_channel, levels, IrsSchedule, PrecoderSet, SystemParams};

/// Largest number of schedules [`enumerate_schedules`] will produce.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

/// Every binary schedule of `n` elements with `bits`-bit phases, element 0
/// varying fastest. Mode 0 is harvesting.
pub fn enumerate_schedules(n: usize, bits: u32) -> Result<impl Iterator<Item = IrsSchedule<f64>>> {
    let radix = levels(bits) + 1;
    let count = (radix as f64).powi(n as i32);
    if count > ENUMERATION_LIMIT as f64 {
        return Err(Error::EnumerationTooLarge { count, limit: ENUMERATION_LIMIT });
    }
    let total = count as usize;
    Ok((0..total).map(move |mut code| {
        let modes: Vec<usize> = (0..n)
            .map(|_| {
                let m = code % radix;
                code /= radix;
                m
            })
            .collect();
        IrsSchedule::from_modes(bits, &modes).expect("modes are in range by construction")
    }))
}

fn lambda_max(a: &CMatrix<f64>) -> (f64, CVector<f64>) {
    let eig = SymmetricEigen::new(a.clone());
    let i = eig.eigenvalues.imax();
    (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned())
}

/// Optimal single-user outcome for a fixed schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleUserOptimum {
    pub rate: f64,
    pub precoder: CVector<f64>,
}

/// Exact best rate of a single user for a fixed schedule, or `None` if no
/// precoder sustains the IRS.
///
/// Maximizes `|m^H w|^2` over `||w||^2 = P_max` subject to the harvest
/// budget `w^H Q w >= d`. The complex two-constraint quadratic program has
/// no duality gap, so the value is `min_mu P lambda_max(m m^H + mu Q) - mu d`,
/// a convex one-dimensional problem.
pub fn best_single_user(
    ch: &ChannelRealization<f64>,
    schedule: &IrsSchedule<f64>,
    sys: &SystemParams<f64>,
) -> Result<Option<SingleUserOptimum>> {
    if ch.users() != 1 {
        return Err(Error::Domain(format!("single-user oracle needs K = 1, got {}", ch.users())));
    }
    let m = effective_channel(ch, schedule, 0)?;
    let s1 = schedule.harvest_weights();
    let consumption = (ch.elements() as f64 - schedule.harvesting_count()) * sys.p_irs;
    // Required signal part of the harvest, W at the elements.
    let need = consumption / sys.eta_h - ch.sigma_a2 * s1.sum();
    let p = sys.p_max;
    let a = &m * m.adjoint();
    let rate_of = |w: &CVector<f64>| (1.0 + m.dotc(w).norm_sqr() / ch.sigma_k2[0]).log2();
    let mrt = if m.norm() > 0.0 { m.unscale(m.norm()).scale(p.sqrt()) } else { DVector::zeros(m.len()) };
    if need <= 0.0 {
        return Ok(Some(SingleUserOptimum { rate: rate_of(&mrt), precoder: mrt }));
    }
    let gs = DMatrix::from_diagonal(&s1.map(|x| Complex::new(x, 0.0)));
    let q = ch.g.adjoint() * gs * &ch.g;
    let harvest = |w: &CVector<f64>| w.dotc(&(&q * w)).re;
    let (q_max, _) = lambda_max(&q);
    if p * q_max < need {
        return Ok(None);
    }
    if harvest(&mrt) >= need {
        return Ok(Some(SingleUserOptimum { rate: rate_of(&mrt), precoder: mrt }));
    }
    // Dual function and its minimizer by golden-section search.
    let dual = |mu: f64| p * lambda_max(&(&a + q.scale(mu))).0 - mu * need;
    let mut hi = 1.0 / q_max.max(1e-300) * a.norm().max(1e-300);
    while dual(2.0 * hi) < dual(hi) {
        hi *= 2.0;
    }
    hi *= 2.0;
    let (mut lo, mut up) = (0.0, hi);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = up - phi * (up - lo);
        let x2 = lo + phi * (up - lo);
        if dual(x1) <= dual(x2) {
            up = x2;
        } else {
            lo = x1;
        }
    }
    let mu = 0.5 * (lo + up);
    let value = dual(mu).max(0.0);
    // A primal point at the optimal multiplier, for reporting.
    let (_, u) = lambda_max(&(&a + q.scale(mu)));
    let precoder = u.scale(p.sqrt());
    Ok(Some(SingleUserOptimum { rate: (1.0 + value / ch.sigma_k2[0]).log2(), precoder }))
}

/// Result of an exhaustive scan.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub best_rate: f64,
    pub best_schedule: IrsSchedule<f64>,
    pub configs_scanned: usize,
    pub feasible_count: usize,
    /// Modes and rate of the first schedules scanned, capped.
    pub ledger: Vec<(Vec<usize>, Option<f64>)>,
}

/// Scans every schedule with the exact single-user inner solution.
pub fn exhaustive_oracle(ch: &ChannelRealization<f64>, sys: &SystemParams<f64>, ledger_cap: usize) -> Result<OracleReport> {
    let mut best: Option<(f64, IrsSchedule<f64>)> = None;
    let mut scanned = 0;
    let mut feasible = 0;
    let mut ledger = Vec::new();
    for schedule in enumerate_schedules(ch.elements(), sys.bits)? {
        scanned += 1;
        let outcome = best_single_user(ch, &schedule, sys)?;
        if ledger.len() < ledger_cap {
            ledger.push((schedule.modes().unwrap_or_default(), outcome.as_ref().map(|o| o.rate)));
        }
        if let Some(o) = outcome {
            feasible += 1;
            if best.as_ref().is_none_or(|(r, _)| o.rate > *r) {
                best = Some((o.rate, schedule));
            }
        }
    }
    // The all-harvest schedule is always feasible, so `best` is set.
    let (best_rate, best_schedule) = best.ok_or_else(|| Error::Infeasible("no schedule is feasible".into()))?;
    Ok(OracleReport { best_rate, best_schedule, configs_scanned: scanned, feasible_count: feasible, ledger })
}

/// Worst deviation of `grad` from central differences of `f` at `x`,
/// relative to the largest gradient entry.
pub fn finite_diff_check(f: impl Fn(&[f64]) -> f64, grad: &[f64], x: &[f64], step: f64) -> Result<f64> {
    if grad.len() != x.len() {
        return Err(Error::Dimension("gradient and point differ in length".into()));
    }
    let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mut worst = 0.0f64;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = step * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        let fd = (up - down) / (2.0 * h);
        if !fd.is_finite() {
            return Err(Error::NonFinite(format!("finite difference along coordinate {i}")));
        }
        let err = (fd - grad[i]).abs();
        worst = worst.max(if scale > 0.0 { err / scale } else { err });
    }
    Ok(worst)
}

/// Sample mean of `eta_h ||A_EH (G sum_k w_k x_k + n_a)||^2` with unit
/// complex Gaussian symbols and IRS noise.
pub fn montecarlo_harvest<R: Rng>(
    ch: &ChannelRealization<f64>,
    schedule: &IrsSchedule<f64>,
    p: &PrecoderSet<f64>,
    eta_h: f64,
    draws: usize,
    rng: &mut R,
) -> f64 {
    let s1 = schedule.harvest_weights();
    if s1.iter().all(|x| *x == 0.0) {
        return 0.0;
    }
    let n = ch.elements();
    let gw: Vec<CVector<f64>> = p.w.iter().map(|w| &ch.g * w).collect();
    let noise_sd = (ch.sigma_a2 / 2.0).sqrt();
    let mut cn = |sd: f64| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re * sd, im * sd)
    };
    let mut total = 0.0;
    let mut y = DVector::<Complex<f64>>::zeros(n);
    for _ in 0..draws {
        y.fill(Complex::new(0.0, 0.0));
        for g in &gw {
            let x = cn(std::f64::consts::FRAC_1_SQRT_2);
            y.axpy(x, g, Complex::new(1.0, 0.0));
        }
        let mut acc = 0.0;
        for i in 0..n {
            let yi = y[i] + cn(noise_sd);
            acc += s1[i] * yi.norm_sqr();
        }
        total += acc;
    }
    eta_h * total / draws as f64
}
