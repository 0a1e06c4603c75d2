//! Precoder subproblem: semidefinite relaxation of the precoders and SCA on
//! the difference-of-convex sum-rate, followed by rank-one recovery.
//!
//! Inside the solver the lifted precoders are normalized by the power budget,
//! `W~_k = W_k / P_max`, and the channel outer products by the noise,
//! `M~_k = P_max M_k / sigma_k^2`, so every coefficient is of order one.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{seeded_rng, ChannelRealization};
use crate::convex::{hermitian, solve, Affine, ConvexProblem, Func, SolveParams, SparseVec, Status};
use crate::error::{Error, Result};
use crate::scalar::{outer, CMatrix, CVector};
use crate::system::{
    check_feasibility, effective_channel, sum_rate, ConstraintSet, IrsSchedule, PrecoderSet, SystemParams,
};

/// Algorithm settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alg1Params {
    pub max_iter: usize,
    /// Stop once the objective moves less than this, bits/s/Hz.
    pub tol: f64,
    pub solver: SolveParams,
    /// Gaussian randomization candidates used by the rank-one repair.
    pub randomizations: usize,
    pub seed: u64,
    /// Enforce the self-sustainability constraint.
    pub self_sustaining: bool,
}

impl Default for Alg1Params {
    fn default() -> Self {
        Self {
            max_iter: 30,
            tol: 1e-5,
            solver: SolveParams { tol: 1e-9, ..SolveParams::default() },
            randomizations: 100,
            seed: 0x5eed,
            self_sustaining: true,
        }
    }
}

/// Iterates of the precoder loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Sp1State {
    pub w: Vec<CMatrix<f64>>,
    /// `M_k = m_k m_k^H`.
    pub m: Vec<CMatrix<f64>>,
    /// Negated relaxed sum-rate at each iterate, starting with the initial point.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub solver_status: Vec<Status>,
    /// Objective of a final candidate that was discarded, if any.
    pub rejected: Option<f64>,
}

/// Outcome of rank-one recovery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repair {
    /// Dominant eigenvectors were feasible as extracted.
    None,
    /// A common rescale restored feasibility.
    Rescaled,
    /// Gaussian randomization supplied the precoders.
    Randomized,
    /// Nothing feasible was found; the caller's fallback was returned.
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub precoders: PrecoderSet<f64>,
    /// `lambda_2 / lambda_1` per user (zero for a vanishing matrix).
    pub ratios: Vec<f64>,
    pub repair: Repair,
    pub feasible: bool,
}

/// Result of the precoder loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Alg1Output {
    pub state: Sp1State,
    pub extraction: Extraction,
}

fn tr(a: &CMatrix<f64>, b: &CMatrix<f64>) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| (x * y).re).sum()
}

/// `(N1, D1)` of the d.c. split of the negated sum-rate.
pub fn dc_parts(w: &[CMatrix<f64>], m: &[CMatrix<f64>], sigma2: &[f64]) -> (f64, f64) {
    let mut n1 = 0.0;
    let mut d1 = 0.0;
    for (k, mk) in m.iter().enumerate() {
        let gains: Vec<f64> = w.iter().map(|wj| tr(wj, mk)).collect();
        let total: f64 = gains.iter().sum();
        n1 -= (sigma2[k] + total).log2();
        d1 -= (sigma2[k] + total - gains[k]).log2();
    }
    (n1, d1)
}

/// Gradient of `D1` with respect to each `W_k`.
pub fn grad_d1(w: &[CMatrix<f64>], m: &[CMatrix<f64>], sigma2: &[f64]) -> Vec<CMatrix<f64>> {
    let k_users = w.len();
    let dim = m.first().map_or(0, |x| x.nrows());
    let interference: Vec<f64> = (0..m.len())
        .map(|j| sigma2[j] + (0..k_users).filter(|q| *q != j).map(|q| tr(&w[q], &m[j])).sum::<f64>())
        .collect();
    (0..k_users)
        .map(|k| {
            let mut g = DMatrix::zeros(dim, dim);
            for j in (0..m.len()).filter(|j| *j != k) {
                g += m[j].scale(-1.0 / (std::f64::consts::LN_2 * interference[j]));
            }
            g
        })
        .collect()
}

/// Effective channels and their outer products under a fixed schedule.
pub fn channel_products(ch: &ChannelRealization<f64>, irs: &IrsSchedule<f64>) -> Result<(Vec<CVector<f64>>, Vec<CMatrix<f64>>)> {
    let m = (0..ch.users()).map(|k| effective_channel(ch, irs, k)).collect::<Result<Vec<_>>>()?;
    let mm = m.iter().map(outer).collect();
    Ok((m, mm))
}

/// `Q = G^H diag(s_1) G`, the harvest quadratic form.
pub fn harvest_form(ch: &ChannelRealization<f64>, irs: &IrsSchedule<f64>) -> CMatrix<f64> {
    let s1 = irs.harvest_weights();
    let mut weighted = ch.g.clone();
    for (n, mut row) in weighted.row_iter_mut().enumerate() {
        row.iter_mut().for_each(|z| *z = z.scale(s1[n]));
    }
    ch.g.adjoint() * weighted
}

/// Constant part of the self-sustainability constraint,
/// `consumption - eta sigma_a^2 sum s_1`, W.
pub fn harvest_deficit(ch: &ChannelRealization<f64>, irs: &IrsSchedule<f64>, sys: &SystemParams<f64>) -> f64 {
    let h = irs.harvesting_count();
    (irs.elements() as f64 - h) * sys.p_irs - sys.eta_h * ch.sigma_a2 * h
}

/// Convex subproblem around `wt` together with its layout.
#[derive(Debug, Clone)]
pub struct Sp1Problem {
    pub problem: ConvexProblem,
    pub offsets: Vec<usize>,
    pub p_max: f64,
}

impl Sp1Problem {
    /// Physical lifted precoders from a solver point.
    pub fn unpack(&self, x: &[f64]) -> Vec<CMatrix<f64>> {
        (0..self.offsets.len())
            .map(|k| {
                let w = self.problem.hermitian_block(x, k).expect("hermitian block").scale(self.p_max);
                (&w + w.adjoint()).scale(0.5)
            })
            .collect()
    }

    pub fn pack(&self, w: &[CMatrix<f64>]) -> Vec<f64> {
        let mut x = vec![0.0; self.problem.dim()];
        for (k, wk) in w.iter().enumerate() {
            let d = wk.nrows();
            hermitian::to_iso(&wk.unscale(self.p_max), &mut x[self.offsets[k]..self.offsets[k] + d * d]);
        }
        x
    }
}

/// Builds the SCA subproblem anchored at `wt`.
///
/// The objective is `N1(W) - D1(W^t) - sum_k Tr(grad_k D1 (W_k - W_k^t))`,
/// so it agrees with the negated sum-rate at `W^t` and upper-bounds it
/// elsewhere.
pub fn build_sp1(
    wt: &[CMatrix<f64>],
    ch: &ChannelRealization<f64>,
    irs: &IrsSchedule<f64>,
    sys: &SystemParams<f64>,
    self_sustaining: bool,
) -> Result<Sp1Problem> {
    let k_users = ch.users();
    let dim = ch.antennas();
    if wt.len() != k_users || wt.iter().any(|w| w.nrows() != dim || w.ncols() != dim) {
        return Err(Error::Dimension(format!("expected {k_users} lifted precoders of size {dim}")));
    }
    if !(sys.p_max > 0.0) {
        return Err(Error::Domain("power budget must be positive".into()));
    }
    let p = sys.p_max;
    let (_, mm) = channel_products(ch, irs)?;
    let sigma2 = &ch.sigma_k2;

    let mut problem = ConvexProblem::new();
    let offsets: Vec<usize> = (0..k_users).map(|_| problem.add_hermitian(dim)).collect();
    let n_iso = hermitian::iso_len(dim);

    // log2(sigma^2 + sum_j Tr(W_j M_k)) = log2 sigma^2 + log2(1 + sum_j Tr(W~_j M~_k))
    let mut terms = Vec::with_capacity(k_users);
    for (k, mk) in mm.iter().enumerate() {
        let coeffs = hermitian::iso(&mk.scale(p / sigma2[k]));
        let mut a = SparseVec::new();
        for &o in &offsets {
            a.extend_scaled(&SparseVec::from_dense(o, &coeffs), 1.0);
        }
        terms.push((1.0 / std::f64::consts::LN_2, Affine::new(a, 1.0)));
    }
    let (_, d1_t) = dc_parts(wt, &mm, sigma2);
    let grads = grad_d1(wt, &mm, sigma2);
    let mut linear = SparseVec::new();
    let mut constant = -d1_t - sigma2.iter().map(|s| s.log2()).sum::<f64>();
    for k in 0..k_users {
        constant += tr(&grads[k], &wt[k]);
        let coeffs: Vec<f64> = hermitian::iso(&grads[k]).into_iter().map(|v| -p * v).collect();
        linear.extend_scaled(&SparseVec::from_dense(offsets[k], &coeffs), 1.0);
    }
    problem.objective = Func::NegLogSum { terms, linear: Affine::new(linear, constant) };

    let id = hermitian::identity_iso(dim);
    let mut power = SparseVec::new();
    for &o in &offsets {
        power.extend_scaled(&SparseVec::from_dense(o, &id), 1.0);
    }
    problem.add_inequality("C1", Func::Affine(Affine::new(power, -1.0)));

    if self_sustaining {
        let c0 = harvest_deficit(ch, irs, sys) / sys.p_irs;
        if c0 > 0.0 {
            let q = hermitian::iso(&harvest_form(ch, irs).scale(-sys.eta_h * p / sys.p_irs));
            let mut a = SparseVec::new();
            for &o in &offsets {
                a.extend_scaled(&SparseVec::from_dense(o, &q), 1.0);
            }
            problem.add_inequality("C3", Func::Affine(Affine::new(a, c0)));
        }
    }
    debug_assert_eq!(problem.dim(), k_users * n_iso);
    Ok(Sp1Problem { problem, offsets, p_max: p })
}

/// Strictly interior barrier start: `W^t` pulled slightly toward a full-rank
/// point aligned with the harvest direction.
fn interior_start(sp: &Sp1Problem, wt: &[CMatrix<f64>], q: &CMatrix<f64>) -> Vec<f64> {
    let k_users = wt.len();
    let dim = q.nrows();
    let eig = SymmetricEigen::new(q.clone());
    let top = eig.eigenvalues.imax();
    let u = eig.eigenvectors.column(top).into_owned();
    let (delta, gamma, theta) = (1e-3, 1e-2, 0.05);
    let center = (outer(&u).scale(1.0 - gamma) + DMatrix::identity(dim, dim).scale(gamma / dim as f64))
        .scale(sp.p_max * (1.0 - delta) / k_users as f64);
    let mixed: Vec<CMatrix<f64>> = wt.iter().map(|w| w.scale(1.0 - theta) + center.scale(theta)).collect();
    sp.pack(&mixed)
}

fn lifted_feasible(w: &[CMatrix<f64>], ch: &ChannelRealization<f64>, irs: &IrsSchedule<f64>, sys: &SystemParams<f64>, sustain: bool) -> bool {
    let power: f64 = w.iter().map(|x| x.trace().re).sum();
    if power > sys.p_max * (1.0 + 1e-9) {
        return false;
    }
    if !sustain {
        return true;
    }
    let q = harvest_form(ch, irs);
    let harvest: f64 = w.iter().map(|x| tr(x, &q)).sum::<f64>() * sys.eta_h;
    harvest - harvest_deficit(ch, irs, sys) >= -1e-9
}

/// Iterates the SCA subproblem from `w0` until the objective settles.
pub fn run_algorithm1(
    ch: &ChannelRealization<f64>,
    irs: &IrsSchedule<f64>,
    w0: &PrecoderSet<f64>,
    sys: &SystemParams<f64>,
    params: &Alg1Params,
) -> Result<Alg1Output> {
    let start: Vec<CMatrix<f64>> = match &w0.lifted {
        Some(l) => l.clone(),
        None => w0.w.iter().map(outer).collect(),
    };
    if !lifted_feasible(&start, ch, irs, sys, params.self_sustaining) {
        return Err(Error::Infeasible("initial precoders violate the power or harvesting constraint; re-initialize".into()));
    }
    let (_, mm) = channel_products(ch, irs)?;
    let q = harvest_form(ch, irs);
    let objective = |w: &[CMatrix<f64>]| {
        let (n1, d1) = dc_parts(w, &mm, &ch.sigma_k2);
        n1 - d1
    };
    let mut state = Sp1State {
        objective_trace: vec![objective(&start)],
        w: start,
        m: mm.clone(),
        iterations: 0,
        solver_status: Vec::new(),
        rejected: None,
    };
    for _ in 0..params.max_iter {
        let sp = build_sp1(&state.w, ch, irs, sys, params.self_sustaining)?;
        let mut problem = sp.problem.clone();
        problem.start = Some(interior_start(&sp, &state.w, &q));
        let result = solve(&problem, &params.solver);
        state.solver_status.push(result.status);
        if matches!(result.status, Status::Infeasible) {
            return Err(Error::Solver { status: result.status, context: format!("precoder iteration {}", state.iterations) });
        }
        let candidate = sp.unpack(&result.x);
        let value = objective(&candidate);
        let previous = *state.objective_trace.last().expect("trace starts non-empty");
        // Numerical failures still return interior points; keep them only if they help.
        if !value.is_finite() || value > previous + 1e-9 || !lifted_feasible(&candidate, ch, irs, sys, params.self_sustaining) {
            state.rejected = Some(value);
            break;
        }
        state.w = candidate;
        state.objective_trace.push(value);
        state.iterations += 1;
        if (previous - value).abs() < params.tol {
            break;
        }
    }
    let fallback = if lifted_feasible(&w0.w.iter().map(outer).collect::<Vec<_>>(), ch, irs, sys, params.self_sustaining) {
        Some(w0)
    } else {
        None
    };
    let extraction = extract_rank_one(&state.w, ch, irs, sys, params, fallback);
    Ok(Alg1Output { state, extraction })
}

/// Dominant eigenpair and `lambda_2 / lambda_1`.
pub fn dominant(w: &CMatrix<f64>) -> (f64, CVector<f64>, f64) {
    let eig = SymmetricEigen::new(w.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let l1 = eig.eigenvalues[order[0]].max(0.0);
    let l2 = order.get(1).map_or(0.0, |i| eig.eigenvalues[*i].max(0.0));
    let ratio = if l1 > 0.0 { l2 / l1 } else { 0.0 };
    (l1, eig.eigenvectors.column(order[0]).into_owned(), ratio)
}

fn is_feasible(p: &PrecoderSet<f64>, ch: &ChannelRealization<f64>, irs: &IrsSchedule<f64>, sys: &SystemParams<f64>, sustain: bool) -> bool {
    let constraints = ConstraintSet { self_sustaining: sustain, discrete_phases: false };
    check_feasibility(ch, irs, p, sys, constraints).is_ok_and(|r| r.is_feasible(1e-7 * sys.p_max, 1e-9))
}

/// Recovers precoders from lifted matrices, repairing feasibility if the
/// rank-one truncation broke a constraint.
pub fn extract_rank_one(
    w: &[CMatrix<f64>],
    ch: &ChannelRealization<f64>,
    irs: &IrsSchedule<f64>,
    sys: &SystemParams<f64>,
    params: &Alg1Params,
    fallback: Option<&PrecoderSet<f64>>,
) -> Extraction {
    let sustain = params.self_sustaining;
    let mut ratios = Vec::with_capacity(w.len());
    let mut vecs = Vec::with_capacity(w.len());
    for wk in w {
        let (l1, u, ratio) = dominant(wk);
        ratios.push(ratio);
        vecs.push(u.scale(l1.sqrt()));
    }
    let mut precoders = PrecoderSet::new(vecs);
    let mut repair = Repair::None;
    let power = precoders.total_power();
    if power > sys.p_max {
        precoders = precoders.scaled((sys.p_max / power).sqrt());
        repair = Repair::Rescaled;
    }
    if is_feasible(&precoders, ch, irs, sys, sustain) {
        return Extraction { precoders, ratios, repair, feasible: true };
    }
    // Harvest grows with transmit power, so spend the full budget first.
    let power = precoders.total_power();
    if power > 0.0 {
        let full = precoders.scaled((sys.p_max / power).sqrt() * (1.0 - 1e-12));
        if is_feasible(&full, ch, irs, sys, sustain) {
            return Extraction { precoders: full, ratios, repair: Repair::Rescaled, feasible: true };
        }
    }
    if let Some(best) = randomize(w, ch, irs, sys, params) {
        return Extraction { precoders: best, ratios, repair: Repair::Randomized, feasible: true };
    }
    match fallback {
        Some(f) => Extraction { precoders: f.clone(), ratios, repair: Repair::Fallback, feasible: true },
        None => Extraction { precoders, ratios, repair: Repair::Fallback, feasible: false },
    }
}

/// Gaussian randomization: candidates `W_k^{1/2} r_k` at full power, best
/// feasible sum-rate wins.
fn randomize(
    w: &[CMatrix<f64>],
    ch: &ChannelRealization<f64>,
    irs: &IrsSchedule<f64>,
    sys: &SystemParams<f64>,
    params: &Alg1Params,
) -> Option<PrecoderSet<f64>> {
    let roots: Vec<CMatrix<f64>> = w
        .iter()
        .map(|wk| {
            let eig = SymmetricEigen::new(wk.clone());
            let sqrt_vals = eig.eigenvalues.map(|l| Complex::new(l.max(0.0).sqrt(), 0.0));
            &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.adjoint()
        })
        .collect();
    let mut rng = seeded_rng(params.seed, 0);
    let mut best: Option<(f64, PrecoderSet<f64>)> = None;
    for _ in 0..params.randomizations {
        let cand: Vec<CVector<f64>> = roots
            .iter()
            .map(|r| {
                let z = DVector::from_fn(r.nrows(), |_, _| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                });
                r * z
            })
            .collect();
        let set = PrecoderSet::new(cand);
        let power = set.total_power();
        if !(power > 0.0) {
            continue;
        }
        let set = set.scaled((sys.p_max / power).sqrt() * (1.0 - 1e-12));
        if !is_feasible(&set, ch, irs, sys, params.self_sustaining) {
            continue;
        }
        let rate = sum_rate(ch, irs, &set).unwrap_or(f64::NEG_INFINITY);
        if best.as_ref().is_none_or(|(r, _)| rate > *r) {
            best = Some((rate, set));
        }
    }
    best.map(|(_, p)| p)
}

/// Equal-power MRT on the effective channels with every user's direction
/// mixed toward the dominant harvest direction by `tau` in `[0, 1]`.
pub fn steered_precoders(
    ch: &ChannelRealization<f64>,
    irs: &IrsSchedule<f64>,
    sys: &SystemParams<f64>,
    tau: f64,
) -> Result<PrecoderSet<f64>> {
    let (m, _) = channel_products(ch, irs)?;
    let per_user = (sys.p_max / ch.users() as f64).sqrt();
    let dim = ch.antennas();
    let unit = |v: &CVector<f64>| {
        let n = v.norm();
        if n > 0.0 {
            v.unscale(n)
        } else {
            let mut e = DVector::zeros(dim);
            e[0] = Complex::new(1.0, 0.0);
            e
        }
    };
    // Without harvesting elements, steer toward the IRS as a whole.
    let mut q = harvest_form(ch, irs);
    if q.norm() == 0.0 {
        q = ch.g.adjoint() * &ch.g;
    }
    let (_, top, _) = dominant(&q);
    Ok(PrecoderSet::new(
        m.iter()
            .map(|mk| {
                let d = unit(mk);
                // Align the harvest direction's phase with the MRT direction before mixing.
                let phase = top.dotc(&d);
                let rot = if phase.norm() > 0.0 { phase.unscale(phase.norm()) } else { Complex::new(1.0, 0.0) };
                unit(&(d.scale(1.0 - tau) + top.map(|z| z * rot).scale(tau))).scale(per_user)
            })
            .collect(),
    ))
}

/// Equal-power MRT on the effective channels, steered toward the harvest
/// direction just enough to satisfy self-sustainability.
pub fn initial_precoders(ch: &ChannelRealization<f64>, irs: &IrsSchedule<f64>, sys: &SystemParams<f64>) -> Result<PrecoderSet<f64>> {
    let at = |tau: f64| steered_precoders(ch, irs, sys, tau).expect("schedule matches the channel");
    channel_products(ch, irs)?;
    let ok = |p: &PrecoderSet<f64>| {
        check_feasibility(ch, irs, p, sys, ConstraintSet { self_sustaining: true, discrete_phases: false })
            .is_ok_and(|r| r.is_feasible(1e-7 * sys.p_max, 0.0))
    };
    let p0 = at(0.0);
    if ok(&p0) {
        return Ok(p0);
    }
    if !ok(&at(1.0)) {
        return Err(Error::Infeasible("no precoder satisfies self-sustainability for this schedule".into()));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if ok(&at(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(at(hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_realization, ScenarioConfig};
    use approx::assert_relative_eq;

    fn instance(seed: u64, k: usize, m: usize, n: usize) -> (ChannelRealization<f64>, SystemParams<f64>, ScenarioConfig) {
        let cfg = ScenarioConfig { users: k, antennas: m, elements: n, bits: 2, ..Default::default() };
        let (_, ch) = draw_realization::<f64, _>(&cfg, &mut seeded_rng(seed, 0)).unwrap();
        (ch, SystemParams::from_config(&cfg), cfg)
    }

    #[test]
    fn zero_precoders_give_equal_parts() {
        let (ch, _, _) = instance(1, 2, 3, 4);
        let irs = IrsSchedule::all_harvest(4, 2).unwrap();
        let (_, mm) = channel_products(&ch, &irs).unwrap();
        let w = vec![DMatrix::zeros(3, 3); 2];
        let (n1, d1) = dc_parts(&w, &mm, &ch.sigma_k2);
        assert_relative_eq!(n1, d1, max_relative = 1e-15);
        assert_relative_eq!(n1, -ch.sigma_k2.iter().map(|s| s.log2()).sum::<f64>(), max_relative = 1e-15);
        assert!(grad_d1(&w[..1], &mm[..1], &ch.sigma_k2).iter().all(|g| g.norm() == 0.0));
    }

    #[test]
    fn single_user_reaches_mrt_rate() {
        let (ch, sys, _) = instance(3, 1, 4, 8);
        let irs = IrsSchedule::all_harvest(8, 2).unwrap();
        let w0 = initial_precoders(&ch, &irs, &sys).unwrap().scaled(0.3);
        let out = run_algorithm1(&ch, &irs, &w0, &sys, &Alg1Params::default()).unwrap();
        let rate = sum_rate(&ch, &irs, &out.extraction.precoders).unwrap();
        let mrt = (1.0 + sys.p_max * ch.h_d[0].norm_squared() / ch.sigma_k2[0]).log2();
        assert_relative_eq!(rate, mrt, epsilon = 1e-4);
        assert!(out.extraction.ratios[0] <= 1e-6);
    }

    #[test]
    fn extraction_of_rank_one_and_identity() {
        let (ch, sys, _) = instance(2, 1, 2, 4);
        let irs = IrsSchedule::all_harvest(4, 2).unwrap();
        let w = DVector::from_vec(vec![Complex::new(0.3, 0.1), Complex::new(-0.2, 0.5)]);
        let ex = extract_rank_one(&[outer(&w)], &ch, &irs, &sys, &Alg1Params::default(), None);
        assert!(ex.ratios[0] < 1e-12);
        let got = &ex.precoders.w[0];
        assert_relative_eq!(got.dotc(&w).norm(), w.norm_squared(), max_relative = 1e-12);
        let ex = extract_rank_one(&[DMatrix::identity(2, 2)], &ch, &irs, &sys, &Alg1Params::default(), None);
        assert_relative_eq!(ex.ratios[0], 1.0, epsilon = 1e-12);
    }
}
