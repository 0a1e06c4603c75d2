//! IRS subproblem: relaxed mode-selection matrix and slacks optimized by SCA,
//! then rounded to a binary schedule.
//!
//! With precoders fixed, every received amplitude is affine in the schedule:
//! `z_kj = h_d,k^H w_j + sum_n alpha_n c_kj,n` with `c_kj = L_k w_j` and
//! `alpha_n = sum_i s_in f_i`. Amplitudes are normalized by `sigma_k`, so the
//! slacks `xi`, `iota` below are SNR-like quantities.
//!
//! Binary mode selection is handled with the exact penalty
//! `lambda sum (s - s^2)`, whose concave part is linearized together with the
//! rate surrogate. `lambda` grows geometrically across iterations.

use nalgebra::{Complex, DMatrix, DVector};

use crate::channel::ChannelRealization;
use crate::convex::{solve, Affine, ConvexProblem, Func, SolveParams, SparseVec, Status};
use crate::error::{Error, Result};
use crate::scalar::{CVector, Cx};
use crate::system::{
    cascaded_channel, element_signal_power, harvested_power, irs_consumption, levels, mode_set, sum_rate,
    IrsSchedule, PrecoderSet, SystemParams,
};

/// Which reflection model the subproblem optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrsVariant {
    /// Harvest or reflect with a discrete phase; self-sustainability enforced.
    SelfSustaining,
    /// Every element reflects with a discrete phase at no power cost.
    FreeDiscrete,
    /// Every element reflects with an arbitrary phase at no power cost.
    FreeContinuous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alg2Params {
    pub max_iter: usize,
    /// Objective change threshold for convergence.
    pub tol: f64,
    /// Largest distance of any relaxed entry from `{0, 1}` at convergence.
    pub binary_tol: f64,
    /// Disable to run plain SCA without the binary penalty.
    pub penalty: bool,
    /// Initial penalty weight relative to the initial objective magnitude.
    pub lambda_rel: f64,
    pub lambda_growth: f64,
    pub lambda_cap_rel: f64,
    pub solver: SolveParams,
    pub variant: IrsVariant,
}

impl Default for Alg2Params {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-5,
            binary_tol: 1e-2,
            penalty: true,
            lambda_rel: 1e-3,
            lambda_growth: 5.0,
            lambda_cap_rel: 1e4,
            solver: SolveParams { max_newton: 200, ..SolveParams::default() },
            variant: IrsVariant::SelfSustaining,
        }
    }
}

/// Relaxed iterate of the IRS subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct Sp2State {
    /// Relaxed selection matrix; rows follow [`Sp2Layout::modes`]. Empty for
    /// the continuous variant.
    pub s: DMatrix<f64>,
    /// Aggregated phase vector `v = conj(alpha)`.
    pub v: CVector<f64>,
    /// Signal slacks, W.
    pub xi: Vec<f64>,
    /// Interference slacks, W.
    pub iota: Vec<f64>,
    pub lambda: f64,
    pub iterations: usize,
}

/// One SCA step: penalized relaxed objective before and after, at the same `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sp2Step {
    pub lambda: f64,
    pub before: f64,
    /// Objective at the solver's point, whether or not it was kept.
    pub after: f64,
    pub binary_gap: f64,
    pub status: Status,
    /// The point was kept; a step that raises the objective ends the loop instead.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alg2Output {
    pub state: Sp2State,
    pub steps: Vec<Sp2Step>,
    /// Binary (or unit-modulus) schedule after rounding.
    pub schedule: IrsSchedule<f64>,
    /// Sum-rate of the relaxed final iterate.
    pub relaxed_rate: f64,
    pub rounded_rate: f64,
    /// Rounding had to switch elements to harvesting for self-sustainability.
    pub repaired: bool,
}

/// Fixed-precoder quantities shared by every SCA step.
#[derive(Debug, Clone)]
pub struct Amplitudes {
    /// `a_kj / sigma_k`.
    pub a: Vec<Vec<Cx<f64>>>,
    /// `c_kj / sigma_k`, length `N`.
    pub c: Vec<Vec<CVector<f64>>>,
}

impl Amplitudes {
    pub fn new(ch: &ChannelRealization<f64>, p: &PrecoderSet<f64>) -> Result<Self> {
        let k_users = ch.users();
        let mut a = vec![vec![Complex::new(0.0, 0.0); k_users]; k_users];
        let mut c = vec![Vec::with_capacity(k_users); k_users];
        for k in 0..k_users {
            let l = cascaded_channel(ch, k)?;
            let inv = 1.0 / ch.sigma_k2[k].sqrt();
            for j in 0..k_users {
                a[k][j] = ch.h_d[k].dotc(&p.w[j]) * inv;
                c[k].push((&l * &p.w[j]).scale(inv));
            }
        }
        Ok(Self { a, c })
    }

    pub fn z(&self, alpha: &CVector<f64>, k: usize, j: usize) -> Cx<f64> {
        self.a[k][j] + self.c[k][j].iter().zip(alpha.iter()).fold(Complex::new(0.0, 0.0), |acc, (c, a)| acc + c * a)
    }

    /// Per-user SINR for reflection coefficients `alpha`.
    pub fn sinrs(&self, alpha: &CVector<f64>) -> Vec<f64> {
        let k_users = self.a.len();
        (0..k_users)
            .map(|k| {
                let interference: f64 = (0..k_users).filter(|j| *j != k).map(|j| self.z(alpha, k, j).norm_sqr()).sum();
                self.z(alpha, k, k).norm_sqr() / (1.0 + interference)
            })
            .collect()
    }

    pub fn sum_rate(&self, alpha: &CVector<f64>) -> f64 {
        self.sinrs(alpha).into_iter().map(|g| (1.0 + g).log2()).sum()
    }
}

/// Variable layout of the IRS subproblem.
#[derive(Debug, Clone)]
pub struct Sp2Layout {
    pub variant: IrsVariant,
    /// Reflection value of each selection row (`0` for the harvest row).
    pub modes: Vec<Cx<f64>>,
    pub elements: usize,
    pub users: usize,
    pub xi: usize,
    /// First interference slack; absent for a single user.
    pub iota: Option<usize>,
}

impl Sp2Layout {
    pub fn new(variant: IrsVariant, bits: u32, elements: usize, users: usize) -> Result<Self> {
        let f = mode_set::<f64>(bits)?;
        let modes = match variant {
            IrsVariant::SelfSustaining => f,
            IrsVariant::FreeDiscrete => f[1..].to_vec(),
            IrsVariant::FreeContinuous => Vec::new(),
        };
        let n_sched = Self::sched_len(variant, modes.len(), elements);
        let iota = (users > 1).then_some(n_sched + users);
        Ok(Self { variant, modes, elements, users, xi: n_sched, iota })
    }

    fn sched_len(variant: IrsVariant, rows: usize, elements: usize) -> usize {
        match variant {
            IrsVariant::FreeContinuous => 2 * elements,
            _ => rows * elements,
        }
    }

    pub fn rows(&self) -> usize {
        self.modes.len()
    }

    pub fn sched_dim(&self) -> usize {
        Self::sched_len(self.variant, self.rows(), self.elements)
    }

    /// Coordinate of `s_{i,n}`.
    pub fn s_index(&self, i: usize, n: usize) -> usize {
        n * self.rows() + i
    }

    /// Real and imaginary parts of `a + sum_n alpha_n c_n` as affine maps of the schedule variables.
    pub fn amplitude(&self, a: Cx<f64>, c: &CVector<f64>) -> (Affine, Affine) {
        let mut re = SparseVec::new();
        let mut im = SparseVec::new();
        match self.variant {
            IrsVariant::FreeContinuous => {
                for (n, cn) in c.iter().enumerate() {
                    re.push(2 * n, cn.re);
                    re.push(2 * n + 1, -cn.im);
                    im.push(2 * n, cn.im);
                    im.push(2 * n + 1, cn.re);
                }
            }
            _ => {
                for (n, cn) in c.iter().enumerate() {
                    for (i, f) in self.modes.iter().enumerate() {
                        if f.norm_sqr() == 0.0 {
                            continue;
                        }
                        let v = f * cn;
                        re.push(self.s_index(i, n), v.re);
                        im.push(self.s_index(i, n), v.im);
                    }
                }
            }
        }
        (Affine::new(re, a.re), Affine::new(im, a.im))
    }

    /// Schedule variables from a relaxed matrix or reflection vector.
    pub fn pack_schedule(&self, s: &DMatrix<f64>, alpha: &CVector<f64>) -> Vec<f64> {
        let mut x = vec![0.0; self.sched_dim()];
        match self.variant {
            IrsVariant::FreeContinuous => {
                for (n, a) in alpha.iter().enumerate() {
                    x[2 * n] = a.re;
                    x[2 * n + 1] = a.im;
                }
            }
            _ => {
                for n in 0..self.elements {
                    for i in 0..self.rows() {
                        x[self.s_index(i, n)] = s[(i, n)];
                    }
                }
            }
        }
        x
    }

    pub fn unpack_s(&self, x: &[f64]) -> DMatrix<f64> {
        match self.variant {
            IrsVariant::FreeContinuous => DMatrix::zeros(0, self.elements),
            _ => DMatrix::from_fn(self.rows(), self.elements, |i, n| x[self.s_index(i, n)]),
        }
    }

    /// Reflection coefficients `alpha_n = sum_i s_in f_i`.
    pub fn alpha(&self, x: &[f64]) -> CVector<f64> {
        match self.variant {
            IrsVariant::FreeContinuous => DVector::from_fn(self.elements, |n, _| Complex::new(x[2 * n], x[2 * n + 1])),
            _ => DVector::from_fn(self.elements, |n, _| {
                self.modes.iter().enumerate().fold(Complex::new(0.0, 0.0), |acc, (i, f)| acc + f * x[self.s_index(i, n)])
            }),
        }
    }

    pub fn harvest_row(&self) -> Option<usize> {
        (self.variant == IrsVariant::SelfSustaining).then_some(0)
    }
}

/// `lambda sum (s - s^2)`.
pub fn penalty(s: &DMatrix<f64>, lambda: f64) -> f64 {
    lambda * s.iter().map(|x| x - x * x).sum::<f64>()
}

/// Largest distance of any entry from the nearest of `{0, 1}`.
pub fn binary_gap(s: &DMatrix<f64>) -> f64 {
    s.iter().map(|x| (x - x.round()).abs()).fold(0.0, f64::max)
}

/// `D2(iota) = -log2(sigma^2 + iota)` and its derivative, physical units.
pub fn d2(iota: f64, sigma2: f64) -> f64 {
    -(sigma2 + iota).log2()
}

pub fn grad_d2(iota: f64, sigma2: f64) -> f64 {
    -1.0 / (std::f64::consts::LN_2 * (sigma2 + iota))
}

/// Per-element coefficient `1 + eta (e_n + sigma_a^2) / P_IRS` of the
/// normalized self-sustainability constraint.
fn harvest_coefficients(ch: &ChannelRealization<f64>, p: &PrecoderSet<f64>, sys: &SystemParams<f64>) -> Vec<f64> {
    element_signal_power(ch, p).iter().map(|e| 1.0 + sys.eta_h * (e + ch.sigma_a2) / sys.p_irs).collect()
}

/// Convex subproblem anchored at `x_t` (schedule coordinates only).
#[derive(Debug, Clone)]
pub struct Sp2Problem {
    pub problem: ConvexProblem,
    pub layout: Sp2Layout,
}

/// Builds the SCA subproblem around the schedule point `sched_t`.
///
/// The objective is `-sum log2(1 + xi + iota)` plus the linearization of
/// `sum log2(1 + iota)` at the tight interference of `sched_t`, plus the
/// linearized binary penalty. Constraints: per-column `sum_i s_in <= 1`,
/// `s >= 0`, the linearized signal constraint, the convex interference
/// constraint and, for the self-sustaining variant, the harvest budget.
pub fn build_sp2(
    sched_t: &[f64],
    layout: &Sp2Layout,
    amp: &Amplitudes,
    ch: &ChannelRealization<f64>,
    p: &PrecoderSet<f64>,
    sys: &SystemParams<f64>,
    lambda: f64,
) -> Result<Sp2Problem> {
    let k_users = layout.users;
    let n = layout.elements;
    if sched_t.len() != layout.sched_dim() || amp.a.len() != k_users {
        return Err(Error::Dimension("schedule anchor does not match the layout".into()));
    }
    let rows = layout.rows();
    let mut problem = ConvexProblem::new();
    match layout.variant {
        IrsVariant::FreeContinuous => {
            problem.add_vector(2 * n, 2, None, None);
        }
        _ => {
            problem.add_vector(rows * n, rows, Some(vec![0.0; rows * n]), None);
        }
    }
    let n_slack = if layout.iota.is_some() { 2 * k_users } else { k_users };
    problem.add_vector(n_slack, 0, Some(vec![-0.5; n_slack]), None);

    let alpha_t = layout.alpha(sched_t);
    let ln2 = std::f64::consts::LN_2;

    // Objective.
    let mut terms = Vec::with_capacity(k_users);
    let mut linear = SparseVec::new();
    let mut constant = 0.0;
    for k in 0..k_users {
        let mut a = SparseVec::unit(layout.xi + k, 1.0);
        if let Some(io) = layout.iota {
            a.push(io + k, 1.0);
            let iota_t: f64 = (0..k_users).filter(|j| *j != k).map(|j| amp.z(&alpha_t, k, j).norm_sqr()).sum();
            linear.push(io + k, 1.0 / (ln2 * (1.0 + iota_t)));
            constant += (1.0 + iota_t).log2() - iota_t / (ln2 * (1.0 + iota_t));
        }
        terms.push((1.0 / ln2, Affine::new(a, 1.0)));
    }
    if lambda > 0.0 && layout.variant != IrsVariant::FreeContinuous {
        for (i, s) in sched_t.iter().enumerate() {
            linear.push(i, lambda * (1.0 - 2.0 * s));
            constant += lambda * s * s;
        }
    }
    problem.objective = Func::NegLogSum { terms, linear: Affine::new(linear, constant) };

    // Column budget or unit disc.
    for col in 0..n {
        match layout.variant {
            IrsVariant::FreeContinuous => {
                let quad = Func::QuadSum {
                    terms: vec![
                        Affine::new(SparseVec::unit(2 * col, 1.0), 0.0),
                        Affine::new(SparseVec::unit(2 * col + 1, 1.0), 0.0),
                    ],
                    linear: Affine::constant(-1.0),
                };
                problem.add_inequality(format!("unit modulus {col}"), quad);
            }
            _ => {
                let a = SparseVec::from_dense(layout.s_index(0, col), &vec![1.0; rows]);
                problem.add_inequality(format!("C4a {col}"), Func::Affine(Affine::new(a, -1.0)));
            }
        }
    }

    if let Some(h) = layout.harvest_row() {
        let coeff = harvest_coefficients(ch, p, sys);
        let mut a = SparseVec::new();
        for (col, c) in coeff.iter().enumerate() {
            a.push(layout.s_index(h, col), -c);
        }
        problem.add_inequality("C3", Func::Affine(Affine::new(a, n as f64)));
    }

    for k in 0..k_users {
        // xi_k <= |z_kk|^2, linearized at the anchor.
        let zt = amp.z(&alpha_t, k, k);
        let (re, im) = layout.amplitude(amp.a[k][k], &amp.c[k][k]);
        let mut a = SparseVec::unit(layout.xi + k, 1.0);
        a.extend_scaled(&re.a, -2.0 * zt.re);
        a.extend_scaled(&im.a, -2.0 * zt.im);
        let c = -2.0 * (zt.re * re.c + zt.im * im.c) + zt.norm_sqr();
        problem.add_inequality(format!("C7 {k}"), Func::Affine(Affine::new(a, c)));

        if let Some(io) = layout.iota {
            let mut quad = Vec::with_capacity(2 * (k_users - 1));
            for j in (0..k_users).filter(|j| *j != k) {
                let (re, im) = layout.amplitude(amp.a[k][j], &amp.c[k][j]);
                quad.push(re);
                quad.push(im);
            }
            problem.add_inequality(
                format!("C8 {k}"),
                Func::QuadSum { terms: quad, linear: Affine::new(SparseVec::unit(io + k, -1.0), 0.0) },
            );
        }
    }
    Ok(Sp2Problem { problem, layout: layout.clone() })
}

/// Strictly interior schedule point near `sched_t`.
fn interior_schedule(layout: &Sp2Layout, sched_t: &[f64], harvest_coeff: &[f64]) -> Vec<f64> {
    let theta = 0.05;
    let n = layout.elements;
    match layout.variant {
        IrsVariant::FreeContinuous => sched_t.iter().map(|x| x * 0.9).collect(),
        IrsVariant::FreeDiscrete => {
            let rows = layout.rows() as f64;
            sched_t.iter().map(|x| (1.0 - theta) * x + theta * 0.5 / rows).collect()
        }
        IrsVariant::SelfSustaining => {
            let surplus: f64 = harvest_coeff.iter().map(|c| c - 1.0).sum();
            let eps = (0.5 * surplus / (n as f64 + surplus)).min(0.1);
            let rows = layout.rows();
            let mut x = vec![0.0; layout.sched_dim()];
            for col in 0..n {
                for i in 0..rows {
                    let harvest_point = if i == 0 { 1.0 - eps } else { eps / (2.0 * (rows - 1) as f64) };
                    let idx = layout.s_index(i, col);
                    x[idx] = (1.0 - theta) * sched_t[idx] + theta * harvest_point;
                }
            }
            x
        }
    }
}

/// Penalized relaxed objective `-sum_k R_k + lambda sum (s - s^2)`.
fn relaxed_objective(layout: &Sp2Layout, amp: &Amplitudes, sched: &[f64], lambda: f64) -> f64 {
    let rate = amp.sum_rate(&layout.alpha(sched));
    let pen = if layout.variant == IrsVariant::FreeContinuous { 0.0 } else { penalty(&layout.unpack_s(sched), lambda) };
    -rate + pen
}

fn complete_start(sp: &Sp2Problem, amp: &Amplitudes, sched: &[f64]) -> Vec<f64> {
    let layout = &sp.layout;
    let alpha = layout.alpha(sched);
    let k_users = layout.users;
    let mut x = sched.to_vec();
    x.resize(sp.problem.dim(), 0.0);
    if let Some(io) = layout.iota {
        // Interference slack strictly above the tight value.
        for k in 0..k_users {
            let i: f64 = (0..k_users).filter(|j| *j != k).map(|j| amp.z(&alpha, k, j).norm_sqr()).sum();
            x[io + k] = i + 0.01 * (1.0 + i);
        }
    }
    for (k, c) in sp.problem.inequalities.iter().filter(|c| c.name.starts_with("C7")).enumerate() {
        // C7 reads xi_k - bound(s) <= 0; place xi_k strictly between -1/2 and the bound.
        let bound = -c.func.value(&x);
        let lower = -0.5;
        x[layout.xi + k] = bound - (0.5 * (bound - lower)).min(0.01 * (1.0 + bound.abs()));
    }
    x
}

/// Rounds a relaxed selection matrix to a binary schedule; returns whether
/// elements had to be switched to harvesting.
pub fn round_schedule(
    s: &DMatrix<f64>,
    layout: &Sp2Layout,
    ch: &ChannelRealization<f64>,
    p: &PrecoderSet<f64>,
    sys: &SystemParams<f64>,
) -> Result<(IrsSchedule<f64>, bool)> {
    // First strictly largest entry wins, so ties go to harvesting, then the lowest phase.
    let mut modes: Vec<usize> = s
        .column_iter()
        .map(|col| {
            let mut best = 0;
            for i in 1..col.len() {
                if col[i] > col[best] {
                    best = i;
                }
            }
            best
        })
        .collect();
    if layout.variant == IrsVariant::FreeDiscrete {
        modes.iter_mut().for_each(|m| *m += 1);
    }
    let bits = (layout.modes.len() - usize::from(layout.variant == IrsVariant::SelfSustaining)).trailing_zeros();
    let schedule = IrsSchedule::from_modes(bits, &modes)?;
    if layout.variant != IrsVariant::SelfSustaining {
        return Ok((schedule, false));
    }
    repair_schedule(schedule, ch, p, sys)
}

/// Switches reflecting elements to harvesting, cheapest first by marginal
/// sum-rate, until the schedule is self-sustaining.
pub fn repair_schedule(
    schedule: IrsSchedule<f64>,
    ch: &ChannelRealization<f64>,
    p: &PrecoderSet<f64>,
    sys: &SystemParams<f64>,
) -> Result<(IrsSchedule<f64>, bool)> {
    let sustains = |s: &IrsSchedule<f64>| -> Result<bool> {
        Ok(harvested_power(ch, s, p, sys.eta_h)? - irs_consumption(s, sys.p_irs) >= 0.0)
    };
    if sustains(&schedule)? {
        return Ok((schedule, false));
    }
    let bits = schedule.bits();
    let mut modes = schedule.modes().ok_or_else(|| Error::Domain("repair needs a binary schedule".into()))?;
    let base = sum_rate(ch, &schedule, p)?;
    let mut losses = Vec::new();
    for n in (0..modes.len()).filter(|n| modes[*n] != 0) {
        let mut trial = modes.clone();
        trial[n] = 0;
        let rate = sum_rate(ch, &IrsSchedule::from_modes(bits, &trial)?, p)?;
        losses.push((base - rate, n));
    }
    losses.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (_, n) in losses {
        modes[n] = 0;
        let s = IrsSchedule::from_modes(bits, &modes)?;
        if sustains(&s)? {
            return Ok((s, true));
        }
    }
    Ok((IrsSchedule::from_modes(bits, &modes)?, true))
}

/// Runs the penalized SCA from `s0` and rounds the result.
///
/// `s0` must be self-sustaining, to within 1e-9 W, for the self-sustaining variant (the
/// all-harvest schedule always is).
pub fn run_algorithm2(
    ch: &ChannelRealization<f64>,
    p: &PrecoderSet<f64>,
    s0: &IrsSchedule<f64>,
    sys: &SystemParams<f64>,
    params: &Alg2Params,
) -> Result<Alg2Output> {
    let variant = params.variant;
    let layout = Sp2Layout::new(variant, sys.bits, ch.elements(), ch.users())?;
    let amp = Amplitudes::new(ch, p)?;
    let n = ch.elements();

    let initial = match variant {
        IrsVariant::FreeContinuous => layout.pack_schedule(&DMatrix::zeros(0, n), s0.alpha()),
        IrsVariant::FreeDiscrete => {
            // Drop the harvest row; harvesting columns start uniform over the phases.
            let s = s0.selection();
            let rows = levels(sys.bits);
            let m = DMatrix::from_fn(rows, n, |i, col| if s[(0, col)] > 0.5 { 1.0 / rows as f64 } else { s[(i + 1, col)] });
            layout.pack_schedule(&m, s0.alpha())
        }
        IrsVariant::SelfSustaining => {
            // Same slack as the output feasibility check.
            if harvested_power(ch, s0, p, sys.eta_h)? < irs_consumption(s0, sys.p_irs) - 1e-9 {
                return Err(Error::Infeasible("initial schedule is not self-sustaining".into()));
            }
            layout.pack_schedule(s0.selection(), s0.alpha())
        }
    };
    let harvest_coeff = harvest_coefficients(ch, p, sys);

    let mut x_t = initial;
    let initial_objective = relaxed_objective(&layout, &amp, &x_t, 0.0);
    let magnitude = initial_objective.abs().max(1e-3);
    let mut lambda = if params.penalty { params.lambda_rel * magnitude } else { 0.0 };
    let cap = params.lambda_cap_rel * magnitude;
    let mut steps = Vec::new();
    let mut iterations = 0;
    let silent = p.total_power() == 0.0;

    for _ in 0..params.max_iter {
        if silent {
            break;
        }
        let sp = build_sp2(&x_t, &layout, &amp, ch, p, sys, lambda)?;
        let mut problem = sp.problem.clone();
        let sched_start = interior_schedule(&layout, &x_t, &harvest_coeff);
        problem.start = Some(complete_start(&sp, &amp, &sched_start));
        let result = solve(&problem, &params.solver);
        if result.status == Status::Infeasible {
            return Err(Error::Solver { status: result.status, context: format!("IRS iteration {iterations}") });
        }
        let x_new: Vec<f64> = result.x[..layout.sched_dim()].to_vec();
        let before = relaxed_objective(&layout, &amp, &x_t, lambda);
        let after = relaxed_objective(&layout, &amp, &x_new, lambda);
        let gap = if variant == IrsVariant::FreeContinuous { 0.0 } else { binary_gap(&layout.unpack_s(&x_new)) };
        if !after.is_finite() || after > before + 1e-9 {
            steps.push(Sp2Step { lambda, before, after, binary_gap: gap, status: result.status, accepted: false });
            break;
        }
        steps.push(Sp2Step { lambda, before, after, binary_gap: gap, status: result.status, accepted: true });
        x_t = x_new;
        iterations += 1;
        // A fractional vertex can persist at the penalty cap when the harvest
        // budget is tight; rounding resolves it.
        let settled = gap < params.binary_tol || !params.penalty || lambda >= cap;
        if (before - after).abs() < params.tol && settled {
            break;
        }
        if params.penalty {
            lambda = (lambda * params.lambda_growth).min(cap);
        }
    }

    let alpha = layout.alpha(&x_t);
    let relaxed_rate = amp.sum_rate(&alpha);
    let s = layout.unpack_s(&x_t);
    let (schedule, repaired) = match variant {
        IrsVariant::FreeContinuous => {
            let unit = alpha.map(|a| if a.norm() > 0.0 { a.unscale(a.norm()) } else { Complex::new(1.0, 0.0) });
            (IrsSchedule::continuous(sys.bits, unit), false)
        }
        _ => round_schedule(&s, &layout, ch, p, sys)?,
    };
    let rounded_rate = sum_rate(ch, &schedule, p)?;
    let xi = (0..ch.users()).map(|k| amp.z(&alpha, k, k).norm_sqr() * ch.sigma_k2[k]).collect();
    let iota = (0..ch.users())
        .map(|k| (0..ch.users()).filter(|j| *j != k).map(|j| amp.z(&alpha, k, j).norm_sqr()).sum::<f64>() * ch.sigma_k2[k])
        .collect();
    let state = Sp2State { s, v: alpha.map(|a| a.conj()), xi, iota, lambda, iterations };
    Ok(Alg2Output { state, steps, schedule, relaxed_rate, rounded_rate, repaired })
}
