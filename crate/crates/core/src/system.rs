//! Decision variables of the joint design and evaluation of every physical
//! quantity: SINR, sum-rate, harvested power, IRS consumption and constraint
//! slacks.
//!
//! Mode index `0` of an [`IrsSchedule`] is the harvesting mode; index `i >= 1`
//! reflects with phase `2 pi (i - 1) / B`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::channel::{ChannelRealization, ScenarioConfig};
use crate::error::{Error, Result};
use crate::scalar::{abs2, cis, lit, log2, norm2, outer, CMatrix, CVector, Real};

/// Number of phase levels `B = 2^b`.
pub fn levels(bits: u32) -> usize {
    1usize << bits
}

/// Uniformly quantized phases `{0, 2pi/B, ..., 2pi(B-1)/B}`.
pub fn phase_set<T: Real>(bits: u32) -> Result<Vec<T>> {
    if bits < 1 || bits > 16 {
        return Err(Error::Domain(format!("bit resolution must lie in [1, 16], got {bits}")));
    }
    let b = levels(bits);
    Ok((0..b).map(|i| T::two_pi() * lit::<T>(i as f64) / lit::<T>(b as f64)).collect())
}

/// Generalized mode set: `0` (harvest) followed by the `B` unit phasors.
pub fn mode_set<T: Real>(bits: u32) -> Result<Vec<Complex<T>>> {
    let mut modes = vec![Complex::new(T::zero(), T::zero())];
    modes.extend(phase_set::<T>(bits)?.into_iter().map(cis));
    Ok(modes)
}

/// Which variant of the mode-selection matrix a schedule holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleForm {
    /// Every column of `S` is a unit vector.
    Binary,
    /// Entries of `S` in `[0, 1]` with column sums at most one.
    Relaxed,
    /// Arbitrary reflection coefficients with unit modulus, no harvesting.
    Continuous,
}

/// Per-element IRS mode and phase assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct IrsSchedule<T: Real> {
    bits: u32,
    s: DMatrix<T>,
    alpha: CVector<T>,
    form: ScheduleForm,
}

impl<T: Real> IrsSchedule<T> {
    /// Every element harvests.
    pub fn all_harvest(elements: usize, bits: u32) -> Result<Self> {
        Self::from_modes(bits, &vec![0; elements])
    }

    /// Binary schedule from one mode index per element.
    pub fn from_modes(bits: u32, modes: &[usize]) -> Result<Self> {
        let f = mode_set::<T>(bits)?;
        let mut s = DMatrix::zeros(f.len(), modes.len());
        let mut alpha = DVector::zeros(modes.len());
        for (n, &i) in modes.iter().enumerate() {
            if i >= f.len() {
                return Err(Error::Domain(format!("mode index {i} out of range for b = {bits}")));
            }
            s[(i, n)] = T::one();
            alpha[n] = f[i];
        }
        Ok(Self { bits, s, alpha, form: ScheduleForm::Binary })
    }

    /// Relaxed schedule; `alpha` follows from the coupling `alpha_n = sum_i s_in f_i`.
    pub fn from_relaxed(bits: u32, s: DMatrix<T>) -> Result<Self> {
        let f = mode_set::<T>(bits)?;
        if s.nrows() != f.len() {
            return Err(Error::Dimension(format!("S has {} rows, expected {}", s.nrows(), f.len())));
        }
        let alpha = DVector::from_iterator(
            s.ncols(),
            s.column_iter().map(|col| {
                col.iter().zip(&f).fold(Complex::new(T::zero(), T::zero()), |acc, (x, fi)| acc + fi.scale(*x))
            }),
        );
        Ok(Self { bits, s, alpha, form: ScheduleForm::Relaxed })
    }

    /// Continuous reflection coefficients, every element reflecting.
    pub fn continuous(bits: u32, alpha: CVector<T>) -> Self {
        let rows = levels(bits) + 1;
        let s = DMatrix::zeros(rows, alpha.len());
        Self { bits, s, alpha, form: ScheduleForm::Continuous }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn elements(&self) -> usize {
        self.alpha.len()
    }

    pub fn form(&self) -> ScheduleForm {
        self.form
    }

    /// Mode-selection matrix, `(B + 1) x N`.
    pub fn selection(&self) -> &DMatrix<T> {
        &self.s
    }

    /// Reflection coefficients `alpha_n`.
    pub fn alpha(&self) -> &CVector<T> {
        &self.alpha
    }

    /// Aggregated phase vector `v = conj(alpha)`.
    pub fn v(&self) -> CVector<T> {
        self.alpha.map(|a| a.conj())
    }

    /// Harvesting weights `s_{0,n}` (zero for continuous schedules).
    pub fn harvest_weights(&self) -> DVector<T> {
        self.s.row(0).transpose()
    }

    pub fn harvesting_count(&self) -> T {
        self.s.row(0).sum()
    }

    /// Mode index per element, for binary schedules.
    pub fn modes(&self) -> Option<Vec<usize>> {
        if self.form != ScheduleForm::Binary {
            return None;
        }
        Some(self.s.column_iter().map(|c| c.iamax()).collect())
    }

    /// True when every entry is 0 or 1, every column sums to one and the
    /// coupling with `alpha` holds.
    pub fn is_binary(&self) -> bool {
        if self.form == ScheduleForm::Continuous {
            return false;
        }
        let Ok(f) = mode_set::<T>(self.bits) else { return false };
        self.s.column_iter().zip(self.alpha.iter()).all(|(col, a)| {
            let ones = col.iter().filter(|x| **x == T::one()).count();
            let zeros = col.iter().filter(|x| **x == T::zero()).count();
            ones == 1 && zeros + 1 == col.len() && abs2(*a - f[col.iamax()]) <= lit(1e-24)
        })
    }

    /// True when every `alpha_n` is a member of the generalized mode set.
    pub fn phases_in_set(&self) -> bool {
        let Ok(f) = mode_set::<T>(self.bits) else { return false };
        self.alpha.iter().all(|a| f.iter().any(|fi| abs2(*a - *fi) <= lit(1e-24)))
    }
}

/// Per-user precoding vectors and optionally their lifted matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet<T: Real> {
    pub w: Vec<CVector<T>>,
    pub lifted: Option<Vec<CMatrix<T>>>,
}

impl<T: Real> PrecoderSet<T> {
    pub fn new(w: Vec<CVector<T>>) -> Self {
        Self { w, lifted: None }
    }

    pub fn zeros(users: usize, antennas: usize) -> Self {
        Self::new(vec![DVector::zeros(antennas); users])
    }

    /// Attaches the rank-one lifts `w_k w_k^H`.
    pub fn with_lifted(mut self) -> Self {
        self.lifted = Some(self.w.iter().map(outer).collect());
        self
    }

    pub fn users(&self) -> usize {
        self.w.len()
    }

    /// Total transmit power `sum_k ||w_k||^2`.
    pub fn total_power(&self) -> T {
        self.w.iter().fold(T::zero(), |acc, w| acc + norm2(w))
    }

    /// Common rescale of every vector.
    pub fn scaled(&self, factor: T) -> Self {
        Self::new(self.w.iter().map(|w| w.map(|z| z.scale(factor))).collect())
    }
}

/// Scalar system parameters in linear units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams<T: Real> {
    /// AP power budget, W.
    pub p_max: T,
    /// Per-element circuit consumption, W.
    pub p_irs: T,
    pub eta_h: T,
    pub bits: u32,
}

impl<T: Real> SystemParams<T> {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self { p_max: lit(cfg.p_max_watts()), p_irs: lit(cfg.p_irs_watts()), eta_h: lit(cfg.eta_h), bits: cfg.bits }
    }
}

fn check_user<T: Real>(ch: &ChannelRealization<T>, k: usize) -> Result<()> {
    if k >= ch.users() {
        return Err(Error::Dimension(format!("user index {k} out of range for K = {}", ch.users())));
    }
    Ok(())
}

fn check_schedule<T: Real>(ch: &ChannelRealization<T>, irs: &IrsSchedule<T>) -> Result<()> {
    if irs.elements() != ch.elements() {
        return Err(Error::Dimension(format!(
            "schedule has {} elements, channel has {}",
            irs.elements(),
            ch.elements()
        )));
    }
    Ok(())
}

/// Effective channel `m_k = h_d,k + G^H diag(alpha)^H h_r,k`.
pub fn effective_channel<T: Real>(ch: &ChannelRealization<T>, irs: &IrsSchedule<T>, k: usize) -> Result<CVector<T>> {
    check_user(ch, k)?;
    check_schedule(ch, irs)?;
    let weighted = irs.alpha().zip_map(&ch.h_r[k], |a, h| a.conj() * h);
    Ok(&ch.h_d[k] + ch.g.adjoint() * weighted)
}

/// Cascaded channel `L_k = diag(h_r,k^H) G`, `N x M`.
pub fn cascaded_channel<T: Real>(ch: &ChannelRealization<T>, k: usize) -> Result<CMatrix<T>> {
    check_user(ch, k)?;
    let mut l = ch.g.clone();
    for (n, mut row) in l.row_iter_mut().enumerate() {
        let c = ch.h_r[k][n].conj();
        row.iter_mut().for_each(|z| *z *= c);
    }
    Ok(l)
}

/// Effective channel through the identity `m_k = h_d,k + L_k^H v`.
pub fn effective_channel_cascaded<T: Real>(ch: &ChannelRealization<T>, v: &CVector<T>, k: usize) -> Result<CVector<T>> {
    let l = cascaded_channel(ch, k)?;
    if v.len() != l.nrows() {
        return Err(Error::Dimension(format!("v has {} entries, expected {}", v.len(), l.nrows())));
    }
    Ok(&ch.h_d[k] + l.adjoint() * v)
}

fn check_precoders<T: Real>(ch: &ChannelRealization<T>, p: &PrecoderSet<T>) -> Result<()> {
    if p.users() != ch.users() || p.w.iter().any(|w| w.len() != ch.antennas()) {
        return Err(Error::Dimension(format!(
            "expected {} precoders of length {}",
            ch.users(),
            ch.antennas()
        )));
    }
    Ok(())
}

/// SINR of every user given effective channels.
pub fn sinrs_from_effective<T: Real>(m: &[CVector<T>], p: &PrecoderSet<T>, sigma2: &[T]) -> Vec<T> {
    (0..m.len())
        .map(|k| {
            let gains: Vec<T> = p.w.iter().map(|w| abs2(m[k].dotc(w))).collect();
            let interference = gains.iter().enumerate().filter(|(j, _)| *j != k).fold(T::zero(), |a, (_, g)| a + *g);
            gains[k] / (sigma2[k] + interference)
        })
        .collect()
}

/// SINR of every user.
pub fn sinrs<T: Real>(ch: &ChannelRealization<T>, irs: &IrsSchedule<T>, p: &PrecoderSet<T>) -> Result<Vec<T>> {
    check_precoders(ch, p)?;
    let m = (0..ch.users()).map(|k| effective_channel(ch, irs, k)).collect::<Result<Vec<_>>>()?;
    Ok(sinrs_from_effective(&m, p, &ch.sigma_k2))
}

/// SINR of user `k`.
pub fn sinr<T: Real>(ch: &ChannelRealization<T>, irs: &IrsSchedule<T>, p: &PrecoderSet<T>, k: usize) -> Result<T> {
    check_user(ch, k)?;
    Ok(sinrs(ch, irs, p)?[k])
}

/// Per-user achievable rates, bits/s/Hz.
pub fn user_rates<T: Real>(ch: &ChannelRealization<T>, irs: &IrsSchedule<T>, p: &PrecoderSet<T>) -> Result<Vec<T>> {
    Ok(sinrs(ch, irs, p)?.into_iter().map(|g| log2(T::one() + g)).collect())
}

/// Sum-rate, bits/s/Hz.
pub fn sum_rate<T: Real>(ch: &ChannelRealization<T>, irs: &IrsSchedule<T>, p: &PrecoderSet<T>) -> Result<T> {
    Ok(user_rates(ch, irs, p)?.into_iter().fold(T::zero(), |a, r| a + r))
}

/// Per-element received signal power `e_n = sum_k |(G w_k)_n|^2`, W.
pub fn element_signal_power<T: Real>(ch: &ChannelRealization<T>, p: &PrecoderSet<T>) -> DVector<T> {
    let mut e = DVector::zeros(ch.elements());
    for w in &p.w {
        let gw = &ch.g * w;
        e.iter_mut().zip(gw.iter()).for_each(|(acc, z)| *acc += abs2(*z));
    }
    e
}

/// Power harvested by the IRS, W.
pub fn harvested_power<T: Real>(
    ch: &ChannelRealization<T>,
    irs: &IrsSchedule<T>,
    p: &PrecoderSet<T>,
    eta_h: T,
) -> Result<T> {
    check_schedule(ch, irs)?;
    check_precoders(ch, p)?;
    let e = element_signal_power(ch, p);
    let s1 = irs.harvest_weights();
    let total = e.iter().zip(s1.iter()).fold(T::zero(), |a, (en, s)| a + *s * (*en + ch.sigma_a2));
    Ok(eta_h * total)
}

/// Circuit consumption of the reflecting elements, W.
pub fn irs_consumption<T: Real>(irs: &IrsSchedule<T>, p_irs: T) -> T {
    (lit::<T>(irs.elements() as f64) - irs.harvesting_count()) * p_irs
}

/// Which constraints a scheme is held to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintSet {
    /// Harvested power must cover the IRS consumption.
    pub self_sustaining: bool,
    /// Reflection coefficients must come from the discrete mode set.
    pub discrete_phases: bool,
}

impl ConstraintSet {
    pub const FULL: Self = Self { self_sustaining: true, discrete_phases: true };
}

/// Exact recomputation of every constraint of the joint problem.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport<T: Real> {
    /// `P_max - sum_k ||w_k||^2`, W.
    pub c1_slack: T,
    /// Harvested minus consumed power, W.
    pub c3_slack: T,
    pub binary_ok: bool,
    pub phase_in_set: bool,
    /// Largest violation of a checked inequality in natural units, zero if none.
    pub worst_violation: T,
    pub constraints: ConstraintSet,
}

impl<T: Real> FeasibilityReport<T> {
    /// Feasible with absolute tolerances on the power budget and the
    /// self-sustainability constraint.
    pub fn is_feasible(&self, c1_tol: T, c3_tol: T) -> bool {
        let discrete = !self.constraints.discrete_phases || (self.binary_ok && self.phase_in_set);
        let sustain = !self.constraints.self_sustaining || self.c3_slack >= -c3_tol;
        self.c1_slack >= -c1_tol && sustain && discrete
    }
}

/// Recomputes every constraint for a candidate solution.
pub fn check_feasibility<T: Real>(
    ch: &ChannelRealization<T>,
    irs: &IrsSchedule<T>,
    p: &PrecoderSet<T>,
    params: &SystemParams<T>,
    constraints: ConstraintSet,
) -> Result<FeasibilityReport<T>> {
    let c1_slack = params.p_max - p.total_power();
    let c3_slack = harvested_power(ch, irs, p, params.eta_h)? - irs_consumption(irs, params.p_irs);
    let mut worst = (-c1_slack).max(T::zero());
    if constraints.self_sustaining {
        worst = worst.max(-c3_slack);
    }
    Ok(FeasibilityReport {
        c1_slack,
        c3_slack,
        binary_ok: irs.is_binary(),
        phase_in_set: irs.phases_in_set(),
        worst_violation: worst,
        constraints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn scalar_channel(g: f64, hr: f64, hd: f64, sigma2: f64, sigma_a2: f64) -> ChannelRealization<f64> {
        ChannelRealization::new(
            DMatrix::from_element(1, 1, c(g, 0.0)),
            vec![DVector::from_element(1, c(hr, 0.0))],
            vec![DVector::from_element(1, c(hd, 0.0))],
            vec![sigma2],
            sigma_a2,
        )
        .unwrap()
    }

    #[test]
    fn phase_and_mode_sets() {
        assert_eq!(phase_set::<f64>(1).unwrap(), vec![0.0, PI]);
        let p2 = phase_set::<f64>(2).unwrap();
        for (a, b) in p2.iter().zip([0.0, PI / 2.0, PI, 1.5 * PI]) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        let p3 = phase_set::<f64>(3).unwrap();
        assert_eq!(p3.len(), 8);
        assert_relative_eq!(p3[7], 7.0 * PI / 4.0, epsilon = 1e-15);
        assert!(matches!(phase_set::<f64>(0), Err(Error::Domain(_))));

        let f = mode_set::<f64>(1).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f[0], c(0.0, 0.0));
        assert_relative_eq!(f[1].re, 1.0);
        assert_relative_eq!(f[2].re, -1.0);
        assert!(f[2].im.abs() < 1e-15);
        let f3 = mode_set::<f64>(3).unwrap();
        assert_eq!(f3.len(), 9);
        assert!(f3[1..].iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn all_harvest_channel_is_direct() {
        let ch = scalar_channel(0.3, 0.7, 0.2, 1e-6, 1e-14);
        let irs = IrsSchedule::all_harvest(1, 1).unwrap();
        assert_eq!(effective_channel(&ch, &irs, 0).unwrap(), ch.h_d[0]);
        assert!(irs.is_binary() && irs.phases_in_set());
        assert!(effective_channel(&ch, &irs, 1).is_err());
    }

    #[test]
    fn single_element_effective_channel_by_hand() {
        let ch = ChannelRealization::new(
            DMatrix::from_row_slice(1, 2, &[c(1.0, 2.0), c(0.5, -1.0)]),
            vec![DVector::from_element(1, c(0.3, 0.4))],
            vec![DVector::from_row_slice(&[c(0.1, 0.0), c(0.0, 0.2)])],
            vec![1.0],
            1.0,
        )
        .unwrap();
        let irs = IrsSchedule::from_modes(1, &[1]).unwrap();
        let m = effective_channel(&ch, &irs, 0).unwrap();
        // conj(G_1m) * h_r
        let expect = [c(0.1, 0.0) + c(1.0, -2.0) * c(0.3, 0.4), c(0.0, 0.2) + c(0.5, 1.0) * c(0.3, 0.4)];
        for (a, b) in m.iter().zip(expect) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-15);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-15);
        }
        let m2 = effective_channel_cascaded(&ch, &irs.v(), 0).unwrap();
        assert!((m - m2).norm() < 1e-15);
    }

    #[test]
    fn sinr_and_rate_arithmetic() {
        let ch = scalar_channel(0.0, 0.0, 1e-3, 1e-6, 1e-14);
        let irs = IrsSchedule::all_harvest(1, 1).unwrap();
        let p = PrecoderSet::new(vec![DVector::from_element(1, c(2.0, 0.0))]);
        assert_relative_eq!(sinr(&ch, &irs, &p, 0).unwrap(), 4.0, max_relative = 1e-12);
        assert_relative_eq!(sum_rate(&ch, &irs, &p).unwrap(), 5f64.log2(), max_relative = 1e-12);
        let zero = PrecoderSet::zeros(1, 1);
        assert_eq!(sinr(&ch, &irs, &zero, 0).unwrap(), 0.0);
        assert_eq!(sum_rate(&ch, &irs, &zero).unwrap(), 0.0);
    }

    #[test]
    fn harvest_arithmetic() {
        let ch = scalar_channel(0.01, 0.0, 0.0, 1e-6, 1e-14);
        let p = PrecoderSet::new(vec![DVector::from_element(1, c(2.0, 0.0))]);
        let harvest = IrsSchedule::all_harvest(1, 1).unwrap();
        assert_relative_eq!(harvested_power(&ch, &harvest, &p, 0.8).unwrap(), 0.8 * (4e-4 + 1e-14), max_relative = 1e-12);
        let reflect = IrsSchedule::from_modes(1, &[2]).unwrap();
        assert_eq!(harvested_power(&ch, &reflect, &p, 0.8).unwrap(), 0.0);
    }

    #[test]
    fn consumption_arithmetic() {
        let p_irs = crate::channel::dbm_to_watts(1.0);
        let reflect = IrsSchedule::<f64>::from_modes(3, &[1; 256]).unwrap();
        assert_relative_eq!(irs_consumption(&reflect, p_irs), 0.3223, max_relative = 1e-3);
        let harvest = IrsSchedule::<f64>::all_harvest(256, 3).unwrap();
        assert_eq!(irs_consumption(&harvest, p_irs), 0.0);
        let half = IrsSchedule::<f64>::from_modes(3, &[0, 0, 4, 7]).unwrap();
        assert_relative_eq!(irs_consumption(&half, p_irs), 2.0 * p_irs, max_relative = 1e-15);
    }

    #[test]
    fn feasibility_reports() {
        let cfg = ScenarioConfig { elements: 256, antennas: 2, users: 1, ..Default::default() };
        let mut rng = crate::channel::seeded_rng(5, 0);
        let (_, ch) = crate::channel::draw_realization::<f64, _>(&cfg, &mut rng).unwrap();
        let params = SystemParams::from_config(&cfg);
        let zero = PrecoderSet::zeros(1, 2);
        let harvest = IrsSchedule::all_harvest(256, 3).unwrap();
        let rep = check_feasibility(&ch, &harvest, &zero, &params, ConstraintSet::FULL).unwrap();
        assert!(rep.is_feasible(0.0, 0.0));
        assert_eq!(rep.worst_violation, 0.0);

        let tiny = SystemParams { p_max: 1e-9, ..params };
        let reflect = IrsSchedule::from_modes(3, &[1; 256]).unwrap();
        let rep = check_feasibility(&ch, &reflect, &zero, &tiny, ConstraintSet::FULL).unwrap();
        assert!(!rep.is_feasible(1e-7, 1e-9));
        assert!(rep.worst_violation > 0.3);
        let relaxed = ConstraintSet { self_sustaining: false, discrete_phases: true };
        let rep = check_feasibility(&ch, &reflect, &zero, &tiny, relaxed).unwrap();
        assert!(rep.is_feasible(0.0, 0.0));
    }

    #[test]
    fn relaxed_coupling_and_binary_flags() {
        let s = DMatrix::from_row_slice(3, 2, &[0.4, 0.0, 0.35, 1.0, 0.25, 0.0]);
        let irs = IrsSchedule::<f64>::from_relaxed(1, s.clone()).unwrap();
        assert_relative_eq!(irs.alpha()[0].re, 0.1, epsilon = 1e-15);
        assert_relative_eq!(irs.alpha()[1].re, 1.0, epsilon = 1e-15);
        assert!(!irs.is_binary());
        let binary = IrsSchedule::<f64>::from_relaxed(1, DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 1.0])).unwrap();
        assert!(binary.is_binary());
        let cont = IrsSchedule::<f64>::continuous(1, DVector::from_element(2, c(0.6, 0.8)));
        assert!(!cont.phases_in_set());
        assert_eq!(cont.harvesting_count(), 0.0);
    }

    #[test]
    fn f32_evaluation_tracks_f64() {
        let cfg = ScenarioConfig { elements: 16, antennas: 4, ..Default::default() };
        let (_, ch) = crate::channel::draw_realization::<f64, _>(&cfg, &mut crate::channel::seeded_rng(2, 0)).unwrap();
        let irs = IrsSchedule::<f64>::from_modes(3, &(0..16).map(|n| n % 9).collect::<Vec<_>>()).unwrap();
        let p = PrecoderSet::new(ch.h_d.iter().map(|h| h.unscale(h.norm())).collect());
        let r64 = sum_rate(&ch, &irs, &p).unwrap();
        let ch32 = ch.cast::<f32>();
        let irs32 = IrsSchedule::<f32>::from_modes(3, &irs.modes().unwrap()).unwrap();
        let p32 = PrecoderSet::new(p.w.iter().map(|w| w.map(|z| Complex::new(z.re as f32, z.im as f32))).collect());
        let r32 = sum_rate(&ch32, &irs32, &p32).unwrap();
        assert_relative_eq!(r32 as f64, r64, max_relative = 1e-4);
    }
}
