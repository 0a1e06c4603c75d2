//! Scenario geometry, large-scale path loss and Rician small-scale fading.
//!
//! Every physical quantity is kept in linear SI units (watts, meters, hertz)
//! once it leaves [`ScenarioConfig`]; dB and dBm only exist on the config
//! surface.
//!
//! Layout: the AP sits at the origin with a half-wavelength ULA along the
//! y axis, the users lie on a circle of radius `radius` centred at `(d0, 0)`,
//! and the IRS is a half-wavelength URA mounted in the x-z plane at
//! `(d, d_y)`.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{lit, CMatrix, CVector, Real};

/// Speed of light used for the carrier wavelength.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;
/// Reference distance of the path-loss model, meters.
pub const REFERENCE_DISTANCE: f64 = 10.0;

/// Converts a power level in dBm to watts.
pub fn dbm_to_watts(x_dbm: f64) -> f64 {
    10f64.powf(x_dbm / 10.0) * 1e-3
}

/// Converts watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

/// Converts a gain in dB (or dBi) to a linear power ratio.
pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// The three propagation links of the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    /// AP to user (direct link).
    ApUser,
    /// AP to IRS.
    ApIrs,
    /// IRS to user.
    IrsUser,
}

/// Per-link scalar parameters (path-loss exponents or Rician factors).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub ap_user: f64,
    pub ap_irs: f64,
    pub irs_user: f64,
}

impl LinkParams {
    pub fn get(&self, link: Link) -> f64 {
        match link {
            Link::ApUser => self.ap_user,
            Link::ApIrs => self.ap_irs,
            Link::IrsUser => self.irs_user,
        }
    }
}

/// Structure of the deterministic line-of-sight factor of Rician links.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LosModel {
    /// Planar-wave steering phases from the array geometry.
    Geometric,
    /// Independent uniformly distributed unit-modulus phases per entry.
    Iid,
}

/// Physical scenario. Values are stored in the units users configure them in.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// AP antenna count `M`.
    pub antennas: usize,
    /// IRS element count `N`.
    pub elements: usize,
    /// IRS rows; `0` selects the most square factorization of `elements`.
    pub irs_rows: usize,
    /// User count `K`.
    pub users: usize,
    /// AP to user-circle-centre distance, m.
    pub d0: f64,
    /// AP to IRS horizontal distance, m.
    pub d: f64,
    /// IRS vertical offset, m.
    pub d_y: f64,
    /// User circle radius, m.
    pub radius: f64,
    pub carrier_hz: f64,
    /// Recorded for reference only; rates are per hertz.
    pub bandwidth_hz: f64,
    pub p_max_dbm: f64,
    /// Phase shifter resolution `b` in bits.
    pub bits: u32,
    /// Per-element circuit consumption `P_IRS(b)`, dBm.
    pub p_irs_dbm: f64,
    /// Harvesting efficiency in `[0, 1]`.
    pub eta_h: f64,
    pub exponents: LinkParams,
    pub rician: LinkParams,
    pub gain_ap_dbi: f64,
    pub gain_irs_dbi: f64,
    pub gain_user_dbi: f64,
    pub thermal_noise_dbm: f64,
    pub quantization_noise_dbm: f64,
    pub irs_noise_dbm: f64,
    pub los: LosModel,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            antennas: 8,
            elements: 256,
            irs_rows: 0,
            users: 2,
            d0: 60.0,
            d: 15.0,
            d_y: 1.0,
            radius: 1.0,
            carrier_hz: 470e6,
            bandwidth_hz: 200e3,
            p_max_dbm: 38.0,
            bits: 3,
            p_irs_dbm: 1.0,
            eta_h: 0.8,
            exponents: LinkParams { ap_user: 3.6, ap_irs: 2.2, irs_user: 2.2 },
            rician: LinkParams { ap_user: 0.0, ap_irs: 2.0, irs_user: 2.0 },
            gain_ap_dbi: 10.0,
            gain_irs_dbi: 10.0,
            gain_user_dbi: 0.0,
            thermal_noise_dbm: -110.0,
            quantization_noise_dbm: -47.0,
            irs_noise_dbm: -110.0,
            los: LosModel::Geometric,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    /// Checks every range invariant of the scenario.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Domain(msg.to_string()));
        if self.antennas < 2 {
            return fail("antenna count M must exceed 1");
        }
        if self.users < 1 {
            return fail("user count K must be at least 1");
        }
        if self.elements < 1 {
            return fail("IRS element count N must be at least 1");
        }
        if self.bits < 1 || self.bits > 16 {
            return fail("bit resolution b must lie in [1, 16]");
        }
        if !(0.0..=1.0).contains(&self.eta_h) {
            return fail("harvesting efficiency must lie in [0, 1]");
        }
        for (name, v) in [
            ("d0", self.d0),
            ("d", self.d),
            ("d_y", self.d_y),
            ("radius", self.radius),
            ("carrier frequency", self.carrier_hz),
            ("bandwidth", self.bandwidth_hz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for link in [Link::ApUser, Link::ApIrs, Link::IrsUser] {
            if !(self.rician.get(link) >= 0.0) || !self.exponents.get(link).is_finite() {
                return fail("Rician factors must be non-negative and exponents finite");
            }
        }
        if self.irs_rows > 0 && self.elements % self.irs_rows != 0 {
            return Err(Error::Domain(format!(
                "IRS rows {} do not divide N = {}",
                self.irs_rows, self.elements
            )));
        }
        Ok(())
    }

    pub fn p_max_watts(&self) -> f64 {
        dbm_to_watts(self.p_max_dbm)
    }

    pub fn p_irs_watts(&self) -> f64 {
        dbm_to_watts(self.p_irs_dbm)
    }

    /// User noise power: thermal plus quantization noise, in watts.
    pub fn user_noise_watts(&self) -> f64 {
        dbm_to_watts(self.thermal_noise_dbm) + dbm_to_watts(self.quantization_noise_dbm)
    }

    pub fn irs_noise_watts(&self) -> f64 {
        dbm_to_watts(self.irs_noise_dbm)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Rows and columns of the IRS array.
    pub fn ura_shape(&self) -> (usize, usize) {
        let n = self.elements;
        let rows = if self.irs_rows > 0 {
            self.irs_rows
        } else {
            (1..=n).filter(|r| n % r == 0 && r * r <= n).max().unwrap_or(1)
        };
        (rows, n / rows)
    }

    fn gains(&self, link: Link) -> (f64, f64) {
        match link {
            Link::ApUser => (self.gain_ap_dbi, self.gain_user_dbi),
            Link::ApIrs => (self.gain_ap_dbi, self.gain_irs_dbi),
            Link::IrsUser => (self.gain_irs_dbi, self.gain_user_dbi),
        }
    }
}

/// Free-space gain at the reference distance, `(lambda / (4 pi d_ref))^2`.
pub fn reference_gain(carrier_hz: f64) -> f64 {
    let lambda = SPEED_OF_LIGHT / carrier_hz;
    (lambda / (4.0 * PI * REFERENCE_DISTANCE)).powi(2)
}

/// Linear large-scale power gain of a link including antenna gains.
pub fn path_gain(dist: f64, exponent: f64, cfg: &ScenarioConfig, link: Link) -> Result<f64> {
    if !(dist > 0.0) || !dist.is_finite() {
        return Err(Error::Domain(format!("link distance must be positive, got {dist}")));
    }
    let (tx, rx) = cfg.gains(link);
    Ok(db_to_linear(tx) * db_to_linear(rx)
        * reference_gain(cfg.carrier_hz)
        * (dist / REFERENCE_DISTANCE).powf(-exponent))
}

/// Node positions of one scenario draw (meters, 2-D).
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub ap: [f64; 2],
    pub irs: [f64; 2],
    pub center: [f64; 2],
    pub users: Vec<[f64; 2]>,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn direction(from: [f64; 2], to: [f64; 2]) -> [f64; 2] {
    let r = dist(from, to);
    [(to[0] - from[0]) / r, (to[1] - from[1]) / r]
}

impl Geometry {
    /// Places users at the given angles on the user circle.
    pub fn with_angles(cfg: &ScenarioConfig, angles: &[f64]) -> Self {
        let center = [cfg.d0, 0.0];
        let users = angles
            .iter()
            .map(|a| [center[0] + cfg.radius * a.cos(), center[1] + cfg.radius * a.sin()])
            .collect();
        Self { ap: [0.0, 0.0], irs: [cfg.d, cfg.d_y], center, users }
    }

    pub fn ap_user_distance(&self, k: usize) -> f64 {
        dist(self.ap, self.users[k])
    }

    pub fn irs_user_distance(&self, k: usize) -> f64 {
        dist(self.irs, self.users[k])
    }

    pub fn ap_irs_distance(&self) -> f64 {
        dist(self.ap, self.irs)
    }
}

/// Draws `K` user angles uniformly on `[0, 2 pi)` and lays out the scenario.
pub fn build_geometry<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Geometry {
    let angles: Vec<f64> = (0..cfg.users).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
    Geometry::with_angles(cfg, &angles)
}

/// Deterministic generator for stream `stream` of seed `seed`.
///
/// Distinct `(seed, stream)` pairs give independent ChaCha streams.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One Monte-Carlo channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T: Real> {
    /// AP to IRS, `N x M`.
    pub g: CMatrix<T>,
    /// IRS to user `k`, length `N`.
    pub h_r: Vec<CVector<T>>,
    /// AP to user `k`, length `M`.
    pub h_d: Vec<CVector<T>>,
    /// Per-user receiver noise power, W.
    pub sigma_k2: Vec<T>,
    /// Per-element IRS noise power, W.
    pub sigma_a2: T,
}

impl<T: Real> ChannelRealization<T> {
    /// Builds a realization and checks its invariants.
    pub fn new(
        g: CMatrix<T>,
        h_r: Vec<CVector<T>>,
        h_d: Vec<CVector<T>>,
        sigma_k2: Vec<T>,
        sigma_a2: T,
    ) -> Result<Self> {
        let ch = Self { g, h_r, h_d, sigma_k2, sigma_a2 };
        ch.validate()?;
        Ok(ch)
    }

    pub fn antennas(&self) -> usize {
        self.g.ncols()
    }

    pub fn elements(&self) -> usize {
        self.g.nrows()
    }

    pub fn users(&self) -> usize {
        self.h_d.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m, k) = (self.elements(), self.antennas(), self.users());
        if self.h_r.len() != k || self.sigma_k2.len() != k {
            return Err(Error::Dimension(format!(
                "{k} direct channels but {} reflected channels and {} noise powers",
                self.h_r.len(),
                self.sigma_k2.len()
            )));
        }
        if self.h_r.iter().any(|h| h.len() != n) || self.h_d.iter().any(|h| h.len() != m) {
            return Err(Error::Dimension(format!("channel vectors must have N={n} and M={m} entries")));
        }
        let finite = |z: &Complex<T>| z.re.is_finite() && z.im.is_finite();
        if !self.g.iter().all(finite)
            || !self.h_r.iter().flat_map(|h| h.iter()).all(finite)
            || !self.h_d.iter().flat_map(|h| h.iter()).all(finite)
        {
            return Err(Error::NonFinite("channel realization".into()));
        }
        if self.sigma_k2.iter().any(|s| !(*s > T::zero())) || !(self.sigma_a2 > T::zero()) {
            return Err(Error::Domain("noise powers must be strictly positive".into()));
        }
        Ok(())
    }

    /// Converts every entry into another scalar type.
    pub fn cast<U: Real>(&self) -> ChannelRealization<U> {
        let c = |z: &Complex<T>| Complex::new(lit::<U>(crate::to_f64(z.re)), lit::<U>(crate::to_f64(z.im)));
        ChannelRealization {
            g: self.g.map(|z| c(&z)),
            h_r: self.h_r.iter().map(|h| h.map(|z| c(&z))).collect(),
            h_d: self.h_d.iter().map(|h| h.map(|z| c(&z))).collect(),
            sigma_k2: self.sigma_k2.iter().map(|s| lit(crate::to_f64(*s))).collect(),
            sigma_a2: lit(crate::to_f64(self.sigma_a2)),
        }
    }
}

/// Phase progression `pi * offset * u` of a half-wavelength array.
fn steering(offsets: &[f64], u: f64) -> Vec<Complex<f64>> {
    offsets.iter().map(|p| Complex::from_polar(1.0, -PI * p * u)).collect()
}

fn ap_offsets(cfg: &ScenarioConfig) -> Vec<f64> {
    (0..cfg.antennas).map(|m| m as f64).collect()
}

fn irs_offsets(cfg: &ScenarioConfig) -> Vec<f64> {
    let (_, cols) = cfg.ura_shape();
    (0..cfg.elements).map(|n| (n % cols) as f64).collect()
}

struct FadingDraw<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
    los: LosModel,
}

impl<R: Rng + ?Sized> FadingDraw<'_, R> {
    /// `sqrt(gain) (sqrt(beta/(1+beta)) L + sqrt(1/(1+beta)) z)`.
    fn entry(&mut self, gain: f64, beta: f64, geometric_los: Complex<f64>) -> Complex<f64> {
        let los = match self.los {
            LosModel::Geometric => geometric_los,
            LosModel::Iid => Complex::from_polar(1.0, 2.0 * PI * self.rng.random::<f64>()),
        };
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        let z = Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        let (w_los, w_nlos) = ((beta / (1.0 + beta)).sqrt(), (1.0 / (1.0 + beta)).sqrt());
        (los * w_los + z * w_nlos) * gain.sqrt()
    }
}

fn to_t<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(lit(z.re), lit(z.im))
}

/// Draws one channel realization for users at `users`.
///
/// Draw order is fixed (G row-major, then `h_r` and `h_d` per user) so the
/// realization is a pure function of the configuration, generator state and
/// positions.
pub fn sample_channels<T: Real, R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rng: &mut R,
    users: &[[f64; 2]],
) -> Result<ChannelRealization<T>> {
    if users.len() != cfg.users {
        return Err(Error::Dimension(format!(
            "configured K = {} but {} user positions were supplied",
            cfg.users,
            users.len()
        )));
    }
    let geo = Geometry { users: users.to_vec(), ..Geometry::with_angles(cfg, &[]) };
    let (n, m) = (cfg.elements, cfg.antennas);
    let (ap_off, irs_off) = (ap_offsets(cfg), irs_offsets(cfg));
    let mut draw = FadingDraw { rng, los: cfg.los };

    // IRS panel lies in the x-z plane, the AP array along y.
    let gain_ai = path_gain(geo.ap_irs_distance(), cfg.exponents.ap_irs, cfg, Link::ApIrs)?;
    let irs_arrival = steering(&irs_off, direction(geo.irs, geo.ap)[0]);
    let ap_departure = steering(&ap_off, direction(geo.ap, geo.irs)[1]);
    let mut g = DMatrix::zeros(n, m);
    for r in 0..n {
        for c in 0..m {
            let los = irs_arrival[r] * ap_departure[c];
            g[(r, c)] = to_t(draw.entry(gain_ai, cfg.rician.ap_irs, los));
        }
    }

    let mut h_r = Vec::with_capacity(cfg.users);
    let mut h_d = Vec::with_capacity(cfg.users);
    for k in 0..cfg.users {
        let gain_iu = path_gain(geo.irs_user_distance(k), cfg.exponents.irs_user, cfg, Link::IrsUser)?;
        let a = steering(&irs_off, direction(geo.irs, geo.users[k])[0]);
        h_r.push(DVector::from_iterator(
            n,
            a.iter().map(|l| to_t(draw.entry(gain_iu, cfg.rician.irs_user, l.conj()))).collect::<Vec<_>>(),
        ));
        let gain_au = path_gain(geo.ap_user_distance(k), cfg.exponents.ap_user, cfg, Link::ApUser)?;
        let a = steering(&ap_off, direction(geo.ap, geo.users[k])[1]);
        h_d.push(DVector::from_iterator(
            m,
            a.iter().map(|l| to_t(draw.entry(gain_au, cfg.rician.ap_user, l.conj()))).collect::<Vec<_>>(),
        ));
    }

    ChannelRealization::new(
        g,
        h_r,
        h_d,
        vec![lit(cfg.user_noise_watts()); cfg.users],
        lit(cfg.irs_noise_watts()),
    )
}

/// Geometry plus fading for one trial, drawn from a single generator.
pub fn draw_realization<T: Real, R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<(Geometry, ChannelRealization<T>)> {
    cfg.validate()?;
    let geo = build_geometry(cfg, rng);
    let ch = sample_channels(cfg, rng, &geo.users)?;
    Ok((geo, ch))
}
