//! Link-level radio model: log-distance pathloss, flat-top antenna patterns,
//! Nakagami-m power fading and Gaussian-profile shadowing by the blocker.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Angle, Point2};

/// Pathloss intercept at 1 km, dB.
pub const PATHLOSS_AT_1KM_DB: f64 = 60.1;
/// Pathloss slope, dB per decade of distance.
pub const PATHLOSS_SLOPE_DB: f64 = 14.0;
/// Main-lobe boost over the reference gain, as a power of ten.
pub const MAIN_LOBE_EXPONENT: f64 = 2.028;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Reference sector gain `π / (21.32 z + π)` for a beamwidth `z` in radians.
pub fn reference_gain(beamwidth: f64) -> f64 {
    std::f64::consts::PI / (21.32 * beamwidth + std::f64::consts::PI)
}

/// How the blocker's position relative to a link maps onto the Gaussian
/// attenuation profile `A · exp(-x² / σ_B²)` with `σ_B = √8 · r_B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowingProfile {
    /// `x` is the perpendicular distance in meters from the blocker center to
    /// the link.
    #[default]
    Perpendicular,
    /// `x` is the angle in radians, seen from the receiver, between the
    /// transmitter and the blocker center.
    Angular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub nakagami_m: f64,
    pub tx_beamwidth: f64,
    pub rx_beamwidth: f64,
    pub gain_main_tx: f64,
    pub gain_side_tx: f64,
    pub gain_main_rx: f64,
    pub gain_side_rx: f64,
    pub blockage_attenuation_db: f64,
    pub min_distance: f64,
    pub shadowing: ShadowingProfile,
}

impl Default for RadioParams {
    fn default() -> Self {
        let tx_beamwidth = 10f64.to_radians();
        let rx_beamwidth = 135f64.to_radians();
        let (gain_main_tx, gain_side_tx) = default_tx_gains(tx_beamwidth);
        let (gain_main_rx, gain_side_rx) = default_rx_gains(rx_beamwidth);
        Self {
            carrier_hz: 28e9,
            bandwidth_hz: 400e6,
            tx_power_dbm: 33.0,
            noise_psd_dbm_hz: -174.0,
            nakagami_m: 3.0,
            tx_beamwidth,
            rx_beamwidth,
            gain_main_tx,
            gain_side_tx,
            gain_main_rx,
            gain_side_rx,
            blockage_attenuation_db: 100.0,
            min_distance: 1.0,
            shadowing: ShadowingProfile::default(),
        }
    }
}

/// `(main, side)` transmit gains derived from the transmit beamwidth.
pub fn default_tx_gains(tx_beamwidth: f64) -> (f64, f64) {
    let g0 = reference_gain(tx_beamwidth);
    (g0 * 10f64.powf(MAIN_LOBE_EXPONENT), g0)
}

/// `(main, side)` receive gains derived from the receive beamwidth. The
/// receive side lobe is suppressed entirely.
pub fn default_rx_gains(rx_beamwidth: f64) -> (f64, f64) {
    (2.0 * reference_gain(rx_beamwidth) * 10f64.powf(MAIN_LOBE_EXPONENT), 0.0)
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.carrier_hz) {
            return Err(Error::invalid("carrier_hz", "must be > 0"));
        }
        if !positive(self.bandwidth_hz) {
            return Err(Error::invalid("bandwidth_hz", "must be > 0"));
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(Error::invalid("tx_power_dbm", "must be finite"));
        }
        if !self.noise_psd_dbm_hz.is_finite() {
            return Err(Error::invalid("noise_psd_dbm_hz", "must be finite"));
        }
        if !(self.nakagami_m >= 0.5) || self.nakagami_m.is_nan() {
            return Err(Error::invalid("nakagami_m", format!("{} must be >= 0.5", self.nakagami_m)));
        }
        let tau = std::f64::consts::TAU;
        if !(self.tx_beamwidth > 0.0 && self.tx_beamwidth < tau) {
            return Err(Error::invalid("tx_beamwidth_deg", "must lie in (0, 360)"));
        }
        if !(self.rx_beamwidth > 0.0 && self.rx_beamwidth < tau) {
            return Err(Error::invalid("rx_beamwidth_deg", "must lie in (0, 360)"));
        }
        for (name, g) in [
            ("gain_main_tx", self.gain_main_tx),
            ("gain_side_tx", self.gain_side_tx),
            ("gain_main_rx", self.gain_main_rx),
            ("gain_side_rx", self.gain_side_rx),
        ] {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::invalid(name, format!("{g} must be >= 0")));
            }
        }
        if !(self.blockage_attenuation_db >= 0.0 && self.blockage_attenuation_db.is_finite()) {
            return Err(Error::invalid("blockage_attenuation_db", "must be >= 0"));
        }
        if !positive(self.min_distance) {
            return Err(Error::invalid("min_distance_m", "must be > 0"));
        }
        Ok(())
    }

    pub fn tx_power_watts(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    /// Thermal noise power `N₀ · B` in watts.
    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_psd_dbm_hz) * self.bandwidth_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub tx_pos: Point2,
    pub rx_pos: Point2,
    pub tx_beam_dir: Angle,
    pub rx_beam_dir: Angle,
}

impl Link {
    pub fn length(&self) -> f64 {
        self.tx_pos.distance(self.rx_pos)
    }

    /// Departure angle relative to the transmit boresight.
    pub fn tx_offset(&self) -> Angle {
        Angle::new(self.tx_pos.heading_to(self.rx_pos)) - self.tx_beam_dir
    }

    /// Arrival angle relative to the receive boresight.
    pub fn rx_offset(&self) -> Angle {
        Angle::new(self.rx_pos.heading_to(self.tx_pos)) - self.rx_beam_dir
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockerState {
    pub pos: Point2,
    pub velocity: Point2,
    pub radius: f64,
}

impl BlockerState {
    pub fn at(pos: Point2, radius: f64) -> Self {
        Self {
            pos,
            velocity: Point2::ORIGIN,
            radius,
        }
    }
}

/// Linear pathloss gain at distance `d`, clamped below at `min_distance`.
pub fn pathloss_gain(d: f64, min_distance: f64) -> f64 {
    let d_km = d.max(min_distance) / 1000.0;
    db_to_linear(-(PATHLOSS_AT_1KM_DB + PATHLOSS_SLOPE_DB * d_km.log10()))
}

/// Flat-top pattern: `g_main` within half a beamwidth of boresight.
pub fn antenna_gain(offset: Angle, beamwidth: f64, g_main: f64, g_side: f64) -> f64 {
    if offset.signed().abs() <= beamwidth / 2.0 {
        g_main
    } else {
        g_side
    }
}

/// Unit-mean power fading `ζ` for one link and time step.
#[derive(Debug, Clone, Copy)]
pub struct Fading {
    gamma: Option<Gamma<f64>>,
}

impl Fading {
    /// `m = ∞` disables fading.
    pub fn nakagami(m: f64) -> Result<Self> {
        if m.is_infinite() && m > 0.0 {
            return Ok(Self::none());
        }
        if !(m >= 0.5) {
            return Err(Error::invalid("nakagami_m", format!("{m} must be >= 0.5")));
        }
        let gamma = Gamma::new(m, 1.0 / m).map_err(|e| Error::invalid("nakagami_m", e.to_string()))?;
        Ok(Self { gamma: Some(gamma) })
    }

    pub fn none() -> Self {
        Self { gamma: None }
    }

    pub fn is_enabled(&self) -> bool {
        self.gamma.is_some()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.gamma {
            Some(g) => g.sample(rng),
            None => 1.0,
        }
    }
}

/// Draw the power of a Nakagami-m envelope: `Gamma(m, 1/m)`.
pub fn nakagami_power_fading<R: Rng + ?Sized>(m: f64, rng: &mut R) -> Result<f64> {
    Ok(Fading::nakagami(m)?.draw(rng))
}

/// Shadowing coefficient `χ ∈ (0, 1]` of `link` due to `blocker`.
///
/// The blocker only obstructs when its center projects inside the tx–rx
/// segment; the attenuation in dB then follows `A · exp(-x² / σ_B²)`.
pub fn blocker_shadowing(link: &Link, blocker: &BlockerState, attenuation_db: f64, profile: ShadowingProfile) -> f64 {
    let seg = link.rx_pos - link.tx_pos;
    let len2 = seg.dot(seg);
    if len2 == 0.0 {
        return 1.0;
    }
    let rel = blocker.pos - link.tx_pos;
    let t = rel.dot(seg) / len2;
    if !(0.0..=1.0).contains(&t) {
        return 1.0;
    }
    let x = match profile {
        ShadowingProfile::Perpendicular => seg.cross(rel).abs() / len2.sqrt(),
        ShadowingProfile::Angular => {
            let to_tx = Angle::new(link.rx_pos.heading_to(link.tx_pos));
            let to_blocker = Angle::new(link.rx_pos.heading_to(blocker.pos));
            to_tx.separation(to_blocker)
        }
    };
    let sigma2 = 8.0 * blocker.radius * blocker.radius;
    db_to_linear(-attenuation_db * (-x * x / sigma2).exp())
}

/// Received power in watts: `χ · ζ · P_Tx · G_Tx · G_H(d) · G_Rx`.
pub fn rx_power(link: &Link, blocker: Option<&BlockerState>, zeta: f64, radio: &RadioParams) -> f64 {
    let g_rx = antenna_gain(link.rx_offset(), radio.rx_beamwidth, radio.gain_main_rx, radio.gain_side_rx);
    if g_rx == 0.0 {
        return 0.0;
    }
    let g_tx = antenna_gain(link.tx_offset(), radio.tx_beamwidth, radio.gain_main_tx, radio.gain_side_tx);
    let chi = blocker.map_or(1.0, |b| {
        blocker_shadowing(link, b, radio.blockage_attenuation_db, radio.shadowing)
    });
    chi * zeta * radio.tx_power_watts() * g_tx * pathloss_gain(link.length(), radio.min_distance) * g_rx
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn db(x: f64) -> f64 {
        linear_to_db(x)
    }

    #[test]
    fn pathloss_examples() {
        assert!((db(pathloss_gain(1000.0, 1.0)) + 60.1).abs() < 1e-9);
        assert!((db(pathloss_gain(100.0, 1.0)) + 46.1).abs() < 1e-9);
        assert!((db(pathloss_gain(0.1, 1.0)) + 18.1).abs() < 1e-9);
        assert_eq!(pathloss_gain(0.1, 1.0), pathloss_gain(1.0, 1.0));
    }

    #[test]
    fn pathloss_decreasing() {
        let mut prev = pathloss_gain(1.0, 1.0);
        for i in 2..500 {
            let g = pathloss_gain(i as f64, 1.0);
            assert!(g < prev);
            prev = g;
        }
    }

    #[test]
    fn antenna_gain_examples() {
        let radio = RadioParams::default();
        // G0(0.17453) = π / (21.32·0.17453 + π)
        let g0 = std::f64::consts::PI / (21.32 * 10f64.to_radians() + std::f64::consts::PI);
        assert!((g0 - 0.4578).abs() < 1e-4);
        assert!((radio.gain_side_tx - g0).abs() < 1e-15);
        assert!((radio.gain_main_tx - 48.8).abs() < 0.05);
        let main = antenna_gain(Angle::ZERO, radio.tx_beamwidth, radio.gain_main_tx, radio.gain_side_tx);
        assert_eq!(main, radio.gain_main_tx);
        let side = antenna_gain(Angle::from_degrees(90.0), radio.tx_beamwidth, radio.gain_main_tx, radio.gain_side_tx);
        assert_eq!(side, radio.gain_side_tx);
        let rx_side = antenna_gain(Angle::from_degrees(90.0), radio.rx_beamwidth, radio.gain_main_rx, radio.gain_side_rx);
        assert_eq!(rx_side, 0.0);
        // edge of the 135° lobe is inside; just past it is not
        let edge = antenna_gain(Angle::from_degrees(-67.0), radio.rx_beamwidth, 1.0, 0.0);
        assert_eq!(edge, 1.0);
        let past = antenna_gain(Angle::from_degrees(68.0), radio.rx_beamwidth, 1.0, 0.0);
        assert_eq!(past, 0.0);
    }

    #[test]
    fn shadowing_on_segment_is_full_attenuation() {
        let link = Link {
            tx_pos: Point2::new(0.0, 0.0),
            rx_pos: Point2::new(20.0, 0.0),
            tx_beam_dir: Angle::ZERO,
            rx_beam_dir: Angle::from_degrees(180.0),
        };
        let b = BlockerState::at(Point2::new(10.0, 0.0), 1.0);
        for profile in [ShadowingProfile::Perpendicular, ShadowingProfile::Angular] {
            let chi = blocker_shadowing(&link, &b, 100.0, profile);
            assert!((chi / 1e-10 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shadowing_behind_receiver_is_none() {
        let link = Link {
            tx_pos: Point2::new(0.0, 0.0),
            rx_pos: Point2::new(20.0, 0.0),
            tx_beam_dir: Angle::ZERO,
            rx_beam_dir: Angle::from_degrees(180.0),
        };
        let b = BlockerState::at(Point2::new(25.0, 0.0), 1.0);
        assert_eq!(blocker_shadowing(&link, &b, 100.0, ShadowingProfile::Perpendicular), 1.0);
        assert_eq!(blocker_shadowing(&link, &b, 100.0, ShadowingProfile::Angular), 1.0);
    }

    #[test]
    fn shadowing_at_one_sigma() {
        let sigma = 8f64.sqrt() * 0.5;
        let rx = Point2::new(20.0, 0.0);
        let link = Link {
            tx_pos: Point2::ORIGIN,
            rx_pos: rx,
            tx_beam_dir: Angle::ZERO,
            rx_beam_dir: Angle::from_degrees(180.0),
        };
        // perpendicular offset of σ_B meters
        let b = BlockerState::at(Point2::new(10.0, sigma), 0.5);
        let att = -db(blocker_shadowing(&link, &b, 100.0, ShadowingProfile::Perpendicular));
        assert!((att - 100.0 * (-1f64).exp()).abs() < 1e-9);
        assert!((att - 36.79).abs() < 0.01);
        // angular offset of σ_B radians seen from rx (σ_B = 1.414 rad ≈ 81°)
        let b = BlockerState::at(rx + Point2::from_polar(5.0, std::f64::consts::PI - sigma), 0.5);
        let att = -db(blocker_shadowing(&link, &b, 100.0, ShadowingProfile::Angular));
        assert!((att - 100.0 * (-1f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn shadowing_monotone_in_offset() {
        let link = Link {
            tx_pos: Point2::ORIGIN,
            rx_pos: Point2::new(40.0, 0.0),
            tx_beam_dir: Angle::ZERO,
            rx_beam_dir: Angle::from_degrees(180.0),
        };
        for profile in [ShadowingProfile::Perpendicular, ShadowingProfile::Angular] {
            let mut prev = 0.0;
            for k in 0..40 {
                let b = BlockerState::at(Point2::new(30.0, k as f64 * 0.25), 1.0);
                let chi = blocker_shadowing(&link, &b, 100.0, profile);
                assert!(chi > 0.0 && chi <= 1.0);
                assert!(chi >= prev);
                prev = chi;
            }
        }
    }

    #[test]
    fn rx_power_composition() {
        let radio = RadioParams::default();
        let link = Link {
            tx_pos: Point2::ORIGIN,
            rx_pos: Point2::new(100.0, 0.0),
            tx_beam_dir: Angle::ZERO,
            rx_beam_dir: Angle::from_degrees(180.0),
        };
        let p = rx_power(&link, None, 1.0, &radio);
        let want = radio.tx_power_watts() * radio.gain_main_tx * 10f64.powf(-4.61) * radio.gain_main_rx;
        assert!((p / want - 1.0).abs() < 1e-12);

        let blocked = rx_power(&link, Some(&BlockerState::at(Point2::new(50.0, 0.0), 1.0)), 1.0, &radio);
        assert!((blocked / (want * 1e-10) - 1.0).abs() < 1e-9);

        let mut off = link;
        off.rx_beam_dir = Angle::from_degrees(90.0);
        assert_eq!(rx_power(&off, None, 1.0, &radio), 0.0);

        let mut hot = radio;
        hot.tx_power_dbm += 10.0 * 2f64.log10();
        assert!((rx_power(&link, None, 0.7, &hot) / rx_power(&link, None, 0.7, &radio) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nakagami_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| nakagami_power_fading(3.0, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (1.0f64 / 3.0 / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean}");
        assert!((var - 1.0 / 3.0).abs() < 0.01, "var {var}");
        assert!(draws.iter().all(|&z| z > 0.0));
    }

    #[test]
    fn rayleigh_special_case_is_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| nakagami_power_fading(1.0, &mut rng).unwrap()).collect();
        // exponential(1): P(ζ > 1) = e^-1
        let tail = draws.iter().filter(|&&z| z > 1.0).count() as f64 / n as f64;
        assert!((tail - (-1f64).exp()).abs() < 0.005);
    }

    #[test]
    fn fading_limits_and_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(nakagami_power_fading(f64::INFINITY, &mut rng).unwrap(), 1.0);
        assert!(nakagami_power_fading(0.2, &mut rng).is_err());
        let mut radio = RadioParams::default();
        radio.nakagami_m = 0.2;
        assert!(radio.validate().is_err());
        assert!(RadioParams::default().validate().is_ok());
    }
}
