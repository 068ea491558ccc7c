//! Channel generation for the RSU→SAP satellite links and the VT→RSU
//! terrestrial links.
//!
//! Satellite links combine free-space path loss, log-normal shadowing and a
//! boresight antenna term into a large-scale coefficient `L`, then apply a
//! Rician small-scale mixture. Terrestrial links are a unit-mean exponential
//! power gain times `d^-ε`.
//!
//! All public functions take SI units. The path-loss constant 32.45 assumes
//! MHz and km, so the conversion happens inside [`path_loss_db`].

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};

/// Numerator constant of the boresight gain approximation, `32·ln 2`.
pub const BEAM_GAIN_CONSTANT: f64 = 32.0 * LN_2;

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryParams {
    pub carrier_frequency_hz: f64,
    /// `I × K` RSU-antenna to SAP distances.
    pub sap_distances_m: Vec<Vec<f64>>,
    /// `I × K` boresight angles, each in `[0, π/2)`.
    pub boresight_angles_rad: Vec<Vec<f64>>,
    pub antenna_factor: f64,
    pub vt_distances_m: Vec<f64>,
    pub terrestrial_path_loss_exp: f64,
}

impl GeometryParams {
    pub fn num_vts(&self) -> usize {
        self.sap_distances_m.len()
    }

    pub fn num_saps(&self) -> usize {
        self.sap_distances_m.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let i = self.num_vts();
        let k = self.num_saps();
        if i == 0 || k == 0 {
            return Err(Error::Dimension(
                "geometry needs at least one VT and one SAP".into(),
            ));
        }
        if self.sap_distances_m.iter().any(|row| row.len() != k)
            || self.boresight_angles_rad.len() != i
            || self.boresight_angles_rad.iter().any(|row| row.len() != k)
            || self.vt_distances_m.len() != i
        {
            return Err(Error::Dimension(format!(
                "expected {i}x{k} SAP matrices and {i} VT distances"
            )));
        }
        if !(self.carrier_frequency_hz > 0.0) {
            return Err(Error::Domain("carrier frequency must be positive".into()));
        }
        if !(self.antenna_factor > 0.0) {
            return Err(Error::Domain("antenna factor must be positive".into()));
        }
        if !(self.terrestrial_path_loss_exp >= 0.0) {
            return Err(Error::Domain(
                "terrestrial path-loss exponent must be nonnegative".into(),
            ));
        }
        let positive = |d: &f64| *d > 0.0 && d.is_finite();
        if !self.sap_distances_m.iter().flatten().all(positive) || !self.vt_distances_m.iter().all(positive) {
            return Err(Error::Domain("all distances must be strictly positive".into()));
        }
        if !self
            .boresight_angles_rad
            .iter()
            .flatten()
            .all(|t| (0.0..PI / 2.0).contains(t))
        {
            return Err(Error::Domain("boresight angles must lie in [0, pi/2)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    /// Rician K-factor (linear), shared by every satellite link.
    pub rician_k_linear: f64,
    pub shadow_std_db: f64,
    pub seed: u64,
}

impl FadingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rician_k_linear >= 0.0) {
            return Err(Error::Domain("Rician K-factor must be nonnegative".into()));
        }
        if !(self.shadow_std_db >= 0.0) || !self.shadow_std_db.is_finite() {
            return Err(Error::Domain(
                "shadowing std must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Row `i` is the channel `h_i` of data stream `i` towards the `K` SAPs.
    pub sat_channels: Vec<Vec<Complex64>>,
    /// Effective terrestrial power gain `g_i · d_i^-ε` per VT.
    pub terr_gains: Vec<f64>,
}

impl ChannelRealization {
    pub fn num_vts(&self) -> usize {
        self.sat_channels.len()
    }

    pub fn num_saps(&self) -> usize {
        self.sat_channels.first().map_or(0, Vec::len)
    }
}

/// Free-space path loss `32.45 + 20 log10(f[MHz]) + 20 log10(d[km])`.
pub fn path_loss_db(carrier_frequency_hz: f64, distance_m: f64) -> Result<f64> {
    if !(carrier_frequency_hz > 0.0) || !(distance_m > 0.0) {
        return Err(Error::Domain(format!(
            "path loss needs positive frequency and distance, got {carrier_frequency_hz} Hz, {distance_m} m"
        )));
    }
    let f_mhz = carrier_frequency_hz / 1e6;
    let d_km = distance_m / 1e3;
    Ok(32.45 + 20.0 * f_mhz.log10() + 20.0 * d_km.log10())
}

/// Boresight antenna loss in dB. Negative values are gains.
pub fn antenna_loss_db(boresight_rad: f64, antenna_factor: f64) -> Result<f64> {
    if !(0.0..PI / 2.0).contains(&boresight_rad) {
        return Err(Error::Domain(format!(
            "boresight angle {boresight_rad} rad outside [0, pi/2)"
        )));
    }
    if !(antenna_factor > 0.0) {
        return Err(Error::Domain("antenna factor must be positive".into()));
    }
    let half_power = 0.5f64.powf(1.0 / antenna_factor).acos();
    let beamwidth = 2.0 * half_power;
    let gain = boresight_rad.cos().powf(antenna_factor) * BEAM_GAIN_CONSTANT / (2.0 * beamwidth * beamwidth);
    Ok(-10.0 * gain.log10())
}

/// Large-scale coefficients `L_{i,k} = 10^{-(dist + shad + ant)/10}`.
///
/// Shadowing is drawn row-major from `rng`, one normal sample per link.
pub fn large_scale_linear<R: Rng + ?Sized>(
    geometry: &GeometryParams,
    fading: &FadingParams,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    geometry.validate()?;
    fading.validate()?;
    let shadow = Normal::new(0.0, fading.shadow_std_db)
        .map_err(|e| Error::Domain(format!("shadowing distribution: {e}")))?;
    geometry
        .sap_distances_m
        .iter()
        .zip(&geometry.boresight_angles_rad)
        .map(|(dist_row, angle_row)| {
            dist_row
                .iter()
                .zip(angle_row)
                .map(|(&d, &theta)| {
                    let dist = path_loss_db(geometry.carrier_frequency_hz, d)?;
                    let ant = antenna_loss_db(theta, geometry.antenna_factor)?;
                    let shad = shadow.sample(rng);
                    Ok(10f64.powf(-(dist + shad + ant) / 10.0))
                })
                .collect()
        })
        .collect()
}

/// One Rician draw `√L (√(κ/(κ+1)) e^{jφ} + √(1/(κ+1)) w)`.
pub fn small_scale_channel<R: Rng + ?Sized>(large_scale: f64, k_factor: f64, rng: &mut R) -> Complex64 {
    let (los_amp, nlos_amp) = rician_weights(k_factor);
    let phase = rng.sample(Uniform::new_inclusive(-PI, PI).expect("valid phase range"));
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    // CN(0,1): each quadrature carries half the power.
    let nlos = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
    let los = Complex64::from_polar(1.0, phase);
    (los * los_amp + nlos * nlos_amp) * large_scale.sqrt()
}

/// Amplitudes of the LoS and NLoS parts. `κ = ∞` is pure LoS.
pub fn rician_weights(k_factor: f64) -> (f64, f64) {
    if k_factor.is_infinite() {
        (1.0, 0.0)
    } else {
        (
            (k_factor / (k_factor + 1.0)).sqrt(),
            (1.0 / (k_factor + 1.0)).sqrt(),
        )
    }
}

/// Draws one full realization from the substreams of `fading.seed`.
pub fn realize_channels(geometry: &GeometryParams, fading: &FadingParams) -> Result<ChannelRealization> {
    geometry.validate()?;
    fading.validate()?;
    let mut shadow_rng = substream(fading.seed, Purpose::Shadowing);
    let large = large_scale_linear(geometry, fading, &mut shadow_rng)?;

    let mut fast_rng = substream(fading.seed, Purpose::SmallScale);
    let sat_channels = large
        .iter()
        .map(|row| {
            row.iter()
                .map(|&l| small_scale_channel(l, fading.rician_k_linear, &mut fast_rng))
                .collect()
        })
        .collect();

    let mut terr_rng = substream(fading.seed, Purpose::Terrestrial);
    let terr_gains = geometry
        .vt_distances_m
        .iter()
        .map(|&d| {
            let g: f64 = Exp1.sample(&mut terr_rng);
            // Exp1 can return exactly zero with negligible probability.
            g.max(f64::MIN_POSITIVE) * d.powf(-geometry.terrestrial_path_loss_exp)
        })
        .collect();

    Ok(ChannelRealization {
        sat_channels,
        terr_gains,
    })
}
