//! Per-trial scenario draws: geometry, task sizes and channels.

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::channel::{realize_channels, ChannelRealization, FadingParams, GeometryParams};
use crate::error::{Error, Result};
use crate::model::{DelayAggregation, ScenarioConfig};
use crate::rng::{substream, Purpose};

/// Bits in one megabyte of `10⁶` bytes.
pub const BITS_PER_MB: f64 = 8e6;

/// Physical parameters from which every trial is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub num_vts: usize,
    pub num_saps: usize,
    pub beta: f64,
    pub total_bandwidth_hz: f64,
    pub sat_bandwidth_hz: f64,
    pub vt_tx_power_w: f64,
    pub max_precoder_power_w: f64,
    pub rsu_freq_hz: f64,
    pub cpu_freq_hz: f64,
    pub kappa_rsu: f64,
    pub kappa_sap: f64,
    pub noise_density_dbm_hz: f64,
    pub max_delay_s: f64,
    /// Task sizes are `task_mb_mean · U[1 − spread, 1 + spread]` MB.
    pub task_mb_mean: f64,
    pub task_mb_spread: f64,
    pub carrier_frequency_hz: f64,
    pub altitude_km: f64,
    /// Extra SAP distance, uniform in `[0, jitter]`.
    pub altitude_jitter_km: f64,
    /// Boresight angles are uniform in `[0, max]`.
    pub max_boresight_deg: f64,
    pub antenna_factor: f64,
    pub rician_k_db: f64,
    pub shadow_std_db: f64,
    pub vt_distance_min_m: f64,
    pub vt_distance_max_m: f64,
    pub terrestrial_path_loss_exp: f64,
    pub delay_aggregation: DelayAggregation,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            num_vts: 4,
            num_saps: 8,
            beta: 0.7,
            total_bandwidth_hz: 2e6,
            sat_bandwidth_hz: 200e6,
            vt_tx_power_w: 0.1,
            max_precoder_power_w: 2.0,
            rsu_freq_hz: 0.8e9,
            cpu_freq_hz: 20e9,
            kappa_rsu: 1e-25,
            kappa_sap: 1e-25,
            noise_density_dbm_hz: -174.0,
            max_delay_s: f64::INFINITY,
            task_mb_mean: 1.0,
            task_mb_spread: 0.2,
            carrier_frequency_hz: 12e9,
            altitude_km: 550.0,
            altitude_jitter_km: 50.0,
            max_boresight_deg: 30.0,
            antenna_factor: 10.0,
            rician_k_db: 10.0,
            shadow_std_db: 5.0,
            vt_distance_min_m: 50.0,
            vt_distance_max_m: 250.0,
            terrestrial_path_loss_exp: 3.0,
            delay_aggregation: DelayAggregation::Sum,
        }
    }
}

/// `10^{(N0 − 30)/10} · B` watts for a density `N0` in dBm/Hz.
pub fn noise_power_w(density_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    10f64.powf((density_dbm_hz - 30.0) / 10.0) * bandwidth_hz
}

fn uniform(lo: f64, hi: f64) -> Result<Uniform<f64>> {
    Uniform::new_inclusive(lo, hi).map_err(|e| Error::Domain(format!("range [{lo}, {hi}]: {e}")))
}

impl ScenarioParams {
    /// Solver configuration of one trial, with task sizes drawn from its seed.
    pub fn scenario_config(&self, seed: u64) -> Result<ScenarioConfig> {
        let mut rng = substream(seed, Purpose::TaskSizes);
        let scale = uniform(1.0 - self.task_mb_spread, 1.0 + self.task_mb_spread)?;
        let task_bits = (0..self.num_vts)
            .map(|_| self.task_mb_mean * scale.sample(&mut rng) * BITS_PER_MB)
            .collect();
        let cfg = ScenarioConfig {
            num_vts: self.num_vts,
            num_saps: self.num_saps,
            total_bandwidth_hz: self.total_bandwidth_hz,
            sat_bandwidth_hz: self.sat_bandwidth_hz,
            vt_tx_power_w: self.vt_tx_power_w,
            max_precoder_power_w: self.max_precoder_power_w,
            rsu_freq_hz: self.rsu_freq_hz,
            cpu_freq_hz: self.cpu_freq_hz,
            kappa_rsu: self.kappa_rsu,
            kappa_sap: self.kappa_sap,
            noise_terr_w: noise_power_w(self.noise_density_dbm_hz, self.total_bandwidth_hz),
            noise_sat_w: noise_power_w(self.noise_density_dbm_hz, self.sat_bandwidth_hz),
            weight_beta: self.beta,
            max_delay_s: self.max_delay_s,
            task_bits,
            delay_aggregation: self.delay_aggregation,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn geometry(&self, seed: u64) -> Result<GeometryParams> {
        let (i, k) = (self.num_vts, self.num_saps);
        let mut geo_rng = substream(seed, Purpose::Geometry);
        let jitter = uniform(0.0, self.altitude_jitter_km)?;
        let angle = uniform(0.0, self.max_boresight_deg.to_radians())?;
        let mut sap_distances_m = vec![vec![0.0; k]; i];
        let mut boresight_angles_rad = vec![vec![0.0; k]; i];
        for (drow, arow) in sap_distances_m.iter_mut().zip(boresight_angles_rad.iter_mut()) {
            for (d, a) in drow.iter_mut().zip(arow.iter_mut()) {
                *d = (self.altitude_km + jitter.sample(&mut geo_rng)) * 1e3;
                *a = angle.sample(&mut geo_rng);
            }
        }
        let mut vt_rng = substream(seed, Purpose::VtDistances);
        let vt_distances_m = (0..i)
            .map(|_| vt_rng.random_range(self.vt_distance_min_m..=self.vt_distance_max_m))
            .collect();
        Ok(GeometryParams {
            carrier_frequency_hz: self.carrier_frequency_hz,
            sap_distances_m,
            boresight_angles_rad,
            antenna_factor: self.antenna_factor,
            vt_distances_m,
            terrestrial_path_loss_exp: self.terrestrial_path_loss_exp,
        })
    }

    pub fn fading(&self, seed: u64) -> FadingParams {
        FadingParams {
            rician_k_linear: 10f64.powf(self.rician_k_db / 10.0),
            shadow_std_db: self.shadow_std_db,
            seed,
        }
    }

    /// Config and channel draw of the trial keyed by `seed`.
    pub fn draw(&self, seed: u64) -> Result<(ScenarioConfig, ChannelRealization)> {
        let cfg = self.scenario_config(seed)?;
        let real = realize_channels(&self.geometry(seed)?, &self.fading(seed))?;
        Ok((cfg, real))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_floor() {
        // −174 dBm/Hz over 1 Hz is 3.98e-21 W.
        assert!((noise_power_w(-174.0, 1.0) / 3.981_071_705_534_97e-21 - 1.0).abs() < 1e-12);
        assert!((noise_power_w(-174.0, 2e6) / 7.962_143_411_069_94e-15 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn draws_respect_ranges() {
        let p = ScenarioParams::default();
        let (cfg, real) = p.draw(3).unwrap();
        assert!(cfg.task_bits.iter().all(|&b| (6.4e6..=9.6e6).contains(&b)));
        let g = p.geometry(3).unwrap();
        assert!(g
            .sap_distances_m
            .iter()
            .flatten()
            .all(|&d| (550e3..=600e3).contains(&d)));
        assert!(g
            .boresight_angles_rad
            .iter()
            .flatten()
            .all(|&a| (0.0..=30f64.to_radians()).contains(&a)));
        assert!(g.vt_distances_m.iter().all(|&d| (50.0..=250.0).contains(&d)));
        assert_eq!(real.num_vts(), 4);
        assert_eq!(real.num_saps(), 8);
        assert_eq!(p.draw(3).unwrap(), (cfg, real));
    }
}
