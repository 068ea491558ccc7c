//! Reference computations written independently of the library.

use num_complex::Complex64;

/// `|Σ_k h_k v_k|²`.
pub fn gain(h: &[Complex64], v: &[Complex64]) -> f64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (a, b) in h.iter().zip(v) {
        re += a.re * b.re - a.im * b.im;
        im += a.re * b.im + a.im * b.re;
    }
    re * re + im * im
}

/// Shannon rate of stream `i` in bits/s.
pub fn sat_rate(h: &[Vec<Complex64>], v: &[Vec<Complex64>], i: usize, noise: f64, bandwidth: f64) -> f64 {
    let signal = gain(&h[i], &v[i]);
    let interference: f64 = (0..v.len()).filter(|&j| j != i).map(|j| gain(&h[i], &v[j])).sum();
    bandwidth * (1.0 + signal / (interference + noise)).log2()
}

/// Free-space path loss from first principles: `(4π d f / c)²` in dB.
pub fn fspl_db(freq_hz: f64, dist_m: f64) -> f64 {
    let c = 299_792_458.0;
    20.0 * (4.0 * std::f64::consts::PI * dist_m * freq_hz / c).log10()
}

/// Boresight loss, with the beamwidth term evaluated step by step.
pub fn boresight_db(theta: f64, eta: f64) -> f64 {
    let half_power = 0.5f64.powf(1.0 / eta).acos();
    let beamwidth = 2.0 * half_power;
    let gain = theta.cos().powf(eta) * 32.0 * 2f64.ln() / (2.0 * beamwidth * beamwidth);
    -10.0 * gain.log10()
}

/// Minimum of `Σ c_i/α_i` over the simplex grid `α_i ∈ step·ℕ`,
/// `Σ α_i = 1`, `α_i ≥ lb_i`, for up to three shares.
pub fn alpha_grid_min(coeff: &[f64], lb: &[f64], step: f64) -> f64 {
    let n = (1.0 / step).round() as usize;
    let cost = |a: &[f64]| -> f64 {
        if a.iter().zip(lb).any(|(x, l)| *x < *l || *x <= 0.0) {
            return f64::INFINITY;
        }
        a.iter().zip(coeff).map(|(x, c)| c / x).sum()
    };
    let mut best = f64::INFINITY;
    match coeff.len() {
        1 => best = cost(&[1.0]),
        2 => {
            for p in 1..n {
                let a = p as f64 * step;
                best = best.min(cost(&[a, 1.0 - a]));
            }
        }
        3 => {
            for p in 1..n {
                for q in 1..(n - p) {
                    let a = p as f64 * step;
                    let b = q as f64 * step;
                    best = best.min(cost(&[a, b, 1.0 - a - b]));
                }
            }
        }
        _ => panic!("grid oracle supports at most three shares"),
    }
    best
}

/// One VT's split cost with the remote part `s` of `total` bits.
#[derive(Debug, Clone, Copy)]
pub struct SplitCase {
    pub total: f64,
    pub t_trans: f64,
    pub sat_rate: f64,
    pub cpu_freq: f64,
    pub rsu_freq: f64,
    pub beta: f64,
    pub local_energy_per_bit: f64,
    pub remote_energy_per_bit: f64,
    pub tx_power: f64,
}

impl SplitCase {
    pub fn cost(&self, s: f64) -> f64 {
        let remote_delay = if s > 0.0 {
            s / self.sat_rate + s / self.cpu_freq
        } else {
            0.0
        };
        let local_delay = (self.total - s) / self.rsu_freq;
        let delay = self.t_trans + remote_delay.max(local_delay);
        let energy = self.local_energy_per_bit * (self.total - s)
            + self.remote_energy_per_bit * s
            + if s > 0.0 {
                self.tx_power * s / self.sat_rate
            } else {
                0.0
            };
        self.beta * delay + (1.0 - self.beta) * energy
    }

    /// Minimum over `S^S = u · total` for `u` on a `resolution` grid.
    pub fn sweep_min(&self, resolution: f64) -> f64 {
        let n = (1.0 / resolution).round() as usize;
        (0..=n)
            .map(|k| self.cost(self.total * (k as f64 / n as f64)))
            .fold(f64::INFINITY, f64::min)
    }
}
