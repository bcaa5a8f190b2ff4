//! Clean-room air-to-ground link formulas, written independently of the
//! optimizer so they can serve as expected-value oracles.

/// Plain channel constants in linear units.
#[derive(Debug, Clone, Copy)]
pub struct LinkConstants {
    pub a: f64,
    pub b: f64,
    /// Reference channel gain at 1 m (linear).
    pub rho0: f64,
    /// NLoS excess attenuation (linear, <= 1).
    pub mu: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    /// Noise power in watts.
    pub noise: f64,
}

impl LinkConstants {
    /// The urban constants used throughout the test suite: a = 11.95,
    /// b = 0.14, rho0 = -60 dB, mu = -20 dB, exponents 2.2/3.5, noise
    /// -100 dBm.
    pub fn urban() -> Self {
        LinkConstants {
            a: 11.95,
            b: 0.14,
            rho0: 10f64.powf(-6.0),
            mu: 10f64.powf(-2.0),
            alpha_los: 2.2,
            alpha_nlos: 3.5,
            noise: 10f64.powf((-100.0 - 30.0) / 10.0),
        }
    }

    pub fn snr_gain(&self) -> f64 {
        self.rho0 / self.noise
    }
}

pub fn horizontal_distance(q: [f64; 2], w: [f64; 2]) -> f64 {
    ((q[0] - w[0]).powi(2) + (q[1] - w[1]).powi(2)).sqrt()
}

pub fn elevation_deg(q: [f64; 2], z: f64, w: [f64; 2]) -> f64 {
    let s = horizontal_distance(q, w);
    if s == 0.0 {
        90.0
    } else {
        (z / s).atan().to_degrees()
    }
}

pub fn los_probability(theta_deg: f64, k: &LinkConstants) -> f64 {
    1.0 / (1.0 + k.a * (-k.b * (theta_deg - k.a)).exp())
}

pub fn distance(q: [f64; 2], z: f64, w: [f64; 2]) -> f64 {
    (horizontal_distance(q, w).powi(2) + z * z).sqrt()
}

/// `P^L log2(1 + P gamma / d^alpha_L)`.
pub fn lower_bound_rate(p: f64, q: [f64; 2], z: f64, w: [f64; 2], k: &LinkConstants) -> f64 {
    let pl = los_probability(elevation_deg(q, z, w), k);
    let d = distance(q, z, w);
    pl * (1.0 + p * k.snr_gain() / d.powf(k.alpha_los)).log2()
}

/// Expected interference power in watts at a node.
pub fn interference_w(p: f64, q: [f64; 2], z: f64, w: [f64; 2], k: &LinkConstants) -> f64 {
    let pl = los_probability(elevation_deg(q, z, w), k);
    let d = distance(q, z, w);
    p * k.rho0 * (pl / d.powf(k.alpha_los) + (1.0 - pl) * k.mu / d.powf(k.alpha_nlos))
}

/// Average system rate by a straightforward double loop over slots and
/// users: `(1/N) sum_n sum_r sched[r][n] * lower_bound_rate`.
pub fn average_rate(
    users: &[[f64; 2]],
    positions: &[[f64; 2]],
    altitudes: &[f64],
    powers: &[f64],
    sched: &[Vec<f64>],
    k: &LinkConstants,
) -> f64 {
    let n_slots = positions.len();
    let mut total = 0.0;
    for n in 0..n_slots {
        for (r, w) in users.iter().enumerate() {
            let weight = sched[r][n];
            if weight != 0.0 {
                total += weight * lower_bound_rate(powers[n], positions[n], altitudes[n], *w, k);
            }
        }
    }
    total / n_slots as f64
}
