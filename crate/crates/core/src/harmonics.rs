//! Spherical-harmonic bookkeeping for axisymmetric fields: orthonormal real
//! Y_l0 via the Legendre recurrence, Gauss-Legendre projection, reconstruction,
//! angular smoothing weights, and Parseval assembly of per-mode energies.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarmonicsError {
    #[error("projection onto degrees <= {l_max} needs at least {needed} polar nodes, got {got}")]
    TooFewNodes {
        l_max: usize,
        needed: usize,
        got: usize,
    },
    #[error("sample table has {got} values, expected n_x * n_theta = {expected}")]
    BadSampleShape { got: usize, expected: usize },
    #[error("mode energy must be nonnegative, got {value} for (l = {l}, m = {m})")]
    NegativeEnergy { l: u32, m: i32, value: f64 },
    #[error("coefficient profiles must share one grid length")]
    RaggedProfiles,
}

/// Legendre polynomial P_l(x) by the standard three-term recurrence.
pub fn legendre_p(l: usize, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=l {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

fn legendre_p_and_dp(l: usize, x: f64) -> (f64, f64) {
    if l == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=l {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // P_l'(x) = l (x P_l - P_{l-1}) / (x^2 - 1)
    let dp = l as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Orthonormal real axisymmetric harmonic Y_l0 = sqrt((2l+1)/4pi) P_l(cos theta),
/// evaluated at mu = cos theta.
pub fn y_l0(l: usize, mu: f64) -> f64 {
    ((2.0 * l as f64 + 1.0) / (4.0 * std::f64::consts::PI)).sqrt() * legendre_p(l, mu)
}

/// Gauss-Legendre nodes (mu = cos theta, ascending) and weights on [-1, 1].
///
/// Roots of P_n by Newton iteration from the Chebyshev guess, polished to
/// machine precision; exact for polynomial integrands of degree <= 2n - 1.
#[derive(Debug, Clone)]
pub struct AngularGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AngularGrid {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_p_and_dp(n, z);
                let step = p / dp;
                z -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_p_and_dp(n, z);
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            weights[i] = w;
            nodes[n - 1 - i] = z;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Radial profiles of the (l, 0) coefficients on a shared grid, l = 0..=l_max.
#[derive(Debug, Clone)]
pub struct ModeCoefficients {
    pub l_max: usize,
    profiles: Vec<Vec<f64>>,
}

impl ModeCoefficients {
    pub fn new(profiles: Vec<Vec<f64>>) -> Result<Self, HarmonicsError> {
        if profiles.is_empty() || profiles.windows(2).any(|w| w[0].len() != w[1].len()) {
            return Err(HarmonicsError::RaggedProfiles);
        }
        Ok(Self {
            l_max: profiles.len() - 1,
            profiles,
        })
    }

    pub fn profile(&self, l: usize) -> &[f64] {
        &self.profiles[l]
    }

    pub fn grid_len(&self) -> usize {
        self.profiles[0].len()
    }
}

/// Project axisymmetric samples f(x_i, theta_j) onto Y_l0 for l <= l_max.
///
/// `samples` is row-major over x, with one column per node of `angular`:
/// coefficient_l(x_i) = 2 pi * sum_j w_j f(x_i, mu_j) Y_l0(mu_j). Exact for
/// data polynomial in cos theta of degree <= l_max.
pub fn project_axisymmetric(
    samples: &[f64],
    n_x: usize,
    angular: &AngularGrid,
    l_max: usize,
) -> Result<ModeCoefficients, HarmonicsError> {
    let n_theta = angular.len();
    if n_theta < 2 * l_max + 2 {
        return Err(HarmonicsError::TooFewNodes {
            l_max,
            needed: 2 * l_max + 2,
            got: n_theta,
        });
    }
    if samples.len() != n_x * n_theta {
        return Err(HarmonicsError::BadSampleShape {
            got: samples.len(),
            expected: n_x * n_theta,
        });
    }
    // Tabulate 2 pi w_j Y_l0(mu_j) once per degree.
    let mut basis = vec![0.0; (l_max + 1) * n_theta];
    for l in 0..=l_max {
        for j in 0..n_theta {
            basis[l * n_theta + j] =
                2.0 * std::f64::consts::PI * angular.weights[j] * y_l0(l, angular.nodes[j]);
        }
    }
    let mut profiles = vec![vec![0.0; n_x]; l_max + 1];
    for ix in 0..n_x {
        let row = &samples[ix * n_theta..(ix + 1) * n_theta];
        for l in 0..=l_max {
            let b = &basis[l * n_theta..(l + 1) * n_theta];
            let mut acc = 0.0;
            for j in 0..n_theta {
                acc += row[j] * b[j];
            }
            profiles[l][ix] = acc;
        }
    }
    ModeCoefficients::new(profiles)
}

/// Evaluate the mode sum sum_l coeff_l(x) Y_l0(theta) at one polar angle.
pub fn reconstruct(coeffs: &ModeCoefficients, theta: f64) -> Vec<f64> {
    let mu = theta.cos();
    let n_x = coeffs.grid_len();
    let mut out = vec![0.0; n_x];
    for l in 0..=coeffs.l_max {
        let y = y_l0(l, mu);
        let profile = coeffs.profile(l);
        for ix in 0..n_x {
            out[ix] += profile[ix] * y;
        }
    }
    out
}

/// Eigenvalue (1 + lambda^2)^{s/2} of the angular smoothing operator
/// (1 - Delta_sph)^{s/2} on degree-l harmonics.
pub fn angular_smoothing_weight(lambda: f64, s: f64) -> f64 {
    (1.0 + lambda * lambda).powf(s / 2.0)
}

/// Parseval assembly: per-mode energies sum to the full solid-angle integral
/// because the harmonics are orthonormal.
pub fn assemble_total_energy(
    per_mode: &[(crate::potential::ModeSpec, f64)],
) -> Result<f64, HarmonicsError> {
    let mut total = 0.0;
    for (mode, energy) in per_mode {
        if !(*energy >= 0.0) {
            return Err(HarmonicsError::NegativeEnergy {
                l: mode.l,
                m: mode.m,
                value: *energy,
            });
        }
        total += energy;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::ModeSpec;
    use std::f64::consts::PI;

    #[test]
    fn quadrature_integrates_polynomials_exactly() {
        let g = AngularGrid::new(8);
        // integral of x^k over [-1, 1]
        for k in 0..=15usize {
            let exact = if k % 2 == 0 {
                2.0 / (k as f64 + 1.0)
            } else {
                0.0
            };
            let got: f64 = g
                .nodes
                .iter()
                .zip(&g.weights)
                .map(|(&x, &w)| w * x.powi(k as i32))
                .sum();
            assert!((got - exact).abs() < 1e-14, "degree {k}: {got} vs {exact}");
        }
    }

    #[test]
    fn gram_matrix_is_identity() {
        let l_max = 12;
        let g = AngularGrid::new(2 * l_max + 2);
        for l in 0..=l_max {
            for lp in l..=l_max {
                let mut acc = 0.0;
                for (&mu, &w) in g.nodes.iter().zip(&g.weights) {
                    acc += 2.0 * PI * w * y_l0(l, mu) * y_l0(lp, mu);
                }
                let expect = if l == lp { 1.0 } else { 0.0 };
                assert!(
                    (acc - expect).abs() < 1e-12,
                    "gram({l},{lp}) = {acc}"
                );
            }
        }
    }

    fn sample(f: impl Fn(f64, f64) -> f64, xs: &[f64], g: &AngularGrid) -> Vec<f64> {
        let mut out = Vec::with_capacity(xs.len() * g.len());
        for &x in xs {
            for &mu in &g.nodes {
                out.push(f(x, mu));
            }
        }
        out
    }

    #[test]
    fn constant_data_is_pure_monopole() {
        let xs: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let g = AngularGrid::new(10);
        let samples = sample(|_, _| 1.0, &xs, &g);
        let coeffs = project_axisymmetric(&samples, xs.len(), &g, 3).unwrap();
        let sqrt_4pi = (4.0 * PI).sqrt();
        for ix in 0..xs.len() {
            assert!((coeffs.profile(0)[ix] - sqrt_4pi).abs() < 1e-13);
            for l in 1..=3 {
                assert!(coeffs.profile(l)[ix].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cos_theta_data_is_pure_dipole() {
        let xs: Vec<f64> = (0..4).map(|i| 1.0 + i as f64).collect();
        let gx = |x: f64| 0.5 * x * x - 1.0;
        let g = AngularGrid::new(12);
        let samples = sample(|x, mu| mu * gx(x), &xs, &g);
        let coeffs = project_axisymmetric(&samples, xs.len(), &g, 4).unwrap();
        let norm = (4.0 * PI / 3.0).sqrt();
        for (ix, &x) in xs.iter().enumerate() {
            assert!((coeffs.profile(1)[ix] - norm * gx(x)).abs() < 1e-12);
            for l in [0usize, 2, 3, 4] {
                assert!(coeffs.profile(l)[ix].abs() < 1e-12, "leak into l = {l}");
            }
        }
    }

    #[test]
    fn orthonormal_data_projects_to_itself() {
        // f = Y_20(theta) g(x) has coefficient exactly g at l = 2.
        let xs: Vec<f64> = (0..6).map(|i| i as f64 * 0.7).collect();
        let gx = |x: f64| (-(x * x)).exp();
        let g = AngularGrid::new(10);
        let samples = sample(|x, mu| y_l0(2, mu) * gx(x), &xs, &g);
        let coeffs = project_axisymmetric(&samples, xs.len(), &g, 4).unwrap();
        for (ix, &x) in xs.iter().enumerate() {
            assert!((coeffs.profile(2)[ix] - gx(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn degree_preservation_keeps_other_channels_silent() {
        let xs = [0.0, 1.0];
        let g = AngularGrid::new(14);
        for l_src in 0..=5usize {
            let samples = sample(|_, mu| y_l0(l_src, mu), &xs, &g);
            let coeffs = project_axisymmetric(&samples, xs.len(), &g, 5).unwrap();
            for l in 0..=5 {
                let expect = if l == l_src { 1.0 } else { 0.0 };
                assert!(
                    (coeffs.profile(l)[0] - expect).abs() < 1e-12,
                    "src {l_src} -> {l}"
                );
            }
        }
    }

    #[test]
    fn project_reconstruct_round_trip() {
        // Band-limited data with deterministic pseudo-random radial profiles.
        let l_max = 6;
        let n_x = 9;
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut rnd = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let profiles: Vec<Vec<f64>> = (0..=l_max)
            .map(|_| (0..n_x).map(|_| rnd()).collect())
            .collect();
        let coeffs = ModeCoefficients::new(profiles).unwrap();

        let g = AngularGrid::new(2 * l_max + 2);
        let mut samples = Vec::with_capacity(n_x * g.len());
        for ix in 0..n_x {
            for &mu in &g.nodes {
                let theta = mu.acos();
                samples.push(reconstruct(&coeffs, theta)[ix]);
            }
        }
        let back = project_axisymmetric(&samples, n_x, &g, l_max).unwrap();
        for l in 0..=l_max {
            for ix in 0..n_x {
                let diff = (back.profile(l)[ix] - coeffs.profile(l)[ix]).abs();
                assert!(diff < 1e-12, "l = {l}, ix = {ix}: {diff}");
            }
        }
    }

    #[test]
    fn reconstruct_trivia() {
        let coeffs = ModeCoefficients::new(vec![vec![2.0, 4.0]]).unwrap();
        let vals = reconstruct(&coeffs, 1.234);
        let expect = 2.0 / (4.0 * PI).sqrt();
        assert!((vals[0] - expect).abs() < 1e-15);
        assert!((vals[1] - 2.0 * expect).abs() < 1e-15);
        let zero = ModeCoefficients::new(vec![vec![0.0; 3]; 4]).unwrap();
        assert!(reconstruct(&zero, 0.5).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn parseval_radial_l2() {
        // sum_l int coeff_l^2 dx == iint f^2 2 pi sin(theta) dtheta dx for
        // band-limited f, both sides evaluated with the same x-trapezoid.
        let l_max = 4;
        let n_x = 41;
        let xs: Vec<f64> = (0..n_x).map(|i| -2.0 + i as f64 * 0.1).collect();
        let dx = 0.1;
        let g = AngularGrid::new(2 * l_max + 2);
        let f = |x: f64, mu: f64| (-(x * x)).exp() * (y_l0(0, mu) + 0.7 * y_l0(3, mu));
        let samples = sample(f, &xs, &g);
        let coeffs = project_axisymmetric(&samples, n_x, &g, l_max).unwrap();

        let trapz = |vals: &dyn Fn(usize) -> f64| -> f64 {
            let mut acc = 0.0;
            for i in 0..n_x {
                let w = if i == 0 || i == n_x - 1 { 0.5 } else { 1.0 };
                acc += w * vals(i) * dx;
            }
            acc
        };
        let mode_side: f64 = (0..=l_max)
            .map(|l| trapz(&|i| coeffs.profile(l)[i] * coeffs.profile(l)[i]))
            .sum();
        let direct = trapz(&|i| {
            let mut ang = 0.0;
            for (j, (&mu, &w)) in g.nodes.iter().zip(&g.weights).enumerate() {
                let v = samples[i * g.len() + j];
                ang += 2.0 * PI * w * v * v;
                let _ = mu;
            }
            ang
        });
        assert!(
            (mode_side - direct).abs() < 1e-10 * direct.abs(),
            "{mode_side} vs {direct}"
        );
    }

    #[test]
    fn smoothing_weights() {
        assert_eq!(angular_smoothing_weight(0.0, 3.0), 1.0);
        assert!((angular_smoothing_weight(2.0f64.sqrt(), 2.0) - 3.0).abs() < 1e-15);
        assert!((angular_smoothing_weight(6.0f64.sqrt(), 1.0) - 7.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn energy_assembly() {
        let m0 = ModeSpec::new(0, 0).unwrap();
        let m2 = ModeSpec::new(2, 0).unwrap();
        assert_eq!(assemble_total_energy(&[(m0, 1.0)]).unwrap(), 1.0);
        assert_eq!(
            assemble_total_energy(&[(m0, 0.3), (m2, 0.7)]).unwrap(),
            1.0
        );
        assert!(assemble_total_energy(&[(m0, -0.1)]).is_err());
    }

    #[test]
    fn projection_input_validation() {
        let g = AngularGrid::new(4);
        assert!(matches!(
            project_axisymmetric(&[0.0; 8], 2, &g, 3),
            Err(HarmonicsError::TooFewNodes { .. })
        ));
        assert!(matches!(
            project_axisymmetric(&[0.0; 7], 2, &g, 1),
            Err(HarmonicsError::BadSampleShape { .. })
        ));
    }
}
