//! The Regge-Wheeler potential family Q_lambda for scalar waves, its critical
//! point curve, and the verifier/search machinery for the six
//! strongly-repulsive sign conditions.
//!
//! In the tortoise coordinate the per-harmonic wave equation carries the
//! potential
//!
//! ```text
//! Q_lambda(x) = (1 - 2M/r) (2M/r^3 + lambda^2/r^2),    lambda^2 = l(l+1),
//! ```
//!
//! whose tortoise derivative factors through the bracket polynomial
//! `lambda^2 r^2 - 3M(lambda^2 - 1) r - 8M^2`. Its unique positive root r(lambda)
//! lies in [8M/3, 3M) and climbs to the photon sphere as lambda grows; the
//! translated origin x0(lambda) = r*(r(lambda)) is where all condition checks
//! are centred.

use crate::geometry::{
    radius_and_factor_from_tortoise, tortoise_from_radius, GeometryError, SchwarzschildParams,
    TortoiseGrid,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("angular frequency lambda must be nonnegative, got {lambda}")]
    NegativeLambda { lambda: f64 },
    #[error("azimuthal index m = {m} exceeds degree l = {l}")]
    BadAzimuthalIndex { l: u32, m: i32 },
    #[error("potential table has {table_len} samples but the grid has {grid_len} nodes")]
    GridMismatch { table_len: usize, grid_len: usize },
    #[error("constants must satisfy 0 < b1 < b2, got b1 = {b1}, b2 = {b2}")]
    BadIntervals { b1: f64, b2: f64 },
    #[error("b2 = {b2} must stay below a quarter of the grid span {span}")]
    IntervalsExceedGrid { b2: f64, span: f64 },
    #[error("verification constant C must be positive, got {c}")]
    NonPositiveC { c: f64 },
    #[error("family of potentials is empty")]
    EmptyFamily,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One spherical-harmonic channel: degree l, order m, and the angular
/// frequency lambda = sqrt(l(l+1)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    pub l: u32,
    pub m: i32,
    pub lambda: f64,
}

impl ModeSpec {
    pub fn new(l: u32, m: i32) -> Result<Self, PotentialError> {
        if m.unsigned_abs() > l {
            return Err(PotentialError::BadAzimuthalIndex { l, m });
        }
        Ok(Self {
            l,
            m,
            lambda: (l as f64 * (l as f64 + 1.0)).sqrt(),
        })
    }
}

/// Q_lambda(r) = (1 - 2M/r)(2M/r^3 + lambda^2/r^2); zero at the horizon and
/// at infinity.
pub fn potential_value(
    lambda: f64,
    r: f64,
    params: &SchwarzschildParams,
) -> Result<f64, PotentialError> {
    check_lambda(lambda)?;
    let horizon = params.horizon_radius();
    if !(r > horizon) {
        return Err(PotentialError::Geometry(GeometryError::InsideHorizon {
            r,
            horizon,
        }));
    }
    let f = (r - horizon) / r;
    Ok(value_from_parts(lambda, r, f, params))
}

/// dQ_lambda/dr* = -(2/r^5)(1 - 2M/r)[lambda^2 r^2 - 3M(lambda^2 - 1)r - 8M^2].
pub fn potential_derivative(
    lambda: f64,
    r: f64,
    params: &SchwarzschildParams,
) -> Result<f64, PotentialError> {
    check_lambda(lambda)?;
    let horizon = params.horizon_radius();
    if !(r > horizon) {
        return Err(PotentialError::Geometry(GeometryError::InsideHorizon {
            r,
            horizon,
        }));
    }
    let f = (r - horizon) / r;
    Ok(derivative_from_parts(lambda, r, f, params))
}

fn value_from_parts(lambda: f64, r: f64, f: f64, params: &SchwarzschildParams) -> f64 {
    let m = params.mass();
    f * (2.0 * m / (r * r * r) + lambda * lambda / (r * r))
}

fn derivative_from_parts(lambda: f64, r: f64, f: f64, params: &SchwarzschildParams) -> f64 {
    let m = params.mass();
    let l2 = lambda * lambda;
    let bracket = l2 * r * r - 3.0 * m * (l2 - 1.0) * r - 8.0 * m * m;
    -2.0 / (r * r * r * r * r) * f * bracket
}

/// The critical areal radius r(lambda): the unique positive root of the
/// bracket polynomial, given by the quadratic formula, with the limit 8M/3 at
/// lambda = 0.
///
/// For lambda^2 <= 1 the direct formula cancels catastrophically, so that
/// branch uses the conjugate form 16M / (sqrt(9(a-1)^2 + 32a) + 3(1 - a)),
/// which is exact at both endpoints (8M/3 at a = 0, 2 sqrt(2) M at a = 1).
pub fn critical_radius(lambda: f64, params: &SchwarzschildParams) -> Result<f64, PotentialError> {
    check_lambda(lambda)?;
    let m = params.mass();
    let a = lambda * lambda;
    let disc = (9.0 * (a - 1.0) * (a - 1.0) + 32.0 * a).sqrt();
    if a <= 1.0 {
        Ok(16.0 * m / (disc + 3.0 * (1.0 - a)))
    } else {
        Ok(m * (3.0 * (a - 1.0) + disc) / (2.0 * a))
    }
}

/// x0(lambda) = r*(r(lambda)); tends to r*(3M) as lambda grows.
pub fn critical_tortoise(lambda: f64, params: &SchwarzschildParams) -> Result<f64, PotentialError> {
    let r = critical_radius(lambda, params)?;
    Ok(tortoise_from_radius(r, params)?)
}

/// Q''_lambda(x0) = -(2/r^5)(1 - 2M/r)^2 [2 lambda^2 r - 3M(lambda^2 - 1)]
/// at r = r(lambda). Strictly negative, O(lambda^2) for large lambda.
pub fn second_derivative_at_critical(
    lambda: f64,
    params: &SchwarzschildParams,
) -> Result<f64, PotentialError> {
    let m = params.mass();
    let r = critical_radius(lambda, params)?;
    let f = (r - params.horizon_radius()) / r;
    let l2 = lambda * lambda;
    Ok(-2.0 / (r * r * r * r * r) * f * f * (2.0 * l2 * r - 3.0 * m * (l2 - 1.0)))
}

/// Trapping diagnostic y dQ/dy + 2Q in the shifted coordinate y = x - x0(lambda).
///
/// Positive at the critical point (2 Q(x0) > 0), negative far out on either
/// side once the potential is genuinely repulsive.
pub fn trapping_term(
    lambda: f64,
    y: f64,
    params: &SchwarzschildParams,
) -> Result<f64, PotentialError> {
    let x0 = critical_tortoise(lambda, params)?;
    // The stable (r, f) pair keeps the exponential horizon tail meaningful
    // far to the left, where r - 2M is below the granularity of r itself.
    let (r, f) = radius_and_factor_from_tortoise(y + x0, params)?;
    let q = value_from_parts(lambda, r, f, params);
    let dq = derivative_from_parts(lambda, r, f, params);
    Ok(y * dq + 2.0 * q)
}

/// Sampled potential for one mode: Q and dQ/dx at every grid node plus the
/// critical-point data.
#[derive(Debug, Clone)]
pub struct PotentialTable {
    pub lambda: f64,
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    pub x0: f64,
    pub r_crit: f64,
}

impl PotentialTable {
    /// Sample Q_lambda on a grid, using the grid's stored metric factor so the
    /// horizon tail underflows instead of cancelling.
    pub fn for_mode(
        lambda: f64,
        grid: &TortoiseGrid,
        params: &SchwarzschildParams,
    ) -> Result<Self, PotentialError> {
        check_lambda(lambda)?;
        let mut q = Vec::with_capacity(grid.n);
        let mut dq = Vec::with_capacity(grid.n);
        for i in 0..grid.n {
            let r = grid.r_of_x[i];
            let f = grid.f_of_x[i];
            q.push(value_from_parts(lambda, r, f, params));
            dq.push(derivative_from_parts(lambda, r, f, params));
        }
        Ok(Self {
            lambda,
            q,
            dq,
            x0: critical_tortoise(lambda, params)?,
            r_crit: critical_radius(lambda, params)?,
        })
    }

    /// Raw table from explicit samples; used for synthetic fixtures and the
    /// free-wave stepper tests.
    pub fn synthetic(lambda: f64, q: Vec<f64>, dq: Vec<f64>, x0: f64, r_crit: f64) -> Self {
        Self {
            lambda,
            q,
            dq,
            x0,
            r_crit,
        }
    }

    /// Identically zero potential on a grid (the flat 1-D wave equation).
    pub fn zero(grid: &TortoiseGrid) -> Self {
        Self::synthetic(0.0, vec![0.0; grid.n], vec![0.0; grid.n], 0.0, f64::NAN)
    }
}

pub const CONDITION_NAMES: [&str; 6] = [
    "(Positivity)",
    "(Repulsive 1)",
    "(Repulsive 2)",
    "(Homogeneity)",
    "(Critical Point)",
    "(Local Bounds)",
];

/// Constants entering the strongly-repulsive conditions: the bound C and the
/// symmetric intervals [-b1, b1], [-b2, b2] in the shifted coordinate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Constants {
    #[serde(rename = "C")]
    pub c: f64,
    pub b1: f64,
    pub b2: f64,
}

/// Outcome of one condition for one mode: pass flag plus the worst margin
/// (negative means violated) and the shifted coordinate where it occurs.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub pass: bool,
    pub worst_margin: f64,
    pub worst_location: f64,
}

/// Per-mode verification report; serializes to the documented JSON shape.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub lambda: f64,
    pub conditions: Vec<ConditionCheck>,
    pub constants: Constants,
}

impl ConditionReport {
    pub fn passes(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn first_failing(&self) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| !c.pass)
    }
}

/// Family-level verdict: one report per mode under a shared (C, b1, b2).
#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub constants: Constants,
    pub passes: bool,
    pub modes: Vec<ConditionReport>,
}

impl FamilyReport {
    pub fn first_failing(&self) -> Option<(&ConditionReport, &ConditionCheck)> {
        // Report the lowest-numbered violated condition across the family.
        for k in 0..CONDITION_NAMES.len() {
            for mode in &self.modes {
                let check = &mode.conditions[k];
                if !check.pass {
                    return Some((mode, check));
                }
            }
        }
        None
    }
}

struct WorstTracker {
    margin: f64,
    location: f64,
}

impl WorstTracker {
    fn new() -> Self {
        Self {
            margin: f64::INFINITY,
            location: f64::NAN,
        }
    }

    fn update(&mut self, margin: f64, y: f64) {
        if margin < self.margin {
            self.margin = margin;
            self.location = y;
        }
    }

    fn into_check(self, name: &'static str) -> ConditionCheck {
        ConditionCheck {
            pass: self.margin >= 0.0,
            worst_margin: self.margin,
            worst_location: self.location,
            name,
        }
    }
}

fn sgn(y: f64) -> f64 {
    // sgn(0) := 0; y = 0 lies inside B1 so the choice never decides a verdict.
    if y > 0.0 {
        1.0
    } else if y < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Check the six strongly-repulsive conditions for every family member at
/// every grid node, in the shifted coordinate y = x - x0(lambda):
///
/// 1. (Positivity)      Q >= 0
/// 2. (Repulsive 1)     -y dQ >= 0
/// 3. (Repulsive 2)     y dQ + 2Q <= -C sgn(y) dQ        for |y| > b1
/// 4. (Homogeneity)     y dQ + 2Q <= C Q / |y|           for |y| > b2
/// 5. (Critical Point)  (1 + lambda^2) y^2 <= -C y dQ    for |y| <= 2 b1
/// 6. (Local Bounds)    1/C <= Q <= C (1 + lambda^2)     for |y| <= 2 b1
pub fn verify_conditions(
    family: &[PotentialTable],
    c: f64,
    b1: f64,
    b2: f64,
    grid: &TortoiseGrid,
) -> Result<FamilyReport, PotentialError> {
    if family.is_empty() {
        return Err(PotentialError::EmptyFamily);
    }
    if !(c > 0.0) {
        return Err(PotentialError::NonPositiveC { c });
    }
    if !(0.0 < b1 && b1 < b2) {
        return Err(PotentialError::BadIntervals { b1, b2 });
    }
    let span = grid.x_max - grid.x_min;
    if !(b2 < span / 4.0) {
        return Err(PotentialError::IntervalsExceedGrid { b2, span });
    }
    let constants = Constants { c, b1, b2 };

    let mut modes = Vec::with_capacity(family.len());
    for table in family {
        if table.q.len() != grid.n || table.dq.len() != grid.n {
            return Err(PotentialError::GridMismatch {
                table_len: table.q.len().min(table.dq.len()),
                grid_len: grid.n,
            });
        }
        let l2 = table.lambda * table.lambda;
        let mut worst: [WorstTracker; 6] = std::array::from_fn(|_| WorstTracker::new());
        for i in 0..grid.n {
            let y = grid.xs[i] - table.x0;
            let q = table.q[i];
            let dq = table.dq[i];
            let trapping = y * dq + 2.0 * q;

            worst[0].update(q, y);
            worst[1].update(-y * dq, y);
            if y.abs() > b1 {
                worst[2].update(-c * sgn(y) * dq - trapping, y);
            }
            if y.abs() > b2 {
                worst[3].update(c * q / y.abs() - trapping, y);
            }
            if y.abs() <= 2.0 * b1 {
                worst[4].update(-c * y * dq - (1.0 + l2) * y * y, y);
                worst[5].update((q - 1.0 / c).min(c * (1.0 + l2) - q), y);
            }
        }
        let conditions = worst
            .into_iter()
            .zip(CONDITION_NAMES)
            .map(|(w, name)| w.into_check(name))
            .collect();
        modes.push(ConditionReport {
            lambda: table.lambda,
            conditions,
            constants,
        });
    }
    let passes = modes.iter().all(|m| m.passes());
    Ok(FamilyReport {
        constants,
        passes,
        modes,
    })
}

/// Candidate grids for the constant search.
#[derive(Debug, Clone)]
pub struct SearchGrid {
    pub c_candidates: Vec<f64>,
    pub b1_candidates: Vec<f64>,
    pub b2_candidates: Vec<f64>,
}

impl Default for SearchGrid {
    /// C on factor-2 steps over [1e-2, 1e6]; b2 candidates sit beyond the
    /// trapping-term sign change of every low-lambda mode so that the interval
    /// B2 genuinely brackets the non-repulsive zone.
    fn default() -> Self {
        let mut c_candidates = Vec::new();
        let mut c = 1e-2;
        while c <= 1e6 {
            c_candidates.push(c);
            c *= 2.0;
        }
        Self {
            c_candidates,
            b1_candidates: vec![0.25, 0.5, 1.0],
            b2_candidates: vec![32.0, 48.0, 64.0],
        }
    }
}

/// Search the candidate grids for the smallest C (then the first (b1, b2))
/// under which the whole family passes all six conditions simultaneously.
///
/// Returns `None` when no candidate triple works; infeasibility is a
/// legitimate outcome, not an error.
pub fn search_constants(
    family: &[PotentialTable],
    grid: &TortoiseGrid,
    search: &SearchGrid,
) -> Result<Option<Constants>, PotentialError> {
    if family.is_empty() {
        return Err(PotentialError::EmptyFamily);
    }
    let span = grid.x_max - grid.x_min;
    for &c in &search.c_candidates {
        for &b1 in &search.b1_candidates {
            for &b2 in &search.b2_candidates {
                if !(b1 < b2) || !(b2 < span / 4.0) {
                    continue;
                }
                let report = verify_conditions(family, c, b1, b2, grid)?;
                if report.passes {
                    return Ok(Some(report.constants));
                }
            }
        }
    }
    Ok(None)
}

fn check_lambda(lambda: f64) -> Result<(), PotentialError> {
    if !(lambda >= 0.0) {
        return Err(PotentialError::NegativeLambda { lambda });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, radius_from_tortoise};

    fn m1() -> SchwarzschildParams {
        SchwarzschildParams::new(1.0).unwrap()
    }

    /// Bisection root of the bracket polynomial, the independent oracle for
    /// the quadratic-formula critical radius.
    fn bracket_root_bisection(lambda: f64) -> f64 {
        let l2 = lambda * lambda;
        let poly = |r: f64| l2 * r * r - 3.0 * (l2 - 1.0) * r - 8.0;
        let (mut lo, mut hi) = (2.0, 4.0);
        assert!(poly(lo) < 0.0 && poly(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if poly(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn mode_spec_lambda() {
        let m = ModeSpec::new(2, 0).unwrap();
        assert_eq!(m.lambda, 6.0f64.sqrt());
        assert!(ModeSpec::new(1, 2).is_err());
        assert!(ModeSpec::new(3, -3).is_ok());
    }

    #[test]
    fn potential_values() {
        let p = m1();
        // Vanishes at the horizon with the metric factor.
        assert!(potential_value(5.0, 2.0, &p).is_err());
        let near = potential_value(5.0, 2.0 + 1e-12, &p).unwrap();
        assert!(near < 1e-11);
        // Direct evaluations at r = 3.
        assert!((potential_value(0.0, 3.0, &p).unwrap() - 2.0 / 81.0).abs() < 1e-16);
        assert!((potential_value(1.0, 3.0, &p).unwrap() - 5.0 / 81.0).abs() < 1e-16);
    }

    #[test]
    fn derivative_roots_and_sign() {
        let p = m1();
        // lambda = 1: bracket r^2 - 8 vanishes at 2 sqrt(2).
        let d = potential_derivative(1.0, 2.0 * 2.0f64.sqrt(), &p).unwrap();
        assert!(d.abs() < 1e-16, "dQ = {d}");
        // lambda = 0: bracket 3r - 8 vanishes at 8/3.
        let d = potential_derivative(0.0, 8.0 / 3.0, &p).unwrap();
        assert!(d.abs() < 1e-16, "dQ = {d}");
        // Beyond the critical point the slope is negative.
        assert!(potential_derivative(1.0, 10.0, &p).unwrap() < 0.0);
    }

    #[test]
    fn derivative_matches_central_difference() {
        // O(h^2) agreement with the tortoise-coordinate difference quotient,
        // confirmed by halving h and seeing the error drop fourfold.
        let p = m1();
        for &(lambda, r) in &[(0.0, 3.0), (1.0, 10.0), (6.0f64.sqrt(), 2.9), (10.0, 4.0)] {
            let x = tortoise_from_radius(r, &p).unwrap();
            let exact = potential_derivative(lambda, r, &p).unwrap();
            let diff = |h: f64| {
                let rp = radius_from_tortoise(x + h, &p).unwrap();
                let rm = radius_from_tortoise(x - h, &p).unwrap();
                let qp = potential_value(lambda, rp, &p).unwrap();
                let qm = potential_value(lambda, rm, &p).unwrap();
                (qp - qm) / (2.0 * h)
            };
            let e1 = (diff(1e-3) - exact).abs();
            let e2 = (diff(5e-4) - exact).abs();
            assert!(e1 < 1e-5, "lambda {lambda} r {r}: error {e1}");
            assert!(e2 < 0.3 * e1, "no h^2 reduction: {e1} -> {e2}");
        }
    }

    #[test]
    fn critical_radius_closed_forms() {
        let p = m1();
        // lambda -> 0 limit is exactly 8M/3 in the conjugate branch.
        assert_eq!(critical_radius(0.0, &p).unwrap(), 8.0 / 3.0);
        // lambda = 1 root of r^2 - 8.
        let r1 = critical_radius(1.0, &p).unwrap();
        assert!((r1 - 2.0 * 2.0f64.sqrt()).abs() < 1e-15);
        // Small lambda agrees with the brute-force root of the bracket.
        let r_small = critical_radius(1e-6, &p).unwrap();
        assert!((r_small - bracket_root_bisection(1e-6)).abs() < 1e-5);
        // Large lambda approaches the photon sphere from below.
        let r_big = critical_radius(1000.0, &p).unwrap();
        assert!(r_big < 3.0 && 3.0 - r_big < 1e-5, "r(1000) = {r_big}");
        assert!(critical_radius(-1.0, &p).is_err());
    }

    #[test]
    fn critical_radius_matches_bisection_oracle() {
        let p = m1();
        for &lambda in &[0.3, 1.0, 2.0, 6.0f64.sqrt(), 5.0, 30.0] {
            let r = critical_radius(lambda, &p).unwrap();
            let oracle = bracket_root_bisection(lambda);
            assert!((r - oracle).abs() < 1e-12, "lambda {lambda}: {r} vs {oracle}");
        }
    }

    #[test]
    fn critical_radius_monotone_and_sandwiched() {
        let p = m1();
        let mut prev = 0.0;
        for i in 0..200 {
            let lambda = 100.0 * i as f64 / 199.0;
            let r = critical_radius(lambda, &p).unwrap();
            assert!(r >= 8.0 / 3.0 && r < 3.0, "r({lambda}) = {r}");
            assert!(r > prev, "not increasing at lambda = {lambda}");
            prev = r;
        }
    }

    #[test]
    fn critical_tortoise_values() {
        let p = m1();
        // Composition of closed forms at lambda = 1.
        let r1 = 2.0 * 2.0f64.sqrt();
        let expect = r1 + 2.0 * (r1 - 2.0).ln();
        let x1 = critical_tortoise(1.0, &p).unwrap();
        assert!((x1 - expect).abs() < 1e-14, "{x1} vs {expect}");
        // x0(infinity) = r*(3M) = 3 for M = 1 since ln(3 - 2) = 0.
        let x_inf = critical_tortoise(1e8, &p).unwrap();
        assert!((x_inf - 3.0).abs() < 1e-10);
        // Monotone increasing along the curve.
        let mut prev = f64::NEG_INFINITY;
        for &lambda in &[0.0, 1.0, 2.0, 5.0, 10.0] {
            let x0 = critical_tortoise(lambda, &p).unwrap();
            assert!(x0 > prev);
            prev = x0;
        }
    }

    #[test]
    fn second_derivative_negative_and_scales() {
        let p = m1();
        // Closed form at lambda = 1 against a central difference in r*.
        let q2 = second_derivative_at_critical(1.0, &p).unwrap();
        let x0 = critical_tortoise(1.0, &p).unwrap();
        let h = 1e-4;
        let q = |x: f64| {
            let r = radius_from_tortoise(x, &p).unwrap();
            potential_value(1.0, r, &p).unwrap()
        };
        let fd = (q(x0 + h) - 2.0 * q(x0) + q(x0 - h)) / (h * h);
        assert!((q2 - fd).abs() < 1e-6, "{q2} vs fd {fd}");
        assert!((q2 + 0.0053617).abs() < 1e-6);
        // Negative for every lambda, including the lambda = 0 bracket 3M.
        assert!(second_derivative_at_critical(0.0, &p).unwrap() < 0.0);
        // O(lambda^2) growth: quadrupling when lambda doubles.
        let r = second_derivative_at_critical(20.0, &p).unwrap()
            / second_derivative_at_critical(10.0, &p).unwrap();
        assert!((r - 4.0).abs() < 0.4, "ratio {r}");
    }

    #[test]
    fn trapping_term_sign_structure() {
        let p = m1();
        // At the critical point the term is 2Q(x0) > 0.
        for &lambda in &[0.0, 1.0, 6.0f64.sqrt(), 110.0f64.sqrt()] {
            let t0 = trapping_term(lambda, 0.0, &p).unwrap();
            let r = critical_radius(lambda, &p).unwrap();
            let q0 = potential_value(lambda, r, &p).unwrap();
            assert!((t0 - 2.0 * q0).abs() < 1e-12 * q0);
            assert!(t0 > 0.0);
        }
        // Far out on the right the repulsive structure wins.
        assert!(trapping_term(1.0, 40.0, &p).unwrap() < 0.0);
        // Toward the horizon both Q and dQ decay exponentially: 0 from below.
        let left = trapping_term(0.0, -30.0, &p).unwrap();
        assert!(left < 0.0 && left > -1e-5, "left tail {left}");
    }

    fn family_up_to(l_max: u32, grid: &TortoiseGrid, p: &SchwarzschildParams) -> Vec<PotentialTable> {
        (0..=l_max)
            .map(|l| {
                let lambda = (l as f64 * (l as f64 + 1.0)).sqrt();
                PotentialTable::for_mode(lambda, grid, p).unwrap()
            })
            .collect()
    }

    fn verify_grid() -> (SchwarzschildParams, TortoiseGrid) {
        let p = m1();
        let grid = build_grid(-150.0, 150.0, 6001, &p).unwrap();
        (p, grid)
    }

    #[test]
    fn table_sign_change_near_x0() {
        let (p, grid) = verify_grid();
        for table in family_up_to(20, &grid, &p) {
            let mut changes = 0;
            let mut change_x = f64::NAN;
            for w in 0..grid.n - 1 {
                if table.dq[w] > 0.0 && table.dq[w + 1] <= 0.0 {
                    changes += 1;
                    change_x = grid.xs[w];
                }
            }
            assert_eq!(changes, 1, "lambda = {}", table.lambda);
            assert!((change_x - table.x0).abs() <= grid.dx);
            assert!(table.q.iter().all(|&q| q >= 0.0));
            assert!(table.r_crit >= 8.0 / 3.0 && table.r_crit < 3.0);
        }
    }

    #[test]
    fn synthetic_negative_potential_fails_positivity() {
        let (p, grid) = verify_grid();
        let _ = p;
        let table = PotentialTable::synthetic(
            0.0,
            vec![-1.0; grid.n],
            vec![0.0; grid.n],
            0.0,
            8.0 / 3.0,
        );
        let report = verify_conditions(&[table], 100.0, 1.0, 32.0, &grid).unwrap();
        assert!(!report.passes);
        let mode = &report.modes[0];
        assert!(!mode.conditions[0].pass, "(Positivity) must fail");
        assert_eq!(report.first_failing().unwrap().1.name, "(Positivity)");
    }

    #[test]
    fn synthetic_parabola_fails_repulsive_one() {
        let (p, grid) = verify_grid();
        let _ = p;
        let q: Vec<f64> = grid.xs.iter().map(|&x| x * x).collect();
        let dq: Vec<f64> = grid.xs.iter().map(|&x| 2.0 * x).collect();
        let table = PotentialTable::synthetic(0.0, q, dq, 0.0, 8.0 / 3.0);
        let report = verify_conditions(&[table], 100.0, 1.0, 32.0, &grid).unwrap();
        assert!(!report.passes);
        let mode = &report.modes[0];
        assert!(mode.conditions[0].pass, "parabola is nonnegative");
        assert!(!mode.conditions[1].pass, "(Repulsive 1) must fail");
        // -y dQ/dy = -2y^2 is worst at the edge of the grid.
        assert!(mode.conditions[1].worst_margin < 0.0);
    }

    #[test]
    fn search_finds_constants_for_l0() {
        let (p, grid) = verify_grid();
        let family = family_up_to(0, &grid, &p);
        let found = search_constants(&family, &grid, &SearchGrid::default()).unwrap();
        assert!(found.is_some(), "single-mode family must be feasible");
    }

    #[test]
    fn search_reports_parabola_infeasible() {
        let (p, grid) = verify_grid();
        let _ = p;
        let q: Vec<f64> = grid.xs.iter().map(|&x| x * x).collect();
        let dq: Vec<f64> = grid.xs.iter().map(|&x| 2.0 * x).collect();
        let family = vec![PotentialTable::synthetic(0.0, q, dq, 0.0, 8.0 / 3.0)];
        let found = search_constants(&family, &grid, &SearchGrid::default()).unwrap();
        assert!(found.is_none());
    }

    #[test]
    fn verifier_monotone_in_c() {
        let (p, grid) = verify_grid();
        let family = family_up_to(5, &grid, &p);
        let base = search_constants(&family, &grid, &SearchGrid::default())
            .unwrap()
            .expect("feasible");
        for scale in [1.0, 2.0, 4.0] {
            let report =
                verify_conditions(&family, base.c * scale, base.b1, base.b2, &grid).unwrap();
            assert!(report.passes, "C = {} should still pass", base.c * scale);
        }
    }

    #[test]
    fn verifier_rejects_bad_inputs() {
        let (p, grid) = verify_grid();
        let family = family_up_to(0, &grid, &p);
        assert!(verify_conditions(&family, -1.0, 1.0, 32.0, &grid).is_err());
        assert!(verify_conditions(&family, 1.0, 5.0, 2.0, &grid).is_err());
        assert!(verify_conditions(&family, 1.0, 1.0, 80.0, &grid).is_err());
        assert!(verify_conditions(&[], 1.0, 1.0, 32.0, &grid).is_err());
        let short = PotentialTable::synthetic(0.0, vec![0.0; 5], vec![0.0; 5], 0.0, 2.7);
        assert!(matches!(
            verify_conditions(&[short], 1.0, 1.0, 32.0, &grid),
            Err(PotentialError::GridMismatch { .. })
        ));
    }
}
