//! Runtime oracle suite.
//!
//! Each oracle checks an implementation path against an independent route:
//! a round trip, a component-wise derivative of the coordinate change, or
//! finite differences. The spherical vector field under test is passed in,
//! so a deliberately broken field can be checked to be caught.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::{compensating_omega, eigenvalues, jacobian_nu, pseudo_inverse, COMPENSATION_SIN_EPS};
use crate::dynamics::{
    interaction_matrix, plucker_dynamics, reduced_dynamics, spherical_dynamics, CameraTwist,
    StateDerivative,
};
use crate::geometry::{
    basis, line_from_point_direction, moment_to_spherical, reduce, spherical_to_moment, unreduce,
    wrap_angle, PluckerLine, ReducedLineState, SphericalMoment,
};
use crate::{Mat3, Vec3};

pub type SphericalField = fn(&ReducedLineState, &CameraTwist) -> StateDerivative;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub name: &'static str,
    /// Largest normalized discrepancy seen.
    pub worst: f64,
    pub tolerance: f64,
    pub samples: usize,
}

impl OracleResult {
    pub fn passed(&self) -> bool {
        self.worst.is_finite() && self.worst <= self.tolerance
    }
}

struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn vec3(&mut self, r: f64) -> Vec3 {
        Vec3::new(
            self.rng.random_range(-r..r),
            self.rng.random_range(-r..r),
            self.rng.random_range(-r..r),
        )
    }

    fn angles(&mut self) -> SphericalMoment {
        SphericalMoment::new(self.rng.random_range(-PI..PI), self.rng.random_range(-1.4..1.4))
            .unwrap()
    }

    fn state(&mut self) -> ReducedLineState {
        let s = self.angles();
        ReducedLineState::from_parts(&s, self.rng.random_range(-2.0..2.0), self.rng.random_range(-2.0..2.0))
    }

    fn twist(&mut self) -> CameraTwist {
        CameraTwist::new(self.vec3(1.0), self.vec3(1.0))
    }

    fn line(&mut self) -> PluckerLine {
        loop {
            let p = self.vec3(3.0);
            let d = self.vec3(1.0);
            if let Ok(line) = line_from_point_direction(p, d) {
                if line.depth() > 0.2 && line.moment().z.abs() < 0.98 {
                    return line;
                }
            }
        }
    }
}

fn rel(err: f64, scale: f64) -> f64 {
    err / (1.0 + scale)
}

fn oracle(name: &'static str, tolerance: f64, samples: usize, mut f: impl FnMut() -> f64) -> OracleResult {
    let worst = (0..samples).map(|_| f()).fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
    OracleResult {
        name,
        worst,
        tolerance,
        samples,
    }
}

/// `(θ̇, φ̇, η̇₁, η̇₂)` obtained by pushing `(ḣ, χ̇)` through the derivative of
/// the coordinate change, differentiating each component of `h_S`, `h_P` and
/// `h_S × h_P` directly.
pub fn chain_rule_rates(x: &ReducedLineState, u: &CameraTwist) -> [f64; 4] {
    let (st, ct) = x.theta.sin_cos();
    let (sp, cp) = x.phi.sin_cos();
    let hs = Vec3::new(ct * cp, st * cp, sp);
    let hp = Vec3::new(ct * sp, st * sp, -cp);
    let b = Vec3::new(-st, ct, 0.0);
    let chi = hp * x.eta1 + b * x.eta2;
    let (h_dot, chi_dot) = reduced_dynamics(&hs, &chi, u).expect("chi is orthogonal by construction");

    let theta_dot = (hs.x * h_dot.y - hs.y * h_dot.x) / (hs.x * hs.x + hs.y * hs.y);
    let phi_dot = h_dot.z / cp;

    let hp_dot = Vec3::new(
        -st * sp * theta_dot + ct * cp * phi_dot,
        ct * sp * theta_dot + st * cp * phi_dot,
        sp * phi_dot,
    );
    let b_dot = Vec3::new(-ct * theta_dot, -st * theta_dot, 0.0);
    let eta1_dot = hp_dot.dot(&chi) + hp.dot(&chi_dot);
    let eta2_dot = b_dot.dot(&chi) + b.dot(&chi_dot);
    [theta_dot, phi_dot, eta1_dot, eta2_dot]
}

/// Runs every oracle with `samples` random draws each.
pub fn run_oracles(field: SphericalField, samples: usize, seed: u64) -> Vec<OracleResult> {
    let mut g = Sampler::new(seed);
    let mut out = Vec::new();

    out.push(oracle("spherical_round_trip", 1e-12, samples, || {
        let s = g.angles();
        let back = moment_to_spherical(&spherical_to_moment(&s)).unwrap();
        wrap_angle(back.theta() - s.theta()).abs().max((back.phi() - s.phi()).abs())
    }));

    out.push(oracle("reduce_unreduce_round_trip", 1e-10, samples, || {
        let line = g.line();
        match reduce(&line).and_then(|x| unreduce(&x)) {
            Ok(back) => rel((line.to_vector() - back.to_vector()).norm(), line.depth()),
            Err(_) => f64::INFINITY,
        }
    }));

    out.push(oracle("unreduce_orthogonality", 1e-12, samples, || {
        let x = g.state();
        match unreduce(&x) {
            Ok(l) => l.moment().dot(&l.direction()).abs(),
            Err(_) => 0.0,
        }
    }));

    out.push(oracle("basis_is_rotation", 1e-12, samples, || {
        let a = *basis(&g.angles()).matrix();
        (a.transpose() * a - Mat3::identity()).norm().max((a.determinant() - 1.0).abs())
    }));

    out.push(oracle("point_shift_invariance", 1e-11, samples, || {
        let (p, d) = (g.vec3(3.0), g.vec3(1.0));
        let t = g.rng.random_range(-5.0..5.0);
        match (line_from_point_direction(p, d), line_from_point_direction(p + d * t, d)) {
            (Ok(a), Ok(b)) if a.depth() > 1e-3 => rel((a.to_vector() - b.to_vector()).norm(), a.depth()),
            _ => 0.0,
        }
    }));

    out.push(oracle("quotient_rule", 1e-10, samples, || {
        let line = g.line();
        let u = g.twist();
        let (l, d) = (line.depth(), line.direction());
        let chi = d / l;
        let (h_dot, chi_dot) = reduced_dynamics(&line.moment(), &chi, &u).unwrap();
        let rate = plucker_dynamics(&line, &u);
        let quotient = (rate.d_dot * l - d * rate.l_dot) / (l * l);
        (h_dot - rate.h_dot).norm().max(rel((chi_dot - quotient).norm(), chi_dot.norm()))
    }));

    out.push(oracle("chain_rule_equivalence", 1e-9, samples, || {
        let x = g.state();
        let u = g.twist();
        let expect = chain_rule_rates(&x, &u);
        let got = field(&x, &u).to_vector();
        (0..4)
            .map(|i| rel((got[i] - expect[i]).abs(), expect[i].abs()))
            .fold(0.0, f64::max)
    }));

    out.push(oracle("jacobian_finite_difference", 1e-6, samples, || {
        let s = g.angles();
        let nu = g.vec3(2.0);
        if nu.dot(&s.moment()).abs() < 1e-3 {
            return 0.0;
        }
        let j = jacobian_nu(&s, &nu);
        let step = 1e-6;
        let mut fd = nalgebra::Matrix2x3::zeros();
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = step;
            let (a1, a2) = eigenvalues(&interaction_matrix(&s, &(nu + e)));
            let (b1, b2) = eigenvalues(&interaction_matrix(&s, &(nu - e)));
            fd[(0, k)] = (a1 - b1) / (2.0 * step);
            fd[(1, k)] = (a2 - b2) / (2.0 * step);
        }
        (j - fd).norm() / j.norm()
    }));

    out.push(oracle("jacobian_rank", 1e-10, samples, || {
        let j = jacobian_nu(&g.angles(), &g.vec3(2.0));
        let sv = j.svd(false, false).singular_values;
        if sv.max() == 0.0 { 0.0 } else { sv.min() / sv.max() }
    }));

    out.push(oracle("omega_compensation", 1e-12, samples, || {
        let mut x = g.state();
        if g.rng.random_bool(0.5) {
            // Exercise the minimum-norm branch.
            x.phi *= 0.5 * COMPENSATION_SIN_EPS;
        }
        let nu = g.vec3(1.0);
        let w = compensating_omega(&x, &nu).unwrap();
        let r = field(&x, &CameraTwist::new(nu, w));
        r.d_theta.abs().max(r.d_phi.abs())
    }));

    out.push(oracle("nullspace_preserves_eigenvalues", 1e-12, samples, || {
        let s = g.angles();
        let nu = g.vec3(2.0);
        let j = jacobian_nu(&s, &nu);
        let p = pseudo_inverse(&j);
        let null = (Mat3::identity() - p * j) * nu;
        let consistency = (p * j * p - p).norm().max((j * p * j - j).norm());
        rel((j * null).norm(), j.norm()).max(rel(consistency, 1e2 * (j.norm() + p.norm())))
    }));

    out
}

/// The suite against the library's own spherical field.
pub fn run_default(samples: usize) -> Vec<OracleResult> {
    run_oracles(spherical_dynamics, samples, 0x5eed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flipped_eta1(x: &ReducedLineState, u: &CameraTwist) -> StateDerivative {
        let mut r = spherical_dynamics(x, u);
        r.d_eta1 = -r.d_eta1;
        r
    }

    #[test]
    fn pristine_suite_passes() {
        let results = run_default(1000);
        assert!(results.len() >= 6);
        for r in &results {
            assert!(r.passed(), "{} worst {:e} > {:e}", r.name, r.worst, r.tolerance);
        }
    }

    #[test]
    fn sign_flip_is_caught_by_chain_rule() {
        let results = run_oracles(flipped_eta1, 200, 1);
        let failed: Vec<_> = results.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
        assert_eq!(failed, vec!["chain_rule_equivalence"]);
    }
}
