//! Seeded generators for test systems.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::system::LinearSystem;

/// Default perturbation size for `well_conditioned`; keeps `κ(A)` near 3.
pub const DEFAULT_SPREAD: f64 = 0.25;

pub fn gaussian_vector(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn unit_vector(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    loop {
        let g = gaussian_vector(rng, n);
        let norm = g.norm();
        if norm > 1e-8 {
            return g / norm;
        }
    }
}

/// `I + ρ G / √n` with Gaussian `G`; singular values lie roughly in `[1 - 2ρ, 1 + 2ρ]`.
pub fn well_conditioned(rng: &mut impl Rng, n: usize, spread: f64) -> DMatrix<f64> {
    let scale = spread / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |i, j| {
        let g: f64 = rng.sample(StandardNormal);
        if i == j {
            1.0 + scale * g
        } else {
            scale * g
        }
    })
}

/// A consistent row-normalized system and its solution.
pub fn consistent_rows(rng: &mut impl Rng, n: usize) -> Result<(LinearSystem, DVector<f64>)> {
    let a = well_conditioned(rng, n, DEFAULT_SPREAD);
    let x = gaussian_vector(rng, n);
    let b = &a * &x;
    let system = LinearSystem::new(a, b)?.normalize_rows()?;
    Ok((system, x))
}

/// A column-normalized system with `b = A x0 + r0`, `‖x0‖ = ‖r0‖ = 1`, so
/// the column algorithm starts at `δ = 1`. Returns the system, `x0` and `x*`.
pub fn consistent_columns(rng: &mut impl Rng, n: usize) -> Result<(LinearSystem, DVector<f64>, DVector<f64>)> {
    let raw = well_conditioned(rng, n, DEFAULT_SPREAD);
    let unit = LinearSystem::new(raw, DVector::zeros(n))?.normalize_columns()?;
    let a = unit.matrix().clone();
    let x0 = unit_vector(rng, n);
    let r0 = unit_vector(rng, n);
    let b = &a * &x0 + &r0;
    let system = LinearSystem::new(a, b)?.normalize_columns()?;
    let x_star = system
        .matrix()
        .clone()
        .lu()
        .solve(system.rhs())
        .unwrap_or_else(|| DVector::zeros(n));
    Ok((system, x0, x_star))
}
