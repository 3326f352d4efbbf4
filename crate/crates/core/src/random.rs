//! Seeded generators for random unitaries, states, and disk samples.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, CMatrix};

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unitary: Gram-Schmidt on a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    while columns.len() < n {
        let mut v: Vec<Complex64> = (0..n).map(|_| gaussian_complex(rng)).collect();
        // Two passes of modified Gram-Schmidt keep orthogonality at machine precision.
        for _ in 0..2 {
            for u in &columns {
                let p = linalg::inner(u, &v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= p * ui;
                }
            }
        }
        let nv = linalg::norm(&v);
        if nv < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= nv);
        columns.push(v);
    }
    CMatrix::from_columns(&columns).expect("square by construction")
}

/// Uniformly random unit vector in `C^n`.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let mut v: Vec<Complex64> = (0..n).map(|_| gaussian_complex(rng)).collect();
        let nv = linalg::norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|z| *z /= nv);
            return v;
        }
    }
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| gaussian_complex(rng));
    let gh = g.adjoint();
    CMatrix::from_fn(n, n, |r, c| (g[(r, c)] + gh[(r, c)]) * 0.5)
}

/// Point drawn uniformly (by area) from the closed unit disk.
pub fn unit_disk<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let r = rng.random::<f64>().sqrt();
    let theta = rng.random::<f64>() * core::f64::consts::TAU;
    Complex64::from_polar(r, theta)
}
