//! Test-only helpers: random states/directions and an independent
//! system ⊗ pointer simulation of the three-observer scenario.
#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use weakbell::bell::{Cells, ScenarioSettings};
use weakbell::qcore::{eigenket, BlochDirection, ComplexMatrix, DensityMatrix, Ket, Outcome};

/// Uniform direction on the sphere.
pub fn random_direction<R: Rng>(rng: &mut R) -> BlochDirection {
    loop {
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        if let Ok(d) = BlochDirection::normalized(v[0], v[1], v[2]) {
            return d;
        }
    }
}

pub fn random_settings<R: Rng>(rng: &mut R) -> ScenarioSettings {
    ScenarioSettings {
        alice: [random_direction(rng), random_direction(rng)],
        bob1: [random_direction(rng), random_direction(rng)],
        bob2: [random_direction(rng), random_direction(rng)],
    }
}

/// Ginibre-distributed mixed state `GG†/Tr(GG†)`.
pub fn random_state<R: Rng>(rng: &mut R, dim: usize) -> DensityMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(ComplexMatrix::from_dmatrix(m / tr).unwrap()).unwrap()
}

/// Haar-random pure state.
pub fn random_ket<R: Rng>(rng: &mut R, dim: usize) -> Ket {
    let amps = (0..dim).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    Ket::new(amps).unwrap().normalize().unwrap()
}

fn outer(k: &Ket) -> ComplexMatrix {
    ComplexMatrix::outer(k, k)
}

/// Unitary on (B ⊗ pointer) taking `|m⟩|0⟩ → |m⟩|φ_H⟩` and `|m⊥⟩|0⟩ → |m⊥⟩|φ_V⟩`
/// with `φ_H = cos θ|0⟩ + sin θ|1⟩`, `φ_V = sin θ|0⟩ + cos θ|1⟩`.
pub fn pointer_coupling(axis: &BlochDirection, theta: f64) -> ComplexMatrix {
    let (s, c) = theta.sin_cos();
    let r_h = ComplexMatrix::from_real(2, 2, &[c, -s, s, c]).unwrap();
    let r_v = ComplexMatrix::from_real(2, 2, &[s, c, c, -s]).unwrap();
    let up = outer(&eigenket(axis, Outcome::Plus));
    let down = outer(&eigenket(axis, Outcome::Minus));
    &up.kron(&r_h).unwrap() + &down.kron(&r_v).unwrap()
}

/// `P(a b₁ b₂|x y₁ y₂)` from the explicit A ⊗ B ⊗ pointer evolution followed by
/// projective pointer readout (path 0 → `+1`, path 1 → `−1`).
pub fn pointer_oracle(state: &DensityMatrix, settings: &ScenarioSettings, theta: f64) -> Cells {
    let pointer0 = DensityMatrix::from_ket(&Ket::basis(2, 0)).unwrap();
    let joint = state.tensor(&pointer0).unwrap();
    let id2 = ComplexMatrix::identity(2);
    let mut out = [[[[[[0.0; 2]; 2]; 2]; 2]; 2]; 2];
    for y1 in 0..2 {
        let u = id2.kron(&pointer_coupling(&settings.bob1[y1], theta)).unwrap();
        let evolved = joint.evolve(&u).unwrap();
        for x in 0..2 {
            for y2 in 0..2 {
                for (a, oa) in Outcome::BOTH.into_iter().enumerate() {
                    for (b2, ob2) in Outcome::BOTH.into_iter().enumerate() {
                        for b1 in 0..2 {
                            let proj = outer(&eigenket(&settings.alice[x], oa))
                                .kron(&outer(&eigenket(&settings.bob2[y2], ob2)))
                                .unwrap()
                                .kron(&outer(&Ket::basis(2, b1)))
                                .unwrap();
                            out[x][y1][y2][a][b1][b2] = (&proj * evolved.matrix()).trace().re;
                        }
                    }
                }
            }
        }
    }
    out
}
