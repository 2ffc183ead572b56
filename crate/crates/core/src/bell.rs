//! The three-observer CHSH scenario.
//!
//! Alice measures her qubit projectively along one of two directions. The
//! partner qubit is first measured weakly by Bob1 (Kraus pair with strength
//! `θ`) and then projectively by Bob2, who does not know Bob1's input or
//! outcome. Bob2's correlations are therefore averaged uniformly over Bob1's
//! two inputs.

use std::f64::consts::{FRAC_PI_8, SQRT_2};

use rayon::prelude::*;

use crate::qcore::{projector, BlochDirection, ComplexMatrix, DensityMatrix, Outcome};
use crate::weakmeas::{kraus_pair, WeakMeasurement};
use crate::{Error, Result, STRUCTURAL_TOL};

/// Slack for the no-signaling guard inside the correlation extractors.
pub const NO_SIGNALING_TOL: f64 = 1e-9;

/// Measurement directions for each observer and each binary input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioSettings {
    pub alice: [BlochDirection; 2],
    pub bob1: [BlochDirection; 2],
    pub bob2: [BlochDirection; 2],
}

/// Bob-side directions indexed by input: `y = 0 → −(Z+X)/√2`, `y = 1 → (−Z+X)/√2`.
///
/// With Alice at `{Z, X}` this order gives `S = 2√2` on the singlet for
/// `S = C₀₀ + C₀₁ + C₁₀ − C₁₁`; the swapped order gives `S = 0`.
pub const BOB_DIRECTIONS: [BlochDirection; 2] = [
    BlochDirection::DIAG_MINUS_MINUS,
    BlochDirection::DIAG_MINUS_PLUS,
];

/// Alice along `{Z, X}`; Bob1 and Bob2 share [`BOB_DIRECTIONS`].
pub fn default_settings() -> ScenarioSettings {
    ScenarioSettings {
        alice: [BlochDirection::Z, BlochDirection::X],
        bob1: BOB_DIRECTIONS,
        bob2: BOB_DIRECTIONS,
    }
}

/// Raw cell array of a [`JointDistribution`].
pub type Cells = [[[[[[f64; 2]; 2]; 2]; 2]; 2]; 2];

/// `P(a b₁ b₂ | x y₁ y₂)`, indexed `[x][y1][y2][a][b1][b2]` with outcome
/// index `+1 → 0`, `−1 → 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    cells: Cells,
}

/// Maximum deviations of the three marginal-independence conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoSignaling {
    /// `Σ_{b₂} P` against `y₂`.
    pub bob1_vs_y2: f64,
    /// `Σ_{b₁,b₂} P` against `(y₁, y₂)`.
    pub alice_vs_bobs: f64,
    /// `Σ_a P` against `x`.
    pub bobs_vs_x: f64,
}

impl NoSignaling {
    pub fn max(&self) -> f64 {
        self.bob1_vs_y2.max(self.alice_vs_bobs).max(self.bobs_vs_x)
    }
}

fn outcome_at(i: usize) -> Outcome {
    Outcome::BOTH[i]
}

fn sign(i: usize) -> f64 {
    outcome_at(i).sign()
}

impl JointDistribution {
    /// Validates that every cell is a probability and each setting sums to one.
    pub fn from_cells(cells: Cells) -> Result<Self> {
        let jd = Self { cells };
        for (x, y1, y2) in settings_iter() {
            let mut total = 0.0;
            for (a, b1, b2) in outcomes_iter() {
                let p = jd.get(x, y1, y2, a, b1, b2);
                if !(-STRUCTURAL_TOL..=1.0 + STRUCTURAL_TOL).contains(&p) {
                    return Err(Error::InvalidInstrument(p));
                }
                total += p;
            }
            if (total - 1.0).abs() > STRUCTURAL_TOL {
                return Err(Error::Dimension(format!(
                    "setting ({x},{y1},{y2}) sums to {total}"
                )));
            }
        }
        Ok(jd)
    }

    pub fn get(&self, x: usize, y1: usize, y2: usize, a: usize, b1: usize, b2: usize) -> f64 {
        self.cells[x][y1][y2][a][b1][b2]
    }

    /// The eight outcome probabilities of one setting, ordered `(a, b1, b2)`
    /// lexicographically.
    pub fn setting_cells(&self, x: usize, y1: usize, y2: usize) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (k, (a, b1, b2)) in outcomes_iter().enumerate() {
            out[k] = self.get(x, y1, y2, a, b1, b2);
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (x, y1, y2) in settings_iter() {
            for (a, b1, b2) in outcomes_iter() {
                worst = worst.max((self.get(x, y1, y2, a, b1, b2) - other.get(x, y1, y2, a, b1, b2)).abs());
            }
        }
        worst
    }

    pub fn no_signaling(&self) -> NoSignaling {
        let mut bob1_vs_y2: f64 = 0.0;
        let mut alice_vs_bobs: f64 = 0.0;
        let mut bobs_vs_x: f64 = 0.0;

        for x in 0..2 {
            for y1 in 0..2 {
                for a in 0..2 {
                    for b1 in 0..2 {
                        let m = |y2: usize| (0..2).map(|b2| self.get(x, y1, y2, a, b1, b2)).sum::<f64>();
                        bob1_vs_y2 = bob1_vs_y2.max((m(0) - m(1)).abs());
                    }
                }
            }
        }

        for x in 0..2 {
            for a in 0..2 {
                let alice = |y1: usize, y2: usize| {
                    let mut s = 0.0;
                    for b1 in 0..2 {
                        for b2 in 0..2 {
                            s += self.get(x, y1, y2, a, b1, b2);
                        }
                    }
                    s
                };
                let reference = alice(0, 0);
                for (y1, y2) in [(0, 1), (1, 0), (1, 1)] {
                    alice_vs_bobs = alice_vs_bobs.max((alice(y1, y2) - reference).abs());
                }
            }
        }

        for y1 in 0..2 {
            for y2 in 0..2 {
                for b1 in 0..2 {
                    for b2 in 0..2 {
                        let m = |x: usize| (0..2).map(|a| self.get(x, y1, y2, a, b1, b2)).sum::<f64>();
                        bobs_vs_x = bobs_vs_x.max((m(0) - m(1)).abs());
                    }
                }
            }
        }

        NoSignaling {
            bob1_vs_y2,
            alice_vs_bobs,
            bobs_vs_x,
        }
    }

    fn guard_no_signaling(&self) -> Result<()> {
        let ns = self.no_signaling();
        for (what, deviation) in [
            ("Bob1 marginal depends on Bob2's input", ns.bob1_vs_y2),
            ("Alice marginal depends on the Bobs' inputs", ns.alice_vs_bobs),
            ("Bob marginal depends on Alice's input", ns.bobs_vs_x),
        ] {
            if deviation > NO_SIGNALING_TOL {
                return Err(Error::Signaling { what, deviation });
            }
        }
        Ok(())
    }
}

fn settings_iter() -> impl Iterator<Item = (usize, usize, usize)> {
    (0..8).map(|k| (k >> 2, (k >> 1) & 1, k & 1))
}

fn outcomes_iter() -> impl Iterator<Item = (usize, usize, usize)> {
    settings_iter()
}

/// Exact `P(a b₁ b₂ | x y₁ y₂)` for a two-qubit state (Alice = qubit 0).
pub fn joint_distribution(state: &DensityMatrix, settings: &ScenarioSettings, theta: f64) -> Result<JointDistribution> {
    if state.dim() != 4 {
        return Err(Error::Dimension(format!(
            "scenario needs a two-qubit state, got dimension {}",
            state.dim()
        )));
    }
    if (state.trace() - 1.0).abs() > STRUCTURAL_TOL {
        return Err(Error::Dimension(format!("state trace {} is not one", state.trace())));
    }

    let bob1: Vec<_> = settings
        .bob1
        .iter()
        .map(|axis| WeakMeasurement::new(theta, *axis).map(|wm| kraus_pair(&wm)))
        .collect::<Result<_>>()?;
    let proj = |n: &BlochDirection, i: usize| projector(n, outcome_at(i));
    let rho = state.matrix();

    let mut cells = [[[[[[0.0; 2]; 2]; 2]; 2]; 2]; 2];
    for (x, y1, y2) in settings_iter() {
        for (a, b1, b2) in outcomes_iter() {
            let bob: ComplexMatrix = &proj(&settings.bob2[y2], b2) * bob1[y1].get(outcome_at(b1));
            let k = proj(&settings.alice[x], a).kron(&bob)?;
            let p = (&(&k * rho) * &k.adjoint()).trace().re;
            cells[x][y1][y2][a][b1][b2] = p.max(0.0);
        }
    }
    JointDistribution::from_cells(cells)
}

/// `C[x][y]` for one observer pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationTable {
    pub c: [[f64; 2]; 2],
}

impl CorrelationTable {
    pub fn new(c: [[f64; 2]; 2]) -> Result<Self> {
        if c.iter().flatten().any(|v| !v.is_finite() || v.abs() > 1.0 + STRUCTURAL_TOL) {
            return Err(Error::Dimension(format!("correlation table out of range: {c:?}")));
        }
        Ok(Self { c })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.c[x][y]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.c
            .iter()
            .flatten()
            .zip(other.c.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Alice–Bob1 correlations, marginalized over `b₂` and averaged over `y₂`.
pub fn correlation_ab1(jd: &JointDistribution) -> Result<CorrelationTable> {
    jd.guard_no_signaling()?;
    let mut c = [[0.0; 2]; 2];
    for (x, y1, y2) in settings_iter() {
        for (a, b1, b2) in outcomes_iter() {
            c[x][y1] += 0.5 * sign(a) * sign(b1) * jd.get(x, y1, y2, a, b1, b2);
        }
    }
    CorrelationTable::new(c)
}

/// Alice–Bob2 correlations, marginalized over `b₁` and averaged uniformly over `y₁`.
pub fn correlation_ab2(jd: &JointDistribution) -> Result<CorrelationTable> {
    jd.guard_no_signaling()?;
    let mut c = [[0.0; 2]; 2];
    for (x, y1, y2) in settings_iter() {
        for (a, b1, b2) in outcomes_iter() {
            c[x][y2] += 0.5 * sign(a) * sign(b2) * jd.get(x, y1, y2, a, b1, b2);
        }
    }
    CorrelationTable::new(c)
}

/// `S = |C₀₀ + C₀₁ + C₁₀ − C₁₁|`.
pub fn chsh(table: &CorrelationTable) -> f64 {
    let c = &table.c;
    (c[0][0] + c[0][1] + c[1][0] - c[1][1]).abs()
}

/// CHSH values of the Alice–Bob1 and Alice–Bob2 pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SValues {
    pub s_ab1: f64,
    pub s_ab2: f64,
}

impl SValues {
    /// Whether each pair exceeds the local bound 2.
    pub fn violations(&self) -> (bool, bool) {
        (self.s_ab1 > 2.0, self.s_ab2 > 2.0)
    }

    pub fn is_double_violation(&self) -> bool {
        let (a, b) = self.violations();
        a && b
    }
}

/// Closed-form `S_AB1 = 2√2 |G|`, `S_AB2 = √2 (1 + F)` with `F = sin 2θ`, `G = cos 2θ`.
/// `G` goes negative past 45°; like [`chsh`], the magnitude is reported.
pub fn predicted_svalues(theta: f64) -> Result<SValues> {
    let wm = WeakMeasurement::new(theta, BlochDirection::Z)?;
    Ok(SValues {
        s_ab1: 2.0 * SQRT_2 * wm.precision().abs(),
        s_ab2: SQRT_2 * (1.0 + wm.quality_factor()),
    })
}

/// S values computed from the exact joint distribution.
pub fn simulated_svalues(state: &DensityMatrix, settings: &ScenarioSettings, theta: f64) -> Result<SValues> {
    let jd = joint_distribution(state, settings, theta)?;
    Ok(SValues {
        s_ab1: chsh(&correlation_ab1(&jd)?),
        s_ab2: chsh(&correlation_ab2(&jd)?),
    })
}

/// Open interval of `θ` (radians) in which both predicted S values exceed 2.
///
/// Lower edge solves `√2 (1 + sin 2θ) = 2`, upper edge solves `2√2 cos 2θ = 2`.
pub fn double_violation_window() -> (f64, f64) {
    ((SQRT_2 - 1.0).asin() / 2.0, FRAC_PI_8)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub theta: f64,
    pub analytic: SValues,
    pub simulated: SValues,
}

/// Analytic and simulated S values for each `θ`, in input order.
pub fn sweep(thetas: &[f64], settings: &ScenarioSettings, state: &DensityMatrix) -> Result<Vec<SweepPoint>> {
    thetas
        .par_iter()
        .map(|&theta| {
            Ok(SweepPoint {
                theta,
                analytic: predicted_svalues(theta)?,
                simulated: simulated_svalues(state, settings, theta)?,
            })
        })
        .collect()
}
