//! Bob1's weak measurement as a pointer-coupled instrument.
//!
//! The measured qubit is coupled to a two-state pointer: `|↑⟩ ↦ |φ_↑⟩` and
//! `|↓⟩ ↦ |φ_↓⟩`. The pointer is then read out in an orthonormal basis
//! `{|φ₊₁⟩, |φ₋₁⟩}`. Two numbers summarize the pointer:
//!
//! - the quality factor `F = ⟨φ_↓|φ_↑⟩`, the coherence surviving the coupling,
//! - the precision `G = 1 − |⟨φ₋₁|φ_↑⟩|² − |⟨φ₊₁|φ_↓⟩|²`, the readout margin.
//!
//! They obey `F² + G² ≤ 1`. The one-parameter family used here (path pointer
//! with `φ_H = cos θ|0⟩ + sin θ|1⟩`, `φ_V = sin θ|0⟩ + cos θ|1⟩`) saturates it
//! with `F = sin 2θ` and `G = cos 2θ`.
//!
//! The Kraus operators follow directly from the overlaps:
//! `M±₁ = ⟨φ±₁|φ_↑⟩ π₊ + ⟨φ±₁|φ_↓⟩ π₋`, which for the path pointer has only
//! nonnegative coefficients. A variant with a relative minus sign between the
//! two projectors differs by a unitary applied after the measurement, and it
//! would not leave Alice–Bob2 correlations at `(1 + F)/2` of their original
//! value.

use std::f64::consts::FRAC_PI_2;

use crate::qcore::{apply_kraus, c, expectation, lift, observable_from_direction, projector, BlochDirection, ComplexMatrix, DensityMatrix, Outcome, C64};
use crate::{Error, Result, EQUIVALENCE_TOL, STRUCTURAL_TOL};

/// Overlaps of the two pointer states with the two reading states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointerPair {
    /// `⟨φ₊₁|φ_↑⟩`
    pub up_plus: C64,
    /// `⟨φ₋₁|φ_↑⟩`
    pub up_minus: C64,
    /// `⟨φ₊₁|φ_↓⟩`
    pub down_plus: C64,
    /// `⟨φ₋₁|φ_↓⟩`
    pub down_minus: C64,
}

impl PointerPair {
    pub fn new(up_plus: C64, up_minus: C64, down_plus: C64, down_minus: C64) -> Result<Self> {
        let up = up_plus.norm_sqr() + up_minus.norm_sqr();
        let down = down_plus.norm_sqr() + down_minus.norm_sqr();
        if (up - 1.0).abs() > STRUCTURAL_TOL || (down - 1.0).abs() > STRUCTURAL_TOL {
            return Err(Error::InvalidPointer(format!(
                "pointer states not normalized in the reading basis (|φ_↑|² = {up}, |φ_↓|² = {down})"
            )));
        }
        Ok(Self {
            up_plus,
            up_minus,
            down_plus,
            down_minus,
        })
    }

    pub fn from_real(up_plus: f64, up_minus: f64, down_plus: f64, down_minus: f64) -> Result<Self> {
        Self::new(c(up_plus), c(up_minus), c(down_plus), c(down_minus))
    }

    /// Amplitude `⟨φ_outcome|φ_↑⟩`.
    pub fn up(&self, outcome: Outcome) -> C64 {
        match outcome {
            Outcome::Plus => self.up_plus,
            Outcome::Minus => self.up_minus,
        }
    }

    /// Amplitude `⟨φ_outcome|φ_↓⟩`.
    pub fn down(&self, outcome: Outcome) -> C64 {
        match outcome {
            Outcome::Plus => self.down_plus,
            Outcome::Minus => self.down_minus,
        }
    }
}

/// `θ ∈ [0, π/2]`, with rounding slack at the ends.
fn check_theta(theta: f64) -> Result<f64> {
    let slack = 1e-12;
    if !theta.is_finite() || theta < -slack || theta > FRAC_PI_2 + slack {
        return Err(Error::AngleOutOfRange {
            value: theta,
            min: 0.0,
            max: FRAC_PI_2,
        });
    }
    Ok(theta.clamp(0.0, FRAC_PI_2))
}

/// Path-pointer overlaps for HWP2/HWP3 set at `θ/2` and `π/4 − θ/2`.
/// Reading states are the two paths: `|φ₊₁⟩ = |0⟩`, `|φ₋₁⟩ = |1⟩`.
pub fn pointer_states(theta: f64) -> Result<PointerPair> {
    let theta = check_theta(theta)?;
    let (s, co) = theta.sin_cos();
    Ok(PointerPair {
        up_plus: c(co),
        up_minus: c(s),
        down_plus: c(s),
        down_minus: c(co),
    })
}

/// `F = Re⟨φ_↓|φ_↑⟩`.
pub fn quality_factor(pp: &PointerPair) -> f64 {
    (pp.down_plus.conj() * pp.up_plus + pp.down_minus.conj() * pp.up_minus).re
}

/// `G = 1 − |⟨φ₋₁|φ_↑⟩|² − |⟨φ₊₁|φ_↓⟩|²`.
pub fn precision(pp: &PointerPair) -> f64 {
    1.0 - pp.up_minus.norm_sqr() - pp.down_plus.norm_sqr()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Optimality {
    pub f2_plus_g2: f64,
    pub is_optimal: bool,
}

/// Evaluates the trade-off `F² + G² ≤ 1`; equality marks an optimal pointer.
pub fn optimality_check(pp: &PointerPair) -> Result<Optimality> {
    let f = quality_factor(pp);
    let g = precision(pp);
    let total = f * f + g * g;
    if total > 1.0 + STRUCTURAL_TOL {
        return Err(Error::InvalidPointer(format!("F² + G² = {total} exceeds one")));
    }
    Ok(Optimality {
        f2_plus_g2: total,
        is_optimal: (total - 1.0).abs() <= STRUCTURAL_TOL,
    })
}

/// Optimal weak measurement of `σ·axis` with strength angle `θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeakMeasurement {
    theta: f64,
    axis: BlochDirection,
}

impl WeakMeasurement {
    pub fn new(theta: f64, axis: BlochDirection) -> Result<Self> {
        Ok(Self {
            theta: check_theta(theta)?,
            axis,
        })
    }

    pub fn from_degrees(theta_deg: f64, axis: BlochDirection) -> Result<Self> {
        Self::new(theta_deg.to_radians(), axis)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn axis(&self) -> BlochDirection {
        self.axis
    }

    /// `F = sin 2θ`.
    pub fn quality_factor(&self) -> f64 {
        (2.0 * self.theta).sin()
    }

    /// `G = cos 2θ`.
    pub fn precision(&self) -> f64 {
        (2.0 * self.theta).cos()
    }

    pub fn pointer_pair(&self) -> PointerPair {
        pointer_states(self.theta).expect("theta validated at construction")
    }

    pub fn kraus_pair(&self) -> KrausPair {
        kraus_pair(self)
    }
}

/// The two operators `{M₊₁, M₋₁}` of a binary instrument.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausPair {
    plus: ComplexMatrix,
    minus: ComplexMatrix,
}

impl KrausPair {
    /// Checks completeness `M₊₁†M₊₁ + M₋₁†M₋₁ = I`.
    pub fn new(plus: ComplexMatrix, minus: ComplexMatrix) -> Result<Self> {
        if plus.nrows() != plus.ncols() || plus.nrows() != minus.nrows() || minus.nrows() != minus.ncols() {
            return Err(Error::Dimension("Kraus operators must be square and equal-sized".into()));
        }
        let pair = Self { plus, minus };
        let err = pair.completeness_error();
        if err > STRUCTURAL_TOL {
            return Err(Error::InvalidInstrument(1.0 + err));
        }
        Ok(pair)
    }

    /// Instrument of a general pointer measuring `σ·axis`.
    pub fn from_pointer(pp: &PointerPair, axis: &BlochDirection) -> Self {
        let p_up = projector(axis, Outcome::Plus);
        let p_down = projector(axis, Outcome::Minus);
        let op = |o: Outcome| &p_up.scale(pp.up(o)) + &p_down.scale(pp.down(o));
        Self {
            plus: op(Outcome::Plus),
            minus: op(Outcome::Minus),
        }
    }

    pub fn get(&self, outcome: Outcome) -> &ComplexMatrix {
        match outcome {
            Outcome::Plus => &self.plus,
            Outcome::Minus => &self.minus,
        }
    }

    pub fn plus(&self) -> &ComplexMatrix {
        &self.plus
    }

    pub fn minus(&self) -> &ComplexMatrix {
        &self.minus
    }

    /// `max |M₊₁†M₊₁ + M₋₁†M₋₁ − I|`.
    pub fn completeness_error(&self) -> f64 {
        let sum = &(&self.plus.adjoint() * &self.plus) + &(&self.minus.adjoint() * &self.minus);
        sum.max_abs_diff(&ComplexMatrix::identity(self.plus.nrows()))
    }

    /// Lifts both operators onto qubit `target` of an `n_qubits` register.
    pub fn lifted(&self, target: usize, n_qubits: usize) -> Result<Self> {
        Ok(Self {
            plus: lift(&self.plus, target, n_qubits)?,
            minus: lift(&self.minus, target, n_qubits)?,
        })
    }
}

pub fn kraus_pair(wm: &WeakMeasurement) -> KrausPair {
    KrausPair::from_pointer(&wm.pointer_pair(), &wm.axis)
}

/// Outcome-averaged state update `Σ± M±₁ ρ M±₁†` on a single qubit.
pub fn nonselective_channel(rho: &DensityMatrix, wm: &WeakMeasurement) -> Result<DensityMatrix> {
    if rho.dim() != 2 {
        return Err(Error::Dimension(format!("qubit channel applied to dimension {}", rho.dim())));
    }
    apply_pair(rho, &wm.kraus_pair())
}

/// Outcome-averaged update of qubit `target` inside an `n_qubits` register.
pub fn nonselective_channel_on(
    rho: &DensityMatrix,
    wm: &WeakMeasurement,
    target: usize,
    n_qubits: usize,
) -> Result<DensityMatrix> {
    apply_pair(rho, &wm.kraus_pair().lifted(target, n_qubits)?)
}

fn apply_pair(rho: &DensityMatrix, pair: &KrausPair) -> Result<DensityMatrix> {
    let (a, _) = apply_kraus(rho, pair.plus())?;
    let (b, _) = apply_kraus(rho, pair.minus())?;
    let sum = a.matrix() + b.matrix();
    if rho.is_subnormalized() {
        DensityMatrix::new_subnormalized(sum)
    } else {
        DensityMatrix::new(sum)
    }
}

/// Partial dephasing `Fρ + (1 − F)(π₊ρπ₊ + π₋ρπ₋)` in the eigenbasis of `σ·axis`.
pub fn dephasing_form(rho: &DensityMatrix, quality_factor: f64, axis: &BlochDirection) -> Result<ComplexMatrix> {
    if rho.dim() != 2 {
        return Err(Error::Dimension(format!("qubit channel applied to dimension {}", rho.dim())));
    }
    let r = rho.matrix();
    let mut diag = ComplexMatrix::zeros(2, 2);
    for o in Outcome::BOTH {
        let p = projector(axis, o);
        diag = &diag + &(&(&p * r) * &p);
    }
    Ok(&r.scale(c(quality_factor)) + &diag.scale(c(1.0 - quality_factor)))
}

/// Outcome probabilities `(P(+1), P(−1))` from the Born rule on the Kraus pair.
pub fn outcome_probabilities(rho: &DensityMatrix, wm: &WeakMeasurement) -> Result<(f64, f64)> {
    if rho.dim() != 2 {
        return Err(Error::Dimension(format!("qubit measurement on dimension {}", rho.dim())));
    }
    if (rho.trace() - 1.0).abs() > STRUCTURAL_TOL {
        return Err(Error::Dimension(format!("state trace {} is not one", rho.trace())));
    }
    let pair = wm.kraus_pair();
    let (_, p_plus) = apply_kraus(rho, pair.plus())?;
    let (_, p_minus) = apply_kraus(rho, pair.minus())?;
    Ok((p_plus, p_minus))
}

/// `P(±1) = G·½[1 ± Tr(σρ)] + (1 − G)·½` for a symmetric-ambiguity readout.
pub fn precision_form_probabilities(rho: &DensityMatrix, precision: f64, axis: &BlochDirection) -> Result<(f64, f64)> {
    let s = expectation(rho, &observable_from_direction(axis))?;
    let p = |sign: f64| precision * 0.5 * (1.0 + sign * s) + (1.0 - precision) * 0.5;
    Ok((p(1.0), p(-1.0)))
}

/// Maximum entrywise gap between the Kraus-sum channel and its dephasing form.
pub fn channel_form_deviation(rho: &DensityMatrix, wm: &WeakMeasurement) -> Result<f64> {
    let kraus = nonselective_channel(rho, wm)?;
    let closed = dephasing_form(rho, wm.quality_factor(), &wm.axis)?;
    Ok(kraus.matrix().max_abs_diff(&closed))
}

/// Whether the Kraus pair of `wm` is complete to the equivalence tolerance.
pub fn is_complete(wm: &WeakMeasurement) -> bool {
    wm.kraus_pair().completeness_error() <= EQUIVALENCE_TOL
}
