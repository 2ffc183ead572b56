//! Jones-calculus model of the wave-plate/beam-displacer weak-measurement
//! setup.
//!
//! A single photon lives in the four-mode space path ⊗ polarization, ordered
//! `(0,H), (0,V), (1,H), (1,V)`. The photon enters on path 0. The calcite beam
//! displacers move horizontal polarization between the two paths and leave
//! vertical polarization in place; the half-wave plates between them set the
//! pointer overlaps, and the outer plates rotate the measured basis
//! `{|φ⟩, |φ⊥⟩}` onto `{|H⟩, |V⟩}` and back.
//!
//! Plate placement (angles of the fast axis from horizontal):
//!
//! | element | path | angle          |
//! |---------|------|----------------|
//! | HWP1    | 0    | φ/2            |
//! | BD      |      |                |
//! | HWP2    | 1    | θ/2            |
//! | HWP3    | 0    | π/4 − θ/2 + π/2 |
//! | BD      |      |                |
//! | HWP4    | 0    | φ/2            |
//! | HWP5    | 1    | φ/2 + π/4      |
//!
//! HWP3 at `π/4 − θ/2 + π/2` is the same plate orientation as `π/4 − θ/2`
//! with fast and slow axes exchanged, i.e. an extra π phase on that arm.
//! Without it the two output operators carry a relative minus sign between
//! the `|φ⟩⟨φ|` and `|φ⊥⟩⟨φ⊥|` terms. Path 1 leaves the second displacer with
//! its polarization labels exchanged, so HWP5 sits a further π/4 from HWP4.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::qcore::{c, BlochDirection, ComplexMatrix, Ket, Outcome, C64};
use crate::weakmeas::{KrausPair, PointerPair, WeakMeasurement};
use crate::{Error, Result, STRUCTURAL_TOL};

pub const N_PATHS: usize = 2;
pub const N_MODES: usize = 4;

fn mode(path: usize, pol: usize) -> usize {
    2 * path + pol
}

/// Photon amplitudes over `(0,H), (0,V), (1,H), (1,V)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeVector(pub [C64; N_MODES]);

impl ModeVector {
    /// A photon on `path` with polarization `pol` (a 2-dim ket).
    pub fn on_path(path: usize, pol: &Ket) -> Result<Self> {
        if path >= N_PATHS || pol.dim() != 2 {
            return Err(Error::Dimension("mode vector needs a path < 2 and a qubit".into()));
        }
        let mut v = [C64::default(); N_MODES];
        v[mode(path, 0)] = pol.amplitude(0);
        v[mode(path, 1)] = pol.amplitude(1);
        Ok(Self(v))
    }

    /// Polarization amplitudes on one path (unnormalized).
    pub fn path_polarization(&self, path: usize) -> Ket {
        Ket::new(vec![self.0[mode(path, 0)], self.0[mode(path, 1)]]).expect("two finite amplitudes")
    }

    pub fn path_probability(&self, path: usize) -> f64 {
        self.0[mode(path, 0)].norm_sqr() + self.0[mode(path, 1)].norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    fn apply(&self, m: &ComplexMatrix) -> Self {
        let mut out = [C64::default(); N_MODES];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = (0..N_MODES).map(|j| m.get(i, j) * self.0[j]).sum();
        }
        Self(out)
    }
}

/// Half-wave plate with fast axis at `angle` from horizontal:
/// `[[cos 2a, sin 2a], [sin 2a, −cos 2a]]`.
pub fn hwp_matrix(angle: f64) -> ComplexMatrix {
    let (s, co) = (2.0 * angle).sin_cos();
    ComplexMatrix::from_real(2, 2, &[co, s, s, -co]).expect("finite entries")
}

/// Beam displacer: exchanges `(0,H)` and `(1,H)`, leaves both `V` modes in place.
pub fn bd_matrix() -> ComplexMatrix {
    let mut e = [0.0; N_MODES * N_MODES];
    let perm = [mode(1, 0), mode(0, 1), mode(0, 0), mode(1, 1)];
    for (col, &row) in perm.iter().enumerate() {
        e[row * N_MODES + col] = 1.0;
    }
    ComplexMatrix::from_real(N_MODES, N_MODES, &e).expect("permutation")
}

/// Which paths an element acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct PathMask([bool; N_PATHS]);

impl PathMask {
    pub const PATH0: Self = Self([true, false]);
    pub const PATH1: Self = Self([false, true]);
    pub const BOTH: Self = Self([true, true]);

    pub fn contains(&self, path: usize) -> bool {
        self.0.get(path).copied().unwrap_or(false)
    }
}

impl TryFrom<Vec<usize>> for PathMask {
    type Error = String;
    fn try_from(paths: Vec<usize>) -> std::result::Result<Self, String> {
        let mut mask = [false; N_PATHS];
        for p in paths {
            *mask.get_mut(p).ok_or_else(|| format!("path {p} out of range"))? = true;
        }
        Ok(Self(mask))
    }
}

impl From<PathMask> for Vec<usize> {
    fn from(m: PathMask) -> Self {
        (0..N_PATHS).filter(|&p| m.0[p]).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ElementKind {
    /// Half-wave plate at `angle` radians on the masked paths.
    Hwp { angle: f64, paths: PathMask },
    /// Beam displacer.
    Bd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpticalElement {
    pub label: String,
    pub kind: ElementKind,
    matrix: ComplexMatrix,
}

impl OpticalElement {
    pub fn hwp(label: impl Into<String>, angle: f64, paths: PathMask) -> Self {
        let plate = hwp_matrix(angle);
        let mut e = vec![C64::default(); N_MODES * N_MODES];
        for path in 0..N_PATHS {
            for i in 0..2 {
                for j in 0..2 {
                    let v = if paths.contains(path) {
                        plate.get(i, j)
                    } else if i == j {
                        c(1.0)
                    } else {
                        C64::default()
                    };
                    e[mode(path, i) * N_MODES + mode(path, j)] = v;
                }
            }
        }
        Self {
            label: label.into(),
            kind: ElementKind::Hwp { angle, paths },
            matrix: ComplexMatrix::from_row_slice(N_MODES, N_MODES, &e).expect("finite"),
        }
    }

    pub fn bd(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            kind: ElementKind::Bd,
            matrix: bd_matrix(),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// An output path and the outcome it reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputPort {
    pub path: usize,
    pub outcome: i8,
}

/// Ordered optical elements; the photon enters on path 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub elements: Vec<OpticalElement>,
    pub outputs: Vec<OutputPort>,
}

impl Circuit {
    /// Composite mode matrix, later elements acting last.
    pub fn mode_matrix(&self) -> ComplexMatrix {
        self.elements
            .iter()
            .fold(ComplexMatrix::identity(N_MODES), |acc, e| e.matrix() * &acc)
    }

    pub fn propagate(&self, input: &ModeVector) -> ModeVector {
        self.elements.iter().fold(*input, |v, e| v.apply(e.matrix()))
    }

    /// Replaces the angle of the first plate labelled `label`.
    pub fn with_plate_angle(mut self, label: &str, angle: f64) -> Result<Self> {
        let el = self
            .elements
            .iter_mut()
            .find(|e| e.label == label && matches!(e.kind, ElementKind::Hwp { .. }))
            .ok_or_else(|| Error::Dimension(format!("no plate labelled {label}")))?;
        let ElementKind::Hwp { paths, .. } = el.kind else { unreachable!() };
        *el = OpticalElement::hwp(label, angle, paths);
        Ok(self)
    }

    pub fn to_description(&self) -> CircuitDescription {
        CircuitDescription {
            elements: self
                .elements
                .iter()
                .map(|e| match e.kind {
                    ElementKind::Hwp { angle, paths } => ElementDescription::Hwp {
                        label: e.label.clone(),
                        angle_deg: angle.to_degrees(),
                        paths,
                    },
                    ElementKind::Bd => ElementDescription::Bd { label: e.label.clone() },
                })
                .collect(),
            outputs: self.outputs.clone(),
        }
    }

    pub fn from_description(desc: &CircuitDescription) -> Result<Self> {
        for port in &desc.outputs {
            if port.path >= N_PATHS {
                return Err(Error::Dimension(format!("output path {} out of range", port.path)));
            }
            Outcome::try_from(port.outcome)?;
        }
        let elements = desc
            .elements
            .iter()
            .map(|e| match e {
                ElementDescription::Hwp { label, angle_deg, paths } => {
                    OpticalElement::hwp(label.clone(), angle_deg.to_radians(), *paths)
                }
                ElementDescription::Bd { label } => OpticalElement::bd(label.clone()),
            })
            .collect();
        Ok(Self {
            elements,
            outputs: desc.outputs.clone(),
        })
    }
}

/// Serializable circuit: element list with angles in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitDescription {
    pub elements: Vec<ElementDescription>,
    pub outputs: Vec<OutputPort>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ElementDescription {
    Hwp {
        #[serde(default)]
        label: String,
        angle_deg: f64,
        paths: PathMask,
    },
    Bd {
        #[serde(default)]
        label: String,
    },
}

fn inner_elements(theta: f64) -> [OpticalElement; 4] {
    [
        OpticalElement::bd("BD1"),
        OpticalElement::hwp("HWP2", theta / 2.0, PathMask::PATH1),
        OpticalElement::hwp("HWP3", FRAC_PI_4 - theta / 2.0 + FRAC_PI_2, PathMask::PATH0),
        OpticalElement::bd("BD2"),
    ]
}

fn check_theta(theta: f64) -> Result<()> {
    WeakMeasurement::new(theta, BlochDirection::Z).map(|_| ())
}

/// Two-output setup: outcome `+1` leaves on path 0, `−1` on path 1.
/// `phi` is the polarization angle of `|φ⟩` (Bloch axis at `2φ`).
pub fn build_fig2a_circuit(theta: f64, phi: f64) -> Result<Circuit> {
    check_theta(theta)?;
    let mut elements = vec![OpticalElement::hwp("HWP1", phi / 2.0, PathMask::PATH0)];
    elements.extend(inner_elements(theta));
    elements.push(OpticalElement::hwp("HWP4", phi / 2.0, PathMask::PATH0));
    elements.push(OpticalElement::hwp("HWP5", phi / 2.0 + FRAC_PI_4, PathMask::PATH1));
    Ok(Circuit {
        elements,
        outputs: vec![
            OutputPort { path: 0, outcome: 1 },
            OutputPort { path: 1, outcome: -1 },
        ],
    })
}

/// Single-output setup: HWP1 and HWP4 at `φ/2` select outcome `+1`, at
/// `φ/2 + π/4` they select `−1`; the selected branch leaves on path 0.
pub fn build_fig2b_circuit(theta: f64, phi: f64, select: Outcome) -> Result<Circuit> {
    check_theta(theta)?;
    let outer = match select {
        Outcome::Plus => phi / 2.0,
        Outcome::Minus => phi / 2.0 + FRAC_PI_4,
    };
    let mut elements = vec![OpticalElement::hwp("HWP1", outer, PathMask::PATH0)];
    elements.extend(inner_elements(theta));
    elements.push(OpticalElement::hwp("HWP4", outer, PathMask::PATH0));
    Ok(Circuit {
        elements,
        outputs: vec![OutputPort {
            path: 0,
            outcome: select.value(),
        }],
    })
}

/// Polarization-to-polarization operators read off a circuit, one per output port.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledInstrument {
    pub operators: Vec<(Outcome, ComplexMatrix)>,
}

impl CompiledInstrument {
    pub fn get(&self, outcome: Outcome) -> Option<&ComplexMatrix> {
        self.operators.iter().find(|(o, _)| *o == outcome).map(|(_, m)| m)
    }

    /// The `{M₊₁, M₋₁}` pair, when both outcomes have a port.
    pub fn into_pair(self) -> Result<KrausPair> {
        let plus = self.get(Outcome::Plus).cloned();
        let minus = self.get(Outcome::Minus).cloned();
        match (plus, minus) {
            (Some(p), Some(m)) => KrausPair::new(p, m),
            _ => Err(Error::Dimension("circuit does not expose both outcomes".into())),
        }
    }
}

/// Reads the 2×2 operator from input path 0 to each designated output path.
pub fn compile_to_kraus(circuit: &Circuit) -> Result<CompiledInstrument> {
    let u = circuit.mode_matrix();
    let err = u.unitarity_error();
    if err > STRUCTURAL_TOL {
        return Err(Error::NonUnitary(err));
    }
    let mut operators = Vec::with_capacity(circuit.outputs.len());
    for port in &circuit.outputs {
        let outcome = Outcome::try_from(port.outcome)?;
        if port.path >= N_PATHS {
            return Err(Error::Dimension(format!("output path {} out of range", port.path)));
        }
        let mut e = [C64::default(); 4];
        for out_pol in 0..2 {
            for in_pol in 0..2 {
                e[2 * out_pol + in_pol] = u.get(mode(port.path, out_pol), mode(0, in_pol));
            }
        }
        operators.push((outcome, ComplexMatrix::from_row_slice(2, 2, &e)?));
    }
    // Σ K†K over the ports must not exceed the identity.
    let mut sum = ComplexMatrix::zeros(2, 2);
    for (_, k) in &operators {
        sum = &sum + &(&k.adjoint() * k);
    }
    let top = sum.hermitian_eigenvalues()?.last().copied().unwrap_or(0.0);
    if top > 1.0 + STRUCTURAL_TOL {
        return Err(Error::InvalidInstrument(top));
    }
    Ok(CompiledInstrument { operators })
}

/// `min_γ max|A − e^{iγ} B|`, with `γ` the Frobenius-optimal phase `arg Tr(B†A)`.
pub fn phase_aligned_deviation(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let overlap = (&b.adjoint() * a).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        c(1.0)
    };
    a.max_abs_diff(&b.scale(phase))
}

/// Largest phase-aligned deviation between compiled operators and the
/// abstract pair, matching by outcome label.
pub fn verify_equivalence(compiled: &CompiledInstrument, abstract_pair: &KrausPair) -> f64 {
    compiled
        .operators
        .iter()
        .map(|(o, k)| phase_aligned_deviation(k, abstract_pair.get(*o)))
        .fold(0.0, f64::max)
}

/// Pointer overlaps recovered from a compiled two-outcome instrument measuring
/// along `axis`: `⟨φ±₁|φ_↑⟩ = ⟨+|M±₁|+⟩`, `⟨φ±₁|φ_↓⟩ = ⟨−|M±₁|−⟩`.
pub fn compiled_pointer_pair(pair: &KrausPair, axis: &BlochDirection) -> Result<PointerPair> {
    let up = crate::qcore::eigenket(axis, Outcome::Plus);
    let down = crate::qcore::eigenket(axis, Outcome::Minus);
    let amp = |o: Outcome, k: &Ket| -> Result<C64> { Ok(k.inner(&pair.get(o).apply(k)?)) };
    PointerPair::new(
        amp(Outcome::Plus, &up)?,
        amp(Outcome::Minus, &up)?,
        amp(Outcome::Plus, &down)?,
        amp(Outcome::Minus, &down)?,
    )
}

/// Abstract instrument the setup is meant to realize.
pub fn target_kraus_pair(theta: f64, phi: f64) -> Result<KrausPair> {
    Ok(WeakMeasurement::new(theta, BlochDirection::from_polarization_angle(phi))?.kraus_pair())
}
