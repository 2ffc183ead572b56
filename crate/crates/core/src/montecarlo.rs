//! Finite-statistics emulation of the coincidence experiment.
//!
//! Each of the eight setting combinations `(x, y₁, y₂)` is recorded for a fixed
//! window, so its total is an independent Poisson draw with mean
//! `pair_rate · window`; the total is then split over the eight outcome cells
//! multinomially. Error bars come from first-order propagation of the
//! per-cell Poisson variance (`var n = n`).
//!
//! Randomness is drawn from ChaCha8 with one stream per `(θ index, setting)`,
//! so results do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{chsh, default_settings, joint_distribution, CorrelationTable, JointDistribution, SValues};
use crate::qcore::{c, expectation, projector, singlet, BlochDirection, ComplexMatrix, DensityMatrix, Outcome};
use crate::{Error, Result, STRUCTURAL_TOL};

/// Coincidence visibility of a two-qubit state along `axis` for both
/// analyzers: `(max − min)/(max + min)` of `P(+axis, ±axis)`.
pub fn visibility(state: &DensityMatrix, axis: &BlochDirection) -> Result<f64> {
    let alice = projector(axis, Outcome::Plus);
    let coincidence = |o: Outcome| -> Result<f64> { expectation(state, &alice.kron(&projector(axis, o))?) };
    let same = coincidence(Outcome::Plus)?;
    let opposite = coincidence(Outcome::Minus)?;
    let (hi, lo) = (same.max(opposite), same.min(opposite));
    if hi + lo <= 0.0 {
        return Ok(0.0);
    }
    Ok((hi - lo) / (hi + lo))
}

/// H/V-basis and diagonal-basis visibilities.
pub fn visibilities(state: &DensityMatrix) -> Result<(f64, f64)> {
    Ok((visibility(state, &BlochDirection::Z)?, visibility(state, &BlochDirection::X)?))
}

/// Singlet with H/V dephasing `λ` and white-noise weight `w`:
/// `ρ = (1 − w)[(1 − λ)ψ⁻ + λ·D(ψ⁻)] + w·I/4`, where `D` removes the
/// `|HV⟩⟨VH|` coherences.
///
/// Its H/V visibility is `1 − w` and its diagonal visibility
/// `(1 − w)(1 − λ)`, so the two measured visibilities fix `(w, λ)` uniquely
/// whenever `vis_diag ≤ vis_zx`.
pub fn noisy_state(vis_zx: f64, vis_diag: f64) -> Result<DensityMatrix> {
    let infeasible = |reason| Error::InfeasibleVisibility {
        vis_zx,
        vis_diag,
        reason,
    };
    if !(0.0..=1.0).contains(&vis_zx) || !(0.0..=1.0).contains(&vis_diag) {
        return Err(infeasible("visibilities must lie in [0, 1]"));
    }
    if vis_diag > vis_zx + STRUCTURAL_TOL {
        return Err(infeasible("H/V dephasing cannot raise the diagonal visibility above the H/V one"));
    }
    let white = 1.0 - vis_zx;
    let dephasing = if vis_zx > 0.0 {
        (1.0 - vis_diag / vis_zx).clamp(0.0, 1.0)
    } else {
        0.0
    };

    let s = singlet();
    let dephased = DensityMatrix::new(ComplexMatrix::diag(&[0.0, 0.5, 0.5, 0.0]))?;
    let coherent = s.matrix().scale(c(1.0 - dephasing));
    let inner = DensityMatrix::new(&coherent + &dephased.matrix().scale(c(dephasing)))?;
    DensityMatrix::mixture(&[(1.0 - white, &inner), (white, &DensityMatrix::maximally_mixed(4))])
}

/// Experiment parameters; angles in radians.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Coincidences per second for every setting combination.
    pub pair_rate: f64,
    /// Acquisition time per setting combination, seconds.
    pub window: f64,
    pub vis_zx: f64,
    pub vis_diag: f64,
    pub seed: u64,
    pub thetas: Vec<f64>,
}

impl ExperimentConfig {
    /// 3,200 coincidences/s, 6 s windows, visibilities 0.997 / 0.993, and
    /// `θ ∈ {4°, 16.4°, 18.4°, 20.5°, 28°}`.
    pub fn reference_preset(seed: u64) -> Self {
        Self {
            pair_rate: 3200.0,
            window: 6.0,
            vis_zx: 0.997,
            vis_diag: 0.993,
            seed,
            thetas: REFERENCE_THETAS_DEG.iter().map(|d| d.to_radians()).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| Err(Error::Config { field, reason: reason.into() });
        if !(self.pair_rate.is_finite() && self.pair_rate > 0.0) {
            return bad("pair_rate", "must be a positive number");
        }
        if !(self.window.is_finite() && self.window > 0.0) {
            return bad("window", "must be a positive number of seconds");
        }
        if !(0.0..=1.0).contains(&self.vis_zx) {
            return bad("vis_zx", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.vis_diag) {
            return bad("vis_diag", "must lie in [0, 1]");
        }
        for &t in &self.thetas {
            if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&t) {
                return bad("thetas_deg", "every angle must lie in [0, 90] degrees");
            }
        }
        Ok(())
    }

    /// Poisson mean of each setting's total.
    pub fn mean_per_setting(&self) -> f64 {
        self.pair_rate * self.window
    }
}

pub const REFERENCE_THETAS_DEG: [f64; 5] = [4.0, 16.4, 18.4, 20.5, 28.0];

/// Current config document version.
pub const CONFIG_VERSION: u32 = 1;

/// JSON form of [`ExperimentConfig`]; angles in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfigDocument {
    pub version: u32,
    pub pair_rate: f64,
    pub window: f64,
    pub vis_zx: f64,
    pub vis_diag: f64,
    pub seed: u64,
    pub thetas_deg: Vec<f64>,
}

impl TryFrom<ExperimentConfigDocument> for ExperimentConfig {
    type Error = Error;
    fn try_from(doc: ExperimentConfigDocument) -> Result<Self> {
        if doc.version != CONFIG_VERSION {
            return Err(Error::Config {
                field: "version",
                reason: format!("unsupported version {}, expected {CONFIG_VERSION}", doc.version),
            });
        }
        let cfg = Self {
            pair_rate: doc.pair_rate,
            window: doc.window,
            vis_zx: doc.vis_zx,
            vis_diag: doc.vis_diag,
            seed: doc.seed,
            thetas: doc.thetas_deg.iter().map(|d| d.to_radians()).collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<&ExperimentConfig> for ExperimentConfigDocument {
    fn from(cfg: &ExperimentConfig) -> Self {
        Self {
            version: CONFIG_VERSION,
            pair_rate: cfg.pair_rate,
            window: cfg.window,
            vis_zx: cfg.vis_zx,
            vis_diag: cfg.vis_diag,
            seed: cfg.seed,
            thetas_deg: cfg.thetas.iter().map(|t| t.to_degrees()).collect(),
        }
    }
}

/// Index of setting `(x, y1, y2)`.
pub fn setting_index(x: usize, y1: usize, y2: usize) -> usize {
    4 * x + 2 * y1 + y2
}

/// Index of outcome cell `(a, b1, b2)` (outcome index `+1 → 0`, `−1 → 1`).
pub fn cell_index(a: usize, b1: usize, b2: usize) -> usize {
    4 * a + 2 * b1 + b2
}

/// Coincidence tallies for the eight settings, eight outcome cells each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountRecord {
    tallies: [[u64; 8]; 8],
}

impl CountRecord {
    pub fn from_tallies(tallies: [[u64; 8]; 8]) -> Self {
        Self { tallies }
    }

    pub fn tallies(&self, x: usize, y1: usize, y2: usize) -> &[u64; 8] {
        &self.tallies[setting_index(x, y1, y2)]
    }

    /// Realized total of one setting.
    pub fn total(&self, x: usize, y1: usize, y2: usize) -> u64 {
        self.tallies(x, y1, y2).iter().sum()
    }

    pub fn grand_total(&self) -> u64 {
        self.tallies.iter().flatten().sum()
    }
}

/// Random stream for one `(θ point, setting)` pair.
pub fn substream(seed: u64, point: u64, setting: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((point << 3) | setting);
    rng
}

/// Sequential-binomial multinomial draw of `n` trials over `probs`.
fn multinomial(n: u64, probs: &[f64; 8], rng: &mut ChaCha8Rng) -> [u64; 8] {
    let mut out = [0u64; 8];
    let mut remaining = n;
    let mut mass: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == probs.len() - 1 {
            out[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(remaining, q).expect("probability in [0, 1]").sample(rng);
        out[i] = k;
        remaining -= k;
        mass -= p;
    }
    out
}

/// Draws one count record: Poisson totals per setting, multinomial cells.
/// `point` selects the random streams (the θ index within a run).
pub fn sample_counts(jd: &JointDistribution, cfg: &ExperimentConfig, point: u64) -> CountRecord {
    let mean = cfg.mean_per_setting();
    let mut tallies = [[0u64; 8]; 8];
    for (s, row) in tallies.iter_mut().enumerate() {
        let (x, y1, y2) = (s >> 2, (s >> 1) & 1, s & 1);
        let mut rng = substream(cfg.seed, point, s as u64);
        let total = if mean > 0.0 {
            Poisson::new(mean).expect("positive finite mean").sample(&mut rng) as u64
        } else {
            0
        };
        *row = multinomial(total, &jd.setting_cells(x, y1, y2), &mut rng);
    }
    CountRecord { tallies }
}

/// S value with its propagated standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SEstimate {
    pub s: f64,
    pub sigma: f64,
    /// `(s − 2)/sigma`.
    pub sigmas_above_2: f64,
}

impl SEstimate {
    fn new(s: f64, sigma: f64) -> Self {
        Self {
            s,
            sigma,
            sigmas_above_2: (s - 2.0) / sigma,
        }
    }
}

/// Empirical correlation `Σ sᵢ nᵢ / N` of one setting and its delta-method
/// variance `Σ (sᵢ − c)² nᵢ / N²`.
fn correlation_with_variance(tallies: &[u64; 8], signs: impl Fn(usize) -> f64) -> (f64, f64) {
    let n: f64 = tallies.iter().sum::<u64>() as f64;
    let corr = tallies.iter().enumerate().map(|(i, &k)| signs(i) * k as f64).sum::<f64>() / n;
    let var = tallies
        .iter()
        .enumerate()
        .map(|(i, &k)| (signs(i) - corr).powi(2) * k as f64)
        .sum::<f64>()
        / (n * n);
    (corr, var)
}

fn sign_of(bit: usize) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Estimated `(S_AB1, S_AB2)` from counts. Each correlation entry is the
/// uniform average over the other Bob's input of per-setting correlations.
pub fn estimate_svalues(counts: &CountRecord) -> Result<(SEstimate, SEstimate)> {
    let mut c1 = [[0.0; 2]; 2];
    let mut c2 = [[0.0; 2]; 2];
    let mut v1 = [[0.0; 2]; 2];
    let mut v2 = [[0.0; 2]; 2];
    for x in 0..2 {
        for y1 in 0..2 {
            for y2 in 0..2 {
                let t = counts.tallies(x, y1, y2);
                if t.iter().sum::<u64>() == 0 {
                    return Err(Error::EmptySetting { x, y1, y2 });
                }
                // cell index = 4a + 2b1 + b2
                let (a1, var1) = correlation_with_variance(t, |i| sign_of(i >> 2) * sign_of((i >> 1) & 1));
                let (a2, var2) = correlation_with_variance(t, |i| sign_of(i >> 2) * sign_of(i & 1));
                c1[x][y1] += 0.5 * a1;
                v1[x][y1] += 0.25 * var1;
                c2[x][y2] += 0.5 * a2;
                v2[x][y2] += 0.25 * var2;
            }
        }
    }
    let estimate = |c: [[f64; 2]; 2], v: [[f64; 2]; 2]| -> Result<SEstimate> {
        let s = chsh(&CorrelationTable::new(c)?);
        let sigma = v.iter().flatten().sum::<f64>().sqrt();
        Ok(SEstimate::new(s, sigma))
    };
    Ok((estimate(c1, v1)?, estimate(c2, v2)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPoint {
    pub theta: f64,
    pub ab1: SEstimate,
    pub ab2: SEstimate,
    pub counts: CountRecord,
}

/// Exact S values of the noisy state at `theta`, i.e. what the estimates
/// converge to.
pub fn expected_svalues(cfg: &ExperimentConfig, theta: f64) -> Result<SValues> {
    let state = noisy_state(cfg.vis_zx, cfg.vis_diag)?;
    crate::bell::simulated_svalues(&state, &default_settings(), theta)
}

/// Emulates the full run: one count record and estimate pair per `θ`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentPoint>> {
    cfg.validate()?;
    let state = noisy_state(cfg.vis_zx, cfg.vis_diag)?;
    let settings = default_settings();
    cfg.thetas
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| {
            let jd = joint_distribution(&state, &settings, theta)?;
            let counts = sample_counts(&jd, cfg, i as u64);
            let (ab1, ab2) = estimate_svalues(&counts)?;
            Ok(ExperimentPoint {
                theta,
                ab1,
                ab2,
                counts,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn perfect_visibilities_give_singlet() {
        let s = noisy_state(1.0, 1.0).unwrap();
        assert!(s.matrix().approx_eq(singlet().matrix(), 1e-15));
    }

    #[test]
    fn visibility_round_trip() {
        for (a, b) in [(0.997, 0.993), (1.0, 0.0), (0.9, 0.9), (0.5, 0.1), (0.0, 0.0)] {
            let s = noisy_state(a, b).unwrap();
            let (va, vb) = visibilities(&s).unwrap();
            assert!((va - a).abs() < 1e-9 && (vb - b).abs() < 1e-9, "({a},{b}) -> ({va},{vb})");
        }
    }

    #[test]
    fn fully_dephased_limit() {
        let s = noisy_state(1.0, 0.0).unwrap();
        assert!(s.matrix().approx_eq(&ComplexMatrix::diag(&[0.0, 0.5, 0.5, 0.0]), 1e-15));
    }

    #[test]
    fn infeasible_visibilities_reported() {
        assert!(matches!(noisy_state(0.9, 0.95), Err(Error::InfeasibleVisibility { .. })));
        assert!(noisy_state(1.2, 0.5).is_err());
    }

    #[test]
    fn zero_window_gives_empty_record() {
        let jd = joint_distribution(&singlet(), &default_settings(), deg(18.4)).unwrap();
        let mut cfg = ExperimentConfig::reference_preset(1);
        cfg.window = 0.0;
        assert_eq!(sample_counts(&jd, &cfg, 0).grand_total(), 0);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let jd = joint_distribution(&singlet(), &default_settings(), deg(18.4)).unwrap();
        let cfg = ExperimentConfig::reference_preset(7);
        assert_eq!(sample_counts(&jd, &cfg, 3), sample_counts(&jd, &cfg, 3));
        assert_ne!(sample_counts(&jd, &cfg, 3), sample_counts(&jd, &cfg, 4));
        let other = ExperimentConfig::reference_preset(8);
        assert_ne!(sample_counts(&jd, &cfg, 3), sample_counts(&jd, &other, 3));
    }

    #[test]
    fn equal_tallies_give_zero() {
        let counts = CountRecord::from_tallies([[100; 8]; 8]);
        let (a, b) = estimate_svalues(&counts).unwrap();
        assert_eq!(a.s, 0.0);
        assert_eq!(b.s, 0.0);
        assert!(a.sigma > 0.0);
    }

    #[test]
    fn empty_setting_is_an_error() {
        let mut t = [[10; 8]; 8];
        t[setting_index(1, 0, 1)] = [0; 8];
        assert_eq!(
            estimate_svalues(&CountRecord::from_tallies(t)),
            Err(Error::EmptySetting { x: 1, y1: 0, y2: 1 })
        );
    }

    #[test]
    fn proportional_counts_reproduce_exact_s() {
        let theta = deg(18.4);
        let jd = joint_distribution(&singlet(), &default_settings(), theta).unwrap();
        // Scale so that every cell is (nearly) an integer multiple of p.
        let n = 1e12;
        let mut t = [[0u64; 8]; 8];
        for (s, row) in t.iter_mut().enumerate() {
            let cells = jd.setting_cells(s >> 2, (s >> 1) & 1, s & 1);
            for (slot, p) in row.iter_mut().zip(cells) {
                *slot = (p * n).round() as u64;
            }
        }
        let (a, b) = estimate_svalues(&CountRecord::from_tallies(t)).unwrap();
        let exact = crate::bell::predicted_svalues(theta).unwrap();
        assert!((a.s - exact.s_ab1).abs() < 1e-9);
        assert!((b.s - exact.s_ab2).abs() < 1e-9);
        assert!(a.sigma > 0.0 && b.sigma > 0.0);
    }

    #[test]
    fn config_document_validation() {
        let good = r#"{"version":1,"pair_rate":3200,"window":6,"vis_zx":0.997,"vis_diag":0.993,"seed":5,"thetas_deg":[4,18.4]}"#;
        let doc: ExperimentConfigDocument = serde_json::from_str(good).unwrap();
        let cfg = ExperimentConfig::try_from(doc).unwrap();
        assert!((cfg.thetas[1] - deg(18.4)).abs() < 1e-15);

        let neg_rate = good.replace("3200", "-1");
        let doc: ExperimentConfigDocument = serde_json::from_str(&neg_rate).unwrap();
        assert!(matches!(ExperimentConfig::try_from(doc), Err(Error::Config { field: "pair_rate", .. })));

        let v2 = good.replace("\"version\":1", "\"version\":2");
        let doc: ExperimentConfigDocument = serde_json::from_str(&v2).unwrap();
        assert!(matches!(ExperimentConfig::try_from(doc), Err(Error::Config { field: "version", .. })));

        let big_theta = good.replace("18.4", "91");
        let doc: ExperimentConfigDocument = serde_json::from_str(&big_theta).unwrap();
        assert!(matches!(ExperimentConfig::try_from(doc), Err(Error::Config { field: "thetas_deg", .. })));
    }

    #[test]
    fn reference_preset_run_has_five_points() {
        let points = run_experiment(&ExperimentConfig::reference_preset(2017)).unwrap();
        assert_eq!(points.len(), 5);
        for (p, d) in points.iter().zip(REFERENCE_THETAS_DEG) {
            assert!((p.theta - deg(d)).abs() < 1e-15);
        }
        let balanced = &points[2];
        assert!(balanced.ab1.sigmas_above_2 > 5.0 && balanced.ab2.sigmas_above_2 > 5.0);
    }
}
