//! FAR(1) sample paths in a truncated Fourier basis.
//!
//! The process is simulated in score space, `ξₜ = A ξₜ₋₁ + ηₜ` with
//! `ηₜ ~ N(0, diag(σ²))`, and projected onto the evaluation grid only at
//! output. All randomness flows through [`NormalStream`], a ChaCha20 stream
//! turned into standard normals by the polar-free Box–Muller transform
//! (`box-muller-v1`):
//!
//! ```text
//! u₁ = ((next_u64 >> 11) + 1) · 2⁻⁵³      ∈ (0, 1]
//! u₂ =  (next_u64 >> 11)      · 2⁻⁵³      ∈ [0, 1)
//! z₁ = √(−2 ln u₁) · cos(2π u₂),  z₂ = √(−2 ln u₁) · sin(2π u₂)
//! ```
//!
//! `z₁` is returned first and `z₂` is cached for the next call.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{FarError, Result};
use crate::grid::{GridRef, QuadratureGrid};
use crate::moments::{FunctionalSample, OperatorEstimate, Tuning};

/// Name of the normal-generation algorithm; bump when the transform changes.
pub const NORMAL_ALGORITHM: &str = "box-muller-v1";

/// Seeded standard-normal generator.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha20Rng,
    cached: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            cached: None,
        }
    }

    fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.cached.take() {
            return z;
        }
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.unit();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * PI * u2;
        self.cached = Some(r * theta.sin());
        r * theta.cos()
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of seed components.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x7469_6B66_6172_0001, |h, p| splitmix(h ^ splitmix(*p)))
}

/// Stable 64-bit tag for a regime label (FNV-1a).
pub fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Which random stream a seed feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Operator = 0,
    Train = 1,
    Test = 2,
}

/// Seed for the one operator draw of a regime.
pub fn operator_seed(master: u64, regime: &str) -> u64 {
    derive_seed(&[master, label_hash(regime), StreamTag::Operator as u64])
}

/// Seed for one simulated path of a replication.
pub fn path_seed(master: u64, regime: &str, n: usize, replication: usize, tag: StreamTag) -> u64 {
    derive_seed(&[
        master,
        label_hash(regime),
        n as u64,
        replication as u64,
        tag as u64,
    ])
}

/// The three benchmark regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegimeId {
    I,
    II,
    III,
}

impl RegimeId {
    pub const ALL: [RegimeId; 3] = [RegimeId::I, RegimeId::II, RegimeId::III];

    pub fn label(self) -> &'static str {
        match self {
            RegimeId::I => "I",
            RegimeId::II => "II",
            RegimeId::III => "III",
        }
    }
}

impl fmt::Display for RegimeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RegimeId {
    type Err = FarError;

    /// Accepts `I`, `II`, `III`, `1`, `2`, `3`, case-insensitive, with an
    /// optional `regime-` prefix.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let t = t.strip_prefix("regime-").unwrap_or(&t);
        match t {
            "i" | "1" => Ok(RegimeId::I),
            "ii" | "2" => Ok(RegimeId::II),
            "iii" | "3" => Ok(RegimeId::III),
            _ => Err(FarError::InvalidArgument(format!("unknown regime '{s}'"))),
        }
    }
}

/// Index direction of the within-block decay factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayAxis {
    #[default]
    Column,
    Row,
    Both,
}

/// Which matrix size the drawn block is rescaled to match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorScaling {
    /// Largest eigenvalue modulus.
    #[default]
    SpectralRadius,
    /// Largest singular value.
    OperatorNorm,
}

fn default_burn_in() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeSpec {
    pub label: String,
    pub basis_dim: usize,
    pub block_size: usize,
    pub within_block_decay: f64,
    #[serde(default)]
    pub decay_axis: DecayAxis,
    pub innovation_decay: f64,
    pub innovation_total_variance: f64,
    pub spectral_radius_target: f64,
    #[serde(default)]
    pub scaling: OperatorScaling,
    pub grid_points: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

impl RegimeSpec {
    pub fn preset(id: RegimeId) -> Self {
        let (block_size, within_block_decay, innovation_decay) = match id {
            RegimeId::I => (3, 0.0, 2.0),
            RegimeId::II => (10, 0.0, 1.0),
            RegimeId::III => (25, 0.3, 0.6),
        };
        Self {
            label: id.label().to_string(),
            basis_dim: 40,
            block_size,
            within_block_decay,
            decay_axis: DecayAxis::Column,
            innovation_decay,
            innovation_total_variance: 0.5,
            spectral_radius_target: 0.85,
            scaling: OperatorScaling::SpectralRadius,
            grid_points: 101,
            burn_in: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FarError::InvalidArgument(m));
        if self.basis_dim == 0 {
            return bad("basis dimension must be positive".into());
        }
        if self.block_size == 0 || self.block_size > self.basis_dim {
            return bad(format!(
                "block size {} must lie in 1..={}",
                self.block_size, self.basis_dim
            ));
        }
        if !(self.within_block_decay.is_finite() && self.within_block_decay >= 0.0) {
            return bad("within-block decay must be nonnegative".into());
        }
        if !(self.innovation_decay.is_finite() && self.innovation_decay > 0.0) {
            return bad("innovation decay must be positive".into());
        }
        if !(self.innovation_total_variance.is_finite() && self.innovation_total_variance > 0.0) {
            return bad("innovation total variance must be positive".into());
        }
        if !(self.spectral_radius_target > 0.0 && self.spectral_radius_target < 1.0) {
            return bad("spectral radius target must lie in (0, 1)".into());
        }
        if self.grid_points < 2 {
            return bad("need at least 2 grid points".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridRef> {
        QuadratureGrid::uniform(self.grid_points).map(Arc::new)
    }
}

/// `J × M` matrix of the orthonormal Fourier system on the grid points:
/// `1, √2 cos(2πu), √2 sin(2πu), √2 cos(4πu), …`.
pub fn fourier_basis(j: usize, grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
    if j == 0 {
        return Err(FarError::InvalidArgument("basis dimension must be positive".into()));
    }
    Ok(DMatrix::from_fn(j, grid.len(), |row, col| {
        let u = grid.points()[col];
        let k = row + 1;
        if k == 1 {
            1.0
        } else {
            let freq = (k / 2) as f64;
            if k % 2 == 0 {
                SQRT_2 * (2.0 * PI * freq * u).cos()
            } else {
                SQRT_2 * (2.0 * PI * freq * u).sin()
            }
        }
    }))
}

/// Coefficient matrix of the data-generating operator.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueOperator {
    coefficients: DMatrix<f64>,
    regime: String,
    spectral_radius: f64,
}

impl TrueOperator {
    pub fn new(coefficients: DMatrix<f64>, regime: impl Into<String>) -> Result<Self> {
        if !coefficients.is_square() {
            return Err(FarError::InvalidArgument("operator matrix must be square".into()));
        }
        let spectral_radius = spectral_radius(&coefficients)?;
        Ok(Self {
            coefficients,
            regime: regime.into(),
            spectral_radius,
        })
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn regime(&self) -> &str {
        &self.regime
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    pub fn dim(&self) -> usize {
        self.coefficients.nrows()
    }

    /// Kernel `ψ(uᵢ, vⱼ) = Σ A_kl φ_k(uᵢ) φ_l(vⱼ)` on the grid.
    pub fn grid_operator(&self, grid: &GridRef) -> Result<OperatorEstimate> {
        let phi = fourier_basis(self.dim(), grid)?;
        let kernel = phi.transpose() * &self.coefficients * phi;
        OperatorEstimate::new(grid.clone(), kernel, Tuning::Fixed)
    }
}

pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    let eig = a.complex_eigenvalues();
    let rho = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !rho.is_finite() {
        return Err(FarError::Numerical("non-finite eigenvalue".into()));
    }
    Ok(rho)
}

fn decay_factor(spec: &RegimeSpec, row: usize, col: usize) -> f64 {
    let g = spec.within_block_decay;
    if g == 0.0 {
        return 1.0;
    }
    let (i, k) = ((row + 1) as f64, (col + 1) as f64);
    match spec.decay_axis {
        DecayAxis::Column => k.powf(-g),
        DecayAxis::Row => i.powf(-g),
        DecayAxis::Both => (i * k).powf(-g),
    }
}

/// Gaussian block with decay factors applied, before rescaling.
fn draw_block(spec: &RegimeSpec, stream: &mut NormalStream) -> DMatrix<f64> {
    let b = spec.block_size;
    let mut block = DMatrix::zeros(b, b);
    for row in 0..b {
        for col in 0..b {
            block[(row, col)] = stream.next_normal() * decay_factor(spec, row, col);
        }
    }
    block
}

/// Draws the regime operator: an i.i.d. normal top-left block, optional
/// within-block decay, rescaled so that its spectral radius (or, with
/// [`OperatorScaling::OperatorNorm`], its largest singular value) equals the
/// target.
pub fn draw_regime_operator(spec: &RegimeSpec, seed: u64) -> Result<TrueOperator> {
    spec.validate()?;
    let mut stream = NormalStream::new(seed);
    let block = draw_block(spec, &mut stream);
    let rho = match spec.scaling {
        OperatorScaling::SpectralRadius => spectral_radius(&block)?,
        OperatorScaling::OperatorNorm => block.singular_values().max(),
    };
    if !(rho > f64::MIN_POSITIVE) {
        return Err(FarError::Numerical("drawn block has zero spectral radius".into()));
    }
    let scaled = block * (spec.spectral_radius_target / rho);
    let j = spec.basis_dim;
    let mut a = DMatrix::zeros(j, j);
    a.view_mut((0, 0), (spec.block_size, spec.block_size))
        .copy_from(&scaled);
    TrueOperator::new(a, spec.label.clone())
}

/// `σₖ² = c·k^{−a}` normalized to the regime's total variance.
pub fn innovation_eigenvalues(spec: &RegimeSpec) -> Vec<f64> {
    let raw: Vec<f64> = (1..=spec.basis_dim)
        .map(|k| (k as f64).powf(-spec.innovation_decay))
        .collect();
    let c = spec.innovation_total_variance / raw.iter().sum::<f64>();
    raw.into_iter().map(|r| c * r).collect()
}

/// Score path `n × J` of `ξₜ = A ξₜ₋₁ + ηₜ` from `ξ₀ = 0`, with the first
/// `burn_in` states discarded.
pub fn simulate_scores(
    a: &DMatrix<f64>,
    variances: &[f64],
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let j = a.nrows();
    if !a.is_square() || variances.len() != j {
        return Err(FarError::Dimension {
            expected: j,
            found: variances.len(),
        });
    }
    if variances.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(FarError::InvalidArgument("variances must be nonnegative".into()));
    }
    let sd: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
    let mut stream = NormalStream::new(seed);
    let mut state = nalgebra::DVector::<f64>::zeros(j);
    let mut out = DMatrix::zeros(n, j);
    for t in 0..burn_in + n {
        let mut next = a * &state;
        for k in 0..j {
            next[k] += sd[k] * stream.next_normal();
        }
        state = next;
        if t >= burn_in {
            out.row_mut(t - burn_in).copy_from(&state.transpose());
        }
    }
    Ok(out)
}

/// Simulates `n` curves on the regime's grid.
pub fn simulate_far1(
    op: &TrueOperator,
    spec: &RegimeSpec,
    n: usize,
    seed: u64,
) -> Result<FunctionalSample> {
    spec.validate()?;
    if n < 2 {
        return Err(FarError::InsufficientData(format!(
            "need at least 2 curves, got {n}"
        )));
    }
    if op.dim() != spec.basis_dim {
        return Err(FarError::Dimension {
            expected: spec.basis_dim,
            found: op.dim(),
        });
    }
    let grid = spec.grid()?;
    let scores = simulate_scores(
        op.coefficients(),
        &innovation_eigenvalues(spec),
        n,
        spec.burn_in,
        seed,
    )?;
    let phi = fourier_basis(spec.basis_dim, &grid)?;
    FunctionalSample::new(grid, scores * phi)
}
