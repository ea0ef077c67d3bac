//! Koopman linear-predictor core: datasets of snapshots, lifting maps,
//! the EDMD least-squares fit `K = G₊ G_uᵀ(G_u G_uᵀ)⁻¹` (via pseudoinverse),
//! multi-step rollout of the fitted predictor and the VAF metric.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::autoencoder::Network;
use crate::fmath;
use crate::numerics::{condition_number, pinv, Matrix, NumericsError, DEFAULT_PINV_TOL};

#[derive(Debug, Clone, PartialEq)]
pub enum KoopmanError {
    /// Fewer snapshots than unknowns in the regression.
    InsufficientSnapshots { needed: usize, got: usize },
    LengthMismatch,
    /// `vaf` target signal has zero variance.
    ConstantReference,
    NotFinite,
    UnknownChannel(String),
    Numerics(NumericsError),
}

impl fmt::Display for KoopmanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KoopmanError::InsufficientSnapshots { needed, got } => {
                write!(f, "insufficient snapshots: need at least {needed}, got {got}")
            }
            KoopmanError::LengthMismatch => write!(f, "sequence length mismatch"),
            KoopmanError::ConstantReference => write!(f, "constant reference signal"),
            KoopmanError::NotFinite => write!(f, "non-finite value in dataset"),
            KoopmanError::UnknownChannel(name) => write!(f, "unknown channel '{name}'"),
            KoopmanError::Numerics(e) => write!(f, "numerics failure: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for KoopmanError {}

impl From<NumericsError> for KoopmanError {
    fn from(e: NumericsError) -> Self {
        KoopmanError::Numerics(e)
    }
}

/// Time-indexed snapshots of physical states and inputs.
///
/// States are stored as an `n_x x n_o` matrix (one column per sample),
/// inputs as `n_u x n_o`.
#[derive(Debug, Clone)]
pub struct Dataset {
    state_names: Vec<String>,
    input_names: Vec<String>,
    x: Matrix,
    u: Matrix,
    dt: f64,
}

impl Dataset {
    pub fn new(
        state_names: Vec<String>,
        input_names: Vec<String>,
        x: Matrix,
        u: Matrix,
        dt: f64,
    ) -> Self {
        assert_eq!(state_names.len(), x.rows());
        assert_eq!(input_names.len(), u.rows());
        assert_eq!(x.cols(), u.cols(), "state/input column counts differ");
        Dataset {
            state_names,
            input_names,
            x,
            u,
            dt,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.x.cols()
    }

    pub fn n_states(&self) -> usize {
        self.x.rows()
    }

    pub fn n_inputs(&self) -> usize {
        self.u.rows()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn states(&self) -> &Matrix {
        &self.x
    }

    pub fn inputs(&self) -> &Matrix {
        &self.u
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn state_at(&self, k: usize) -> Vec<f64> {
        self.x.column(k)
    }

    pub fn input_at(&self, k: usize) -> Vec<f64> {
        self.u.column(k)
    }

    pub fn validate(&self) -> Result<(), KoopmanError> {
        if self.x.is_finite() && self.u.is_finite() {
            Ok(())
        } else {
            Err(KoopmanError::NotFinite)
        }
    }

    pub fn channel_index(&self, name: &str) -> Result<usize, KoopmanError> {
        self.state_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| KoopmanError::UnknownChannel(name.into()))
    }

    /// Sub-dataset keeping only the named state channels (inputs unchanged).
    pub fn select_states(&self, names: &[&str]) -> Result<Dataset, KoopmanError> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.channel_index(n))
            .collect::<Result<_, _>>()?;
        let x = Matrix::from_fn(idx.len(), self.n_samples(), |i, k| self.x.get(idx[i], k));
        Ok(Dataset {
            state_names: names.iter().map(|s| String::from(*s)).collect(),
            input_names: self.input_names.clone(),
            x,
            u: self.u.clone(),
            dt: self.dt,
        })
    }

    /// Chronological split: first `frac` of the samples, then the rest.
    pub fn split_at_fraction(&self, frac: f64) -> (Dataset, Dataset) {
        let n = self.n_samples();
        let cut = ((n as f64 * frac) as usize).clamp(1, n - 1);
        let take = |lo: usize, hi: usize| Dataset {
            state_names: self.state_names.clone(),
            input_names: self.input_names.clone(),
            x: self.x.block(0, lo, self.n_states(), hi - lo),
            u: self.u.block(0, lo, self.n_inputs(), hi - lo),
            dt: self.dt,
        };
        (take(0, cut), take(cut, n))
    }
}

/// Per-channel affine scaling `x_norm = (x - mean) / std`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaling {
    pub fn identity(n: usize) -> Self {
        Scaling {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        }
    }

    /// Fit mean and standard deviation per channel (rows of `m`).
    /// Constant channels get unit scale so normalisation stays invertible.
    pub fn fit(m: &Matrix) -> Self {
        let n = m.cols().max(1) as f64;
        let mut mean = vec![0.0; m.rows()];
        let mut std = vec![0.0; m.rows()];
        for r in 0..m.rows() {
            let mu = m.row(r).iter().sum::<f64>() / n;
            let var = m.row(r).iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
            mean[r] = mu;
            std[r] = if var > 0.0 { fmath::sqrt(var) } else { 1.0 };
        }
        Scaling { mean, std }
    }

    /// Per-channel means with one pooled standard deviation shared by all
    /// channels. Keeps channel sums meaningful after normalisation.
    pub fn fit_pooled(m: &Matrix) -> Self {
        let mut s = Scaling::fit(m);
        let pooled = fmath::sqrt(
            s.std.iter().map(|v| v * v).sum::<f64>() / s.std.len().max(1) as f64,
        );
        let pooled = if pooled > 0.0 { pooled } else { 1.0 };
        for v in &mut s.std {
            *v = pooled;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.mean.len());
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn denormalize(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.mean.len());
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| m + s * v)
            .collect()
    }

    /// Normalise every column of a channels-by-samples matrix.
    pub fn normalize_matrix(&self, m: &Matrix) -> Matrix {
        Matrix::from_fn(m.rows(), m.cols(), |r, c| {
            (m.get(r, c) - self.mean[r]) / self.std[r]
        })
    }
}

/// Lifting map `g : R^{n_x} -> R^{n_g}`.
#[derive(Debug, Clone)]
pub enum Lifting {
    /// g(x) = x
    Identity { n_x: usize },
    /// g(x) = [x; 1]
    AffineAppend { n_x: usize },
    /// g(x) = enc(x), optionally augmented with the physical state to
    /// g(x) = [x; enc(x)].
    Encoder { net: Network, augment_state: bool },
}

impl Lifting {
    pub fn n_x(&self) -> usize {
        match self {
            Lifting::Identity { n_x } | Lifting::AffineAppend { n_x } => *n_x,
            Lifting::Encoder { net, .. } => net.input_dim(),
        }
    }

    pub fn n_g(&self) -> usize {
        match self {
            Lifting::Identity { n_x } => *n_x,
            Lifting::AffineAppend { n_x } => n_x + 1,
            Lifting::Encoder { net, augment_state } => {
                net.output_dim() + if *augment_state { net.input_dim() } else { 0 }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n_x());
        match self {
            Lifting::Identity { .. } => x.to_vec(),
            Lifting::AffineAppend { .. } => {
                let mut g = x.to_vec();
                g.push(1.0);
                g
            }
            Lifting::Encoder { net, augment_state } => {
                let enc = net.eval(x);
                if *augment_state {
                    let mut g = x.to_vec();
                    g.extend_from_slice(&enc);
                    g
                } else {
                    enc
                }
            }
        }
    }
}

/// Snapshot matrices of the EDMD regression: `G_u` stacks lifted states over
/// inputs at step k, `G₊` the lifted states one step ahead, `X₊` the selected
/// output channels one step ahead. `X_now` carries the current-state variant
/// used by the reconstruction-style C fit.
#[derive(Debug, Clone)]
pub struct SnapshotMatrices {
    pub g_u: Matrix,
    pub g_plus: Matrix,
    pub x_plus: Matrix,
    pub x_now: Matrix,
}

/// Assemble the snapshot matrices for a dataset under a lifting, keeping the
/// state channels listed in `output_channels` as regression targets.
pub fn build_snapshot_matrices(
    d: &Dataset,
    lift: &Lifting,
    output_channels: &[usize],
) -> Result<SnapshotMatrices, KoopmanError> {
    d.validate()?;
    let n_o = d.n_samples();
    let n_g = lift.n_g();
    let n_u = d.n_inputs();
    let needed = n_g + n_u + 1;
    if n_o < needed {
        return Err(KoopmanError::InsufficientSnapshots { needed, got: n_o });
    }
    let cols = n_o - 1;
    let mut g_u = Matrix::zeros(n_g + n_u, cols);
    let mut g_plus = Matrix::zeros(n_g, cols);
    let mut x_plus = Matrix::zeros(output_channels.len(), cols);
    let mut x_now = Matrix::zeros(output_channels.len(), cols);

    let mut g_next = lift.eval(&d.state_at(0));
    for k in 0..cols {
        let g_here = g_next;
        g_next = lift.eval(&d.state_at(k + 1));
        for (i, v) in g_here.iter().enumerate() {
            g_u.set(i, k, *v);
        }
        for i in 0..n_u {
            g_u.set(n_g + i, k, d.inputs().get(i, k));
        }
        for (i, v) in g_next.iter().enumerate() {
            g_plus.set(i, k, *v);
        }
        for (row, &ch) in output_channels.iter().enumerate() {
            x_plus.set(row, k, d.states().get(ch, k + 1));
            x_now.set(row, k, d.states().get(ch, k));
        }
    }
    Ok(SnapshotMatrices {
        g_u,
        g_plus,
        x_plus,
        x_now,
    })
}

#[derive(Debug, Clone)]
pub struct EdmdOptions {
    pub pinv_tol: f64,
    /// Refit with Tikhonov regularisation when cond(G_u) exceeds this.
    pub ridge_cond_threshold: f64,
    /// Fit C against current states instead of the one-step-ahead targets.
    pub fit_c_against_current: bool,
}

impl Default for EdmdOptions {
    fn default() -> Self {
        EdmdOptions {
            pinv_tol: DEFAULT_PINV_TOL,
            ridge_cond_threshold: 1e10,
            fit_c_against_current: false,
        }
    }
}

/// Result of an EDMD fit, with the residuals and conditioning diagnostics.
#[derive(Debug, Clone)]
pub struct EdmdFit {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    /// ‖G₊ − K G_u‖_F
    pub k_residual: f64,
    /// ‖X₊ − C G₊‖_F
    pub c_residual: f64,
    pub cond_g_u: f64,
    pub ridge_used: bool,
}

/// Least-squares fit of `K` from `min ‖G₊ − K G_u‖_F`, with a Tikhonov
/// fallback when `G_u` is badly conditioned. Returns `(K, cond, ridge_used)`.
pub fn fit_koopman_matrix(
    g_u: &Matrix,
    g_plus: &Matrix,
    opts: &EdmdOptions,
) -> Result<(Matrix, f64, bool), KoopmanError> {
    let cond = condition_number(g_u);
    if cond > opts.ridge_cond_threshold {
        // Tikhonov: K = G₊ G_uᵀ (G_u G_uᵀ + λI)⁻¹
        let gg = g_u.matmul(&g_u.transpose());
        let mut trace = 0.0;
        for i in 0..gg.rows() {
            trace += gg.get(i, i);
        }
        let lambda = 1e-8 * trace / gg.rows() as f64;
        let mut reg = gg;
        for i in 0..reg.rows() {
            let v = reg.get(i, i) + lambda;
            reg.set(i, i, v);
        }
        let inv = pinv(&reg, opts.pinv_tol)?;
        Ok((g_plus.matmul(&g_u.transpose()).matmul(&inv), cond, true))
    } else {
        Ok((g_plus.matmul(&pinv(g_u, opts.pinv_tol)?), cond, false))
    }
}

/// Least-squares Koopman fit `K = [A B] = G₊ G_u†`, `C = X₊ G₊†`.
pub fn edmd_fit(m: &SnapshotMatrices, opts: &EdmdOptions) -> Result<EdmdFit, KoopmanError> {
    let n_g = m.g_plus.rows();
    let n_u = m.g_u.rows() - n_g;
    let (k, cond, ridge_used) = fit_koopman_matrix(&m.g_u, &m.g_plus, opts)?;

    let a = k.block(0, 0, n_g, n_g);
    let b = k.block(0, n_g, n_g, n_u);
    let k_residual = m.g_plus.sub(&k.matmul(&m.g_u)).frobenius_norm();

    let (c, c_residual) = if opts.fit_c_against_current {
        // x_k ≈ C g(x_k): targets and lifted states at the same index.
        let g_now = m.g_u.block(0, 0, n_g, m.g_u.cols());
        let c = m.x_now.matmul(&pinv(&g_now, opts.pinv_tol)?);
        let res = m.x_now.sub(&c.matmul(&g_now)).frobenius_norm();
        (c, res)
    } else {
        let c = m.x_plus.matmul(&pinv(&m.g_plus, opts.pinv_tol)?);
        let res = m.x_plus.sub(&c.matmul(&m.g_plus)).frobenius_norm();
        (c, res)
    };

    Ok(EdmdFit {
        a,
        b,
        c,
        k_residual,
        c_residual,
        cond_g_u: cond,
        ridge_used,
    })
}

/// Snapshot matrices `G_u = [enc(x_k); u_k]` and `G₊ = enc(x_{k+1})` from
/// already-lifted state columns `E` and inputs `U` with matching sample
/// counts. Used by the bi-level trainer, which re-lifts the whole dataset
/// with the current encoder every epoch.
pub fn snapshots_from_lifted(e: &Matrix, u: &Matrix) -> (Matrix, Matrix) {
    assert_eq!(e.cols(), u.cols());
    let cols = e.cols() - 1;
    let n_g = e.rows();
    let n_u = u.rows();
    let mut g_u = Matrix::zeros(n_g + n_u, cols);
    g_u.set_block(0, 0, &e.block(0, 0, n_g, cols));
    g_u.set_block(n_g, 0, &u.block(0, 0, n_u, cols));
    let g_plus = e.block(0, 1, n_g, cols);
    (g_u, g_plus)
}

/// Lifted linear predictor `g⁺ = A g + B u`, `y = C g` with its lifting map
/// and the channel scalings used at identification time.
///
/// `encode`/`step`/`decode` operate on physical quantities; the matrices act
/// in the (possibly normalised) lifted space.
#[derive(Debug, Clone)]
pub struct KoopmanModel {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub lifting: Lifting,
    pub state_scaling: Scaling,
    pub input_scaling: Scaling,
    pub output_scaling: Scaling,
    pub output_names: Vec<String>,
    pub dt: f64,
    /// Estimated spectral radius of A, recorded at fit time as a diagnostic.
    pub spectral_radius: f64,
}

impl KoopmanModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: Matrix,
        b: Matrix,
        c: Matrix,
        lifting: Lifting,
        state_scaling: Scaling,
        input_scaling: Scaling,
        output_scaling: Scaling,
        output_names: Vec<String>,
        dt: f64,
    ) -> Self {
        let n_g = lifting.n_g();
        assert_eq!((a.rows(), a.cols()), (n_g, n_g));
        assert_eq!(b.rows(), n_g);
        assert_eq!(c.cols(), n_g);
        assert_eq!(c.rows(), output_names.len());
        assert_eq!(output_scaling.len(), c.rows());
        let spectral_radius = estimate_spectral_radius(&a);
        KoopmanModel {
            a,
            b,
            c,
            lifting,
            state_scaling,
            input_scaling,
            output_scaling,
            output_names,
            dt,
            spectral_radius,
        }
    }

    pub fn n_g(&self) -> usize {
        self.a.rows()
    }

    pub fn n_u(&self) -> usize {
        self.b.cols()
    }

    pub fn n_y(&self) -> usize {
        self.c.rows()
    }

    /// Normalise a physical state and lift it.
    pub fn encode(&self, x_phys: &[f64]) -> Vec<f64> {
        self.lifting.eval(&self.state_scaling.normalize(x_phys))
    }

    /// One step of the lifted dynamics under a physical input.
    pub fn step(&self, g: &[f64], u_phys: &[f64]) -> Vec<f64> {
        let u = self.input_scaling.normalize(u_phys);
        let mut g_next = self.a.matvec(g);
        let bu = self.b.matvec(&u);
        for (gi, bi) in g_next.iter_mut().zip(&bu) {
            *gi += bi;
        }
        g_next
    }

    /// Map a lifted state to physical outputs.
    pub fn decode(&self, g: &[f64]) -> Vec<f64> {
        self.output_scaling.denormalize(&self.c.matvec(g))
    }
}

fn estimate_spectral_radius(a: &Matrix) -> f64 {
    let n = a.rows();
    if n == 0 {
        return 0.0;
    }
    let mut v = vec![0.0; n];
    for (i, vi) in v.iter_mut().enumerate() {
        *vi = 1.0 + 0.01 * i as f64;
    }
    let norm = crate::numerics::norm2(&v);
    for vi in &mut v {
        *vi /= norm;
    }
    let mut rho = 0.0;
    for _ in 0..200 {
        let w = a.matvec(&v);
        let nw = crate::numerics::norm2(&w);
        if nw <= 1e-300 {
            return 0.0;
        }
        rho = nw;
        v = w;
        for vi in &mut v {
            *vi /= nw;
        }
    }
    rho
}

/// Iterated rollout of the lifted predictor: returns the lifted trajectory
/// `ĝ(k+1..k+N)` and the decoded physical outputs at the same indices.
///
/// In debug builds the iterated recursion is cross-checked against the
/// powered form `ĝ(k+i) = Aⁱ g₀ + Σ A^{i-1-j} B u_j`.
pub fn rollout(
    model: &KoopmanModel,
    g0: &[f64],
    inputs: &[Vec<f64>],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut lifted = Vec::with_capacity(inputs.len());
    let mut decoded = Vec::with_capacity(inputs.len());
    let mut g = g0.to_vec();
    for u in inputs {
        g = model.step(&g, u);
        decoded.push(model.decode(&g));
        lifted.push(g.clone());
    }
    #[cfg(debug_assertions)]
    {
        let powered = rollout_powered(model, g0, inputs);
        for (it, pw) in lifted.iter().zip(&powered) {
            for (a, b) in it.iter().zip(pw) {
                debug_assert!(
                    (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                    "iterated and powered rollout disagree"
                );
            }
        }
    }
    (lifted, decoded)
}

/// Powered-form rollout; kept separate so tests can cross-check the
/// iterated recursion against it.
pub fn rollout_powered(model: &KoopmanModel, g0: &[f64], inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = inputs.len();
    let mut out = Vec::with_capacity(n);
    let mut a_pow = Matrix::identity(model.n_g());
    // Precompute A^i g0 progressively and accumulate the forced response.
    let mut forced: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (i, u) in inputs.iter().enumerate() {
        let bu = model.b.matvec(&model.input_scaling.normalize(u));
        // advance all previous forced terms by A
        for f in forced.iter_mut() {
            *f = model.a.matvec(f);
        }
        forced.push(bu);
        a_pow = model.a.matmul(&a_pow);
        let mut g = a_pow.matvec(g0);
        for f in &forced {
            for (gi, fi) in g.iter_mut().zip(f) {
                *gi += fi;
            }
        }
        let _ = i;
        out.push(g);
    }
    out
}

/// Variance accounted for, in percent:
/// `max(0, 1 - var(y - ŷ)/var(y)) * 100`.
pub fn vaf(y: &[f64], yhat: &[f64]) -> Result<f64, KoopmanError> {
    if y.len() != yhat.len() || y.len() < 2 {
        return Err(KoopmanError::LengthMismatch);
    }
    let n = y.len() as f64;
    let mean_y = y.iter().sum::<f64>() / n;
    let var_y = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum::<f64>() / n;
    if var_y <= 0.0 {
        return Err(KoopmanError::ConstantReference);
    }
    let errs: Vec<f64> = y.iter().zip(yhat).map(|(a, b)| a - b).collect();
    let mean_e = errs.iter().sum::<f64>() / n;
    let var_e = errs.iter().map(|v| (v - mean_e) * (v - mean_e)).sum::<f64>() / n;
    Ok((1.0 - var_e / var_y).max(0.0) * 100.0)
}
