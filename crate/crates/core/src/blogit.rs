//! Bayesian logistic regression with independent `N(0, v0)` priors on every coefficient.
//!
//! The posterior mode is found by damped Newton iterations. The log marginal likelihood is
//! approximated around the mode: by the plain Laplace formula, by Laplace with the
//! next-order correction from the third and fourth derivatives of the log likelihood, or by
//! adaptive Gauss-Hermite quadrature on the Laplace-scaled grid. The latter two are much
//! closer to the exact evidence when there are only a few rows per parameter.

use std::fmt;
use std::io::Write;
use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use thiserror::Error;

use crate::cohort::FeatureView;

pub const DEFAULT_PRIOR_VARIANCE: f64 = 1000.0;
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 100;
const MAX_HALVINGS: usize = 20;
const JITTER: f64 = 1e-8;
/// Gauss-Hermite nodes per dimension.
pub const QUADRATURE_NODES: usize = 9;
/// Largest coefficient count evaluated by quadrature; larger models use [`EvidenceApprox::Corrected`].
pub const QUADRATURE_MAX_DIM: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogitError {
    #[error("row has {got} values, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Hessian is not positive definite even after jitter; design may be collinear")]
    SingularHessian,
    #[error("Newton iterations did not converge after {iterations} steps (gradient max-norm {gradient_norm:e})")]
    NonConvergence { iterations: usize, gradient_norm: f64 },
    #[error("feature {0:?} is not in the view")]
    UnknownFeature(String),
    #[error("duplicate feature {0:?} in model")]
    DuplicateFeature(String),
    #[error("prior variance must be positive and finite, got {0}")]
    InvalidPrior(f64),
    #[error("cannot fit a model to an empty view")]
    EmptyView,
}

/// How the log marginal likelihood is approximated at the posterior mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvidenceApprox {
    /// `log p(y, beta*) + (d/2) log 2pi - (1/2) log det H`.
    Laplace,
    /// Laplace with the next-order correction term, `+ ln(1 + C)`.
    Corrected,
    /// Adaptive Gauss-Hermite quadrature centred at the mode and scaled by the inverse
    /// Hessian, for models with at most [`QUADRATURE_MAX_DIM`] coefficients; `Corrected`
    /// otherwise.
    #[default]
    GaussHermite,
}

impl fmt::Display for EvidenceApprox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvidenceApprox::Laplace => "laplace",
            EvidenceApprox::Corrected => "corrected",
            EvidenceApprox::GaussHermite => "gauss-hermite",
        })
    }
}

impl std::str::FromStr for EvidenceApprox {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "laplace" => Ok(EvidenceApprox::Laplace),
            "corrected" => Ok(EvidenceApprox::Corrected),
            "gauss-hermite" => Ok(EvidenceApprox::GaussHermite),
            other => Err(format!("unknown evidence approximation {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitModel {
    /// Slope features; empty means intercept only.
    pub feature_names: Vec<String>,
    pub prior_variance: f64,
    pub evidence: EvidenceApprox,
}

impl LogitModel {
    pub fn new(feature_names: Vec<String>, prior_variance: f64) -> Self {
        LogitModel { feature_names, prior_variance, evidence: EvidenceApprox::default() }
    }

    pub fn intercept_only(prior_variance: f64) -> Self {
        Self::new(Vec::new(), prior_variance)
    }

    pub fn with_evidence(mut self, evidence: EvidenceApprox) -> Self {
        self.evidence = evidence;
        self
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len() + 1
    }
}

/// Design matrix (leading column of ones), labels and prior for one model on one view.
#[derive(Debug, Clone)]
pub struct LogitProblem {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub prior_variance: f64,
}

impl LogitProblem {
    pub fn new(view: &FeatureView, model: &LogitModel) -> Result<Self, LogitError> {
        if !(model.prior_variance > 0.0 && model.prior_variance.is_finite()) {
            return Err(LogitError::InvalidPrior(model.prior_variance));
        }
        if view.is_empty() {
            return Err(LogitError::EmptyView);
        }
        let cols = resolve_columns(view, &model.feature_names)?;
        let n = view.n_rows();
        let x = DMatrix::from_fn(n, cols.len() + 1, |i, j| if j == 0 { 1.0 } else { view.row(i)[cols[j - 1]] });
        let y = DVector::from_iterator(n, view.labels().iter().map(|&l| if l { 1.0 } else { 0.0 }));
        Ok(LogitProblem { x, y, prior_variance: model.prior_variance })
    }

    /// Builds a problem from raw rows (without the intercept column).
    pub fn from_rows(rows: &[Vec<f64>], labels: &[bool], prior_variance: f64) -> Result<Self, LogitError> {
        if rows.is_empty() {
            return Err(LogitError::EmptyView);
        }
        let p = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != p) {
            return Err(LogitError::DimensionMismatch { expected: p, got: r.len() });
        }
        if labels.len() != rows.len() {
            return Err(LogitError::DimensionMismatch { expected: rows.len(), got: labels.len() });
        }
        if !(prior_variance > 0.0 && prior_variance.is_finite()) {
            return Err(LogitError::InvalidPrior(prior_variance));
        }
        let x = DMatrix::from_fn(rows.len(), p + 1, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
        let y = DVector::from_iterator(labels.len(), labels.iter().map(|&l| if l { 1.0 } else { 0.0 }));
        Ok(LogitProblem { x, y, prior_variance })
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Log of likelihood times prior density, `sum(y*eta - softplus(eta)) + log N(beta | 0, v0 I)`.
    pub fn log_joint(&self, beta: &DVector<f64>) -> f64 {
        let eta = &self.x * beta;
        let ll: f64 = eta.iter().zip(self.y.iter()).map(|(&e, &y)| y * e - softplus(e)).sum();
        let d = beta.len() as f64;
        ll - beta.norm_squared() / (2.0 * self.prior_variance)
            - 0.5 * d * (2.0 * std::f64::consts::PI * self.prior_variance).ln()
    }

    pub fn gradient(&self, beta: &DVector<f64>) -> DVector<f64> {
        let eta = &self.x * beta;
        let resid = DVector::from_iterator(eta.len(), eta.iter().zip(self.y.iter()).map(|(&e, &y)| y - sigmoid(e)));
        self.x.tr_mul(&resid) - beta / self.prior_variance
    }

    /// Negative Hessian of the log joint, `X^T W X + I / v0`.
    pub fn neg_hessian(&self, beta: &DVector<f64>) -> DMatrix<f64> {
        let eta = &self.x * beta;
        let mut xw = self.x.clone();
        for (i, &e) in eta.iter().enumerate() {
            let p = sigmoid(e);
            xw.row_mut(i).scale_mut(p * (1.0 - p));
        }
        let mut h = self.x.tr_mul(&xw);
        for j in 0..h.nrows() {
            h[(j, j)] += 1.0 / self.prior_variance;
        }
        h
    }
}

fn resolve_columns(view: &FeatureView, names: &[String]) -> Result<Vec<usize>, LogitError> {
    let mut cols = Vec::with_capacity(names.len());
    for (k, name) in names.iter().enumerate() {
        if names[..k].contains(name) {
            return Err(LogitError::DuplicateFeature(name.clone()));
        }
        cols.push(view.column_index(name).ok_or_else(|| LogitError::UnknownFeature(name.clone()))?);
    }
    Ok(cols)
}

pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn factor(h: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>, LogitError> {
    if let Some(c) = Cholesky::new(h.clone()) {
        return Ok(c);
    }
    let jittered = h + DMatrix::identity(h.nrows(), h.ncols()) * JITTER;
    Cholesky::new(jittered).ok_or(LogitError::SingularHessian)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitFit {
    pub feature_names: Vec<String>,
    /// Intercept first.
    pub beta_mode: DVector<f64>,
    /// Negative Hessian of the log posterior at the mode.
    pub hessian_at_mode: DMatrix<f64>,
    pub lml: f64,
    pub converged: bool,
    pub n_iterations: usize,
}

impl LogitFit {
    /// Assembles a fit from known parts, e.g. to score a fixed coefficient vector.
    pub fn from_parts(
        feature_names: Vec<String>,
        beta_mode: Vec<f64>,
        hessian_at_mode: DMatrix<f64>,
        lml: f64,
    ) -> Self {
        LogitFit {
            feature_names,
            beta_mode: DVector::from_vec(beta_mode),
            hessian_at_mode,
            lml,
            converged: true,
            n_iterations: 0,
        }
    }

    pub fn ensure_converged(&self) -> Result<&Self, LogitError> {
        if self.converged {
            Ok(self)
        } else {
            Err(LogitError::NonConvergence { iterations: self.n_iterations, gradient_norm: f64::NAN })
        }
    }

    /// Posterior standard deviations from the inverse Hessian diagonal, intercept first.
    pub fn std_devs(&self) -> Result<Vec<f64>, LogitError> {
        let chol = factor(&self.hessian_at_mode)?;
        let inv = chol.inverse();
        Ok((0..inv.nrows()).map(|j| inv[(j, j)].max(0.0).sqrt()).collect())
    }
}

/// Posterior mode by damped Newton from zero, with the evidence per `model.evidence`.
///
/// A fit that reaches the iteration cap is returned with `converged == false`.
pub fn fit_map(view: &FeatureView, model: &LogitModel) -> Result<LogitFit, LogitError> {
    let problem = LogitProblem::new(view, model)?;
    fit_problem(&problem, model.feature_names.clone(), model.evidence)
}

pub fn fit_problem(
    problem: &LogitProblem,
    feature_names: Vec<String>,
    evidence: EvidenceApprox,
) -> Result<LogitFit, LogitError> {
    let d = problem.dim();
    let mut beta = DVector::zeros(d);
    let mut obj = problem.log_joint(&beta);
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let grad = problem.gradient(&beta);
        if grad.amax() < GRADIENT_TOLERANCE {
            converged = true;
            break;
        }
        if iterations == MAX_ITERATIONS {
            break;
        }
        iterations += 1;
        let h = problem.neg_hessian(&beta);
        let step = factor(&h)?.solve(&grad);
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = &beta + &step * scale;
            let trial_obj = problem.log_joint(&trial);
            if trial_obj >= obj - 1e-10 * obj.abs().max(1.0) {
                beta = trial;
                obj = trial_obj;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let hessian = problem.neg_hessian(&beta);
    let lml = evidence_at(problem, &beta, &hessian, evidence)?;
    Ok(LogitFit { feature_names, beta_mode: beta, hessian_at_mode: hessian, lml, converged, n_iterations: iterations })
}

/// Log marginal likelihood of `model` on `view` approximated at `fit`'s mode.
pub fn laplace_lml(fit: &LogitFit, view: &FeatureView, model: &LogitModel) -> Result<f64, LogitError> {
    let problem = LogitProblem::new(view, model)?;
    if fit.beta_mode.len() != problem.dim() {
        return Err(LogitError::DimensionMismatch { expected: problem.dim(), got: fit.beta_mode.len() });
    }
    evidence_at(&problem, &fit.beta_mode, &fit.hessian_at_mode, model.evidence)
}

pub fn evidence_at(
    problem: &LogitProblem,
    beta: &DVector<f64>,
    hessian: &DMatrix<f64>,
    approx: EvidenceApprox,
) -> Result<f64, LogitError> {
    let chol = factor(hessian)?;
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let d = beta.len() as f64;
    let plain = problem.log_joint(beta) + 0.5 * d * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det;
    if approx == EvidenceApprox::Laplace {
        return Ok(plain);
    }
    let sigma = chol.inverse();
    match approx {
        EvidenceApprox::GaussHermite if beta.len() <= QUADRATURE_MAX_DIM => {
            Ok(gauss_hermite(problem, beta, &sigma, log_det))
        }
        _ => Ok(corrected(problem, beta, &sigma, plain)),
    }
}

fn corrected(problem: &LogitProblem, beta: &DVector<f64>, sigma: &DMatrix<f64>, plain: f64) -> f64 {
    let r = &problem.x * sigma * problem.x.transpose();
    let eta = &problem.x * beta;
    let n = eta.len();
    let w: Vec<f64> = eta
        .iter()
        .map(|&e| {
            let p = sigmoid(e);
            p * (1.0 - p)
        })
        .collect();
    let c: Vec<f64> = eta.iter().zip(&w).map(|(&e, &w)| w * (1.0 - 2.0 * sigmoid(e))).collect();
    let q: Vec<f64> = (0..n).map(|i| r[(i, i)]).collect();
    let t4: f64 = (0..n).map(|i| w[i] * (1.0 - 6.0 * w[i]) * q[i] * q[i]).sum();
    let mut t3a = 0.0;
    let mut t3b = 0.0;
    for i in 0..n {
        for j in 0..n {
            let cc = c[i] * c[j];
            let rij = r[(i, j)];
            t3a += cc * q[i] * q[j] * rij;
            t3b += cc * rij * rij * rij;
        }
    }
    let correction = -t4 / 8.0 + t3a / 8.0 + t3b / 12.0;
    if 1.0 + correction > 0.0 {
        plain + correction.ln_1p()
    } else {
        plain
    }
}

/// Nodes and weights for `integral g(z) exp(-z^2 / 2) dz` by the Golub-Welsch method.
pub fn hermite_rule(k: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(k, k, |i, j| if i.abs_diff(j) == 1 { (i.max(j) as f64).sqrt() } else { 0.0 });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let v = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], (2.0 * std::f64::consts::PI).sqrt() * v * v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn default_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| hermite_rule(QUADRATURE_NODES))
}

/// `ln integral exp(log_joint)` over `beta = mode + L z` with `L L^T = H^-1`.
fn gauss_hermite(problem: &LogitProblem, mode: &DVector<f64>, sigma: &DMatrix<f64>, log_det_h: f64) -> f64 {
    let (nodes, weights) = default_rule();
    let d = mode.len();
    let l = Cholesky::new(sigma.clone())
        .map_or_else(|| DMatrix::from_diagonal(&sigma.diagonal().map(f64::sqrt)), |c| c.l());
    let peak = problem.log_joint(mode);
    let k = nodes.len();
    let mut index = vec![0usize; d];
    let mut z = DVector::zeros(d);
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for (j, &i) in index.iter().enumerate() {
            z[j] = nodes[i];
            w *= weights[i];
        }
        let beta = mode + &l * &z;
        total += w * (problem.log_joint(&beta) - peak + 0.5 * z.norm_squared()).exp();
        let mut j = 0;
        while j < d {
            index[j] += 1;
            if index[j] < k {
                break;
            }
            index[j] = 0;
            j += 1;
        }
        if j == d {
            break;
        }
    }
    peak + total.ln() - 0.5 * log_det_h
}

/// Plug-in probability at the mode for a row of the fit's own features.
pub fn predict_prob(fit: &LogitFit, row: &[f64]) -> Result<f64, LogitError> {
    let expected = fit.beta_mode.len() - 1;
    if row.len() != expected {
        return Err(LogitError::DimensionMismatch { expected, got: row.len() });
    }
    let eta = fit.beta_mode[0] + row.iter().zip(fit.beta_mode.iter().skip(1)).map(|(x, b)| x * b).sum::<f64>();
    Ok(sigmoid(eta).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OddsRatioEstimate {
    pub feature: String,
    pub or_point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// `exp(beta_j)` with 95% interval `exp(beta_j +- 1.96 sd_j)` for each slope.
pub fn odds_ratios(fit: &LogitFit) -> Result<Vec<OddsRatioEstimate>, LogitError> {
    let sd = fit.std_devs()?;
    Ok(fit
        .feature_names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let b = fit.beta_mode[k + 1];
            let s = sd[k + 1];
            OddsRatioEstimate {
                feature: name.clone(),
                or_point: b.exp(),
                ci_low: (b - 1.96 * s).exp(),
                ci_high: (b + 1.96 * s).exp(),
            }
        })
        .collect())
}

/// Writes `feature,beta,sd,OR,ci_low,ci_high` rows (intercept first) and a final `lml` line.
pub fn write_fit_summary<W: Write>(fit: &LogitFit, mut w: W) -> Result<(), std::io::Error> {
    let sd = fit.std_devs().map_err(|e| std::io::Error::other(e.to_string()))?;
    writeln!(w, "feature,beta,sd,OR,ci_low,ci_high")?;
    let names = std::iter::once("(intercept)").chain(fit.feature_names.iter().map(String::as_str));
    for (k, name) in names.enumerate() {
        let b = fit.beta_mode[k];
        let s = sd[k];
        writeln!(w, "{name},{b},{s},{},{},{}", b.exp(), (b - 1.96 * s).exp(), (b + 1.96 * s).exp())?;
    }
    writeln!(w, "lml,{}", fit.lml)?;
    Ok(())
}
