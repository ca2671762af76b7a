//! Distributed softmax regression.
//!
//! Bob's class labels enter only through per-class one-hot indicator planes;
//! each moment `sum_i 1[y_i = c_j] x_im` is one digit-series inner product
//! over the counting protocol. The convex solve that turns moments into
//! coefficients runs entirely at Alice, and classifier quality comes back as
//! a Hamming-distance estimate between one-hot encodings.

use nalgebra::{DMatrix, DVector};

use crate::bits::BitVector;
use crate::binexp::{expand_with_exponent, global_exponent};
use crate::counting::CountingConfig;
use crate::error::{Error, Result};
use crate::lsf::{error_budget, estimate_digit_series, CallRecord, DesignMatrix, FitConfig};
use crate::twoparty::{estimate_hamming, CommLedger, EstimateReport, PartyData, Role};

/// The q class identifiers, sorted and unique.
#[derive(Clone, Debug)]
pub struct LabelSet {
    classes: Vec<String>,
}

impl LabelSet {
    pub fn new(mut classes: Vec<String>) -> Result<Self> {
        classes.sort();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::Usage(format!(
                "need at least 2 classes, got {}",
                classes.len()
            )));
        }
        Ok(LabelSet { classes })
    }

    /// Distinct labels observed in the data, in sorted order.
    pub fn from_labels(labels: &[String]) -> Result<Self> {
        LabelSet::new(labels.to_vec())
    }

    pub fn q(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.classes
            .binary_search_by(|c| c.as_str().cmp(label))
            .map_err(|_| Error::UnknownLabel(label.to_string()))
    }

    pub fn indices_of(&self, labels: &[String]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index_of(l)).collect()
    }
}

/// One-hot encoding of class indices into an `N*q`-bit string; bit `i*q + j`
/// is set when point `i` carries class `j`. Exactly `N` ones.
pub fn one_hot_bits(label_indices: &[usize], q: usize) -> Result<BitVector> {
    if q < 2 {
        return Err(Error::Usage(format!("need at least 2 classes, got {q}")));
    }
    let mut bits = BitVector::zeros(label_indices.len() * q);
    for (i, &c) in label_indices.iter().enumerate() {
        if c >= q {
            return Err(Error::UnknownLabel(format!(
                "class index {c} out of range 0..{q}"
            )));
        }
        bits.set(i * q + c, true);
    }
    Ok(bits)
}

/// Indicator plane of one class as reals, Bob-local.
fn indicator_reals(label_indices: &[usize], class: usize) -> Vec<f64> {
    label_indices
        .iter()
        .map(|&c| if c == class { 1.0 } else { 0.0 })
        .collect()
}

/// Estimated class-conditional attribute sums `g_j = sum_i 1[y_i=c_j] x_i`.
#[derive(Clone, Debug)]
pub struct ClassMoments {
    /// M x q matrix of estimated sums.
    pub g_hat: DMatrix<f64>,
    /// Standard-error claim per entry, in sum units (`N * eps`).
    pub per_entry_std: f64,
    pub ledger: CommLedger,
    pub calls: Vec<CallRecord>,
}

/// Classical reference moments, used by the oracle path and diagnostics.
pub fn exact_class_moments(
    x: &DesignMatrix,
    label_indices: &[usize],
    q: usize,
) -> Result<DMatrix<f64>> {
    if label_indices.len() != x.n_rows() {
        return Err(Error::Usage("label count does not match design rows".into()));
    }
    let mut g = DMatrix::zeros(x.n_params(), q);
    for (i, &c) in label_indices.iter().enumerate() {
        if c >= q {
            return Err(Error::UnknownLabel(format!(
                "class index {c} out of range 0..{q}"
            )));
        }
        for m in 0..x.n_params() {
            g[(m, c)] += x.matrix()[(i, m)];
        }
    }
    Ok(g)
}

/// Runs the q * M moment-estimation pipelines at per-entry standard error
/// `eps` (on the mean; the sums carry a claim of `N * eps`).
pub fn estimate_class_moments(
    alice_x: &DesignMatrix,
    bob_labels: &[usize],
    q: usize,
    eps: f64,
    cfg: &FitConfig,
) -> Result<ClassMoments> {
    let n = alice_x.n_rows();
    if bob_labels.len() != n {
        return Err(Error::Usage("label count does not match design rows".into()));
    }
    if q < 2 {
        return Err(Error::Usage(format!("need at least 2 classes, got {q}")));
    }
    if bob_labels.iter().any(|&c| c >= q) {
        return Err(Error::UnknownLabel("class index out of range".into()));
    }
    let m_params = alice_x.n_params();
    let mut g_hat = DMatrix::zeros(m_params, q);
    let mut ledger = CommLedger::new();
    let mut calls = Vec::new();
    for m in 0..m_params {
        let column = alice_x.column(m);
        let u = global_exponent(column.iter());
        let budget = error_budget(eps, u, 0, 1)?;
        let digits = budget
            .digit_count()
            .min(cfg.digits_cap.unwrap_or(u32::MAX))
            .max(1);
        let xexp = expand_with_exponent(&column, digits, u)?;
        for j in 0..q {
            let indicator = indicator_reals(bob_labels, j);
            let yexp = expand_with_exponent(&indicator, digits, 0)?;
            let mean = estimate_digit_series(
                &xexp,
                &yexp,
                &budget,
                j * m_params + m,
                cfg,
                &mut ledger,
                &mut calls,
            )?;
            g_hat[(m, j)] = mean * n as f64;
        }
    }
    Ok(ClassMoments {
        g_hat,
        per_entry_std: eps * n as f64,
        ledger,
        calls,
    })
}

/// Fitted coefficients, one column per class, gauge column pinned to zero.
#[derive(Clone, Debug)]
pub struct CoefficientMatrix {
    pub lambda: DMatrix<f64>,
    /// Column held at zero to fix the softmax over-parameterization.
    pub gauge_column: usize,
    pub iterations: u32,
    pub grad_norm: f64,
    /// Set when the parameter norm diverged (separable data) and the solve
    /// stopped at the norm bound instead of the gradient tolerance.
    pub bounded_norm_stop: bool,
}

struct Surrogate<'a> {
    x: &'a DMatrix<f64>,
    g_free: DMatrix<f64>, // M x (q-1)
    q: usize,
}

impl Surrogate<'_> {
    /// Class probabilities for every data point at `theta` (free columns).
    fn probabilities(&self, theta: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.x.nrows();
        let mut p = DMatrix::zeros(n, self.q);
        let logits_free = self.x * theta; // N x (q-1)
        for i in 0..n {
            let mut zmax = 0f64; // gauge logit
            for j in 0..self.q - 1 {
                zmax = zmax.max(logits_free[(i, j)]);
            }
            let mut denom = (-zmax).exp(); // gauge class
            for j in 0..self.q - 1 {
                let e = (logits_free[(i, j)] - zmax).exp();
                p[(i, j)] = e;
                denom += e;
            }
            p[(i, self.q - 1)] = (-zmax).exp();
            for j in 0..self.q {
                p[(i, j)] /= denom;
            }
        }
        p
    }

    /// `sum_i log sum_k exp(z_ik) - sum_j theta_j . g_j`; stationarity is the
    /// moment-matching condition with the estimated moments on the right.
    fn value(&self, theta: &DMatrix<f64>) -> f64 {
        let n = self.x.nrows();
        let logits_free = self.x * theta;
        let mut total = 0.0;
        for i in 0..n {
            let mut zmax = 0f64;
            for j in 0..self.q - 1 {
                zmax = zmax.max(logits_free[(i, j)]);
            }
            let mut sum = (-zmax).exp();
            for j in 0..self.q - 1 {
                sum += (logits_free[(i, j)] - zmax).exp();
            }
            total += zmax + sum.ln();
        }
        for j in 0..self.q - 1 {
            for m in 0..self.x.ncols() {
                total -= theta[(m, j)] * self.g_free[(m, j)];
            }
        }
        total
    }

    /// Gradient w.r.t. the free columns: model moments minus target moments.
    fn gradient(&self, theta: &DMatrix<f64>) -> DMatrix<f64> {
        let p = self.probabilities(theta);
        let mut grad = DMatrix::zeros(self.x.ncols(), self.q - 1);
        for j in 0..self.q - 1 {
            for m in 0..self.x.ncols() {
                let mut s = 0.0;
                for i in 0..self.x.nrows() {
                    s += self.x[(i, m)] * p[(i, j)];
                }
                grad[(m, j)] = s - self.g_free[(m, j)];
            }
        }
        grad
    }

    /// Dense Hessian over the flattened free parameters (column-major).
    fn hessian(&self, theta: &DMatrix<f64>) -> DMatrix<f64> {
        let p = self.probabilities(theta);
        let m = self.x.ncols();
        let d = m * (self.q - 1);
        let mut h = DMatrix::zeros(d, d);
        for i in 0..self.x.nrows() {
            for j in 0..self.q - 1 {
                for k in 0..self.q - 1 {
                    let w = p[(i, j)] * (f64::from(u8::from(j == k)) - p[(i, k)]);
                    if w == 0.0 {
                        continue;
                    }
                    for a in 0..m {
                        let xa = self.x[(i, a)] * w;
                        if xa == 0.0 {
                            continue;
                        }
                        for b in 0..m {
                            h[(j * m + a, k * m + b)] += xa * self.x[(i, b)];
                        }
                    }
                }
            }
        }
        h
    }
}

const NORM_BOUND: f64 = 30.0;
const MAX_ITERATIONS: u32 = 500;

/// Minimizes the moment-matching surrogate by damped Newton iterations with
/// the gauge column pinned to zero. Converges when the gradient max-norm
/// drops to `tol`; separable data stops at a parameter-norm bound with the
/// `bounded_norm_stop` flag set.
pub fn solve_softmax(
    alice_x: &DesignMatrix,
    g_hat: &DMatrix<f64>,
    tol: f64,
) -> Result<CoefficientMatrix> {
    let m = alice_x.n_params();
    let q = g_hat.ncols();
    if g_hat.nrows() != m {
        return Err(Error::Usage("moment matrix row count != parameter count".into()));
    }
    if q < 2 {
        return Err(Error::Usage("need at least 2 classes".into()));
    }
    let surrogate = Surrogate {
        x: alice_x.matrix(),
        g_free: g_hat.columns(0, q - 1).into_owned(),
        q,
    };
    let mut theta = DMatrix::zeros(m, q - 1);
    let mut grad = surrogate.gradient(&theta);
    let mut grad_norm = grad.amax();
    let mut bounded = false;
    let mut iterations = 0;
    while grad_norm > tol && iterations < MAX_ITERATIONS {
        iterations += 1;
        let h = surrogate.hessian(&theta);
        let d = m * (q - 1);
        let g_flat = DVector::from_iterator(d, grad.iter().cloned());
        let diag_scale = (h.trace() / d as f64).max(1e-12);
        let mut step: Option<DVector<f64>> = None;
        for &mu in &[0.0, 1e-10, 1e-6, 1e-2] {
            let damped = &h + DMatrix::identity(d, d) * (mu * diag_scale);
            if let Some(chol) = damped.cholesky() {
                step = Some(chol.solve(&(-&g_flat)));
                break;
            }
        }
        // Near-singular Hessian: fall back to a scaled gradient step.
        let step = step.unwrap_or_else(|| -&g_flat / diag_scale);

        let descent: f64 = g_flat.dot(&step);
        let f0 = surrogate.value(&theta);
        let mut alpha = 1.0;
        let step_mat = DMatrix::from_iterator(m, q - 1, step.iter().cloned());
        loop {
            let candidate = &theta + &step_mat * alpha;
            if surrogate.value(&candidate) <= f0 + 1e-4 * alpha * descent {
                theta = candidate;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                theta += &step_mat * alpha;
                break;
            }
        }
        grad = surrogate.gradient(&theta);
        grad_norm = grad.amax();
        if theta.amax() > NORM_BOUND {
            bounded = true;
            break;
        }
    }
    if grad_norm > tol && !bounded {
        return Err(Error::NoConvergence {
            iterations,
            grad_norm,
        });
    }
    let mut lambda = DMatrix::zeros(m, q);
    for j in 0..q - 1 {
        for a in 0..m {
            lambda[(a, j)] = theta[(a, j)];
        }
    }
    Ok(CoefficientMatrix {
        lambda,
        gauge_column: q - 1,
        iterations,
        grad_norm,
        bounded_norm_stop: bounded,
    })
}

/// Deterministic argmax prediction; ties break toward the lowest class index.
pub fn predict_labels(alice_x: &DesignMatrix, coeffs: &CoefficientMatrix) -> Vec<usize> {
    let scores = alice_x.matrix() * &coeffs.lambda;
    (0..scores.nrows())
        .map(|i| {
            let mut best = 0usize;
            for j in 1..scores.ncols() {
                if scores[(i, j)] > scores[(i, best)] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Classifier-quality report from the Hamming estimator.
#[derive(Clone, Debug)]
pub struct AccuracyReport {
    /// `1 - d_hat / (2N)`: each misclassification flips two one-hot bits.
    pub accuracy: f64,
    pub d_hat: f64,
    pub report: EstimateReport,
}

/// Estimates classification accuracy on labeled data by comparing one-hot
/// encodings of Alice's predictions and Bob's labels over the Hamming
/// channel.
pub fn evaluate_accuracy(
    alice_x: &DesignMatrix,
    coeffs: &CoefficientMatrix,
    bob_labels: &[usize],
    q: usize,
    cfg: &CountingConfig,
) -> Result<AccuracyReport> {
    let n = alice_x.n_rows();
    if bob_labels.len() != n {
        return Err(Error::Usage("label count does not match design rows".into()));
    }
    let predictions = predict_labels(alice_x, coeffs);
    let alice = PartyData::new(Role::Alice, one_hot_bits(&predictions, q)?);
    let bob = PartyData::new(Role::Bob, one_hot_bits(bob_labels, q)?);
    let report = estimate_hamming(&alice, &bob, cfg)?;
    let d_hat = report.value;
    Ok(AccuracyReport {
        accuracy: 1.0 - d_hat / (2.0 * n as f64),
        d_hat,
        report,
    })
}
