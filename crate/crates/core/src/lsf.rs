//! Distributed least-squares fitting over the counting protocol.
//!
//! Alice holds the design matrix and computes `N X^+` locally; each fitted
//! parameter is a real inner product with Bob's target vector, estimated one
//! binary-digit convolution order at a time. The per-order error allocation
//! `eps_jr = eps * 0.449 * 2^{2r/3} / (2^{u+v} (r+1)^{2/3})` makes the
//! reconstructed parameter error about `eps`; orders with `eps_jr >= 1` are
//! dropped.
//!
//! Each (order, sign-pair) term runs `repeats` independent counting calls and
//! keeps the median. Single-shot phase estimation has heavy tails (the
//! measured register lands k grid points off with probability ~ 1/k^2), so
//! the raw per-call standard deviation scales as 2^{-t/2}, not the 2^{-t} of
//! the width rule; a small odd number of repeats restores the budgeted
//! accuracy at a constant-factor communication cost.

use nalgebra::{DMatrix, DVector};

use crate::binexp::{
    expand_with_exponent, extended_x_vector, extended_y_vector, global_exponent, live_blocks_x,
    live_blocks_y, FixedPointExpansion, Sign,
};
use crate::counting::{register_width_for_error, Engine};
use crate::error::{Error, Result};
use crate::rng;
use crate::twoparty::{channel_counting_run, CommLedger, Direction, LedgerDetail};

/// Alice's N x M design matrix.
///
/// Attribute-style construction prepends the intercept column of ones; the
/// general constructor accepts any full-column-rank candidate (basis-function
/// designs are evaluated locally and passed in whole). Rank is checked when
/// the matrix is factorized.
#[derive(Clone, Debug)]
pub struct DesignMatrix {
    m: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::Usage("design matrix must be non-empty".into()));
        }
        if m.nrows() < m.ncols() {
            return Err(Error::Usage(format!(
                "design needs at least as many rows as columns, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix entry".into()));
        }
        Ok(DesignMatrix { m })
    }

    /// Rows of attribute values; an intercept column of ones is prepended.
    pub fn from_attribute_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Usage("no data rows".into()));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Usage("ragged attribute rows".into()));
        }
        let mut m = DMatrix::zeros(rows.len(), width + 1);
        for (i, row) in rows.iter().enumerate() {
            m[(i, 0)] = 1.0;
            for (j, &v) in row.iter().enumerate() {
                m[(i, j + 1)] = v;
            }
        }
        DesignMatrix::new(m)
    }

    pub fn n_rows(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.m.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.m.column(j).iter().cloned().collect()
    }
}

/// `N X^+` via thin QR; fails on rank deficiency and verifies the
/// pseudoinverse residual `||X^+ X - I||_max < 1e-10`.
pub fn pseudoinverse_rows(x: &DesignMatrix) -> Result<DMatrix<f64>> {
    let a = x.matrix();
    let qr = a.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let mut max_diag = 0f64;
    let mut min_diag = f64::INFINITY;
    for i in 0..r.nrows() {
        let d = r[(i, i)].abs();
        max_diag = max_diag.max(d);
        min_diag = min_diag.min(d);
    }
    if max_diag == 0.0 || min_diag < 1e-12 * max_diag {
        return Err(Error::SingularDesign(format!(
            "rank-deficient design (R diagonal ratio {:e})",
            if max_diag == 0.0 { 0.0 } else { min_diag / max_diag }
        )));
    }
    let pinv = r
        .solve_upper_triangular(&q.transpose())
        .ok_or_else(|| Error::SingularDesign("triangular solve failed".into()))?;
    let residual = &pinv * a - DMatrix::<f64>::identity(x.n_params(), x.n_params());
    let max_res = residual.iter().fold(0f64, |acc, v| acc.max(v.abs()));
    if max_res > 1e-10 {
        return Err(Error::SingularDesign(format!(
            "pseudoinverse residual {max_res:e} exceeds 1e-10"
        )));
    }
    Ok(pinv * x.n_rows() as f64)
}

/// Infinity-norm condition number of `A = X^T X / N`. Reporting only; the
/// protocol path never consumes it.
pub fn condition_number_inf(x: &DesignMatrix) -> Result<f64> {
    let a = x.matrix().transpose() * x.matrix() / x.n_rows() as f64;
    let inv = a
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularDesign("X^T X is singular".into()))?;
    let norm_inf = |m: &DMatrix<f64>| {
        (0..m.nrows())
            .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0f64, f64::max)
    };
    Ok(norm_inf(&a) * norm_inf(&inv))
}

/// The per-order standard-error allocation.
pub fn eps_allocation(eps: f64, u: i32, v: i32, r: u32) -> f64 {
    eps * 0.449 * 2f64.powf(2.0 * r as f64 / 3.0)
        / (2f64.powi(u + v) * ((r + 1) as f64).powf(2.0 / 3.0))
}

#[derive(Clone, Copy, Debug)]
pub struct BudgetEntry {
    pub r: u32,
    pub eps_jr: f64,
    /// Register width per counting call; each of the four sign-pair calls is
    /// allocated `eps_jr / 2` so their quadrature sum meets `eps_jr`.
    pub t_jr: u32,
    pub dropped: bool,
}

/// Per-order error budget. The allocation does not depend on the parameter
/// index, so entries are stored once and fanned out per parameter on export.
#[derive(Clone, Debug)]
pub struct BudgetTable {
    pub eps: f64,
    pub u: i32,
    pub v: i32,
    pub params: usize,
    entries: Vec<BudgetEntry>,
    r_max: u32,
}

impl BudgetTable {
    pub fn entries(&self) -> &[BudgetEntry] {
        &self.entries
    }

    pub fn undropped(&self) -> impl Iterator<Item = &BudgetEntry> {
        self.entries.iter().filter(|e| !e.dropped)
    }

    pub fn r_max(&self) -> u32 {
        self.r_max
    }

    /// Digits needed so that no kept order ever queries a missing plane.
    pub fn digit_count(&self) -> u32 {
        self.r_max + 1
    }

    /// CSV rows `j,r,eps_jr,t_jr,dropped` for every parameter.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,r,eps_jr,t_jr,dropped\n");
        for j in 0..self.params {
            for e in &self.entries {
                out.push_str(&format!(
                    "{j},{},{},{},{}\n",
                    e.r, e.eps_jr, e.t_jr, e.dropped
                ));
            }
        }
        out
    }
}

/// Builds the budget: allocation per order, drop rule `eps_jr >= 1`, register
/// widths from the counting error formula at worst-case fraction.
pub fn error_budget(eps: f64, u: i32, v: i32, params: usize) -> Result<BudgetTable> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    if params == 0 {
        return Err(Error::Usage("budget needs at least one parameter".into()));
    }
    let eps_j0 = eps_allocation(eps, u, v, 0);
    if eps_j0 >= 1.0 {
        return Err(Error::EmptyBudget { eps, eps_j0 });
    }
    let mut entries = Vec::new();
    let mut r = 0u32;
    loop {
        let e = eps_allocation(eps, u, v, r);
        let dropped = e >= 1.0;
        let t_jr = if dropped {
            0
        } else {
            register_width_for_error(e / 2.0, None)?
        };
        entries.push(BudgetEntry {
            r,
            eps_jr: e,
            t_jr,
            dropped,
        });
        if dropped && r > 0 {
            break;
        }
        if r > 512 {
            return Err(Error::Domain(
                "budget did not terminate within 512 orders".into(),
            ));
        }
        r += 1;
    }
    let r_max = entries.iter().filter(|e| !e.dropped). last().map(|e| e.r).unwrap();
    Ok(BudgetTable {
        eps,
        u,
        v,
        params,
        entries,
        r_max,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct FitConfig {
    pub engine: Engine,
    pub seed: u64,
    /// Counting runs per (order, sign-pair) term; the median is kept. Ignored
    /// by the oracle engine.
    pub repeats: u32,
    /// Optional cap on the expansion digit count.
    pub digits_cap: Option<u32>,
}

impl FitConfig {
    pub fn new(engine: Engine, seed: u64) -> Self {
        FitConfig {
            engine,
            seed,
            repeats: 5,
            digits_cap: None,
        }
    }

    pub fn with_repeats(mut self, repeats: u32) -> Self {
        self.repeats = repeats.max(1);
        self
    }

    pub fn with_digits_cap(mut self, cap: u32) -> Self {
        self.digits_cap = Some(cap.max(1));
        self
    }
}

/// One (parameter, order, sign-pair) protocol step.
#[derive(Clone, Copy, Debug)]
pub struct CallRecord {
    pub param: usize,
    pub r: u32,
    pub sign_x: Sign,
    pub sign_y: Sign,
    pub t: u32,
    pub index_width: u32,
    /// Counting runs executed; 0 when the term was resolved classically.
    pub runs: u32,
    pub skipped: bool,
}

impl CallRecord {
    pub fn qubit_cost(&self) -> u64 {
        u64::from(self.runs) * crate::twoparty::counting_qubit_cost(self.index_width, self.t)
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite estimates"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Estimates `(1/N) sum_i X_i Y_i` from the two digit expansions, one
/// counting pipeline per (order, sign-pair).
///
/// Before any quantum traffic, the parties exchange their live-block masks
/// ((r+1) bits out, 1 bit back); a term whose block supports do not intersect
/// is an exact zero and costs no qubits.
pub(crate) fn estimate_digit_series(
    xexp: &FixedPointExpansion,
    yexp: &FixedPointExpansion,
    budget: &BudgetTable,
    param: usize,
    cfg: &FitConfig,
    ledger: &mut CommLedger,
    calls: &mut Vec<CallRecord>,
) -> Result<f64> {
    let n_items = xexp.len();
    let prefactor = 2f64.powi(xexp.exponent() + yexp.exponent());
    let mut total = 0.0;
    for entry in budget.undropped() {
        let r = entry.r;
        let weight = prefactor * 2f64.powi(-(r as i32)) * (r + 1) as f64;
        let mut f_r = 0.0;
        for (pair_idx, (sx, sy)) in Sign::BOTH
            .iter()
            .flat_map(|&sx| Sign::BOTH.iter().map(move |&sy| (sx, sy)))
            .enumerate()
        {
            // Mask exchange: Alice's live blocks travel to Bob, who answers
            // go / skip after intersecting with his own.
            let mask_x = live_blocks_x(xexp, r, sx);
            let mask_y = live_blocks_y(yexp, r, sy);
            ledger.log(Direction::AliceToBob, 0, u64::from(r) + 1);
            ledger.log(Direction::BobToAlice, 0, 1);
            if mask_x & mask_y == 0 {
                calls.push(CallRecord {
                    param,
                    r,
                    sign_x: sx,
                    sign_y: sy,
                    t: entry.t_jr,
                    index_width: 0,
                    runs: 0,
                    skipped: true,
                });
                continue;
            }
            let a = extended_x_vector(xexp, r, sx);
            let b = extended_y_vector(yexp, r, sy);
            let live_len = a.len() as f64;
            let runs = if matches!(cfg.engine, Engine::Oracle) {
                1
            } else {
                cfg.repeats.max(1)
            };
            let mut estimates = Vec::with_capacity(runs as usize);
            let mut index_width = 0;
            for rep in 0..runs {
                let mut stream_rng = rng::stream(
                    cfg.seed,
                    &[param as u64, u64::from(r), pair_idx as u64, u64::from(rep)],
                );
                let est = channel_counting_run(
                    &a,
                    &b,
                    crate::counting::OracleKind::Correlation,
                    entry.t_jr,
                    cfg.engine,
                    &mut stream_rng,
                    ledger,
                    LedgerDetail::Aggregate,
                )?;
                index_width = est.index_width;
                let rescale = 2f64.powi(est.index_width as i32) / live_len;
                estimates.push(est.p_raw * rescale);
            }
            calls.push(CallRecord {
                param,
                r,
                sign_x: sx,
                sign_y: sy,
                t: entry.t_jr,
                index_width,
                runs,
                skipped: false,
            });
            f_r += sx.factor() * sy.factor() * median(estimates);
        }
        total += weight * f_r;
    }
    debug_assert_eq!(n_items, yexp.len());
    Ok(total)
}

/// Fit result: parameters, budget, ledger, per-call records, diagnostics.
#[derive(Clone, Debug)]
pub struct FitReport {
    pub lambda_hat: Vec<f64>,
    pub budget: BudgetTable,
    pub ledger: CommLedger,
    pub calls: Vec<CallRecord>,
    pub engine: Engine,
    pub seed: u64,
    pub repeats: u32,
    pub digits: u32,
    pub x_exponent: i32,
    pub y_exponent: i32,
    pub kappa: f64,
    /// Closed-form protocol cost prediction at unit repeats; the realized
    /// ledger additionally carries the sign-pair split and the repeats.
    pub predicted_qubits: f64,
    /// Classical solution, available only under the oracle engine.
    pub oracle_lambda: Option<Vec<f64>>,
}

impl FitReport {
    /// Re-derives the quantum total from the call records.
    pub fn qubits_from_calls(&self) -> u64 {
        self.calls.iter().map(CallRecord::qubit_cost).sum()
    }
}

/// Distributed least-squares fit of `X lambda ~ y` to standard error `eps`
/// per component.
pub fn fit_least_squares(
    alice_x: &DesignMatrix,
    bob_y: &[f64],
    eps: f64,
    cfg: &FitConfig,
) -> Result<FitReport> {
    let n = alice_x.n_rows();
    let m = alice_x.n_params();
    if bob_y.len() != n {
        return Err(Error::Usage(format!(
            "target length {} does not match {} design rows",
            bob_y.len(),
            n
        )));
    }
    if bob_y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("target entry".into()));
    }
    let w = pseudoinverse_rows(alice_x)?;
    let u = global_exponent(w.iter());
    let v = global_exponent(bob_y.iter());
    let budget = error_budget(eps, u, v, m)?;
    let digits = budget
        .digit_count()
        .min(cfg.digits_cap.unwrap_or(u32::MAX))
        .max(1);

    let mut ledger = CommLedger::new();
    // Top exponents cross as one 64-bit classical value each way.
    ledger.log(Direction::AliceToBob, 0, 64);
    ledger.log(Direction::BobToAlice, 0, 64);

    let yexp = expand_with_exponent(bob_y, digits, v)?;
    let mut calls = Vec::new();
    let mut lambda_hat = Vec::with_capacity(m);
    for j in 0..m {
        let row: Vec<f64> = w.row(j).iter().cloned().collect();
        let xexp = expand_with_exponent(&row, digits, u)?;
        lambda_hat.push(estimate_digit_series(
            &xexp,
            &yexp,
            &budget,
            j,
            cfg,
            &mut ledger,
            &mut calls,
        )?);
    }

    let kappa = condition_number_inf(alice_x)?;
    let oracle_lambda = if matches!(cfg.engine, Engine::Oracle) {
        let y = DVector::from_column_slice(bob_y);
        Some(((&w * y) / n as f64).iter().cloned().collect())
    } else {
        None
    };
    Ok(FitReport {
        lambda_hat,
        budget,
        ledger,
        calls,
        engine: cfg.engine,
        seed: cfg.seed,
        repeats: cfg.repeats,
        digits,
        x_exponent: u,
        y_exponent: v,
        kappa,
        predicted_qubits: predicted_complexity(n, m, eps, u, v),
        oracle_lambda,
    })
}

/// Mean-square-error evaluation of a fitted model.
#[derive(Clone, Debug)]
pub struct MseReport {
    pub mse: f64,
    pub cross_mean: f64,
    pub mean_y_sq: f64,
    pub mean_prediction_sq: f64,
    pub budget: BudgetTable,
    pub ledger: CommLedger,
    pub calls: Vec<CallRecord>,
}

/// `E = (1/N) ||y - X lambda||^2`, decomposed as
/// `mean(y^2) + mean(yhat^2) - 2 mean(y yhat)`. The squared means are local
/// scalars exchanged classically; only the cross term uses the estimator
/// pipeline, at standard error `eps`.
pub fn evaluate_mse(
    alice_x: &DesignMatrix,
    lambda_hat: &[f64],
    bob_y: &[f64],
    eps: f64,
    cfg: &FitConfig,
) -> Result<MseReport> {
    let n = alice_x.n_rows();
    if lambda_hat.len() != alice_x.n_params() {
        return Err(Error::Usage("parameter count mismatch".into()));
    }
    if bob_y.len() != n {
        return Err(Error::Usage("target length mismatch".into()));
    }
    let y_hat: Vec<f64> = (alice_x.matrix() * DVector::from_column_slice(lambda_hat))
        .iter()
        .cloned()
        .collect();
    let mean_prediction_sq = y_hat.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let mean_y_sq = bob_y.iter().map(|v| v * v).sum::<f64>() / n as f64;

    let u = global_exponent(y_hat.iter());
    let v = global_exponent(bob_y.iter());
    let budget = error_budget(eps, u, v, 1)?;
    let digits = budget
        .digit_count()
        .min(cfg.digits_cap.unwrap_or(u32::MAX))
        .max(1);
    let xexp = expand_with_exponent(&y_hat, digits, u)?;
    let yexp = expand_with_exponent(bob_y, digits, v)?;

    let mut ledger = CommLedger::new();
    ledger.log(Direction::AliceToBob, 0, 64); // mean(yhat^2)
    ledger.log(Direction::BobToAlice, 0, 64); // mean(y^2)
    let mut calls = Vec::new();
    let cross_mean =
        estimate_digit_series(&xexp, &yexp, &budget, 0, cfg, &mut ledger, &mut calls)?;
    Ok(MseReport {
        mse: mean_y_sq + mean_prediction_sq - 2.0 * cross_mean,
        cross_mean,
        mean_y_sq,
        mean_prediction_sq,
        budget,
        ledger,
        calls,
    })
}

/// Closed-form protocol cost: `11.026 * 2^{v+1} * 2^u * M * log2(N) / eps`.
pub fn predicted_complexity(n_points: usize, params: usize, eps: f64, u: i32, v: i32) -> f64 {
    11.026 * 2f64.powi(v + 1) * 2f64.powi(u) * params as f64 * (n_points as f64).log2() / eps
}

/// Order-of-magnitude comparator for `2^{u+v}`: `kappa |y|_inf / ||X||_inf`.
pub fn exponent_order_estimate(kappa: f64, y_inf: f64, x_inf: f64) -> f64 {
    kappa * y_inf / x_inf
}
