//! Reference masked scaled-dot-product attention in `f64`, with analytic
//! gradients and a central-difference checker.
//!
//! Masked entries are left out of the softmax sum entirely, so their weights
//! are exactly zero.

use ndarray::{Array2, Axis};
use thiserror::Error;

use crate::rst_attention::AttentionMaskSet;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("mask row {0} has no attendable position")]
    EmptyMaskRow(usize),
    #[error("{0} contains a non-finite value")]
    NonFinite(&'static str),
    #[error("matrix line {line}: {reason}")]
    Format { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionInputs {
    /// n × d
    pub queries: Array2<f64>,
    /// m × d
    pub keys: Array2<f64>,
    /// m × v
    pub values: Array2<f64>,
    /// n × m, true = attendable
    pub mask: Array2<bool>,
}

impl AttentionInputs {
    pub fn new(
        queries: Array2<f64>,
        keys: Array2<f64>,
        values: Array2<f64>,
        mask: Array2<bool>,
    ) -> Result<Self, KernelError> {
        let inp = AttentionInputs { queries, keys, values, mask };
        inp.check()?;
        Ok(inp)
    }

    pub fn mask_from_set(set: &AttentionMaskSet) -> Array2<bool> {
        Array2::from_shape_fn((set.rows(), set.cols()), |(i, j)| set.get(i, j))
    }

    pub fn check(&self) -> Result<(), KernelError> {
        let (n, d) = self.queries.dim();
        let (m, dk) = self.keys.dim();
        let (mv, _) = self.values.dim();
        if d != dk {
            return Err(KernelError::ShapeMismatch(format!("queries are {n}x{d} but keys are {m}x{dk}")));
        }
        if d == 0 {
            return Err(KernelError::ShapeMismatch("feature dimension is zero".into()));
        }
        if mv != m {
            return Err(KernelError::ShapeMismatch(format!("{m} keys but {mv} values")));
        }
        if self.mask.dim() != (n, m) {
            return Err(KernelError::ShapeMismatch(format!("mask is {:?}, expected ({n}, {m})", self.mask.dim())));
        }
        for (name, a) in [("queries", &self.queries), ("keys", &self.keys), ("values", &self.values)] {
            if a.iter().any(|x| !x.is_finite()) {
                return Err(KernelError::NonFinite(name));
            }
        }
        for (i, row) in self.mask.axis_iter(Axis(0)).enumerate() {
            if !row.iter().any(|b| *b) {
                return Err(KernelError::EmptyMaskRow(i));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    /// n × v
    pub output: Array2<f64>,
    /// n × m
    pub weights: Array2<f64>,
}

fn scale(d: usize) -> f64 {
    1.0 / (d as f64).sqrt()
}

fn masked_softmax_rows(scores: &Array2<f64>, mask: &Array2<bool>) -> Array2<f64> {
    let mut weights = Array2::zeros(scores.dim());
    for ((s_row, m_row), mut w_row) in
        scores.axis_iter(Axis(0)).zip(mask.axis_iter(Axis(0))).zip(weights.axis_iter_mut(Axis(0)))
    {
        let max =
            s_row.iter().zip(m_row.iter()).filter(|(_, m)| **m).map(|(s, _)| *s).fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for ((w, s), m) in w_row.iter_mut().zip(s_row.iter()).zip(m_row.iter()) {
            if *m {
                *w = (s - max).exp();
                sum += *w;
            }
        }
        w_row.mapv_inplace(|w| w / sum);
    }
    weights
}

pub fn masked_attention(inp: &AttentionInputs) -> Result<AttentionOutput, KernelError> {
    inp.check()?;
    let scores = inp.queries.dot(&inp.keys.t()) * scale(inp.queries.ncols());
    let weights = masked_softmax_rows(&scores, &inp.mask);
    let output = weights.dot(&inp.values);
    Ok(AttentionOutput { output, weights })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub queries: Array2<f64>,
    pub keys: Array2<f64>,
    pub values: Array2<f64>,
}

/// Analytic gradients of `sum(upstream ⊙ output)`.
pub fn backward(inp: &AttentionInputs, fwd: &AttentionOutput, upstream: &Array2<f64>) -> Gradients {
    let w = &fwd.weights;
    let grad_values = w.t().dot(upstream);
    let grad_weights = upstream.dot(&inp.values.t());
    // softmax backward, row by row; masked weights are zero so they pass nothing
    let row_dot = (&grad_weights * w).sum_axis(Axis(1)).insert_axis(Axis(1));
    let grad_scores = w * &(&grad_weights - &row_dot) * scale(inp.queries.ncols());
    Gradients { queries: grad_scores.dot(&inp.keys), keys: grad_scores.t().dot(&inp.queries), values: grad_values }
}

pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub analytic: Gradients,
    pub numeric: Gradients,
    pub max_rel_error: f64,
}

/// Relative error `|a - n| / max(|a|, |n|, 1e-8)`; the floor keeps entries
/// that are zero in both from dividing by zero.
pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

fn loss(inp: &AttentionInputs) -> f64 {
    masked_attention(inp).expect("inputs were checked").output.sum()
}

#[derive(Clone, Copy)]
enum Operand {
    Queries,
    Keys,
    Values,
}

fn operand(inp: &mut AttentionInputs, which: Operand) -> &mut Array2<f64> {
    match which {
        Operand::Queries => &mut inp.queries,
        Operand::Keys => &mut inp.keys,
        Operand::Values => &mut inp.values,
    }
}

fn numeric_grad(inp: &AttentionInputs, which: Operand) -> Array2<f64> {
    let mut work = inp.clone();
    let dim = operand(&mut work, which).dim();
    let mut grad = Array2::zeros(dim);
    for i in 0..dim.0 {
        for j in 0..dim.1 {
            let orig = operand(&mut work, which)[[i, j]];
            operand(&mut work, which)[[i, j]] = orig + FD_STEP;
            let plus = loss(&work);
            operand(&mut work, which)[[i, j]] = orig - FD_STEP;
            let minus = loss(&work);
            operand(&mut work, which)[[i, j]] = orig;
            grad[[i, j]] = (plus - minus) / (2.0 * FD_STEP);
        }
    }
    grad
}

/// Compares analytic gradients of `sum(output)` with respect to Q, K and V
/// against central differences.
pub fn gradient_check(inp: &AttentionInputs) -> Result<GradCheckReport, KernelError> {
    let fwd = masked_attention(inp)?;
    let upstream = Array2::ones(fwd.output.dim());
    let analytic = backward(inp, &fwd, &upstream);
    let numeric = Gradients {
        queries: numeric_grad(inp, Operand::Queries),
        keys: numeric_grad(inp, Operand::Keys),
        values: numeric_grad(inp, Operand::Values),
    };
    let mut max_rel_error: f64 = 0.0;
    for (a, n) in
        [(&analytic.queries, &numeric.queries), (&analytic.keys, &numeric.keys), (&analytic.values, &numeric.values)]
    {
        for (x, y) in a.iter().zip(n.iter()) {
            max_rel_error = max_rel_error.max(relative_error(*x, *y));
        }
    }
    Ok(GradCheckReport { analytic, numeric, max_rel_error })
}

/// Parses a whitespace-separated matrix, one row per line (`#` comments and
/// blank lines ignored).
pub fn parse_matrix(text: &str) -> Result<Array2<f64>, KernelError> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = raw
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| KernelError::Format { line, reason: format!("`{t}` is not a number") })
            })
            .collect::<Result<_, _>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(KernelError::Format {
                    line,
                    reason: format!("row has {} entries, expected {c}", row.len()),
                })
            }
            _ => {}
        }
        data.extend(row);
        rows += 1;
    }
    Array2::from_shape_vec((rows, cols.unwrap_or(0)), data)
        .map_err(|e| KernelError::Format { line: 0, reason: e.to_string() })
}

pub fn format_matrix(a: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in a.axis_iter(Axis(0)) {
        let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}
