//! Benchmark objectives with known smoothness constants.

use std::io::BufRead;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::power_iteration;
use crate::oracle::{Objective, SmoothnessConstants};
use crate::{DenseVector, Error, Result, RngStream};

/// Power iteration settings for smoothness constants.
pub const POWER_REL_TOL: f64 = 1e-6;
pub const POWER_MAX_ITER: usize = 10_000;

/// `f(x) = ‖Ax - b‖^2`, `∇f = 2 Aᵀ(Ax - b)`, `L = 2 λ_max(AᵀA)`.
#[derive(Clone, Debug)]
pub struct LeastSquaresProblem {
    a: DMatrix<f64>,
    b: DenseVector,
    planted: Option<DenseVector>,
    lipschitz: f64,
}

impl LeastSquaresProblem {
    pub fn new(a: DMatrix<f64>, b: DenseVector) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::usage(format!(
                "A has {} rows but b has length {}",
                a.nrows(),
                b.len()
            )));
        }
        if a.ncols() == 0 {
            return Err(Error::usage("least squares needs at least one column"));
        }
        let at = a.transpose();
        let lambda = power_iteration(a.ncols(), |v| &at * (&a * v), POWER_REL_TOL, POWER_MAX_ITER)?;
        Ok(Self {
            a,
            b,
            planted: None,
            lipschitz: 2.0 * lambda,
        })
    }

    /// Random `p x d` system with singular values log-uniform in
    /// `[1, condition]` (both ends included when `min(p, d) >= 2`), a random
    /// consistent right-hand side and its planted solution, so `f* = 0`.
    pub fn random(d: usize, p: usize, seed: u64, condition: f64) -> Result<Self> {
        if d == 0 || p == 0 {
            return Err(Error::usage("least squares needs p, d >= 1"));
        }
        if !(condition >= 1.0 && condition.is_finite()) {
            return Err(Error::usage(format!("condition target must be >= 1, got {condition}")));
        }
        let root = RngStream::new(seed);
        let u = random_orthogonal(p, &mut root.split(0));
        let v = random_orthogonal(d, &mut root.split(1));
        let m = p.min(d);
        let mut rng = root.split(2);
        let sv: Vec<f64> = (0..m)
            .map(|i| match i {
                0 => 1.0,
                1 => condition,
                _ => condition.powf(rng.uniform(0.0, 1.0)),
            })
            .collect();
        let mut a = DMatrix::<f64>::zeros(p, d);
        for (k, s) in sv.iter().enumerate() {
            a += *s * u.column(k) * v.column(k).transpose();
        }
        // Random right-hand side in range(A); the planted point is its
        // preimage, so every singular direction carries equal initial residual.
        let mut rng = root.split(3);
        let coords: Vec<f64> = (0..m).map(|_| rng.standard_normal() / (m as f64).sqrt()).collect();
        let mut planted = DenseVector::zeros(d);
        for k in 0..m {
            planted += (coords[k] / sv[k]) * v.column(k);
        }
        let b = &a * &planted;
        let mut problem = Self::new(a, b)?;
        problem.planted = Some(planted);
        Ok(problem)
    }

    /// Multiplies `A` and `b` by `c`: `L` scales by `c^2`, the solution set is unchanged.
    pub fn scaled(mut self, c: f64) -> Self {
        self.a *= c;
        self.b *= c;
        self.lipschitz *= c * c;
        self
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DenseVector {
        &self.b
    }

    pub fn planted_solution(&self) -> Option<&DenseVector> {
        self.planted.as_ref()
    }

    pub fn smoothness_constant(&self) -> f64 {
        self.lipschitz
    }
}

/// Haar-ish orthogonal matrix: QR of a Gaussian matrix with `diag(R) > 0`.
fn random_orthogonal(n: usize, rng: &mut RngStream) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.standard_normal());
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

impl Objective for LeastSquaresProblem {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        (&self.a * x - &self.b).norm_squared()
    }

    fn gradient(&self, x: &DenseVector) -> Option<DenseVector> {
        let residual = &self.a * x - &self.b;
        Some(2.0 * self.a.tr_mul(&residual))
    }

    fn constants(&self) -> SmoothnessConstants {
        // Quadratic: every higher-order Taylor remainder vanishes.
        SmoothnessConstants {
            lipschitz: Some(self.lipschitz),
            beta: None,
            l_beta: Some(0.0),
        }
    }
}

/// Compressed sparse rows. Column indices are 0-based and strictly increasing
/// within each row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_rows(rows: &[Vec<(usize, f64)>], cols: usize) -> Result<Self> {
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for (i, row) in rows.iter().enumerate() {
            for (k, &(c, v)) in row.iter().enumerate() {
                if c >= cols {
                    return Err(Error::usage(format!("row {i}: column {c} out of range {cols}")));
                }
                if k > 0 && c <= row[k - 1].0 {
                    return Err(Error::usage(format!("row {i}: column indices not increasing")));
                }
                col_indices.push(c);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows: Vec<Vec<(usize, f64)>> = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter(|&j| m[(i, j)] != 0.0)
                    .map(|j| (j, m[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_rows(&rows, m.ncols()).expect("dense rows are well formed")
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn mul_vec(&self, x: &DenseVector) -> DenseVector {
        DenseVector::from_fn(self.rows, |i, _| self.row(i).map(|(j, v)| v * x[j]).sum())
    }

    pub fn tr_mul_vec(&self, y: &DenseVector) -> DenseVector {
        let mut out = DenseVector::zeros(self.cols);
        for i in 0..self.rows {
            let yi = y[i];
            for (j, v) in self.row(i) {
                out[j] += v * yi;
            }
        }
        out
    }
}

/// `f(x) = (1/M) Σ log(1 + exp(-y_i (Ax)_i))`.
#[derive(Clone, Debug)]
pub struct LogisticRegressionProblem {
    a: SparseMatrix,
    y: Vec<f64>,
    lipschitz: f64,
}

impl LogisticRegressionProblem {
    pub fn new(a: SparseMatrix, y: Vec<f64>) -> Result<Self> {
        let (m, d) = a.shape();
        if m != y.len() {
            return Err(Error::usage(format!("{m} instances but {} labels", y.len())));
        }
        if m == 0 || d == 0 {
            return Err(Error::usage("logistic regression needs at least one instance and feature"));
        }
        if y.iter().any(|&l| l != 1.0 && l != -1.0) {
            return Err(Error::usage("labels must be -1 or +1"));
        }
        let lambda = power_iteration(d, |v| a.tr_mul_vec(&a.mul_vec(v)), POWER_REL_TOL, POWER_MAX_ITER)?;
        Ok(Self {
            a,
            y,
            lipschitz: lambda / (4.0 * m as f64),
        })
    }

    pub fn from_dataset(data: Dataset) -> Result<Self> {
        Self::new(data.matrix, data.labels)
    }

    /// `λ_max(AᵀA) / (4M)`: the largest Hessian eigenvalue bound, since each
    /// logistic loss has curvature at most 1/4.
    pub fn smoothness_constant(&self) -> f64 {
        self.lipschitz
    }

    pub fn instances(&self) -> usize {
        self.y.len()
    }

    /// True when `x` classifies every instance with a strictly positive margin,
    /// in which case the loss has no finite minimizer.
    pub fn separates(&self, x: &DenseVector) -> bool {
        let ax = self.a.mul_vec(x);
        ax.iter().zip(&self.y).all(|(v, y)| v * y > 0.0)
    }
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Objective for LogisticRegressionProblem {
    fn dim(&self) -> usize {
        self.a.shape().1
    }

    fn value(&self, x: &DenseVector) -> f64 {
        let ax = self.a.mul_vec(x);
        ax.iter().zip(&self.y).map(|(v, y)| softplus(-y * v)).sum::<f64>() / self.y.len() as f64
    }

    fn gradient(&self, x: &DenseVector) -> Option<DenseVector> {
        let ax = self.a.mul_vec(x);
        let w = DenseVector::from_fn(self.y.len(), |i, _| -self.y[i] * sigmoid(-self.y[i] * ax[i]));
        Some(self.a.tr_mul_vec(&w) / self.y.len() as f64)
    }

    fn constants(&self) -> SmoothnessConstants {
        SmoothnessConstants {
            lipschitz: Some(self.lipschitz),
            beta: None,
            l_beta: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    /// Number of instances.
    pub m: usize,
    /// Feature dimension (largest index seen).
    pub d: usize,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub matrix: SparseMatrix,
    /// `±1` labels; the smaller raw label maps to `-1`.
    pub labels: Vec<f64>,
    pub meta: DatasetMeta,
}

/// Parses LIBSVM text: one `<label> <idx>:<val> ...` record per non-empty line,
/// 1-based strictly increasing indices, exactly two distinct labels.
pub fn parse_libsvm<R: BufRead>(reader: R, name: &str, source: &str) -> Result<Dataset> {
    let mut raw_labels = Vec::new();
    let mut distinct: Vec<f64> = Vec::new();
    let mut rows = Vec::new();
    let mut d = 0usize;
    let mut last_line = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, message };
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(format!("label {label_tok:?} is not a number")))?;
        if !distinct.contains(&label) {
            if distinct.len() == 2 {
                return Err(err(format!(
                    "third distinct label {label}; only binary labels are supported"
                )));
            }
            distinct.push(label);
        }
        let mut row: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("feature {tok:?} is not <index>:<value>")))?;
            let i: usize = i
                .parse()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| err(format!("feature index {i:?} is not a positive integer")))?;
            let v: f64 = v
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| err(format!("feature value {v:?} is not a number")))?;
            if let Some(&(prev, _)) = row.last() {
                if i - 1 <= prev {
                    return Err(err(format!("feature index {i} does not increase (previous {})", prev + 1)));
                }
            }
            d = d.max(i);
            row.push((i - 1, v));
        }
        raw_labels.push(label);
        rows.push(row);
    }
    if distinct.len() != 2 {
        return Err(Error::Parse {
            line: last_line,
            message: format!("expected two distinct labels, found {}", distinct.len()),
        });
    }
    let low = distinct[0].min(distinct[1]);
    let labels = raw_labels.iter().map(|&l| if l == low { -1.0 } else { 1.0 }).collect();
    let matrix = SparseMatrix::from_rows(&rows, d).expect("parser validated rows");
    Ok(Dataset {
        meta: DatasetMeta {
            name: name.to_string(),
            m: rows.len(),
            d,
            source: source.to_string(),
        },
        matrix,
        labels,
    })
}

/// LIBSVM text for a dataset; values use the shortest exact decimal form.
pub fn write_libsvm(data: &Dataset) -> String {
    let mut out = String::new();
    for (i, label) in data.labels.iter().enumerate() {
        out.push_str(if *label > 0.0 { "+1" } else { "-1" });
        for (j, v) in data.matrix.row(i) {
            out.push_str(&format!(" {}:{}", j + 1, v));
        }
        out.push('\n');
    }
    out
}

/// Accurate minimizer from an exact-gradient method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub x: Vec<f64>,
    pub f_star: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warning: Option<String>,
}

/// Default iteration cap for [`solve_reference`].
pub const REFERENCE_MAX_ITER: usize = 1_000_000;

/// Nesterov's method with step `1/L` and gradient-based restarts, run until
/// `‖∇f‖ <= tol` or `max_iters`. Reaching the cap is reported through
/// `warning`, not as an error.
pub fn solve_reference<F: Objective + ?Sized>(
    objective: &F,
    x0: DenseVector,
    tol: f64,
    max_iters: usize,
) -> Result<ReferenceSolution> {
    let lipschitz = objective
        .constants()
        .lipschitz
        .ok_or_else(|| Error::usage("reference solve needs a known smoothness constant"))?;
    let grad = |x: &DenseVector| {
        objective
            .gradient(x)
            .ok_or_else(|| Error::usage("reference solve needs an analytic gradient"))
    };
    let step = 1.0 / lipschitz;
    let mut x = x0.clone();
    let mut y = x0;
    let mut t = 1.0f64;
    let mut g = grad(&y)?;
    let mut iterations = 0;
    let mut grad_norm = grad(&x)?.norm();
    while grad_norm > tol && iterations < max_iters {
        let x_next = &y - step * &g;
        // Restart momentum when it points uphill.
        if g.dot(&(&x_next - &x)) > 0.0 {
            t = 1.0;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &x_next + ((t - 1.0) / t_next) * (&x_next - &x);
        x = x_next;
        t = t_next;
        g = grad(&y)?;
        grad_norm = grad(&x)?.norm();
        iterations += 1;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                message: "reference solve diverged".into(),
                residual: grad_norm,
            });
        }
    }
    let converged = grad_norm <= tol;
    Ok(ReferenceSolution {
        f_star: objective.value(&x),
        x: x.iter().copied().collect(),
        grad_norm,
        iterations,
        converged,
        warning: (!converged).then(|| format!("iteration cap {max_iters} reached with ‖∇f‖ = {grad_norm:e}")),
    })
}

/// [`solve_reference`] plus a separability check: on linearly separable data
/// the loss has infimum 0 with no finite minimizer, which is flagged.
pub fn solve_reference_logistic(
    problem: &LogisticRegressionProblem,
    tol: f64,
    max_iters: usize,
) -> Result<ReferenceSolution> {
    let mut sol = solve_reference(problem, DenseVector::zeros(problem.dim()), tol, max_iters)?;
    if problem.separates(&DenseVector::from_column_slice(&sol.x)) {
        let note = "data is linearly separable: the infimum is not attained, f* is approximate";
        sol.warning = Some(match sol.warning.take() {
            Some(w) => format!("{note}; {w}"),
            None => note.to_string(),
        });
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::gradient_check;
    use proptest::prelude::*;

    fn random_points(d: usize, n: usize, seed: u64, scale: f64) -> Vec<DenseVector> {
        let mut rng = RngStream::new(seed);
        (0..n)
            .map(|_| DenseVector::from_fn(d, |_, _| scale * rng.standard_normal()))
            .collect()
    }

    fn small_logistic() -> LogisticRegressionProblem {
        let text = "+1 1:0.5 3:-2\n-1 2:1\n+1 1:-0.3 2:0.7 3:0.1\n-1 1:1.2 3:0.4\n";
        let data = parse_libsvm(text.as_bytes(), "tiny", "inline").unwrap();
        LogisticRegressionProblem::from_dataset(data).unwrap()
    }

    #[test]
    fn one_dimensional_planted_system() {
        let p = LeastSquaresProblem::random(1, 1, 3, 1.0).unwrap();
        assert_eq!(p.matrix()[(0, 0)].abs(), 1.0);
        let xs = p.planted_solution().unwrap().clone();
        assert_eq!(p.value(&xs), 0.0);
        let x = DenseVector::from_vec(vec![xs[0] + 0.5]);
        assert!((p.value(&x) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn generator_shape_and_spectrum() {
        let p = LeastSquaresProblem::random(64, 80, 1, 10.0).unwrap();
        assert_eq!(p.matrix().shape(), (80, 64));
        let sv = p.matrix().clone().singular_values();
        let (lo, hi) = (sv.min(), sv.max());
        assert!((lo - 1.0).abs() < 1e-9 && (hi - 10.0).abs() < 1e-9, "{lo} {hi}");
        assert!(p.value(p.planted_solution().unwrap()) < 1e-25);
        assert!((p.smoothness_constant() - 200.0).abs() < 200.0 * 1e-5);
    }

    #[test]
    fn least_squares_identity_constant_and_scaling() {
        let p = LeastSquaresProblem::new(DMatrix::identity(3, 3), DenseVector::zeros(3)).unwrap();
        assert!((p.smoothness_constant() - 2.0).abs() < 1e-9);
        let s = p.clone().scaled(3.0);
        assert!((s.smoothness_constant() - 18.0).abs() < 1e-8);
    }

    #[test]
    fn logistic_identity_constant() {
        let a = SparseMatrix::from_dense(&DMatrix::identity(2, 2));
        let p = LogisticRegressionProblem::new(a, vec![1.0, -1.0]).unwrap();
        assert!((p.smoothness_constant() - 0.125).abs() < 1e-9);
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let ls = LeastSquaresProblem::random(6, 9, 4, 5.0).unwrap();
        let worst = gradient_check(&ls, &random_points(6, 100, 5, 1.0), 1e-6).unwrap();
        assert!(worst < 1e-4, "{worst}");
        let lr = small_logistic();
        let worst = gradient_check(&lr, &random_points(3, 100, 6, 2.0), 1e-6).unwrap();
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn smoothness_constants_bound_gradient_variation() {
        let ls = LeastSquaresProblem::random(5, 7, 7, 20.0).unwrap();
        let lr = small_logistic();
        let check = |f: &dyn Objective, seed: u64| {
            let l = f.constants().lipschitz.unwrap();
            let xs = random_points(f.dim(), 100, seed, 3.0);
            let ys = random_points(f.dim(), 100, seed + 1, 3.0);
            for (x, y) in xs.iter().zip(&ys) {
                let lhs = (f.gradient(x).unwrap() - f.gradient(y).unwrap()).norm();
                assert!(lhs <= l * (x - y).norm() * (1.0 + 1e-6));
            }
        };
        check(&ls, 8);
        check(&lr, 9);
    }

    #[test]
    fn parse_basic_example() {
        let data = parse_libsvm("+1 1:0.5 3:-2\n-1 2:1".as_bytes(), "ex", "inline").unwrap();
        assert_eq!((data.meta.m, data.meta.d), (2, 3));
        assert_eq!(data.matrix.row(0).collect::<Vec<_>>(), vec![(0, 0.5), (2, -2.0)]);
        assert_eq!(data.labels, vec![1.0, -1.0]);
    }

    #[test]
    fn parse_skips_blank_lines_and_maps_labels() {
        let data = parse_libsvm("2 1:1\n\n   \n4 2:1\n2 1:3\n".as_bytes(), "ex", "inline").unwrap();
        assert_eq!(data.meta.m, 3);
        assert_eq!(data.labels, vec![-1.0, 1.0, -1.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("+1 1:1\n-1 2:x\n", 2),
            ("+1 1:1\n\n-1 3:1 2:1\n", 3),
            ("+1 1:1\n-1 2:1\n0 1:1\n", 3),
            ("abc 1:1\n", 1),
            ("+1 0:1\n-1 1:1\n", 1),
            ("+1 1:1 1:2\n-1 1:1\n", 1),
            ("+1 1-1\n", 1),
        ];
        for (text, line) in cases {
            match parse_libsvm(text.as_bytes(), "bad", "inline") {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(matches!(
            parse_libsvm("+1 1:1\n+1 2:1\n".as_bytes(), "one", "inline"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn planted_reference_solution() {
        let p = LeastSquaresProblem::random(16, 16, 10, 30.0).unwrap();
        let sol = solve_reference(&p, DenseVector::zeros(16), 1e-10, REFERENCE_MAX_ITER).unwrap();
        assert!(sol.converged);
        assert!(sol.f_star <= 1e-18, "{}", sol.f_star);
    }

    #[test]
    fn separable_logistic_is_flagged() {
        let a = SparseMatrix::from_dense(&DMatrix::from_element(1, 1, 1.0));
        let p = LogisticRegressionProblem::new(a, vec![1.0]).unwrap();
        let sol = solve_reference_logistic(&p, 1e-6, 100_000).unwrap();
        assert!(sol.warning.as_deref().unwrap().contains("separable"));
        assert!(sol.f_star <= 1e-5);
    }

    #[test]
    fn iteration_cap_returns_best_with_warning() {
        let p = LeastSquaresProblem::random(8, 8, 11, 100.0).unwrap();
        let sol = solve_reference(&p, DenseVector::zeros(8), 1e-14, 3).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 3);
        assert!(sol.warning.is_some());
    }

    fn dataset_strategy() -> impl Strategy<Value = String> {
        let row = (
            prop::bool::ANY,
            prop::collection::btree_map(1usize..40, -1e6f64..1e6, 0..8),
        );
        prop::collection::vec(row, 2..20).prop_map(|rows| {
            let mut text = String::from("+1 1:1\n-1 2:1\n");
            for (pos, feats) in rows {
                text.push_str(if pos { "+1" } else { "-1" });
                for (i, v) in feats {
                    text.push_str(&format!(" {i}:{v}"));
                }
                text.push('\n');
            }
            text
        })
    }

    proptest! {
        #[test]
        fn libsvm_round_trip(text in dataset_strategy()) {
            let a = parse_libsvm(text.as_bytes(), "p", "inline").unwrap();
            let b = parse_libsvm(write_libsvm(&a).as_bytes(), "p", "inline").unwrap();
            prop_assert_eq!(a.labels, b.labels);
            prop_assert_eq!(a.matrix, b.matrix);
        }
    }
}
