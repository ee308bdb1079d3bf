//! Dense least-squares kernels.
//!
//! Everything here is built on classical Gram–Schmidt with one round of
//! re-orthogonalization (CGS2). Columns are processed in the order given and a
//! column whose residual norm after projection falls below
//! [`RANK_TOL`] times its original norm is treated as dependent and dropped.
//! Ordered dropping keeps the leading columns (the shock, protected regressors)
//! in the fit whenever they are identifiable.

use crate::error::{Error, Result};

/// Relative tolerance below which a column counts as spanned by its predecessors.
pub const RANK_TOL: f64 = 1e-10;

/// Dense real matrix stored row-major, with optional column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    column_names: Option<Vec<String>>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::DimensionMismatch("matrix needs at least one row".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix given {} entries",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data, column_names: None })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0, "matrix needs at least one row");
        Self { rows, cols, data: vec![0.0; rows * cols], column_names: None }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Matrix with `rows` rows and no columns (the empty design).
    pub fn empty(rows: usize) -> Self {
        Self::zeros(rows, 0)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(n, k, rows.concat())
    }

    /// Builds a `rows x columns.len()` matrix from column vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("column length differs from row count".into()));
        }
        let mut data = vec![0.0; rows * cols];
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                data[i * cols + j] = *v;
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} columns",
                names.len(),
                self.cols
            )));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    /// Subset of columns, in the order given.
    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        let names = self
            .column_names
            .as_ref()
            .map(|n| idx.iter().map(|&j| n[j].clone()).collect());
        Matrix { rows: self.rows, cols: idx.len(), data, column_names: names }
    }

    pub fn mul_vec(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), b)).collect()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Least-squares fit of `y` on the columns of `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// One entry per column of `X`; dropped (dependent) columns get 0.
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub rank: usize,
    /// Columns dropped as linearly dependent on earlier ones.
    pub dropped: Vec<usize>,
}

/// Orthonormal basis grown one column at a time, remembering the triangular
/// factor so that coefficients on the original columns can be recovered.
#[derive(Debug, Clone, Default)]
pub struct OrthoBasis {
    len: usize,
    q: Vec<Vec<f64>>,
    /// `r[k]` holds the coefficients of original column `k` on `q[0..=k]`.
    r: Vec<Vec<f64>>,
}

impl OrthoBasis {
    pub fn new(len: usize) -> Self {
        Self { len, q: Vec::new(), r: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.q
    }

    /// Two-pass projection of `v` off the current span. Returns the residual
    /// and the accumulated coefficients on each basis vector.
    fn orthogonalize(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut resid = v.to_vec();
        let mut coef = vec![0.0; self.q.len()];
        for _ in 0..2 {
            for (k, q) in self.q.iter().enumerate() {
                let c = dot(q, &resid);
                coef[k] += c;
                axpy(-c, q, &mut resid);
            }
        }
        (resid, coef)
    }

    /// Adds `col` to the basis. Returns `false` (and leaves the basis alone)
    /// when the column is numerically spanned by the current basis.
    pub fn push(&mut self, col: &[f64]) -> bool {
        debug_assert_eq!(col.len(), self.len);
        let orig = norm(col);
        if orig == 0.0 {
            return false;
        }
        let (mut resid, mut coef) = self.orthogonalize(col);
        let rn = norm(&resid);
        if rn < RANK_TOL * orig {
            return false;
        }
        resid.iter_mut().for_each(|v| *v /= rn);
        coef.push(rn);
        self.q.push(resid);
        self.r.push(coef);
        true
    }

    /// `(I - P) v` for the current span.
    pub fn residual(&self, v: &[f64]) -> Vec<f64> {
        self.orthogonalize(v).0
    }

    /// Coefficients of `v` on the kept original columns (in push order),
    /// obtained by back-substitution through the triangular factor.
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        let (_, c) = self.orthogonalize(v);
        let m = self.q.len();
        let mut b = vec![0.0; m];
        for i in (0..m).rev() {
            let mut s = c[i];
            for (j, bj) in b.iter().enumerate().skip(i + 1) {
                s -= self.r[j][i] * bj;
            }
            b[i] = s / self.r[i][i];
        }
        b
    }
}

fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Ordinary least squares of `y` on `x`.
///
/// Dependent columns are dropped in column order and receive a zero
/// coefficient; the residual is unaffected by which columns are dropped.
pub fn ols_fit(x: &Matrix, y: &[f64]) -> Result<OlsFit> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} rows, response has {}",
            x.rows(),
            y.len()
        )));
    }
    check_finite(x.data(), "design")?;
    check_finite(y, "response")?;
    ols_columns(&x.columns(), y)
}

/// [`ols_fit`] over column vectors, skipping the matrix round trip.
pub fn ols_columns(cols: &[Vec<f64>], y: &[f64]) -> Result<OlsFit> {
    let n = y.len();
    if n == 0 {
        return Err(Error::DimensionMismatch("empty response".into()));
    }
    if cols.iter().any(|c| c.len() != n) {
        return Err(Error::DimensionMismatch("column length differs from response".into()));
    }
    let mut basis = OrthoBasis::new(n);
    let mut kept = Vec::with_capacity(cols.len());
    let mut dropped = Vec::new();
    for (j, c) in cols.iter().enumerate() {
        if basis.push(c) {
            kept.push(j);
        } else {
            dropped.push(j);
        }
    }
    let b = basis.solve(y);
    let mut coefficients = vec![0.0; cols.len()];
    for (k, &j) in kept.iter().enumerate() {
        coefficients[j] = b[k];
    }
    let mut residuals = y.to_vec();
    for (j, c) in cols.iter().enumerate() {
        if coefficients[j] != 0.0 {
            axpy(-coefficients[j], c, &mut residuals);
        }
    }
    let rss = dot(&residuals, &residuals);
    Ok(OlsFit { coefficients, residuals, rss, rank: kept.len(), dropped })
}

/// `(I - P_basis) v`, the residual of `v` after projection on the column span of `basis`.
pub fn project_out(basis: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    if basis.rows() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows, vector has {}",
            basis.rows(),
            v.len()
        )));
    }
    let mut ob = OrthoBasis::new(v.len());
    for c in basis.columns() {
        ob.push(&c);
    }
    Ok(ob.residual(v))
}

/// Outcome of extending an orthonormal set by one column.
#[derive(Debug, Clone, PartialEq)]
pub enum Extension {
    /// Unit vector orthogonal to the existing set.
    Added(Vec<f64>),
    /// The column is (numerically) in the span of the existing set.
    Degenerate,
}

/// Orthogonalizes `new_col` against the orthonormal columns of `orthobasis`
/// and normalizes the remainder.
pub fn gram_schmidt_extend(orthobasis: &Matrix, new_col: &[f64]) -> Result<Extension> {
    if orthobasis.rows() != new_col.len() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows, column has {}",
            orthobasis.rows(),
            new_col.len()
        )));
    }
    let qs = orthobasis.columns();
    Ok(extend_columns(&qs, new_col))
}

pub(crate) fn extend_columns(qs: &[Vec<f64>], new_col: &[f64]) -> Extension {
    let orig = norm(new_col);
    if orig == 0.0 {
        return Extension::Degenerate;
    }
    let mut r = new_col.to_vec();
    for _ in 0..2 {
        for q in qs {
            let c = dot(q, &r);
            axpy(-c, q, &mut r);
        }
    }
    let rn = norm(&r);
    if rn < RANK_TOL * orig {
        return Extension::Degenerate;
    }
    r.iter_mut().for_each(|v| *v /= rn);
    Extension::Added(r)
}
