//! Gram matrix of the moment kernel over an index window, the positivity
//! test, and the finite-rank factorization `G = X^H X` that realizes the
//! kernel as inner products of embedded vectors `x_{m,n}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigen, CMat, CVec};
use crate::moments::{kernel_value, validate_table, MomentIndex, MomentTable};

/// Default relative tolerance for PSD and rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// The indices `0 ≤ m ≤ M`, `|n| ≤ N` in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexWindow {
    pub max_power: usize,
    pub max_freq: usize,
}

impl IndexWindow {
    pub fn new(max_power: usize, max_freq: usize) -> Self {
        Self {
            max_power,
            max_freq,
        }
    }

    pub fn for_table(table: &MomentTable) -> Self {
        Self::new(table.max_power(), table.max_freq())
    }

    pub fn len(&self) -> usize {
        (self.max_power + 1) * (2 * self.max_freq + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, idx: MomentIndex) -> bool {
        idx.m >= 0 && idx.m <= self.max_power as i64 && idx.n.abs() <= self.max_freq as i64
    }

    pub fn position(&self, idx: MomentIndex) -> Option<usize> {
        self.contains(idx).then(|| {
            idx.m as usize * (2 * self.max_freq + 1) + (idx.n + self.max_freq as i64) as usize
        })
    }

    pub fn index_at(&self, pos: usize) -> MomentIndex {
        let w = 2 * self.max_freq + 1;
        MomentIndex::new((pos / w) as i64, (pos % w) as i64 - self.max_freq as i64)
    }

    pub fn indices(&self) -> impl Iterator<Item = MomentIndex> + '_ {
        (0..self.len()).map(|p| self.index_at(p))
    }
}

/// `G[(m,n),(k,l)] = s_{m+k, n-l}` over the table's window, symmetrized.
pub fn build_gram(table: &MomentTable) -> Result<CMat> {
    let report = validate_table(table, 1e-10 * table.max_abs().max(1.0));
    if let Some(v) = report.violations.first() {
        return Err(Error::InvalidInput(v.to_string()));
    }
    let window = IndexWindow::for_table(table);
    let n = window.len();
    let mut g = CMat::zeros(n, n);
    for (i, t) in window.indices().enumerate() {
        for (j, r) in window.indices().enumerate() {
            g[(i, j)] = kernel_value(table, t, r)
                .map_err(|e| Error::Computation(format!("gram assembly: {e}")))?;
        }
    }
    Ok((&g + g.adjoint()) * c(0.5, 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityReport {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub numeric_rank: usize,
    /// `tol · max(1, ‖G‖)`.
    pub threshold: f64,
    /// Smallest kept over largest dropped eigenvalue (diagnostic only).
    pub gap_ratio: f64,
    /// Eigenvalues in descending order.
    pub spectrum: Vec<f64>,
}

pub fn check_positivity(gram: &CMat, tol: f64) -> Result<PositivityReport> {
    let (values, _) = hermitian_eigen(gram);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Computation(format!(
            "eigensolver produced non-finite values for a {}x{} gram matrix",
            gram.nrows(),
            gram.ncols()
        )));
    }
    Ok(report_from_spectrum(values, tol))
}

fn report_from_spectrum(values: Vec<f64>, tol: f64) -> PositivityReport {
    let max = values.first().cloned().unwrap_or(0.0);
    let min = values.last().cloned().unwrap_or(0.0);
    let norm = max.abs().max(min.abs());
    let threshold = tol * norm.max(1.0);
    let numeric_rank = values.iter().filter(|&&v| v > threshold).count();
    let gap_ratio = match (
        values.get(numeric_rank.wrapping_sub(1)),
        values.get(numeric_rank),
    ) {
        (Some(&k), Some(&d)) if numeric_rank > 0 && d.abs() > 0.0 => k / d.abs(),
        _ => f64::INFINITY,
    };
    PositivityReport {
        is_psd: min >= -threshold,
        min_eigenvalue: min,
        max_eigenvalue: max,
        numeric_rank,
        threshold,
        gap_ratio,
        spectrum: values,
    }
}

/// Finite-dimensional Hilbert space carrying the embedded window vectors.
///
/// Column `p` of `embedding` holds the coordinates of `x_t` for
/// `t = window.index_at(p)`, so that `(x_t, x_r) = x_r^H x_t = G[t, r]`.
#[derive(Debug, Clone)]
pub struct GnsSpace {
    pub window: IndexWindow,
    pub gram: CMat,
    pub rank: usize,
    pub embedding: CMat,
    pub factorization_tol: f64,
    /// Absolute eigenvalue cut used for the rank decision.
    pub threshold: f64,
}

impl GnsSpace {
    pub fn vector(&self, idx: MomentIndex) -> Result<CVec> {
        let p = self
            .window
            .position(idx)
            .ok_or(Error::IndexOutOfWindow { m: idx.m, n: idx.n })?;
        Ok(self.embedding.column(p).into_owned())
    }

    pub fn x00(&self) -> CVec {
        self.vector(MomentIndex::new(0, 0))
            .expect("origin is in every window")
    }

    /// Matrix whose columns are the embedded vectors of `indices`.
    pub fn columns(&self, indices: &[MomentIndex]) -> Result<CMat> {
        let mut out = CMat::zeros(self.rank, indices.len());
        for (j, &idx) in indices.iter().enumerate() {
            out.set_column(j, &self.vector(idx)?);
        }
        Ok(out)
    }

    /// Cut for singular values of embedded sub-families, consistent with the
    /// eigenvalue cut on the Gram matrix.
    pub fn singular_threshold(&self) -> f64 {
        self.threshold.sqrt()
    }

    /// `max |(x_t, x_r) - G[t,r]|` over the window.
    pub fn embedding_error(&self) -> f64 {
        let rebuilt = self.embedding.transpose() * self.embedding.map(|z| z.conj());
        (rebuilt - &self.gram)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Eigenvalue-based factorization keeping eigenpairs above
/// `tol · max(1, ‖G‖)`; coordinates of `x_t` are `√λ_i U[t, i]`.
pub fn factorize(gram: &CMat, window: IndexWindow, tol: f64) -> Result<GnsSpace> {
    if gram.nrows() != window.len() || gram.ncols() != window.len() {
        return Err(Error::InvalidInput(format!(
            "gram is {}x{} but window has {} indices",
            gram.nrows(),
            gram.ncols(),
            window.len()
        )));
    }
    let (values, vectors) = hermitian_eigen(gram);
    let report = report_from_spectrum(values.clone(), tol);
    if !report.is_psd {
        return Err(Error::NotPositive {
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    let rank = report.numeric_rank;
    let embedding = CMat::from_fn(rank, window.len(), |i, t| {
        vectors[(t, i)] * values[i].sqrt()
    });
    Ok(GnsSpace {
        window,
        gram: gram.clone(),
        rank,
        embedding,
        factorization_tol: tol,
        threshold: report.threshold,
    })
}

/// `factorize(build_gram(table))` with the table's own window.
pub fn embed_table(table: &MomentTable, tol: f64) -> Result<GnsSpace> {
    let gram = build_gram(table)?;
    factorize(&gram, IndexWindow::for_table(table), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::moments::{compute_moments, Atom, AtomicMeasure};

    fn table(atoms: &[(f64, f64, f64)], mp: usize, mf: usize) -> MomentTable {
        let mu = AtomicMeasure::new(atoms.iter().map(|&(x, p, w)| Atom::new(x, p, w))).unwrap();
        compute_moments(&mu, mp, mf).unwrap()
    }

    fn real(rows: &[&[f64]]) -> CMat {
        CMat::from_fn(rows.len(), rows[0].len(), |i, j| c(rows[i][j], 0.0))
    }

    #[test]
    fn window_order_is_lexicographic() {
        let w = IndexWindow::new(1, 1);
        let idx: Vec<_> = w.indices().map(|i| (i.m, i.n)).collect();
        assert_eq!(idx, vec![(0, -1), (0, 0), (0, 1), (1, -1), (1, 0), (1, 1)]);
        for (p, i) in w.indices().enumerate() {
            assert_eq!(w.position(i), Some(p));
        }
        assert_eq!(w.position(MomentIndex::new(2, 0)), None);
    }

    #[test]
    fn gram_examples() {
        let g = build_gram(&table(&[(1.0, 0.0, 1.0)], 1, 0)).unwrap();
        assert_eq!(g, real(&[&[1.0, 1.0], &[1.0, 1.0]]));
        let g = build_gram(&table(&[(0.0, 0.0, 1.0)], 1, 0)).unwrap();
        assert_eq!(g, real(&[&[1.0, 0.0], &[0.0, 0.0]]));
    }

    #[test]
    fn three_atom_gram_matches_power_sums() {
        let nodes = [0.0, 1.0, 2.0];
        // Independent power-sum loop.
        let mut expected = [[0.0; 3]; 3];
        for (i, row) in expected.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                for x in nodes {
                    *e += f64::powi(x, (i + j) as i32);
                }
            }
        }
        assert_eq!(
            expected,
            [[3.0, 3.0, 5.0], [3.0, 5.0, 9.0], [5.0, 9.0, 17.0]]
        );
        let g = build_gram(&table(
            &[(0.0, 0.0, 1.0), (1.0, 0.0, 1.0), (2.0, 0.0, 1.0)],
            2,
            0,
        ))
        .unwrap();
        let rows: Vec<&[f64]> = expected.iter().map(|r| r.as_slice()).collect();
        assert!(max_abs(&(g.clone() - real(&rows))) < 1e-14);
        let space = factorize(&g, IndexWindow::new(2, 0), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(space.rank, 3);
        assert!(space.embedding_error() < 1e-10);
    }

    #[test]
    fn positivity_examples() {
        let r = check_positivity(&real(&[&[1.0, 3.0], &[3.0, 1.0]]), DEFAULT_RANK_TOL).unwrap();
        assert!(!r.is_psd);
        assert!((r.min_eigenvalue + 2.0).abs() < 1e-12);
        let r = check_positivity(&real(&[&[1.0, 1.0], &[1.0, 1.0]]), DEFAULT_RANK_TOL).unwrap();
        assert!(r.is_psd);
        assert_eq!(r.numeric_rank, 1);
    }

    #[test]
    fn rank_one_factorizations() {
        let s = factorize(
            &real(&[&[1.0, 1.0], &[1.0, 1.0]]),
            IndexWindow::new(1, 0),
            1e-10,
        )
        .unwrap();
        assert_eq!(s.rank, 1);
        let (a, b) = (
            s.vector(MomentIndex::new(0, 0)).unwrap(),
            s.vector(MomentIndex::new(1, 0)).unwrap(),
        );
        assert!((a.norm() - 1.0).abs() < 1e-14 && (b.norm() - 1.0).abs() < 1e-14);
        assert!((crate::linalg::inner(&a, &b) - c(1.0, 0.0)).norm() < 1e-14);

        let s = factorize(
            &real(&[&[1.0, 0.0], &[0.0, 0.0]]),
            IndexWindow::new(1, 0),
            1e-10,
        )
        .unwrap();
        assert_eq!(s.rank, 1);
        assert!((s.x00().norm() - 1.0).abs() < 1e-15);
        assert_eq!(s.vector(MomentIndex::new(1, 0)).unwrap().norm(), 0.0);
    }

    #[test]
    fn factorize_rejects_indefinite() {
        let err = factorize(
            &real(&[&[1.0, 3.0], &[3.0, 1.0]]),
            IndexWindow::new(1, 0),
            1e-10,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::NotPositive { min_eigenvalue } if (min_eigenvalue + 2.0).abs() < 1e-12)
        );
    }

    /// Vandermonde oracle: for k distinct nodes and M ≥ k-1 the Hankel Gram
    /// factors as V^T W V with V square-invertible on its leading block.
    #[test]
    fn vandermonde_rank() {
        let nodes = [-1.5, 0.3, 1.1, 2.4];
        for k in 1..=4 {
            let atoms: Vec<_> = nodes[..k].iter().map(|&x| (x, 0.0, 1.0)).collect();
            let mp = (k - 1).max(1);
            // Oracle: leading k×k Vandermonde determinant is nonzero.
            let det: f64 = (0..k)
                .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
                .map(|(i, j)| nodes[j] - nodes[i])
                .product();
            assert!(det.abs() > 1e-3);
            let g = build_gram(&table(&atoms, mp, 0)).unwrap();
            let r = check_positivity(&g, DEFAULT_RANK_TOL).unwrap();
            assert_eq!(r.numeric_rank, k);
        }
    }
}
