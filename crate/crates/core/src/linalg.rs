//! Small dense complex linear-algebra helpers on top of nalgebra.
//!
//! Everything here works on `DMatrix<Complex<f64>>`. Inner products are
//! linear in the first argument: `inner(u, v) = v^H u`.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, SVD};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `(u, v) = Σ u_i conj(v_i)`.
pub fn inner(u: &CVec, v: &CVec) -> C64 {
    v.dotc(u)
}

/// Largest singular value; zero for empty matrices.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Distance of `m` from the identity in operator norm.
pub fn identity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    op_norm(&(m - CMat::identity(n, n)))
}

/// Ratio of extreme singular values of a square matrix.
pub fn condition_number(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let s = m.clone().svd(false, false).singular_values;
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Thin SVD split into the part above `threshold` and the rest.
pub struct RankSplit {
    /// Left singular vectors with singular value above the threshold.
    pub u: CMat,
    pub kept: Vec<f64>,
    /// Right singular vectors (as columns) matching `u`.
    pub v: CMat,
    pub dropped: Vec<f64>,
}

impl RankSplit {
    pub fn rank(&self) -> usize {
        self.kept.len()
    }

    /// Ratio between the smallest kept and largest dropped singular value.
    pub fn gap_ratio(&self) -> f64 {
        match (self.kept.last(), self.dropped.first()) {
            (Some(&k), Some(&d)) if d > 0.0 => k / d,
            _ => f64::INFINITY,
        }
    }
}

pub fn rank_split(m: &CMat, threshold: f64) -> RankSplit {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return RankSplit {
            u: CMat::zeros(rows, 0),
            kept: Vec::new(),
            v: CMat::zeros(cols, 0),
            dropped: Vec::new(),
        };
    }
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.expect("requested u");
    let v_t = svd.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let kept_idx: Vec<usize> = order
        .iter()
        .cloned()
        .filter(|&k| svd.singular_values[k] > threshold)
        .collect();
    let dropped = order
        .iter()
        .filter(|&&k| svd.singular_values[k] <= threshold)
        .map(|&k| svd.singular_values[k])
        .collect();
    let r = kept_idx.len();
    RankSplit {
        u: CMat::from_fn(rows, r, |i, j| u[(i, kept_idx[j])]),
        kept: kept_idx.iter().map(|&k| svd.singular_values[k]).collect(),
        v: CMat::from_fn(cols, r, |i, j| v_t[(kept_idx[j], i)].conj()),
        dropped,
    }
}

/// Moore–Penrose pseudoinverse discarding singular values `<= threshold`.
pub fn pinv(m: &CMat, threshold: f64) -> (CMat, RankSplit) {
    let split = rank_split(m, threshold);
    let inv_s = CMat::from_diagonal(&CVec::from_iterator(
        split.rank(),
        split.kept.iter().map(|s| c(1.0 / s, 0.0)),
    ));
    let p = &split.v * inv_s * split.u.adjoint();
    (p, split)
}

/// Nearest unitary matrix (polar factor).
pub fn polar_unitary(m: &CMat) -> CMat {
    if m.nrows() == 0 {
        return m.clone();
    }
    let svd = SVD::new(m.clone(), true, true);
    svd.u.expect("u") * svd.v_t.expect("v_t")
}

/// Orthonormal basis (columns) of the orthogonal complement of the column
/// space of `q`, which must have orthonormal columns.
pub fn orth_complement(q: &CMat) -> CMat {
    let n = q.nrows();
    let proj = CMat::identity(n, n) - q * q.adjoint();
    let (values, vectors) = hermitian_eigen(&proj);
    let k = values.iter().filter(|&&v| v > 0.5).count();
    vectors.columns(0, k).into_owned()
}

/// Column-space basis of `m` (singular values above `threshold`).
pub fn orthonormal_range(m: &CMat, threshold: f64) -> RankSplit {
    rank_split(m, threshold)
}

/// Eigendecomposition of a normal matrix through the complex Schur form.
/// Returns eigenvalues and orthonormal eigenvectors, plus the size of the
/// largest strictly upper triangular entry of the Schur factor.
pub fn normal_eigen(m: &CMat) -> Result<(Vec<C64>, CMat, f64)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0), 0.0));
    }
    let schur = m
        .clone()
        .try_schur(1e-15, 100_000)
        .ok_or_else(|| Error::Computation("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let mut off = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            off = off.max(t[(i, j)].norm());
        }
    }
    let values = (0..n).map(|k| t[(k, k)]).collect();
    Ok((values, q, off))
}

/// Maps an angle into `[-π, π)`.
pub fn wrap_angle(phi: f64) -> f64 {
    let mut a = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if a >= PI {
        a -= 2.0 * PI;
    }
    if a < -PI {
        a = -PI;
    }
    a
}

/// Absolute angular distance on the circle, in `[0, π]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Argument of a complex number in `[-π, π)`.
pub fn arg(z: C64) -> f64 {
    wrap_angle(z.arg())
}

/// Groups angles that lie within `tol` of a neighbour on the circle.
///
/// Returns the clusters (indices into `angles`, ordered by angle, with a
/// cluster straddling `±π` kept together) and the smallest angular gap
/// between distinct clusters (`π` when there is only one cluster).
pub fn cluster_on_circle(angles: &[f64], tol: f64) -> (Vec<Vec<usize>>, f64) {
    let n = angles.len();
    if n == 0 {
        return (Vec::new(), PI);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| angles[a].total_cmp(&angles[b]).then(a.cmp(&b)));
    let gap = |a: usize, b: usize| angle_distance(angles[a], angles[b]);
    let mut clusters: Vec<Vec<usize>> = vec![vec![order[0]]];
    for w in order.windows(2) {
        if gap(w[0], w[1]) <= tol {
            clusters.last_mut().expect("nonempty").push(w[1]);
        } else {
            clusters.push(vec![w[1]]);
        }
    }
    if clusters.len() > 1 && gap(order[0], order[n - 1]) <= tol {
        let mut last = clusters.pop().expect("nonempty");
        last.append(&mut clusters[0]);
        clusters[0] = last;
    }
    let mut separation = PI;
    if clusters.len() > 1 {
        for (i, a) in clusters.iter().enumerate() {
            for b in clusters.iter().skip(i + 1) {
                for &p in a {
                    for &q in b {
                        separation = separation.min(gap(p, q));
                    }
                }
            }
        }
    }
    (clusters, separation)
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let g = CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Diagonal matrix with the given complex entries.
pub fn diag(values: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(values))
}

/// Largest absolute entry of a matrix.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Converts a matrix to row-major `[re, im]` pairs.
pub fn to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

/// Inverse of [`to_rows`]; all rows must have equal length.
pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidInput(
            "matrix rows have unequal length".into(),
        ));
    }
    if rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix entries must be finite".into()));
    }
    Ok(CMat::from_fn(n, m, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_angle(0.25)).eq(&0.25));
    }

    #[test]
    fn clusters_wrap_around() {
        let angles = [PI - 1e-9, 0.5, -PI, 0.5 + 1e-10, 2.0];
        let (clusters, sep) = cluster_on_circle(&angles, 1e-8);
        assert_eq!(clusters.len(), 3);
        assert!(clusters
            .iter()
            .any(|c| c.len() == 2 && c.contains(&0) && c.contains(&2)));
        assert!(clusters.iter().any(|c| c == &vec![1, 3]));
        assert!((sep - (PI - 2.0)).abs() < 1e-8);
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..6 {
            let u = haar_unitary(n, &mut rng);
            assert!(identity_defect(&(u.adjoint() * &u)) < 1e-13);
        }
    }

    #[test]
    fn pinv_of_rank_one() {
        let m = CMat::from_element(2, 2, c(1.0, 0.0));
        let (p, split) = pinv(&m, 1e-12);
        assert_eq!(split.rank(), 1);
        assert!(max_abs(&(&m * &p * &m - &m)) < 1e-14);
    }

    #[test]
    fn normal_eigen_of_degenerate_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = haar_unitary(4, &mut rng);
        let d = diag(&[c(1.0, 0.0), c(1.0, 0.0), I, c(-1.0, 0.0)]);
        let b = &w * d * w.adjoint();
        let (vals, q, off) = normal_eigen(&b).unwrap();
        assert!(off < 1e-12);
        let rebuilt = &q * diag(&vals) * q.adjoint();
        assert!(max_abs(&(rebuilt - b)) < 1e-12);
    }

    #[test]
    fn complement_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = haar_unitary(5, &mut rng);
        let q = u.columns(0, 2).into_owned();
        let comp = orth_complement(&q);
        assert_eq!(comp.ncols(), 3);
        assert!(max_abs(&(q.adjoint() * &comp)) < 1e-12);
    }
}
