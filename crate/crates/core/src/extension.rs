//! Commuting self-adjoint extensions of the power shift.
//!
//! The Cayley transform `V_A = (A+i)(A-i)⁻¹` is an isometry from
//! `H₁ = (A-i)D` onto `H₃ = (A+i)D`. A unitary `U ⊇ V_A` is completed on
//! `H₂ = H ⊖ H₁` by `U_{2,4}·U₂`, where `U_{2,4} = J∘K` for the
//! conjugations of a factorization `B|_{H₂} = K∘L`, and `U₂` ranges over
//! unitaries commuting with `B|_{H₂}`. The inverse Cayley transform
//! `A_U = i(U+I)(U-I)⁻¹` is a self-adjoint extension of `A` commuting with `B`.
//!
//! Subspaces are carried as ambient matrices with orthonormal columns;
//! maps between them as coordinate matrices in those bases.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    arg, c, cluster_on_circle, haar_unitary, identity_defect, normal_eigen, op_norm,
    orth_complement, rank_split, CMat, I,
};
use crate::operators::{AntilinearOperator, OperatorSystem, SYSTEM_TOL};

/// Angular tolerance for grouping eigenvalues of `B|_{H₂}`.
pub const COMMUTANT_CLUSTER_TOL: f64 = 1e-8;
/// `U` is rejected when an eigenvalue lies this close to 1.
pub const ONE_POINT_TOL: f64 = 1e-8;
pub const UNITARY_TOL: f64 = 1e-10;
pub const EXTENSION_TOL: f64 = 1e-8;

fn conj(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

/// Deficiency decomposition `H = H₁ ⊕ H₂ = H₃ ⊕ H₄` of the power shift.
#[derive(Debug, Clone)]
pub struct DeficiencyData {
    /// Orthonormal basis of `H₁ = (A - i)D`.
    pub h1: CMat,
    pub h2: CMat,
    /// Orthonormal basis of `H₃ = (A + i)D`.
    pub h3: CMat,
    pub h4: CMat,
    /// `V_A` in coordinates: `H₁` basis to `H₃` basis.
    pub cayley: CMat,
    pub defect: usize,
    /// `B|_{H₂}` in `H₂` coordinates.
    pub b_on_h2: CMat,
}

impl DeficiencyData {
    /// `V_A` as an ambient matrix acting on `H₁` (zero on `H₂`).
    pub fn cayley_ambient(&self) -> CMat {
        &self.h3 * &self.cayley * self.h1.adjoint()
    }

    pub fn projector(basis: &CMat) -> CMat {
        basis * basis.adjoint()
    }
}

pub fn cayley_decompose(sys: &OperatorSystem) -> Result<DeficiencyData> {
    let r = sys.dim();
    let a = &sys.a;
    if a.domain_gap_ratio < 10.0 {
        return Err(Error::RankAmbiguity {
            gap: a.domain_gap_ratio,
        });
    }
    let ident = CMat::identity(r, r);
    let minus = (&a.action - &ident * I) * &a.domain_basis;
    let plus = (&a.action + &ident * I) * &a.domain_basis;
    let dim_d = a.domain_dim();
    // ‖(A ∓ i)f‖ ≥ ‖f‖, so the singular values of both families are ≥ 1
    // in exact arithmetic.
    let threshold = 1e-8 * op_norm(&minus).max(1.0);
    let s1 = rank_split(&minus, threshold);
    let s3 = rank_split(&plus, threshold);
    for s in [&s1, &s3] {
        if s.rank() != dim_d || s.gap_ratio() < 10.0 {
            return Err(Error::RankAmbiguity { gap: s.gap_ratio() });
        }
    }
    let h1 = s1.u.clone();
    let h3 = s3.u.clone();
    // (A-i)f ↦ (A+i)f written as H₃ᴴ·plus·(minus)⁺·H₁.
    let inv_s = CMat::from_diagonal(&crate::linalg::CVec::from_iterator(
        dim_d,
        s1.kept.iter().map(|s| c(1.0 / s, 0.0)),
    ));
    let minus_pinv = &s1.v * inv_s * s1.u.adjoint();
    let cayley = h3.adjoint() * &plus * minus_pinv * &h1;
    let isometry = identity_defect(&(cayley.adjoint() * &cayley));
    if isometry > UNITARY_TOL {
        return Err(Error::ValidationFailed {
            name: "cayley_isometry".into(),
            value: isometry,
            threshold: UNITARY_TOL,
        });
    }
    let h2 = orth_complement(&h1);
    let h4 = orth_complement(&h3);
    if h2.ncols() != r - dim_d || h4.ncols() != r - dim_d {
        return Err(Error::Computation(format!(
            "deficiency dimensions {} and {} differ from r - dim D = {}",
            h2.ncols(),
            h4.ncols(),
            r - dim_d
        )));
    }
    let b_on_h2 = h2.adjoint() * &sys.b * &h2;
    Ok(DeficiencyData {
        defect: h2.ncols(),
        h1,
        h2,
        h3,
        h4,
        cayley,
        b_on_h2,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReductionResiduals {
    /// `‖P_k B - B P_k‖` for `k = 1..4`.
    pub projector_commutation: [f64; 4],
    /// `‖(B V_A - V_A B)|_{H₁}‖`.
    pub cayley_commutation: f64,
    /// `‖(I - P₄) J P₂‖`.
    pub j_maps_h2_to_h4: f64,
}

impl ReductionResiduals {
    pub fn max(&self) -> f64 {
        self.projector_commutation
            .iter()
            .cloned()
            .chain([self.cayley_commutation, self.j_maps_h2_to_h4])
            .fold(0.0, f64::max)
    }
}

/// `B` reduces `H₁..H₄`, commutes with `V_A`, and `J H₂ = H₄`.
pub fn verify_reduction(
    sys: &OperatorSystem,
    dd: &DeficiencyData,
    tol: f64,
) -> Result<ReductionResiduals> {
    let b = &sys.b;
    let r = sys.dim();
    let mut proj = [0.0; 4];
    for (k, basis) in [&dd.h1, &dd.h2, &dd.h3, &dd.h4].into_iter().enumerate() {
        let p = DeficiencyData::projector(basis);
        proj[k] = op_norm(&(&p * b - b * &p));
    }
    let v = dd.cayley_ambient();
    let p1 = DeficiencyData::projector(&dd.h1);
    let off4 = CMat::identity(r, r) - DeficiencyData::projector(&dd.h4);
    let res = ReductionResiduals {
        projector_commutation: proj,
        cayley_commutation: op_norm(&((b * &v - &v * b) * p1)),
        j_maps_h2_to_h4: op_norm(&(off4 * &sys.j.matrix * conj(&dd.h2))),
    };
    let named = [
        ("p1_commutation", proj[0]),
        ("p2_commutation", proj[1]),
        ("p3_commutation", proj[2]),
        ("p4_commutation", proj[3]),
        ("cayley_commutation", res.cayley_commutation),
        ("j_maps_h2_to_h4", res.j_maps_h2_to_h4),
    ];
    if let Some((name, value)) = named.into_iter().find(|(_, v)| *v > tol) {
        return Err(Error::ValidationFailed {
            name: name.into(),
            value,
            threshold: tol,
        });
    }
    Ok(res)
}

/// Conjugations with `K∘L = B|_{H₂}`, in `H₂` coordinates.
#[derive(Debug, Clone)]
pub struct ConjugationPair {
    pub k: AntilinearOperator,
    pub l: AntilinearOperator,
}

impl ConjugationPair {
    /// `‖K∘L - B‖`.
    pub fn factorization_residual(&self, b: &CMat) -> f64 {
        op_norm(&(self.k.compose(&self.l) - b))
    }
}

/// Eigenbasis of a unitary ordered by eigenvalue angle; within a cluster of
/// numerically equal eigenvalues the Schur order is kept.
fn sorted_eigenbasis(u: &CMat) -> Result<(Vec<f64>, CMat)> {
    let (values, basis, _) = normal_eigen(u)?;
    let angles: Vec<f64> = values.iter().map(|&z| arg(z)).collect();
    let (clusters, _) = cluster_on_circle(&angles, COMMUTANT_CLUSTER_TOL);
    let order: Vec<usize> = clusters.into_iter().flatten().collect();
    let n = u.nrows();
    let sorted = CMat::from_fn(n, n, |i, j| basis[(i, order[j])]);
    Ok((order.iter().map(|&k| angles[k]).collect(), sorted))
}

/// `L` conjugates coordinates in an eigenbasis `W` of `B` (matrix `W Wᵀ`),
/// and `K = B∘L`.
pub fn godic_lucenko_factor(b: &CMat) -> Result<ConjugationPair> {
    let d = b.nrows();
    if d == 0 {
        return Err(Error::InvalidInput(
            "factorization needs dimension >= 1".into(),
        ));
    }
    let defect = identity_defect(&(b.adjoint() * b));
    if defect > UNITARY_TOL {
        return Err(Error::InvalidInput(format!(
            "matrix is not unitary (defect {defect:e})"
        )));
    }
    let (_, w) = sorted_eigenbasis(b)?;
    let l = &w * w.transpose();
    let k = b * &l;
    Ok(ConjugationPair {
        k: AntilinearOperator::new(k),
        l: AntilinearOperator::new(l),
    })
}

/// `U_{2,4} = J∘K: H₂ → H₄` with its checks.
#[derive(Debug, Clone)]
pub struct DefectIsometry {
    /// `H₂` coordinates to `H₄` coordinates.
    pub matrix: CMat,
    pub isometry_defect: f64,
    /// `‖(I - P₄) J K‖` on `H₂`.
    pub range_defect: f64,
    pub commutation_residual: f64,
}

impl DefectIsometry {
    pub fn ambient(&self, dd: &DeficiencyData) -> CMat {
        &dd.h4 * &self.matrix * dd.h2.adjoint()
    }
}

pub fn build_u24(
    j: &AntilinearOperator,
    k: &AntilinearOperator,
    dd: &DeficiencyData,
    b: &CMat,
) -> Result<DefectIsometry> {
    let d = dd.defect;
    if d == 0 {
        return Ok(DefectIsometry {
            matrix: CMat::zeros(0, 0),
            isometry_defect: 0.0,
            range_defect: 0.0,
            commutation_residual: 0.0,
        });
    }
    // v = H₂ c ↦ J(H₂ K conj-coords) = M_J conj(H₂) conj(M_K) c.
    let image = &j.matrix * conj(&dd.h2) * conj(&k.matrix);
    let matrix = dd.h4.adjoint() * &image;
    let r = dd.h4.nrows();
    let range_defect =
        op_norm(&((CMat::identity(r, r) - DeficiencyData::projector(&dd.h4)) * &image));
    let isometry_defect = identity_defect(&(matrix.adjoint() * &matrix));
    let commutation_residual = op_norm(&(b * &dd.h4 * &matrix - &dd.h4 * &matrix * &dd.b_on_h2));
    if commutation_residual > SYSTEM_TOL {
        return Err(Error::ValidationFailed {
            name: "u24_commutation".into(),
            value: commutation_residual,
            threshold: SYSTEM_TOL,
        });
    }
    Ok(DefectIsometry {
        matrix,
        isometry_defect,
        range_defect,
        commutation_residual,
    })
}

/// Where a commutant unitary came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParameterSource {
    Identity,
    /// `index`-th member of the seeded enumeration.
    Seeded {
        seed: u64,
        index: usize,
    },
    Explicit(String),
}

impl fmt::Display for ParameterSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParameterSource::Identity => write!(f, "identity"),
            ParameterSource::Seeded { seed, index } => write!(f, "seed:{seed}#{index}"),
            ParameterSource::Explicit(label) => write!(f, "{label}"),
        }
    }
}

/// A unitary `U₂` on `H₂` commuting with `B|_{H₂}`.
#[derive(Debug, Clone)]
pub struct CommutantParameter {
    pub source: ParameterSource,
    pub matrix: CMat,
}

impl CommutantParameter {
    pub fn identity(d: usize) -> Self {
        Self {
            source: ParameterSource::Identity,
            matrix: CMat::identity(d, d),
        }
    }
}

/// Identity first, then block-diagonal Haar draws over the eigenvalue
/// clusters of `B|_{H₂}`; deterministic in `seed`.
pub fn enumerate_commutant_unitaries(
    b_on_h2: &CMat,
    count: usize,
    seed: u64,
) -> Result<Vec<CommutantParameter>> {
    let d = b_on_h2.nrows();
    if d == 0 || count == 0 {
        return Err(Error::InvalidInput(
            "commutant enumeration needs d >= 1 and count >= 1".into(),
        ));
    }
    let (angles, w) = sorted_eigenbasis(b_on_h2)?;
    let (clusters, _) = cluster_on_circle(&angles, COMMUTANT_CLUSTER_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![CommutantParameter::identity(d)];
    for index in 1..count {
        let mut block = CMat::zeros(d, d);
        for cl in &clusters {
            let h = haar_unitary(cl.len(), &mut rng);
            for (a, &p) in cl.iter().enumerate() {
                for (b, &q) in cl.iter().enumerate() {
                    block[(p, q)] = h[(a, b)];
                }
            }
        }
        out.push(CommutantParameter {
            source: ParameterSource::Seeded { seed, index },
            matrix: &w * block * w.adjoint(),
        });
    }
    Ok(out)
}

/// The first non-identity member of the enumeration for `seed`.
pub fn commutant_unitary_from_seed(b_on_h2: &CMat, seed: u64) -> Result<CommutantParameter> {
    Ok(enumerate_commutant_unitaries(b_on_h2, 2, seed)?.remove(1))
}

/// Checks an externally supplied `U₂`.
pub fn explicit_parameter(
    b_on_h2: &CMat,
    matrix: CMat,
    label: impl Into<String>,
) -> Result<CommutantParameter> {
    let d = b_on_h2.nrows();
    if matrix.shape() != (d, d) {
        return Err(Error::InvalidInput(format!(
            "parameter must be {d}x{d}, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let unitarity = identity_defect(&(matrix.adjoint() * &matrix));
    if unitarity > UNITARY_TOL {
        return Err(Error::InvalidInput(format!(
            "parameter is not unitary (defect {unitarity:e})"
        )));
    }
    let commutation = op_norm(&(b_on_h2 * &matrix - &matrix * b_on_h2));
    if commutation > SYSTEM_TOL {
        return Err(Error::InvalidInput(format!(
            "parameter does not commute with B on H2 (residual {commutation:e})"
        )));
    }
    Ok(CommutantParameter {
        source: ParameterSource::Explicit(label.into()),
        matrix,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExtensionResiduals {
    pub unitarity: f64,
    pub one_distance: f64,
    pub b_commutation: f64,
    /// `‖A_U - A_Uᴴ‖` before symmetrization.
    pub hermitian_defect: f64,
    /// `‖(A_U - A) P_D‖`.
    pub extends_a: f64,
    /// `‖(A_U + i)(A_U - i)⁻¹ - U‖`.
    pub cayley_round_trip: f64,
    /// `‖(U - V_A) P₁‖`.
    pub agrees_with_cayley: f64,
}

/// A commuting unitary extension and its inverse Cayley transform.
#[derive(Debug, Clone)]
pub struct ExtensionData {
    pub u: CMat,
    pub a_u: CMat,
    /// `A_U` as computed, before Hermitian symmetrization.
    pub a_u_raw: CMat,
    pub parameter: ParameterSource,
    pub diagnostics: ExtensionResiduals,
}

/// `U = V_A ⊕ U_{2,4}U₂`, `A_U = i(U+I)(U-I)⁻¹`.
pub fn assemble_extension(
    sys: &OperatorSystem,
    dd: &DeficiencyData,
    u24: &DefectIsometry,
    u2: &CommutantParameter,
) -> Result<ExtensionData> {
    let r = sys.dim();
    let d = dd.defect;
    if u2.matrix.shape() != (d, d) {
        return Err(Error::InvalidInput(format!(
            "parameter must be {d}x{d}, got {}x{}",
            u2.matrix.nrows(),
            u2.matrix.ncols()
        )));
    }
    if d > 0 {
        let unitarity = identity_defect(&(u2.matrix.adjoint() * &u2.matrix));
        let commutation = op_norm(&(&dd.b_on_h2 * &u2.matrix - &u2.matrix * &dd.b_on_h2));
        for (name, value, threshold) in [
            ("u2_unitarity", unitarity, UNITARY_TOL),
            ("u2_commutation", commutation, SYSTEM_TOL),
        ] {
            if value > threshold {
                return Err(Error::ValidationFailed {
                    name: name.into(),
                    value,
                    threshold,
                });
            }
        }
    }
    let ident = CMat::identity(r, r);
    let v = dd.cayley_ambient();
    let u = &v + &dd.h4 * &u24.matrix * &u2.matrix * dd.h2.adjoint();

    let unitarity = identity_defect(&(u.adjoint() * &u));
    if unitarity > UNITARY_TOL {
        return Err(Error::ValidationFailed {
            name: "u_unitarity".into(),
            value: unitarity,
            threshold: UNITARY_TOL,
        });
    }
    let (eigs, _, _) = normal_eigen(&u)?;
    let one_distance = eigs
        .iter()
        .map(|z| (z - c(1.0, 0.0)).norm())
        .fold(f64::INFINITY, f64::min);
    if one_distance <= ONE_POINT_TOL {
        return Err(Error::OnePointSpectrum {
            distance: one_distance,
            parameter_index: None,
        });
    }
    let b_commutation = op_norm(&(&sys.b * &u - &u * &sys.b));
    if b_commutation > SYSTEM_TOL {
        return Err(Error::CommutationFailed {
            residual: b_commutation,
        });
    }
    let resolvent = (&u - &ident)
        .try_inverse()
        .ok_or_else(|| Error::Computation("U - I is singular".into()))?;
    let a_u_raw = (&u + &ident) * resolvent * I;
    let hermitian_defect = op_norm(&(&a_u_raw - a_u_raw.adjoint()));
    if hermitian_defect > EXTENSION_TOL {
        return Err(Error::ValidationFailed {
            name: "a_u_hermitian_defect".into(),
            value: hermitian_defect,
            threshold: EXTENSION_TOL,
        });
    }
    let a_u = (&a_u_raw + a_u_raw.adjoint()) * c(0.5, 0.0);
    let extends_a = op_norm(&((&a_u - &sys.a.action) * &sys.a.domain_basis));
    let round_trip = match (&a_u - &ident * I).try_inverse() {
        Some(inv) => op_norm(&((&a_u + &ident * I) * inv - &u)),
        None => f64::INFINITY,
    };
    let p1 = DeficiencyData::projector(&dd.h1);
    let diagnostics = ExtensionResiduals {
        unitarity,
        one_distance,
        b_commutation,
        hermitian_defect,
        extends_a,
        cayley_round_trip: round_trip,
        agrees_with_cayley: op_norm(&((&u - &v) * p1)),
    };
    if extends_a > EXTENSION_TOL {
        return Err(Error::ValidationFailed {
            name: "extends_a".into(),
            value: extends_a,
            threshold: EXTENSION_TOL,
        });
    }
    Ok(ExtensionData {
        u,
        a_u,
        a_u_raw,
        parameter: u2.source.clone(),
        diagnostics,
    })
}

/// Everything parameter-independent that extensions are built from.
#[derive(Debug, Clone)]
pub struct ExtensionContext {
    pub deficiency: DeficiencyData,
    pub reduction: ReductionResiduals,
    pub conjugations: Option<ConjugationPair>,
    pub u24: DefectIsometry,
}

/// Decomposes, verifies the reduction, factors `B|_{H₂}` and builds `U_{2,4}`.
pub fn prepare_extensions(sys: &OperatorSystem) -> Result<ExtensionContext> {
    let dd = cayley_decompose(sys)?;
    let reduction = verify_reduction(sys, &dd, SYSTEM_TOL)?;
    let (conjugations, u24) = if dd.defect == 0 {
        (
            None,
            build_u24(
                &sys.j,
                &AntilinearOperator::new(CMat::zeros(0, 0)),
                &dd,
                &sys.b,
            )?,
        )
    } else {
        let pair = godic_lucenko_factor(&dd.b_on_h2)?;
        let u24 = build_u24(&sys.j, &pair.k, &dd, &sys.b)?;
        (Some(pair), u24)
    };
    Ok(ExtensionContext {
        deficiency: dd,
        reduction,
        conjugations,
        u24,
    })
}
