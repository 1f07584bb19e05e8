//! The operator triple on the embedded space: the power shift `A`
//! (`x_{m,n} ↦ x_{m+1,n}`, symmetric, partially defined), the frequency
//! shift `B` (`x_{m,n} ↦ x_{m,n+1}`, unitary) and the conjugation `J`
//! (`x_{m,n} ↦ x_{m,-n}`, antilinear).
//!
//! All three are recovered from the embedding by least squares, `Y·X⁺`,
//! with the pseudoinverse cut tied to the Gram rank threshold. The
//! least-squares residual is the numerical form of well-definedness.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gns::GnsSpace;
use crate::linalg::{identity_defect, op_norm, pinv, polar_unitary, CMat, CVec, C64};
use crate::moments::MomentIndex;

/// Relative least-squares residual above which an operator is ill defined.
pub const WELL_DEFINED_TOL: f64 = 1e-8;
/// Threshold for every identity checked by [`validate_system`].
pub const SYSTEM_TOL: f64 = 1e-9;
/// Largest isometry defect of the least-squares `B` that polar snapping may repair.
pub const ISOMETRY_REPAIR_TOL: f64 = 1e-6;
/// Largest compression asymmetry of the least-squares `A` that symmetrization may repair.
pub const SYMMETRY_REPAIR_TOL: f64 = 1e-6;

fn conj(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

/// Linear operator defined on a subspace `D` of the ambient space.
#[derive(Debug, Clone)]
pub struct PartialOperator {
    pub ambient_dim: usize,
    /// Orthonormal columns spanning `D`.
    pub domain_basis: CMat,
    /// Window indices whose embedded vectors span `D`.
    pub domain_indices: Vec<MomentIndex>,
    /// Acts as the operator on `D` and as zero on `D^⊥`.
    pub action: CMat,
    pub domain_projector: CMat,
    pub well_defined_residual: f64,
    /// `‖P_D (A₀ - A₀^H) P_D‖` of the least-squares `A₀` before its
    /// compression was replaced by the Hermitian part.
    pub pre_repair_symmetry_defect: f64,
    /// Smallest kept over largest dropped singular value of the domain family.
    pub domain_gap_ratio: f64,
}

impl PartialOperator {
    pub fn domain_dim(&self) -> usize {
        self.domain_basis.ncols()
    }

    /// `‖(I - P_D) v‖ / ‖v‖`.
    pub fn off_domain(&self, v: &CVec) -> f64 {
        let n = v.norm();
        if n == 0.0 {
            return 0.0;
        }
        (v - &self.domain_projector * v).norm() / n
    }

    pub fn apply(&self, v: &CVec, tol: f64) -> Option<CVec> {
        (self.off_domain(v) <= tol).then(|| &self.action * v)
    }

    /// `‖P_D (A - A^H) P_D‖`.
    pub fn symmetry_defect(&self) -> f64 {
        let p = &self.domain_projector;
        op_norm(&(p * (&self.action - self.action.adjoint()) * p))
    }
}

/// Antilinear map `v ↦ M · conj(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AntilinearOperator {
    pub matrix: CMat,
}

impl AntilinearOperator {
    pub fn new(matrix: CMat) -> Self {
        Self { matrix }
    }

    /// Plain complex conjugation of coordinates.
    pub fn coordinate_conjugation(dim: usize) -> Self {
        Self::new(CMat::identity(dim, dim))
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        &self.matrix * v.map(|z| z.conj())
    }

    /// `self ∘ other`, which is linear.
    pub fn compose(&self, other: &AntilinearOperator) -> CMat {
        &self.matrix * conj(&other.matrix)
    }

    /// `‖M conj(M) - I‖`; zero iff the map is an involution.
    pub fn involution_defect(&self) -> f64 {
        identity_defect(&self.compose(self))
    }

    /// `‖M^H M - I‖`; zero iff `(Jx, Jy) = (y, x)`.
    pub fn isometry_defect(&self) -> f64 {
        identity_defect(&(self.matrix.adjoint() * &self.matrix))
    }
}

fn relative_residual(action: &CMat, x: &CMat, y: &CMat) -> f64 {
    op_norm(&(action * x - y)) / (1.0 + op_norm(y))
}

/// `A: x_{m,n} ↦ x_{m+1,n}` on `D = span{x_{m,n} : m ≤ M-1}`.
pub fn build_shift_a(gns: &GnsSpace) -> Result<PartialOperator> {
    let w = &gns.window;
    if w.max_power < 1 {
        return Err(Error::InvalidInput("shift A needs max_power >= 1".into()));
    }
    let domain: Vec<MomentIndex> = w.indices().filter(|i| i.m < w.max_power as i64).collect();
    let image: Vec<MomentIndex> = domain
        .iter()
        .map(|i| MomentIndex::new(i.m + 1, i.n))
        .collect();
    let x = gns.columns(&domain)?;
    let y = gns.columns(&image)?;
    let (x_pinv, split) = pinv(&x, gns.singular_threshold());
    let raw = &y * x_pinv;
    let projector = &split.u * split.u.adjoint();
    // Truncating a barely-resolved Gram direction leaves the compression
    // asymmetric at the level of the dropped eigenvalue; the Cayley
    // transform needs it exactly Hermitian, so repair it like `B`.
    let skew = &projector * (&raw - raw.adjoint()) * &projector;
    let pre_repair = op_norm(&skew);
    if pre_repair > SYMMETRY_REPAIR_TOL {
        return Err(Error::ValidationFailed {
            name: "a_symmetry".into(),
            value: pre_repair,
            threshold: SYMMETRY_REPAIR_TOL,
        });
    }
    let action = raw - skew * C64::new(0.5, 0.0);
    let residual = relative_residual(&action, &x, &y);
    if residual > WELL_DEFINED_TOL {
        return Err(Error::IllDefined {
            operator: "A",
            residual,
        });
    }
    Ok(PartialOperator {
        pre_repair_symmetry_defect: pre_repair,
        ambient_dim: gns.rank,
        domain_gap_ratio: split.gap_ratio(),
        domain_basis: split.u,
        domain_indices: domain,
        action,
        domain_projector: projector,
        well_defined_residual: residual,
    })
}

/// The unitary frequency shift plus the diagnostics of its construction.
#[derive(Debug, Clone)]
pub struct UnitaryShift {
    pub matrix: CMat,
    /// `‖B₀^H B₀ - I‖` of the least-squares solution before polar snapping.
    pub pre_correction_defect: f64,
    pub consistency_residual: f64,
}

/// `B: x_{m,n} ↦ x_{m,n+1}`, determined by the `|n| ≤ N-1` sub-window.
pub fn build_shift_b(gns: &GnsSpace) -> Result<UnitaryShift> {
    let w = &gns.window;
    if w.max_freq < 1 {
        return Err(Error::InvalidInput(
            "shift B needs max_freq >= 1 (use the identity for N = 0)".into(),
        ));
    }
    let inner = w.max_freq as i64 - 1;
    let domain: Vec<MomentIndex> = w.indices().filter(|i| i.n.abs() <= inner).collect();
    let image: Vec<MomentIndex> = domain
        .iter()
        .map(|i| MomentIndex::new(i.m, i.n + 1))
        .collect();
    let x = gns.columns(&domain)?;
    let y = gns.columns(&image)?;
    let (x_pinv, split) = pinv(&x, gns.singular_threshold());
    if split.rank() < gns.rank {
        return Err(Error::NotSaturated {
            domain_rank: split.rank(),
            rank: gns.rank,
        });
    }
    let b0 = &y * x_pinv;
    let consistency = relative_residual(&b0, &x, &y);
    if consistency > WELL_DEFINED_TOL {
        return Err(Error::IllDefined {
            operator: "B",
            residual: consistency,
        });
    }
    let defect = identity_defect(&(b0.adjoint() * &b0));
    if defect > ISOMETRY_REPAIR_TOL {
        return Err(Error::IsometryViolation { defect });
    }
    Ok(UnitaryShift {
        matrix: polar_unitary(&b0),
        pre_correction_defect: defect,
        consistency_residual: consistency,
    })
}

/// `J: Σ α x_{m,n} ↦ Σ conj(α) x_{m,-n}` as `M · conj(·)`.
pub fn build_conjugation_j(gns: &GnsSpace) -> Result<(AntilinearOperator, f64)> {
    let all: Vec<MomentIndex> = gns.window.indices().collect();
    let mirrored: Vec<MomentIndex> = all.iter().map(|i| MomentIndex::new(i.m, -i.n)).collect();
    let x = conj(&gns.columns(&all)?);
    let y = gns.columns(&mirrored)?;
    let (x_pinv, _) = pinv(&x, gns.singular_threshold());
    let matrix = &y * x_pinv;
    let residual = relative_residual(&matrix, &x, &y);
    if residual > WELL_DEFINED_TOL {
        return Err(Error::IllDefined {
            operator: "J",
            residual,
        });
    }
    Ok((AntilinearOperator::new(matrix), residual))
}

/// Named residual norms of the operator identities.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SystemResiduals {
    pub a_well_defined: f64,
    pub a_symmetry: f64,
    pub b_unitarity: f64,
    pub b_domain_invariance: f64,
    pub j_well_defined: f64,
    pub j_involution: f64,
    pub j_isometry: f64,
    pub j_domain_invariance: f64,
    pub ab_commutation: f64,
    pub aj_commutation: f64,
    pub jb_relation: f64,
}

impl SystemResiduals {
    pub fn named(&self) -> [(&'static str, f64); 11] {
        [
            ("a_well_defined", self.a_well_defined),
            ("a_symmetry", self.a_symmetry),
            ("b_unitarity", self.b_unitarity),
            ("b_domain_invariance", self.b_domain_invariance),
            ("j_well_defined", self.j_well_defined),
            ("j_involution", self.j_involution),
            ("j_isometry", self.j_isometry),
            ("j_domain_invariance", self.j_domain_invariance),
            ("ab_commutation", self.ab_commutation),
            ("aj_commutation", self.aj_commutation),
            ("jb_relation", self.jb_relation),
        ]
    }

    pub fn max(&self) -> f64 {
        self.named().iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }
}

/// Validated operator triple together with the cyclic vector `x_{0,0}`.
#[derive(Debug, Clone)]
pub struct OperatorSystem {
    pub gns: GnsSpace,
    pub a: PartialOperator,
    pub b: CMat,
    pub j: AntilinearOperator,
    pub x00: CVec,
    pub residuals: SystemResiduals,
}

impl OperatorSystem {
    pub fn dim(&self) -> usize {
        self.gns.rank
    }
}

pub fn compute_residuals(
    a: &PartialOperator,
    b: &CMat,
    j: &AntilinearOperator,
    j_well_defined: f64,
) -> SystemResiduals {
    let n = a.ambient_dim;
    let p = &a.domain_projector;
    let off = CMat::identity(n, n) - p;
    let am = &a.action;
    let jm = &j.matrix;
    SystemResiduals {
        a_well_defined: a.well_defined_residual,
        a_symmetry: a.symmetry_defect(),
        b_unitarity: identity_defect(&(b.adjoint() * b)),
        b_domain_invariance: op_norm(&(&off * b * p)),
        j_well_defined,
        j_involution: j.involution_defect(),
        j_isometry: j.isometry_defect(),
        j_domain_invariance: op_norm(&(&off * jm * conj(p))),
        ab_commutation: op_norm(&((am * b - b * am) * p)),
        aj_commutation: op_norm(&((am * jm - jm * conj(am)) * conj(p))),
        jb_relation: op_norm(&(jm * conj(b) - b.adjoint() * jm)),
    }
}

/// Checks every operator identity and assembles the system.
pub fn validate_system(
    a: PartialOperator,
    b: CMat,
    j: AntilinearOperator,
    j_well_defined: f64,
    gns: GnsSpace,
) -> Result<OperatorSystem> {
    let residuals = compute_residuals(&a, &b, &j, j_well_defined);
    if residuals.b_domain_invariance > SYSTEM_TOL {
        return Err(Error::DomainNotInvariant {
            residual: residuals.b_domain_invariance,
        });
    }
    if let Some((name, value)) = residuals.named().into_iter().find(|(_, v)| *v > SYSTEM_TOL) {
        return Err(Error::ValidationFailed {
            name: name.to_string(),
            value,
            threshold: SYSTEM_TOL,
        });
    }
    Ok(OperatorSystem {
        x00: gns.x00(),
        gns,
        a,
        b,
        j,
        residuals,
    })
}

/// Builds `A`, `B` (the identity when `N = 0`) and `J`, then validates.
pub fn build_system(gns: GnsSpace) -> Result<OperatorSystem> {
    let a = build_shift_a(&gns)?;
    let b = if gns.window.max_freq == 0 {
        CMat::identity(gns.rank, gns.rank)
    } else {
        build_shift_b(&gns)?.matrix
    };
    let (j, j_residual) = build_conjugation_j(&gns)?;
    validate_system(a, b, j, j_residual, gns)
}

/// Outcome of evaluating `A^m B^n x_{0,0}` along in-domain orbits.
#[derive(Debug, Clone, Default)]
pub struct OrbitReport {
    /// `‖A^m B^n x00 - x_{m,n}‖` per reached index.
    pub cyclicity: Vec<(MomentIndex, f64)>,
    /// `|(A^m B^n x00, x00) - G[(m,n),(0,0)]| / (1 + |G|)` per reached index.
    pub moments: Vec<(MomentIndex, f64)>,
    /// Indices whose orbit left `D(A)` at an intermediate power.
    pub skipped: Vec<MomentIndex>,
}

impl OrbitReport {
    pub fn max_cyclicity(&self) -> f64 {
        self.cyclicity.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }

    pub fn max_moment(&self) -> f64 {
        self.moments.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }
}

/// Applies `B^n` then `A` one power at a time with a domain check before
/// each application of `A`.
pub fn orbit_check(sys: &OperatorSystem, domain_tol: f64) -> Result<OrbitReport> {
    let mut report = OrbitReport::default();
    let w = &sys.gns.window;
    let b_inv = sys.b.adjoint();
    let origin = w.position(MomentIndex::new(0, 0)).expect("origin");
    for idx in w.indices() {
        let step = if idx.n >= 0 { &sys.b } else { &b_inv };
        let mut v = sys.x00.clone();
        for _ in 0..idx.n.unsigned_abs() {
            v = step * v;
        }
        let mut reached = true;
        for _ in 0..idx.m {
            match sys.a.apply(&v, domain_tol) {
                Some(next) => v = next,
                None => {
                    reached = false;
                    break;
                }
            }
        }
        if !reached {
            report.skipped.push(idx);
            continue;
        }
        let target = sys.gns.vector(idx)?;
        report.cyclicity.push((idx, (&v - &target).norm()));
        let p = w.position(idx).expect("window index");
        let s = sys.gns.gram[(p, origin)];
        let got = crate::linalg::inner(&v, &sys.x00);
        report
            .moments
            .push((idx, (got - s).norm() / (1.0 + s.norm())));
    }
    Ok(report)
}
