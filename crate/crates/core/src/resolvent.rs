//! Generalized resolvents from quasi-self-adjoint extensions.
//!
//! A contraction `C: H₂ → H₄` (coordinates in the bases chosen by the
//! deficiency decomposition) defines `A_C` on `D(A) + (C - I)H₂` by
//! `A_C(f + Cψ - ψ) = Af + iCψ + iψ`. For `Im λ > 0` the resolvent is
//! `(A_C - λ)⁻¹`; for `Im λ < 0` it is built from the adjoint parameter
//! `C*: H₄ → H₂`, whose extension acts as `f + C*φ - φ ↦ Af - iC*φ - iφ`.
//! Unitary commuting `C` reproduce the canonical extensions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extension::{CommutantParameter, DefectIsometry, DeficiencyData};
use crate::linalg::{c, condition_number, inner, op_norm, rank_split, CMat, C64, I};
use crate::moments::{AtomicMeasure, MomentIndex};
use crate::operators::{OperatorSystem, SYSTEM_TOL};

pub const CONTRACTION_SLACK: f64 = 1e-12;
pub const MAX_PENCIL_CONDITION: f64 = 1e12;

/// A constant contraction parameter `C: H₂ → H₄`.
#[derive(Debug, Clone)]
pub struct ContractionParameter {
    pub matrix: CMat,
    pub norm: f64,
    /// `‖B(ι₄Cι₂*) - (ι₄Cι₂*)B‖`.
    pub commutation_residual: f64,
    pub label: String,
}

impl ContractionParameter {
    /// Validates the norm and records (but does not enforce) commutation
    /// with `B`, so non-admissible parameters remain testable.
    pub fn new(
        sys: &OperatorSystem,
        dd: &DeficiencyData,
        matrix: CMat,
        label: impl Into<String>,
    ) -> Result<Self> {
        let d = dd.defect;
        if matrix.shape() != (d, d) {
            return Err(Error::InvalidInput(format!(
                "contraction must be {d}x{d}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let norm = op_norm(&matrix);
        if norm > 1.0 + CONTRACTION_SLACK {
            return Err(Error::InvalidInput(format!(
                "contraction norm {norm} exceeds 1"
            )));
        }
        let ambient = &dd.h4 * &matrix * dd.h2.adjoint();
        let commutation_residual = op_norm(&(&sys.b * &ambient - &ambient * &sys.b));
        Ok(Self {
            matrix,
            norm,
            commutation_residual,
            label: label.into(),
        })
    }

    /// `C = U_{2,4}U₂`, the parameter of a canonical extension.
    pub fn canonical(
        sys: &OperatorSystem,
        dd: &DeficiencyData,
        u24: &DefectIsometry,
        u2: &CommutantParameter,
    ) -> Result<Self> {
        Self::new(
            sys,
            dd,
            &u24.matrix * &u2.matrix,
            format!("canonical:{}", u2.source),
        )
    }

    pub fn scaled(
        sys: &OperatorSystem,
        dd: &DeficiencyData,
        u24: &DefectIsometry,
        t: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidInput(format!("scale {t} outside [0, 1]")));
        }
        Self::new(sys, dd, &u24.matrix * c(t, 0.0), format!("scale:{t}"))
    }

    pub fn zero(sys: &OperatorSystem, dd: &DeficiencyData) -> Result<Self> {
        Self::new(sys, dd, CMat::zeros(dd.defect, dd.defect), "zero")
    }

    pub fn is_admissible(&self) -> bool {
        self.commutation_residual <= SYSTEM_TOL
    }
}

#[derive(Debug, Clone)]
pub struct QuasiExtension {
    pub a_c: CMat,
    pub domain_dim: usize,
    /// `‖(A_C - A)P_D‖`.
    pub agrees_with_a: f64,
    /// `‖A_C(Cψ - ψ) - i(Cψ + ψ)‖` over unit `ψ`.
    pub defect_rule: f64,
}

/// Solves `A_C · domain = images` for square, full-rank `domain`.
fn extension_from_rules(
    sys: &OperatorSystem,
    from: &CMat,
    to: &CMat,
    param: &CMat,
    sign: f64,
) -> Result<QuasiExtension> {
    let r = sys.dim();
    let a = &sys.a;
    let dim_d = a.domain_dim();
    let moved = to * param - from;
    let image = (to * param + from) * (I * sign);
    let mut domain = CMat::zeros(r, dim_d + moved.ncols());
    let mut images = CMat::zeros(r, dim_d + moved.ncols());
    domain.columns_mut(0, dim_d).copy_from(&a.domain_basis);
    images
        .columns_mut(0, dim_d)
        .copy_from(&(&a.action * &a.domain_basis));
    domain.columns_mut(dim_d, moved.ncols()).copy_from(&moved);
    images.columns_mut(dim_d, moved.ncols()).copy_from(&image);
    let rank = rank_split(&domain, 1e-10 * op_norm(&domain).max(1.0)).rank();
    if rank < r || domain.ncols() != r {
        return Err(Error::DeficientDomain { rank, expected: r });
    }
    let inv = domain
        .try_inverse()
        .ok_or(Error::DeficientDomain { rank, expected: r })?;
    let a_c = &images * inv;
    let agrees_with_a = op_norm(&((&a_c - &a.action) * &a.domain_basis));
    let defect_rule = op_norm(&(&a_c * &moved - &image));
    Ok(QuasiExtension {
        a_c,
        domain_dim: rank,
        agrees_with_a,
        defect_rule,
    })
}

pub fn build_quasi_extension(
    sys: &OperatorSystem,
    dd: &DeficiencyData,
    param: &ContractionParameter,
) -> Result<QuasiExtension> {
    extension_from_rules(sys, &dd.h2, &dd.h4, &param.matrix, 1.0)
}

/// Extension for the adjoint parameter `C*: H₄ → H₂`.
pub fn build_adjoint_quasi_extension(
    sys: &OperatorSystem,
    dd: &DeficiencyData,
    param: &ContractionParameter,
) -> Result<QuasiExtension> {
    extension_from_rules(sys, &dd.h4, &dd.h2, &param.matrix.adjoint(), -1.0)
}

fn check_nonreal(z: C64) -> Result<()> {
    if z.im == 0.0 || !z.im.is_finite() || !z.re.is_finite() {
        return Err(Error::InvalidInput("z must be non-real".into()));
    }
    Ok(())
}

pub fn generalized_resolvent(
    sys: &OperatorSystem,
    dd: &DeficiencyData,
    param: &ContractionParameter,
    z: C64,
) -> Result<CMat> {
    check_nonreal(z)?;
    let ext = if z.im > 0.0 {
        build_quasi_extension(sys, dd, param)?
    } else {
        build_adjoint_quasi_extension(sys, dd, param)?
    };
    let r = sys.dim();
    let pencil = &ext.a_c - CMat::identity(r, r) * z;
    let condition = condition_number(&pencil);
    if condition.is_nan() || condition > MAX_PENCIL_CONDITION {
        return Err(Error::SingularPencil { condition });
    }
    pencil
        .try_inverse()
        .ok_or(Error::SingularPencil { condition })
}

/// Index split `(m1, m2, n1, n2)` pairing `x_{m1,n2}` with `x_{m2,-n1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexSplit {
    pub m1: i64,
    pub m2: i64,
    pub n1: i64,
    pub n2: i64,
}

impl IndexSplit {
    pub fn new(m1: i64, m2: i64, n1: i64, n2: i64) -> Self {
        Self { m1, m2, n1, n2 }
    }

    /// Every split whose vectors lie in the embedding window.
    pub fn all_in_window(sys: &OperatorSystem) -> Vec<Self> {
        let w = &sys.gns.window;
        let (mp, nf) = (w.max_power as i64, w.max_freq as i64);
        let mut out = Vec::new();
        for m1 in 0..=mp {
            for m2 in 0..=mp {
                for n1 in -nf..=nf {
                    for n2 in -nf..=nf {
                        out.push(Self::new(m1, m2, n1, n2));
                    }
                }
            }
        }
        out
    }
}

/// `|(R_z x_{m1,n2}, x_{m2,-n1}) - Σ w x^{m1+m2} e^{i(n1+n2)φ} / (x - z)|`.
pub fn resolvent_moment_residual(
    sys: &OperatorSystem,
    resolvent: &CMat,
    z: C64,
    split: IndexSplit,
    measure: &AtomicMeasure,
) -> Result<f64> {
    let left = sys.gns.vector(MomentIndex::new(split.m1, split.n2))?;
    let right = sys.gns.vector(MomentIndex::new(split.m2, -split.n1))?;
    let got = inner(&(resolvent * left), &right);
    let power = (split.m1 + split.m2) as i32;
    let freq = (split.n1 + split.n2) as f64;
    let want: C64 = measure
        .atoms()
        .iter()
        .map(|a| C64::from_polar(a.weight * a.x.powi(power), freq * a.phi) / (c(a.x, 0.0) - z))
        .sum();
    Ok((got - want).norm())
}

pub fn resolvent_moment_check(
    sys: &OperatorSystem,
    dd: &DeficiencyData,
    param: &ContractionParameter,
    z: C64,
    split: IndexSplit,
    measure: &AtomicMeasure,
) -> Result<f64> {
    let r = generalized_resolvent(sys, dd, param, z)?;
    resolvent_moment_residual(sys, &r, z, split, measure)
}

/// Property residuals of `R_z` for one parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventReport {
    pub z: [f64; 2],
    pub parameter: String,
    pub parameter_norm: f64,
    pub parameter_commutation: f64,
    pub norm: f64,
    /// `max(0, ‖R_z‖ - 1/|Im z|)`.
    pub norm_bound_excess: f64,
    /// `‖R_zᴴ - R_{z̄}‖`.
    pub adjoint_symmetry: f64,
    /// `‖B R_z - R_z B‖`.
    pub b_commutation: f64,
}

pub fn resolvent_report(
    sys: &OperatorSystem,
    dd: &DeficiencyData,
    param: &ContractionParameter,
    z: C64,
) -> Result<ResolventReport> {
    let rz = generalized_resolvent(sys, dd, param, z)?;
    let rzbar = generalized_resolvent(sys, dd, param, z.conj())?;
    let norm = op_norm(&rz);
    Ok(ResolventReport {
        z: [z.re, z.im],
        parameter: param.label.clone(),
        parameter_norm: param.norm,
        parameter_commutation: param.commutation_residual,
        norm,
        norm_bound_excess: (norm - 1.0 / z.im.abs()).max(0.0),
        adjoint_symmetry: op_norm(&(rz.adjoint() - rzbar)),
        b_commutation: op_norm(&(&sys.b * &rz - &rz * &sys.b)),
    })
}

/// `Im(R_{t+iε} x₀₀, x₀₀)` along `ts`, for manual inspection only.
pub fn stieltjes_profile(
    sys: &OperatorSystem,
    dd: &DeficiencyData,
    param: &ContractionParameter,
    ts: &[f64],
    eps: f64,
) -> Result<Vec<(f64, f64)>> {
    ts.iter()
        .map(|&t| {
            let r = generalized_resolvent(sys, dd, param, c(t, eps))?;
            Ok((t, inner(&(r * &sys.x00), &sys.x00).im))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::{
        assemble_extension, commutant_unitary_from_seed, prepare_extensions, ExtensionContext,
    };
    use crate::gns::{embed_table, DEFAULT_RANK_TOL};
    use crate::linalg::{hermitian_eigen, I};
    use crate::moments::{compute_moments, Atom};
    use crate::operators::build_system;
    use crate::spectral::joint_diagonalize;
    use std::f64::consts::FRAC_PI_2;

    fn setup(
        atoms: &[(f64, f64, f64)],
        mp: usize,
        mf: usize,
    ) -> (OperatorSystem, ExtensionContext) {
        let mu = AtomicMeasure::new(atoms.iter().map(|&(x, p, w)| Atom::new(x, p, w))).unwrap();
        let t = compute_moments(&mu, mp, mf).unwrap();
        let sys = build_system(embed_table(&t, DEFAULT_RANK_TOL).unwrap()).unwrap();
        let ctx = prepare_extensions(&sys).unwrap();
        (sys, ctx)
    }

    fn three() -> (OperatorSystem, ExtensionContext) {
        setup(&[(0.0, 0.0, 1.0), (1.0, 0.0, 1.0), (2.0, 0.0, 1.0)], 2, 0)
    }

    fn mixed() -> (OperatorSystem, ExtensionContext) {
        setup(
            &[
                (0.0, FRAC_PI_2, 1.0),
                (1.0, FRAC_PI_2, 0.5),
                (2.0, -FRAC_PI_2, 0.8),
                (3.0, -FRAC_PI_2, 1.2),
            ],
            1,
            2,
        )
    }

    const ZS: [C64; 3] = [C64::new(0.0, 1.0), C64::new(0.0, 2.0), C64::new(1.0, 1.0)];

    #[test]
    fn scalar_resolvent() {
        let (sys, ctx) = setup(&[(1.5, 0.3, 2.0)], 1, 1);
        assert_eq!(ctx.deficiency.defect, 0);
        let p = ContractionParameter::zero(&sys, &ctx.deficiency).unwrap();
        for z in ZS {
            let r = generalized_resolvent(&sys, &ctx.deficiency, &p, z).unwrap();
            assert!((r[(0, 0)] - c(1.0, 0.0) / (c(1.5, 0.0) - z)).norm() < 1e-12);
        }
    }

    #[test]
    fn canonical_parameter_reproduces_extension() {
        for (sys, ctx) in [three(), mixed()] {
            let dd = &ctx.deficiency;
            let u2 = commutant_unitary_from_seed(&dd.b_on_h2, 3).unwrap();
            let ext = assemble_extension(&sys, dd, &ctx.u24, &u2).unwrap();
            let p = ContractionParameter::canonical(&sys, dd, &ctx.u24, &u2).unwrap();
            assert!(p.is_admissible());
            let q = build_quasi_extension(&sys, dd, &p).unwrap();
            assert!(op_norm(&(&q.a_c - &ext.a_u_raw)) < 1e-8);
            let qa = build_adjoint_quasi_extension(&sys, dd, &p).unwrap();
            assert!(op_norm(&(&qa.a_c - &ext.a_u_raw)) < 1e-8);
            for z in ZS {
                let r = generalized_resolvent(&sys, dd, &p, z).unwrap();
                let n = sys.dim();
                let back = &r * (&ext.a_u - CMat::identity(n, n) * z);
                assert!(op_norm(&(back - CMat::identity(n, n))) < 1e-8);
            }
        }
    }

    #[test]
    fn canonical_resolvent_has_spectral_form() {
        let (sys, ctx) = mixed();
        let dd = &ctx.deficiency;
        let u2 = CommutantParameter::identity(dd.defect);
        let ext = assemble_extension(&sys, dd, &ctx.u24, &u2).unwrap();
        let js = joint_diagonalize(&ext.a_u, &sys.b, 1e-6).unwrap();
        let p = ContractionParameter::canonical(&sys, dd, &ctx.u24, &u2).unwrap();
        let z = c(0.3, -0.7);
        let r = generalized_resolvent(&sys, dd, &p, z).unwrap();
        let mut spectral = CMat::zeros(sys.dim(), sys.dim());
        for t in &js.triples {
            spectral += &t.vec * t.vec.adjoint() / (c(t.s, 0.0) - z);
        }
        assert!(op_norm(&(r - spectral)) < 1e-8);
    }

    #[test]
    fn zero_parameter_is_dissipative_extension() {
        let (sys, ctx) = three();
        let dd = &ctx.deficiency;
        let p = ContractionParameter::zero(&sys, dd).unwrap();
        let q = build_quasi_extension(&sys, dd, &p).unwrap();
        assert!(q.agrees_with_a <= 1e-10);
        assert!(q.defect_rule <= 1e-9);
        // Imaginary part of A_C is nonzero: (A_C g, g) for g = -ψ is i‖ψ‖².
        let im_part = (&q.a_c - q.a_c.adjoint()) * c(0.0, -0.5);
        let (vals, _) = hermitian_eigen(&im_part);
        assert!(vals.iter().any(|v| v.abs() > 1e-3));
    }

    #[test]
    fn resolvent_properties_for_contractions() {
        for (sys, ctx) in [three(), mixed()] {
            let dd = &ctx.deficiency;
            let params = [
                ContractionParameter::zero(&sys, dd).unwrap(),
                ContractionParameter::scaled(&sys, dd, &ctx.u24, 0.5).unwrap(),
                ContractionParameter::scaled(&sys, dd, &ctx.u24, 1.0).unwrap(),
            ];
            for p in &params {
                assert!(p.is_admissible(), "{}", p.commutation_residual);
                for z in ZS.iter().flat_map(|z| [*z, z.conj()]) {
                    let rep = resolvent_report(&sys, dd, p, z).unwrap();
                    assert!(rep.norm_bound_excess <= 1e-8, "{rep:?}");
                    assert!(rep.adjoint_symmetry <= 1e-8, "{rep:?}");
                    assert!(rep.b_commutation <= 1e-8, "{rep:?}");
                }
            }
        }
    }

    #[test]
    fn non_commuting_parameter_breaks_b_commutation() {
        let (sys, ctx) = mixed();
        let dd = &ctx.deficiency;
        assert_eq!(dd.defect, 2);
        // A unitary mixing the two eigenspaces of B on H₂.
        let w = hermitian_eigen(&((&dd.b_on_h2 - dd.b_on_h2.adjoint()) * c(0.0, -0.5))).1;
        let swap =
            CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let mix = &w * swap * w.adjoint();
        let p = ContractionParameter::new(&sys, dd, &ctx.u24.matrix * mix * c(0.5, 0.0), "mix")
            .unwrap();
        assert!(!p.is_admissible());
        let rep = resolvent_report(&sys, dd, &p, I).unwrap();
        assert!(rep.b_commutation > 1e-4, "{rep:?}");
        assert!(rep.norm_bound_excess <= 1e-8);
    }

    #[test]
    fn moment_identity_for_canonical_solutions() {
        for (sys, ctx) in [three(), mixed()] {
            let dd = &ctx.deficiency;
            let u2 = commutant_unitary_from_seed(&dd.b_on_h2, 5).unwrap();
            let ext = assemble_extension(&sys, dd, &ctx.u24, &u2).unwrap();
            let js = joint_diagonalize(&ext.a_u, &sys.b, 1e-6).unwrap();
            let atoms: Vec<Atom> = js
                .triples
                .iter()
                .map(|t| Atom::new(t.s, t.phi, inner(&sys.x00, &t.vec).norm_sqr()))
                .filter(|a| a.weight > 1e-14)
                .collect();
            let mu = AtomicMeasure::new(atoms).unwrap();
            let p = ContractionParameter::canonical(&sys, dd, &ctx.u24, &u2).unwrap();
            for z in ZS {
                let r = generalized_resolvent(&sys, dd, &p, z).unwrap();
                for split in IndexSplit::all_in_window(&sys) {
                    let res = resolvent_moment_residual(&sys, &r, z, split, &mu).unwrap();
                    assert!(res <= 1e-8, "{split:?} z={z} residual {res}");
                }
            }
        }
    }

    #[test]
    fn single_atom_identity_and_split_invariance() {
        let (sys, ctx) = setup(&[(0.7, 1.1, 1.5)], 2, 1);
        let mu = AtomicMeasure::new([Atom::new(0.7, 1.1, 1.5)]).unwrap();
        let p = ContractionParameter::zero(&sys, &ctx.deficiency).unwrap();
        let a = resolvent_moment_check(
            &sys,
            &ctx.deficiency,
            &p,
            I,
            IndexSplit::new(1, 0, 1, 0),
            &mu,
        )
        .unwrap();
        let b = resolvent_moment_check(
            &sys,
            &ctx.deficiency,
            &p,
            I,
            IndexSplit::new(0, 1, 1, 0),
            &mu,
        )
        .unwrap();
        assert!(a < 1e-10 && b < 1e-10);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (sys, ctx) = three();
        let dd = &ctx.deficiency;
        let p = ContractionParameter::zero(&sys, dd).unwrap();
        assert!(matches!(
            generalized_resolvent(&sys, dd, &p, c(1.0, 0.0)),
            Err(Error::InvalidInput(_))
        ));
        assert!(
            ContractionParameter::new(&sys, dd, CMat::from_element(1, 1, c(1.5, 0.0)), "big")
                .is_err()
        );
    }
}
