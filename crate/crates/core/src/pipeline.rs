//! End-to-end solve: moments → embedding → operators → extensions →
//! joint spectrum → atomic measure.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extension::{
    assemble_extension, enumerate_commutant_unitaries, prepare_extensions, CommutantParameter,
    ExtensionContext, ExtensionResiduals,
};
use crate::gns::{embed_table, DEFAULT_RANK_TOL};
use crate::moments::{validate_table, MomentTable};
use crate::operators::{build_system, OperatorSystem};
use crate::spectral::{
    atom_set_distance, joint_diagonalize, synthesize_solution, JointResiduals, SolutionMeasure,
    DEFAULT_CLUSTER_TOL, DEFAULT_VERIFY_TOL, DEFAULT_WEIGHT_FLOOR,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub rank_tol: f64,
    pub cluster_tol: f64,
    pub weight_floor: f64,
    pub verify_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            cluster_tol: DEFAULT_CLUSTER_TOL,
            weight_floor: DEFAULT_WEIGHT_FLOOR,
            verify_tol: DEFAULT_VERIFY_TOL,
        }
    }
}

/// A solution together with the residuals of every stage that produced it.
#[derive(Debug, Clone)]
pub struct Solution {
    pub solution: SolutionMeasure,
    pub extension: ExtensionResiduals,
    pub spectrum: JointResiduals,
}

/// Parameter-independent state for one moment table.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub table: MomentTable,
    pub system: OperatorSystem,
    pub extensions: ExtensionContext,
    pub options: SolveOptions,
}

impl Pipeline {
    pub fn new(table: MomentTable, options: SolveOptions) -> Result<Self> {
        let report = validate_table(&table, 1e-10 * table.max_abs().max(1.0));
        if let Some(v) = report.violations.first() {
            return Err(Error::InvalidInput(format!("moment table: {v}")));
        }
        let gns = embed_table(&table, options.rank_tol)?;
        let system = build_system(gns)?;
        let extensions = prepare_extensions(&system)?;
        Ok(Self {
            table,
            system,
            extensions,
            options,
        })
    }

    pub fn defect(&self) -> usize {
        self.extensions.deficiency.defect
    }

    pub fn identity_parameter(&self) -> CommutantParameter {
        CommutantParameter::identity(self.defect())
    }

    pub fn solve(&self, parameter: &CommutantParameter) -> Result<Solution> {
        let ctx = &self.extensions;
        let ext = assemble_extension(&self.system, &ctx.deficiency, &ctx.u24, parameter)?;
        let js = joint_diagonalize(&ext.a_u, &self.system.b, self.options.cluster_tol)?;
        let mut solution = synthesize_solution(
            &js,
            &self.system.x00,
            &self.table,
            self.options.weight_floor,
            self.options.verify_tol,
        )?;
        solution.provenance = parameter.source.to_string();
        Ok(Solution {
            solution,
            extension: ext.diagnostics,
            spectrum: js.residuals,
        })
    }

    /// `count` solutions from the seeded commutant enumeration (identity
    /// first). Determinate problems yield exactly one solution.
    pub fn family(&self, count: usize, seed: u64) -> Result<Family> {
        let d = self.defect();
        let parameters = if d == 0 {
            vec![self.identity_parameter()]
        } else {
            enumerate_commutant_unitaries(&self.extensions.deficiency.b_on_h2, count, seed)?
        };
        let members = parameters
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                self.solve(p).map_err(|e| match e {
                    Error::OnePointSpectrum { distance, .. } => Error::OnePointSpectrum {
                        distance,
                        parameter_index: Some(i),
                    },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut distances = Vec::new();
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                distances.push(PairDistance {
                    first: i,
                    second: j,
                    distance: atom_set_distance(
                        &members[i].solution.measure,
                        &members[j].solution.measure,
                    ),
                });
            }
        }
        Ok(Family {
            defect: d,
            members,
            distances,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairDistance {
    pub first: usize,
    pub second: usize,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct Family {
    pub defect: usize,
    pub members: Vec<Solution>,
    pub distances: Vec<PairDistance>,
}

impl Family {
    pub fn all_verified(&self) -> bool {
        self.members.iter().all(|m| m.solution.verification.pass)
    }

    pub fn min_distance(&self) -> Option<f64> {
        self.distances.iter().map(|d| d.distance).reduce(f64::min)
    }
}
