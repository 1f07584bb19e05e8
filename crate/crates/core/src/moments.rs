//! Moment tables, atomic measures on the strip `ℝ × [-π, π)` and the
//! forward map between them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{angle_distance, c, wrap_angle, C64};

/// Atoms closer than this in `max(|Δx|, |Δφ|)` are merged on ingestion.
pub const MERGE_DISTANCE: f64 = 1e-9;

/// Index pair `(m, n)`: power `m ≥ 0`, frequency `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MomentIndex {
    pub m: i64,
    pub n: i64,
}

impl MomentIndex {
    pub const fn new(m: i64, n: i64) -> Self {
        Self { m, n }
    }
}

impl fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.m, self.n)
    }
}

/// Complete table of moments `s_{m,n}` for `0 ≤ m ≤ 2M`, `|n| ≤ 2N`.
///
/// The table is structurally complete by construction; conjugate symmetry
/// and the sign of `s_{0,0}` are checked separately by [`validate_table`].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    max_power: usize,
    max_freq: usize,
    values: Vec<C64>,
}

impl MomentTable {
    /// Builds a table by evaluating `f` at every stored index.
    pub fn from_fn(
        max_power: usize,
        max_freq: usize,
        mut f: impl FnMut(MomentIndex) -> C64,
    ) -> Result<Self> {
        if max_power < 1 {
            return Err(Error::InvalidInput("max_power must be at least 1".into()));
        }
        let mut values = Vec::with_capacity((2 * max_power + 1) * (4 * max_freq + 1));
        for m in 0..=(2 * max_power as i64) {
            for n in -(2 * max_freq as i64)..=(2 * max_freq as i64) {
                values.push(f(MomentIndex::new(m, n)));
            }
        }
        Ok(Self {
            max_power,
            max_freq,
            values,
        })
    }

    /// Builds a table from explicit entries; every stored index must appear
    /// exactly once.
    pub fn from_entries(
        max_power: usize,
        max_freq: usize,
        entries: impl IntoIterator<Item = (MomentIndex, C64)>,
    ) -> Result<Self> {
        let mut table = Self::from_fn(max_power, max_freq, |_| c(f64::NAN, f64::NAN))?;
        let mut seen = vec![false; table.values.len()];
        for (idx, v) in entries {
            let pos = table.position(idx)?;
            if seen[pos] {
                return Err(Error::InvalidInput(format!("duplicate moment entry {idx}")));
            }
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::InvalidInput(format!("moment {idx} is not finite")));
            }
            seen[pos] = true;
            table.values[pos] = v;
        }
        if let Some(pos) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!(
                "missing moment entry {}",
                table.index_at(pos)
            )));
        }
        Ok(table)
    }

    pub fn max_power(&self) -> usize {
        self.max_power
    }

    pub fn max_freq(&self) -> usize {
        self.max_freq
    }

    pub fn contains(&self, idx: MomentIndex) -> bool {
        idx.m >= 0 && idx.m <= 2 * self.max_power as i64 && idx.n.abs() <= 2 * self.max_freq as i64
    }

    fn width(&self) -> usize {
        4 * self.max_freq + 1
    }

    fn position(&self, idx: MomentIndex) -> Result<usize> {
        if !self.contains(idx) {
            return Err(Error::IndexOutOfWindow { m: idx.m, n: idx.n });
        }
        Ok(idx.m as usize * self.width() + (idx.n + 2 * self.max_freq as i64) as usize)
    }

    fn index_at(&self, pos: usize) -> MomentIndex {
        let m = (pos / self.width()) as i64;
        let n = (pos % self.width()) as i64 - 2 * self.max_freq as i64;
        MomentIndex::new(m, n)
    }

    pub fn get(&self, idx: MomentIndex) -> Result<C64> {
        Ok(self.values[self.position(idx)?])
    }

    pub fn set(&mut self, idx: MomentIndex, value: C64) -> Result<()> {
        let pos = self.position(idx)?;
        self.values[pos] = value;
        Ok(())
    }

    /// `s_{0,0}` as stored (real part).
    pub fn mass(&self) -> f64 {
        self.values[self.position(MomentIndex::new(0, 0)).expect("origin")].re
    }

    /// All stored entries in `(m ascending, n ascending)` order.
    pub fn entries(&self) -> impl Iterator<Item = (MomentIndex, C64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(pos, &v)| (self.index_at(pos), v))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// One weighted point mass at `(x, φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub phi: f64,
    pub weight: f64,
}

impl Atom {
    pub fn new(x: f64, phi: f64, weight: f64) -> Self {
        Self { x, phi, weight }
    }

    /// `max(|Δx|, wrapped |Δφ|)`.
    pub fn position_distance(&self, other: &Atom) -> f64 {
        (self.x - other.x)
            .abs()
            .max(angle_distance(self.phi, other.phi))
    }
}

/// Finitely many atoms with positive weights and angles in `[-π, π)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    /// Validates weights and coordinates, wraps angles into `[-π, π)` and
    /// merges atoms closer than [`MERGE_DISTANCE`].
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Result<Self> {
        let mut merged: Vec<Atom> = Vec::new();
        for atom in atoms {
            if !atom.x.is_finite() || !atom.phi.is_finite() || !atom.weight.is_finite() {
                return Err(Error::InvalidInput(
                    "atom coordinates must be finite".into(),
                ));
            }
            if atom.weight <= 0.0 {
                return Err(Error::InvalidInput("weight must be positive".into()));
            }
            let atom = Atom::new(atom.x, wrap_angle(atom.phi), atom.weight);
            match merged
                .iter_mut()
                .find(|a| a.position_distance(&atom) < MERGE_DISTANCE)
            {
                Some(existing) => existing.weight += atom.weight,
                None => merged.push(atom),
            }
        }
        Ok(Self { atoms: merged })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// `∫ x^m e^{inφ} dμ`.
    pub fn moment(&self, idx: MomentIndex) -> C64 {
        self.atoms
            .iter()
            .map(|a| C64::from_polar(a.weight * a.x.powi(idx.m as i32), idx.n as f64 * a.phi))
            .sum()
    }
}

/// Forward moment map over the rectangle `0 ≤ m ≤ 2M`, `|n| ≤ 2N`.
pub fn compute_moments(
    measure: &AtomicMeasure,
    max_power: usize,
    max_freq: usize,
) -> Result<MomentTable> {
    if measure.is_empty() {
        return Err(Error::InvalidInput(
            "measure must contain at least one atom".into(),
        ));
    }
    if let Some(a) = measure
        .atoms()
        .iter()
        .find(|a| !(-PI_F..PI_F).contains(&a.phi))
    {
        return Err(Error::InvalidInput(format!(
            "phi {} outside [-pi, pi)",
            a.phi
        )));
    }
    let mut table = MomentTable::from_fn(max_power, max_freq, |idx| measure.moment(idx))?;
    // Exact conjugate symmetry and a real mass, independent of rounding in from_polar.
    for m in 0..=(2 * max_power as i64) {
        let s = table.get(MomentIndex::new(m, 0))?;
        table.set(MomentIndex::new(m, 0), c(s.re, 0.0))?;
        for n in 1..=(2 * max_freq as i64) {
            let s = table.get(MomentIndex::new(m, n))?;
            table.set(MomentIndex::new(m, -n), s.conj())?;
        }
    }
    Ok(table)
}

const PI_F: f64 = std::f64::consts::PI;

/// `K((m,n),(k,l)) = s_{m+k, n-l}`.
pub fn kernel_value(table: &MomentTable, t: MomentIndex, r: MomentIndex) -> Result<C64> {
    table.get(MomentIndex::new(t.m + r.m, t.n - r.n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableInvariant {
    ConjugateSymmetry,
    RealMass,
    NonnegativeMass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub invariant: TableInvariant,
    pub index: MomentIndex,
    pub magnitude: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.invariant {
            TableInvariant::ConjugateSymmetry => "s(m,-n) must equal conj(s(m,n))",
            TableInvariant::RealMass => "s(0,0) must be real",
            TableInvariant::NonnegativeMass => "s(0,0) must be nonnegative",
        };
        write!(f, "{what} at {} (off by {:e})", self.index, self.magnitude)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the table invariants with an absolute entrywise tolerance. Each
/// conjugate pair is reported once, at its `n > 0` member.
pub fn validate_table(table: &MomentTable, tol: f64) -> ValidationReport {
    let mut violations = Vec::new();
    let origin = MomentIndex::new(0, 0);
    let s00 = table.get(origin).expect("origin is stored");
    if s00.im.abs() > tol {
        violations.push(Violation {
            invariant: TableInvariant::RealMass,
            index: origin,
            magnitude: s00.im.abs(),
        });
    }
    if s00.re < -tol {
        violations.push(Violation {
            invariant: TableInvariant::NonnegativeMass,
            index: origin,
            magnitude: -s00.re,
        });
    }
    for (idx, v) in table.entries() {
        if idx.n < 0 || (idx.n == 0 && idx.m == 0) {
            continue;
        }
        let mirror = table
            .get(MomentIndex::new(idx.m, -idx.n))
            .expect("mirror is stored");
        let gap = (v - mirror.conj()).norm();
        if gap > tol {
            violations.push(Violation {
                invariant: TableInvariant::ConjugateSymmetry,
                index: idx,
                magnitude: gap,
            });
        }
    }
    ValidationReport { violations }
}
