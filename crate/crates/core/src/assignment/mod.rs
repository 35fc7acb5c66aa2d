//! Exact linear assignment and landmark data association.
//!
//! Three exact solvers share one contract: given a cost matrix they return a
//! one-to-one assignment of every real row minimizing the summed cost.
//!
//! * [`solve_lap_hungarian`]: Kuhn–Munkres with starred/primed zeros, square input.
//! * [`solve_lap_jv`]: Jonker–Volgenant shortest augmenting path with the
//!   column-reduction and augmenting-row-reduction initialization, square input.
//! * [`solve_lap_jv_modified`]: the rectangular shortest-augmenting-path variant
//!   (one Dijkstra-like augmentation per row, no initialization phase), which
//!   accepts `rows <= cols` directly.
//!
//! Landmark matching ([`match_landmarks`]) always uses the rectangular solver.

mod hungarian;
mod jv;
mod jv_modified;
mod matching;

use thiserror::Error;

pub use matching::{
    build_cost_matrix, match_landmarks, match_landmarks_with, Correspondence, MatchStrategy, Matching,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssignmentError {
    #[error("cost matrix is empty")]
    Empty,
    #[error("cost matrix data has {got} entries, expected {rows} x {cols}")]
    Shape { rows: usize, cols: usize, got: usize },
    #[error("cost entry ({row}, {col}) = {value} is not a finite nonnegative number")]
    InvalidEntry { row: usize, col: usize, value: f64 },
    #[error("solver requires a square matrix, got {rows} x {cols}; pad it first")]
    NotSquare { rows: usize, cols: usize },
    #[error("more rows than columns ({rows} x {cols})")]
    TooManyRows { rows: usize, cols: usize },
    #[error("no feasible assignment")]
    Infeasible,
}

/// Dense row-major cost matrix with optional zero padding.
///
/// Rows at index `>= real_rows` and columns at index `>= real_cols` are
/// padding; assignments involving them are dropped from results.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    real_rows: usize,
    real_cols: usize,
}

impl CostMatrix {
    /// Builds a matrix, padding columns with zeros when `rows > cols` so that
    /// every row can be assigned.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, AssignmentError> {
        if rows == 0 || cols == 0 {
            return Err(AssignmentError::Empty);
        }
        if data.len() != rows * cols {
            return Err(AssignmentError::Shape { rows, cols, got: data.len() });
        }
        if let Some(k) = data.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(AssignmentError::InvalidEntry { row: k / cols, col: k % cols, value: data[k] });
        }
        let m = CostMatrix { data, rows, cols, real_rows: rows, real_cols: cols };
        Ok(if rows > cols { m.padded_to(rows, rows) } else { m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, AssignmentError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(AssignmentError::Shape { rows: rows.len(), cols, got: bad.len() });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    fn padded_to(&self, rows: usize, cols: usize) -> Self {
        let mut data = vec![0.0; rows * cols];
        for r in 0..self.rows {
            data[r * cols..r * cols + self.cols].copy_from_slice(self.row(r));
        }
        CostMatrix { data, rows, cols, real_rows: self.real_rows, real_cols: self.real_cols }
    }

    /// Square version of this matrix: missing rows or columns are zero padding.
    pub fn to_square(&self) -> Self {
        let n = self.rows.max(self.cols);
        if self.rows == n && self.cols == n {
            self.clone()
        } else {
            self.padded_to(n, n)
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn real_rows(&self) -> usize {
        self.real_rows
    }

    pub fn real_cols(&self) -> usize {
        self.real_cols
    }

    pub fn is_padding(&self, row: usize, col: usize) -> bool {
        row >= self.real_rows || col >= self.real_cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, factor: f64) -> Self {
        CostMatrix { data: self.data.iter().map(|v| v * factor).collect(), ..self.clone() }
    }

    /// Converts a per-row column choice into an [`Assignment`], dropping padding.
    fn assignment_from(&self, col_for_row: &[usize]) -> Assignment {
        let pairs: Vec<(usize, usize)> = col_for_row
            .iter()
            .enumerate()
            .filter(|&(r, &c)| !self.is_padding(r, c))
            .map(|(r, &c)| (r, c))
            .collect();
        Assignment::new(pairs, |r, c| self.get(r, c))
    }
}

/// A one-to-one row→column assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `(row, col)` pairs sorted by row; padding pairs excluded.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
    pub mean_cost: f64,
}

impl Assignment {
    fn new(pairs: Vec<(usize, usize)>, cost: impl Fn(usize, usize) -> f64) -> Self {
        // summed in row order so every solver reports bit-identical totals
        let total_cost: f64 = pairs.iter().map(|&(r, c)| cost(r, c)).sum();
        let mean_cost = if pairs.is_empty() { 0.0 } else { total_cost / pairs.len() as f64 };
        Assignment { pairs, total_cost, mean_cost }
    }
}

fn require_square(c: &CostMatrix) -> Result<(), AssignmentError> {
    if c.rows != c.cols {
        return Err(AssignmentError::NotSquare { rows: c.rows, cols: c.cols });
    }
    Ok(())
}

/// Kuhn–Munkres. Requires a square (possibly padded) matrix.
pub fn solve_lap_hungarian(c: &CostMatrix) -> Result<Assignment, AssignmentError> {
    require_square(c)?;
    let cols = hungarian::solve(&c.data, c.rows);
    Ok(c.assignment_from(&cols))
}

/// Classic Jonker–Volgenant. Requires a square (possibly padded) matrix.
pub fn solve_lap_jv(c: &CostMatrix) -> Result<Assignment, AssignmentError> {
    require_square(c)?;
    let cols = jv::solve(&c.data, c.rows);
    Ok(c.assignment_from(&cols))
}

/// Rectangular shortest augmenting path; accepts `rows <= cols` without padding.
pub fn solve_lap_jv_modified(c: &CostMatrix) -> Result<Assignment, AssignmentError> {
    if c.rows > c.cols {
        return Err(AssignmentError::TooManyRows { rows: c.rows, cols: c.cols });
    }
    let cols = jv_modified::solve(&c.data, c.rows, c.cols).ok_or(AssignmentError::Infeasible)?;
    Ok(c.assignment_from(&cols))
}

/// Which exact solver to run; used by benchmarks and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LapSolver {
    Hungarian,
    JonkerVolgenant,
    ModifiedJonkerVolgenant,
}

impl LapSolver {
    pub const ALL: [LapSolver; 3] =
        [LapSolver::Hungarian, LapSolver::JonkerVolgenant, LapSolver::ModifiedJonkerVolgenant];

    pub fn name(self) -> &'static str {
        match self {
            LapSolver::Hungarian => "hungarian",
            LapSolver::JonkerVolgenant => "jv",
            LapSolver::ModifiedJonkerVolgenant => "jv_modified",
        }
    }

    /// Solves `c`, squaring it first for the solvers that need it.
    pub fn solve(self, c: &CostMatrix) -> Result<Assignment, AssignmentError> {
        match self {
            LapSolver::Hungarian => solve_lap_hungarian(&c.to_square()),
            LapSolver::JonkerVolgenant => solve_lap_jv(&c.to_square()),
            LapSolver::ModifiedJonkerVolgenant => solve_lap_jv_modified(c),
        }
    }
}
