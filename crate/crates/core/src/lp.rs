//! Phase-1 simplex for linear feasibility problems `Mx = b` with simple
//! bounds on each variable.
//!
//! Bland's rule (lowest-index entering column, lowest-index leaving basic
//! variable on ratio ties) guarantees termination. Problems here have at most
//! a few dozen columns, so a dense tableau is the whole implementation.

use thiserror::Error;

/// Phase-1 objective at or below which the system counts as feasible.
pub const FEAS_TOL: f64 = 1e-9;
/// Tableau entries at or below this magnitude are treated as zero pivots.
pub const PIVOT_TOL: f64 = 1e-12;
/// Reduced costs must be below `-OPT_TOL` to enter the basis.
const OPT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Free,
    AtLeast(f64),
    AtMost(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("numerical breakdown in simplex: {0}")]
    NumericalBreakdown(String),
    #[error("malformed system: {0}")]
    Malformed(String),
}

/// Equality-constrained system with per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub n_vars: usize,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub bounds: Vec<Bound>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Feasible(Vec<f64>),
    /// The phase-1 optimum (sum of scaled artificials) stayed above tolerance.
    Infeasible {
        phase1_objective: f64,
    },
}

/// How an original variable is expressed through nonnegative columns.
#[derive(Debug, Clone, Copy)]
enum Encoding {
    /// `x = offset + sign · y[col]`
    Shifted {
        col: usize,
        offset: f64,
        sign: f64,
    },
    /// `x = y[p] − y[q]`
    Split {
        p: usize,
        q: usize,
    },
    Constant(f64),
}

impl LinearSystem {
    fn check(&self) -> Result<(), LpError> {
        if self.bounds.len() != self.n_vars {
            return Err(LpError::Malformed(format!(
                "{} bounds for {} variables",
                self.bounds.len(),
                self.n_vars
            )));
        }
        if self.rows.len() != self.rhs.len() {
            return Err(LpError::Malformed("row and rhs counts differ".into()));
        }
        if let Some(r) = self.rows.iter().position(|r| r.len() != self.n_vars) {
            return Err(LpError::Malformed(format!("row {r} has the wrong length")));
        }
        let finite = self.rows.iter().flatten().chain(&self.rhs).all(|v| v.is_finite());
        let bounds_finite = self.bounds.iter().all(|b| match *b {
            Bound::Free => true,
            Bound::AtLeast(v) | Bound::AtMost(v) | Bound::Fixed(v) => v.is_finite(),
        });
        if !finite || !bounds_finite {
            return Err(LpError::Malformed("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Max-abs violation of the equality rows at `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| (row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Runs phase 1 and returns a feasible point or the final phase-1 objective.
pub fn find_feasible_point(sys: &LinearSystem) -> Result<LpOutcome, LpError> {
    sys.check()?;

    let mut encodings = Vec::with_capacity(sys.n_vars);
    let mut n_cols = 0usize;
    for b in &sys.bounds {
        let enc = match *b {
            Bound::Free => {
                n_cols += 2;
                Encoding::Split {
                    p: n_cols - 2,
                    q: n_cols - 1,
                }
            }
            Bound::AtLeast(l) => {
                n_cols += 1;
                Encoding::Shifted {
                    col: n_cols - 1,
                    offset: l,
                    sign: 1.0,
                }
            }
            Bound::AtMost(u) => {
                n_cols += 1;
                Encoding::Shifted {
                    col: n_cols - 1,
                    offset: u,
                    sign: -1.0,
                }
            }
            Bound::Fixed(v) => Encoding::Constant(v),
        };
        encodings.push(enc);
    }

    // Rewrite each row in the nonnegative columns, scale to unit max-abs and
    // make the right-hand side nonnegative.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(sys.rows.len());
    let mut rhs: Vec<f64> = Vec::with_capacity(sys.rows.len());
    for (coeffs, &b) in sys.rows.iter().zip(&sys.rhs) {
        let mut row = vec![0.0; n_cols];
        let mut r = b;
        for (&a, enc) in coeffs.iter().zip(&encodings) {
            if a == 0.0 {
                continue;
            }
            match *enc {
                Encoding::Shifted { col, offset, sign } => {
                    row[col] += sign * a;
                    r -= a * offset;
                }
                Encoding::Split { p, q } => {
                    row[p] += a;
                    row[q] -= a;
                }
                Encoding::Constant(v) => r -= a * v,
            }
        }
        let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            let b_scale = coeffs.iter().fold(b.abs(), |m, v| m.max(v.abs())).max(1.0);
            if r.abs() > FEAS_TOL * b_scale {
                return Ok(LpOutcome::Infeasible {
                    phase1_objective: r.abs() / b_scale,
                });
            }
            continue;
        }
        let sign = if r < 0.0 { -1.0 } else { 1.0 };
        rows.push(row.iter().map(|v| sign * v / scale).collect());
        rhs.push(sign * r / scale);
    }

    let y = match phase_one(&rows, &rhs, n_cols)? {
        Phase1::Feasible(y) => y,
        Phase1::Infeasible(obj) => return Ok(LpOutcome::Infeasible { phase1_objective: obj }),
    };

    let x = encodings
        .iter()
        .map(|enc| match *enc {
            Encoding::Shifted { col, offset, sign } => offset + sign * y[col],
            Encoding::Split { p, q } => y[p] - y[q],
            Encoding::Constant(v) => v,
        })
        .collect();
    Ok(LpOutcome::Feasible(x))
}

enum Phase1 {
    Feasible(Vec<f64>),
    Infeasible(f64),
}

/// Minimizes the sum of artificials for `rows · y = rhs`, `y ≥ 0`, `rhs ≥ 0`.
fn phase_one(rows: &[Vec<f64>], rhs: &[f64], n_cols: usize) -> Result<Phase1, LpError> {
    let m = rows.len();
    if m == 0 {
        return Ok(Phase1::Feasible(vec![0.0; n_cols]));
    }
    let width = n_cols + m;
    // Tableau rows: constraint coefficients, then artificial identity, then rhs.
    let mut t: Vec<Vec<f64>> = rows
        .iter()
        .zip(rhs)
        .enumerate()
        .map(|(i, (row, &b))| {
            let mut r = row.clone();
            r.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
            r.push(b);
            r
        })
        .collect();
    let mut basis: Vec<usize> = (n_cols..width).collect();

    let max_iter = 50 * (width + m) + 1000;
    for _ in 0..max_iter {
        // Reduced costs are rebuilt from the rows whose basic variable is
        // still artificial, so rounding cannot accumulate in a separate row.
        // Artificials that have left the basis never re-enter.
        let artificial_rows: Vec<usize> = (0..m).filter(|&i| basis[i] >= n_cols).collect();
        let objective: f64 = artificial_rows.iter().map(|&i| t[i][width]).sum();
        let reduced = |j: usize| -> f64 { -artificial_rows.iter().map(|&i| t[i][j]).sum::<f64>() };
        let entering = if objective <= FEAS_TOL {
            None
        } else {
            (0..n_cols).find(|&j| reduced(j) < -OPT_TOL && !basis.contains(&j))
        };
        let Some(enter) = entering else {
            if objective > FEAS_TOL {
                return Ok(Phase1::Infeasible(objective));
            }
            let mut y = vec![0.0; n_cols];
            for (i, &b) in basis.iter().enumerate() {
                if b < n_cols {
                    y[b] = t[i][width].max(0.0);
                }
            }
            return Ok(Phase1::Feasible(y));
        };

        let mut leave: Option<(usize, f64)> = None;
        for (i, row) in t.iter().enumerate() {
            let a = row[enter];
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = row[width].max(0.0) / a;
            leave = match leave {
                None => Some((i, ratio)),
                Some((k, best)) => {
                    let tie = (ratio - best).abs() <= 1e-12 * best.abs().max(1.0);
                    if ratio < best && !tie || tie && basis[i] < basis[k] {
                        Some((i, ratio))
                    } else {
                        Some((k, best))
                    }
                }
            };
        }
        let Some((r, _)) = leave else {
            return Err(LpError::NumericalBreakdown(format!(
                "column {enter} improves the phase-1 objective but has no pivot above {PIVOT_TOL:e}"
            )));
        };

        let pivot = t[r][enter];
        for v in t[r].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[enter];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[enter] = 0.0;
            }
        }
        basis[r] = enter;
    }
    Err(LpError::NumericalBreakdown(format!(
        "no convergence within {max_iter} pivots"
    )))
}
