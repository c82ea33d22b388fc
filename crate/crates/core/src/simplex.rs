//! Dense two-phase simplex with Bland's rule, for small linear programs
//! `min c·x` subject to linear rows and `x >= 0`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

const EPS: f64 = 1e-10;
const MAX_PIVOTS: usize = 100_000;

struct Tableau {
    rows: Vec<Vec<f64>>,
    z: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r && row[c] != 0.0 {
                let f = row[c];
                row.iter_mut()
                    .zip(&pivot_row)
                    .for_each(|(v, p)| *v -= f * p);
            }
        }
        let f = self.z[c];
        self.z
            .iter_mut()
            .zip(&pivot_row)
            .for_each(|(v, p)| *v -= f * p);
        self.basis[r] = c;
    }

    fn set_costs(&mut self, cost: &[f64]) {
        self.z = cost.to_vec();
        self.z.push(0.0);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                self.z
                    .iter_mut()
                    .zip(&self.rows[r])
                    .for_each(|(v, a)| *v -= cb * a);
            }
        }
    }

    /// Runs Bland's rule over columns `< allowed`.
    fn optimize(&mut self, allowed: usize) -> Result<()> {
        for _ in 0..MAX_PIVOTS {
            let Some(c) = (0..allowed).find(|&j| self.z[j] < -EPS) else {
                return Ok(());
            };
            let rhs = self.cols;
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > EPS {
                    let ratio = row[rhs] / row[c];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((j, best)) => {
                            if ratio < best - EPS
                                || (ratio <= best + EPS && self.basis[i] < self.basis[j])
                            {
                                Some((i, ratio))
                            } else {
                                Some((j, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Numeric("linear program is unbounded".into()));
            };
            self.pivot(r, c);
        }
        Err(Error::Numeric("simplex did not converge".into()))
    }
}

impl LinearProgram {
    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.objective.len();
        if self.rows.iter().any(|(a, _, _)| a.len() != n) {
            return Err(Error::arg(
                "constraint row length differs from objective length",
            ));
        }
        let m = self.rows.len();
        // Normalize to non-negative right-hand sides.
        let rows: Vec<(Vec<f64>, Relation, f64)> = self
            .rows
            .iter()
            .map(|(a, rel, b)| {
                if *b < 0.0 {
                    let flipped = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (a.iter().map(|v| -v).collect(), flipped, -b)
                } else {
                    (a.clone(), *rel, *b)
                }
            })
            .collect();
        let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let art_rows: Vec<usize> = (0..m).filter(|&i| rows[i].1 != Relation::Le).collect();
        let art_start = n + slack_count;
        let cols = art_start + art_rows.len();

        let mut table = vec![vec![0.0; cols + 1]; m];
        let mut basis = vec![0; m];
        let mut slack = n;
        let mut art = art_start;
        for (i, (a, rel, b)) in rows.iter().enumerate() {
            table[i][..n].copy_from_slice(a);
            table[i][cols] = *b;
            match rel {
                Relation::Le => {
                    table[i][slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    table[i][slack] = -1.0;
                    slack += 1;
                    table[i][art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    table[i][art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        let mut t = Tableau {
            rows: table,
            z: Vec::new(),
            basis,
            cols,
        };

        if !art_rows.is_empty() {
            let mut cost = vec![0.0; cols];
            cost[art_start..].iter_mut().for_each(|c| *c = 1.0);
            t.set_costs(&cost);
            t.optimize(cols)?;
            let infeasibility = -t.z[cols];
            if infeasibility > 1e-8 {
                let violated = (0..m)
                    .filter(|&i| t.basis[i] >= art_start && t.rows[i][cols] > 1e-8)
                    .collect();
                return Err(Error::Infeasible { violated });
            }
            for r in 0..m {
                if t.basis[r] >= art_start {
                    if let Some(c) = (0..art_start).find(|&j| t.rows[r][j].abs() > EPS) {
                        t.pivot(r, c);
                    }
                }
            }
        }

        let mut cost = self.objective.clone();
        cost.resize(cols, 0.0);
        t.set_costs(&cost);
        t.optimize(art_start)?;

        let mut x = vec![0.0; n];
        for (r, &b) in t.basis.iter().enumerate() {
            if b < n {
                x[b] = t.rows[r][cols].max(0.0);
            }
        }
        let objective = x.iter().zip(&self.objective).map(|(a, c)| a * c).sum();
        Ok(LpSolution { x, objective })
    }
}
