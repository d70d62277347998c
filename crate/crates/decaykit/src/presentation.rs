//! Finitely presented groups: validation, abelianization, and integer
//! homology of the presentation 2-complex.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::word::{Word, WordError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PresentationError {
    #[error("presentation has no generators")]
    NoGenerators,
    #[error("duplicate generator {0}")]
    DuplicateGenerator(String),
    #[error("invalid generator name {0}")]
    BadGeneratorName(String),
    #[error("word uses undeclared generator {0}")]
    UndeclaredGenerator(String),
    #[error("symbolic exponents are not allowed here: {0}")]
    Symbolic(String),
    #[error(transparent)]
    Word(#[from] WordError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeripheralPair {
    pub meridian: Word,
    pub longitude: Word,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub generators: Vec<String>,
    pub relators: Vec<Word>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peripheral: Option<PeripheralPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
}

impl Presentation {
    pub fn new(generators: &[&str], relators: &[&str]) -> Result<Presentation, PresentationError> {
        let pres = Presentation {
            generators: generators.iter().map(|s| s.to_string()).collect(),
            relators: relators
                .iter()
                .map(|s| s.parse::<Word>())
                .collect::<Result<_, _>>()?,
            peripheral: None,
            backend: None,
        };
        pres.validate()?;
        Ok(pres)
    }

    pub fn validate(&self) -> Result<(), PresentationError> {
        if self.generators.is_empty() {
            return Err(PresentationError::NoGenerators);
        }
        let mut seen = BTreeSet::new();
        for g in &self.generators {
            let valid = g
                .chars()
                .next()
                .map(|c| c.is_ascii_alphabetic() || c == '_')
                .unwrap_or(false)
                && g.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(PresentationError::BadGeneratorName(g.clone()));
            }
            if !seen.insert(g.clone()) {
                return Err(PresentationError::DuplicateGenerator(g.clone()));
            }
        }
        let check_word = |w: &Word| -> Result<(), PresentationError> {
            if !w.is_concrete() {
                return Err(PresentationError::Symbolic(w.to_string()));
            }
            for g in w.generators() {
                if !seen.contains(&g) {
                    return Err(PresentationError::UndeclaredGenerator(g));
                }
            }
            Ok(())
        };
        for r in &self.relators {
            check_word(r)?;
        }
        if let Some(p) = &self.peripheral {
            check_word(&p.meridian)?;
            check_word(&p.longitude)?;
        }
        Ok(())
    }

    /// Exponent-sum vector of w in generator order.
    pub fn exponent_vector(&self, w: &Word) -> Result<Vec<i64>, PresentationError> {
        for g in w.generators() {
            if !self.generators.contains(&g) {
                return Err(PresentationError::UndeclaredGenerator(g));
            }
        }
        self.generators
            .iter()
            .map(|g| {
                w.exponent_sum(g)
                    .as_constant()
                    .ok_or_else(|| PresentationError::Symbolic(w.to_string()))
            })
            .collect()
    }

    pub fn relator_matrix(&self) -> Result<Vec<Vec<i64>>, PresentationError> {
        self.relators.iter().map(|r| self.exponent_vector(r)).collect()
    }

    /// Canonical representative of the class of w in H1 = Z^gens / relators.
    pub fn abelianize(&self, w: &Word) -> Result<Vec<i64>, PresentationError> {
        let hnf = row_hnf(self.relator_matrix()?, self.generators.len());
        let mut v = self.exponent_vector(w)?;
        reduce_mod_lattice(&mut v, &hnf);
        Ok(v)
    }

    /// (free rank, torsion orders > 1) of the abelianization.
    pub fn homology(&self) -> Result<Homology, PresentationError> {
        let diag = smith_diagonal(self.relator_matrix()?, self.generators.len());
        let nonzero: Vec<u64> = diag.iter().copied().filter(|&d| d != 0).collect();
        Ok(Homology {
            rank: self.generators.len() - nonzero.len(),
            torsion: nonzero.into_iter().filter(|&d| d > 1).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Homology {
    pub rank: usize,
    pub torsion: Vec<u64>,
}

impl fmt::Display for Homology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        match self.rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        for t in &self.torsion {
            parts.push(format!("Z/{t}"));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Row-style Hermite form of the lattice spanned by `rows`: echelon with
/// positive pivots and entries above each pivot reduced into [0, pivot).
// row operations touch two rows of one matrix, so indexed loops stay
#[allow(clippy::needless_range_loop)]
fn row_hnf(mut rows: Vec<Vec<i64>>, ncols: usize) -> Vec<Vec<i64>> {
    rows.retain(|r| r.iter().any(|&x| x != 0));
    let mut pivot_row = 0;
    for col in 0..ncols {
        loop {
            let mut nonzero: Vec<usize> = (pivot_row..rows.len())
                .filter(|&i| rows[i][col] != 0)
                .collect();
            if nonzero.len() <= 1 {
                break;
            }
            nonzero.sort_by_key(|&i| rows[i][col].unsigned_abs());
            let (small, big) = (nonzero[0], nonzero[1]);
            let q = rows[big][col].div_euclid(rows[small][col]);
            for c in 0..ncols {
                rows[big][c] -= q * rows[small][c];
            }
            if rows[big].iter().all(|&x| x == 0) {
                rows.remove(big);
            }
        }
        if let Some(i) = (pivot_row..rows.len()).find(|&i| rows[i][col] != 0) {
            rows.swap(pivot_row, i);
            if rows[pivot_row][col] < 0 {
                rows[pivot_row].iter_mut().for_each(|x| *x = -*x);
            }
            let pivot = rows[pivot_row][col];
            for above in 0..pivot_row {
                let q = rows[above][col].div_euclid(pivot);
                if q != 0 {
                    for c in 0..ncols {
                        rows[above][c] -= q * rows[pivot_row][c];
                    }
                }
            }
            pivot_row += 1;
        }
    }
    rows.truncate(pivot_row);
    rows
}

fn reduce_mod_lattice(v: &mut [i64], hnf: &[Vec<i64>]) {
    for row in hnf {
        let col = row
            .iter()
            .position(|&x| x != 0)
            .expect("HNF rows are nonzero");
        let q = v[col].div_euclid(row[col]);
        if q != 0 {
            for c in 0..v.len() {
                v[c] -= q * row[c];
            }
        }
    }
}

/// Diagonal of the Smith normal form (non-negative, padded to min(rows, cols)).
#[allow(clippy::needless_range_loop)]
fn smith_diagonal(rows: Vec<Vec<i64>>, ncols: usize) -> Vec<u64> {
    let mut m: Vec<Vec<i64>> = rows.into_iter().filter(|r| !r.is_empty()).collect();
    m.retain(|r| r.len() == ncols);
    let mut diag = Vec::new();
    let mut top = 0usize;
    let nrows = m.len();
    while top < nrows && top < ncols {
        // Find a nonzero entry in the working submatrix.
        let mut found = None;
        'outer: for i in top..nrows {
            for j in top..ncols {
                if m[i][j] != 0 {
                    found = Some((i, j));
                    break 'outer;
                }
            }
        }
        let Some((pi, pj)) = found else { break };
        m.swap(top, pi);
        for row in m.iter_mut() {
            row.swap(top, pj);
        }
        loop {
            // Clear the pivot column with row operations.
            let mut dirty = false;
            for i in (top + 1)..nrows {
                if m[i][top] != 0 {
                    let q = m[i][top].div_euclid(m[top][top]);
                    for c in top..ncols {
                        m[i][c] -= q * m[top][c];
                    }
                    if m[i][top] != 0 {
                        m.swap(top, i);
                        dirty = true;
                    }
                }
            }
            if dirty {
                continue;
            }
            // Clear the pivot row with column operations.
            for j in (top + 1)..ncols {
                if m[top][j] != 0 {
                    let q = m[top][j].div_euclid(m[top][top]);
                    for row in m.iter_mut() {
                        let sub = q * row[top];
                        row[j] -= sub;
                    }
                    if m[top][j] != 0 {
                        for row in m.iter_mut() {
                            row.swap(top, j);
                        }
                        dirty = true;
                    }
                }
            }
            if dirty {
                continue;
            }
            // Divisibility: pivot must divide every remaining entry.
            let pivot = m[top][top];
            let mut adjusted = false;
            'scan: for i in (top + 1)..nrows {
                for j in (top + 1)..ncols {
                    if m[i][j] % pivot != 0 {
                        for c in top..ncols {
                            let add = m[i][c];
                            m[top][c] += add;
                        }
                        adjusted = true;
                        break 'scan;
                    }
                }
            }
            if !adjusted {
                break;
            }
        }
        diag.push(m[top][top].unsigned_abs());
        top += 1;
    }
    diag
}
