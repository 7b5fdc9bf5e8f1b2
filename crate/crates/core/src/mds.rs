//! Systematic MDS base code.
//!
//! The parity part is a Cauchy matrix: row `i`, column `j` holds
//! `1 / (x_i + y_j)` with `x_i = k + i` and `y_j = j` (0-based). Every square
//! submatrix of a Cauchy matrix is nonsingular, so any `k` of the `n` symbols
//! determine the message, and no parity coefficient is zero.
//!
//! Positions `0..k` are systematic; position `k + j` carries parity row `j`
//! (`p_{j+1}` in 1-based notation).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::framework::{Layout, StripeArray};
use crate::gf::{Gf256, Matrix};
use crate::repair::{CellSource, OpCount, RecoveryClass, RepairReport, Tracked};
use crate::symbol::{combine, Symbol};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeParams {
    n: usize,
    k: usize,
    parity: Matrix,
}

impl CodeParams {
    /// Builds the systematic Cauchy code of length `n` and dimension `k`.
    pub fn new(n: usize, k: usize) -> Result<CodeParams> {
        if k < 2 || k >= n || n > 255 {
            return Err(Error::Config(format!(
                "need 2 <= k < n <= 255, got n={n}, k={k}"
            )));
        }
        let r = n - k;
        let mut parity = Matrix::zeros(r, k);
        for i in 0..r {
            for j in 0..k {
                let x = Gf256::from_index(k + i);
                let y = Gf256::from_index(j);
                parity[(i, j)] = (x + y).inv()?;
            }
        }
        let code = CodeParams { n, k, parity };
        if cfg!(debug_assertions) && n <= 12 {
            debug_assert!(code.check_mds_minors(), "Cauchy parity matrix not MDS");
        }
        Ok(code)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.n - self.k
    }

    /// Parity row `j`, 0-based (`p_{j+1}`).
    pub fn parity_row(&self, j: usize) -> &[Gf256] {
        self.parity.row(j)
    }

    pub fn parity_matrix(&self) -> &Matrix {
        &self.parity
    }

    /// Coefficients of codeword position `pos` as a functional of the message.
    pub fn generator_row(&self, pos: usize) -> Vec<Gf256> {
        assert!(pos < self.n, "position {pos} out of range");
        if pos < self.k {
            let mut row = vec![Gf256::ZERO; self.k];
            row[pos] = Gf256::ONE;
            row
        } else {
            self.parity_row(pos - self.k).to_vec()
        }
    }

    /// True when every square submatrix of the parity matrix is invertible.
    /// Exponential in `min(r, k)`; meant for small codes.
    pub fn check_mds_minors(&self) -> bool {
        let r = self.r();
        let max = r.min(self.k);
        for size in 1..=max {
            for rows in combinations(r, size) {
                for cols in combinations(self.k, size) {
                    if self.parity.submatrix(&rows, &cols).rank() != size {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// `p_{j+1}ᵀ u`.
    pub fn parity_symbol<S: Symbol>(&self, j: usize, u: &[S]) -> S {
        combine(self.parity_row(j), u)
    }

    /// Systematic codeword of `u`.
    pub fn encode<S: Symbol>(&self, u: &[S]) -> Result<Vec<S>> {
        if u.len() != self.k {
            return Err(Error::Argument(format!(
                "message length {} does not match k={}",
                u.len(),
                self.k
            )));
        }
        let mut out = u.to_vec();
        out.extend((0..self.r()).map(|j| self.parity_symbol(j, u)));
        Ok(out)
    }

    /// Recovers the message from any `k` or more codeword symbols. Extra
    /// symbols beyond the first `k` positions are checked for consistency.
    pub fn reconstruct<S: Symbol>(&self, known: &BTreeMap<usize, S>) -> Result<Vec<S>> {
        if known.len() < self.k {
            return Err(Error::InsufficientSymbols { have: known.len(), need: self.k });
        }
        if let Some(&pos) = known.keys().find(|&&p| p >= self.n) {
            return Err(Error::Argument(format!("position {pos} out of range")));
        }
        let chosen: Vec<usize> = known.keys().copied().take(self.k).collect();
        let u: Vec<S> = if chosen.iter().enumerate().all(|(i, &p)| i == p) {
            chosen.iter().map(|p| known[p].clone()).collect()
        } else {
            let g = Matrix::from_rows(chosen.iter().map(|&p| self.generator_row(p)).collect());
            let inv = g.inverse().map_err(|_| Error::Invariant("MDS submatrix singular".into()))?;
            let ys: Vec<S> = chosen.iter().map(|p| known[p].clone()).collect();
            (0..self.k).map(|i| combine(inv.row(i), &ys)).collect()
        };
        for (&pos, sym) in known.iter().skip(self.k) {
            let expected = combine(&self.generator_row(pos), &u);
            if &expected != sym {
                return Err(Error::InconsistentSymbols { position: pos });
            }
        }
        Ok(u)
    }

    /// Rebuilds systematic symbol `missing` from the other `k - 1` systematic
    /// symbols and the first parity symbol (position `k`). Costs `k`
    /// multiplications and `k - 1` additions, which are added to `ops`.
    pub fn repair_symbol<S: Symbol>(
        &self,
        missing: usize,
        survivors: &[(usize, S)],
        ops: &mut OpCount,
    ) -> Result<S> {
        if missing >= self.k {
            return Err(Error::Argument(format!("position {missing} is not systematic")));
        }
        let mut expected: Vec<usize> = (0..self.k).filter(|&p| p != missing).collect();
        expected.push(self.k);
        let mut got: Vec<usize> = survivors.iter().map(|(p, _)| *p).collect();
        got.sort_unstable();
        if got != expected {
            return Err(Error::Argument(format!(
                "repair of position {missing} needs survivors {expected:?}, got {got:?}"
            )));
        }
        let p1 = self.parity_row(0);
        let parity = &survivors.iter().find(|(p, _)| *p == self.k).expect("checked").1;
        let mut acc = parity.clone();
        for (pos, sym) in survivors.iter().filter(|(p, _)| *p != self.k) {
            acc.add_scaled(p1[*pos], sym);
        }
        acc.scale(p1[missing].inv()?);
        *ops += OpCount::new(self.k as u64, self.k as u64 - 1);
        Ok(acc)
    }
}

/// All `size`-element subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < size - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, size, &mut Vec::with_capacity(size), &mut out);
    out
}

/// `alpha` independent instances of the base code with no piggybacks.
#[derive(Debug, Clone)]
pub struct MdsLayout {
    code: CodeParams,
    alpha: usize,
}

impl MdsLayout {
    pub fn new(code: CodeParams, alpha: usize) -> Result<MdsLayout> {
        if alpha == 0 {
            return Err(Error::Config("need at least one stripe".into()));
        }
        Ok(MdsLayout { code, alpha })
    }
}

impl Layout for MdsLayout {
    fn code(&self) -> &CodeParams {
        &self.code
    }

    fn alpha(&self) -> usize {
        self.alpha
    }

    fn encode<S: Symbol>(&self, messages: &[Vec<S>]) -> Result<StripeArray<S>> {
        self.check_messages(messages)?;
        let columns = messages
            .iter()
            .map(|u| self.code.encode(u))
            .collect::<Result<Vec<_>>>()?;
        Ok(StripeArray::from_columns(self.code.n(), columns))
    }

    fn repair_systematic<S: Symbol, C: CellSource<S>>(
        &self,
        node: usize,
        source: &mut C,
    ) -> Result<(Vec<S>, RepairReport)> {
        let k = self.code.k();
        if node >= k {
            return Err(Error::Argument(format!("node {node} is not systematic")));
        }
        let mut t = Tracked::new(source);
        let mut out = Vec::with_capacity(self.alpha);
        for stripe in 0..self.alpha {
            let (message, ops) = mds_repair_stripe(&self.code, node, stripe, &mut t)?;
            t.report.push_phase(RecoveryClass::MdsDecode, 1, ops);
            out.push(message[node].clone());
        }
        Ok((out, t.finish()))
    }
}

/// Fetches the `k` cells of `stripe` that single-symbol repair reads and
/// rebuilds `node`'s symbol there. Also returns the stripe's whole message,
/// which the piggyback repairs need afterwards.
pub(crate) fn mds_repair_stripe<S: Symbol, C: CellSource<S>>(
    code: &CodeParams,
    node: usize,
    stripe: usize,
    t: &mut Tracked<'_, C>,
) -> Result<(Vec<S>, OpCount)> {
    let k = code.k();
    let mut survivors = Vec::with_capacity(k);
    for m in (0..=k).filter(|&m| m != node) {
        survivors.push((m, t.fetch(m, stripe)?));
    }
    let mut ops = OpCount::default();
    let sym = code.repair_symbol(node, &survivors, &mut ops)?;
    let mut message: Vec<S> = survivors.into_iter().filter(|(p, _)| *p < k).map(|(_, s)| s).collect();
    message.insert(node, sym);
    Ok((message, ops))
}

/// `p_{j+1}ᵀ u` together with its cost: `k` multiplications, `k - 1` additions.
pub(crate) fn parity_with_ops<S: Symbol>(code: &CodeParams, j: usize, u: &[S]) -> (S, OpCount) {
    let k = code.k() as u64;
    (code.parity_symbol(j, u), OpCount::new(k, k - 1))
}
