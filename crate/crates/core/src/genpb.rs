//! Generalized piggybacking with `s` protected and `p` piggybacked stripes.
//!
//! The array splits into four regions:
//!
//! * A: systematic cells of the protected stripes `0..s`;
//! * B: systematic cells of the piggybacked stripes `s..s+p`;
//! * C: parity cells of every stripe not carrying a piggyback;
//! * D: parity cells of nodes `k+1..n` on the piggybacked stripes.
//!
//! The `k·s` Region-A symbols are split into `(r-1)·p` near-equal groups,
//! and each group's sum is added to one Region-D cell.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::framework::{Layout, StripeArray};
use crate::mds::{mds_repair_stripe, parity_with_ops, CodeParams};
use crate::repair::{CellSource, OpCount, RecoveryClass, RepairReport, Tracked};
use crate::symbol::Symbol;

#[derive(Debug, Clone)]
pub struct GenParams {
    code: CodeParams,
    s: usize,
    p: usize,
}

impl GenParams {
    pub fn new(code: CodeParams, s: usize, p: usize) -> Result<GenParams> {
        if s == 0 || p == 0 {
            return Err(Error::Config(format!("s and p must be at least 1, got s={s}, p={p}")));
        }
        if (code.r() - 1) * p < s {
            return Err(Error::Config(format!(
                "insufficient Region D capacity: (r-1)*p = {} < s = {s}",
                (code.r() - 1) * p
            )));
        }
        Ok(GenParams { code, s, p })
    }

    pub fn code(&self) -> &CodeParams {
        &self.code
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of piggyback functions, `(r-1)·p`.
    pub fn functions(&self) -> usize {
        (self.code.r() - 1) * self.p
    }
}

/// Which Region-A cells feed which piggyback function, and where each
/// function is stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiggybackAssignment {
    k: usize,
    s: usize,
    p: usize,
    // indexed by node * s + stripe
    func_of_cell: Vec<usize>,
    cells_of_func: Vec<Vec<(usize, usize)>>,
    placement: Vec<(usize, usize)>,
}

impl PiggybackAssignment {
    /// Fills the functions column by column from Region A read node-major:
    /// cell `(node, stripe)` has position `node·s + stripe` and belongs to
    /// function `position mod (r-1)p`. Function `j` lands on parity node
    /// `k + 1 + j / p`, stripe `s + j mod p`.
    pub fn build(gp: &GenParams) -> Result<PiggybackAssignment> {
        let (k, s, p) = (gp.code.k(), gp.s, gp.p);
        let width = gp.functions();
        let mut func_of_cell = Vec::with_capacity(k * s);
        let mut cells_of_func = vec![Vec::new(); width];
        for node in 0..k {
            for stripe in 0..s {
                let f = (node * s + stripe) % width;
                func_of_cell.push(f);
                cells_of_func[f].push((node, stripe));
            }
        }
        let placement = (0..width).map(|j| (k + 1 + j / p, s + j % p)).collect();
        let a = PiggybackAssignment { k, s, p, func_of_cell, cells_of_func, placement };
        for node in 0..k {
            let mut fs = a.functions_of_node(node);
            fs.sort_unstable();
            fs.dedup();
            if fs.len() != s {
                return Err(Error::Invariant(format!(
                    "node {node} is covered by a repeated piggyback function"
                )));
            }
        }
        Ok(a)
    }

    pub fn function_count(&self) -> usize {
        self.cells_of_func.len()
    }

    /// Function that protects systematic cell `(node, stripe)`, `stripe < s`.
    pub fn func_of_cell(&self, node: usize, stripe: usize) -> usize {
        assert!(node < self.k && stripe < self.s);
        self.func_of_cell[node * self.s + stripe]
    }

    pub fn cells_of_func(&self, f: usize) -> &[(usize, usize)] {
        &self.cells_of_func[f]
    }

    /// `n_i`: number of Region-A cells summed in each function.
    pub fn sizes(&self) -> Vec<usize> {
        self.cells_of_func.iter().map(Vec::len).collect()
    }

    /// `(node, stripe)` of the Region-D cell carrying function `f`.
    pub fn placement(&self, f: usize) -> (usize, usize) {
        self.placement[f]
    }

    /// The function stored at a Region-D cell, if any.
    pub fn func_at(&self, node: usize, stripe: usize) -> Option<usize> {
        self.placement.iter().position(|&c| c == (node, stripe))
    }

    /// The `s` functions covering systematic node `node`, by protected stripe.
    pub fn functions_of_node(&self, node: usize) -> Vec<usize> {
        (0..self.s).map(|y| self.func_of_cell(node, y)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct GenPiggyback {
    params: GenParams,
    assignment: PiggybackAssignment,
}

impl GenPiggyback {
    pub fn new(params: GenParams) -> Result<GenPiggyback> {
        let assignment = PiggybackAssignment::build(&params)?;
        Ok(GenPiggyback { params, assignment })
    }

    pub fn with(n: usize, k: usize, s: usize, p: usize) -> Result<GenPiggyback> {
        GenPiggyback::new(GenParams::new(CodeParams::new(n, k)?, s, p)?)
    }

    pub fn params(&self) -> &GenParams {
        &self.params
    }

    pub fn assignment(&self) -> &PiggybackAssignment {
        &self.assignment
    }

    /// Closed-form download for repairing systematic node `l`:
    /// `k·p + s + Σ (n_i - 1)` over the functions covering `l`.
    pub fn repair_download(&self, l: usize) -> usize {
        let (k, s, p) = (self.params.code.k(), self.params.s, self.params.p);
        let sizes = self.assignment.sizes();
        let extra: usize = self.assignment.functions_of_node(l).iter().map(|&f| sizes[f] - 1).sum();
        k * p + s + extra
    }

    /// Ops spent by the repair of node `l`, split by symbol class.
    pub fn count_repair_ops(&self, l: usize) -> RepairOps {
        let k = self.params.code.k() as u64;
        let sizes = self.assignment.sizes();
        let mds = OpCount::new(k, k - 1);
        let protected = self
            .assignment
            .functions_of_node(l)
            .iter()
            .map(|&f| OpCount::new(k, k + sizes[f] as u64 - 1))
            .fold(OpCount::default(), |a, b| a + b);
        RepairOps {
            piggybacked: mds,
            piggybacked_symbols: self.params.p,
            protected,
            protected_symbols: self.params.s,
        }
    }
}

/// Field operations for one systematic-node repair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepairOps {
    /// Cost of one piggybacked-stripe symbol.
    pub piggybacked: OpCount,
    pub piggybacked_symbols: usize,
    /// Total over all protected symbols of the node.
    pub protected: OpCount,
    pub protected_symbols: usize,
}

/// Per-symbol cost averaged over the function sizes: a piggybacked symbol
/// costs `(k, k-1)`, a protected one `(k, ks/((r-1)p) + k - 1)`.
pub fn average_symbol_ops(
    k: usize,
    r: usize,
    s: usize,
    p: usize,
) -> ((u64, u64), (Ratio<u64>, Ratio<u64>)) {
    let k64 = k as u64;
    let mean_size = Ratio::new(k64 * s as u64, (r as u64 - 1) * p as u64);
    let protected_adds = mean_size + Ratio::from_integer(k64) - Ratio::from_integer(1);
    ((k64, k64 - 1), (Ratio::from_integer(k64), protected_adds))
}

impl Layout for GenPiggyback {
    fn code(&self) -> &CodeParams {
        &self.params.code
    }

    fn alpha(&self) -> usize {
        self.params.s + self.params.p
    }

    fn encode<S: Symbol>(&self, messages: &[Vec<S>]) -> Result<StripeArray<S>> {
        self.check_messages(messages)?;
        let mut columns: Vec<Vec<S>> = messages
            .iter()
            .map(|u| self.params.code.encode(u))
            .collect::<Result<_>>()?;
        for f in 0..self.assignment.function_count() {
            let (node, stripe) = self.assignment.placement(f);
            let mut sum = columns[stripe][node].clone();
            for &(m, y) in self.assignment.cells_of_func(f) {
                sum.add_symbol(&messages[y][m]);
            }
            columns[stripe][node] = sum;
        }
        Ok(StripeArray::from_columns(self.params.code.n(), columns))
    }

    fn repair_systematic<S: Symbol, C: CellSource<S>>(
        &self,
        l: usize,
        source: &mut C,
    ) -> Result<(Vec<S>, RepairReport)> {
        let (k, s, p) = (self.params.code.k(), self.params.s, self.params.p);
        if l >= k {
            return Err(Error::Argument(format!("node {l} is not systematic")));
        }
        let mut t = Tracked::new(source);
        let mut out: Vec<Option<S>> = vec![None; s + p];

        let mut tail = Vec::with_capacity(p);
        for stripe in s..s + p {
            let (message, ops) = mds_repair_stripe(&self.params.code, l, stripe, &mut t)?;
            t.report.push_phase(RecoveryClass::MdsDecode, 1, ops);
            out[stripe] = Some(message[l].clone());
            tail.push(message);
        }

        let covering = self.assignment.functions_of_node(l);
        let mut seen = covering.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != s {
            return Err(Error::Invariant(format!("node {l} is covered twice by one function")));
        }
        let mut ops = OpCount::default();
        for (y, &f) in covering.iter().enumerate() {
            let (node, stripe) = self.assignment.placement(f);
            let mut v: S = t.fetch(node, stripe)?;
            let (parity, cost) = parity_with_ops(&self.params.code, node - k, &tail[stripe - s]);
            v.add_symbol(&parity);
            ops += cost + OpCount::new(0, 1);
            for &(m, ym) in self.assignment.cells_of_func(f) {
                if m == l {
                    continue;
                }
                let other: S = t.fetch(m, ym)?;
                v.add_symbol(&other);
                ops += OpCount::new(0, 1);
            }
            out[y] = Some(v);
        }
        t.report.push_phase(RecoveryClass::PiggybackSum, s, ops);

        let column = out.into_iter().map(|v| v.expect("every stripe recovered")).collect();
        Ok((column, t.finish()))
    }
}
