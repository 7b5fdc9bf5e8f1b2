//! The RSR-II piggybacking code.
//!
//! `2r - 3` stripes of an `(n, k)` base code. The first `r - 1` stripes are
//! protected: their systematic symbols enter piggybacks carried by parity
//! nodes `k+1 .. k+r-1` (0-based) on the last `r - 1` stripes. The `k`
//! systematic nodes are split into `r - 1` contiguous, near-equal node sets
//! and each piggyback only touches one set, so a failed systematic node is
//! repaired from its own set plus `r - 1` parity cells instead of `k` cells
//! per protected stripe.
//!
//! Stored form of parity node `k + i` (`i ≥ 1`, evaluation point `x = i + 1`):
//!
//! ```text
//! stripes 0 ..= r-3   : p_iᵀ a_j
//! stripe  r-2         : q_{i,i-1}ᵀ a_{r-2} + Σ_{j=r-1}^{2r-4} p_iᵀ a_j
//! stripes r-1 ..= 2r-4: p_iᵀ a_j + q_{i,s}ᵀ v_i      (s runs over all sets but i-1)
//! v_i = a_{r-2} + x·a_{r-3} + … + x^{r-2}·a_0
//! ```
//!
//! where `q_{i,s}` is `p_i` masked to node set `s`. This is the row-transformed
//! form; [`Rsr2Code::causal_framework`] builds the untransformed one.

use crate::error::{Error, Result};
use crate::framework::{Causality, Framework, Layout, StripeArray};
use crate::gf::{Gf256, Matrix};
use crate::mds::{mds_repair_stripe, parity_with_ops, CodeParams};
use crate::repair::{CellSource, OpCount, RecoveryClass, RepairReport, Tracked};
use crate::symbol::{combine, Symbol};

/// Partition of the systematic nodes into `r - 1` contiguous sets whose
/// sizes differ by at most one. The first `t` sets have `t_high` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSets {
    sets: Vec<Vec<usize>>,
    pub t_low: usize,
    pub t_high: usize,
    pub t: usize,
}

impl NodeSets {
    pub fn split(k: usize, groups: usize) -> NodeSets {
        assert!(groups >= 1);
        let t_low = k / groups;
        let t_high = k.div_ceil(groups);
        let t = k - groups * t_low;
        let mut sets = Vec::with_capacity(groups);
        let mut next = 0;
        for g in 0..groups {
            let size = if g < t { t_high } else { t_low };
            sets.push((next..next + size).collect());
            next += size;
        }
        debug_assert_eq!(next, k);
        NodeSets { sets, t_low, t_high, t }
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.sets.iter().map(Vec::len).collect()
    }

    /// Index of the set holding systematic node `node`.
    pub fn set_of(&self, node: usize) -> Option<usize> {
        self.sets.iter().position(|s| s.contains(&node))
    }
}

/// `q_{i,s} = M_s p_i`: parity row `i` restricted to node set `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionVectors {
    groups: usize,
    // index (i - 1) * groups + s, for parity rows i = 1 .. r-1
    q: Vec<Vec<Gf256>>,
}

impl SelectionVectors {
    fn build(code: &CodeParams, sets: &NodeSets) -> SelectionVectors {
        let groups = sets.sets().len();
        let mut q = Vec::with_capacity((code.r() - 1) * groups);
        for i in 1..code.r() {
            let p = code.parity_row(i);
            for set in sets.sets() {
                let mut v = vec![Gf256::ZERO; code.k()];
                for &m in set {
                    v[m] = p[m];
                }
                q.push(v);
            }
        }
        SelectionVectors { groups, q }
    }

    /// `q` for parity row `i` (1 ..= r-1) and node set `s`.
    pub fn get(&self, i: usize, s: usize) -> &[Gf256] {
        assert!(i >= 1 && s < self.groups);
        &self.q[(i - 1) * self.groups + s]
    }
}

#[derive(Debug, Clone)]
pub struct Rsr2Code {
    code: CodeParams,
    node_sets: NodeSets,
    selection: SelectionVectors,
    // evaluation point of parity row i at index i - 1
    eval_points: Vec<Gf256>,
}

impl Rsr2Code {
    pub fn new(n: usize, k: usize) -> Result<Rsr2Code> {
        if n > k && n - k < 3 {
            return Err(Error::Config(format!(
                "RSR-II requires at least 3 parities, got r={}",
                n - k
            )));
        }
        let code = CodeParams::new(n, k)?;
        let r = code.r();
        let node_sets = NodeSets::split(k, r - 1);
        let selection = SelectionVectors::build(&code, &node_sets);
        let eval_points = (1..r).map(|i| Gf256::from_index(i + 1)).collect();
        let rc = Rsr2Code { code, node_sets, selection, eval_points };
        if n <= 64 {
            for l in 0..k {
                rc.solve_matrix(l).inverse().map_err(|_| {
                    Error::Invariant(format!("repair system for node {l} is singular"))
                })?;
            }
        }
        Ok(rc)
    }

    pub fn node_sets(&self) -> &NodeSets {
        &self.node_sets
    }

    pub fn selection(&self) -> &SelectionVectors {
        &self.selection
    }

    /// Evaluation point of parity row `i` (1 ..= r-1): the element `i + 1`.
    pub fn eval_point(&self, i: usize) -> Gf256 {
        self.eval_points[i - 1]
    }

    fn r(&self) -> usize {
        self.code.r()
    }

    /// Stripe holding parity row `i`'s piggyback for node set `s`.
    fn carrier_stripe(&self, i: usize, s: usize) -> usize {
        let r = self.r();
        if s + 1 == i {
            r - 2
        } else if s + 1 < i {
            r - 1 + s
        } else {
            r - 2 + s
        }
    }

    /// Node set whose piggyback rides on stripe `stripe` (≥ r-1) of parity row `i`.
    fn slot_set(&self, i: usize, stripe: usize) -> usize {
        let slot = stripe - (self.r() - 1);
        if slot + 1 < i {
            slot
        } else {
            slot + 1
        }
    }

    /// Coefficients of the protected unknowns `a_{r-2-e}[l]`, `e = 0 .. r-2`,
    /// in the `r - 1` equations left after subtracting everything known.
    /// Row `i - 1` is `p_i[l]·(1, x, x², …)`, except the row whose piggyback
    /// sits on stripe `r - 2`, which only sees `a_{r-2}` (point zero).
    fn solve_matrix(&self, l: usize) -> Matrix {
        let r = self.r();
        let s = self.node_sets.set_of(l).expect("systematic node");
        let mut m = Matrix::zeros(r - 1, r - 1);
        for i in 1..r {
            let scale = self.code.parity_row(i)[l];
            if s + 1 == i {
                m[(i - 1, 0)] = scale;
            } else {
                let x = self.eval_point(i);
                for e in 0..r - 1 {
                    m[(i - 1, e)] = scale * x.pow(e);
                }
            }
        }
        m
    }

    /// The untransformed layout, built from strictly causal piggybacks on
    /// the framework: stripe `r-2` of parity row `i` carries
    /// `Σ_{s≠i-1} q_{i,s}ᵀ (v_i - a_{r-2})`, the later stripes as above.
    /// Adding stripes `r-1 ..` onto stripe `r-2` of each piggybacked row
    /// yields the stored form.
    pub fn causal_framework(&self) -> Result<Framework> {
        let (k, r) = (self.code.k(), self.r());
        let alpha = self.alpha();
        let mut f = Framework::new(self.code.clone(), alpha)?;
        for i in 1..r {
            let x = self.eval_point(i);
            // q_{i,s}ᵀ Σ_{e} x^e a_{r-2-e}, for e starting at `from`
            let functional = |s: usize, from: usize| {
                let mut c = vec![Gf256::ZERO; k * alpha];
                let q = self.selection.get(i, s);
                for e in from..r - 1 {
                    let stripe = r - 2 - e;
                    for m in 0..k {
                        c[stripe * k + m] += x.pow(e) * q[m];
                    }
                }
                c
            };
            let mut hat = vec![Gf256::ZERO; k * alpha];
            for s in (0..r - 1).filter(|&s| s + 1 != i) {
                for (h, v) in hat.iter_mut().zip(functional(s, 1)) {
                    *h += v;
                }
            }
            f.attach_piggyback(k + i, r - 2, &hat, Causality::Strict)?;
            for stripe in r - 1..alpha {
                let s = self.slot_set(i, stripe);
                f.attach_piggyback(k + i, stripe, &functional(s, 0), Causality::Strict)?;
            }
        }
        Ok(f)
    }
}

impl Layout for Rsr2Code {
    fn code(&self) -> &CodeParams {
        &self.code
    }

    fn alpha(&self) -> usize {
        2 * self.r() - 3
    }

    fn encode<S: Symbol>(&self, messages: &[Vec<S>]) -> Result<StripeArray<S>> {
        self.check_messages(messages)?;
        let (k, r, alpha) = (self.code.k(), self.r(), self.alpha());
        let mut columns: Vec<Vec<S>> = messages
            .iter()
            .map(|u| self.code.encode(u))
            .collect::<Result<_>>()?;
        for i in 1..r {
            let x = self.eval_point(i);
            // v_i, symbol by symbol
            let v: Vec<S> = (0..k)
                .map(|m| {
                    let mut acc = messages[r - 2][m].clone();
                    for e in 1..r - 1 {
                        acc.add_scaled(x.pow(e), &messages[r - 2 - e][m]);
                    }
                    acc
                })
                .collect();
            let node = k + i;
            let mut transformed = combine(self.selection.get(i, i - 1), &messages[r - 2]);
            for col in &columns[r - 1..] {
                transformed.add_symbol(&col[node]);
            }
            for (stripe, col) in columns.iter_mut().enumerate().skip(r - 1) {
                let s = self.slot_set(i, stripe);
                col[node].add_symbol(&combine(self.selection.get(i, s), &v));
            }
            columns[r - 2][node] = transformed;
        }
        debug_assert_eq!(columns.len(), alpha);
        Ok(StripeArray::from_columns(self.code.n(), columns))
    }

    fn repair_systematic<S: Symbol, C: CellSource<S>>(
        &self,
        l: usize,
        source: &mut C,
    ) -> Result<(Vec<S>, RepairReport)> {
        let (k, r, alpha) = (self.code.k(), self.r(), self.alpha());
        if l >= k {
            return Err(Error::Argument(format!("node {l} is not systematic")));
        }
        let set = self.node_sets.set_of(l).expect("every systematic node has a set");
        let mut t = Tracked::new(source);
        let mut out: Vec<Option<S>> = vec![None; alpha];

        // Unprotected stripes: plain MDS repair, which also yields their full messages.
        let mut tail: Vec<Vec<S>> = Vec::with_capacity(r - 2);
        for stripe in r - 1..alpha {
            let (message, ops) = mds_repair_stripe(&self.code, l, stripe, &mut t)?;
            t.report.push_phase(RecoveryClass::MdsDecode, 1, ops);
            out[stripe] = Some(message[l].clone());
            tail.push(message);
        }

        // One carrier cell per piggybacked parity row, stripped of its
        // base-code part.
        let mut ops = OpCount::default();
        let mut eqs: Vec<S> = Vec::with_capacity(r - 1);
        for i in 1..r {
            let stripe = self.carrier_stripe(i, set);
            let mut y: S = t.fetch(k + i, stripe)?;
            let known: Vec<&Vec<S>> = if stripe == r - 2 {
                tail.iter().collect()
            } else {
                vec![&tail[stripe - (r - 1)]]
            };
            for msg in known {
                let (p, cost) = parity_with_ops(&self.code, i, msg);
                y.add_symbol(&p);
                ops += cost + OpCount::new(0, 1);
            }
            eqs.push(y);
        }

        // Peel off the other members of the node set.
        for &m in self.node_sets.sets()[set].iter().filter(|&&m| m != l) {
            let protected: Vec<S> = (0..r - 1).map(|y| t.fetch(m, y)).collect::<Result<_>>()?;
            for (idx, y) in eqs.iter_mut().enumerate() {
                let i = idx + 1;
                let pm = self.code.parity_row(i)[m];
                if set + 1 == i {
                    y.add_scaled(pm, &protected[r - 2]);
                    ops += OpCount::new(1, 1);
                } else {
                    let x = self.eval_point(i);
                    for e in 0..r - 1 {
                        y.add_scaled(pm * x.pow(e), &protected[r - 2 - e]);
                    }
                    ops += OpCount::new(r as u64 - 1, r as u64 - 1);
                }
            }
        }

        let inv = self
            .solve_matrix(l)
            .inverse()
            .map_err(|_| Error::Invariant(format!("repair system for node {l} is singular")))?;
        for e in 0..r - 1 {
            out[r - 2 - e] = Some(combine(inv.row(e), &eqs));
        }
        let w = r as u64 - 1;
        ops += OpCount::new(w * w, w * (w - 1));
        t.report.push_phase(RecoveryClass::LinearSolve, r - 1, ops);

        let column = out.into_iter().map(|s| s.expect("every stripe recovered")).collect();
        Ok((column, t.finish()))
    }
}
