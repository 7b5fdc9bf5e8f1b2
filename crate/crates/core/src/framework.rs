//! The generic piggybacking framework.
//!
//! A layout stores `alpha` instances (stripes) of an `(n, k)` base code side
//! by side: row `i` of the array is node `i`, column `j` is stripe `j`.
//! Piggybacks add linear functions of earlier stripes' messages onto parity
//! cells of later stripes, so each stored cell stays a linear functional of
//! the flattened message `[u_0 | u_1 | … | u_{alpha-1}]` (index `j·k + i` is
//! symbol `i` of stripe `j`). [`LinearCellMap`] records those functionals;
//! decoding any node set reduces to solving against it.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::gf::{Gf256, Matrix};
use crate::mds::CodeParams;
use crate::repair::{CellSource, OpCount, RecoveryClass, RepairReport, Tracked};
use crate::symbol::{combine, unit, Symbol};

/// `n × alpha` array of stored symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripeArray<S> {
    n: usize,
    alpha: usize,
    // node-major
    cells: Vec<S>,
}

impl<S: Clone> StripeArray<S> {
    /// Builds the array from per-stripe codewords (each of length `n`).
    pub fn from_columns(n: usize, columns: Vec<Vec<S>>) -> StripeArray<S> {
        let alpha = columns.len();
        assert!(columns.iter().all(|c| c.len() == n), "column length mismatch");
        let mut cells = Vec::with_capacity(n * alpha);
        for i in 0..n {
            for col in &columns {
                cells.push(col[i].clone());
            }
        }
        StripeArray { n, alpha, cells }
    }

    /// Builds the array from per-node rows (each of length `alpha`).
    pub fn from_nodes(rows: Vec<Vec<S>>) -> StripeArray<S> {
        let n = rows.len();
        let alpha = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == alpha), "row length mismatch");
        StripeArray { n, alpha, cells: rows.into_iter().flatten().collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// Stored symbols, always `n · alpha` regardless of piggybacks.
    pub fn total_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn get(&self, node: usize, stripe: usize) -> &S {
        assert!(node < self.n && stripe < self.alpha, "cell ({node},{stripe}) out of range");
        &self.cells[node * self.alpha + stripe]
    }

    pub fn set(&mut self, node: usize, stripe: usize, value: S) {
        assert!(node < self.n && stripe < self.alpha, "cell ({node},{stripe}) out of range");
        self.cells[node * self.alpha + stripe] = value;
    }

    /// The `alpha` symbols held by one node.
    pub fn node_symbols(&self, node: usize) -> Vec<S> {
        self.cells[node * self.alpha..(node + 1) * self.alpha].to_vec()
    }

    pub fn replace_node(&mut self, node: usize, symbols: Vec<S>) {
        assert_eq!(symbols.len(), self.alpha);
        for (stripe, s) in symbols.into_iter().enumerate() {
            self.set(node, stripe, s);
        }
    }
}

/// Each stored cell as a row of coefficients over the flattened message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCellMap {
    n: usize,
    k: usize,
    alpha: usize,
    // row node * alpha + stripe, column stripe * k + position
    coeffs: Matrix,
}

impl LinearCellMap {
    /// Map of `alpha` plain instances of `code`.
    pub fn plain(code: &CodeParams, alpha: usize) -> LinearCellMap {
        let (n, k) = (code.n(), code.k());
        let mut coeffs = Matrix::zeros(n * alpha, k * alpha);
        for node in 0..n {
            let g = code.generator_row(node);
            for stripe in 0..alpha {
                for (pos, &c) in g.iter().enumerate() {
                    coeffs[(node * alpha + stripe, stripe * k + pos)] = c;
                }
            }
        }
        LinearCellMap { n, k, alpha, coeffs }
    }

    /// Recovers the map of any linear layout by encoding unit vectors.
    pub fn of_layout<L: Layout + ?Sized>(layout: &L) -> Result<LinearCellMap> {
        let (n, k, alpha) = (layout.code().n(), layout.code().k(), layout.alpha());
        let width = k * alpha;
        let messages: Vec<Vec<Vec<u8>>> = (0..alpha)
            .map(|j| (0..k).map(|i| unit(width, j * k + i)).collect())
            .collect();
        let sym = layout.encode(&messages)?;
        let mut coeffs = Matrix::zeros(n * alpha, width);
        for node in 0..n {
            for stripe in 0..alpha {
                let row = coeffs.row_mut(node * alpha + stripe);
                for (slot, &b) in row.iter_mut().zip(sym.get(node, stripe)) {
                    *slot = Gf256(b);
                }
            }
        }
        Ok(LinearCellMap { n, k, alpha, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn matrix(&self) -> &Matrix {
        &self.coeffs
    }

    pub fn row(&self, node: usize, stripe: usize) -> &[Gf256] {
        self.coeffs.row(node * self.alpha + stripe)
    }

    /// Coefficient of message symbol `(msg_stripe, position)` in a cell.
    pub fn coeff(&self, node: usize, stripe: usize, msg_stripe: usize, position: usize) -> Gf256 {
        self.row(node, stripe)[msg_stripe * self.k + position]
    }

    pub fn rank(&self) -> usize {
        self.coeffs.rank()
    }

    /// Rank of the rows belonging to the given nodes.
    pub fn rank_of_nodes(&self, nodes: &[usize]) -> usize {
        self.coeffs.select_rows(&self.node_rows(nodes)).rank()
    }

    fn node_rows(&self, nodes: &[usize]) -> Vec<usize> {
        nodes
            .iter()
            .flat_map(|&i| (0..self.alpha).map(move |j| i * self.alpha + j))
            .collect()
    }

    /// Evaluates every cell on concrete messages.
    pub fn apply<S: Symbol>(&self, messages: &[Vec<S>]) -> Result<StripeArray<S>> {
        let flat = flatten(messages, self.k, self.alpha)?;
        let rows = (0..self.n)
            .map(|i| (0..self.alpha).map(|j| combine(self.row(i, j), &flat)).collect())
            .collect();
        Ok(StripeArray::from_nodes(rows))
    }
}

fn flatten<S: Clone>(messages: &[Vec<S>], k: usize, alpha: usize) -> Result<Vec<S>> {
    if messages.len() != alpha || messages.iter().any(|m| m.len() != k) {
        return Err(Error::Argument(format!(
            "expected {alpha} messages of length {k}"
        )));
    }
    Ok(messages.iter().flatten().cloned().collect())
}

/// Whether a piggyback may reference its own or later stripes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Causality {
    /// Sources must come from strictly earlier stripes.
    Strict,
    /// The caller vouches that the node's row is an invertible transform of
    /// a causal layout, so any stripe may appear.
    InvertibleTransform,
}

/// Base-code instances plus explicitly attached piggybacks.
#[derive(Debug, Clone)]
pub struct Framework {
    code: CodeParams,
    alpha: usize,
    map: LinearCellMap,
}

impl Framework {
    pub fn new(code: CodeParams, alpha: usize) -> Result<Framework> {
        if alpha == 0 {
            return Err(Error::Config("need at least one stripe".into()));
        }
        let map = LinearCellMap::plain(&code, alpha);
        Ok(Framework { code, alpha, map })
    }

    /// Adds `source_coeffs · message` onto the parity cell `(node, stripe)`.
    pub fn attach_piggyback(
        &mut self,
        node: usize,
        stripe: usize,
        source_coeffs: &[Gf256],
        causality: Causality,
    ) -> Result<()> {
        let k = self.code.k();
        if node >= self.code.n() || stripe >= self.alpha {
            return Err(Error::Argument(format!("cell ({node},{stripe}) out of range")));
        }
        if node < k {
            return Err(Error::SystematicImmutable { node, stripe });
        }
        if source_coeffs.len() != k * self.alpha {
            return Err(Error::Argument(format!(
                "piggyback needs {} coefficients, got {}",
                k * self.alpha,
                source_coeffs.len()
            )));
        }
        if causality == Causality::Strict {
            if let Some(idx) = source_coeffs[stripe * k..].iter().position(|c| !c.is_zero()) {
                return Err(Error::CausalityViolation {
                    node,
                    stripe,
                    source_stripe: stripe + idx / k,
                });
            }
        }
        let row = self.map.coeffs.row_mut(node * self.alpha + stripe);
        for (slot, &c) in row.iter_mut().zip(source_coeffs) {
            *slot += c;
        }
        Ok(())
    }

    pub fn map(&self) -> &LinearCellMap {
        &self.map
    }
}

/// Common surface of every code layout in the crate.
pub trait Layout {
    fn code(&self) -> &CodeParams;

    /// Number of stripes.
    fn alpha(&self) -> usize;

    fn encode<S: Symbol>(&self, messages: &[Vec<S>]) -> Result<StripeArray<S>>;

    /// Rebuilds systematic node `node` with the layout's own repair path.
    /// Returns the node's `alpha` symbols and the download ledger.
    fn repair_systematic<S: Symbol, C: CellSource<S>>(
        &self,
        node: usize,
        source: &mut C,
    ) -> Result<(Vec<S>, RepairReport)>;

    fn cell_map(&self) -> Result<LinearCellMap> {
        LinearCellMap::of_layout(self)
    }

    /// Single-node repair with every other node intact. Systematic nodes use
    /// [`Layout::repair_systematic`]; parity nodes are rebuilt from the `k`
    /// systematic nodes and re-encoded. `map` must be this layout's map.
    fn repair_node<S: Symbol, C: CellSource<S>>(
        &self,
        map: &LinearCellMap,
        node: usize,
        source: &mut C,
    ) -> Result<(Vec<S>, RepairReport)> {
        let k = self.code().k();
        if node >= self.code().n() {
            return Err(Error::Argument(format!("node {node} out of range")));
        }
        if node < k {
            self.repair_systematic(node, source)
        } else {
            let helpers: Vec<usize> = (0..k).collect();
            rebuild_node(map, node, &helpers, source)
        }
    }

    fn check_messages<S>(&self, messages: &[Vec<S>]) -> Result<()> {
        let k = self.code().k();
        if messages.len() != self.alpha() {
            return Err(Error::Argument(format!(
                "expected {} messages, got {}",
                self.alpha(),
                messages.len()
            )));
        }
        if let Some(m) = messages.iter().find(|m| m.len() != k) {
            return Err(Error::Argument(format!(
                "message length {} does not match k={k}",
                m.len()
            )));
        }
        Ok(())
    }
}

impl Layout for Framework {
    fn code(&self) -> &CodeParams {
        &self.code
    }

    fn alpha(&self) -> usize {
        self.alpha
    }

    fn encode<S: Symbol>(&self, messages: &[Vec<S>]) -> Result<StripeArray<S>> {
        self.map.apply(messages)
    }

    fn repair_systematic<S: Symbol, C: CellSource<S>>(
        &self,
        node: usize,
        source: &mut C,
    ) -> Result<(Vec<S>, RepairReport)> {
        let helpers: Vec<usize> = (0..self.code.n()).filter(|&i| i != node).take(self.code.k()).collect();
        rebuild_node(&self.map, node, &helpers, source)
    }

    fn cell_map(&self) -> Result<LinearCellMap> {
        Ok(self.map.clone())
    }
}

/// Recovers all messages from the full contents of `k` nodes.
#[derive(Debug, Clone)]
pub struct Decoder {
    nodes: Vec<usize>,
    k: usize,
    alpha: usize,
    // None when the nodes are exactly the systematic ones
    inverse: Option<Matrix>,
}

impl Decoder {
    /// Prepares decoding from the first `k` of `nodes` (sorted, deduplicated).
    pub fn new(map: &LinearCellMap, nodes: &[usize]) -> Result<Decoder> {
        let (k, alpha) = (map.k(), map.alpha());
        let mut chosen: Vec<usize> = nodes.to_vec();
        chosen.sort_unstable();
        chosen.dedup();
        if let Some(&bad) = chosen.iter().find(|&&i| i >= map.n()) {
            return Err(Error::Argument(format!("node {bad} out of range")));
        }
        if chosen.len() < k {
            return Err(Error::InsufficientSymbols { have: chosen.len(), need: k });
        }
        chosen.truncate(k);
        let systematic = chosen.iter().enumerate().all(|(i, &n)| i == n);
        let inverse = if systematic {
            None
        } else {
            let sub = map.coeffs.select_rows(&map.node_rows(&chosen));
            Some(sub.inverse().map_err(|_| Error::UndecodableNodeSet(chosen.clone()))?)
        };
        Ok(Decoder { nodes: chosen, k, alpha, inverse })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Downloads every cell of the decoder's nodes and solves for the
    /// messages. Returns `alpha` messages of length `k`.
    pub fn decode<S: Symbol, C: CellSource<S>>(&self, source: &mut C) -> Result<Vec<Vec<S>>> {
        let mut cells = Vec::with_capacity(self.k * self.alpha);
        for &node in &self.nodes {
            for stripe in 0..self.alpha {
                cells.push(source.fetch(crate::repair::Cell::new(node, stripe))?);
            }
        }
        Ok(self.solve(&cells))
    }

    fn solve<S: Symbol>(&self, cells: &[S]) -> Vec<Vec<S>> {
        // cells are ordered node-major; messages are stripe-major
        let (k, alpha) = (self.k, self.alpha);
        match &self.inverse {
            None => (0..alpha)
                .map(|j| (0..k).map(|i| cells[i * alpha + j].clone()).collect())
                .collect(),
            Some(inv) => (0..alpha)
                .map(|j| (0..k).map(|i| combine(inv.row(j * k + i), cells)).collect())
                .collect(),
        }
    }
}

/// Decodes every stripe from the listed nodes by solving the cell map.
pub fn decode_full<S: Symbol>(
    map: &LinearCellMap,
    array: &StripeArray<S>,
    available: &[usize],
) -> Result<Vec<Vec<S>>> {
    let decoder = Decoder::new(map, available)?;
    let mut view = crate::repair::ErasedView::new(array, std::iter::empty());
    decoder.decode(&mut view)
}

/// Stripe-by-stripe decoding for causal layouts: decode stripe 0 with the
/// base code, subtract the now-known piggybacks from stripe 1, decode it, and
/// so on. Fails with [`Error::CausalityViolation`] if some cell depends on
/// its own or a later stripe beyond the plain base-code part.
pub fn decode_recursive<S: Symbol>(
    code: &CodeParams,
    map: &LinearCellMap,
    array: &StripeArray<S>,
    available: &[usize],
) -> Result<Vec<Vec<S>>> {
    let (k, alpha) = (code.k(), map.alpha());
    let mut nodes: Vec<usize> = available.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    if nodes.len() < k {
        return Err(Error::InsufficientSymbols { have: nodes.len(), need: k });
    }
    nodes.truncate(k);
    let mut messages: Vec<Vec<S>> = Vec::with_capacity(alpha);
    for stripe in 0..alpha {
        let mut known = BTreeMap::new();
        for &node in &nodes {
            let row = map.row(node, stripe);
            let base = code.generator_row(node);
            if row[stripe * k..(stripe + 1) * k] != base[..] {
                return Err(Error::CausalityViolation { node, stripe, source_stripe: stripe });
            }
            if let Some(idx) = row[(stripe + 1) * k..].iter().position(|c| !c.is_zero()) {
                return Err(Error::CausalityViolation {
                    node,
                    stripe,
                    source_stripe: stripe + 1 + idx / k,
                });
            }
            let mut sym = array.get(node, stripe).clone();
            for (prev, msg) in messages.iter().enumerate() {
                for (pos, m) in msg.iter().enumerate() {
                    sym.add_scaled(row[prev * k + pos], m);
                }
            }
            known.insert(node, sym);
        }
        messages.push(code.reconstruct(&known)?);
    }
    Ok(messages)
}

/// Rebuilds a node's whole row: download all cells of `helpers` (exactly the
/// first `k` are used), decode every message, and re-evaluate the node's cells
/// from the map. Used for parity nodes and multi-failure fallbacks.
pub fn rebuild_node<S: Symbol, C: CellSource<S>>(
    map: &LinearCellMap,
    node: usize,
    helpers: &[usize],
    source: &mut C,
) -> Result<(Vec<S>, RepairReport)> {
    if helpers.contains(&node) {
        return Err(Error::Argument(format!("node {node} cannot help repair itself")));
    }
    let decoder = Decoder::new(map, helpers)?;
    let mut t = Tracked::new(source);
    let mut cells = Vec::with_capacity(map.k() * map.alpha());
    for &h in decoder.nodes() {
        for stripe in 0..map.alpha() {
            cells.push(t.fetch(h, stripe)?);
        }
    }
    let messages = decoder.solve(&cells);
    let flat: Vec<S> = messages.into_iter().flatten().collect();
    let mut ops = OpCount::default();
    let mut out = Vec::with_capacity(map.alpha());
    for stripe in 0..map.alpha() {
        let row = map.row(node, stripe);
        let nnz = row.iter().filter(|c| !c.is_zero()).count() as u64;
        ops += OpCount::new(nnz, nnz.saturating_sub(1));
        out.push(combine(row, &flat));
    }
    t.report.push_phase(RecoveryClass::Reencode, map.alpha(), ops);
    Ok((out, t.finish()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mds::{combinations, MdsLayout};
    use crate::repair::ErasedView;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_messages(rng: &mut ChaCha8Rng, k: usize, alpha: usize) -> Vec<Vec<Gf256>> {
        (0..alpha).map(|_| (0..k).map(|_| Gf256(rng.gen())).collect()).collect()
    }

    fn example1_framework() -> Framework {
        Framework::new(CodeParams::new(8, 4).unwrap(), 5).unwrap()
    }

    // a_x + a_y for stripe-0 ("a") symbols, 1-based as in the worked example
    fn sum_coeffs(alpha: usize, k: usize, terms: &[(usize, usize)]) -> Vec<Gf256> {
        let mut v = vec![Gf256::ZERO; k * alpha];
        for &(stripe, pos) in terms {
            v[stripe * k + pos] += Gf256::ONE;
        }
        v
    }

    #[test]
    fn zero_piggyback_changes_nothing() {
        let mut f = example1_framework();
        let before = f.map().clone();
        f.attach_piggyback(6, 3, &[Gf256::ZERO; 20], Causality::Strict).unwrap();
        assert_eq!(f.map(), &before);
    }

    #[test]
    fn example1_cell_gains_a1_plus_a3() {
        let mut f = example1_framework();
        let pb = sum_coeffs(5, 4, &[(0, 0), (0, 2)]);
        // node 6 / stripe 4 in 1-based terms
        f.attach_piggyback(5, 3, &pb, Causality::Strict).unwrap();
        let code = f.code().clone();
        let row = f.map().row(5, 3);
        for (idx, &c) in row.iter().enumerate() {
            let (stripe, pos) = (idx / 4, idx % 4);
            let expected = match stripe {
                0 if pos == 0 || pos == 2 => Gf256::ONE,
                3 => code.parity_row(1)[pos],
                _ => Gf256::ZERO,
            };
            assert_eq!(c, expected, "coefficient ({stripe},{pos})");
        }
        assert_eq!(f.map().rank(), 20);
    }

    #[test]
    fn attach_rejects_systematic_and_acausal_targets() {
        let mut f = example1_framework();
        let pb = sum_coeffs(5, 4, &[(0, 0)]);
        assert!(matches!(
            f.attach_piggyback(2, 3, &pb, Causality::Strict),
            Err(Error::SystematicImmutable { node: 2, stripe: 3 })
        ));
        let late = sum_coeffs(5, 4, &[(4, 1)]);
        assert!(matches!(
            f.attach_piggyback(6, 3, &late, Causality::Strict),
            Err(Error::CausalityViolation { node: 6, stripe: 3, source_stripe: 4 })
        ));
        // same-stripe sources are also acausal
        let same = sum_coeffs(5, 4, &[(3, 1)]);
        assert!(f.attach_piggyback(6, 3, &same, Causality::Strict).is_err());
        f.attach_piggyback(6, 3, &late, Causality::InvertibleTransform).unwrap();
    }

    #[test]
    fn rank_is_preserved_by_random_causal_piggybacks() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut f = Framework::new(CodeParams::new(7, 3).unwrap(), 4).unwrap();
        for _ in 0..20 {
            let stripe = rng.gen_range(1..4);
            let node = rng.gen_range(3..7);
            let mut coeffs = vec![Gf256::ZERO; 12];
            for c in coeffs.iter_mut().take(stripe * 3) {
                *c = Gf256(rng.gen());
            }
            f.attach_piggyback(node, stripe, &coeffs, Causality::Strict).unwrap();
            assert_eq!(f.map().rank(), 12);
        }
        // every 3-node subset still decodes
        let msgs = random_messages(&mut rng, 3, 4);
        let arr = f.encode(&msgs).unwrap();
        for nodes in combinations(7, 3) {
            assert_eq!(decode_full(f.map(), &arr, &nodes).unwrap(), msgs);
            assert_eq!(decode_recursive(f.code(), f.map(), &arr, &nodes).unwrap(), msgs);
        }
    }

    #[test]
    fn plain_layout_decodes_by_read_off() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let layout = MdsLayout::new(CodeParams::new(6, 3).unwrap(), 2).unwrap();
        let msgs = random_messages(&mut rng, 3, 2);
        let arr = layout.encode(&msgs).unwrap();
        let map = layout.cell_map().unwrap();
        assert_eq!(map, LinearCellMap::plain(layout.code(), 2));
        assert_eq!(decode_full(&map, &arr, &[0, 1, 2]).unwrap(), msgs);
        assert_eq!(arr.total_cells(), 12);
    }

    #[test]
    fn decode_needs_k_nodes() {
        let f = example1_framework();
        let arr = f.encode(&vec![vec![Gf256::ZERO; 4]; 5]).unwrap();
        assert!(matches!(
            decode_full(f.map(), &arr, &[0, 5, 7]),
            Err(Error::InsufficientSymbols { have: 3, need: 4 })
        ));
    }

    #[test]
    fn rebuild_node_matches_original_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut f = example1_framework();
        f.attach_piggyback(7, 4, &sum_coeffs(5, 4, &[(1, 1), (2, 3)]), Causality::Strict)
            .unwrap();
        let msgs = random_messages(&mut rng, 4, 5);
        let arr = f.encode(&msgs).unwrap();
        for node in 0..8 {
            let mut view = ErasedView::new(&arr, [node]);
            let (row, rep) = f.repair_systematic(node, &mut view).unwrap();
            assert_eq!(row, arr.node_symbols(node));
            assert_eq!(rep.symbol_count(), 20);
        }
    }
}
