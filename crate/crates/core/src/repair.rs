//! Download and operation accounting for single-node repair.

use std::collections::{BTreeSet, HashSet};
use std::ops::{Add, AddAssign};

use crate::error::{Error, Result};
use crate::framework::StripeArray;
use crate::symbol::Symbol;

/// One stored symbol: `node` is the row, `stripe` the column. Both 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub node: usize,
    pub stripe: usize,
}

impl Cell {
    pub fn new(node: usize, stripe: usize) -> Cell {
        Cell { node, stripe }
    }
}

/// Anything that can hand out surviving cells during a repair.
pub trait CellSource<S> {
    fn fetch(&mut self, cell: Cell) -> Result<S>;
}

/// Field multiplications and additions spent on a computation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    pub mults: u64,
    pub adds: u64,
}

impl OpCount {
    pub fn new(mults: u64, adds: u64) -> OpCount {
        OpCount { mults, adds }
    }
}

impl Add for OpCount {
    type Output = OpCount;
    fn add(self, rhs: OpCount) -> OpCount {
        OpCount { mults: self.mults + rhs.mults, adds: self.adds + rhs.adds }
    }
}

impl AddAssign for OpCount {
    fn add_assign(&mut self, rhs: OpCount) {
        self.mults += rhs.mults;
        self.adds += rhs.adds;
    }
}

/// How a group of lost symbols was rebuilt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RecoveryClass {
    /// Single-symbol MDS repair of a systematic symbol in a stripe without
    /// piggyback protection.
    MdsDecode,
    /// Protected symbol peeled out of a unit-coefficient piggyback sum.
    PiggybackSum,
    /// Protected symbols solved jointly from a small linear system.
    LinearSolve,
    /// Whole-node rebuild: decode the messages, then re-encode the row.
    Reencode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phase {
    pub class: RecoveryClass,
    /// Number of lost symbols this phase produced.
    pub symbols: usize,
    pub ops: OpCount,
}

/// Ledger of one single-node repair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RepairReport {
    /// Every surviving cell read, in fetch order, without repeats.
    pub downloaded: Vec<Cell>,
    pub phases: Vec<Phase>,
}

impl RepairReport {
    pub fn symbol_count(&self) -> usize {
        self.downloaded.len()
    }

    pub fn ops(&self) -> OpCount {
        self.phases.iter().fold(OpCount::default(), |acc, p| acc + p.ops)
    }

    pub fn mult_count(&self) -> u64 {
        self.ops().mults
    }

    pub fn add_count(&self) -> u64 {
        self.ops().adds
    }

    /// Total symbols and ops for one recovery class.
    pub fn ops_for(&self, class: RecoveryClass) -> (usize, OpCount) {
        self.phases
            .iter()
            .filter(|p| p.class == class)
            .fold((0, OpCount::default()), |(n, o), p| (n + p.symbols, o + p.ops))
    }

    pub(crate) fn push_phase(&mut self, class: RecoveryClass, symbols: usize, ops: OpCount) {
        self.phases.push(Phase { class, symbols, ops });
    }
}

/// Wraps a [`CellSource`] and records every fetch into a [`RepairReport`].
/// A second fetch of the same cell is an internal error: no repair path in
/// this crate needs one.
pub(crate) struct Tracked<'a, C> {
    source: &'a mut C,
    seen: HashSet<Cell>,
    pub report: RepairReport,
}

impl<'a, C> Tracked<'a, C> {
    pub fn new(source: &'a mut C) -> Self {
        Tracked { source, seen: HashSet::new(), report: RepairReport::default() }
    }

    pub fn fetch<S>(&mut self, node: usize, stripe: usize) -> Result<S>
    where
        C: CellSource<S>,
    {
        let cell = Cell::new(node, stripe);
        if !self.seen.insert(cell) {
            return Err(Error::Invariant(format!("cell {cell:?} downloaded twice")));
        }
        let v = self.source.fetch(cell)?;
        self.report.downloaded.push(cell);
        Ok(v)
    }

    pub fn finish(self) -> RepairReport {
        self.report
    }
}

/// A stripe array with some nodes treated as lost.
pub struct ErasedView<'a, S> {
    array: &'a StripeArray<S>,
    erased: BTreeSet<usize>,
}

impl<'a, S> ErasedView<'a, S> {
    pub fn new(array: &'a StripeArray<S>, erased: impl IntoIterator<Item = usize>) -> Self {
        ErasedView { array, erased: erased.into_iter().collect() }
    }
}

impl<S: Symbol> CellSource<S> for ErasedView<'_, S> {
    fn fetch(&mut self, cell: Cell) -> Result<S> {
        if self.erased.contains(&cell.node) {
            return Err(Error::Unrecoverable(format!("node {} is erased", cell.node)));
        }
        if cell.node >= self.array.n() || cell.stripe >= self.array.alpha() {
            return Err(Error::Argument(format!("cell {cell:?} out of range")));
        }
        Ok(self.array.get(cell.node, cell.stripe).clone())
    }
}
