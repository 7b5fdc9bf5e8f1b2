//! What a storage cell holds.
//!
//! Every code in this crate is linear, so encoders and repair routines are
//! written once against [`Symbol`] and run unchanged on single field elements
//! (`Gf256`), on byte lanes (`Vec<u8>`, one independent GF(2^8) stream per
//! byte), and on coefficient vectors (also `Vec<u8>`) when a layout is encoded
//! symbolically to recover its cell map.

use std::fmt::Debug;

use crate::gf::{self, Gf256};

pub trait Symbol: Clone + PartialEq + Debug {
    /// The zero symbol of the same shape as `self`.
    fn zero_like(&self) -> Self;

    /// `self += other`
    fn add_symbol(&mut self, other: &Self);

    /// `self += c * other`
    fn add_scaled(&mut self, c: Gf256, other: &Self);

    /// `self = c * self`
    fn scale(&mut self, c: Gf256);
}

impl Symbol for Gf256 {
    fn zero_like(&self) -> Self {
        Gf256::ZERO
    }

    fn add_symbol(&mut self, other: &Self) {
        *self += *other;
    }

    fn add_scaled(&mut self, c: Gf256, other: &Self) {
        *self += c * *other;
    }

    fn scale(&mut self, c: Gf256) {
        *self *= c;
    }
}

impl Symbol for Vec<u8> {
    fn zero_like(&self) -> Self {
        vec![0; self.len()]
    }

    fn add_symbol(&mut self, other: &Self) {
        assert_eq!(self.len(), other.len(), "lane width mismatch");
        self.iter_mut().zip(other).for_each(|(a, b)| *a ^= b);
    }

    fn add_scaled(&mut self, c: Gf256, other: &Self) {
        assert_eq!(self.len(), other.len(), "lane width mismatch");
        gf::mul_add_bytes(self, c, other);
    }

    fn scale(&mut self, c: Gf256) {
        gf::scale_bytes(self, c);
    }
}

/// `Σ coeffs[i] · symbols[i]`.
///
/// # Panics
///
/// If `symbols` is empty or the lengths differ.
pub fn combine<S: Symbol>(coeffs: &[Gf256], symbols: &[S]) -> S {
    assert_eq!(coeffs.len(), symbols.len(), "coefficient count mismatch");
    let mut acc = symbols[0].zero_like();
    for (c, s) in coeffs.iter().zip(symbols) {
        acc.add_scaled(*c, s);
    }
    acc
}

/// Unit coefficient vector: the symbolic stand-in for message symbol `index`
/// out of `len`.
pub fn unit(len: usize, index: usize) -> Vec<u8> {
    let mut v = vec![0; len];
    v[index] = 1;
    v
}
