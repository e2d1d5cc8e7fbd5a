//! Quantum state backends.
//!
//! Wires are numbered from 0; wire 0 is the most significant bit of the
//! basis index, so on `n` wires wire `w` is bit `n - 1 - w`.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;
pub type Mat2 = [[C64; 2]; 2];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Amplitudes below this squared magnitude are dropped by the sparse
/// backend.
const SPARSE_PRUNE: f64 = 1e-30;

const PARALLEL_MIN_LEN: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Control {
    pub wire: usize,
    /// Fires on |0⟩ instead of |1⟩.
    pub neg: bool,
}

impl Control {
    pub fn pos(wire: usize) -> Control {
        Control { wire, neg: false }
    }

    pub fn neg(wire: usize) -> Control {
        Control { wire, neg: true }
    }

    pub fn complement(self) -> Control {
        Control {
            wire: self.wire,
            neg: !self.neg,
        }
    }
}

pub fn mat_x() -> Mat2 {
    [[ZERO, ONE], [ONE, ZERO]]
}

pub fn mat_ph(theta: f64) -> Mat2 {
    [[ONE, ZERO], [ZERO, C64::from_polar(1.0, theta)]]
}

pub fn mat_ry(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
}

/// Anything gates can be applied to.
pub trait QuantumState {
    /// True for the backend that only tracks classical control flow.
    const CLASSICAL: bool = false;

    fn num_wires(&self) -> usize;
    fn apply_1q(&mut self, target: usize, m: &Mat2, controls: &[Control]);
    fn apply_swap(&mut self, a: usize, b: usize, controls: &[Control]);
}

/// Backend that ignores every gate.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullState {
    pub wires: usize,
}

impl QuantumState for NullState {
    const CLASSICAL: bool = true;

    fn num_wires(&self) -> usize {
        self.wires
    }

    fn apply_1q(&mut self, _: usize, _: &Mat2, _: &[Control]) {}

    fn apply_swap(&mut self, _: usize, _: usize, _: &[Control]) {}
}

fn control_mask(n: usize, controls: &[Control]) -> (u128, u128) {
    let mut mask = 0u128;
    let mut value = 0u128;
    for c in controls {
        let bit = 1u128 << (n - 1 - c.wire);
        mask |= bit;
        if !c.neg {
            value |= bit;
        }
    }
    (mask, value)
}

/// Dense vector of `2^n` amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n: usize,
    amps: Vec<C64>,
}

impl Statevector {
    pub fn zero(n: usize) -> Statevector {
        Statevector::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Statevector {
        assert!(n < usize::BITS as usize - 1, "too many wires for a dense state");
        let mut amps = vec![ZERO; 1usize << n];
        amps[index] = ONE;
        Statevector { n, amps }
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Option<Statevector> {
        if !amps.len().is_power_of_two() {
            return None;
        }
        let n = amps.len().trailing_zeros() as usize;
        Some(Statevector { n, amps })
    }

    /// A Haar-ish random unit vector (normalised complex Gaussian entries).
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Statevector {
        let mut amps: Vec<C64> = (0..1usize << n)
            .map(|_| {
                let (a, b) = gaussian_pair(rng);
                C64::new(a, b)
            })
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        Statevector { n, amps }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_distance(&self, other: &Statevector) -> f64 {
        assert_eq!(self.n, other.n);
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `self ⊗ |0…0⟩` on `extra` more wires.
    pub fn extend_zero(&self, extra: usize) -> Statevector {
        let mut amps = vec![ZERO; self.amps.len() << extra];
        for (i, a) in self.amps.iter().enumerate() {
            amps[i << extra] = *a;
        }
        Statevector { n: self.n + extra, amps }
    }

    pub fn to_sparse(&self) -> SparseState {
        let mut s = SparseState::empty(self.n);
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() > SPARSE_PRUNE {
                s.amps.insert(i as u128, *a);
            }
        }
        s
    }
}

fn gaussian_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    // Box-Muller.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let t = 2.0 * std::f64::consts::PI * u2;
    (r * t.cos(), r * t.sin())
}

impl QuantumState for Statevector {
    fn num_wires(&self) -> usize {
        self.n
    }

    fn apply_1q(&mut self, target: usize, m: &Mat2, controls: &[Control]) {
        let n = self.n;
        let bit = 1usize << (n - 1 - target);
        let (mask, value) = control_mask(n, controls);
        let (mask, value) = (mask as usize, value as usize);
        let m = *m;
        let kernel = |base: usize, chunk: &mut [C64]| {
            let (lo, hi) = chunk.split_at_mut(bit);
            for j in 0..bit {
                if (base + j) & mask != value {
                    continue;
                }
                let a0 = lo[j];
                let a1 = hi[j];
                lo[j] = m[0][0] * a0 + m[0][1] * a1;
                hi[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        };
        if self.amps.len() >= PARALLEL_MIN_LEN {
            self.amps
                .par_chunks_mut(2 * bit)
                .enumerate()
                .for_each(|(k, chunk)| kernel(k * 2 * bit, chunk));
        } else {
            self.amps
                .chunks_mut(2 * bit)
                .enumerate()
                .for_each(|(k, chunk)| kernel(k * 2 * bit, chunk));
        }
    }

    fn apply_swap(&mut self, a: usize, b: usize, controls: &[Control]) {
        let n = self.n;
        let ba = 1usize << (n - 1 - a);
        let bb = 1usize << (n - 1 - b);
        let (mask, value) = control_mask(n, controls);
        let (mask, value) = (mask as usize, value as usize);
        for i in 0..self.amps.len() {
            // Visit each pair once, from the side with a = 1, b = 0.
            if i & ba != 0 && i & bb == 0 && i & mask == value {
                let j = (i & !ba) | bb;
                self.amps.swap(i, j);
            }
        }
    }
}

/// Sparse state as a map from basis index to amplitude; up to 128 wires.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    n: usize,
    amps: HashMap<u128, C64>,
}

impl SparseState {
    pub fn empty(n: usize) -> SparseState {
        assert!(n <= 128, "sparse states hold at most 128 wires");
        SparseState {
            n,
            amps: HashMap::new(),
        }
    }

    pub fn basis(n: usize, index: u128) -> SparseState {
        let mut s = SparseState::empty(n);
        s.amps.insert(index, ONE);
        s
    }

    /// Basis state from wire values, wire 0 first.
    pub fn from_bits(bits: &[bool]) -> SparseState {
        let n = bits.len();
        let idx = bits.iter().fold(0u128, |acc, &b| (acc << 1) | u128::from(b));
        SparseState::basis(n, idx)
    }

    pub fn entries(&self) -> impl Iterator<Item = (u128, C64)> + '_ {
        self.amps.iter().map(|(k, v)| (*k, *v))
    }

    /// Entries sorted by basis index.
    pub fn sorted_entries(&self) -> Vec<(u128, C64)> {
        let mut v: Vec<_> = self.entries().collect();
        v.sort_by_key(|e| e.0);
        v
    }

    pub fn amplitude(&self, index: u128) -> C64 {
        self.amps.get(&index).copied().unwrap_or(ZERO)
    }

    pub fn set(&mut self, index: u128, a: C64) {
        if a.norm_sqr() == 0.0 {
            self.amps.remove(&index);
        } else {
            self.amps.insert(index, a);
        }
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_distance(&self, other: &SparseState) -> f64 {
        let mut d: f64 = 0.0;
        for (k, a) in &self.amps {
            d = d.max((a - other.amplitude(*k)).norm());
        }
        for (k, b) in &other.amps {
            if !self.amps.contains_key(k) {
                d = d.max(b.norm());
            }
        }
        d
    }

    pub fn extend_zero(&self, extra: usize) -> SparseState {
        let mut s = SparseState::empty(self.n + extra);
        for (k, a) in &self.amps {
            s.amps.insert(k << extra, *a);
        }
        s
    }

    pub fn to_dense(&self) -> Statevector {
        let mut amps = vec![ZERO; 1usize << self.n];
        for (k, a) in &self.amps {
            amps[*k as usize] = *a;
        }
        Statevector { n: self.n, amps }
    }

    fn insert_add(map: &mut HashMap<u128, C64>, k: u128, a: C64) {
        *map.entry(k).or_insert(ZERO) += a;
    }
}

impl QuantumState for SparseState {
    fn num_wires(&self) -> usize {
        self.n
    }

    fn apply_1q(&mut self, target: usize, m: &Mat2, controls: &[Control]) {
        let n = self.n;
        let bit = 1u128 << (n - 1 - target);
        let (mask, value) = control_mask(n, controls);
        let diagonal_one = m[0][1] == ZERO && m[1][0] == ZERO && m[0][0] == ONE;
        if diagonal_one {
            for (k, a) in self.amps.iter_mut() {
                if k & mask == value && k & bit != 0 {
                    *a *= m[1][1];
                }
            }
            return;
        }
        let mut out = HashMap::with_capacity(self.amps.len() * 2);
        for (&k, &a) in &self.amps {
            if k & mask != value {
                SparseState::insert_add(&mut out, k, a);
                continue;
            }
            let b = usize::from(k & bit != 0);
            let k0 = k & !bit;
            let k1 = k | bit;
            let c0 = m[0][b] * a;
            let c1 = m[1][b] * a;
            if c0 != ZERO {
                SparseState::insert_add(&mut out, k0, c0);
            }
            if c1 != ZERO {
                SparseState::insert_add(&mut out, k1, c1);
            }
        }
        out.retain(|_, a| a.norm_sqr() > SPARSE_PRUNE);
        self.amps = out;
    }

    fn apply_swap(&mut self, a: usize, b: usize, controls: &[Control]) {
        let n = self.n;
        let ba = 1u128 << (n - 1 - a);
        let bb = 1u128 << (n - 1 - b);
        let (mask, value) = control_mask(n, controls);
        let old = std::mem::take(&mut self.amps);
        self.amps.reserve(old.len());
        for (k, v) in old {
            let k2 = if k & mask == value && ((k & ba != 0) != (k & bb != 0)) {
                k ^ ba ^ bb
            } else {
                k
            };
            self.amps.insert(k2, v);
        }
    }
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl Matrix {
    pub fn identity(dim: usize) -> Matrix {
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = ONE;
        }
        Matrix { dim, data }
    }

    /// Builds a matrix from its columns.
    pub fn from_columns(cols: &[Vec<C64>]) -> Matrix {
        let dim = cols.len();
        let mut data = vec![ZERO; dim * dim];
        for (c, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), dim);
            for (r, v) in col.iter().enumerate() {
                data[r * dim + c] = *v;
            }
        }
        Matrix { dim, data }
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let rows: Vec<Vec<C64>> = (0..d)
            .into_par_iter()
            .map(|r| {
                let mut row = vec![ZERO; d];
                for k in 0..d {
                    let a = self.data[r * d + k];
                    if a == ZERO {
                        continue;
                    }
                    for (c, slot) in row.iter_mut().enumerate() {
                        *slot += a * other.data[k * d + c];
                    }
                }
                row
            })
            .collect();
        Matrix {
            dim: d,
            data: rows.concat(),
        }
    }

    pub fn adjoint(&self) -> Matrix {
        let d = self.dim;
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                data[c * d + r] = self.data[r * d + c].conj();
            }
        }
        Matrix { dim: d, data }
    }

    pub fn max_distance(&self, other: &Matrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        self.adjoint().mul(self).max_distance(&Matrix::identity(self.dim))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wire_zero_is_most_significant() {
        let mut s = Statevector::zero(3);
        s.apply_1q(0, &mat_x(), &[]);
        assert_eq!(s.amplitudes()[0b100], ONE);
    }

    #[test]
    fn controlled_gates_respect_polarity() {
        let mut s = Statevector::basis(2, 0b00);
        s.apply_1q(1, &mat_x(), &[Control::neg(0)]);
        assert_eq!(s.amplitudes()[0b01], ONE);
        s.apply_1q(1, &mat_x(), &[Control::pos(0)]);
        assert_eq!(s.amplitudes()[0b01], ONE);
    }

    #[test]
    fn fredkin_swaps_when_control_is_set() {
        let mut s = Statevector::basis(3, 0b101);
        s.apply_swap(1, 2, &[Control::pos(0)]);
        assert_eq!(s.amplitudes()[0b110], ONE);
        let mut t = SparseState::basis(3, 0b101);
        t.apply_swap(1, 2, &[Control::pos(0)]);
        assert_eq!(t.amplitude(0b110), ONE);
    }

    #[test]
    fn sparse_and_dense_agree_on_random_gates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 5;
        let mut d = Statevector::random(n, &mut rng);
        let mut s = d.to_sparse();
        for _ in 0..40 {
            let t = rng.gen_range(0..n);
            let c = (t + 1 + rng.gen_range(0..n - 1)) % n;
            let ctl = [Control {
                wire: c,
                neg: rng.gen(),
            }];
            let m = match rng.gen_range(0..4) {
                0 => mat_x(),
                1 => mat_ph(rng.gen::<f64>() * 6.0),
                2 => mat_ry(rng.gen::<f64>() * 6.0),
                _ => {
                    d.apply_swap(t, c, &[]);
                    s.apply_swap(t, c, &[]);
                    continue;
                }
            };
            d.apply_1q(t, &m, &ctl);
            s.apply_1q(t, &m, &ctl);
        }
        assert!(s.to_dense().max_distance(&d) < 1e-12);
        assert!((d.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_path_matches_sequential() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let big = Statevector::random(15, &mut rng);
        let mut a = big.clone();
        a.apply_1q(3, &mat_ry(0.7), &[Control::pos(9)]);
        let mut b = big.to_sparse();
        b.apply_1q(3, &mat_ry(0.7), &[Control::pos(9)]);
        assert!(b.to_dense().max_distance(&a) < 1e-12);
    }

    #[test]
    fn extend_zero_appends_low_wires() {
        let s = Statevector::basis(1, 1).extend_zero(2);
        assert_eq!(s.amplitudes()[0b100], ONE);
    }
}
