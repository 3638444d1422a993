//! Linear `k`-sparse exact-recovery sketch.
//!
//! `R` independent rows of `2k` buckets. Each bucket accumulates
//! `(Σ value, Σ value·index, Σ value·r^index mod P)` over the indices hashed
//! to it, with `P = 2^61 - 1` and a seeded base `r`. Recovery peels buckets
//! that hold a single index, then requires every bucket to be empty.

use crate::error::{Error, Result};
use crate::prf::{self, derive};

/// Mersenne prime `2^61 - 1`.
pub const FIELD_PRIME: u64 = (1 << 61) - 1;

/// Rows per `log2(1/p)`.
pub const ROW_CONSTANT: f64 = 2.0;

const BUCKET_BYTES: usize = 24;
const HEADER_BYTES: usize = 40;

#[inline]
fn mul_mod(a: u64, b: u64) -> u64 {
    let x = a as u128 * b as u128;
    let lo = (x as u64) & FIELD_PRIME;
    let hi = (x >> 61) as u64;
    let s = lo + hi;
    if s >= FIELD_PRIME {
        s - FIELD_PRIME
    } else {
        s
    }
}

#[inline]
fn add_mod(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= FIELD_PRIME {
        s - FIELD_PRIME
    } else {
        s
    }
}

fn pow_mod(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base);
        }
        base = mul_mod(base, base);
        exp >>= 1;
    }
    acc
}

#[inline]
fn field_of(v: i64) -> u64 {
    let m = v.rem_euclid(FIELD_PRIME as i64);
    m as u64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchParams {
    /// Universe size; indices are `0..n`.
    pub n: usize,
    /// Sparsity budget.
    pub k: usize,
    /// Failure probability.
    pub p: f64,
    pub seed: u64,
}

impl SketchParams {
    pub fn new(n: usize, k: usize, p: f64, seed: u64) -> Result<Self> {
        let params = SketchParams { n, k, p, seed };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return Err(Error::InvalidParameter(format!(
                "sparsity budget k={} must lie in [1, n={}]",
                self.k, self.n
            )));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "failure probability {} outside (0, 1)",
                self.p
            )));
        }
        Ok(())
    }

    /// `R = ceil(ROW_CONSTANT · log2(1/p))`.
    pub fn rows(&self) -> usize {
        ((ROW_CONSTANT * (1.0 / self.p).log2()).ceil() as usize).max(1)
    }

    pub fn buckets_per_row(&self) -> usize {
        2 * self.k
    }

    pub fn total_buckets(&self) -> usize {
        self.rows() * self.buckets_per_row()
    }

    /// Bytes of bucket state.
    pub fn memory_bytes(&self) -> usize {
        self.total_buckets() * BUCKET_BYTES
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Bucket {
    count: i64,
    id_sum: i64,
    fingerprint: u64,
}

impl Bucket {
    fn is_zero(&self) -> bool {
        self.count == 0 && self.id_sum == 0 && self.fingerprint == 0
    }

    fn add(&mut self, delta: i64, index: usize, term: u64) {
        self.count += delta;
        self.id_sum += delta * index as i64;
        self.fingerprint = add_mod(self.fingerprint, mul_mod(field_of(delta), term));
    }
}

/// Recovered nonzero entries, sorted by index.
pub type SparseVector = Vec<(usize, i64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseRecoverySketch {
    params: SketchParams,
    rows: usize,
    base: u64,
    row_keys: Vec<u64>,
    buckets: Vec<Bucket>,
}

impl SparseRecoverySketch {
    pub fn new(params: SketchParams) -> Result<Self> {
        params.validate()?;
        let rows = params.rows();
        let base = 2 + derive(params.seed, prf::TAG_FINGERPRINT, 0) % (FIELD_PRIME - 3);
        let row_keys = (0..rows as u64)
            .map(|r| derive(params.seed, prf::TAG_SKETCH_ROW, r))
            .collect();
        Ok(SparseRecoverySketch {
            params,
            rows,
            base,
            row_keys,
            buckets: vec![Bucket::default(); rows * params.buckets_per_row()],
        })
    }

    pub fn params(&self) -> &SketchParams {
        &self.params
    }

    pub fn num_buckets(&self) -> usize {
        self.buckets.len()
    }

    pub fn memory_bytes(&self) -> usize {
        self.buckets.len() * BUCKET_BYTES
    }

    pub fn is_zero(&self) -> bool {
        self.buckets.iter().all(Bucket::is_zero)
    }

    #[inline]
    fn slot(&self, row: usize, index: usize) -> usize {
        let width = self.params.buckets_per_row();
        row * width + (prf::prf(self.row_keys[row], index as u64) % width as u64) as usize
    }

    #[inline]
    fn term(&self, index: usize) -> u64 {
        pow_mod(self.base, index as u64)
    }

    /// Adds `delta` to coordinate `index`.
    pub fn update(&mut self, index: usize, delta: i64) -> Result<()> {
        if index >= self.params.n {
            return Err(Error::VertexOutOfRange {
                vertex: index,
                n: self.params.n,
            });
        }
        let term = self.term(index);
        for row in 0..self.rows {
            let s = self.slot(row, index);
            self.buckets[s].add(delta, index, term);
        }
        Ok(())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.params != other.params {
            return Err(Error::SketchMismatch);
        }
        Ok(())
    }

    /// Bucket-wise sum in place.
    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.buckets.iter_mut().zip(&other.buckets) {
            a.count += b.count;
            a.id_sum += b.id_sum;
            a.fingerprint = add_mod(a.fingerprint, b.fingerprint);
        }
        Ok(())
    }

    /// Sketch of the sum of the two underlying vectors.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    /// Index and value held by a bucket that contains exactly one index.
    fn pure(&self, slot: usize, buckets: &[Bucket]) -> Option<(usize, i64)> {
        let b = buckets[slot];
        if b.count == 0 || b.id_sum % b.count != 0 {
            return None;
        }
        let index = b.id_sum / b.count;
        if index < 0 || index as usize >= self.params.n {
            return None;
        }
        let index = index as usize;
        if b.count < -1 || b.count > self.params.n as i64 {
            return None;
        }
        let width = self.params.buckets_per_row();
        if self.slot(slot / width, index) != slot {
            return None;
        }
        if b.fingerprint != mul_mod(field_of(b.count), self.term(index)) {
            return None;
        }
        Some((index, b.count))
    }

    /// The net vector if it has at most `k` nonzeros and peeling succeeds;
    /// `None` is FAIL.
    pub fn recover(&self) -> Option<SparseVector> {
        let mut buckets = self.buckets.clone();
        let mut found: Vec<(usize, i64)> = Vec::new();
        let mut queue: Vec<usize> = (0..buckets.len())
            .filter(|&s| !buckets[s].is_zero())
            .collect();
        while let Some(s) = queue.pop() {
            let Some((index, value)) = self.pure(s, &buckets) else {
                continue;
            };
            if found.len() == self.params.k || found.iter().any(|&(i, _)| i == index) {
                return None;
            }
            found.push((index, value));
            let term = self.term(index);
            for row in 0..self.rows {
                let t = self.slot(row, index);
                buckets[t].add(-value, index, term);
                if !buckets[t].is_zero() {
                    queue.push(t);
                }
            }
        }
        if !buckets.iter().all(Bucket::is_zero) {
            return None;
        }
        found.sort_unstable();
        Some(found)
    }

    /// Little-endian snapshot: `n, k, p, R, seed` then `(count, id_sum, fingerprint)` per bucket.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES + self.buckets.len() * BUCKET_BYTES);
        out.extend_from_slice(&(self.params.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.params.k as u64).to_le_bytes());
        out.extend_from_slice(&self.params.p.to_le_bytes());
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&self.params.seed.to_le_bytes());
        for b in &self.buckets {
            out.extend_from_slice(&b.count.to_le_bytes());
            out.extend_from_slice(&b.id_sum.to_le_bytes());
            out.extend_from_slice(&b.fingerprint.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Parse {
            line: 0,
            msg: format!("sketch snapshot: {msg}"),
        };
        if bytes.len() < HEADER_BYTES {
            return Err(bad("truncated header"));
        }
        let word = |i: usize| u64::from_le_bytes(bytes[i * 8..i * 8 + 8].try_into().unwrap());
        let params = SketchParams::new(
            word(0) as usize,
            word(1) as usize,
            f64::from_bits(word(2)),
            word(4),
        )?;
        let mut sketch = SparseRecoverySketch::new(params)?;
        if word(3) as usize != sketch.rows {
            return Err(bad("row count does not match parameters"));
        }
        let body = &bytes[HEADER_BYTES..];
        if body.len() != sketch.buckets.len() * BUCKET_BYTES {
            return Err(bad("bucket array length does not match parameters"));
        }
        for (b, chunk) in sketch
            .buckets
            .iter_mut()
            .zip(body.chunks_exact(BUCKET_BYTES))
        {
            let w = |i: usize| <[u8; 8]>::try_from(&chunk[i * 8..i * 8 + 8]).unwrap();
            b.count = i64::from_le_bytes(w(0));
            b.id_sum = i64::from_le_bytes(w(1));
            b.fingerprint = u64::from_le_bytes(w(2));
            if b.fingerprint >= FIELD_PRIME {
                return Err(bad("fingerprint outside the field"));
            }
        }
        Ok(sketch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, k: usize) -> SketchParams {
        SketchParams::new(n, k, 0.01, 1).unwrap()
    }

    #[test]
    fn field_arithmetic() {
        assert_eq!(mul_mod(FIELD_PRIME - 1, FIELD_PRIME - 1), 1);
        assert_eq!(pow_mod(3, 0), 1);
        assert_eq!(pow_mod(2, 61), 1);
        assert_eq!(field_of(-1), FIELD_PRIME - 1);
    }

    #[test]
    fn fresh_sketch_is_zero() {
        let s = SparseRecoverySketch::new(params(8, 2)).unwrap();
        assert!(s.is_zero());
        assert_eq!(s.recover(), Some(vec![]));
        assert_eq!(s, SparseRecoverySketch::new(params(8, 2)).unwrap());
    }

    #[test]
    fn invalid_params() {
        assert!(SketchParams::new(8, 0, 0.01, 1).is_err());
        assert!(SketchParams::new(8, 9, 0.01, 1).is_err());
        assert!(SketchParams::new(8, 2, 0.0, 1).is_err());
        assert!(SketchParams::new(8, 2, 1.0, 1).is_err());
    }

    #[test]
    fn bucket_count_matches_params() {
        let p = SketchParams::new(1024, 16, 1e-3, 9).unwrap();
        assert_eq!(p.rows(), 20);
        let s = SparseRecoverySketch::new(p).unwrap();
        assert_eq!(s.num_buckets(), 2 * 16 * 20);
    }

    #[test]
    fn insert_then_delete_cancels() {
        let mut s = SparseRecoverySketch::new(params(8, 2)).unwrap();
        s.update(5, 1).unwrap();
        s.update(5, -1).unwrap();
        assert_eq!(s, SparseRecoverySketch::new(params(8, 2)).unwrap());
    }

    #[test]
    fn single_entry_recovers() {
        let mut s = SparseRecoverySketch::new(params(8, 1)).unwrap();
        s.update(3, 1).unwrap();
        assert_eq!(s.recover(), Some(vec![(3, 1)]));
    }

    #[test]
    fn update_out_of_range() {
        let mut s = SparseRecoverySketch::new(params(8, 1)).unwrap();
        assert!(s.update(8, 1).is_err());
    }

    #[test]
    fn merge_examples() {
        let zero = SparseRecoverySketch::new(params(8, 2)).unwrap();
        let mut a = zero.clone();
        a.update(1, 1).unwrap();
        let mut b = zero.clone();
        b.update(2, 1).unwrap();
        assert_eq!(a.merge(&zero).unwrap(), a);
        assert_eq!(a.merge(&b).unwrap().recover(), Some(vec![(1, 1), (2, 1)]));
        let mut neg = zero.clone();
        neg.update(1, -1).unwrap();
        assert_eq!(a.merge(&neg).unwrap().recover(), Some(vec![]));
        let other_seed =
            SparseRecoverySketch::new(SketchParams::new(8, 2, 0.01, 2).unwrap()).unwrap();
        assert!(matches!(a.merge(&other_seed), Err(Error::SketchMismatch)));
    }

    #[test]
    fn permuted_updates_give_identical_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = SketchParams::new(100, 8, 1e-3, 77).unwrap();
        let mut updates: Vec<(usize, i64)> = (0..200)
            .map(|_| {
                (
                    rng.gen_range(0..100),
                    if rng.gen_bool(0.5) { 1 } else { -1 },
                )
            })
            .collect();
        let mut a = SparseRecoverySketch::new(p).unwrap();
        for &(i, d) in &updates {
            a.update(i, d).unwrap();
        }
        updates.shuffle(&mut rng);
        let mut b = SparseRecoverySketch::new(p).unwrap();
        for &(i, d) in &updates {
            b.update(i, d).unwrap();
        }
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn exactly_k_entries_recover() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = SketchParams::new(512, 16, 1e-3, 3).unwrap();
        let mut failures = 0;
        for _ in 0..200 {
            let mut s = SparseRecoverySketch::new(p).unwrap();
            let mut idx: Vec<usize> = (0..512).collect();
            idx.shuffle(&mut rng);
            let mut want: Vec<(usize, i64)> = idx[..16].iter().map(|&i| (i, 1)).collect();
            for &(i, v) in &want {
                s.update(i, v).unwrap();
            }
            want.sort_unstable();
            match s.recover() {
                Some(got) => assert_eq!(got, want),
                None => failures += 1,
            }
        }
        assert!(failures <= 1, "{failures} failures");
    }

    #[test]
    fn too_dense_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = SketchParams::new(1024, 16, 1e-3, 4).unwrap();
        for _ in 0..100 {
            let mut s = SparseRecoverySketch::new(p).unwrap();
            let mut idx: Vec<usize> = (0..1024).collect();
            idx.shuffle(&mut rng);
            for &i in &idx[..64] {
                s.update(i, 1).unwrap();
            }
            assert_eq!(s.recover(), None);
        }
    }

    #[test]
    fn values_outside_range_are_rejected() {
        let mut s = SparseRecoverySketch::new(params(8, 2)).unwrap();
        s.update(4, -1).unwrap();
        s.update(4, -1).unwrap();
        assert_eq!(s.recover(), None);
        let mut t = SparseRecoverySketch::new(params(8, 2)).unwrap();
        t.update(4, 3).unwrap();
        assert_eq!(t.recover(), Some(vec![(4, 3)]));
    }

    #[test]
    fn snapshot_round_trip_and_validation() {
        let mut s = SparseRecoverySketch::new(params(64, 4)).unwrap();
        for i in [3, 9, 9, 40] {
            s.update(i, 1).unwrap();
        }
        s.update(12, -1).unwrap();
        let bytes = s.to_bytes();
        assert_eq!(bytes.len(), 40 + s.num_buckets() * 24);
        let back = SparseRecoverySketch::from_bytes(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_bytes(), bytes);
        assert!(SparseRecoverySketch::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(SparseRecoverySketch::from_bytes(&bytes[..10]).is_err());
    }
}
