//! Occupation-number basis and sparse state vectors.
//!
//! A [`FockState`] stores mode `i` at bit `63 - i` of a machine word, so the
//! integer order of the word equals the lexicographic order of the occupation
//! string written with mode 0 leftmost. Creation and annihilation on mode `i`
//! pick up `(-1)^(number of occupied modes with index < i)`.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::io::{BufRead, Write};
use std::ops::{AddAssign, Mul, Neg};

use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Rational;

pub const MAX_MODES: usize = 64;
pub const DEFAULT_BASIS_CAP: usize = 2_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockState(u64);

impl FockState {
    pub const VACUUM: FockState = FockState(0);

    fn bit(i: usize) -> u64 {
        debug_assert!(i < MAX_MODES);
        1u64 << (63 - i)
    }

    pub fn from_modes<I: IntoIterator<Item = usize>>(modes: I) -> Self {
        FockState(modes.into_iter().fold(0, |acc, i| acc | Self::bit(i)))
    }

    /// Left-aligned raw word (mode 0 in the most significant bit).
    pub fn raw(self) -> u64 {
        self.0
    }

    pub fn from_raw(raw: u64) -> Self {
        FockState(raw)
    }

    pub fn is_occupied(self, i: usize) -> bool {
        self.0 & Self::bit(i) != 0
    }

    pub fn particle_count(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Occupied mode indices in ascending order.
    pub fn occupied(self) -> impl Iterator<Item = usize> {
        let mut word = self.0;
        std::iter::from_fn(move || {
            if word == 0 {
                return None;
            }
            let i = word.leading_zeros() as usize;
            word &= !Self::bit(i);
            Some(i)
        })
    }

    /// Number of occupied modes with index below `i`.
    pub fn occupied_below(self, i: usize) -> u32 {
        if i == 0 {
            0
        } else {
            (self.0 >> (64 - i)).count_ones()
        }
    }

    /// Occupation string over `modes` modes, mode 0 leftmost.
    pub fn to_bitstring(self, modes: usize) -> String {
        (0..modes).map(|i| if self.is_occupied(i) { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(s: &str) -> Result<Self> {
        if s.len() > MAX_MODES {
            return Err(Error::TooManyModes(s.len()));
        }
        let mut word = 0u64;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => word |= Self::bit(i),
                _ => return Err(Error::Parse(format!("bad occupation character {c:?} in {s:?}"))),
            }
        }
        Ok(FockState(word))
    }
}

fn sign_of(count: u32) -> i8 {
    if count.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `a†_i |s>`: `None` when mode `i` is already occupied.
pub fn apply_create(i: usize, s: FockState) -> Option<(i8, FockState)> {
    if s.is_occupied(i) {
        return None;
    }
    Some((sign_of(s.occupied_below(i)), FockState(s.0 | FockState::bit(i))))
}

/// `a_i |s>`: `None` when mode `i` is empty.
pub fn apply_annihilate(i: usize, s: FockState) -> Option<(i8, FockState)> {
    if !s.is_occupied(i) {
        return None;
    }
    Some((sign_of(s.occupied_below(i)), FockState(s.0 & !FockState::bit(i))))
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All states of `modes` modes holding `particles` particles, ascending.
pub fn sector_basis(modes: usize, particles: usize, cap: usize) -> Result<Vec<FockState>> {
    if modes > MAX_MODES {
        return Err(Error::TooManyModes(modes));
    }
    if particles > modes {
        return Ok(Vec::new());
    }
    let dim = binomial(modes, particles);
    if dim > cap as u128 {
        return Err(Error::BasisCap { dim, cap });
    }
    if particles == 0 {
        return Ok(vec![FockState::VACUUM]);
    }
    let shift = 64 - modes as u32;
    let limit: u128 = 1u128 << modes;
    let mut out = Vec::with_capacity(dim as usize);
    // Gosper's hack over right-aligned words, ascending numeric order.
    let mut v: u128 = (1u128 << particles) - 1;
    while v < limit {
        out.push(FockState((v as u64) << shift));
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    Ok(out)
}

/// Amplitude type of a [`StateVector`].
pub trait Scalar:
    Clone + Debug + PartialEq + Zero + AddAssign + Mul<Output = Self> + Neg<Output = Self> + Send + Sync
{
    fn from_rational(r: &Rational) -> Self;
    fn from_sign(sign: i8) -> Self;
    fn conj(&self) -> Self;
    fn norm_sqr_f64(&self) -> f64;
    fn to_complex(&self) -> Complex64;
}

impl Scalar for Complex64 {
    fn from_rational(r: &Rational) -> Self {
        Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0)
    }

    fn from_sign(sign: i8) -> Self {
        Complex64::new(f64::from(sign), 0.0)
    }

    fn conj(&self) -> Self {
        Complex64::conj(self)
    }

    fn norm_sqr_f64(&self) -> f64 {
        Complex64::norm_sqr(self)
    }

    fn to_complex(&self) -> Complex64 {
        *self
    }
}

/// Exact real amplitudes. Every construction here has real coefficients.
impl Scalar for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn from_sign(sign: i8) -> Self {
        crate::exact::int(i64::from(sign))
    }

    fn conj(&self) -> Self {
        self.clone()
    }

    fn norm_sqr_f64(&self) -> f64 {
        (self * self).to_f64().unwrap_or(f64::NAN)
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }
}

/// Sparse map from basis states to amplitudes over a fixed mode table.
///
/// Exact zeros are never stored. Iteration follows the basis order, so every
/// reduction (norms, inner products) is reproducible.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<S: Scalar = Complex64> {
    modes: usize,
    tag: u64,
    amps: BTreeMap<FockState, S>,
}

pub type ExactState = StateVector<Rational>;

impl<S: Scalar> StateVector<S> {
    /// Empty vector. A `tag` of 0 matches any table with the same mode count.
    pub fn zero(modes: usize, tag: u64) -> Self {
        StateVector { modes, tag, amps: BTreeMap::new() }
    }

    pub fn basis(modes: usize, tag: u64, state: FockState, amp: S) -> Self {
        let mut v = Self::zero(modes, tag);
        v.add_amplitude(state, amp);
        v
    }

    pub fn vacuum(modes: usize, tag: u64) -> Self {
        Self::basis(modes, tag, FockState::VACUUM, S::from_sign(1))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn tag(&self) -> u64 {
        self.tag
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn get(&self, s: FockState) -> Option<&S> {
        self.amps.get(&s)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FockState, &S)> {
        self.amps.iter()
    }

    /// Adds `amp` to the amplitude of `s`, dropping the entry if it becomes zero.
    pub fn add_amplitude(&mut self, s: FockState, amp: S) {
        if amp.is_zero() {
            return;
        }
        match self.amps.entry(s) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(amp);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += amp;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn compatible(&self, other: &Self) -> bool {
        self.modes == other.modes && (self.tag == 0 || other.tag == 0 || self.tag == other.tag)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::ModeTableMismatch)
        }
    }

    /// `<self|other> = sum conj(a_s) b_s`.
    pub fn inner_product(&self, other: &Self) -> Result<S> {
        self.check(other)?;
        let mut acc = S::zero();
        for (s, a) in &self.amps {
            if let Some(b) = other.amps.get(s) {
                acc += a.conj() * b.clone();
            }
        }
        Ok(acc)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(S::norm_sqr_f64).fold(0.0, |a, b| a + b)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, factor: &S) -> Self {
        let mut out = Self::zero(self.modes, self.tag);
        for (s, a) in &self.amps {
            out.add_amplitude(*s, a.clone() * factor.clone());
        }
        out
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &Self, factor: &S) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        if out.tag == 0 {
            out.tag = other.tag;
        }
        for (s, a) in &other.amps {
            out.add_amplitude(*s, a.clone() * factor.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, &S::from_sign(-1))
    }

    /// Drops amplitudes with `|a|^2 <= epsilon^2`. A zero epsilon keeps all.
    pub fn purge(&mut self, epsilon: f64) {
        if epsilon > 0.0 {
            let eps2 = epsilon * epsilon;
            self.amps.retain(|_, a| a.norm_sqr_f64() > eps2);
        }
    }

    /// Particle numbers present in the superposition, ascending.
    pub fn particle_numbers(&self) -> Vec<usize> {
        let mut ns: Vec<usize> = self.amps.keys().map(|s| s.particle_count()).collect();
        ns.sort_unstable();
        ns.dedup();
        ns
    }

    pub fn to_complex(&self) -> StateVector<Complex64> {
        let mut out = StateVector::zero(self.modes, self.tag);
        for (s, a) in &self.amps {
            out.add_amplitude(*s, a.to_complex());
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct AmplitudeLine {
    bitstring: String,
    re: f64,
    im: f64,
}

impl StateVector<Complex64> {
    /// Writes one `{bitstring, re, im}` JSON object per line, sorted by bitstring.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for (s, a) in &self.amps {
            let line = AmplitudeLine { bitstring: s.to_bitstring(self.modes), re: a.re, im: a.im };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// Reads the JSON-lines form. `modes` is required when the input is empty.
    pub fn read_jsonl<R: BufRead>(input: R, modes: Option<usize>) -> Result<Self> {
        let mut amps = BTreeMap::new();
        let mut width = modes;
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: AmplitudeLine = serde_json::from_str(&line)?;
            match width {
                Some(w) if w != rec.bitstring.len() => {
                    return Err(Error::Parse(format!(
                        "bitstring {:?} has {} modes, expected {w}",
                        rec.bitstring,
                        rec.bitstring.len()
                    )))
                }
                None => width = Some(rec.bitstring.len()),
                _ => {}
            }
            let amp = Complex64::new(rec.re, rec.im);
            if !amp.is_zero() {
                amps.insert(FockState::from_bitstring(&rec.bitstring)?, amp);
            }
        }
        let modes = width.ok_or_else(|| Error::Parse("empty state without a mode count".into()))?;
        Ok(StateVector { modes, tag: 0, amps })
    }

    pub fn from_jsonl(text: &str, modes: Option<usize>) -> Result<Self> {
        Self::read_jsonl(text.as_bytes(), modes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(s: &str) -> FockState {
        FockState::from_bitstring(s).unwrap()
    }

    #[test]
    fn create_signs() {
        assert_eq!(apply_create(3, st("0000")), Some((1, st("0001"))));
        assert_eq!(apply_create(0, st("0001")), Some((1, st("1001"))));
        assert_eq!(apply_create(2, st("0100")), Some((-1, st("0110"))));
        assert_eq!(apply_create(1, st("0100")), None);
    }

    #[test]
    fn annihilate_signs() {
        assert_eq!(apply_annihilate(3, st("1001")), Some((-1, st("1000"))));
        assert_eq!(apply_annihilate(0, st("1001")), Some((1, st("0001"))));
        assert_eq!(apply_annihilate(2, st("1001")), None);
    }

    #[test]
    fn sector_enumeration() {
        let basis = sector_basis(4, 2, DEFAULT_BASIS_CAP).unwrap();
        let strings: Vec<String> = basis.iter().map(|s| s.to_bitstring(4)).collect();
        assert_eq!(strings, ["0011", "0101", "0110", "1001", "1010", "1100"]);
        assert_eq!(sector_basis(4, 0, DEFAULT_BASIS_CAP).unwrap(), vec![FockState::VACUUM]);
        assert_eq!(sector_basis(16, 8, DEFAULT_BASIS_CAP).unwrap().len(), 12870);
        assert_eq!(sector_basis(64, 64, DEFAULT_BASIS_CAP).unwrap().len(), 1);
        assert!(matches!(sector_basis(40, 20, DEFAULT_BASIS_CAP), Err(Error::BasisCap { .. })));
    }

    #[test]
    fn orthogonal_terms() {
        let plus = StateVector::basis(4, 0, st("1001"), Complex64::new(1.0, 0.0))
            .add_scaled(&StateVector::basis(4, 0, st("0110"), Complex64::new(1.0, 0.0)), &Complex64::new(1.0, 0.0))
            .unwrap();
        let minus = StateVector::basis(4, 0, st("1001"), Complex64::new(1.0, 0.0))
            .sub(&StateVector::basis(4, 0, st("0110"), Complex64::new(1.0, 0.0)))
            .unwrap();
        assert_eq!(plus.inner_product(&minus).unwrap(), Complex64::new(0.0, 0.0));
        let vac = StateVector::<Complex64>::vacuum(4, 0);
        assert_eq!(vac.inner_product(&vac).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn mismatched_tables_rejected() {
        let a = StateVector::<Complex64>::vacuum(4, 7);
        let b = StateVector::<Complex64>::vacuum(4, 9);
        let c = StateVector::<Complex64>::vacuum(5, 7);
        assert!(matches!(a.inner_product(&b), Err(Error::ModeTableMismatch)));
        assert!(matches!(a.inner_product(&c), Err(Error::ModeTableMismatch)));
        assert!(a.inner_product(&StateVector::vacuum(4, 0)).is_ok());
    }

    #[test]
    fn cancellation_drops_entries() {
        let mut v = StateVector::<Complex64>::vacuum(2, 0);
        v.add_amplitude(FockState::VACUUM, Complex64::new(-1.0, 0.0));
        assert!(v.is_empty());
    }

    #[test]
    fn purge_respects_epsilon() {
        let mut v = StateVector::basis(2, 0, st("10"), Complex64::new(1e-20, 0.0));
        v.purge(0.0);
        assert_eq!(v.len(), 1);
        v.purge(1e-15);
        assert!(v.is_empty());
    }

    #[test]
    fn jsonl_format() {
        let mut v = StateVector::basis(4, 0, st("1001"), Complex64::new(1.0, 0.0));
        v.add_amplitude(st("0110"), Complex64::new(-0.5, 0.25));
        assert_eq!(
            v.to_jsonl(),
            "{\"bitstring\":\"0110\",\"re\":-0.5,\"im\":0.25}\n{\"bitstring\":\"1001\",\"re\":1.0,\"im\":0.0}\n"
        );
        let back = StateVector::from_jsonl(&v.to_jsonl(), None).unwrap();
        assert_eq!(back, v);
        assert!(StateVector::from_jsonl("", None).is_err());
        assert_eq!(StateVector::from_jsonl("", Some(3)).unwrap().modes(), 3);
    }

    #[test]
    fn occupied_iterates_ascending() {
        let s = st("0101101");
        assert_eq!(s.occupied().collect::<Vec<_>>(), vec![1, 3, 4, 6]);
        assert_eq!(s.particle_count(), 4);
        assert_eq!(s.occupied_below(4), 2);
    }
}
