//! Named many-body states on a mode table.
//!
//! States are kept unnormalized as built: the pair state over `m` upper
//! shell points has `2^m` unit amplitudes and norm `2^(m/2)`. Products of
//! creators act right to left in the order written, iterating the upper
//! shell in mode order.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockState, Scalar, StateVector};
use crate::lattice::{CoreSummary, KVector, ModeTable, Partition, Spin};
use crate::model::{gamma_operator, pair_creator};
use crate::operator::apply;

pub fn vacuum<S: Scalar>(table: &ModeTable) -> StateVector<S> {
    StateVector::vacuum(table.len(), table.tag())
}

/// Every table mode with `|k - K| <= k_F` filled in both spins.
pub fn fermi_state<S: Scalar>(table: &ModeTable) -> StateVector<S> {
    let kf2 = table.config().fermi_radius_sqr();
    let boost = table.config().boost;
    let occupied = table.modes().iter().filter(|m| {
        let d2 = crate::exact::int((m.n - boost).norm_sqr());
        d2 <= kf2
    });
    let state = FockState::from_modes(occupied.map(|m| m.index));
    StateVector::basis(table.len(), table.tag(), state, S::from_sign(1))
}

/// Filled inner sphere, plus the analytic record when the core is frozen.
pub fn phi_core<S: Scalar>(table: &ModeTable) -> (StateVector<S>, Option<CoreSummary>) {
    let occupied = table.modes().iter().filter(|m| m.partition == Partition::Inner);
    let state = FockState::from_modes(occupied.map(|m| m.index));
    (StateVector::basis(table.len(), table.tag(), state, S::from_sign(1)), table.core().cloned())
}

/// Antisymmetric pair creators over the whole upper shell applied to the core.
pub fn nc_state<S: Scalar>(table: &ModeTable) -> Result<StateVector<S>> {
    if table.shell_plus().is_empty() {
        return Err(Error::EmptyShell);
    }
    nc_state_partial(table, table.shell_plus())
}

/// Pair creators over a chosen subset of the upper shell.
///
/// Without particle-number constraints any subset is allowed; only the
/// full upper shell gives the state used everywhere else.
pub fn nc_state_partial<S: Scalar>(table: &ModeTable, pairs: &[KVector]) -> Result<StateVector<S>> {
    let mut seen = std::collections::BTreeSet::new();
    for &k in pairs {
        if table.partition(k) != Some(Partition::ShellPlus) {
            return Err(Error::NotInUpperShell(k));
        }
        if !seen.insert(k) {
            return Err(Error::InvalidLattice(format!("pair {k} listed twice")));
        }
    }
    let (mut v, _) = phi_core::<S>(table);
    for &k in pairs.iter().rev() {
        v = apply(&gamma_operator(table, k)?, &v)?;
    }
    Ok(v)
}

/// Pair state on a boosted lattice, pairing `k` with `2K - k`.
pub fn boosted_nc_state<S: Scalar>(table: &ModeTable) -> Result<StateVector<S>> {
    for &k in table.shell_plus() {
        let p = table.partner(k);
        if table.partition(p) != Some(Partition::ShellMinus) {
            return Err(Error::UnpairedMode(k));
        }
        for spin in [Spin::Up, Spin::Down] {
            if table.index(spin, p).is_none() {
                return Err(Error::UnpairedMode(k));
            }
        }
    }
    nc_state(table)
}

/// Per-shell-point `(u, v)` with `|u|^2 + |v|^2 = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairCoefficients {
    coeffs: BTreeMap<KVector, (Complex64, Complex64)>,
}

const NORMALIZATION_TOL: f64 = 1e-12;

impl PairCoefficients {
    pub fn new(coeffs: BTreeMap<KVector, (Complex64, Complex64)>) -> Result<Self> {
        for (&k, (u, v)) in &coeffs {
            let norm = u.norm_sqr() + v.norm_sqr();
            if (norm - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::NotNormalized { k, norm });
            }
        }
        Ok(PairCoefficients { coeffs })
    }

    /// The same `(u, v)` on every shell point.
    pub fn uniform(table: &ModeTable, u: Complex64, v: Complex64) -> Result<Self> {
        Self::new(table.shell().into_iter().map(|k| (k, (u, v))).collect())
    }

    /// `u = cos theta`, `v = sin theta`, angles in shell order.
    pub fn from_angles(table: &ModeTable, angles: &[f64]) -> Self {
        let shell = table.shell();
        assert_eq!(shell.len(), angles.len(), "one angle per shell point");
        let coeffs = shell
            .into_iter()
            .zip(angles)
            .map(|(k, &t)| (k, (Complex64::new(t.cos(), 0.0), Complex64::new(t.sin(), 0.0))))
            .collect();
        PairCoefficients { coeffs }
    }

    pub fn get(&self, k: KVector) -> Option<(Complex64, Complex64)> {
        self.coeffs.get(&k).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&KVector, &(Complex64, Complex64))> {
        self.coeffs.iter()
    }
}

/// Product over the full shell of `(u + v a†_{up k} a†_{dn -k})` on the core.
pub fn bcs_state(table: &ModeTable, coeffs: &PairCoefficients) -> Result<StateVector<Complex64>> {
    let shell = table.shell();
    for &k in &shell {
        if coeffs.get(k).is_none() {
            return Err(Error::MissingCoefficients(k));
        }
    }
    let (mut psi, _) = phi_core::<Complex64>(table);
    for &k in shell.iter().rev() {
        let (u, v) = coeffs.get(k).expect("checked above");
        let paired = apply(&pair_creator(table, k)?, &psi)?;
        psi = psi.scaled(&u).add_scaled(&paired, &v)?;
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, ratio, Rational};
    use crate::lattice::LatticeConfig;

    fn single_pair() -> ModeTable {
        let cfg = LatticeConfig::new(int(1), ratio(1, 2)).with_support(vec![KVector::new(0, 0, 1)]);
        ModeTable::build(&cfg).unwrap()
    }

    fn st(s: &str) -> FockState {
        FockState::from_bitstring(s).unwrap()
    }

    #[test]
    fn single_pair_nc_state() {
        let v: StateVector<Rational> = nc_state(&single_pair()).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.get(st("1001")), Some(&int(1)));
        assert_eq!(v.get(st("0110")), Some(&int(1)));
    }

    #[test]
    fn fermi_state_fills_inside_kf() {
        // k_F = 1 includes |n| = 1 on the boundary
        let v: StateVector<Rational> = fermi_state(&single_pair());
        assert_eq!(v.get(st("1111")), Some(&int(1)));
        // k_F = 1.2 on the full grid: origin plus six unit vectors
        let cfg = LatticeConfig::new(ratio(6, 5), ratio(1, 2));
        let t = ModeTable::build(&cfg).unwrap();
        let f: StateVector<Rational> = fermi_state(&t);
        let (s, _) = f.iter().next().unwrap();
        assert_eq!(s.particle_count(), 2 * 7);
    }

    #[test]
    fn fermi_state_can_be_vacuum() {
        // shell [0.7, 1.1] holds |n| = 1, which lies outside k_F = 0.9
        let cfg = LatticeConfig::new(ratio(9, 10), ratio(1, 5)).with_support(vec![KVector::new(0, 0, 1)]);
        let t = ModeTable::build(&cfg).unwrap();
        let f: StateVector<Rational> = fermi_state(&t);
        assert_eq!(f, vacuum(&t));
    }

    #[test]
    fn core_states() {
        let cfg = LatticeConfig::new(ratio(6, 5), ratio(1, 2)).with_support(vec![KVector::ZERO, KVector::new(0, 0, 1)]);
        let t = ModeTable::build(&cfg).unwrap();
        let (phi, core) = phi_core::<Rational>(&t);
        assert!(core.is_none());
        assert_eq!(phi.get(st("110000")), Some(&int(1)));

        let frozen = ModeTable::build(&cfg.clone().with_frozen_core(true)).unwrap();
        let (phi, core) = phi_core::<Rational>(&frozen);
        assert_eq!(phi, vacuum(&frozen));
        let core = core.unwrap();
        assert_eq!((core.particles, core.energy.clone()), (2, int(0)));

        let (phi, _) = phi_core::<Rational>(&single_pair());
        assert_eq!(phi, vacuum(&single_pair()));
    }

    #[test]
    fn bcs_limits() {
        let t = single_pair();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let empty = bcs_state(&t, &PairCoefficients::uniform(&t, one, zero).unwrap()).unwrap();
        assert_eq!(empty, vacuum(&t));
        let full = bcs_state(&t, &PairCoefficients::uniform(&t, zero, one).unwrap()).unwrap();
        assert_eq!(full.len(), 1);
        assert_eq!(full.get(st("1111")), Some(&Complex64::new(-1.0, 0.0)));
    }

    #[test]
    fn bcs_half_filling_expansion() {
        // (1/2)(|0000> + |1001> - |0110> - |1111>) by hand expansion
        let t = single_pair();
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let v = bcs_state(&t, &PairCoefficients::uniform(&t, h, h).unwrap()).unwrap();
        let close = |s: &str, want: f64| (v.get(st(s)).unwrap().re - want).abs() < 1e-15;
        assert!(close("0000", 0.5) && close("1001", 0.5) && close("0110", -0.5) && close("1111", -0.5));
        assert!((v.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bcs_rejects_bad_coefficients() {
        let t = single_pair();
        let one = Complex64::new(1.0, 0.0);
        assert!(matches!(PairCoefficients::uniform(&t, one, one), Err(Error::NotNormalized { .. })));
        let partial = PairCoefficients::new([(KVector::new(0, 0, 1), (one, Complex64::new(0.0, 0.0)))].into()).unwrap();
        assert!(matches!(bcs_state(&t, &partial), Err(Error::MissingCoefficients(_))));
    }

    #[test]
    fn partial_builder_validates_pairs() {
        let cfg = LatticeConfig::new(ratio(6, 5), ratio(1, 2)).with_frozen_core(true);
        let t = ModeTable::build(&cfg).unwrap();
        let k = t.shell_plus()[0];
        let one: StateVector<Rational> = nc_state_partial(&t, &[k]).unwrap();
        assert_eq!(one.len(), 2);
        assert!(nc_state_partial::<Rational>(&t, &[k, k]).is_err());
        assert!(matches!(nc_state_partial::<Rational>(&t, &[-k]), Err(Error::NotInUpperShell(_))));
    }
}
