//! Discrete momentum grid, shell classification and the global mode order.
//!
//! Wavevectors live on the integer grid `n`, with physical momentum
//! `k = n / ell` where `ell = L / 2pi` is the box size in units of `2pi`.
//! A grid point is classified by its offset `d = n - K` from the boost `K`:
//!
//! - `INNER` when `|d| < k_F - Delta`,
//! - shell when `k_F - Delta <= |d| <= k_F + Delta`, split into an upper
//!   hemisphere (`SHELL_PLUS`) and its reflection (`SHELL_MINUS`),
//! - points farther out are not part of the table.
//!
//! All comparisons are exact: `|d|^2` is an integer and the radii are
//! rationals, so nothing is misclassified on the shell boundary.
//!
//! The mode order fixes every fermionic sign in the crate. Modes are sorted
//! by partition (`INNER < SHELL_PLUS < SHELL_MINUS`), then by `(n_z, n_y,
//! n_x)` lexicographically, then spin up before down.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, serde_rational, Rational};

/// Integer grid vector `(n_x, n_y, n_z)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[i64; 3]", into = "[i64; 3]")]
pub struct KVector {
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

impl KVector {
    pub const ZERO: KVector = KVector { x: 0, y: 0, z: 0 };

    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        KVector { x, y, z }
    }

    pub fn norm_sqr(self) -> i64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn component(self, axis: usize) -> i64 {
        match axis {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis {axis} out of range"),
        }
    }

    pub fn scale(self, s: i64) -> Self {
        KVector::new(self.x * s, self.y * s, self.z * s)
    }

    /// Upper-hemisphere test with the `z`, then `y`, then `x` tie-break.
    pub fn is_upper(self) -> bool {
        self.z > 0 || (self.z == 0 && (self.y > 0 || (self.y == 0 && self.x > 0)))
    }

    fn sort_key(self) -> (i64, i64, i64) {
        (self.z, self.y, self.x)
    }
}

impl Ord for KVector {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for KVector {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Neg for KVector {
    type Output = KVector;
    fn neg(self) -> KVector {
        KVector::new(-self.x, -self.y, -self.z)
    }
}

impl Add for KVector {
    type Output = KVector;
    fn add(self, o: KVector) -> KVector {
        KVector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for KVector {
    type Output = KVector;
    fn sub(self, o: KVector) -> KVector {
        KVector::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl From<[i64; 3]> for KVector {
    fn from(a: [i64; 3]) -> Self {
        KVector::new(a[0], a[1], a[2])
    }
}

impl From<KVector> for [i64; 3] {
    fn from(k: KVector) -> Self {
        [k.x, k.y, k.z]
    }
}

impl fmt::Display for KVector {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Inner,
    ShellPlus,
    ShellMinus,
}

impl Partition {
    pub fn is_shell(self) -> bool {
        !matches!(self, Partition::Inner)
    }
}

fn one() -> Rational {
    exact::int(1)
}

/// Lattice parameters. All lengths are exact rationals.
///
/// `box_size` is `L / 2pi`, so the default `1` gives `L = 2pi` and unit grid
/// spacing in momentum. `volume` is the `L^3` that divides the coupling in
/// the pairing interaction; it is configured separately so that the
/// interaction prefactor stays rational.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(rename = "box_size_over_2pi", with = "serde_rational", default = "one")]
    pub box_size: Rational,
    #[serde(with = "serde_rational")]
    pub k_fermi: Rational,
    #[serde(with = "serde_rational")]
    pub delta: Rational,
    #[serde(default)]
    pub boost: KVector,
    #[serde(with = "serde_rational", default = "one")]
    pub dispersion_scale: Rational,
    #[serde(default, with = "optional_rational", skip_serializing_if = "Option::is_none")]
    pub chemical_potential: Option<Rational>,
    #[serde(default)]
    pub frozen_core: bool,
    #[serde(with = "serde_rational", default = "one")]
    pub volume: Rational,
    /// Restricts the grid to these offsets from `K` and their negatives.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<KVector>>,
}

mod optional_rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => serde_rational::serialize(r, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<crate::exact::Exact>::deserialize(d).map(|o| o.map(|e| e.0))
    }
}

impl LatticeConfig {
    /// Unit box, unit dispersion, no boost, no chemical potential.
    pub fn new(k_fermi: Rational, delta: Rational) -> Self {
        LatticeConfig {
            box_size: one(),
            k_fermi,
            delta,
            boost: KVector::ZERO,
            dispersion_scale: one(),
            chemical_potential: None,
            frozen_core: false,
            volume: one(),
            support: None,
        }
    }

    pub fn with_support(mut self, support: Vec<KVector>) -> Self {
        self.support = Some(support);
        self
    }

    pub fn with_boost(mut self, boost: KVector) -> Self {
        self.boost = boost;
        self
    }

    pub fn with_frozen_core(mut self, frozen: bool) -> Self {
        self.frozen_core = frozen;
        self
    }

    pub fn with_chemical_potential(mut self, mu: Rational) -> Self {
        self.chemical_potential = Some(mu);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.box_size.is_positive() {
            return Err(Error::InvalidLattice("box size must be positive".into()));
        }
        if !self.delta.is_positive() {
            return Err(Error::InvalidLattice("Delta must be positive".into()));
        }
        if self.k_fermi <= self.delta {
            return Err(Error::InvalidLattice(format!(
                "k_F ({}) must exceed Delta ({}) so the shell does not reach the origin",
                exact::render(&self.k_fermi),
                exact::render(&self.delta)
            )));
        }
        if !self.volume.is_positive() {
            return Err(Error::InvalidLattice("volume must be positive".into()));
        }
        Ok(())
    }

    /// Squared inner and outer shell radii in grid units.
    pub fn shell_radii_sqr(&self) -> (Rational, Rational) {
        let inner = (&self.k_fermi - &self.delta) * &self.box_size;
        let outer = (&self.k_fermi + &self.delta) * &self.box_size;
        (&inner * &inner, &outer * &outer)
    }

    /// Squared Fermi radius in grid units.
    pub fn fermi_radius_sqr(&self) -> Rational {
        let r = &self.k_fermi * &self.box_size;
        &r * &r
    }

    /// Pairing partner of `n`: its reflection about the boost, `2K - n`.
    pub fn partner(&self, n: KVector) -> KVector {
        self.boost.scale(2) - n
    }

    /// One-line description used in reports.
    pub fn descriptor(&self) -> String {
        let mut s = format!(
            "L/2pi={} kF={} Delta={} K={}",
            exact::render(&self.box_size),
            exact::render(&self.k_fermi),
            exact::render(&self.delta),
            self.boost
        );
        if let Some(mu) = &self.chemical_potential {
            s.push_str(&format!(" mu={}", exact::render(mu)));
        }
        if let Some(support) = &self.support {
            let list: Vec<String> = support.iter().map(|k| k.to_string()).collect();
            s.push_str(&format!(" support=[{}]", list.join(",")));
        }
        if self.frozen_core {
            s.push_str(" frozen-core");
        }
        s
    }
}

/// Single-particle energy `c |k|^2 - mu` for grid vector `n`.
pub fn dispersion(config: &LatticeConfig, n: KVector) -> Rational {
    let k2 = Rational::from_integer(BigInt::from(n.norm_sqr()));
    let e = &config.dispersion_scale * k2 / (&config.box_size * &config.box_size);
    match &config.chemical_potential {
        Some(mu) => e - mu,
        None => e,
    }
}

/// Strict or non-strict comparison of an integer against a rational bound.
fn int_lt(value: i64, bound: &Rational) -> bool {
    Rational::from_integer(BigInt::from(value)) < *bound
}

/// Integer-only shell tests for hot loops: `|d|^2 * den <> num`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct RadiusTest {
    num: i128,
    den: i128,
}

impl RadiusTest {
    pub(crate) fn new(r2: &Rational) -> Option<Self> {
        Some(RadiusTest { num: r2.numer().to_i128()?, den: r2.denom().to_i128()? })
    }

    pub(crate) fn below(self, d2: i64) -> bool {
        (d2 as i128) * self.den < self.num
    }

    pub(crate) fn at_most(self, d2: i64) -> bool {
        (d2 as i128) * self.den <= self.num
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mode {
    pub index: usize,
    pub spin: Spin,
    pub n: KVector,
    pub partition: Partition,
}

/// Analytic record of an omitted filled core.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoreSummary {
    pub points: usize,
    pub particles: usize,
    #[serde(with = "serde_rational")]
    pub energy: Rational,
}

/// Grid points of a lattice sorted into partitions, before modes are laid out.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Classification {
    pub inner: Vec<KVector>,
    pub shell_plus: Vec<KVector>,
    pub shell_minus: Vec<KVector>,
}

/// Classifies grid points relative to the boost. Points are returned in
/// mode-order (`(n_z, n_y, n_x)` ascending) within each partition.
pub fn classify(config: &LatticeConfig) -> Result<Classification> {
    config.validate()?;
    let (inner2, outer2) = config.shell_radii_sqr();
    let offsets: Vec<KVector> = match &config.support {
        Some(list) => {
            let set: BTreeSet<KVector> = list.iter().flat_map(|&d| [d, -d]).collect();
            set.into_iter().collect()
        }
        None => {
            let outer = (&config.k_fermi + &config.delta) * &config.box_size;
            let reach = outer
                .ceil()
                .to_integer()
                .to_i64()
                .ok_or_else(|| Error::InvalidLattice("shell radius does not fit the grid".into()))?;
            let mut all = Vec::new();
            for z in -reach..=reach {
                for y in -reach..=reach {
                    for x in -reach..=reach {
                        all.push(KVector::new(x, y, z));
                    }
                }
            }
            all
        }
    };

    let mut out = Classification::default();
    for d in offsets {
        let d2 = d.norm_sqr();
        let n = d + config.boost;
        if int_lt(d2, &inner2) {
            out.inner.push(n);
        } else if !int_lt(d2, &inner2) && Rational::from_integer(BigInt::from(d2)) <= outer2 {
            if d.is_upper() {
                out.shell_plus.push(n);
            } else {
                out.shell_minus.push(n);
            }
        }
    }
    out.inner.sort();
    out.shell_plus.sort();
    out.shell_minus.sort();
    if out.shell_plus.is_empty() && out.shell_minus.is_empty() {
        return Err(Error::EmptyShell);
    }
    let minus: BTreeSet<KVector> = out.shell_minus.iter().copied().collect();
    let plus: BTreeSet<KVector> = out.shell_plus.iter().copied().collect();
    for &k in &out.shell_plus {
        if !minus.contains(&config.partner(k)) {
            return Err(Error::UnpairedMode(k));
        }
    }
    for &k in &out.shell_minus {
        if !plus.contains(&config.partner(k)) {
            return Err(Error::UnpairedMode(k));
        }
    }
    Ok(out)
}

/// The global ordered list of `(spin, k)` modes.
#[derive(Clone, Debug)]
pub struct ModeTable {
    config: LatticeConfig,
    modes: Vec<Mode>,
    lookup: BTreeMap<(Spin, KVector), usize>,
    partitions: BTreeMap<KVector, Partition>,
    inner: Vec<KVector>,
    shell_plus: Vec<KVector>,
    shell_minus: Vec<KVector>,
    core: Option<CoreSummary>,
    tag: u64,
}

impl ModeTable {
    pub fn build(config: &LatticeConfig) -> Result<Self> {
        let classes = classify(config)?;
        let mut partitions = BTreeMap::new();
        for &k in &classes.inner {
            partitions.insert(k, Partition::Inner);
        }
        for &k in &classes.shell_plus {
            partitions.insert(k, Partition::ShellPlus);
        }
        for &k in &classes.shell_minus {
            partitions.insert(k, Partition::ShellMinus);
        }

        let core = config.frozen_core.then(|| CoreSummary {
            points: classes.inner.len(),
            particles: 2 * classes.inner.len(),
            energy: classes.inner.iter().fold(Rational::zero(), |acc, &k| acc + dispersion(config, k) * exact::int(2)),
        });

        let mut ks: Vec<(Partition, KVector)> = Vec::new();
        if !config.frozen_core {
            ks.extend(classes.inner.iter().map(|&k| (Partition::Inner, k)));
        }
        ks.extend(classes.shell_plus.iter().map(|&k| (Partition::ShellPlus, k)));
        ks.extend(classes.shell_minus.iter().map(|&k| (Partition::ShellMinus, k)));

        let count = 2 * ks.len();
        if count > 64 {
            return Err(Error::TooManyModes(count));
        }

        let mut modes = Vec::with_capacity(count);
        let mut lookup = BTreeMap::new();
        for (partition, n) in ks {
            for spin in [Spin::Up, Spin::Down] {
                let index = modes.len();
                lookup.insert((spin, n), index);
                modes.push(Mode { index, spin, n, partition });
            }
        }

        let mut hasher = DefaultHasher::new();
        for m in &modes {
            (m.spin, m.n.x, m.n.y, m.n.z, m.partition).hash(&mut hasher);
        }
        let tag = hasher.finish() | 1;

        let inner = if config.frozen_core { Vec::new() } else { classes.inner };
        Ok(ModeTable {
            config: config.clone(),
            modes,
            lookup,
            partitions,
            inner,
            shell_plus: classes.shell_plus,
            shell_minus: classes.shell_minus,
            core,
            tag,
        })
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Fingerprint used to reject mixing states from different tables.
    pub fn tag(&self) -> u64 {
        self.tag
    }

    pub fn index(&self, spin: Spin, n: KVector) -> Option<usize> {
        self.lookup.get(&(spin, n)).copied()
    }

    /// Index of a mode that must exist; panics otherwise.
    pub fn mode(&self, spin: Spin, n: KVector) -> usize {
        self.index(spin, n).unwrap_or_else(|| panic!("mode ({spin:?}, {n}) is not in the table"))
    }

    /// Partition of a grid point, including frozen inner points.
    pub fn partition(&self, n: KVector) -> Option<Partition> {
        self.partitions.get(&n).copied()
    }

    pub fn in_shell(&self, n: KVector) -> bool {
        self.partition(n).is_some_and(Partition::is_shell)
    }

    /// Inner points present as modes (empty under a frozen core).
    pub fn inner(&self) -> &[KVector] {
        &self.inner
    }

    pub fn shell_plus(&self) -> &[KVector] {
        &self.shell_plus
    }

    pub fn shell_minus(&self) -> &[KVector] {
        &self.shell_minus
    }

    /// All shell points, upper hemisphere first, in mode order.
    pub fn shell(&self) -> Vec<KVector> {
        self.shell_plus.iter().chain(&self.shell_minus).copied().collect()
    }

    pub fn partner(&self, n: KVector) -> KVector {
        self.config.partner(n)
    }

    pub fn core(&self) -> Option<&CoreSummary> {
        self.core.as_ref()
    }

    pub fn energy(&self, n: KVector) -> Rational {
        dispersion(&self.config, n)
    }

    /// Particle number of the pair state within this table's modes.
    pub fn nc_particles(&self) -> usize {
        2 * self.inner.len() + 2 * self.shell_plus.len()
    }

    /// Particle number of the pair state including a frozen core.
    pub fn nc_particles_total(&self) -> usize {
        self.nc_particles() + self.core.as_ref().map_or(0, |c| c.particles)
    }

    /// Counting value of the pair-state energy within the table's modes.
    pub fn nc_energy(&self) -> Rational {
        let two = exact::int(2);
        let inner = self.inner.iter().fold(Rational::zero(), |acc, &k| acc + self.energy(k) * &two);
        self.shell_plus.iter().fold(inner, |acc, &k| acc + self.energy(k) + self.energy(self.partner(k)))
    }

    /// Pair-state energy including the frozen core.
    pub fn nc_energy_total(&self) -> Rational {
        self.nc_energy() + self.core.as_ref().map_or(Rational::zero(), |c| c.energy.clone())
    }

    pub fn descriptor(&self) -> String {
        format!(
            "{} modes={} pairs={} inner={}{}",
            self.config.descriptor(),
            self.len(),
            self.shell_plus.len(),
            self.inner.len(),
            self.core.as_ref().map_or(String::new(), |c| format!(" core={}", c.points))
        )
    }

    /// JSON array of `{index, spin, n, partition}` records.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.modes).expect("modes serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, ratio};

    fn cubic(kf: Rational, delta: Rational) -> LatticeConfig {
        LatticeConfig::new(kf, delta)
    }

    #[test]
    fn unit_vector_shell() {
        let cfg = cubic(ratio(11, 10), ratio(1, 5));
        let classes = classify(&cfg).unwrap();
        // only the origin lies inside 0.9, only the six unit vectors in [0.9, 1.3]
        assert_eq!(classes.inner, vec![KVector::ZERO]);
        assert_eq!(classes.shell_plus, vec![KVector::new(1, 0, 0), KVector::new(0, 1, 0), KVector::new(0, 0, 1)]);
        assert_eq!(classes.shell_minus, vec![KVector::new(0, 0, -1), KVector::new(0, -1, 0), KVector::new(-1, 0, 0)]);
    }

    #[test]
    fn frozen_core_is_summarized() {
        let cfg = cubic(ratio(11, 10), ratio(1, 5)).with_frozen_core(true);
        let table = ModeTable::build(&cfg).unwrap();
        assert_eq!(table.len(), 12);
        let core = table.core().unwrap();
        assert_eq!(core.particles, 2);
        assert_eq!(core.energy, int(0));
        assert!(table.inner().is_empty());
        assert_eq!(table.partition(KVector::ZERO), Some(Partition::Inner));
    }

    #[test]
    fn delta_reaching_origin_is_rejected() {
        let cfg = cubic(int(1), int(1));
        assert!(matches!(ModeTable::build(&cfg), Err(Error::InvalidLattice(_))));
        let cfg = cubic(int(1), int(2));
        assert!(matches!(ModeTable::build(&cfg), Err(Error::InvalidLattice(_))));
    }

    #[test]
    fn empty_shell_is_rejected() {
        // [1.1, 1.3] holds no |n| in {1, sqrt2, ...}
        let cfg = cubic(ratio(6, 5), ratio(1, 10));
        assert!(matches!(ModeTable::build(&cfg), Err(Error::EmptyShell)));
    }

    #[test]
    fn shell_boundary_is_inclusive() {
        // shell [1, 2] exactly: |n|^2 = 1, 2, 3, 4 all included
        let cfg = cubic(ratio(3, 2), ratio(1, 2));
        let classes = classify(&cfg).unwrap();
        assert_eq!(classes.inner, vec![KVector::ZERO]);
        assert_eq!(classes.shell_plus.len() + classes.shell_minus.len(), 6 + 12 + 8 + 6);
        assert_eq!(classes.shell_plus.len(), classes.shell_minus.len());
    }

    #[test]
    fn mode_order_follows_partition_then_lex_then_spin() {
        let cfg = cubic(int(1), ratio(1, 2)).with_support(vec![KVector::new(0, 0, 1)]);
        let table = ModeTable::build(&cfg).unwrap();
        let k = KVector::new(0, 0, 1);
        assert_eq!(table.mode(Spin::Up, k), 0);
        assert_eq!(table.mode(Spin::Down, k), 1);
        assert_eq!(table.mode(Spin::Up, -k), 2);
        assert_eq!(table.mode(Spin::Down, -k), 3);
    }

    #[test]
    fn dispersion_values() {
        let cfg = cubic(ratio(6, 5), ratio(1, 2));
        assert_eq!(dispersion(&cfg, KVector::new(0, 0, 1)), int(1));
        let mu = cfg.clone().with_chemical_potential(int(1));
        assert_eq!(dispersion(&mu, KVector::new(1, 1, 0)), int(1));
        let mut half = cfg;
        half.box_size = ratio(1, 2);
        assert_eq!(dispersion(&half, KVector::new(0, 0, 1)), int(4));
    }

    #[test]
    fn boosted_partners_reflect_about_boost() {
        let k = KVector::new(0, 0, 1);
        let cfg = cubic(int(1), ratio(1, 2)).with_support(vec![k]).with_boost(k);
        let table = ModeTable::build(&cfg).unwrap();
        assert_eq!(table.shell_plus(), &[KVector::new(0, 0, 2)]);
        assert_eq!(table.shell_minus(), &[KVector::ZERO]);
        assert_eq!(table.partner(KVector::new(0, 0, 2)), KVector::ZERO);
    }

    #[test]
    fn too_many_modes() {
        let cfg = cubic(int(3), ratio(1, 2));
        assert!(matches!(ModeTable::build(&cfg), Err(Error::TooManyModes(_))));
    }

    #[test]
    fn json_dump_lists_modes() {
        let cfg = cubic(int(1), ratio(1, 2)).with_support(vec![KVector::new(0, 0, 1)]);
        let table = ModeTable::build(&cfg).unwrap();
        let dump = table.to_json().to_string();
        assert_eq!(
            dump,
            r#"[{"index":0,"n":[0,0,1],"partition":"shell_plus","spin":"up"},{"index":1,"n":[0,0,1],"partition":"shell_plus","spin":"down"},{"index":2,"n":[0,0,-1],"partition":"shell_minus","spin":"up"},{"index":3,"n":[0,0,-1],"partition":"shell_minus","spin":"down"}]"#
        );
    }
}
