//! Operators of the pairing model on a [`ModeTable`].
//!
//! `k` arguments are grid vectors; `partner(k)` is the reflection about the
//! boost, which is `-k` for an unboosted lattice.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::lattice::{KVector, ModeTable, Partition, Spin};
use crate::operator::{annihilate, create, Monomial, OperatorExpr, DEFAULT_DEGREE_CAP};

/// Where the interaction weight `G(k1, k2)` comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum Formfactor {
    /// `G = 1` on the shell.
    Unit,
    /// Rationals in `[1/2, 2]` drawn per pair of hemisphere classes, so the
    /// result is symmetric under `k -> -k` in either slot and under exchange.
    Random { seed: u64 },
    /// Independent rationals per ordered shell pair; breaks the sign symmetry.
    Skewed { seed: u64 },
    /// Explicit values; missing shell pairs are zero.
    Table(BTreeMap<(KVector, KVector), Rational>),
}

impl fmt::Display for Formfactor {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            Formfactor::Unit => f.write_str("unit"),
            Formfactor::Random { seed } => write!(f, "random:{seed}"),
            Formfactor::Skewed { seed } => write!(f, "skewed:{seed}"),
            Formfactor::Table(t) => write!(f, "table[{}]", t.len()),
        }
    }
}

impl FromStr for Formfactor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let seed = |rest: &str| rest.parse::<u64>().map_err(|_| Error::Config(format!("bad formfactor seed in {s:?}")));
        match s.split_once(':') {
            None if s == "unit" => Ok(Formfactor::Unit),
            Some(("random", rest)) => Ok(Formfactor::Random { seed: seed(rest)? }),
            Some(("skewed", rest)) => Ok(Formfactor::Skewed { seed: seed(rest)? }),
            _ => {
                Err(Error::Config(format!("unknown formfactor {s:?} (expected unit, random:<seed> or skewed:<seed>)")))
            }
        }
    }
}

/// How formfactors that break the `k -> -k` symmetry are handled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormfactorMode {
    /// Average over the four sign combinations on ingestion.
    #[default]
    Symmetrize,
    /// Use values as given; off-shell table entries are an error.
    Strict,
}

fn random_weight(rng: &mut ChaCha8Rng) -> Rational {
    exact::ratio(rng.gen_range(30..=120), 60)
}

/// Formfactor values on every ordered pair of shell points.
#[derive(Clone, Debug, PartialEq)]
pub struct FormfactorValues {
    values: BTreeMap<(KVector, KVector), Rational>,
    /// Set when symmetrization changed at least one value.
    pub symmetrized: bool,
}

impl FormfactorValues {
    pub fn resolve(table: &ModeTable, ff: &Formfactor, mode: FormfactorMode) -> Result<Self> {
        let shell = table.shell();
        let class = |k: KVector| {
            if table.partition(k) == Some(Partition::ShellPlus) {
                k
            } else {
                table.partner(k)
            }
        };
        let mut raw = BTreeMap::new();
        match ff {
            Formfactor::Unit => {
                for &a in &shell {
                    for &b in &shell {
                        raw.insert((a, b), exact::int(1));
                    }
                }
            }
            Formfactor::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let plus = table.shell_plus();
                let mut by_class = BTreeMap::new();
                for (i, &a) in plus.iter().enumerate() {
                    for &b in &plus[i..] {
                        let w = random_weight(&mut rng);
                        by_class.insert((a, b), w.clone());
                        by_class.insert((b, a), w);
                    }
                }
                for &a in &shell {
                    for &b in &shell {
                        raw.insert((a, b), by_class[&(class(a), class(b))].clone());
                    }
                }
            }
            Formfactor::Skewed { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                for &a in &shell {
                    for &b in &shell {
                        raw.insert((a, b), random_weight(&mut rng));
                    }
                }
            }
            Formfactor::Table(t) => {
                for (&(a, b), v) in t {
                    if table.in_shell(a) && table.in_shell(b) {
                        raw.insert((a, b), v.clone());
                    } else if mode == FormfactorMode::Strict {
                        return Err(Error::OffShellFormfactor(a, b));
                    }
                }
            }
        }
        raw.retain(|_, v| !v.is_zero());

        if mode == FormfactorMode::Strict {
            return Ok(FormfactorValues { values: raw, symmetrized: false });
        }
        let get = |a: KVector, b: KVector| raw.get(&(a, b)).cloned().unwrap_or_else(Rational::zero);
        let quarter = exact::ratio(1, 4);
        let mut values = BTreeMap::new();
        let mut changed = false;
        for &a in &shell {
            for &b in &shell {
                let (pa, pb) = (table.partner(a), table.partner(b));
                let avg = (get(a, b) + get(pa, b) + get(a, pb) + get(pa, pb)) * &quarter;
                if avg != get(a, b) {
                    changed = true;
                }
                if !avg.is_zero() {
                    values.insert((a, b), avg);
                }
            }
        }
        Ok(FormfactorValues { values, symmetrized: changed })
    }

    pub fn get(&self, a: KVector, b: KVector) -> Rational {
        self.values.get(&(a, b)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(KVector, KVector), &Rational)> {
        self.values.iter()
    }

    /// `G(k1, k2) = G(-k1, k2) = G(k1, -k2)` on every shell pair.
    pub fn has_sign_symmetry(&self, table: &ModeTable) -> bool {
        let shell = table.shell();
        shell.iter().all(|&a| {
            shell.iter().all(|&b| {
                let g = self.get(a, b);
                g == self.get(table.partner(a), b) && g == self.get(a, table.partner(b))
            })
        })
    }

    pub fn is_exchange_symmetric(&self) -> bool {
        self.values.iter().all(|(&(a, b), v)| self.get(b, a) == *v)
    }
}

/// `sum_{s,k} eps_k a†_{sk} a_{sk}` over all table modes.
pub fn free_hamiltonian(table: &ModeTable) -> OperatorExpr {
    let monomials: Vec<Monomial> = table
        .modes()
        .iter()
        .map(|m| Monomial::new(table.energy(m.n), vec![create(m.index), annihilate(m.index)]))
        .collect();
    OperatorExpr::from_monomials(&monomials, DEFAULT_DEGREE_CAP).expect("degree 2")
}

/// `strength * sum_{k1,k2 in shell} G(k1,k2) a†_{up k1} a†_{dn -k1} a_{dn -k2} a_{up k2}`.
pub fn pairing_interaction(table: &ModeTable, strength: &Rational, ff: &FormfactorValues) -> OperatorExpr {
    if strength.is_zero() {
        return OperatorExpr::zero();
    }
    let mut monomials = Vec::new();
    for ((k1, k2), g) in ff.iter() {
        let factors = vec![
            create(table.mode(Spin::Up, *k1)),
            create(table.mode(Spin::Down, table.partner(*k1))),
            annihilate(table.mode(Spin::Down, table.partner(*k2))),
            annihilate(table.mode(Spin::Up, *k2)),
        ];
        monomials.push(Monomial::new(strength * g, factors));
    }
    OperatorExpr::from_monomials(&monomials, DEFAULT_DEGREE_CAP).expect("degree 4")
}

/// Total particle number.
pub fn number_operator(table: &ModeTable) -> OperatorExpr {
    let monomials: Vec<Monomial> = table
        .modes()
        .iter()
        .map(|m| Monomial::new(exact::int(1), vec![create(m.index), annihilate(m.index)]))
        .collect();
    OperatorExpr::from_monomials(&monomials, DEFAULT_DEGREE_CAP).expect("degree 2")
}

/// Total momentum per axis, in grid units.
pub fn momentum_operators(table: &ModeTable) -> [OperatorExpr; 3] {
    std::array::from_fn(|axis| {
        let monomials: Vec<Monomial> = table
            .modes()
            .iter()
            .map(|m| Monomial::new(exact::int(m.n.component(axis)), vec![create(m.index), annihilate(m.index)]))
            .collect();
        OperatorExpr::from_monomials(&monomials, DEFAULT_DEGREE_CAP).expect("degree 2")
    })
}

/// Cooper-pair creator `a†_{up k} a†_{dn -k}`.
pub fn pair_creator(table: &ModeTable, k: KVector) -> Result<OperatorExpr> {
    if !table.in_shell(k) {
        return Err(Error::NotInShell(k));
    }
    let m = Monomial::new(
        exact::int(1),
        vec![create(table.mode(Spin::Up, k)), create(table.mode(Spin::Down, table.partner(k)))],
    );
    OperatorExpr::from_monomial(&m, DEFAULT_DEGREE_CAP)
}

/// `a†_{up k} a†_{dn -k} + lambda a†_{up -k} a†_{dn k}` for any shell `k`.
pub fn pair_operator(table: &ModeTable, k: KVector, lambda: &Rational) -> Result<OperatorExpr> {
    let forward = pair_creator(table, k)?;
    let backward = pair_creator(table, table.partner(k))?;
    Ok(forward.add(&backward.scale(lambda)))
}

fn require_upper(table: &ModeTable, k: KVector) -> Result<()> {
    match table.partition(k) {
        Some(Partition::ShellPlus) => Ok(()),
        _ => Err(Error::NotInUpperShell(k)),
    }
}

/// Pair operator restricted to the upper hemisphere.
pub fn build_pair(table: &ModeTable, k: KVector, lambda: &Rational) -> Result<OperatorExpr> {
    require_upper(table, k)?;
    pair_operator(table, k, lambda)
}

/// Antisymmetric pair creator (`lambda = -1`) for any shell `k`.
pub fn gamma_operator(table: &ModeTable, k: KVector) -> Result<OperatorExpr> {
    pair_operator(table, k, &exact::int(-1))
}

/// Antisymmetric pair creator restricted to the upper hemisphere.
pub fn build_gamma(table: &ModeTable, k: KVector) -> Result<OperatorExpr> {
    require_upper(table, k)?;
    gamma_operator(table, k)
}

/// Hamiltonian pieces for one lattice and formfactor; the coupling enters
/// only as a rational scale of the interaction.
#[derive(Clone, Debug)]
pub struct PairingModel {
    table: ModeTable,
    formfactor: FormfactorValues,
    free: OperatorExpr,
    unit_interaction: OperatorExpr,
}

impl PairingModel {
    pub fn new(table: ModeTable, ff: &Formfactor, mode: FormfactorMode) -> Result<Self> {
        let formfactor = FormfactorValues::resolve(&table, ff, mode)?;
        let free = free_hamiltonian(&table);
        let unit_interaction = pairing_interaction(&table, &exact::int(1), &formfactor);
        Ok(PairingModel { table, formfactor, free, unit_interaction })
    }

    pub fn table(&self) -> &ModeTable {
        &self.table
    }

    pub fn formfactor(&self) -> &FormfactorValues {
        &self.formfactor
    }

    pub fn free(&self) -> &OperatorExpr {
        &self.free
    }

    /// `g / L^3`.
    pub fn prefactor(&self, g: &Rational) -> Rational {
        g / &self.table.config().volume
    }

    pub fn interaction(&self, g: &Rational) -> OperatorExpr {
        self.unit_interaction.scale(&self.prefactor(g))
    }

    pub fn hamiltonian(&self, g: &Rational) -> OperatorExpr {
        self.free.add(&self.interaction(g))
    }
}
