//! Battery of operator identities behind the pair-state construction.
//!
//! Symbolic checks compare exact term maps and pass only with a zero
//! residual. State checks use relative residuals, on the exact path where
//! the state is small and in double precision where noted.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;
use crate::exact::{self, int, ratio, Rational};
use crate::fock::{FockState, StateVector};
use crate::lattice::{classify, dispersion, KVector, LatticeConfig, ModeTable, Spin};
use crate::model::{
    gamma_operator, momentum_operators, number_operator, pair_operator, Formfactor, FormfactorMode, FormfactorValues,
    PairingModel,
};
use crate::operator::{
    act_string, annihilate, commutator, create, Factor, FactorKind, Monomial, OperatorExpr, DEFAULT_DEGREE_CAP,
};
use crate::states::nc_state;

pub const SYMBOLIC_TOL: f64 = 0.0;
pub const NUMERIC_TOL: f64 = 1e-12;

pub const CHECK_IDS: [&str; 10] = [
    "anticommutation",
    "pair_commutator",
    "gamma_commutator",
    "gamma_algebra",
    "core_commutators",
    "interaction_annihilates_nc",
    "free_energy_eigenvalue",
    "number_eigenvalue",
    "momentum_eigenvalue",
    "coupling_independence",
];

#[derive(Clone, Debug)]
pub struct BatteryOptions {
    pub couplings: Vec<Rational>,
    pub lambdas: Vec<Rational>,
    pub formfactor: Formfactor,
    pub formfactor_mode: FormfactorMode,
    pub seed: u64,
    /// Seeded symmetric formfactors checked alongside the configured one.
    pub random_formfactors: usize,
    pub degree_cap: usize,
    /// Random basis states in the anticommutation sweep.
    pub anticommutation_samples: usize,
    pub timings: bool,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        BatteryOptions {
            couplings: vec![int(-1), ratio(-1, 2), ratio(1, 2), int(1)],
            lambdas: vec![int(-1), int(0), int(1), int(2), ratio(7, 3)],
            formfactor: Formfactor::Unit,
            formfactor_mode: FormfactorMode::Symmetrize,
            seed: 0,
            random_formfactors: 3,
            degree_cap: DEFAULT_DEGREE_CAP,
            anticommutation_samples: 1000,
            timings: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub lattice: String,
    pub parameters: BTreeMap<String, Value>,
    /// Number of sub-cases folded into `residual` (their maximum or sum).
    pub cases: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub lattice: String,
    pub seed: u64,
    pub formfactors: Vec<String>,
    pub couplings: Vec<String>,
    pub lambdas: Vec<String>,
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out =
            format!("lattice: {}\nformfactors: {}\nseed: {}\n\n", self.lattice, self.formfactors.join(", "), self.seed);
        out.push_str(&format!("{:<28} {:>6} {:>12} {:>10}  {}\n", "check", "cases", "residual", "tolerance", "result"));
        for c in &self.checks {
            out.push_str(&format!(
                "{:<28} {:>6} {:>12.3e} {:>10.1e}  {}\n",
                c.id,
                c.cases,
                c.residual,
                c.tolerance,
                if c.passed { "pass" } else { "FAIL" }
            ));
        }
        out.push_str(&format!("\noverall: {}\n", if self.passed { "pass" } else { "FAIL" }));
        out
    }
}

fn render_list(values: &[Rational]) -> Vec<String> {
    values.iter().map(exact::render).collect()
}

/// Formfactors under test: the configured one plus seeded random ones.
pub fn formfactor_list(opts: &BatteryOptions) -> Vec<Formfactor> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = vec![opts.formfactor.clone()];
    for _ in 0..opts.random_formfactors {
        out.push(Formfactor::Random { seed: rng.next_u64() });
    }
    out
}

/// `A†(k) = a†_{up k} a†_{dn p(k)}` as a factor list.
fn pair_factors(table: &ModeTable, k: KVector) -> [Factor; 2] {
    [create(table.mode(Spin::Up, k)), create(table.mode(Spin::Down, table.partner(k)))]
}

fn density(table: &ModeTable, spin: Spin, k: KVector) -> [Factor; 2] {
    let i = table.mode(spin, k);
    [create(i), annihilate(i)]
}

/// Right-hand side of `[W, b†_k(lambda)]` written out term by term:
/// `pref * sum_k1 G(k1,k) A†(k1) (1 + lambda - lambda n_{up -k} - lambda n_{dn k} - n_{up k} - n_{dn -k})`.
pub fn pair_commutator_closed_form(
    table: &ModeTable,
    ff: &FormfactorValues,
    prefactor: &Rational,
    k: KVector,
    lambda: &Rational,
) -> Result<OperatorExpr> {
    let p = table.partner(k);
    let bracket: [(Rational, Option<[Factor; 2]>); 5] = [
        (int(1) + lambda, None),
        (-lambda, Some(density(table, Spin::Up, p))),
        (-lambda, Some(density(table, Spin::Down, k))),
        (int(-1), Some(density(table, Spin::Up, k))),
        (int(-1), Some(density(table, Spin::Down, p))),
    ];
    let mut out = OperatorExpr::zero();
    for k1 in table.shell() {
        let g = ff.get(k1, k);
        if g.is_zero() {
            continue;
        }
        for (c, n) in &bracket {
            let mut factors = pair_factors(table, k1).to_vec();
            if let Some(n) = n {
                factors.extend_from_slice(n);
            }
            out.add_monomial(&Monomial::new(prefactor * &g * c, factors), DEFAULT_DEGREE_CAP)?;
        }
    }
    Ok(out)
}

/// Right-hand side of `[W, gamma†_k]`:
/// `pref * sum_k1 G(k1,k) A†(k1) (n_{up -k} + n_{dn k} - n_{up k} - n_{dn -k})`.
pub fn gamma_commutator_closed_form(
    table: &ModeTable,
    ff: &FormfactorValues,
    prefactor: &Rational,
    k: KVector,
) -> Result<OperatorExpr> {
    let p = table.partner(k);
    let bracket = [
        (int(1), density(table, Spin::Up, p)),
        (int(1), density(table, Spin::Down, k)),
        (int(-1), density(table, Spin::Up, k)),
        (int(-1), density(table, Spin::Down, p)),
    ];
    let mut out = OperatorExpr::zero();
    for k1 in table.shell() {
        let g = ff.get(k1, k);
        if g.is_zero() {
            continue;
        }
        for (c, n) in &bracket {
            let mut factors = pair_factors(table, k1).to_vec();
            factors.extend_from_slice(n);
            out.add_monomial(&Monomial::new(prefactor * &g * c, factors), DEFAULT_DEGREE_CAP)?;
        }
    }
    Ok(out)
}

/// Product of `a†_{up k} a†_{dn k}` over the inner sphere.
pub fn core_operator(table: &ModeTable, cap: usize) -> Result<OperatorExpr> {
    let mut factors = Vec::new();
    for &k in table.inner() {
        factors.push(create(table.mode(Spin::Up, k)));
        factors.push(create(table.mode(Spin::Down, k)));
    }
    OperatorExpr::from_monomial(&Monomial::new(int(1), factors), cap.max(2 * table.inner().len()))
}

struct Context<'a> {
    lattice: &'a LatticeConfig,
    table: ModeTable,
    opts: &'a BatteryOptions,
    models: Vec<PairingModel>,
}

struct Outcome {
    residual: f64,
    cases: usize,
    tolerance: f64,
    lattice: Option<String>,
    parameters: BTreeMap<String, Value>,
}

impl Outcome {
    fn new(tolerance: f64) -> Self {
        Outcome { residual: 0.0, cases: 0, tolerance, lattice: None, parameters: BTreeMap::new() }
    }

    fn record(&mut self, residual: f64) {
        self.cases += 1;
        if residual.is_nan() || residual > self.residual {
            self.residual = if residual.is_nan() { f64::INFINITY } else { residual };
        }
    }

    fn param(mut self, key: &str, value: Value) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }
}

fn exact_distance(a: &OperatorExpr, b: &OperatorExpr) -> f64 {
    a.sub(b).l1_norm_f64()
}

/// Anticommutators of every factor pair, symbolically and on random states.
fn check_anticommutation(ctx: &Context) -> Result<Outcome> {
    let m = ctx.table.len();
    let mut out = Outcome::new(SYMBOLIC_TOL);
    let one = OperatorExpr::identity();
    for i in 0..m {
        for j in 0..m {
            let cases = [
                (annihilate(i), create(j), i == j),
                (create(i), create(j), false),
                (annihilate(i), annihilate(j), false),
            ];
            for (x, y, delta) in cases {
                let (x, y) = (OperatorExpr::factor(x), OperatorExpr::factor(y));
                let anti = x.mul(&y, 2)?.add(&y.mul(&x, 2)?);
                let want = if delta { one.clone() } else { OperatorExpr::zero() };
                out.record(exact_distance(&anti, &want));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.opts.seed ^ 0xa5a5);
    let mask = if m == 64 { u64::MAX } else { ((1u64 << m) - 1) << (64 - m) };
    let mut failures = 0usize;
    for _ in 0..ctx.opts.anticommutation_samples {
        let s = FockState::from_raw(rng.next_u64() & mask);
        let i = rng.gen_range(0..m);
        let j = rng.gen_range(0..m);
        let kinds = [(annihilate(i), create(j)), (create(i), create(j)), (annihilate(i), annihilate(j))];
        for (n, (x, y)) in kinds.into_iter().enumerate() {
            let mut acc: BTreeMap<FockState, i32> = BTreeMap::new();
            for string in [[x, y], [y, x]] {
                if let Some((sign, t)) = act_string(&string, s) {
                    *acc.entry(t).or_default() += i32::from(sign);
                }
            }
            acc.retain(|_, v| *v != 0);
            let want: BTreeMap<FockState, i32> = if n == 0 && i == j { [(s, 1)].into() } else { BTreeMap::new() };
            if acc != want {
                failures += 1;
            }
        }
    }
    out.record(failures as f64);
    Ok(out.param("modes", json!(m)).param("random_states", json!(ctx.opts.anticommutation_samples)))
}

fn check_pair_commutator(ctx: &Context) -> Result<Outcome> {
    let mut out = Outcome::new(SYMBOLIC_TOL);
    let g = int(1);
    for model in &ctx.models {
        let w = model.interaction(&g);
        let pref = model.prefactor(&g);
        for k in ctx.table.shell() {
            for lambda in &ctx.opts.lambdas {
                let lhs = commutator(&w, &pair_operator(&ctx.table, k, lambda)?, ctx.opts.degree_cap)?;
                let rhs = pair_commutator_closed_form(&ctx.table, model.formfactor(), &pref, k, lambda)?;
                out.record(exact_distance(&lhs, &rhs));
            }
        }
    }
    Ok(out.param("g", json!("1")).param("lambda", json!(render_list(&ctx.opts.lambdas))))
}

fn check_gamma_commutator(ctx: &Context) -> Result<Outcome> {
    let mut out = Outcome::new(SYMBOLIC_TOL);
    let g = int(1);
    for model in &ctx.models {
        let w = model.interaction(&g);
        let pref = model.prefactor(&g);
        for k in ctx.table.shell() {
            let lhs = commutator(&w, &gamma_operator(&ctx.table, k)?, ctx.opts.degree_cap)?;
            let rhs = gamma_commutator_closed_form(&ctx.table, model.formfactor(), &pref, k)?;
            out.record(exact_distance(&lhs, &rhs));
            // the general form at lambda = -1 must reduce to the same term map
            let general = pair_commutator_closed_form(&ctx.table, model.formfactor(), &pref, k, &int(-1))?;
            out.record(exact_distance(&general, &rhs));
            // every term ends in an annihilator of one of the four k modes
            let p = ctx.table.partner(k);
            let ends: Vec<usize> = [(Spin::Up, k), (Spin::Down, k), (Spin::Up, p), (Spin::Down, p)]
                .iter()
                .map(|&(s, n)| ctx.table.mode(s, n))
                .collect();
            let stray = lhs
                .terms()
                .filter(|(fs, _)| !matches!(fs.last(), Some(f) if f.kind == FactorKind::Annihilate && ends.contains(&f.mode)))
                .count();
            out.record(stray as f64);
        }
    }
    Ok(out.param("g", json!("1")))
}

fn check_gamma_algebra(ctx: &Context) -> Result<Outcome> {
    let mut out = Outcome::new(SYMBOLIC_TOL);
    let shell = ctx.table.shell();
    let gammas: Vec<OperatorExpr> = shell.iter().map(|&k| gamma_operator(&ctx.table, k)).collect::<Result<_>>()?;
    for (idx, &k) in shell.iter().enumerate() {
        let flipped = gamma_operator(&ctx.table, ctx.table.partner(k))?;
        out.record(exact_distance(&flipped, &gammas[idx].scale(&int(-1))));
    }
    for a in &gammas {
        for b in &gammas {
            out.record(commutator(a, b, ctx.opts.degree_cap)?.l1_norm_f64());
        }
    }
    Ok(out.param("shell_points", json!(shell.len())))
}

/// Both core commutators on a copy of the lattice with the core in the Fock space.
fn check_core_commutators(ctx: &Context) -> Result<Outcome> {
    let mut out = Outcome::new(SYMBOLIC_TOL);
    let mut cfg = ctx.lattice.clone();
    cfg.frozen_core = false;
    let table = ModeTable::build(&cfg)?;
    let cap = ctx.opts.degree_cap.max(6 + 2 * table.inner().len());
    let phi = core_operator(&table, cap)?;
    let g = int(1);
    for ff in formfactor_list(ctx.opts) {
        let model = PairingModel::new(table.clone(), &ff, ctx.opts.formfactor_mode)?;
        let w = model.interaction(&g);
        out.record(commutator(&w, &phi, cap)?.l1_norm_f64());
        for &k in table.shell_plus() {
            let wg = commutator(&w, &gamma_operator(&table, k)?, cap)?;
            out.record(commutator(&wg, &phi, cap)?.l1_norm_f64());
        }
    }
    out.lattice = Some(table.descriptor());
    Ok(out.param("inner_points", json!(table.inner().len())).param("degree_cap", json!(cap)))
}

fn relative_residual(
    v: &StateVector<Complex64>,
    image: &StateVector<Complex64>,
    value: f64,
    scale: f64,
) -> Result<f64> {
    let diff = image.add_scaled(v, &Complex64::new(-value, 0.0))?;
    let denom = scale * v.norm();
    Ok(if diff.norm() == 0.0 { 0.0 } else { diff.norm() / denom })
}

fn check_interaction_annihilates(ctx: &Context) -> Result<Outcome> {
    let mut out = Outcome::new(NUMERIC_TOL);
    let nc = nc_state::<Complex64>(&ctx.table)?;
    let nc_exact = nc_state::<Rational>(&ctx.table)?;
    for model in &ctx.models {
        for g in &ctx.opts.couplings {
            let w = model.interaction(g);
            let image = crate::operator::apply(&w, &nc)?;
            let scale = w.l1_norm_f64();
            out.record(if image.norm() == 0.0 { 0.0 } else { image.norm() / (scale * nc.norm()) });
            let exact_image = crate::operator::apply(&w, &nc_exact)?;
            out.record(if exact_image.is_empty() {
                0.0
            } else {
                exact_image.norm() / (scale * nc.norm()).max(f64::MIN_POSITIVE)
            });
        }
    }
    Ok(out.param("g", json!(render_list(&ctx.opts.couplings))))
}

/// Energy of the pair state from the classification alone:
/// `2 sum_inner eps + sum_upper (eps_k + eps_partner)`.
pub fn counting_energy(config: &LatticeConfig) -> Result<Rational> {
    let classes = classify(config)?;
    let mut e = int(0);
    for &n in &classes.inner {
        e += int(2) * dispersion(config, n);
    }
    for &n in &classes.shell_plus {
        e += dispersion(config, n) + dispersion(config, config.partner(n));
    }
    Ok(e)
}

pub fn counting_particles(config: &LatticeConfig) -> Result<usize> {
    let classes = classify(config)?;
    Ok(2 * classes.inner.len() + 2 * classes.shell_plus.len())
}

fn exact_eigen_residual(op: &OperatorExpr, v: &StateVector<Rational>, value: &Rational) -> Result<f64> {
    let image = crate::operator::apply(op, v)?;
    let diff = image.add_scaled(v, &(-value))?;
    Ok(diff.norm() / v.norm())
}

fn check_free_energy(ctx: &Context) -> Result<Outcome> {
    let mut out = Outcome::new(SYMBOLIC_TOL);
    let nc = nc_state::<Rational>(&ctx.table)?;
    let model = &ctx.models[0];
    out.record(exact_eigen_residual(model.free(), &nc, &ctx.table.nc_energy())?);
    let oracle = counting_energy(ctx.lattice)?;
    out.record(exact::to_f64(&exact::abs(&(ctx.table.nc_energy_total() - &oracle))));
    Ok(out.param("energy", json!(exact::render(&oracle))))
}

fn check_number(ctx: &Context) -> Result<Outcome> {
    let mut out = Outcome::new(SYMBOLIC_TOL);
    let nc = nc_state::<Rational>(&ctx.table)?;
    let n = ctx.table.nc_particles();
    out.record(exact_eigen_residual(&number_operator(&ctx.table), &nc, &int(n as i64))?);
    let oracle = counting_particles(ctx.lattice)?;
    out.record((ctx.table.nc_particles_total() as f64 - oracle as f64).abs());
    Ok(out.param("particles", json!(oracle)))
}

fn momentum_case(config: &LatticeConfig, out: &mut Outcome) -> Result<String> {
    let table = ModeTable::build(config)?;
    let nc = nc_state::<Rational>(&table)?;
    let n = table.nc_particles() as i64;
    let k = config.boost;
    let ops = momentum_operators(&table);
    for (axis, p) in ops.iter().enumerate() {
        out.record(exact_eigen_residual(p, &nc, &int(n * k.component(axis)))?);
    }
    // a frozen core carries 2K per inner point
    let classes = classify(config)?;
    let core_sum = classes.inner.iter().fold(KVector::ZERO, |acc, &v| acc + v.scale(2));
    let want = k.scale(2 * classes.inner.len() as i64);
    out.record(((core_sum - want).norm_sqr() as f64).sqrt());
    Ok(table.descriptor())
}

fn check_momentum(ctx: &Context) -> Result<Outcome> {
    let mut out = Outcome::new(SYMBOLIC_TOL);
    let up = KVector::new(0, 0, 1);
    let minimal = LatticeConfig::new(int(1), ratio(1, 2)).with_support(vec![up]);
    let boosted = minimal.clone().with_boost(up);
    let mut lattices = Vec::new();
    for cfg in [ctx.lattice.clone(), minimal, boosted] {
        lattices.push(momentum_case(&cfg, &mut out)?);
    }
    out.lattice = Some(lattices.join(" | "));
    Ok(out.param("boosts", json!([ctx.lattice.boost, KVector::ZERO, up])))
}

fn check_coupling_independence(ctx: &Context) -> Result<Outcome> {
    let mut out = Outcome::new(NUMERIC_TOL);
    let nc = nc_state::<Complex64>(&ctx.table)?;
    let nc_exact = nc_state::<Rational>(&ctx.table)?;
    let e = ctx.table.nc_energy();
    let e_f64 = exact::to_f64(&e);
    for model in &ctx.models {
        for g in &ctx.opts.couplings {
            let h = model.hamiltonian(g);
            let image = crate::operator::apply(&h, &nc)?;
            out.record(relative_residual(&nc, &image, e_f64, h.l1_norm_f64())?);
            out.record(exact_eigen_residual(&h, &nc_exact, &e)?);
        }
    }
    Ok(out.param("g", json!(render_list(&ctx.opts.couplings))))
}

type CheckFn = fn(&Context) -> Result<Outcome>;

const CHECKS: [CheckFn; 10] = [
    check_anticommutation,
    check_pair_commutator,
    check_gamma_commutator,
    check_gamma_algebra,
    check_core_commutators,
    check_interaction_annihilates,
    check_free_energy,
    check_number,
    check_momentum,
    check_coupling_independence,
];

/// Runs every check once; records come back in the fixed id order.
pub fn run_battery(lattice: &LatticeConfig, opts: &BatteryOptions) -> Result<VerificationReport> {
    let table = ModeTable::build(lattice)?;
    let formfactors = formfactor_list(opts);
    let models = formfactors
        .iter()
        .map(|ff| PairingModel::new(table.clone(), ff, opts.formfactor_mode))
        .collect::<Result<Vec<_>>>()?;
    let ctx = Context { lattice, table, opts, models };
    let descriptor = ctx.table.descriptor();

    let checks = CHECK_IDS
        .par_iter()
        .zip(CHECKS.par_iter())
        .map(|(id, check)| {
            let start = Instant::now();
            let outcome = check(&ctx)?;
            let mut parameters = outcome.parameters;
            parameters.insert("seed".into(), json!(opts.seed));
            Ok(CheckRecord {
                id: id.to_string(),
                lattice: outcome.lattice.unwrap_or_else(|| descriptor.clone()),
                parameters,
                cases: outcome.cases,
                residual: outcome.residual,
                tolerance: outcome.tolerance,
                passed: outcome.residual <= outcome.tolerance,
                seconds: opts.timings.then(|| start.elapsed().as_secs_f64()),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(VerificationReport {
        lattice: descriptor,
        seed: opts.seed,
        formfactors: formfactors.iter().map(ToString::to_string).collect(),
        couplings: render_list(&opts.couplings),
        lambdas: render_list(&opts.lambdas),
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
