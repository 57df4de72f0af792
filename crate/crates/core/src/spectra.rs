//! Exact diagonalization in particle-number sectors and the variational
//! product-state energy, used to place the pair state within the spectrum.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::fock::{sector_basis, FockState, StateVector, DEFAULT_BASIS_CAP};
use crate::lattice::ModeTable;
use crate::model::PairingModel;
use crate::operator::{apply, OperatorExpr};
use crate::sector::{matrix_in_sector, SectorMatrix};
use crate::states::{bcs_state, nc_state, PairCoefficients};

pub const DEFAULT_DENSE_LIMIT: usize = 4096;
pub const DEFAULT_MAX_ITER: usize = 600;

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Largest dimension solved densely.
    pub dense_limit: usize,
    pub basis_cap: usize,
    /// Eigenpairs requested from the iterative solver.
    pub n_lowest: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub want_vectors: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            dense_limit: DEFAULT_DENSE_LIMIT,
            basis_cap: DEFAULT_BASIS_CAP,
            n_lowest: 4,
            max_iter: DEFAULT_MAX_ITER,
            tol: 1e-10,
            want_vectors: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolverMethod {
    Dense,
    Lanczos { iterations: usize },
}

#[derive(Clone, Debug)]
pub struct SectorSpectrum {
    pub particles: usize,
    pub dim: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<Vec<DVector<f64>>>,
    pub method: SolverMethod,
    /// Largest `|Hv - lambda v| / |v|` over the returned pairs.
    pub max_residual: f64,
}

impl SectorSpectrum {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Groups ascending eigenvalues closer than `tol` into `(value, multiplicity)`.
pub fn multiplicities(eigenvalues: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut anchor = f64::NAN;
    for &e in eigenvalues {
        match out.last_mut() {
            Some(last) if (e - anchor).abs() <= tol * anchor.abs().max(1.0) => last.1 += 1,
            _ => {
                anchor = e;
                out.push((e, 1));
            }
        }
    }
    out
}

fn residual(m: &SectorMatrix, value: f64, v: &DVector<f64>) -> f64 {
    let hv = m.matvec(v);
    (hv - v * value).norm() / v.norm()
}

fn dense_eigen(matrix: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    (values, vectors)
}

/// Full dense spectrum up to `dense_limit`, lowest few by Lanczos above it.
pub fn diagonalize_matrix(
    m: &SectorMatrix,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<DVector<f64>>, SolverMethod)> {
    if m.dim() == 0 {
        return Ok((Vec::new(), Vec::new(), SolverMethod::Dense));
    }
    if m.dim() <= opts.dense_limit {
        let (values, vectors) = dense_eigen(&m.to_dense());
        return Ok((values, vectors, SolverMethod::Dense));
    }
    let (values, vectors, iterations) = lanczos(m, opts.n_lowest, opts.max_iter, opts.tol)?;
    Ok((values, vectors, SolverMethod::Lanczos { iterations }))
}

/// Lowest `k` eigenpairs by Lanczos with full reorthogonalization.
pub fn lanczos(m: &SectorMatrix, k: usize, max_iter: usize, tol: f64) -> Result<(Vec<f64>, Vec<DVector<f64>>, usize)> {
    let dim = m.dim();
    let k = k.clamp(1, dim);
    let steps = max_iter.min(dim).max(k);

    let mut q = DVector::from_fn(dim, |i, _| ((i as f64 + 1.0) * 0.618_033_988_749_895).fract() - 0.5);
    q /= q.norm();
    let mut basis: Vec<DVector<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last_residual = f64::INFINITY;

    for j in 0..steps {
        let mut w = m.matvec(&basis[j]);
        let a = basis[j].dot(&w);
        alpha.push(a);
        w.axpy(-a, &basis[j], 1.0);
        if j > 0 {
            w.axpy(-beta[j - 1], &basis[j - 1], 1.0);
        }
        for _ in 0..2 {
            for qi in &basis {
                let overlap = qi.dot(&w);
                w.axpy(-overlap, qi, 1.0);
            }
        }
        let b = w.norm();
        let exhausted = b < 1e-13 * a.abs().max(1.0);

        if (j + 1) % 5 == 0 || exhausted || j + 1 == steps {
            let t = tridiagonal(&alpha, &beta);
            let (theta, s) = dense_eigen(&t);
            let count = k.min(theta.len());
            let worst =
                (0..count).map(|i| (b * s[i][alpha.len() - 1]).abs() / theta[i].abs().max(1.0)).fold(0.0f64, f64::max);
            last_residual = worst;
            if (count == k && worst <= tol) || exhausted {
                let vectors: Vec<DVector<f64>> = (0..count)
                    .map(|i| {
                        let mut v = DVector::zeros(dim);
                        for (coef, qi) in s[i].iter().zip(&basis) {
                            v.axpy(*coef, qi, 1.0);
                        }
                        let n = v.norm();
                        v / n
                    })
                    .collect();
                return Ok((theta[..count].to_vec(), vectors, j + 1));
            }
        }
        if exhausted {
            break;
        }
        beta.push(b);
        basis.push(w / b);
    }
    Err(Error::NoConvergence { iterations: steps, residual: last_residual })
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let n = alpha.len();
    DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            alpha[r]
        } else if r + 1 == c {
            beta[r]
        } else if c + 1 == r {
            beta[c]
        } else {
            0.0
        }
    })
}

/// Spectrum of a number-conserving Hermitian operator in the `particles` sector.
pub fn diagonalize_sector(
    h: &OperatorExpr,
    table: &ModeTable,
    particles: usize,
    opts: &SolverOptions,
) -> Result<SectorSpectrum> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian);
    }
    let basis = sector_basis(table.len(), particles, opts.basis_cap)?;
    let m = matrix_in_sector(h, &basis)?;
    let (eigenvalues, vectors, method) = diagonalize_matrix(&m, opts)?;
    let max_residual = vectors.iter().zip(&eigenvalues).map(|(v, &e)| residual(&m, e, v)).fold(0.0f64, f64::max);
    Ok(SectorSpectrum {
        particles,
        dim: basis.len(),
        eigenvalues,
        eigenvectors: opts.want_vectors.then_some(vectors),
        method,
        max_residual,
    })
}

/// Where the pair state sits relative to the exact sector ground state.
#[derive(Clone, Debug, Serialize)]
pub struct NcPlacement {
    pub g: f64,
    pub particles: usize,
    pub dim: usize,
    /// Pair-state energy including any frozen core.
    pub e_nc: f64,
    /// Sector ground energy including any frozen core.
    pub e_ground: f64,
    /// `e_nc - e_ground`.
    pub gap: f64,
    /// `|H|NC> - E|NC>| / |NC|`.
    pub residual: f64,
}

impl NcPlacement {
    /// `1` above the ground state, `0` degenerate with it (within `tol`), `-1` below.
    pub fn gap_sign(&self, tol: f64) -> i8 {
        if self.gap > tol {
            1
        } else if self.gap < -tol {
            -1
        } else {
            0
        }
    }
}

/// Relative eigen-residual of a state under an operator.
pub fn eigen_residual(op: &OperatorExpr, v: &StateVector<Complex64>, value: f64) -> Result<f64> {
    let hv = apply(op, v)?;
    let diff = hv.add_scaled(v, &Complex64::new(-value, 0.0))?;
    Ok(diff.norm() / v.norm())
}

pub fn nc_in_spectrum(model: &PairingModel, g: &Rational, opts: &SolverOptions) -> Result<NcPlacement> {
    let table = model.table();
    let h = model.hamiltonian(g);
    let nc = nc_state::<Complex64>(table)?;
    let e_table = exact::to_f64(&table.nc_energy());
    let core = table.core().map_or(0.0, |c| exact::to_f64(&c.energy));
    let residual = eigen_residual(&h, &nc, e_table)?;
    let spectrum = diagonalize_sector(&h, table, table.nc_particles(), opts)?;
    let e_nc = e_table + core;
    let e_ground = spectrum.ground_energy() + core;
    Ok(NcPlacement {
        g: exact::to_f64(g),
        particles: table.nc_particles_total(),
        dim: spectrum.dim,
        e_nc,
        e_ground,
        gap: e_nc - e_ground,
        residual,
    })
}

/// Best product-state energy found and the angles that produce it.
#[derive(Clone, Debug)]
pub struct VariationalResult {
    /// Including any frozen core.
    pub energy: f64,
    /// One angle per shell point in shell order: `u = cos`, `v = sin`.
    pub angles: Vec<f64>,
    pub coefficients: PairCoefficients,
    pub converged: bool,
    pub sweeps: usize,
}

pub const VARIATIONAL_STARTS: usize = 8;
const VARIATIONAL_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 500;

struct RayleighQuotient<'a> {
    table: &'a ModeTable,
    h: OperatorExpr,
}

impl RayleighQuotient<'_> {
    /// `(<psi|H|psi>, <psi|psi>)`.
    fn parts(&self, angles: &[f64]) -> Result<(f64, f64)> {
        let psi = bcs_state(self.table, &PairCoefficients::from_angles(self.table, angles))?;
        let hpsi = apply(&self.h, &psi)?;
        Ok((psi.inner_product(&hpsi)?.re, psi.norm_sqr()))
    }

    fn energy(&self, angles: &[f64]) -> Result<f64> {
        let (num, den) = self.parts(angles)?;
        Ok(num / den)
    }

    /// Exact minimum along one angle. Both parts are quadratic forms in
    /// `(cos t, sin t)`, so three samples fix them and the minimum is the
    /// lower root of a 2x2 generalized eigenproblem.
    fn line_minimum(&self, angles: &mut [f64], j: usize) -> Result<f64> {
        let mut sample = |t: f64| -> Result<(f64, f64)> {
            angles[j] = t;
            self.parts(angles)
        };
        let (a, p) = sample(0.0)?;
        let (d, r) = sample(std::f64::consts::FRAC_PI_2)?;
        let (h, n) = sample(std::f64::consts::FRAC_PI_4)?;
        let b = h - 0.5 * (a + d);
        let q = n - 0.5 * (p + r);
        let qa = p * r - q * q;
        let qb = -(a * r + d * p - 2.0 * b * q);
        let qc = a * d - b * b;
        let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
        let lambda = (-qb - disc.sqrt()) / (2.0 * qa);
        let x1 = (-(b - lambda * q), a - lambda * p);
        let x2 = (d - lambda * r, -(b - lambda * q));
        let (x, y) = if x1.0.hypot(x1.1) >= x2.0.hypot(x2.1) { x1 } else { x2 };
        angles[j] = if x == 0.0 && y == 0.0 { 0.0 } else { y.atan2(x) };
        Ok(lambda)
    }

    /// Minimizes along `angles + t * dir` for `t >= 0`: doubling to bracket,
    /// then golden-section refinement. Keeps the best point found.
    fn line_search(&self, angles: &mut Vec<f64>, dir: &[f64], energy: f64) -> Result<f64> {
        let at = |t: f64| -> Vec<f64> { angles.iter().zip(dir).map(|(a, d)| a + t * d).collect() };
        let f = |t: f64| self.energy(&at(t));
        let (mut lo, mut mid, mut hi) = (0.0, 1.0, 2.0);
        let mut f_mid = f(mid)?;
        if f_mid.is_nan() || f_mid >= energy {
            return Ok(energy);
        }
        let mut f_hi = f(hi)?;
        while f_hi < f_mid && hi < 1e6 {
            lo = mid;
            mid = hi;
            f_mid = f_hi;
            hi *= 2.0;
            f_hi = f(hi)?;
        }
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (f(c)?, f(d)?);
        let (mut best_t, mut best_f) = (mid, f_mid);
        for _ in 0..200 {
            if b - a <= 1e-12 * (1.0 + mid.abs()) {
                break;
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = f(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = f(d)?;
            }
            for (t, v) in [(c, fc), (d, fd)] {
                if v < best_f {
                    best_t = t;
                    best_f = v;
                }
            }
        }
        *angles = at(best_t);
        Ok(best_f)
    }
}

/// Minimizes the Rayleigh quotient of the BCS product state over one angle
/// per shell point, by coordinate descent from several seeded starts.
pub fn bcs_variational_energy(model: &PairingModel, g: &Rational, seed: u64) -> Result<VariationalResult> {
    let table = model.table();
    let rq = RayleighQuotient { table, h: model.hamiltonian(g) };
    let n = table.shell().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let core = table.core().map_or(0.0, |c| exact::to_f64(&c.energy));

    let mut best: Option<(f64, Vec<f64>, bool, usize)> = None;
    for _ in 0..VARIATIONAL_STARTS {
        let mut angles: Vec<f64> =
            (0..n).map(|_| rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2)).collect();
        let mut energy = rq.energy(&angles)?;
        let mut converged = false;
        let mut sweeps = 0;
        while sweeps < MAX_SWEEPS {
            sweeps += 1;
            let start = energy;
            let before_sweep = angles.clone();
            for j in 0..n {
                let before = angles[j];
                rq.line_minimum(&mut angles, j)?;
                let trial = rq.energy(&angles)?;
                if trial <= energy {
                    energy = trial;
                } else {
                    angles[j] = before;
                }
            }
            let dir: Vec<f64> = angles.iter().zip(&before_sweep).map(|(a, b)| a - b).collect();
            if dir.iter().any(|d| *d != 0.0) {
                energy = rq.line_search(&mut angles, &dir, energy)?;
            }
            if start - energy < VARIATIONAL_TOL {
                converged = true;
                break;
            }
        }
        if best.as_ref().is_none_or(|b| energy < b.0) {
            best = Some((energy, angles, converged, sweeps));
        }
    }
    let (energy, angles, converged, sweeps) = best.expect("at least one start");
    Ok(VariationalResult {
        energy: energy + core,
        coefficients: PairCoefficients::from_angles(table, &angles),
        angles,
        converged,
        sweeps,
    })
}

/// Largest shell for which the scan also runs the variational search.
pub const VARIATIONAL_SHELL_LIMIT: usize = 12;

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub g: f64,
    pub sector: usize,
    pub dim: usize,
    pub e_ground: f64,
    pub e_nc: f64,
    pub e_var: Option<f64>,
    pub residual_nc: f64,
}

pub const CSV_HEADER: &str = "g,sector,dim,E_ground,E_NC,E_var,residual_NC";

impl ScanRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.g,
            self.sector,
            self.dim,
            self.e_ground,
            self.e_nc,
            self.e_var.map_or(String::new(), |e| e.to_string()),
            self.residual_nc
        )
    }
}

pub fn to_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

/// One row per coupling, sorted by `g`.
pub fn scan_g(model: &PairingModel, couplings: &[Rational], seed: u64, opts: &SolverOptions) -> Result<Vec<ScanRow>> {
    let mut gs = couplings.to_vec();
    gs.sort();
    gs.dedup();
    let with_variational = model.table().shell().len() <= VARIATIONAL_SHELL_LIMIT;
    gs.par_iter()
        .map(|g| {
            let placement = nc_in_spectrum(model, g, opts)?;
            let e_var = if with_variational { Some(bcs_variational_energy(model, g, seed)?.energy) } else { None };
            Ok(ScanRow {
                g: placement.g,
                sector: placement.particles,
                dim: placement.dim,
                e_ground: placement.e_ground,
                e_nc: placement.e_nc,
                e_var,
                residual_nc: placement.residual,
            })
        })
        .collect()
}

/// True when the variational energy does not rise as `g` grows more negative.
pub fn variational_monotone_in_attraction(rows: &[ScanRow]) -> bool {
    let attractive: Vec<&ScanRow> = rows.iter().filter(|r| r.g < 0.0 && r.e_var.is_some()).collect();
    attractive.windows(2).all(|w| w[0].e_var.unwrap() <= w[1].e_var.unwrap() + 1e-9)
}

/// Lowest energy over every particle-number sector.
pub fn global_ground_energy(h: &OperatorExpr, table: &ModeTable, opts: &SolverOptions) -> Result<f64> {
    let core = table.core().map_or(0.0, |c| exact::to_f64(&c.energy));
    let mut best = f64::INFINITY;
    for n in 0..=table.len() {
        let s = diagonalize_sector(h, table, n, opts)?;
        best = best.min(s.ground_energy());
    }
    Ok(best + core)
}

/// Dense eigenvector of the sector ground state as a sparse state vector.
pub fn ground_state_vector(
    table: &ModeTable,
    particles: usize,
    vector: &DVector<f64>,
    basis_cap: usize,
) -> Result<StateVector<Complex64>> {
    let basis: Vec<FockState> = sector_basis(table.len(), particles, basis_cap)?;
    let mut v = StateVector::zero(table.len(), table.tag());
    for (s, a) in basis.iter().zip(vector.iter()) {
        v.add_amplitude(*s, Complex64::new(*a, 0.0));
    }
    Ok(v)
}
