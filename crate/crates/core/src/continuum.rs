//! Energy per particle of the pair state by direct lattice counting, compared
//! with two closed forms as the grid is refined.
//!
//! Energies are in units of the Fermi energy. A grid of size `R` places `R`
//! lattice spacings between the origin and the Fermi surface, so the inner
//! sphere is `|n| < R(1 - d)` and the shell is `R(1 - d) <= |n| <= R(1 + d)`
//! with `d = delta / k_F`. The inner sphere is doubly occupied and the shell
//! holds one particle per point on average.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, int, Rational};
use crate::lattice::RadiusTest;

/// `(3/5)(1 + 10 d^2 + 5 d^4)`.
pub fn closed_form(d: f64) -> f64 {
    0.6 * (1.0 + 10.0 * d * d + 5.0 * d.powi(4))
}

const QUADRATURE_INTERVALS: usize = 4096;

/// Composite Simpson rule on `[a, b]` with an even number of intervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    if n == 0 || a == b {
        return 0.0;
    }
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + h * i as f64);
    }
    sum * h / 3.0
}

/// Continuum energy per particle with the same occupations as the lattice
/// count: radial integrals of `r^2 * r^2` and `r^2` over the inner ball
/// (weight 2) and the shell (weight 1).
pub fn quadrature_oracle(d: f64) -> f64 {
    let a = 1.0 - d;
    let b = 1.0 + d;
    let energy =
        2.0 * simpson(|r| r.powi(4), 0.0, a, QUADRATURE_INTERVALS) + simpson(|r| r.powi(4), a, b, QUADRATURE_INTERVALS);
    let count = 2.0 * simpson(|r| r * r, 0.0, a, QUADRATURE_INTERVALS) + simpson(|r| r * r, a, b, QUADRATURE_INTERVALS);
    energy / count
}

/// Raw sums over one grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GridCount {
    pub inner_points: u64,
    pub shell_points: u64,
    /// Points with `|n| <= R`, i.e. the filled Fermi sphere.
    pub fermi_points: u64,
    /// `sum |n|^2` over the inner sphere.
    pub inner_n2: i128,
    pub shell_n2: i128,
}

impl GridCount {
    fn merge(self, o: GridCount) -> GridCount {
        GridCount {
            inner_points: self.inner_points + o.inner_points,
            shell_points: self.shell_points + o.shell_points,
            fermi_points: self.fermi_points + o.fermi_points,
            inner_n2: self.inner_n2 + o.inner_n2,
            shell_n2: self.shell_n2 + o.shell_n2,
        }
    }

    pub fn points(&self) -> u64 {
        self.inner_points + self.shell_points
    }

    pub fn particles(&self) -> u64 {
        2 * self.inner_points + self.shell_points
    }
}

pub fn count_grid(size: u32, d: &Rational) -> Result<GridCount> {
    let r = int(i64::from(size));
    let lo = &r * (int(1) - d);
    let hi = &r * (int(1) + d);
    let inner = RadiusTest::new(&(&lo * &lo)).ok_or_else(|| Error::Config("grid radius too large".into()))?;
    let outer = RadiusTest::new(&(&hi * &hi)).ok_or_else(|| Error::Config("grid radius too large".into()))?;
    let fermi2 = i64::from(size) * i64::from(size);
    let m = exact::to_f64(&hi).ceil() as i64;

    let total = (-m..=m)
        .into_par_iter()
        .map(|z| {
            let mut c = GridCount::default();
            for y in -m..=m {
                for x in -m..=m {
                    let n2 = x * x + y * y + z * z;
                    if n2 <= fermi2 {
                        c.fermi_points += 1;
                    }
                    if inner.below(n2) {
                        c.inner_points += 1;
                        c.inner_n2 += i128::from(n2);
                    } else if outer.at_most(n2) {
                        c.shell_points += 1;
                        c.shell_n2 += i128::from(n2);
                    }
                }
            }
            c
        })
        .reduce(GridCount::default, GridCount::merge);
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuumRow {
    pub size: u32,
    /// Grid spacing in units of `k_F`.
    pub spacing: f64,
    pub points: u64,
    pub particles: u64,
    pub energy_per_particle: f64,
    /// Relative deviation from the closed form with the lattice particle count.
    pub dev_closed_form: f64,
    /// Relative deviation from the quadrature oracle.
    pub dev_quadrature: f64,
    /// Energy divided by the filled Fermi-sphere count instead.
    pub energy_per_fermi_particle: f64,
    pub dev_closed_form_fermi_count: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuumReport {
    pub k_fermi: String,
    pub delta: String,
    pub ratio: f64,
    pub closed_form: f64,
    pub quadrature: f64,
    /// `(closed_form - quadrature) / quadrature`.
    pub closed_form_vs_quadrature: f64,
    pub rows: Vec<ContinuumRow>,
    /// Negated least-squares slope of `log |dev_quadrature|` against `log R`.
    pub convergence_order: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

pub const CSV_HEADER: &str =
    "size,spacing,points,particles,E_per_N,form_a,form_b,dev_a,dev_b,E_per_N_fermi,dev_a_fermi";

impl ContinuumReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.size,
                r.spacing,
                r.points,
                r.particles,
                r.energy_per_particle,
                self.closed_form,
                self.quadrature,
                r.dev_closed_form,
                r.dev_quadrature,
                r.energy_per_fermi_particle,
                r.dev_closed_form_fermi_count
            ));
        }
        out
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn continuum_energy_check(
    k_fermi: &Rational,
    delta: &Rational,
    sizes: &[u32],
    timings: bool,
) -> Result<ContinuumReport> {
    if *k_fermi <= int(0) || *delta <= int(0) || delta >= k_fermi {
        return Err(Error::InvalidLattice("need 0 < delta < k_F".into()));
    }
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::Config("grid sizes must be positive".into()));
    }
    let start = Instant::now();
    let d_exact = delta / k_fermi;
    let d = exact::to_f64(&d_exact);
    let form_a = closed_form(d);
    let form_b = quadrature_oracle(d);

    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut rows = Vec::with_capacity(sorted.len());
    for &size in &sorted {
        let c = count_grid(size, &d_exact)?;
        let r2 = f64::from(size) * f64::from(size);
        let energy = (2 * c.inner_n2 + c.shell_n2) as f64 / r2;
        let e = energy / c.particles() as f64;
        let e_fermi = energy / (2 * c.fermi_points) as f64;
        rows.push(ContinuumRow {
            size,
            spacing: 1.0 / f64::from(size),
            points: c.points(),
            particles: c.particles(),
            energy_per_particle: e,
            dev_closed_form: (e - form_a) / form_a,
            dev_quadrature: (e - form_b) / form_b,
            energy_per_fermi_particle: e_fermi,
            dev_closed_form_fermi_count: (e_fermi - form_a) / form_a,
        });
    }
    let usable: Vec<&ContinuumRow> = rows.iter().filter(|r| r.dev_quadrature != 0.0).collect();
    let xs: Vec<f64> = usable.iter().map(|r| f64::from(r.size).ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|r| r.dev_quadrature.abs().ln()).collect();
    Ok(ContinuumReport {
        k_fermi: exact::render(k_fermi),
        delta: exact::render(delta),
        ratio: d,
        closed_form: form_a,
        quadrature: form_b,
        closed_form_vs_quadrature: (form_a - form_b) / form_b,
        rows,
        convergence_order: fit_slope(&xs, &ys).map(|s| -s),
        seconds: timings.then(|| start.elapsed().as_secs_f64()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 2);
        assert!((v - 0.0).abs() < 1e-14);
        assert!((simpson(|x| x * x, 0.0, 3.0, 4) - 9.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_matches_radial_polynomials() {
        // matched normalization: (3/5)(a^5 + b^5)/(a^3 + b^3)
        for d in [0.0, 0.05, 0.1, 0.3] {
            let (a, b): (f64, f64) = (1.0 - d, 1.0 + d);
            let want = 0.6 * (a.powi(5) + b.powi(5)) / (a.powi(3) + b.powi(3));
            assert!((quadrature_oracle(d) - want).abs() < 1e-13, "{d}");
        }
    }

    #[test]
    fn small_grid_counts() {
        // R = 1, d = 1/2: inner |n|^2 < 1/4 is the origin; shell |n|^2 <= 9/4
        // holds 6 + 12 = 18 points with sum |n|^2 = 6 + 24
        let c = count_grid(1, &ratio(1, 2)).unwrap();
        assert_eq!(c.inner_points, 1);
        assert_eq!(c.shell_points, 18);
        assert_eq!(c.shell_n2, 30);
        assert_eq!(c.fermi_points, 7);
    }

    #[test]
    fn slope_fit() {
        let x = [1.0f64, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        assert!((fit_slope(&x, &y).unwrap() + 2.0).abs() < 1e-14);
        assert!(fit_slope(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(continuum_energy_check(&int(1), &int(1), &[4], false).is_err());
        assert!(continuum_energy_check(&int(1), &ratio(1, 10), &[], false).is_err());
    }
}
