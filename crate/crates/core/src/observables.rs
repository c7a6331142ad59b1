//! Profiles, currents, correlators, structure factors and parity audits.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::operator::{
    expectation, partial_trace, pauli_product, site_label, site_op, total_sz, Axis, DensityMatrix, Operator, SiteAxis,
    C64, ZERO,
};

/// Absolute floor of the "value is zero" decision.
pub const ZERO_TOL_ABS: f64 = 1e-9;

/// `|value| < max(1e-9, 1e-9·‖op‖_max)`.
pub fn is_zero_value(value: f64, op: &Operator) -> bool {
    value.abs() < ZERO_TOL_ABS.max(1e-9 * op.max_abs())
}

fn check_site(site: usize, n_sites: usize) -> Result<()> {
    if site == 0 || site > n_sites {
        return Err(Error::SiteOutOfRange { site, n_sites });
    }
    Ok(())
}

fn real_expectation(rho: &DensityMatrix, op: &Operator) -> Result<f64> {
    Ok(expectation(rho, op)?.re)
}

/// `ĵ_{n,m} = 2(σ_n^x σ_m^y − σ_n^y σ_m^x)`.
pub fn spin_current_operator(n: usize, m: usize, n_sites: usize) -> Result<Operator> {
    if n == m {
        return Err(Error::DuplicateSite(n));
    }
    let xy = pauli_product(&[SiteAxis::new(n, Axis::X), SiteAxis::new(m, Axis::Y)], n_sites)?;
    let yx = pauli_product(&[SiteAxis::new(n, Axis::Y), SiteAxis::new(m, Axis::X)], n_sites)?;
    Ok((xy - yx) * 2.0)
}

/// `Ĵ_n^E = −σ_n^z ĵ_{n−1,n+1} + Δ(ĵ_{n−1,n} σ_{n+1}^z + σ_{n−1}^z ĵ_{n,n+1})`, interior `n` only.
pub fn energy_current_operator(n: usize, delta: f64, n_sites: usize) -> Result<Operator> {
    if n < 2 || n + 1 > n_sites {
        return Err(Error::InvalidModel(format!(
            "energy current needs an interior site 2..={}, got {n}",
            n_sites.saturating_sub(1)
        )));
    }
    let sz = |k| site_op(Axis::Z, k, n_sites);
    let outer = &sz(n)? * &spin_current_operator(n - 1, n + 1, n_sites)?;
    let left = &spin_current_operator(n - 1, n, n_sites)? * &sz(n + 1)?;
    let right = &sz(n - 1)? * &spin_current_operator(n, n + 1, n_sites)?;
    Ok((left + right) * delta - outer)
}

/// `Σ_n ĵ_{n,n+1}`; reflection maps it to its negative, unlike any single bond current.
pub fn total_spin_current_operator(n_sites: usize) -> Result<Operator> {
    let mut acc = Operator::zeros(n_sites);
    for n in 1..n_sites {
        acc += &spin_current_operator(n, n + 1, n_sites)?;
    }
    Ok(acc)
}

/// `Σ_n Ĵ_n^E` over interior sites.
pub fn total_energy_current_operator(delta: f64, n_sites: usize) -> Result<Operator> {
    let mut acc = Operator::zeros(n_sites);
    for n in 2..n_sites {
        acc += &energy_current_operator(n, delta, n_sites)?;
    }
    Ok(acc)
}

/// XXZ bond energy `h_{n,n+1} = σ^xσ^x + σ^yσ^y + Δσ^zσ^z`.
pub fn bond_energy_operator(n: usize, delta: f64, n_sites: usize) -> Result<Operator> {
    let pair = |a| pauli_product(&[SiteAxis::new(n, a), SiteAxis::new(n + 1, a)], n_sites);
    Ok(pair(Axis::X)? + pair(Axis::Y)? + pair(Axis::Z)? * delta)
}

/// Spin currents on every bond and energy currents on every interior site.
#[derive(Clone, Debug)]
pub struct CurrentOperators {
    /// `spin[k]` is `ĵ_{k+1,k+2}`.
    pub spin: Vec<Operator>,
    /// `energy[k]` is `Ĵ^E_{k+2}`.
    pub energy: Vec<Operator>,
    pub delta: f64,
}

impl CurrentOperators {
    pub fn new(n_sites: usize, delta: f64) -> Result<Self> {
        let spin = (1..n_sites).map(|n| spin_current_operator(n, n + 1, n_sites)).collect::<Result<_>>()?;
        let energy = (2..n_sites).map(|n| energy_current_operator(n, delta, n_sites)).collect::<Result<_>>()?;
        Ok(Self { spin, energy, delta })
    }

    pub fn spin_values(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.spin.iter().map(|op| real_expectation(rho, op)).collect()
    }

    pub fn energy_values(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.energy.iter().map(|op| real_expectation(rho, op)).collect()
    }
}

/// `⟨σ_n^{x,y,z}⟩` for `n = 1..N`.
pub fn magnetization_profile(rho: &DensityMatrix) -> Vec<[f64; 3]> {
    let n = rho.n_sites();
    (1..=n)
        .map(|site| {
            let reduced = partial_trace(rho, &[site]).expect("site in range");
            Axis::XYZ.map(|a| expectation(&reduced, &a.matrix()).expect("one-qubit dims").re)
        })
        .collect()
}

pub fn spin_current(rho: &DensityMatrix, n: usize, m: usize) -> Result<f64> {
    real_expectation(rho, &spin_current_operator(n, m, rho.n_sites())?)
}

pub fn energy_current(rho: &DensityMatrix, n: usize, delta: f64) -> Result<f64> {
    real_expectation(rho, &energy_current_operator(n, delta, rho.n_sites())?)
}

/// Real part of `⟨Π σ_{m}^{α}⟩` over distinct sites.
pub fn correlation(rho: &DensityMatrix, factors: &[SiteAxis]) -> Result<f64> {
    real_expectation(rho, &pauli_product(factors, rho.n_sites())?)
}

/// `S^{αβ}(k) = Σ_{n<m} e^{ik(m−n)} ⟨σ_n^α σ_m^β⟩`.
pub fn structure_factor(rho: &DensityMatrix, axes: (Axis, Axis), k: f64) -> Result<C64> {
    let n_sites = rho.n_sites();
    let mut acc = ZERO;
    for n in 1..=n_sites {
        for m in n + 1..=n_sites {
            let c = expectation(rho, &pauli_product(&[SiteAxis::new(n, axes.0), SiteAxis::new(m, axes.1)], n_sites)?)?;
            acc += C64::from_polar(1.0, k * (m - n) as f64) * c;
        }
    }
    Ok(acc)
}

/// `⟨j_n^y⟩ = 2⟨σ_n^z σ_{n+1}^y − σ_n^y σ_{n+1}^z⟩`.
pub fn jy_correlator(rho: &DensityMatrix, n: usize) -> Result<f64> {
    let zy = correlation(rho, &[SiteAxis::new(n, Axis::Z), SiteAxis::new(n + 1, Axis::Y)])?;
    let yz = correlation(rho, &[SiteAxis::new(n, Axis::Y), SiteAxis::new(n + 1, Axis::Z)])?;
    Ok(2.0 * (zy - yz))
}

pub fn total_magnetization(rho: &DensityMatrix) -> f64 {
    expectation(rho, &total_sz(rho.n_sites())).expect("matching dims").re
}

/// Entries forbidden by the parity selection rule: `Π i_m j_m = −1`.
pub fn parity_forbidden(row: usize, col: usize) -> bool {
    (row ^ col).count_ones() % 2 == 1
}

#[derive(Clone, Debug, Serialize)]
pub struct PsrReport {
    pub n_sites: usize,
    pub tol: f64,
    /// Largest `|ρ_ij|` over parity-forbidden entries.
    pub max_violation: f64,
    /// Forbidden entries at or above `tol`, as `±1` labels per site.
    pub violating_indices: Vec<(Vec<i32>, Vec<i32>)>,
    /// Entries below `tol`, counted per row.
    pub zeros_per_row: Vec<usize>,
    /// X-state check of each two-site reduction `(k, m)`.
    pub xstate_pass: Vec<((usize, usize), bool)>,
}

impl PsrReport {
    /// Row count keyed by number of zero entries.
    pub fn zero_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for &z in &self.zeros_per_row {
            *h.entry(z).or_insert(0) += 1;
        }
        h
    }

    pub fn passes(&self) -> bool {
        self.max_violation < self.tol && self.xstate_pass.iter().all(|(_, ok)| *ok)
    }

    /// Every row has exactly `2^(N−1)` vanishing entries.
    pub fn half_zero_rows(&self) -> bool {
        let half = 1usize << (self.n_sites - 1);
        self.zeros_per_row.iter().all(|&z| z == half)
    }
}

fn max_forbidden(op: &Operator) -> f64 {
    op.nonzeros()
        .into_iter()
        .filter(|&(r, c, _)| parity_forbidden(r, c))
        .fold(0.0, |m, (_, _, v)| m.max(v.norm()))
}

pub fn psr_audit(rho: &DensityMatrix, tol: f64) -> PsrReport {
    let n = rho.n_sites();
    let d = rho.dim();
    let op = rho.op();
    let labels = |idx: usize| (1..=n).map(|s| site_label(idx, s, n)).collect::<Vec<_>>();
    let mut max_violation: f64 = 0.0;
    let mut violating_indices = Vec::new();
    let mut zeros_per_row = vec![0; d];
    for r in 0..d {
        for c in 0..d {
            let a = op[(r, c)].norm();
            if a < tol {
                zeros_per_row[r] += 1;
            }
            if parity_forbidden(r, c) {
                max_violation = max_violation.max(a);
                if a >= tol {
                    violating_indices.push((labels(r), labels(c)));
                }
            }
        }
    }
    let mut xstate_pass = Vec::new();
    for k in 1..=n {
        for m in k + 1..=n {
            let reduced = partial_trace(rho, &[k, m]).expect("sites in range");
            xstate_pass.push(((k, m), max_forbidden(reduced.op()) < tol));
        }
    }
    PsrReport { n_sites: n, tol, max_violation, violating_indices, zeros_per_row, xstate_pass }
}

/// A named observable column, parsed from selection strings such as `sx:3`, `jz:2-3`,
/// `je:3`, `corr:x1,z4`, `sf:xz:k=0.5`, `psr`, `stot`, `jy:2`, `grad:z`, `target:1:x`, `tgrad:x`.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Sigma { axis: Axis, site: usize },
    SpinCurrent { n: usize, m: usize },
    EnergyCurrent { n: usize },
    SpinCurrentSum,
    EnergyCurrentSum,
    Correlation(Vec<SiteAxis>),
    StructureFactor { axes: (Axis, Axis), k: f64, k_text: String },
    Psr,
    TotalMagnetization,
    Jy { n: usize },
    /// `⟨σ_N^α − σ_1^α⟩`
    Gradient { axis: Axis },
    /// Polarization targeted by the site's own dissipators.
    Target { site: usize, axis: Axis },
    /// Targeted `σ_N^α − σ_1^α`.
    TargetGradient { axis: Axis },
}

fn parse_xyz(s: &str) -> Result<Axis> {
    match s {
        "x" => Ok(Axis::X),
        "y" => Ok(Axis::Y),
        "z" => Ok(Axis::Z),
        _ => Err(Error::Config(format!("expected axis x|y|z, got '{s}'"))),
    }
}

fn parse_site(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Config(format!("bad site index '{s}'")))
}

/// Accepts plain numbers and multiples of pi: `0.5`, `pi`, `pi/2`, `2pi/3`, `-pi`.
pub fn parse_wavenumber(s: &str) -> Result<f64> {
    let bad = || Error::Config(format!("bad wavenumber '{s}'"));
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a, b.trim().parse::<f64>().map_err(|_| bad())?),
        None => (t, 1.0),
    };
    let coef = num.trim().strip_suffix("pi").ok_or_else(bad)?.trim_end_matches('*');
    let coef = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(coef * std::f64::consts::PI / den)
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("unrecognized observable '{s}'"));
        match s {
            "psr" => return Ok(Observable::Psr),
            "stot" => return Ok(Observable::TotalMagnetization),
            "jsum" => return Ok(Observable::SpinCurrentSum),
            "jesum" => return Ok(Observable::EnergyCurrentSum),
            _ => {}
        }
        let (head, rest) = s.split_once(':').ok_or_else(bad)?;
        match head {
            "sx" | "sy" | "sz" => Ok(Observable::Sigma { axis: parse_xyz(&head[1..])?, site: parse_site(rest)? }),
            "jz" => {
                let (n, m) = rest.split_once('-').ok_or_else(bad)?;
                Ok(Observable::SpinCurrent { n: parse_site(n)?, m: parse_site(m)? })
            }
            "je" => Ok(Observable::EnergyCurrent { n: parse_site(rest)? }),
            "jy" => Ok(Observable::Jy { n: parse_site(rest)? }),
            "corr" => {
                let factors = rest
                    .split(',')
                    .map(|f| {
                        let f = f.trim();
                        let axis = f.get(..1).ok_or_else(bad)?.parse::<Axis>()?;
                        Ok(SiteAxis::new(parse_site(&f[1..])?, axis))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Observable::Correlation(factors))
            }
            "sf" => {
                let (ab, k) = rest.split_once(':').ok_or_else(bad)?;
                let k_text = k.strip_prefix("k=").ok_or_else(bad)?.to_string();
                let mut chars = ab.chars().map(|c| parse_xyz(&c.to_string()));
                let axes = match (chars.next(), chars.next(), chars.next()) {
                    (Some(a), Some(b), None) => (a?, b?),
                    _ => return Err(bad()),
                };
                Ok(Observable::StructureFactor { axes, k: parse_wavenumber(&k_text)?, k_text })
            }
            "grad" => Ok(Observable::Gradient { axis: parse_xyz(rest)? }),
            "tgrad" => Ok(Observable::TargetGradient { axis: parse_xyz(rest)? }),
            "target" => {
                let (site, axis) = rest.split_once(':').ok_or_else(bad)?;
                Ok(Observable::Target { site: parse_site(site)?, axis: parse_xyz(axis)? })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Sigma { axis, site } => write!(f, "s{axis}:{site}"),
            Observable::SpinCurrent { n, m } => write!(f, "jz:{n}-{m}"),
            Observable::EnergyCurrent { n } => write!(f, "je:{n}"),
            Observable::Correlation(fs) => {
                let parts: Vec<String> = fs.iter().map(|sa| format!("{}{}", sa.axis, sa.site)).collect();
                write!(f, "corr:{}", parts.join(","))
            }
            Observable::StructureFactor { axes, k_text, .. } => write!(f, "sf:{}{}:k={k_text}", axes.0, axes.1),
            Observable::SpinCurrentSum => write!(f, "jsum"),
            Observable::EnergyCurrentSum => write!(f, "jesum"),
            Observable::Psr => write!(f, "psr"),
            Observable::TotalMagnetization => write!(f, "stot"),
            Observable::Jy { n } => write!(f, "jy:{n}"),
            Observable::Gradient { axis } => write!(f, "grad:{axis}"),
            Observable::Target { site, axis } => write!(f, "target:{site}:{axis}"),
            Observable::TargetGradient { axis } => write!(f, "tgrad:{axis}"),
        }
    }
}

fn require_delta(model: &Model) -> Result<f64> {
    model
        .delta
        .ok_or_else(|| Error::Config("energy current needs an XXZ model with a known delta".into()))
}

fn targeted(model: &Model, site: usize, axis: Axis) -> Result<f64> {
    let p = model
        .targeted_polarization(site)
        .ok_or_else(|| Error::Config(format!("site {site} has no unique targeted polarization")))?;
    Ok(p[axis_index(axis)])
}

fn axis_index(axis: Axis) -> usize {
    match axis {
        Axis::X => 0,
        Axis::Y => 1,
        _ => 2,
    }
}

impl Observable {
    /// Column headers; structure factors emit real and imaginary parts.
    pub fn columns(&self) -> Vec<String> {
        match self {
            Observable::StructureFactor { .. } => vec![format!("{self}.re"), format!("{self}.im")],
            _ => vec![self.to_string()],
        }
    }

    pub fn validate(&self, model: &Model) -> Result<()> {
        let n = model.n_sites;
        match self {
            Observable::Sigma { site, .. } | Observable::Target { site, .. } => check_site(*site, n),
            Observable::SpinCurrent { n: a, m } => {
                check_site(*a, n)?;
                check_site(*m, n)?;
                if a == m {
                    return Err(Error::DuplicateSite(*a));
                }
                Ok(())
            }
            Observable::EnergyCurrent { n: site } => {
                require_delta(model)?;
                energy_current_operator(*site, 0.0, n).map(|_| ())
            }
            Observable::Correlation(fs) => pauli_product(fs, n).map(|_| ()),
            Observable::SpinCurrentSum if n < 2 => Err(Error::Config("jsum needs at least two sites".into())),
            Observable::EnergyCurrentSum if n < 3 => Err(Error::Config("jesum needs at least three sites".into())),
            Observable::EnergyCurrentSum => require_delta(model).map(|_| ()),
            Observable::Jy { n: site } => {
                check_site(*site, n)?;
                check_site(site + 1, n)
            }
            Observable::Gradient { .. } | Observable::TargetGradient { .. } if n < 2 => {
                Err(Error::Config(format!("{self} needs at least two sites")))
            }
            _ => Ok(()),
        }
    }

    /// Hermitian operator whose expectation this column reports, when there is one.
    pub fn operator(&self, model: &Model) -> Result<Option<Operator>> {
        let n = model.n_sites;
        let op = match self {
            Observable::Sigma { axis, site } => site_op(*axis, *site, n)?,
            Observable::SpinCurrent { n: a, m } => spin_current_operator(*a, *m, n)?,
            Observable::EnergyCurrent { n: site } => energy_current_operator(*site, require_delta(model)?, n)?,
            Observable::Correlation(fs) => pauli_product(fs, n)?,
            Observable::SpinCurrentSum => total_spin_current_operator(n)?,
            Observable::EnergyCurrentSum => total_energy_current_operator(require_delta(model)?, n)?,
            Observable::TotalMagnetization => total_sz(n),
            Observable::Jy { n: site } => {
                let zy = pauli_product(&[SiteAxis::new(*site, Axis::Z), SiteAxis::new(site + 1, Axis::Y)], n)?;
                let yz = pauli_product(&[SiteAxis::new(*site, Axis::Y), SiteAxis::new(site + 1, Axis::Z)], n)?;
                (zy - yz) * 2.0
            }
            Observable::Gradient { axis } => site_op(*axis, n, n)? - site_op(*axis, 1, n)?,
            _ => return Ok(None),
        };
        Ok(Some(op))
    }

    pub fn evaluate(&self, model: &Model, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if let Some(op) = self.operator(model)? {
            return Ok(vec![real_expectation(rho, &op)?]);
        }
        match self {
            Observable::StructureFactor { axes, k, .. } => {
                let s = structure_factor(rho, *axes, *k)?;
                Ok(vec![s.re, s.im])
            }
            Observable::Psr => Ok(vec![psr_audit(rho, ZERO_TOL_ABS).max_violation]),
            Observable::Target { site, axis } => Ok(vec![targeted(model, *site, *axis)?]),
            Observable::TargetGradient { axis } => {
                Ok(vec![targeted(model, model.n_sites, *axis)? - targeted(model, 1, *axis)?])
            }
            _ => unreachable!("operator-backed observables handled above"),
        }
    }
}

pub fn parse_observables(selections: &[String]) -> Result<Vec<Observable>> {
    selections.iter().map(|s| s.parse()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_general_hamiltonian, build_xxz_chain, preset_setup, CouplingGraph, Edge, LindbladSpec, ModelMeta};
    use crate::solver::{solve_ness_nullspace, SolveOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
        let a = Operator::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        DensityMatrix::normalized(&a * &a.adjoint()).unwrap()
    }

    fn ness(model: &Model) -> DensityMatrix {
        solve_ness_nullspace(model, &SolveOptions::default()).unwrap().rho
    }

    #[test]
    fn current_operators_hermitian() {
        let ops = CurrentOperators::new(4, 1.3).unwrap();
        assert_eq!(ops.spin.len(), 3);
        assert_eq!(ops.energy.len(), 2);
        for j in &ops.spin {
            assert!(j.is_hermitian(1e-14));
            assert!(j.trace().norm() < 1e-14);
        }
        for j in &ops.energy {
            assert!(j.is_hermitian(1e-14));
        }
        assert!(energy_current_operator(1, 1.0, 4).is_err());
        assert!(energy_current_operator(4, 1.0, 4).is_err());
    }

    #[test]
    fn product_states_carry_no_current() {
        let up = DensityMatrix::all_up(4);
        let prof = magnetization_profile(&up);
        assert!(prof.iter().all(|p| p == &[0.0, 0.0, 1.0]));
        assert_eq!(total_magnetization(&up), 4.0);
        assert_eq!(spin_current(&up, 1, 2).unwrap(), 0.0);
        assert_eq!(energy_current(&up, 2, 1.0).unwrap(), 0.0);
        let mixed = DensityMatrix::maximally_mixed(3);
        assert_eq!(total_magnetization(&mixed), 0.0);
        assert_eq!(structure_factor(&mixed, (Axis::X, Axis::Z), 0.7).unwrap(), ZERO);
        let basis = DensityMatrix::basis_state(3, 0b101);
        assert_eq!(spin_current(&basis, 2, 3).unwrap(), 0.0);
    }

    #[test]
    fn spin_continuity_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 4;
        let h = build_xxz_chain(n, 0.7).unwrap();
        for _ in 0..10 {
            let rho = random_state(n, &mut rng);
            for site in 2..n {
                let sz = site_op(Axis::Z, site, n).unwrap();
                let lhs = (expectation(&rho, &h.commutator(&sz)).unwrap() * C64::new(0.0, 1.0)).re;
                let rhs = spin_current(&rho, site - 1, site).unwrap() - spin_current(&rho, site, site + 1).unwrap();
                assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn energy_continuity_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (n, delta) = (5, 1.4);
        let h = build_xxz_chain(n, delta).unwrap();
        for _ in 0..5 {
            let rho = random_state(n, &mut rng);
            for bond in 2..n - 1 {
                let hb = bond_energy_operator(bond, delta, n).unwrap();
                let lhs = (expectation(&rho, &h.commutator(&hb)).unwrap() * C64::new(0.0, 1.0)).re;
                let rhs = energy_current(&rho, bond, delta).unwrap() - energy_current(&rho, bond + 1, delta).unwrap();
                assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn zgrad_ness_sector_and_currents() {
        let m = preset_setup("zgrad", &params(&[("N", 4.0), ("delta", 1.5), ("Gamma", 1.0), ("mu", 0.8)])).unwrap();
        let rho = ness(&m);
        assert!(total_magnetization(&rho).abs() < 1e-8);
        let ops = CurrentOperators::new(4, 1.5).unwrap();
        let j = ops.spin_values(&rho).unwrap();
        assert!(j[0].abs() > 1e-6);
        assert!(j.iter().all(|x| (x - j[0]).abs() < 1e-9));
        assert!(ops.energy_values(&rho).unwrap().iter().all(|e| e.abs() < 1e-8));
    }

    #[test]
    fn psr_on_parity_symmetric_ness() {
        let mut g = CouplingGraph::chain(3, 1.0, 0.7, 0.6);
        g.edges.push(Edge { k: 1, m: 3, jx: 0.4, jy: -0.3, jz: 0.2 });
        g.fields = vec![0.3, -0.2, 0.5];
        let h = build_general_hamiltonian(&g).unwrap();
        let specs = [
            LindbladSpec::TargetZ { site: 1, alpha: 1.0, beta: 0.4 },
            LindbladSpec::Dephasing { site: 2, gamma: 0.3 },
            LindbladSpec::TargetZ { site: 3, alpha: 0.2, beta: 0.9 },
        ];
        let m = Model::from_specs(h, &specs, None, ModelMeta::default()).unwrap();
        let rho = ness(&m);
        let rep = psr_audit(&rho, 1e-9);
        assert!(rep.passes(), "{rep:?}");
        assert!(rep.half_zero_rows());
        assert_eq!(rep.zero_histogram(), BTreeMap::from([(4, 8)]));
        // the four forbidden entries of the first row
        for c in [0b001, 0b100, 0b010, 0b111] {
            assert!(rho.op()[(0, c)].norm() < 1e-12);
        }
        for axes in [(Axis::X, Axis::Z), (Axis::Y, Axis::Z), (Axis::Z, Axis::X), (Axis::Z, Axis::Y)] {
            assert!(structure_factor(&rho, axes, 0.5).unwrap().norm() < 1e-10);
        }
        let corr = correlation(&rho, &[SiteAxis::new(1, Axis::X), SiteAxis::new(2, Axis::X), SiteAxis::new(3, Axis::Y)]);
        assert!(corr.unwrap().abs() < 1e-10);
    }

    #[test]
    fn psr_broken_by_transverse_drive() {
        let m = preset_setup("fig1_nu", &params(&[("N", 3.0), ("J_Z", -1.3), ("nu", 0.5)])).unwrap();
        let rep = psr_audit(&ness(&m), 1e-9);
        assert!(rep.max_violation > 1e-9);
        assert!(!rep.violating_indices.is_empty());
        let (r, c) = &rep.violating_indices[0];
        assert_eq!(r.iter().chain(c).product::<i32>(), -1);
    }

    #[test]
    fn structure_factor_at_zero_is_pair_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_state(3, &mut rng);
        let mut sum = 0.0;
        for n in 1..=3 {
            for m in n + 1..=3 {
                sum += correlation(&rho, &[SiteAxis::new(n, Axis::X), SiteAxis::new(m, Axis::Y)]).unwrap();
            }
        }
        let s = structure_factor(&rho, (Axis::X, Axis::Y), 0.0).unwrap();
        assert!((s.re - sum).abs() < 1e-14);
    }

    #[test]
    fn selection_round_trip() {
        for s in ["sx:3", "jz:2-3", "je:3", "corr:x1,z4", "sf:xz:k=0.5", "psr", "stot", "jsum", "jesum", "jy:2", "grad:z", "target:1:x", "tgrad:y"] {
            let o: Observable = s.parse().unwrap();
            assert_eq!(o.to_string(), s);
        }
        let sf: Observable = "sf:yz:k=pi/2".parse().unwrap();
        assert_eq!(sf.columns(), vec!["sf:yz:k=pi/2.re", "sf:yz:k=pi/2.im"]);
        assert!(matches!(sf, Observable::StructureFactor { k, .. } if (k - std::f64::consts::FRAC_PI_2).abs() < 1e-15));
        for bad in ["sq:1", "jz:2", "sf:xq:k=1", "corr:q1", "bogus"] {
            assert!(bad.parse::<Observable>().is_err(), "{bad}");
        }
        assert!((parse_wavenumber("2pi/3").unwrap() - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-15);
        assert!((parse_wavenumber("-pi").unwrap() + std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn evaluation_matches_direct_functions() {
        let m = preset_setup("zgrad", &params(&[("N", 3.0), ("delta", 1.0), ("Gamma", 1.0), ("mu", 0.5)])).unwrap();
        let rho = ness(&m);
        let eval = |s: &str| s.parse::<Observable>().unwrap().evaluate(&m, &rho).unwrap();
        assert_eq!(eval("jz:1-2"), vec![spin_current(&rho, 1, 2).unwrap()]);
        assert_eq!(eval("je:2"), vec![energy_current(&rho, 2, 1.0).unwrap()]);
        assert!((eval("target:1:z")[0] - 0.5).abs() < 1e-12);
        assert!((eval("tgrad:z")[0] + 1.0).abs() < 1e-12);
        let p = magnetization_profile(&rho);
        assert!((eval("grad:z")[0] - (p[2][2] - p[0][2])).abs() < 1e-14);
        assert!("je:1".parse::<Observable>().unwrap().validate(&m).is_err());
        assert!("sx:4".parse::<Observable>().unwrap().validate(&m).is_err());
    }
}
