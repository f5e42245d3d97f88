//! Noise design: which dissipators, with which weights, make a Hamiltonian's
//! rate matrix classical, and the critical prefactor of a fixed template.

use std::sync::Mutex;

use nalgebra::DMatrix;

use crate::algebra::assemble::{link_parts, site_parts};
use crate::algebra::ops::Term;
use crate::algebra::rates::{local_dim, LocalRateMatrix};
use crate::algebra::table::table_rates;
use crate::error::{Error, Result};
use crate::gauge::{canonical_gauge_pair, canonical_gauge_single, off_diagonal_positions, GaugeBasis, GaugeOptimizer};
use crate::lp::{LpError, LpProblem, Simplex};
use crate::model::ModelSpec;
use crate::state::{Axis, SiteState, LOCAL_STATES};

/// Objective values at or below this count as classical.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Which sites of a pair change sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignFlip {
    Second,
    First,
    Both,
}

impl SignFlip {
    pub const ALL: [SignFlip; 3] = [SignFlip::Second, SignFlip::First, SignFlip::Both];

    fn flips(self) -> (bool, bool) {
        match self {
            SignFlip::Second => (false, true),
            SignFlip::First => (true, false),
            SignFlip::Both => (true, true),
        }
    }
}

/// One admissible positive off-diagonal pattern for a pair of sites.
#[derive(Debug, Clone, PartialEq)]
pub struct LForm {
    pub flip: SignFlip,
    pub axes: (Axis, Axis),
    /// `(row, col)` positions in the 36×36 pair matrix.
    pub positions: Vec<(usize, usize)>,
    /// A pair dissipator whose rate matrix contains exactly these positions
    /// among those with the given axes.
    pub witness: Term,
}

impl LForm {
    /// The pattern as a rate matrix with unit rates and matching diagonal.
    pub fn matrix(&self) -> LocalRateMatrix {
        let mut m = DMatrix::zeros(36, 36);
        for &(r, c) in &self.positions {
            m[(r, c)] = 1.0;
        }
        LocalRateMatrix::new(2, m)
    }
}

/// The 27 forms: 3 sign-flip patterns times 9 axis assignments.
#[derive(Debug, Clone)]
pub struct LSet {
    pub forms: Vec<LForm>,
}

fn pair_index(a: SiteState, b: SiteState) -> usize {
    a.index() * LOCAL_STATES + b.index()
}

fn other_axis(a: Axis) -> Axis {
    Axis::from_index((a.index() + 1) % 3)
}

pub fn build_l_set() -> LSet {
    let mut forms = Vec::with_capacity(27);
    for flip in SignFlip::ALL {
        for alpha in Axis::ALL {
            for beta in Axis::ALL {
                let (f1, f2) = flip.flips();
                let mut positions = Vec::with_capacity(4);
                for c1 in [SiteState::new(alpha, crate::state::Sign::Plus), SiteState::new(alpha, crate::state::Sign::Minus)] {
                    for c2 in [SiteState::new(beta, crate::state::Sign::Plus), SiteState::new(beta, crate::state::Sign::Minus)] {
                        let d1 = if f1 { c1.flipped() } else { c1 };
                        let d2 = if f2 { c2.flipped() } else { c2 };
                        positions.push((pair_index(c1, c2), pair_index(d1, d2)));
                    }
                }
                // σ_a flips sites whose axis differs from a.
                let a = if f1 { other_axis(alpha) } else { alpha };
                let b = if f2 { other_axis(beta) } else { beta };
                forms.push(LForm { flip, axes: (alpha, beta), positions, witness: Term::PairJump(a, b) });
            }
        }
    }
    LSet { forms }
}

/// The jump families the designer may use, in the fixed order
/// `σ_x, σ_y, σ_z, σ₊, σ₋` (local) then `σ_aσ_b` (pairs).
pub fn all_families() -> Vec<Term> {
    Term::all().into_iter().filter(|t| t.is_dissipator()).collect()
}

/// Rate matrix of a family on a link; local families act on both endpoints
/// with the given shares.
pub fn family_matrix(family: Term, shares: [f64; 2]) -> Result<LocalRateMatrix> {
    match family {
        Term::Jump(_) => {
            let local = table_rates(family, 1.0)?;
            Ok(local.scale(shares[0]).embed_in_pair(0).add(&local.scale(shares[1]).embed_in_pair(1)))
        }
        Term::PairJump(..) => table_rates(family, 1.0),
        _ => Err(Error::UnknownTerm(format!("{family} is not a dissipator"))),
    }
}

/// Canonically gauged Hamiltonian of one link: each field and coupling term
/// receives its canonical gauge scaled by the magnitude of its coefficient.
pub fn canonical_link_hamiltonian(spec: &ModelSpec, link: usize) -> Result<LocalRateMatrix> {
    let (i, j) = spec.lattice.links()[link];
    let (h, _) = link_parts(spec, link)?;
    let mut g = h.m.clone();
    let eye = DMatrix::<f64>::identity(LOCAL_STATES, LOCAL_STATES);
    for (slot, site) in [(0usize, i), (1usize, j)] {
        let share = 1.0 / spec.lattice.degree(site) as f64;
        for a in Axis::ALL {
            let c = spec.local_fields[site][a.index()].abs() * share;
            if c != 0.0 {
                let l = canonical_gauge_single(a) * c;
                g += if slot == 0 { l.kronecker(&eye) } else { eye.kronecker(&l) };
            }
        }
    }
    for a in Axis::ALL {
        for b in Axis::ALL {
            let c = spec.pair_couplings[link][a.index()][b.index()].abs();
            if c != 0.0 {
                g += canonical_gauge_pair(a, b) * c;
            }
        }
    }
    Ok(LocalRateMatrix::new(2, g))
}

/// Result of [`design_noise`].
#[derive(Debug, Clone)]
pub struct NoiseDesign {
    pub families: Vec<Term>,
    /// L¹-minimal weights with the gauge optimized jointly.
    pub x: Vec<f64>,
    pub objective: f64,
    /// `27 × m`: the smallest rate of each family on each form.
    pub q: DMatrix<f64>,
    /// Largest negative magnitude of the canonically gauged Hamiltonian on
    /// each form.
    pub y: Vec<f64>,
    /// L¹-minimal solution of `Q·x ≥ y`, when the canonical gauge confines
    /// every negative entry to the forms.
    pub canonical_x: Option<Vec<f64>>,
    /// Negative mass left after a fresh gauge optimization with weights `x`.
    pub residual: f64,
}

/// Phase-one-complete design programs keyed by their family matrices. Only
/// the cost depends on the Hamiltonian, so later designs warm-start from the
/// last optimal basis.
static DESIGN_CACHE: Mutex<Vec<(Vec<f64>, Simplex)>> = Mutex::new(Vec::new());
const DESIGN_CACHE_SIZE: usize = 8;

/// Joint gauge and noise LP, in dual form:
/// `min mᵀy` subject to `Gᵀy = 0`, `Fy + s = 1`, `y, s ≥ 0`.
/// The multipliers of the `F` rows give `x = −π`.
fn design_program(k: usize, fams: &[LocalRateMatrix]) -> Result<Simplex> {
    let basis = GaugeBasis::cached(k)?;
    let positions = off_diagonal_positions(local_dim(k));
    let gd = basis.dim();
    let nf = fams.len();
    let mut lp = LpProblem::new(gd + nf, positions.len() + nf);
    for j in 0..gd {
        let el = basis.element(j);
        for (e, &(r, c)) in positions.iter().enumerate() {
            if el[(r, c)] != 0.0 {
                lp.set(j, e, el[(r, c)]);
            }
        }
    }
    for (f, fam) in fams.iter().enumerate() {
        for (e, &(r, c)) in positions.iter().enumerate() {
            if fam.m[(r, c)] != 0.0 {
                lp.set(gd + f, e, fam.m[(r, c)]);
            }
        }
        lp.set(gd + f, positions.len() + f, 1.0);
        lp.b[gd + f] = 1.0;
    }
    Ok(Simplex::new(lp)?)
}

fn joint_design(h: &LocalRateMatrix, fams: &[LocalRateMatrix]) -> Result<(Vec<f64>, f64)> {
    let key: Vec<f64> = fams.iter().flat_map(|f| f.m.iter().copied()).collect();
    let cached = {
        let mut cache = DESIGN_CACHE.lock().unwrap_or_else(|e| e.into_inner());
        cache.iter().position(|(k, _)| *k == key).map(|i| cache.swap_remove(i).1)
    };
    let mut simplex = match cached {
        Some(s) => s,
        None => design_program(h.k, fams)?,
    };
    let positions = off_diagonal_positions(local_dim(h.k));
    let mut cost: Vec<f64> = positions.iter().map(|&(r, c)| h.m[(r, c)]).collect();
    cost.extend(std::iter::repeat_n(0.0, fams.len()));
    let result = simplex.reoptimize(&cost);
    let gd = GaugeBasis::cached(h.k)?.dim();
    let sol = match result {
        Ok(s) => s,
        Err(LpError::Unbounded) => return Err(Error::InfeasibleNoise),
        Err(e) => return Err(e.into()),
    };
    {
        let mut cache = DESIGN_CACHE.lock().unwrap_or_else(|e| e.into_inner());
        if cache.len() >= DESIGN_CACHE_SIZE {
            cache.remove(0);
        }
        cache.push((key, simplex));
    }
    let x: Vec<f64> = sol.duals[gd..].iter().map(|p| (-p).max(0.0)).collect();
    Ok((x, -sol.objective))
}

fn canonical_design(q: &DMatrix<f64>, y: &[f64]) -> Result<Option<Vec<f64>>> {
    let (rows, m) = q.shape();
    let mut lp = LpProblem::new(rows, m + rows);
    for r in 0..rows {
        for f in 0..m {
            lp.set(r, f, q[(r, f)]);
        }
        lp.set(r, m + r, -1.0);
        lp.b[r] = y[r];
    }
    for f in 0..m {
        lp.c[f] = 1.0;
    }
    match Simplex::new(lp).and_then(|mut s| s.optimize()) {
        Ok(sol) => Ok(Some(sol.x[..m].to_vec())),
        Err(LpError::Infeasible(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Designs L¹-minimal noise over `families` making link `link` of `spec`
/// classical. Only the Hamiltonian of `spec` is used.
pub fn design_noise(spec: &ModelSpec, link: usize, families: &[Term]) -> Result<NoiseDesign> {
    spec.validate()?;
    let (i, j) = *spec
        .lattice
        .links()
        .get(link)
        .ok_or_else(|| Error::InvalidModel(format!("no link {link}")))?;
    let shares = [1.0 / spec.lattice.degree(i) as f64, 1.0 / spec.lattice.degree(j) as f64];
    let (h, _) = link_parts(spec, link)?;
    let fams = families
        .iter()
        .map(|&f| family_matrix(f, shares))
        .collect::<Result<Vec<_>>>()?;
    let (x, _) = joint_design(&h, &fams)?;
    let objective = x.iter().sum();

    let lset = build_l_set();
    let q = DMatrix::from_fn(lset.forms.len(), fams.len(), |p, f| {
        lset.forms[p]
            .positions
            .iter()
            .map(|&(r, c)| fams[f].m[(r, c)])
            .fold(f64::INFINITY, f64::min)
    });
    let canon = canonical_link_hamiltonian(spec, link)?;
    let y: Vec<f64> = lset
        .forms
        .iter()
        .map(|form| form.positions.iter().map(|&(r, c)| canon.minus[(r, c)]).fold(0.0, f64::max))
        .collect();
    let confined = (0..36).all(|c| {
        (0..36).all(|r| {
            canon.minus[(r, c)] == 0.0 || {
                let (a, b) = (SiteState::from_index(r / 6), SiteState::from_index(c / 6));
                let (a2, b2) = (SiteState::from_index(r % 6), SiteState::from_index(c % 6));
                a.axis == b.axis && a2.axis == b2.axis
            }
        })
    });
    let canonical_x = if confined { canonical_design(&q, &y)? } else { None };

    let mut total = h.clone();
    for (w, f) in x.iter().zip(&fams) {
        total = total.add(&f.scale(*w));
    }
    let residual = GaugeOptimizer::new(2)?.objective(&total)?;
    Ok(NoiseDesign { families: families.to_vec(), x, objective, q, y, canonical_x, residual })
}

/// Single-site variant for a site without links, over local families only.
pub fn design_noise_single(fields: [f64; 3], families: &[Term]) -> Result<NoiseDesign> {
    let mut spec = ModelSpec::single_qubit(0.0, 0.0);
    spec.local_fields[0] = fields;
    spec.local_noise[0] = [0.0; 5];
    let (h, _) = site_parts(&spec, 0)?;
    let fams = families
        .iter()
        .map(|&f| match f {
            Term::Jump(_) => table_rates(f, 1.0),
            _ => Err(Error::UnknownTerm(format!("{f} needs two sites"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let (x, _) = joint_design(&h, &fams)?;
    let mut total = h.clone();
    for (w, f) in x.iter().zip(&fams) {
        total = total.add(&f.scale(*w));
    }
    let residual = GaugeOptimizer::new(1)?.objective(&total)?;
    Ok(NoiseDesign {
        families: families.to_vec(),
        objective: x.iter().sum(),
        x,
        q: DMatrix::zeros(0, families.len()),
        y: Vec::new(),
        canonical_x: None,
        residual,
    })
}

/// Outcome of [`critical_gamma`].
#[derive(Debug, Clone)]
pub struct CriticalGamma {
    pub gamma_c: f64,
    /// Every `(γ, optimal negative mass)` evaluated, across links.
    pub probes: Vec<(f64, f64)>,
    /// Final bisection interval of the limiting link.
    pub bracket: (f64, f64),
}

/// Smallest `γ` classicalizing `M_H + γ·M_T` for one pair of matrices.
pub fn critical_gamma_pair(
    h: &LocalRateMatrix,
    t: &LocalRateMatrix,
    scale: f64,
    tol: f64,
) -> Result<CriticalGamma> {
    let mut opt = GaugeOptimizer::new(h.k)?;
    let mut probes = Vec::new();
    let mut eval = |g: f64, probes: &mut Vec<(f64, f64)>| -> Result<bool> {
        let obj = opt.objective(&h.add(&t.scale(g)))?;
        probes.push((g, obj));
        Ok(obj <= FEASIBILITY_TOL)
    };
    if eval(0.0, &mut probes)? {
        return Ok(CriticalGamma { gamma_c: 0.0, probes, bracket: (0.0, 0.0) });
    }
    let cap = 65536.0 * scale.max(1.0);
    let mut hi = 1.0;
    while !eval(hi, &mut probes)? {
        if hi >= cap {
            return Err(Error::NotBracketed { gamma_max: hi });
        }
        hi *= 2.0;
    }
    let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid, &mut probes)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Feasibility must be monotone: nothing infeasible above a feasible probe.
    let min_feasible = probes
        .iter()
        .filter(|p| p.1 <= FEASIBILITY_TOL)
        .map(|p| p.0)
        .fold(f64::INFINITY, f64::min);
    if let Some(&(g, _)) = probes.iter().find(|p| p.0 > min_feasible && p.1 > FEASIBILITY_TOL) {
        return Err(Error::NonMonotone { gamma: g });
    }
    Ok(CriticalGamma { gamma_c: hi, probes, bracket: (lo, hi) })
}

/// `γ_c` of a model whose noise tables hold the template at unit prefactor:
/// the largest critical value over its distinct links (or isolated sites).
pub fn critical_gamma(spec: &ModelSpec, tol: f64) -> Result<CriticalGamma> {
    let mut unit = spec.clone();
    unit.gamma = 1.0;
    unit.validate()?;
    let total_noise: f64 = unit.local_noise.iter().flatten().sum::<f64>()
        + unit.pair_noise.iter().flatten().flatten().sum::<f64>();
    if total_noise == 0.0 {
        return Err(Error::InvalidModel("noise template is empty".into()));
    }
    let mut pairs: Vec<(LocalRateMatrix, LocalRateMatrix)> = Vec::new();
    for l in 0..unit.lattice.links().len() {
        let p = link_parts(&unit, l)?;
        if !pairs.iter().any(|q| q.0.m == p.0.m && q.1.m == p.1.m) {
            pairs.push(p);
        }
    }
    for s in 0..unit.num_sites() {
        if unit.lattice.degree(s) == 0 {
            pairs.push(site_parts(&unit, s)?);
        }
    }
    let scale = spec.hamiltonian_scale();
    let mut best: Option<CriticalGamma> = None;
    let mut probes = Vec::new();
    for (h, t) in &pairs {
        let r = critical_gamma_pair(h, t, scale, tol)?;
        probes.extend_from_slice(&r.probes);
        if best.as_ref().is_none_or(|b| r.gamma_c > b.gamma_c) {
            best = Some(r);
        }
    }
    let best = best.ok_or_else(|| Error::InvalidModel("model has no sites".into()))?;
    Ok(CriticalGamma { gamma_c: best.gamma_c, probes, bracket: best.bracket })
}

/// Uniform depolarizing template `Σ_a 𝓛^a + Σ_ab 𝓛^{ab}` at unit weight.
pub fn depolarizing_template(spec: &ModelSpec) -> ModelSpec {
    let mut m = spec.clone();
    for w in &mut m.local_noise {
        *w = [1.0, 1.0, 1.0, 0.0, 0.0];
    }
    for w in &mut m.pair_noise {
        *w = [[1.0; 3]; 3];
    }
    m.gamma = 1.0;
    m
}
