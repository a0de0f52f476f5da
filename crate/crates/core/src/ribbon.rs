//! The full edge operator -Δ + V + δ η(δ l2·x) W on a ribbon supercell:
//! periodic along the edge direction w1 with Bloch phase k_par, and L cells
//! long along w2 with a periodized double wall (wall up at cell 0, wall down
//! at cell L/2).
//!
//! The plane-wave basis attaches the L fractional transverse harmonics to
//! each bulk mode of a rotation-closed hexagonal skeleton. Keeping the
//! skeleton hexagonal matters: the zero-offset block of the ribbon operator
//! at δ = 0 is then exactly the bulk Γ operator on a rotation-closed window,
//! so the fourfold crossing stays degenerate to machine precision instead of
//! being split by window truncation, and the in-gap physics at order δ² is
//! not polluted by a spurious basis splitting. Modes far above the skeleton's
//! kinetic ceiling are pruned.

use crate::bloch::{self, BlochError, DegenerateQuartet, PlaneWaveBasis};
use crate::dirac::{DomainWall, ZeroMode};
use crate::lattice::{LatticeBasis, RationalEdge};
use crate::linalg::{self, LinalgError};
use crate::potential::FourierPotential;
use crate::vec2::Vec2;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RibbonError {
    #[error("supercell must have an even number of cells, got {0}")]
    OddSupercell(usize),
    #[error("wall not developed: delta * L * 2π = {0:.2} < 8; enlarge the supercell")]
    WallOverlap(f64),
    #[error("delta must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("expected exactly two wall-localized states in the gap, found {0}")]
    WrongEdgeStateCount(usize),
    #[error(transparent)]
    Bloch(#[from] BlochError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Ribbon geometry: supercell length, wall positions (in cells along w2),
/// and the Bloch phase along the edge.
#[derive(Debug, Clone)]
pub struct RibbonDomain {
    pub edge: RationalEdge,
    pub n_cells: usize,
    pub wall_centers: (f64, f64),
    pub k_par: f64,
}

impl RibbonDomain {
    pub fn new(edge: RationalEdge, n_cells: usize, k_par: f64) -> Result<Self, RibbonError> {
        if n_cells % 2 != 0 {
            return Err(RibbonError::OddSupercell(n_cells));
        }
        Ok(RibbonDomain {
            edge,
            n_cells,
            wall_centers: (0.0, n_cells as f64 / 2.0),
            k_par,
        })
    }
}

/// Transverse modulation profile on the supercell.
#[derive(Debug, Clone)]
pub enum WallProfile {
    /// Periodized double wall built from a single-wall shape by image sums.
    Periodized(DomainWall),
    /// Constant η (no wall): the uniformly perturbed bulk, used as a control.
    Uniform(f64),
}

impl WallProfile {
    /// Sample η over the supercell coordinate s ∈ [0, L) at `n` points;
    /// `delta` sets the slow-variable scale ζ = 2π δ s.
    pub fn sample(&self, delta: f64, l_cells: usize, n: usize) -> Vec<f64> {
        let z = 2.0 * PI * delta * l_cells as f64;
        (0..n)
            .map(|i| {
                let s = l_cells as f64 * i as f64 / n as f64;
                self.eval_s(delta, l_cells, s);
                let zeta = 2.0 * PI * delta * s;
                match self {
                    WallProfile::Uniform(v) => *v,
                    WallProfile::Periodized(wall) => periodized_eta(wall, zeta, z),
                }
            })
            .collect()
    }

    /// η at supercell coordinate s (cells along w2).
    pub fn eval_s(&self, delta: f64, l_cells: usize, s: f64) -> f64 {
        match self {
            WallProfile::Uniform(v) => *v,
            WallProfile::Periodized(wall) => {
                let z = 2.0 * PI * delta * l_cells as f64;
                periodized_eta(wall, 2.0 * PI * delta * s, z)
            }
        }
    }
}

/// Image sum of kink/anti-kink pairs: +wall at ζ = 0 (mod Z), -wall at Z/2.
fn periodized_eta(wall: &DomainWall, zeta: f64, period: f64) -> f64 {
    let mut acc = -1.0;
    for n in -6i64..=6 {
        let zz = zeta - n as f64 * period;
        acc += wall.eval(zz) - wall.eval(zz - 0.5 * period);
    }
    acc
}

/// Plane-wave basis of the ribbon supercell: modes κ + p l1 + (q/L) l2 with
/// (p, round-to-bulk r) running over the hexagonal skeleton and the
/// fractional offset j = q - rL over a full period, pruned by the skeleton's
/// kinetic ceiling (zero-offset modes are always kept).
#[derive(Debug, Clone)]
pub struct RibbonBasis {
    pub skeleton_cutoff: i64,
    pub n_cells: usize,
    pub modes: Vec<(i64, i64)>,
    lookup: HashMap<(i64, i64), usize>,
    pub dim: usize,
}

impl RibbonBasis {
    pub fn new(
        lat: &LatticeBasis,
        edge: &RationalEdge,
        skeleton_cutoff: i64,
        n_cells: usize,
    ) -> Self {
        Self::build(lat, edge, skeleton_cutoff, n_cells, true)
    }

    /// Keep every fractional offset of every skeleton mode (no kinetic
    /// pruning); used to isolate truncation effects.
    pub fn new_unpruned(
        lat: &LatticeBasis,
        edge: &RationalEdge,
        skeleton_cutoff: i64,
        n_cells: usize,
    ) -> Self {
        Self::build(lat, edge, skeleton_cutoff, n_cells, false)
    }

    fn build(
        lat: &LatticeBasis,
        edge: &RationalEdge,
        skeleton_cutoff: i64,
        n_cells: usize,
        prune: bool,
    ) -> Self {
        let l = n_cells as i64;
        let c = skeleton_cutoff;
        // hexagonal skeleton in bulk (m, n) indices, expressed in (p, r)
        let mut skeleton: Vec<(i64, i64)> = Vec::new();
        let mut ecut = 0.0f64;
        let bound = 4 * c + 4;
        for p in -bound..=bound {
            for r in -bound..=bound {
                let (m, n) = edge_to_bulk_index(edge, p, r);
                if crate::potential::in_hex_window(m, n, c) {
                    skeleton.push((p, r));
                    let k = edge.l1 * (p as f64) + edge.l2 * (r as f64);
                    ecut = ecut.max(k.norm_sq());
                }
            }
        }
        let _ = lat;
        let ecut = ecut * (1.0 + 1e-12);
        let mut modes = Vec::with_capacity(skeleton.len() * n_cells);
        for &(p, r) in &skeleton {
            for j in (-(l / 2) + 1)..=(l / 2) {
                let q = r * l + j;
                if j == 0 {
                    modes.push((p, q));
                    continue;
                }
                let k = edge.l1 * (p as f64) + edge.l2 * (q as f64 / l as f64);
                if !prune || k.norm_sq() <= ecut {
                    modes.push((p, q));
                }
            }
        }
        modes.sort();
        let lookup: HashMap<(i64, i64), usize> =
            modes.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let dim = modes.len();
        RibbonBasis {
            skeleton_cutoff,
            n_cells,
            modes,
            lookup,
            dim,
        }
    }

    #[inline]
    pub fn position(&self, p: i64, q: i64) -> Option<usize> {
        self.lookup.get(&(p, q)).copied()
    }

    /// Wave vector of a mode at Bloch parameter k_par along the edge.
    pub fn k_vec(&self, edge: &RationalEdge, k_par: f64, p: i64, q: i64) -> Vec2 {
        let kappa = edge.l1_tilde * (k_par / (2.0 * PI));
        kappa + edge.l1 * (p as f64) + edge.l2 * (q as f64 / self.n_cells as f64)
    }
}

/// Bulk (m, n) index of the mode p l1 + r l2.
pub fn edge_to_bulk_index(edge: &RationalEdge, p: i64, r: i64) -> (i64, i64) {
    // l1 = b2 k1 - a2 k2, l2 = -b1 k1 + a1 k2
    (p * edge.b2 - r * edge.b1, -p * edge.a2 + r * edge.a1)
}

/// Fourier table of the modulated perturbation η_per(δ l2·x) W(x) and the
/// bulk potential V on the supercell index lattice.
struct SupercellTables {
    v_table: HashMap<(i64, i64), Complex64>,
    w_dp_min: i64,
    w_dp_max: i64,
    w_dq_min: i64,
    w_dq_max: i64,
    w_table: Vec<Complex64>,
}

impl SupercellTables {
    fn w_at(&self, dp: i64, dq: i64) -> Complex64 {
        if dp < self.w_dp_min || dp > self.w_dp_max || dq < self.w_dq_min || dq > self.w_dq_max {
            return Complex64::new(0.0, 0.0);
        }
        let stride = (self.w_dq_max - self.w_dq_min + 1) as usize;
        self.w_table[(dp - self.w_dp_min) as usize * stride + (dq - self.w_dq_min) as usize]
    }
}

fn build_tables(
    v: &FourierPotential,
    w: &FourierPotential,
    profile: &WallProfile,
    delta: f64,
    edge: &RationalEdge,
    l_cells: usize,
) -> SupercellTables {
    // bulk potential in (p, r) indices
    let mut v_table = HashMap::new();
    for (m, n, c) in v.iter_coeffs() {
        if c.norm_sqr() > 0.0 {
            let (p, r) = edge.dual_to_edge_index(m, n);
            v_table.insert((p, r), c);
        }
    }
    // wall Fourier coefficients on the supercell period via plain DFT
    let l = l_cells as i64;
    let n_s = (8 * l_cells).max(512);
    let samples = profile.sample(delta, l_cells, n_s);
    let j_max = l / 2 + 8;
    let mut eta_hat = vec![Complex64::new(0.0, 0.0); (2 * j_max + 1) as usize];
    for (jj, slot) in eta_hat.iter_mut().enumerate() {
        let j = jj as i64 - j_max;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &e) in samples.iter().enumerate() {
            let phase = -2.0 * PI * (j as f64) * (i as f64) / n_s as f64;
            acc += Complex64::from_polar(e, phase);
        }
        *slot = acc / n_s as f64;
    }
    let eta_max = eta_hat.iter().map(|c| c.norm()).fold(0.0, f64::max);
    // modulated perturbation: (η W)^(Δp, Δq) = Σ_r Ŵ(Δp, r) η̂(Δq - rL)
    let mut wl: Vec<(i64, i64, Complex64)> = Vec::new();
    let (mut dp_min, mut dp_max) = (0i64, 0i64);
    let (mut r_min, mut r_max) = (0i64, 0i64);
    for (m, n, c) in w.iter_coeffs() {
        if c.norm_sqr() > 0.0 {
            let (p, r) = edge.dual_to_edge_index(m, n);
            dp_min = dp_min.min(p);
            dp_max = dp_max.max(p);
            r_min = r_min.min(r);
            r_max = r_max.max(r);
            wl.push((p, r, c));
        }
    }
    let w_dq_min = r_min * l - j_max;
    let w_dq_max = r_max * l + j_max;
    let stride = (w_dq_max - w_dq_min + 1) as usize;
    let mut w_table = vec![Complex64::new(0.0, 0.0); (dp_max - dp_min + 1) as usize * stride];
    for &(p, r, c) in &wl {
        for (jj, &eh) in eta_hat.iter().enumerate() {
            if eh.norm() < 1e-15 * eta_max {
                continue;
            }
            let j = jj as i64 - j_max;
            let dq = r * l + j;
            let idx = (p - dp_min) as usize * stride + (dq - w_dq_min) as usize;
            w_table[idx] += c * eh;
        }
    }
    SupercellTables {
        v_table,
        w_dp_min: dp_min,
        w_dp_max: dp_max,
        w_dq_min,
        w_dq_max,
        w_table,
    }
}

/// Assemble the ribbon operator into a column-major buffer suitable for the
/// windowed eigensolver. Hermitian by construction (both potentials are
/// stored with exact conjugate symmetry and η is real).
pub fn assemble_ribbon(
    v: &FourierPotential,
    w: &FourierPotential,
    profile: &WallProfile,
    delta: f64,
    dom: &RibbonDomain,
    basis: &RibbonBasis,
) -> Result<Vec<Complex64>, RibbonError> {
    if delta <= 0.0 {
        return Err(RibbonError::NonPositiveDelta(delta));
    }
    if matches!(profile, WallProfile::Periodized(_)) {
        let developed = delta * dom.n_cells as f64 * 2.0 * PI;
        if developed < 8.0 {
            return Err(RibbonError::WallOverlap(developed));
        }
    }
    let tables = build_tables(v, w, profile, delta, &dom.edge, dom.n_cells);
    let n = basis.dim;
    let l = dom.n_cells as i64;
    let mut h = vec![Complex64::new(0.0, 0.0); n * n];
    for (col, &(pj, qj)) in basis.modes.iter().enumerate() {
        for (row, &(pi, qi)) in basis.modes.iter().enumerate() {
            let dp = pi - pj;
            let dq = qi - qj;
            let mut val = Complex64::new(0.0, 0.0);
            if dq.rem_euclid(l) == 0 {
                if let Some(c) = tables.v_table.get(&(dp, dq.div_euclid(l))) {
                    val += *c;
                }
            }
            let wv = tables.w_at(dp, dq);
            if wv.re != 0.0 || wv.im != 0.0 {
                val += wv * delta;
            }
            h[row + col * n] = val;
        }
        let k = basis.k_vec(&dom.edge, dom.k_par, pj, qj);
        h[col + col * n] += Complex64::new(k.norm_sq(), 0.0);
    }
    Ok(h)
}

/// Same operator as a dense ndarray matrix (test-sized problems).
pub fn assemble_ribbon_dense(
    v: &FourierPotential,
    w: &FourierPotential,
    profile: &WallProfile,
    delta: f64,
    dom: &RibbonDomain,
    basis: &RibbonBasis,
) -> Result<Array2<Complex64>, RibbonError> {
    let buf = assemble_ribbon(v, w, profile, delta, dom, basis)?;
    let n = basis.dim;
    let mut out = Array2::zeros((n, n));
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] = buf[i + j * n];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum StateClass {
    Wall,
    AntiWall,
    Bulk,
}

/// Spectrum in a window around E_D with per-state localization data.
#[derive(Debug, Clone)]
pub struct EdgeSpectrum {
    pub energies: Vec<f64>,
    /// coefficient vectors, one column per state
    pub states: Array2<Complex64>,
    pub loc_wall: Vec<f64>,
    pub loc_anti: Vec<f64>,
    pub class: Vec<StateClass>,
}

/// Marginal probability of a state along the supercell coordinate s,
/// sampled at `n_s` points.
pub fn transverse_density(basis: &RibbonBasis, state: &Array1<Complex64>, n_s: usize) -> Vec<f64> {
    // group coefficients by p; ρ(s) = Σ_p |Σ_q c_{p,q} e^{2πi q s / L}|²
    let l = basis.n_cells as f64;
    let mut by_p: HashMap<i64, Vec<(i64, Complex64)>> = HashMap::new();
    for (i, &(p, q)) in basis.modes.iter().enumerate() {
        by_p.entry(p).or_default().push((q, state[i]));
    }
    let mut rho = vec![0.0f64; n_s];
    for (_, terms) in by_p {
        for (is, r) in rho.iter_mut().enumerate() {
            let s = l * is as f64 / n_s as f64;
            let mut f = Complex64::new(0.0, 0.0);
            for &(q, c) in &terms {
                f += c * Complex64::from_polar(1.0, 2.0 * PI * q as f64 * s / l);
            }
            *r += f.norm_sqr();
        }
    }
    let total: f64 = rho.iter().sum();
    if total > 0.0 {
        for r in rho.iter_mut() {
            *r /= total;
        }
    }
    rho
}

fn localization_fraction(rho: &[f64], l_cells: usize, center: f64, half_width: f64) -> f64 {
    let n_s = rho.len();
    let l = l_cells as f64;
    let mut acc = 0.0;
    for (i, &r) in rho.iter().enumerate() {
        let s = l * i as f64 / n_s as f64;
        let mut d = (s - center).abs() % l;
        if d > l / 2.0 {
            d = l - d;
        }
        if d <= half_width {
            acc += r;
        }
    }
    acc
}

/// All eigenpairs in the window, classified by where their transverse mass
/// sits: within ±L/8 cells of the wall, of the anti-wall, or neither.
pub fn solve_edge(
    v: &FourierPotential,
    w: &FourierPotential,
    profile: &WallProfile,
    delta: f64,
    dom: &RibbonDomain,
    basis: &RibbonBasis,
    window: (f64, f64),
) -> Result<EdgeSpectrum, RibbonError> {
    let mut h = assemble_ribbon(v, w, profile, delta, dom, basis)?;
    let (energies, states) = linalg::eigh_range_in_place(&mut h, basis.dim, window.0, window.1)?;
    drop(h);
    let m = energies.len();
    let mut loc_wall = Vec::with_capacity(m);
    let mut loc_anti = Vec::with_capacity(m);
    let mut class = Vec::with_capacity(m);
    let half_width = dom.n_cells as f64 / 8.0;
    for j in 0..m {
        let col = states.column(j).to_owned();
        let rho = transverse_density(basis, &col, 4 * dom.n_cells);
        let lw = localization_fraction(&rho, dom.n_cells, dom.wall_centers.0, half_width);
        let la = localization_fraction(&rho, dom.n_cells, dom.wall_centers.1, half_width);
        let c = if lw > 0.8 {
            StateClass::Wall
        } else if la > 0.8 {
            StateClass::AntiWall
        } else {
            StateClass::Bulk
        };
        loc_wall.push(lw);
        loc_anti.push(la);
        class.push(c);
    }
    Ok(EdgeSpectrum {
        energies,
        states,
        loc_wall,
        loc_anti,
        class,
    })
}

/// One δ row of the splitting scan.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SplitRow {
    pub delta: f64,
    pub l_cells: usize,
    pub e_d_ref: f64,
    /// the two wall-localized in-gap energies
    pub e1: f64,
    pub e2: f64,
    /// anti-wall energies for the spectral-symmetry check
    pub anti_e1: f64,
    pub anti_e2: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SplittingScan {
    pub rows: Vec<SplitRow>,
    /// fitted |E1 - E2| = a δ^p
    pub exponent: f64,
    pub coefficient: f64,
    /// fitted (E1 + E2)/2 - E_D = m2 δ² (estimates -m0)
    pub midpoint_quadratic: f64,
}

/// Reference energy of the fourfold crossing in the ribbon discretization:
/// the Γ quartet of the hexagonal skeleton window, which is exactly the
/// ribbon's zero-offset block at δ = 0.
pub fn skeleton_reference(
    v: &FourierPotential,
    skeleton_cutoff: i64,
) -> Result<DegenerateQuartet, BlochError> {
    let basis = PlaneWaveBasis::new(skeleton_cutoff);
    bloch::find_quartet(v, &basis, 1e-6)
}

/// Pick the two wall states inside the gap, solving at k_par = 0.
pub fn wall_states_at_gamma(
    v: &FourierPotential,
    w: &FourierPotential,
    profile: &WallProfile,
    delta: f64,
    edge: &RationalEdge,
    skeleton_cutoff: i64,
    l_cells: usize,
    e_d_ref: f64,
    c_sharp: f64,
) -> Result<(SplitRow, EdgeSpectrum, RibbonBasis), RibbonError> {
    let lat_edge = edge;
    let dom = RibbonDomain::new(*lat_edge, l_cells, 0.0)?;
    let basis = RibbonBasis::new(&v.lattice, edge, skeleton_cutoff, l_cells);
    let half = 3.0 * c_sharp.abs() * delta;
    let spec = solve_edge(
        v,
        w,
        profile,
        delta,
        &dom,
        &basis,
        (e_d_ref - half, e_d_ref + half),
    )?;
    let gap_half = c_sharp.abs() * delta;
    let mut wall: Vec<usize> = Vec::new();
    let mut anti: Vec<usize> = Vec::new();
    for (j, &e) in spec.energies.iter().enumerate() {
        if (e - e_d_ref).abs() < 0.9 * gap_half {
            match spec.class[j] {
                StateClass::Wall => wall.push(j),
                StateClass::AntiWall => anti.push(j),
                StateClass::Bulk => {}
            }
        }
    }
    if wall.len() != 2 {
        return Err(RibbonError::WrongEdgeStateCount(wall.len()));
    }
    let (e1, e2) = (spec.energies[wall[0]], spec.energies[wall[1]]);
    let (anti_e1, anti_e2) = match anti.len() {
        2 => (spec.energies[anti[0]], spec.energies[anti[1]]),
        _ => (f64::NAN, f64::NAN),
    };
    Ok((
        SplitRow {
            delta,
            l_cells,
            e_d_ref,
            e1,
            e2,
            anti_e1,
            anti_e2,
        },
        spec,
        basis,
    ))
}

/// Scan the splitting over a list of (δ, L) pairs and fit the power law.
pub fn splitting_scan(
    v: &FourierPotential,
    w: &FourierPotential,
    profile: &WallProfile,
    runs: &[(f64, usize)],
    edge: &RationalEdge,
    skeleton_cutoff: i64,
    e_d_ref: f64,
    c_sharp: f64,
) -> Result<SplittingScan, RibbonError> {
    let mut rows = Vec::with_capacity(runs.len());
    for &(delta, l_cells) in runs {
        let (row, _, _) = wall_states_at_gamma(
            v,
            w,
            profile,
            delta,
            edge,
            skeleton_cutoff,
            l_cells,
            e_d_ref,
            c_sharp,
        )?;
        rows.push(row);
    }
    // log-log fit of |E1 - E2| = a δ^p
    let xs: Vec<f64> = rows.iter().map(|r| r.delta.ln()).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| (r.e1 - r.e2).abs().max(1e-300).ln())
        .collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let coefficient = (my - exponent * mx).exp();
    // least-squares quadratic through the origin for the midpoint drift
    let num: f64 = rows
        .iter()
        .map(|r| (0.5 * (r.e1 + r.e2) - r.e_d_ref) * r.delta * r.delta)
        .sum();
    let den: f64 = rows.iter().map(|r| r.delta.powi(4)).sum();
    let midpoint_quadratic = num / den;
    Ok(SplittingScan {
        rows,
        exponent,
        coefficient,
        midpoint_quadratic,
    })
}

/// Overlap of computed edge states with the slowly modulated bulk-mode
/// combinations predicted by the effective model.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EdgeStateMatch {
    /// |<ψ_j, A_l>| for the two ansatz combinations
    pub overlaps: [[f64; 2]; 2],
    /// mass captured by span(A_1, A_2) per state
    pub captured: [f64; 2],
    /// |cos| of the angle between the two mixing vectors
    pub mixing_cos: f64,
}

/// Build the two modulated ansatz functions Σ_j α^l_j(ζ) φ_j(x) on the
/// ribbon basis and project the computed states onto their span.
pub fn match_bulk_modes(
    states: [&Array1<Complex64>; 2],
    q: &DegenerateQuartet,
    zero_mode: &ZeroMode,
    c_sharp: f64,
    delta: f64,
    edge: &RationalEdge,
    basis: &RibbonBasis,
) -> EdgeStateMatch {
    let l = basis.n_cells as i64;
    let n_s = 8 * basis.n_cells;
    // periodized zero-mode profile sampled over the supercell (wrapped around
    // the wall at s = 0; the residue at the anti-wall is exponentially small)
    let prof: Vec<f64> = (0..n_s)
        .map(|i| {
            let mut s = basis.n_cells as f64 * i as f64 / n_s as f64;
            if s > basis.n_cells as f64 / 2.0 {
                s -= basis.n_cells as f64;
            }
            let zeta = 2.0 * PI * delta * s;
            // clamp to the zero-mode grid
            let zg = &zero_mode.zeta;
            let h = zg[1] - zg[0];
            let t = (zeta - zg[0]) / h;
            if t <= 0.0 {
                zero_mode.alpha[0]
            } else if t >= (zg.len() - 1) as f64 {
                *zero_mode.alpha.last().unwrap()
            } else {
                let i0 = t.floor() as usize;
                let fr = t - i0 as f64;
                zero_mode.alpha[i0] * (1.0 - fr) + zero_mode.alpha[i0 + 1] * fr
            }
        })
        .collect();
    // Fourier coefficients of the profile over the supercell
    let j_max = l / 2;
    let mut alpha_hat = vec![Complex64::new(0.0, 0.0); (2 * j_max + 1) as usize];
    for (jj, slot) in alpha_hat.iter_mut().enumerate() {
        let j = jj as i64 - j_max;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &a) in prof.iter().enumerate() {
            acc += Complex64::from_polar(a, -2.0 * PI * j as f64 * i as f64 / n_s as f64);
        }
        *slot = acc / n_s as f64;
    }
    // α-structure of the two kernel combinations
    let s = c_sharp.signum();
    let minus_i = Complex64::new(0.0, -1.0);
    let weights: [[Complex64; 4]; 2] = [
        [
            Complex64::new(s, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            minus_i,
        ],
        [
            Complex64::new(0.0, 0.0),
            Complex64::new(s, 0.0),
            minus_i,
            Complex64::new(0.0, 0.0),
        ],
    ];
    // assemble A_l on the ribbon basis
    let mut ansatz: Vec<Array1<Complex64>> = Vec::with_capacity(2);
    for wgt in &weights {
        let mut a = Array1::<Complex64>::zeros(basis.dim);
        for (bi, &(m, n)) in q.basis.index_list.iter().enumerate() {
            let (p, r) = edge.dual_to_edge_index(m, n);
            for (jj, &ah) in alpha_hat.iter().enumerate() {
                let j = jj as i64 - j_max;
                if let Some(pos) = basis.position(p, r * l + j) {
                    for (comp, wc) in wgt.iter().enumerate() {
                        if wc.norm_sqr() > 0.0 {
                            a[pos] += *wc * q.phi[comp][bi] * ah;
                        }
                    }
                }
            }
        }
        let norm = linalg::cdot(&a, &a).re.sqrt();
        ansatz.push(a.mapv(|x| x / norm));
    }
    // Gram matrix of the (nearly orthogonal) ansatz pair
    let g01 = linalg::cdot(&ansatz[0], &ansatz[1]);
    let mut overlaps = [[0.0f64; 2]; 2];
    let mut captured = [0.0f64; 2];
    let mut mixing: [Array1<Complex64>; 2] = [Array1::zeros(2), Array1::zeros(2)];
    for (si, st) in states.iter().enumerate() {
        let o0 = linalg::cdot(&ansatz[0], st);
        let o1 = linalg::cdot(&ansatz[1], st);
        overlaps[si][0] = o0.norm();
        overlaps[si][1] = o1.norm();
        // captured mass through the 2x2 Gram inverse
        let det = 1.0 - g01.norm_sqr();
        let c0 = (o0 - g01 * o1) / det;
        let c1 = (o1 - g01.conj() * o0) / det;
        captured[si] = (c0.conj() * o0 + c1.conj() * o1).re;
        let nrm = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
        mixing[si] = Array1::from(vec![c0 / nrm, c1 / nrm]);
    }
    let mixing_cos = linalg::cdot(&mixing[0], &mixing[1]).norm();
    EdgeStateMatch {
        overlaps,
        captured,
        mixing_cos,
    }
}

/// Edge-state dispersion near k_par = 0.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DispersionScan {
    pub k_par: Vec<f64>,
    /// wall-state energies per k point (ascending pair)
    pub wall_energies: Vec<(f64, f64)>,
    /// nearest bulk-classified levels below/above the gap per k point
    pub bulk_edges: Vec<(f64, f64)>,
}

pub fn dispersion_scan(
    v: &FourierPotential,
    w: &FourierPotential,
    profile: &WallProfile,
    delta: f64,
    edge: &RationalEdge,
    skeleton_cutoff: i64,
    l_cells: usize,
    e_d_ref: f64,
    c_sharp: f64,
    k_par_grid: &[f64],
) -> Result<DispersionScan, RibbonError> {
    let basis = RibbonBasis::new(&v.lattice, edge, skeleton_cutoff, l_cells);
    let half = 3.0 * c_sharp.abs() * delta;
    let mut wall_energies = Vec::with_capacity(k_par_grid.len());
    let mut bulk_edges = Vec::with_capacity(k_par_grid.len());
    for &kp in k_par_grid {
        let dom = RibbonDomain::new(*edge, l_cells, kp)?;
        let spec = solve_edge(
            v,
            w,
            profile,
            delta,
            &dom,
            &basis,
            (e_d_ref - half, e_d_ref + half),
        )?;
        let mut wall: Vec<f64> = spec
            .energies
            .iter()
            .zip(&spec.class)
            .filter(|(e, c)| {
                **c == StateClass::Wall && (**e - e_d_ref).abs() < 0.9 * c_sharp.abs() * delta
            })
            .map(|(e, _)| *e)
            .collect();
        wall.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if wall.len() != 2 {
            return Err(RibbonError::WrongEdgeStateCount(wall.len()));
        }
        let below = spec
            .energies
            .iter()
            .zip(&spec.class)
            .filter(|(e, c)| **c == StateClass::Bulk && **e < e_d_ref)
            .map(|(e, _)| *e)
            .fold(f64::NEG_INFINITY, f64::max);
        let above = spec
            .energies
            .iter()
            .zip(&spec.class)
            .filter(|(e, c)| **c == StateClass::Bulk && **e > e_d_ref)
            .map(|(e, _)| *e)
            .fold(f64::INFINITY, f64::min);
        wall_energies.push((wall[0], wall[1]));
        bulk_edges.push((below, above));
    }
    Ok(DispersionScan {
        k_par: k_par_grid.to_vec(),
        wall_energies,
        bulk_edges,
    })
}
