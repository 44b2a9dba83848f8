//! Eigenvalue location: bracketing by the Prüfer index, Newton iteration on
//! the smallest eigenvalue of the matching matrix, multiplicity from the
//! index jump, and an error estimate from a second, staggered mesh.

use std::sync::Arc;

use crate::cp::{Interval, MeshCache};
use crate::eigfun::{eigenfunctions, Eigenfunction};
use crate::error::{Error, Result};
use crate::linalg::{determinant, null_space, sym_eig, Mat, SymMatrix, Vector, NULL_SPACE_TOL};
use crate::mesh::{build_mesh, check_tolerance, reference_mesh, Mesh};
use crate::par::{self, Execution};
use crate::problems::ProblemDef;
use crate::prufer::{index_function, phase_step, IndexReport, PhaseState};
use crate::riccati::{init_left, init_right, RiccatiState, Side};

pub const MAX_NEWTON_ITERS: usize = 50;
pub const MAX_MATCH_SHIFTS: usize = 5;
const MAX_PHASE_SPLIT_DEPTH: usize = 8;
const MAX_WINDOW_DOUBLINGS: usize = 30;
const MAX_ISOLATION_ROUNDS: usize = 3;

/// Half-width used to probe the index on either side of a converged E.
pub fn validation_epsilon(e: f64) -> f64 {
    1e-6 * (1.0 + e.abs())
}

/// Index of the meshpoint used for matching: the right end of the interval
/// whose averaged potential has the smallest eigenvalue. Ties go to the
/// interval nearest the middle of the domain, then to the leftmost.
pub fn choose_matching_point(cache: &MeshCache) -> usize {
    let pts = cache.points();
    let mid = 0.5 * (pts[0] + pts[pts.len() - 1]);
    let close = 1e-12 * (pts[pts.len() - 1] - pts[0]);
    let mut best = 0;
    for (i, iv) in cache.intervals.iter().enumerate().skip(1) {
        let cur = &cache.intervals[best];
        let (l, lb) = (iv.min_level(), cur.min_level());
        let tie = (l - lb).abs() <= 1e-12 * (1.0 + lb.abs());
        if (!tie && l < lb) || (tie && centre_distance(iv, mid) < centre_distance(cur, mid) - close) {
            best = i;
        }
    }
    best + 1
}

fn centre_distance(iv: &Interval, mid: f64) -> f64 {
    (0.5 * (iv.x_lo + iv.x_hi) - mid).abs()
}

/// Left and right states brought to a common meshpoint.
#[derive(Debug, Clone)]
pub struct Shot {
    pub energy: f64,
    pub c_index: usize,
    pub left: RiccatiState,
    pub right: RiccatiState,
    pub phase_l: Option<PhaseState>,
    pub phase_r: Option<PhaseState>,
    /// physical bases `[y; y']` at meshpoints `0..=c` (left) and `c..=N`
    /// (right), filled only when recording was requested
    pub left_bases: Vec<Mat>,
    pub right_bases: Vec<Mat>,
}

#[derive(Debug, Clone)]
pub struct Mismatch {
    pub energy: f64,
    pub c_index: usize,
    /// eigenvalue of `M = Ψ_L(c) − Ψ_R(c)` of smallest magnitude
    pub mu: f64,
    pub dmu_de: f64,
    pub matrix: SymMatrix,
    /// eigenpairs of `M`, ordered by increasing |λ|
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vector>,
    /// `Ψ_L^E(c) − Ψ_R^E(c)`
    pub psi_e: SymMatrix,
    pub psi_l: SymMatrix,
    pub det: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Window,
    Bisection,
    Newton,
    Validation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub stage: Stage,
    pub energy: f64,
    pub mu: Option<f64>,
    pub index: Option<usize>,
}

/// Result of one search on one mesh.
#[derive(Debug, Clone)]
pub struct Located {
    pub k: usize,
    pub energy: f64,
    pub multiplicity: usize,
    pub null_dim: usize,
    pub newton_iters: usize,
    pub bracket: (f64, f64),
    pub trace: Vec<TraceRecord>,
}

/// One mesh with its cached interval data and matching point.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub problem: Arc<ProblemDef>,
    pub cache: MeshCache,
    pub c_index: usize,
}

impl Discretization {
    pub fn new(problem: Arc<ProblemDef>, mesh: Mesh) -> Result<Self> {
        let cache = MeshCache::new(&problem, mesh)?;
        let c_index = choose_matching_point(&cache);
        Ok(Discretization { problem, cache, c_index })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.cache.mesh
    }

    pub fn matching_point(&self) -> f64 {
        self.cache.points()[self.c_index]
    }

    /// Lower end of the search window; 𝓘 vanishes below every level of V₀.
    pub fn energy_floor(&self) -> f64 {
        self.cache.min_level() - 1.0
    }

    fn start_states(&self) -> Result<(RiccatiState, RiccatiState)> {
        let p = &self.problem;
        Ok((init_left(&p.a1, &p.a2, p.a)?, init_right(&p.b1, &p.b2, p.b)?))
    }

    /// Propagates both sides to meshpoint `c_index`, optionally carrying the
    /// phase sums and recording the subspace at every meshpoint passed.
    pub fn shoot(&self, e: f64, c_index: usize, phases: bool, record: bool) -> Result<Shot> {
        let (mut left, mut right) = self.start_states()?;
        let mut phase_l = if phases { Some(PhaseState::new(&left)?) } else { None };
        let mut phase_r = if phases { Some(PhaseState::new(&right)?) } else { None };
        let mut left_bases = Vec::new();
        let mut right_bases = Vec::new();
        if record {
            left_bases.reserve(c_index + 1);
            left_bases.push(left.basis());
        }
        for iv in &self.cache.intervals[..c_index] {
            advance(&mut left, phase_l.as_mut(), iv, e, 0)?;
            if record {
                left_bases.push(left.basis());
            }
        }
        if record {
            right_bases.push(right.basis());
        }
        for iv in self.cache.intervals[c_index..].iter().rev() {
            advance(&mut right, phase_r.as_mut(), iv, e, 0)?;
            if record {
                right_bases.push(right.basis());
            }
        }
        right_bases.reverse();
        Ok(Shot { energy: e, c_index, left, right, phase_l, phase_r, left_bases, right_bases })
    }

    /// 𝓘(E), the number of eigenvalues of the discretized problem below E.
    pub fn index_report(&self, e: f64) -> Result<IndexReport> {
        let shot = self.shoot(e, self.c_index, true, false)?;
        index_function(&shot.left, &shot.right, shot.phase_l.as_ref().unwrap(), shot.phase_r.as_ref().unwrap(), e)
    }

    pub fn index_at(&self, e: f64) -> Result<usize> {
        Ok(self.index_report(e)?.index_fn)
    }

    /// Candidate matching points: the default, then up to five shifts
    /// towards the larger subdomain.
    fn match_candidates(&self) -> Vec<usize> {
        let n_int = self.cache.len();
        let mut out = vec![self.c_index];
        let mut c = self.c_index;
        for _ in 0..MAX_MATCH_SHIFTS {
            c = if 2 * c < n_int { (c + 1).min(n_int) } else { c.saturating_sub(1) };
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }

    /// Matching point for energies near `e`: the candidate where both `D`
    /// blocks are best conditioned. Near an eigenvalue whose eigenfunction
    /// has `y'(c)` close to zero the mismatch has a pole next to its root,
    /// so such points are avoided.
    pub fn select_matching_point(&self, e: f64) -> Result<usize> {
        let mut best = (f64::INFINITY, self.c_index);
        for c in self.match_candidates() {
            let shot = self.shoot(e, c, false, false)?;
            let cond = f64::max(shot.left.extraction_condition(), shot.right.extraction_condition());
            if cond < best.0 {
                best = (cond, c);
            }
        }
        Ok(best.1)
    }

    /// Matching mismatch at `E` with matching meshpoint `c`.
    pub fn mismatch_at(&self, e: f64, c: usize) -> Result<Mismatch> {
        mismatch_from(&self.shoot(e, c, false, false)?)
    }

    /// Matching mismatch at `E`, moving the matching point towards the larger
    /// subdomain if `Ψ` cannot be extracted there.
    pub fn mismatch(&self, e: f64) -> Result<Mismatch> {
        let mut last = None;
        for c in self.match_candidates() {
            match self.mismatch_at(e, c) {
                Ok(m) => return Ok(m),
                Err(err @ Error::SingularExtraction { .. }) => last = Some(err),
                Err(err) => return Err(err),
            }
        }
        Err(last.unwrap())
    }

    /// Finds eigenvalue `k` with bracket `(lo, hi)` already satisfying
    /// 𝓘(lo) ≤ k < 𝓘(hi).
    fn converge(&self, k: usize, tol: f64, mut lo: f64, mut hi: f64, trace: &mut Option<Vec<TraceRecord>>) -> Result<Located> {
        let mut e = 0.5 * (lo + hi);
        let mut c = self.select_matching_point(e)?;
        let mut iters = 0;
        let mut last_step = f64::INFINITY;
        loop {
            if iters >= MAX_NEWTON_ITERS {
                return Err(Error::Convergence { k, iters, energy: e, step: last_step });
            }
            iters += 1;
            let newton = match self.mismatch_at(e, c) {
                Ok(m) => {
                    push(trace, Stage::Newton, e, Some(m.mu), None);
                    let cand = e - m.mu / m.dmu_de;
                    if m.dmu_de > 0.0 && cand > lo && cand < hi {
                        Some(cand)
                    } else {
                        None
                    }
                }
                Err(Error::SingularExtraction { .. }) => None,
                Err(err) => return Err(err),
            };
            match newton {
                Some(cand) => {
                    last_step = (cand - e).abs();
                    e = cand;
                    if last_step <= tol * (1.0 + e.abs()) {
                        break;
                    }
                }
                None => {
                    c = self.select_matching_point(e)?;
                    let idx = self.index_at(e)?;
                    push(trace, Stage::Bisection, e, None, Some(idx));
                    if idx <= k {
                        lo = e;
                    } else {
                        hi = e;
                    }
                    let next = 0.5 * (lo + hi);
                    last_step = (next - e).abs();
                    e = next;
                    if hi - lo <= 1e-3 * tol * (1.0 + e.abs()) {
                        break;
                    }
                }
            }
        }
        Ok(Located { k, energy: e, multiplicity: 0, null_dim: 0, newton_iters: iters, bracket: (lo, hi), trace: Vec::new() })
    }

    /// Bisects on 𝓘 until `hi − lo < width`.
    fn bisect(&self, k: usize, mut lo: f64, mut hi: f64, width: impl Fn(f64) -> f64, trace: &mut Option<Vec<TraceRecord>>) -> Result<(f64, f64, usize)> {
        let mut idx_lo = self.index_at(lo)?;
        while hi - lo >= width(lo) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let idx = self.index_at(mid)?;
            push(trace, Stage::Bisection, mid, None, Some(idx));
            if idx <= k {
                lo = mid;
                idx_lo = idx;
            } else {
                hi = mid;
            }
        }
        Ok((lo, hi, idx_lo))
    }

    /// Search window `[lo, hi]` with 𝓘(lo) ≤ k < 𝓘(hi).
    fn window(&self, k: usize, e_max: f64, trace: &mut Option<Vec<TraceRecord>>) -> Result<(f64, f64)> {
        let mut lo = self.energy_floor();
        let mut tries = 0;
        while self.index_at(lo)? > k {
            lo -= f64::max(1.0, lo.abs());
            tries += 1;
            if tries > MAX_WINDOW_DOUBLINGS {
                return Err(Error::IndexOutOfRange { k, e_max, count: 0 });
            }
        }
        let mut hi = f64::max(e_max, lo + 1.0);
        let mut count = self.index_at(hi)?;
        push(trace, Stage::Window, hi, None, Some(count));
        let mut doublings = 0;
        while count <= k {
            if doublings == MAX_WINDOW_DOUBLINGS {
                return Err(Error::IndexOutOfRange { k, e_max: hi, count });
            }
            hi = lo + 2.0 * (hi - lo);
            count = self.index_at(hi)?;
            push(trace, Stage::Window, hi, None, Some(count));
            doublings += 1;
        }
        Ok((lo, hi))
    }

    /// Locates the eigenvalue with index `k` (0-based, counted with
    /// multiplicity).
    pub fn locate_by_index(&self, k: usize, tol: f64, e_max: f64, verbose: bool) -> Result<Located> {
        check_tolerance(tol)?;
        let mut trace = if verbose { Some(Vec::new()) } else { None };
        let (lo, hi) = self.window(k, e_max, &mut trace)?;
        let (mut lo, mut hi, _) = self.bisect(k, lo, hi, |l| f64::max(tol, 1e-3 * (1.0 + l.abs())), &mut trace)?;
        let mut last_err = None;
        for round in 0..=MAX_ISOLATION_ROUNDS {
            if round > 0 {
                // a neighbouring eigenvalue shares the bracket: isolate k
                let shrink = 1e-3f64.powi(round as i32 + 1);
                let (l, h, _) = self.bisect(k, lo, hi, |l| shrink * (1.0 + l.abs()), &mut trace)?;
                lo = l;
                hi = h;
            }
            let mut found = match self.converge(k, tol, lo, hi, &mut trace) {
                Ok(f) => f,
                Err(err) => {
                    last_err = Some(err);
                    continue;
                }
            };
            match self.classify(&mut found, &mut trace) {
                Ok(()) if found.multiplicity > 0 => {
                    let below = self.index_at(found.energy - validation_epsilon(found.energy))?;
                    if below <= k && k < below + found.multiplicity {
                        found.trace = trace.take().unwrap_or_default();
                        return Ok(found);
                    }
                    last_err = Some(Error::Convergence { k, iters: found.newton_iters, energy: found.energy, step: 0.0 });
                }
                Ok(()) => last_err = Some(Error::NotAnEigenvalue(found.energy)),
                Err(err) => last_err = Some(err),
            }
        }
        Err(last_err.unwrap())
    }

    /// Sets multiplicity from the index jump across `E` and the null space
    /// dimension of the matching matrix.
    fn classify(&self, found: &mut Located, trace: &mut Option<Vec<TraceRecord>>) -> Result<()> {
        let e = found.energy;
        let eps = validation_epsilon(e);
        let below = self.index_at(e - eps)?;
        let above = self.index_at(e + eps)?;
        push(trace, Stage::Validation, e - eps, None, Some(below));
        push(trace, Stage::Validation, e + eps, None, Some(above));
        found.multiplicity = above.saturating_sub(below);
        let c = self.select_matching_point(e)?;
        found.null_dim = match self.mismatch_at(e, c) {
            Ok(m) => null_space(&m.matrix, NULL_SPACE_TOL)?.len(),
            Err(_) => 0,
        };
        Ok(())
    }

    /// Newton refinement of an eigenvalue already located on another mesh.
    pub fn relocate(&self, k: usize, tol: f64, near: &Located, verbose: bool) -> Result<Located> {
        let mut trace = if verbose { Some(Vec::new()) } else { None };
        let half = f64::max(1e-3 * (1.0 + near.energy.abs()), 4.0 * (near.bracket.1 - near.bracket.0));
        let (mut lo, mut hi) = (near.energy - half, near.energy + half);
        let mut widen = 0;
        while !(self.index_at(lo)? <= k && self.index_at(hi)? > k) {
            lo -= half * 2f64.powi(widen);
            hi += half * 2f64.powi(widen);
            widen += 1;
            if widen > 6 {
                return Err(Error::NotAnEigenvalue(near.energy));
            }
        }
        let mut found = self.converge(k, tol, lo, hi, &mut trace)?;
        found.multiplicity = near.multiplicity;
        found.null_dim = near.null_dim;
        found.trace = trace.unwrap_or_default();
        Ok(found)
    }

    /// Ψ_L traced from a to b (rows with singular extraction are `None`).
    pub fn psi_trace(&self, e: f64) -> Result<Vec<(f64, Option<SymMatrix>)>> {
        let (mut left, _) = self.start_states()?;
        let mut rows = Vec::with_capacity(self.cache.len() + 1);
        rows.push((left.x, left.extract_psi().ok()));
        for iv in &self.cache.intervals {
            let st = iv.step(e)?;
            crate::riccati::step_left(&mut left, &st);
            left.x = iv.x_hi;
            rows.push((left.x, left.extract_psi().ok()));
        }
        Ok(rows)
    }
}

fn push(trace: &mut Option<Vec<TraceRecord>>, stage: Stage, energy: f64, mu: Option<f64>, index: Option<usize>) {
    if let Some(t) = trace.as_mut() {
        t.push(TraceRecord { stage, energy, mu, index });
    }
}

/// One interval step, with the phase update if requested. A failing phase
/// update is retried on the two halves of the interval.
fn advance(state: &mut RiccatiState, phase: Option<&mut PhaseState>, iv: &Interval, e: f64, depth: usize) -> Result<()> {
    let st = iv.step(e)?;
    let before = state.clone();
    state.advance(&st);
    // pin the position to the meshpoint to avoid drift from summed steps
    state.x = match state.side {
        Side::Left => iv.x_hi,
        Side::Right => iv.x_lo,
    };
    let Some(phase) = phase else { return Ok(()) };
    match phase_step(phase, &before, state, &st) {
        Ok(()) => Ok(()),
        Err(_) if depth < MAX_PHASE_SPLIT_DEPTH => {
            *state = before;
            let halves = match state.side {
                Side::Left => [iv.sub(0.0, 0.5), iv.sub(0.5, 1.0)],
                Side::Right => [iv.sub(0.5, 1.0), iv.sub(0.0, 0.5)],
            };
            for h in &halves {
                advance(state, Some(phase), h, e, depth + 1)?;
            }
            Ok(())
        }
        Err(_) => Err(Error::PhaseStep { x_lo: iv.x_lo, x_hi: iv.x_hi }),
    }
}

/// Mismatch data from states positioned at the matching point.
pub fn mismatch_from(shot: &Shot) -> Result<Mismatch> {
    let (psi_l, psi_le) = shot.left.extract()?;
    let (psi_r, psi_re) = shot.right.extract()?;
    let m = psi_l.add(&psi_r.scale(-1.0));
    let p = psi_le.add(&psi_re.scale(-1.0));
    let eig = sym_eig(&m)?;
    let mut order: Vec<usize> = (0..m.n()).collect();
    order.sort_by(|&i, &j| eig.values[i].abs().total_cmp(&eig.values[j].abs()).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.values[i]).collect();
    let eigenvectors: Vec<Vector> = order.iter().map(|&i| eig.vectors.column(i).into_owned()).collect();
    let v = &eigenvectors[0];
    let dmu_de = (v.transpose() * p.as_matrix() * v)[(0, 0)];
    Ok(Mismatch {
        energy: shot.energy,
        c_index: shot.c_index,
        mu: eigenvalues[0],
        dmu_de,
        det: determinant(m.as_matrix()),
        matrix: m,
        eigenvalues,
        eigenvectors,
        psi_e: p,
        psi_l,
    })
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub e_max: f64,
    pub verbose: bool,
    pub execution: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-6, e_max: 0.0, verbose: false, execution: Execution::default() }
    }
}

/// Converged eigenvalue as reported to users.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub k: usize,
    /// reported energy (reference-mesh value)
    pub energy: f64,
    pub multiplicity: usize,
    /// `|E_main − E_ref|/3`, the Richardson estimate of the error in
    /// `E_ref` for a fourth-order method with halved steps; `None` when
    /// the reference solve failed
    pub err_estimate: Option<f64>,
    pub newton_iters: usize,
    pub bracket: (f64, f64),
    pub e_main: f64,
    pub e_ref: Option<f64>,
    /// `(4·E_ref − E_main)/3`
    pub e_richardson: Option<f64>,
    pub null_dim: usize,
    pub trace: Vec<TraceRecord>,
}

/// Main mesh plus reference mesh for one problem and tolerance.
#[derive(Debug, Clone)]
pub struct Solver {
    pub main: Discretization,
    pub reference: Discretization,
    pub options: SolverOptions,
}

impl Solver {
    pub fn new(problem: ProblemDef, options: SolverOptions) -> Result<Self> {
        let problem = Arc::new(problem);
        let mesh = build_mesh(&problem, options.tol)?;
        Self::with_mesh(problem, mesh, options)
    }

    pub fn with_mesh(problem: Arc<ProblemDef>, mesh: Mesh, options: SolverOptions) -> Result<Self> {
        check_tolerance(options.tol)?;
        let reference = Discretization::new(problem.clone(), reference_mesh(&mesh))?;
        let main = Discretization::new(problem, mesh)?;
        Ok(Solver { main, reference, options })
    }

    pub fn problem(&self) -> &ProblemDef {
        &self.main.problem
    }

    pub fn index_at(&self, e: f64) -> Result<usize> {
        self.main.index_at(e)
    }

    /// 𝓘 over a batch of energies.
    pub fn index_sweep(&self, energies: &[f64]) -> Vec<Result<usize>> {
        par::map(self.options.execution, energies, |&e| self.main.index_at(e))
    }

    /// Eigenvalue `k` on the main mesh, refined on the reference mesh.
    pub fn solve(&self, k: usize) -> Result<EigenResult> {
        let o = &self.options;
        let main = self.main.locate_by_index(k, o.tol, o.e_max, o.verbose)?;
        let reference = self
            .reference
            .relocate(k, o.tol, &main, o.verbose)
            .or_else(|_| self.reference.locate_by_index(k, o.tol, o.e_max, o.verbose));
        let mut trace = main.trace.clone();
        let (energy, e_ref, err, rich) = match &reference {
            Ok(r) => {
                trace.extend(r.trace.iter().cloned());
                let err = (main.energy - r.energy).abs() / 3.0;
                (r.energy, Some(r.energy), Some(err), Some((4.0 * r.energy - main.energy) / 3.0))
            }
            Err(_) => (main.energy, None, None, None),
        };
        Ok(EigenResult {
            k,
            energy,
            multiplicity: main.multiplicity,
            err_estimate: err,
            newton_iters: main.newton_iters,
            bracket: main.bracket,
            e_main: main.energy,
            e_ref,
            e_richardson: rich,
            null_dim: main.null_dim,
            trace,
        })
    }

    /// Independent searches for several indices, returned in input order.
    pub fn solve_many(&self, ks: &[usize]) -> Vec<Result<EigenResult>> {
        par::map(self.options.execution, ks, |&k| self.solve(k))
    }

    /// Normalized eigenfunctions for a solved eigenvalue, recovered on the
    /// mesh whose energy was reported.
    pub fn eigenfunctions(&self, r: &EigenResult, dense: usize) -> Result<Vec<Eigenfunction>> {
        let (disc, e) = match r.e_ref {
            Some(e) => (&self.reference, e),
            None => (&self.main, r.e_main),
        };
        eigenfunctions(disc, e, r.multiplicity, dense)
    }
}
