//! Brute-force reference: the interaction generator
//! `G = α b̂ â† − α* b̂† â` on a truncated joint basis, exponentiated
//! numerically.
//!
//! `b̂` lowers the electron energy rung (`b̂|E_j⟩ = |E_{j−1}⟩`), `â` is the
//! photon annihilator. Transitions that leave the window are dropped, so at
//! the window edges `b̂†b̂ ≠ 1`; keep the support away from them (the edge
//! weight is reported with every run).
//!
//! `G` decomposes into blocks that never couple to one another. Each block is
//! stored densely and exponentiated by scaling and squaring.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::state::{Axis, AxisKind, JointAmplitudeGrid, Metadata};

/// Default cap on the number of basis states.
pub const DEFAULT_STATE_CAP: usize = 40_000;

/// States closer than this to a truncation edge count as edge weight.
pub const EDGE_GUARD: i64 = 5;

/// Norm change above which a run carries a truncation warning.
pub const LEAK_WARNING: f64 = 1e-8;

/// Joint basis `|E_j, n⟩`, `j ∈ [j_min, j_max]`, `n ∈ [0, n_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedBasis {
    pub electron_range: (i64, i64),
    pub photon_max: u32,
    /// Window for the second electron of a two-electron run.
    pub second_electron_range: Option<(i64, i64)>,
}

impl TruncatedBasis {
    pub fn new(j_min: i64, j_max: i64, photon_max: u32) -> Result<Self> {
        if j_min > 0 || j_max < 0 {
            return Err(Error::Domain(format!(
                "electron window [{j_min}, {j_max}] must contain 0"
            )));
        }
        Ok(TruncatedBasis {
            electron_range: (j_min, j_max),
            photon_max,
            second_electron_range: None,
        })
    }

    pub fn with_second_electron(mut self, j_min: i64, j_max: i64) -> Result<Self> {
        if j_min > 0 || j_max < 0 {
            return Err(Error::Domain(format!(
                "second electron window [{j_min}, {j_max}] must contain 0"
            )));
        }
        self.second_electron_range = Some((j_min, j_max));
        Ok(self)
    }

    /// Symmetric electron half-width `⌈17 + a² + 10a⌉` for an effective
    /// transfer amplitude `a`.
    pub fn window_margin(a: f64) -> i64 {
        (17.0 + a * a + 10.0 * a).ceil() as i64
    }

    /// Window for a single passage starting from `|E_0⟩ ⊗ |β⟩`.
    pub fn for_single(alpha: Complex64, beta: Complex64) -> Self {
        let a = alpha.norm() * (beta.norm() + 1.0);
        let w = Self::window_margin(a);
        let photons = crate::state::suggest_range(beta.norm_sqr()) + w;
        TruncatedBasis {
            electron_range: (-w, w),
            photon_max: photons as u32,
            second_electron_range: None,
        }
    }

    /// Windows for two consecutive passages through an initially empty mode.
    pub fn for_two_electrons(alpha1: Complex64, alpha2: Complex64) -> Self {
        let w1 = Self::window_margin(alpha1.norm());
        let s_top = crate::state::suggest_range(alpha1.norm_sqr()).max(w1);
        let stored = (s_top as f64).sqrt();
        let w2 = Self::window_margin(alpha2.norm() * (stored + 1.0));
        TruncatedBasis {
            electron_range: (-s_top, w1),
            photon_max: (s_top + w2) as u32,
            second_electron_range: Some((-w2, s_top + EDGE_GUARD + 1)),
        }
    }

    fn electron_len(&self) -> usize {
        (self.electron_range.1 - self.electron_range.0 + 1) as usize
    }

    pub fn dim(&self) -> usize {
        self.electron_len() * (self.photon_max as usize + 1)
    }

    /// Position of `|E_j, n⟩` in the enumeration, if inside the window.
    pub fn index(&self, j: i64, n: i64) -> Option<usize> {
        let (lo, hi) = self.electron_range;
        if j < lo || j > hi || n < 0 || n > self.photon_max as i64 {
            return None;
        }
        Some((j - lo) as usize * (self.photon_max as usize + 1) + n as usize)
    }

    /// Inverse of [`index`](Self::index).
    pub fn state(&self, idx: usize) -> (i64, i64) {
        let np = self.photon_max as usize + 1;
        (self.electron_range.0 + (idx / np) as i64, (idx % np) as i64)
    }

    pub fn zero_vector(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.dim()]
    }

    pub fn fock_state(&self, j: i64, n: i64) -> Result<Vec<Complex64>> {
        let idx = self
            .index(j, n)
            .ok_or_else(|| Error::Domain(format!("|E_{j}, {n}⟩ is outside the basis")))?;
        let mut v = self.zero_vector();
        v[idx] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    /// `|E_j⟩ ⊗ |β⟩`, truncated at `photon_max` without renormalising.
    pub fn coherent_product(&self, j: i64, beta: Complex64) -> Result<Vec<Complex64>> {
        self.photon_product(j, &coherent_amplitudes(beta, self.photon_max))
    }

    /// `|E_j⟩ ⊗ Σ_n p_n |n⟩`.
    pub fn photon_product(&self, j: i64, photons: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut v = self.zero_vector();
        for (n, p) in photons.iter().enumerate() {
            if *p == Complex64::new(0.0, 0.0) {
                continue;
            }
            let idx = self
                .index(j, n as i64)
                .ok_or_else(|| Error::Domain(format!("|E_{j}, {n}⟩ is outside the basis")))?;
            v[idx] = *p;
        }
        Ok(v)
    }

    /// Probability carried by states within [`EDGE_GUARD`] of a truncation edge.
    pub fn edge_weight(&self, v: &[Complex64]) -> f64 {
        let (lo, hi) = self.electron_range;
        v.iter()
            .enumerate()
            .filter(|(idx, _)| {
                let (j, n) = self.state(*idx);
                j - lo < EDGE_GUARD || hi - j < EDGE_GUARD || self.photon_max as i64 - n < EDGE_GUARD
            })
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }

    /// Re-index a state vector as a grid over `(n, k = j)`.
    pub fn to_photon_electron_grid(&self, v: &[Complex64], metadata: Metadata) -> Result<JointAmplitudeGrid> {
        let (lo, hi) = self.electron_range;
        JointAmplitudeGrid::from_fn(
            Axis::new(AxisKind::PhotonNumber, 0, self.photon_max as i64),
            Axis::new(AxisKind::ElectronGain, lo, hi),
            metadata,
            |n, j| Ok(v[self.index(j, n).expect("inside window")]),
        )
    }
}

/// `e^{−|β|²/2} β^n / √n!` for `n = 0..=n_max`.
pub fn coherent_amplitudes(beta: Complex64, n_max: u32) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n_max as usize + 1);
    let mut c = Complex64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    out.push(c);
    for n in 1..=n_max {
        c *= beta / (n as f64).sqrt();
        out.push(c);
    }
    out
}

/// One decoupled block of the generator.
#[derive(Debug, Clone)]
pub struct GeneratorBlock {
    /// Global basis indices, ascending.
    pub states: Vec<usize>,
    pub matrix: DMatrix<Complex64>,
}

/// `G` over a [`TruncatedBasis`], stored block-diagonally.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    basis: TruncatedBasis,
    alpha: Complex64,
    blocks: Vec<GeneratorBlock>,
    /// block id and local position for each basis state
    location: Vec<(usize, usize)>,
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Nonzero entries `(row, col, value)` of `G` on the basis.
fn generator_entries(basis: &TruncatedBasis, alpha: Complex64) -> Vec<(usize, usize, Complex64)> {
    let mut entries = Vec::new();
    if alpha.norm() == 0.0 {
        return entries;
    }
    for col in 0..basis.dim() {
        let (j, n) = basis.state(col);
        // α b̂ â†: |E_j, n⟩ → √(n+1) |E_{j−1}, n+1⟩
        if let Some(row) = basis.index(j - 1, n + 1) {
            entries.push((row, col, alpha * ((n + 1) as f64).sqrt()));
        }
        // −α* b̂† â: |E_j, n⟩ → √n |E_{j+1}, n−1⟩
        if n > 0 {
            if let Some(row) = basis.index(j + 1, n - 1) {
                entries.push((row, col, -alpha.conj() * (n as f64).sqrt()));
            }
        }
    }
    entries
}

/// Assemble the generator with the default state cap.
pub fn build_generator(basis: TruncatedBasis, alpha: Complex64) -> Result<GeneratorMatrix> {
    build_generator_capped(basis, alpha, DEFAULT_STATE_CAP)
}

pub fn build_generator_capped(basis: TruncatedBasis, alpha: Complex64, cap: usize) -> Result<GeneratorMatrix> {
    let dim = basis.dim();
    if dim > cap {
        return Err(Error::BasisTooLarge { states: dim, cap });
    }
    let entries = generator_entries(&basis, alpha);
    let mut sets = DisjointSet::new(dim);
    for &(r, c, _) in &entries {
        sets.union(r, c);
    }
    let mut block_of_root = vec![usize::MAX; dim];
    let mut blocks: Vec<GeneratorBlock> = Vec::new();
    let mut location = vec![(0, 0); dim];
    for (idx, slot) in location.iter_mut().enumerate() {
        let root = sets.find(idx);
        if block_of_root[root] == usize::MAX {
            block_of_root[root] = blocks.len();
            blocks.push(GeneratorBlock {
                states: Vec::new(),
                matrix: DMatrix::zeros(0, 0),
            });
        }
        let b = block_of_root[root];
        *slot = (b, blocks[b].states.len());
        blocks[b].states.push(idx);
    }
    for block in blocks.iter_mut() {
        let m = block.states.len();
        block.matrix = DMatrix::zeros(m, m);
    }
    for (r, c, v) in entries {
        let (b, lr) = location[r];
        let (_, lc) = location[c];
        blocks[b].matrix[(lr, lc)] += v;
    }
    Ok(GeneratorMatrix {
        basis,
        alpha,
        blocks,
        location,
    })
}

impl GeneratorMatrix {
    pub fn basis(&self) -> &TruncatedBasis {
        &self.basis
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn blocks(&self) -> &[GeneratorBlock] {
        &self.blocks
    }

    /// `⟨row|G|col⟩`.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let (br, lr) = self.location[row];
        let (bc, lc) = self.location[col];
        if br != bc {
            Complex64::new(0.0, 0.0)
        } else {
            self.blocks[br].matrix[(lr, lc)]
        }
    }

    /// Full dense matrix; intended for small bases.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        let dim = self.basis.dim();
        if dim > 4096 {
            return Err(Error::BasisTooLarge { states: dim, cap: 4096 });
        }
        let mut m = DMatrix::zeros(dim, dim);
        for block in &self.blocks {
            for (lr, &r) in block.states.iter().enumerate() {
                for (lc, &c) in block.states.iter().enumerate() {
                    m[(r, c)] = block.matrix[(lr, lc)];
                }
            }
        }
        Ok(m)
    }

    /// `exp(G)`, with each block exponentiated on first use.
    pub fn propagator(&self) -> Propagator {
        Propagator {
            basis: self.basis,
            cache: (0..self.blocks.len()).map(|_| OnceLock::new()).collect(),
            generator: self.blocks.clone(),
        }
    }
}

/// `exp(G)` in the generator's block layout.
#[derive(Debug, Clone)]
pub struct Propagator {
    basis: TruncatedBasis,
    generator: Vec<GeneratorBlock>,
    cache: Vec<OnceLock<DMatrix<Complex64>>>,
}

/// Result of applying the S-matrix to a state.
#[derive(Debug, Clone)]
pub struct Evolved {
    pub state: Vec<Complex64>,
    /// `|‖out‖² − ‖in‖²|`.
    pub norm_leak: f64,
    /// Output probability within [`EDGE_GUARD`] of a window edge.
    pub edge_weight: f64,
    pub warnings: Vec<String>,
}

impl Propagator {
    pub fn apply(&self, initial: &[Complex64]) -> Result<Evolved> {
        if initial.len() != self.basis.dim() {
            return Err(Error::Domain(format!(
                "state has {} components, basis has {}",
                initial.len(),
                self.basis.dim()
            )));
        }
        let touched: Vec<usize> = (0..self.generator.len())
            .filter(|&b| self.generator[b].states.iter().any(|&i| initial[i].norm_sqr() != 0.0))
            .collect();
        let images: Vec<(usize, nalgebra::DVector<Complex64>)> = touched
            .par_iter()
            .map(|&b| {
                let block = &self.generator[b];
                let exp = self.cache[b].get_or_init(|| expm(&block.matrix));
                let local =
                    nalgebra::DVector::from_iterator(block.states.len(), block.states.iter().map(|&i| initial[i]));
                (b, exp * local)
            })
            .collect();
        let mut out = self.basis.zero_vector();
        for (b, image) in images {
            for (&i, c) in self.generator[b].states.iter().zip(image.iter()) {
                out[i] = *c;
            }
        }
        let norm_in: f64 = initial.iter().map(|c| c.norm_sqr()).sum();
        let norm_out: f64 = out.iter().map(|c| c.norm_sqr()).sum();
        let norm_leak = (norm_out - norm_in).abs();
        let edge_weight = self.basis.edge_weight(&out);
        let mut warnings = Vec::new();
        if norm_leak > LEAK_WARNING {
            warnings.push(format!("truncation leak: norm changed by {norm_leak:.3e}"));
        }
        if edge_weight > LEAK_WARNING {
            warnings.push(format!(
                "edge guard: {edge_weight:.3e} probability near the window edge"
            ));
        }
        Ok(Evolved {
            state: out,
            norm_leak,
            edge_weight,
            warnings,
        })
    }
}

/// `exp(G) · initial`.
pub fn apply_smatrix(gen: &GeneratorMatrix, initial: &[Complex64]) -> Result<Evolved> {
    gen.propagator().apply(initial)
}

fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|c| c.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential: scale to `‖A/2^s‖₁ ≤ 1/2`, Taylor to degree 20, square back.
///
/// Truncation error of the core is below `0.5²¹/21! ≈ 1e-26` relative.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let norm = one_norm(a);
    if norm == 0.0 {
        return DMatrix::identity(n, n);
    }
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / Complex64::new(2f64.powi(squarings as i32), 0.0);
    let mut result = DMatrix::<Complex64>::identity(n, n);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    for k in 1..=20 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Amplitudes `c_{s,k}` from two consecutive passages, plus diagnostics.
#[derive(Debug, Clone)]
pub struct TwoElectronRun {
    pub grid: JointAmplitudeGrid,
    /// Probability found off the `n = s − k` shell (should be zero).
    pub off_shell_weight: f64,
    pub norm_leak: f64,
    pub edge_weight: f64,
    pub warnings: Vec<String>,
}

/// First electron passes with `α₁` through an empty mode; the second passes
/// with `α₂`, its index as a spectator label on the first.
pub fn two_electron_oracle(alpha1: Complex64, alpha2: Complex64, basis: TruncatedBasis) -> Result<TwoElectronRun> {
    let (j2_lo, j2_hi) = basis
        .second_electron_range
        .ok_or_else(|| Error::Domain("two-electron oracle needs a second electron window".into()))?;
    let first = build_generator(basis, alpha1)?;
    let after_first = apply_smatrix(&first, &basis.fock_state(0, 0)?)?;

    let second_basis = TruncatedBasis::new(j2_lo, j2_hi, basis.photon_max)?;
    let second = build_generator(second_basis, alpha2)?.propagator();

    let (j1_lo, j1_hi) = basis.electron_range;
    let s_top = -j1_lo;
    let n_max = basis.photon_max as i64;
    let mut amplitudes = std::collections::HashMap::new();
    let mut norm_leak = after_first.norm_leak;
    let mut edge_weight = after_first.edge_weight;
    let mut on_shell = 0.0;
    let mut total = 0.0;
    let mut warnings = after_first.warnings.clone();
    for j1 in j1_lo..=j1_hi {
        let photons: Vec<Complex64> = (0..=n_max)
            .map(|n| after_first.state[basis.index(j1, n).expect("inside window")])
            .collect();
        if photons.iter().all(|c| c.norm_sqr() == 0.0) {
            continue;
        }
        let initial = second_basis.photon_product(0, &photons)?;
        let evolved = second.apply(&initial)?;
        norm_leak += evolved.norm_leak;
        edge_weight += evolved.edge_weight;
        for (idx, c) in evolved.state.iter().enumerate() {
            let p = c.norm_sqr();
            if p == 0.0 {
                continue;
            }
            total += p;
            let (j2, n) = second_basis.state(idx);
            let s = -j1;
            if n == s - j2 {
                on_shell += p;
                amplitudes.insert((s, j2), *c);
            }
        }
    }
    for w in [&norm_leak, &edge_weight] {
        if *w > LEAK_WARNING {
            warnings.push(format!("two-electron truncation diagnostic {w:.3e}"));
        }
    }
    let mut meta = Metadata::new();
    meta.insert("family".into(), "two_electron_oracle".into());
    meta.insert("alpha1_re".into(), alpha1.re.to_string());
    meta.insert("alpha1_im".into(), alpha1.im.to_string());
    meta.insert("alpha2_re".into(), alpha2.re.to_string());
    meta.insert("alpha2_im".into(), alpha2.im.to_string());
    let grid = JointAmplitudeGrid::from_fn(
        Axis::new(AxisKind::Electron1Loss, 0, s_top),
        Axis::new(AxisKind::ElectronGain, j2_lo, j2_hi),
        meta,
        |s, k| Ok(amplitudes.get(&(s, k)).copied().unwrap_or(Complex64::new(0.0, 0.0))),
    )?;
    Ok(TwoElectronRun {
        grid,
        off_shell_weight: total - on_shell,
        norm_leak,
        edge_weight,
        warnings,
    })
}

/// Single passage from `|E_0⟩ ⊗ |β⟩`, returned as a `(n, k)` grid.
pub fn single_passage_oracle(
    alpha: Complex64,
    beta: Complex64,
    basis: TruncatedBasis,
) -> Result<(JointAmplitudeGrid, Evolved)> {
    let gen = build_generator(basis, alpha)?;
    let evolved = apply_smatrix(&gen, &basis.coherent_product(0, beta)?)?;
    let mut meta = Metadata::new();
    meta.insert("family".into(), "pinem_oracle".into());
    meta.insert("alpha_re".into(), alpha.re.to_string());
    meta.insert("alpha_im".into(), alpha.im.to_string());
    meta.insert("beta_re".into(), beta.re.to_string());
    meta.insert("beta_im".into(), beta.im.to_string());
    let grid = basis.to_photon_electron_grid(&evolved.state, meta)?;
    Ok((grid, evolved))
}

/// Closed form against the oracle on one parameter set.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct OracleReport {
    pub family: String,
    pub basis_states: usize,
    pub cells_compared: usize,
    pub max_abs_error: f64,
    pub norm_leak: f64,
    pub edge_weight: f64,
    pub off_shell_weight: f64,
    pub warnings: Vec<String>,
}

impl OracleReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_abs_error < tol
    }
}

/// Cells where either side exceeds this magnitude are compared.
pub const COMPARE_FLOOR: f64 = 1e-12;

/// Poisson amplitudes against `exp(G)|E_0, 0⟩`.
pub fn check_eels(alpha: Complex64) -> Result<OracleReport> {
    let basis = TruncatedBasis::for_single(alpha, Complex64::new(0.0, 0.0));
    let (grid, evolved) = single_passage_oracle(alpha, Complex64::new(0.0, 0.0), basis)?;
    let mut max_err = 0.0f64;
    let mut cells = 0;
    for (n, k, c) in grid.cells() {
        let exact = if n == -k {
            crate::interactions::eels_amplitude(alpha, n)?
        } else {
            Complex64::new(0.0, 0.0)
        };
        max_err = max_err.max((c - exact).norm());
        cells += 1;
    }
    Ok(OracleReport {
        family: "eels".into(),
        basis_states: basis.dim(),
        cells_compared: cells,
        max_abs_error: max_err,
        norm_leak: evolved.norm_leak,
        edge_weight: evolved.edge_weight,
        off_shell_weight: 0.0,
        warnings: evolved.warnings,
    })
}

/// Exact PINEM coefficients against `exp(G)|E_0⟩|β⟩`.
pub fn check_pinem(alpha: Complex64, beta: Complex64) -> Result<OracleReport> {
    let basis = TruncatedBasis::for_single(alpha, beta);
    let (grid, evolved) = single_passage_oracle(alpha, beta, basis)?;
    let mut max_err = 0.0f64;
    let mut cells = 0;
    for (n, k, c) in grid.cells() {
        let exact = crate::interactions::pinem_coefficient(alpha, beta, n as u64, k)?;
        if c.norm() > COMPARE_FLOOR || exact.norm() > COMPARE_FLOOR {
            max_err = max_err.max((c - exact).norm());
            cells += 1;
        }
    }
    Ok(OracleReport {
        family: "pinem".into(),
        basis_states: basis.dim(),
        cells_compared: cells,
        max_abs_error: max_err,
        norm_leak: evolved.norm_leak,
        edge_weight: evolved.edge_weight,
        off_shell_weight: 0.0,
        warnings: evolved.warnings,
    })
}

/// Two-electron coefficients against two consecutive oracle passages.
pub fn check_two_electron(alpha1: Complex64, alpha2: Complex64) -> Result<OracleReport> {
    let basis = TruncatedBasis::for_two_electrons(alpha1, alpha2);
    let run = two_electron_oracle(alpha1, alpha2, basis)?;
    let mut max_err = 0.0f64;
    let mut cells = 0;
    for (s, k, c) in run.grid.cells() {
        let exact = crate::interactions::two_electron_coefficient(alpha1, alpha2, s as u64, k)?;
        if c.norm() > COMPARE_FLOOR || exact.norm() > COMPARE_FLOOR {
            max_err = max_err.max((c - exact).norm());
            cells += 1;
        }
    }
    let second = basis
        .second_electron_range
        .map(|(lo, hi)| (hi - lo + 1) as usize)
        .unwrap_or(0);
    Ok(OracleReport {
        family: "two_electron".into(),
        basis_states: basis.dim() + second * (basis.photon_max as usize + 1),
        cells_compared: cells,
        max_abs_error: max_err,
        norm_leak: run.norm_leak,
        edge_weight: run.edge_weight,
        off_shell_weight: run.off_shell_weight,
        warnings: run.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn im(v: f64) -> Complex64 {
        Complex64::new(0.0, v)
    }

    #[test]
    fn zero_coupling_gives_zero_generator_and_identity() {
        let basis = TruncatedBasis::new(-3, 3, 4).unwrap();
        let gen = build_generator(basis, Complex64::new(0.0, 0.0)).unwrap();
        assert!(gen.to_dense().unwrap().iter().all(|c| c.norm() == 0.0));
        let v = basis.coherent_product(0, Complex64::new(0.7, 0.2)).unwrap();
        let out = apply_smatrix(&gen, &v).unwrap();
        assert_eq!(out.state, v);
    }

    #[test]
    fn single_excitation_block() {
        let basis = TruncatedBasis::new(-1, 0, 1).unwrap();
        let alpha = im(1.0);
        let g = build_generator(basis, alpha).unwrap().to_dense().unwrap();
        let a = basis.index(0, 0).unwrap();
        let b = basis.index(-1, 1).unwrap();
        assert_eq!(g[(b, a)], im(1.0));
        assert_eq!(g[(a, b)], -(-im(1.0)));
        let nonzero = g.iter().filter(|c| c.norm() > 0.0).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn band_rule_column_weights() {
        let basis = TruncatedBasis::new(-6, 6, 10).unwrap();
        let alpha = Complex64::new(0.3, -0.4);
        let gen = build_generator(basis, alpha).unwrap();
        let g = gen.to_dense().unwrap();
        for j in -4..=4 {
            for n in 0..9 {
                let col = basis.index(j, n).unwrap();
                let w: f64 = g.column(col).iter().map(|c| c.norm_sqr()).sum();
                let expect = alpha.norm_sqr() * (2 * n + 1) as f64;
                assert!((w - expect).abs() < 1e-14, "j={j} n={n}");
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let basis = TruncatedBasis::new(-100, 100, 300).unwrap();
        assert!(matches!(
            build_generator(basis, im(0.1)),
            Err(Error::BasisTooLarge { .. })
        ));
    }

    #[test]
    fn window_must_contain_origin() {
        assert!(TruncatedBasis::new(1, 3, 2).is_err());
        assert!(TruncatedBasis::new(-3, -1, 2).is_err());
    }

    #[test]
    fn expm_of_rotation() {
        let t = 2.7;
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(-t, 0.0),
                Complex64::new(t, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        let e = expm(&a);
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-14);
        assert!((e[(1, 0)].re - t.sin()).abs() < 1e-14);
    }

    #[test]
    fn leak_is_reported_for_tight_window() {
        let basis = TruncatedBasis::new(-2, 2, 2).unwrap();
        let gen = build_generator(basis, im(-1.5)).unwrap();
        let out = apply_smatrix(&gen, &basis.fock_state(0, 0).unwrap()).unwrap();
        assert!(out.edge_weight > 1e-8);
        assert!(!out.warnings.is_empty());
    }
}
