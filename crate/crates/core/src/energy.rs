//! Box counts, the linearization gap, the energy-increment decomposition,
//! the popular-difference pipeline and the one-dimensional lift.

use crate::config::{validate_config, ConfigSpec};
use crate::counting::{best_popular_difference, best_popular_difference_q, lambda_general, popular_count_q, shift_of};
use crate::error::{HofaError, Result};
use crate::grid::{BoxSpec, GridFunction};
use crate::numeric::{int_root, is_perfect_power, pairwise, tree_sum};
use crate::partition::{axis_energy, cond_expect_along, ApPartition, Atom, Partition};
use crate::set::SetIndicator;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

const RANGE_TOL: f64 = 1e-12;

fn check_unit_valued(f: &GridFunction) -> Result<()> {
    if let Some(v) = f
        .values()
        .iter()
        .find(|v| v.im.abs() > RANGE_TOL || v.re < -RANGE_TOL || v.re > 1.0 + RANGE_TOL)
    {
        return Err(HofaError::invalid(format!("value {v} outside [0, 1]")));
    }
    Ok(())
}

fn mean_real(f: &GridFunction) -> f64 {
    f.mean().re
}

fn product_average(f: &GridFunction, factors: &[GridFunction]) -> f64 {
    let terms: Vec<f64> = (0..f.box_spec().len())
        .into_par_iter()
        .map(|idx| {
            let x = f.box_spec().point(idx);
            factors.iter().fold(f.at(idx), |acc, g| acc * g.get(&x)).re
        })
        .collect();
    pairwise(&terms) / f.box_spec().len() as f64
}

/// `E_{x,x′} f(x) Π_j f(x + (x′_j − x_j)e_j)` over the box of `f`.
pub fn box_count(f: &GridFunction) -> Result<f64> {
    check_unit_valued(f)?;
    let dims = f.box_spec().dims().to_vec();
    let lines = (0..f.n())
        .map(|j| cond_expect_along(f, j, &ApPartition::intervals(dims[j])?, dims[j]))
        .collect::<Result<Vec<_>>>()?;
    Ok(product_average(f, &lines))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CondBoxCount {
    /// `E_x f(x) Π_i E(f_{x̂^i} | B_{(q_iL_i, q_i)})(x_i)`.
    pub value: f64,
    /// `(E f)^{n+1}`.
    pub power: f64,
    /// The same value assembled cell by cell from products of atoms.
    pub expansion: f64,
    /// `(ΠL/ΠN) Σ_cells (cell mean)^{n+1}`.
    pub cell_power_sum: f64,
    /// `(ΠL/ΠN) · #cells`.
    pub weight_total: f64,
}

fn axis_atoms(p: &ApPartition, n: u64) -> Vec<Atom> {
    let mut atoms: Vec<Atom> = Vec::new();
    for x in 1..=n as i64 {
        let a = p.atom(x);
        if !atoms.iter().any(|b| b.start == a.start) {
            atoms.push(a);
        }
    }
    atoms
}

/// Box count and mean of `f` restricted to the product of `atoms`, with the
/// normalization `Π len`.
fn cell_terms(f: &GridFunction, atoms: &[&Atom]) -> (f64, f64) {
    let n = atoms.len();
    let lens: Vec<usize> = atoms.iter().map(|a| a.len as usize).collect();
    let cell = BoxSpec::new(lens.iter().map(|&l| l as u64).collect()).unwrap();
    let vals: Vec<f64> = cell
        .points()
        .map(|k| {
            let x: Vec<i64> = (0..n).map(|i| atoms[i].start + (k[i] - 1) * atoms[i].step).collect();
            f.get(&x).re
        })
        .collect();
    let strides = cell.strides();
    let size = vals.len() as f64;
    let mut line_means = vec![vec![0.0; vals.len()]; n];
    for (j, means) in line_means.iter_mut().enumerate() {
        let st = strides[j] as usize;
        for (idx, k) in cell.points().enumerate() {
            if k[j] != 1 {
                continue;
            }
            let s: f64 = (0..lens[j]).map(|t| vals[idx + t * st]).sum();
            for t in 0..lens[j] {
                means[idx + t * st] = s / lens[j] as f64;
            }
        }
    }
    let bc = (0..vals.len())
        .map(|idx| line_means.iter().fold(vals[idx], |acc, m| acc * m[idx]))
        .sum::<f64>()
        / size;
    (bc, vals.iter().sum::<f64>() / size)
}

/// `E_x f(x) Π_i E(f_{x̂^i} | B_{(q_iL_i, q_i)})(x_i)` together with its
/// cell-by-cell expansion and the power sum that expansion is compared with.
pub fn cond_box_count(f: &GridFunction, q: &[u64], l: &[u64]) -> Result<CondBoxCount> {
    check_unit_valued(f)?;
    let n = f.n();
    if q.len() != n || l.len() != n {
        return Err(HofaError::invalid("one (q_i, L_i) pair per axis"));
    }
    let dims = f.box_spec().dims().to_vec();
    let parts = (0..n).map(|i| ApPartition::new(q[i], l[i])).collect::<Result<Vec<_>>>()?;
    let factors = (0..n)
        .map(|i| cond_expect_along(f, i, &parts[i], dims[i]))
        .collect::<Result<Vec<_>>>()?;
    let value = product_average(f, &factors);

    let atoms: Vec<Vec<Atom>> = (0..n).map(|i| axis_atoms(&parts[i], dims[i])).collect();
    let cells = BoxSpec::new(atoms.iter().map(|a| a.len() as u64).collect())?;
    let weight = l.iter().map(|&v| v as f64).product::<f64>() / dims.iter().map(|&v| v as f64).product::<f64>();
    let terms: Vec<(f64, f64)> = cells
        .points()
        .map(|c| {
            let chosen: Vec<&Atom> = (0..n).map(|i| &atoms[i][c[i] as usize - 1]).collect();
            cell_terms(f, &chosen)
        })
        .collect();
    let expansion = weight * tree_sum(terms.iter().map(|t| t.0));
    let cell_power_sum = weight * tree_sum(terms.iter().map(|t| t.1.powi(n as i32 + 1)));
    Ok(CondBoxCount {
        value,
        power: mean_real(f).powi(n as i32 + 1),
        expansion,
        cell_power_sum,
        weight_total: weight * cells.len() as f64,
    })
}

/// `F_i(x) = E(f_{x̂^i} | B_{(q^{m_i}L^{m_i}, q^{m_i})})(x_i)` on the box of `f`
/// with side `i` doubled.
fn approximants(fs: &[&GridFunction], parts: &[ApPartition]) -> Result<Vec<GridFunction>> {
    fs.iter()
        .enumerate()
        .map(|(i, f)| cond_expect_along(f, i, &parts[i], 2 * f.box_spec().dim(i)))
        .collect()
}

fn power_partition(q: u64, l: u64, k: u32) -> Result<ApPartition> {
    let qk = shift_of(q, 1, k).ok_or_else(|| HofaError::Overflow(format!("{q}^{k}")))?;
    let lk = shift_of(l, 1, k).ok_or_else(|| HofaError::Overflow(format!("{l}^{k}")))?;
    ApPartition::new(qk, lk)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizationReport {
    /// `Λ_{q,M,N;m}(f, F_1, …, F_n)`.
    pub lambda: f64,
    /// The same average with every `F_i` read at `x` instead of the shifted point.
    pub frozen: f64,
    pub gap: f64,
    /// `Σ_i 4(M/L)^{m_i}`.
    pub bound: f64,
    /// Per axis, `E_{x̂^i, r} N_i^{−1} Σ_{x_i} |F_i(x + (qr)^{m_i}e_i) − F_i(x)|`.
    pub axis_errors: Vec<f64>,
    /// `(E f)^{n+1} − δ/2`.
    pub display_lower: f64,
}

impl LinearizationReport {
    pub fn holds(&self) -> bool {
        self.gap <= self.bound + 1e-12
    }
}

/// Measures the cost of freezing the shifts inside the conditional
/// expectations of `Λ_{q,M,N;m}(f, F_1, …, F_n)`.
pub fn linearization_gap(f: &GridFunction, spec: &ConfigSpec, l: u64, delta: f64) -> Result<LinearizationReport> {
    check_unit_valued(f)?;
    let report = validate_config(spec);
    if let Some(c) = report.failures().next() {
        return Err(HofaError::precondition(format!("{}: {}", c.name, c.detail)));
    }
    if f.box_spec() != &spec.bx {
        return Err(HofaError::invalid("f must live on the configuration box"));
    }
    let n = spec.n();
    if !(delta > 0.0 && delta < 1.0) {
        return Err(HofaError::invalid("δ must lie in (0, 1)"));
    }
    if (8 * n as u64 * spec.big_m) as f64 > delta * l as f64 {
        return Err(HofaError::precondition(format!(
            "M = {} exceeds (δ/8n)L = {}",
            spec.big_m,
            delta * l as f64 / (8 * n) as f64
        )));
    }
    let parts = spec
        .m
        .iter()
        .map(|&k| power_partition(spec.q, l, k))
        .collect::<Result<Vec<_>>>()?;
    let copies: Vec<&GridFunction> = vec![f; n];
    let big_f = approximants(&copies, &parts)?;
    let mut fs = vec![f.clone()];
    fs.extend(big_f.iter().cloned());
    let lambda = lambda_general(&fs, spec)?.re;
    let frozen = product_average(f, &big_f);

    let nb = spec.bx.len() as f64;
    let axis_errors = (0..n)
        .map(|i| {
            let per_r: Vec<f64> = (1..=spec.big_m)
                .map(|r| {
                    let s = shift_of(spec.q, r, spec.m[i]).unwrap_or(u64::MAX / 2) as i64;
                    tree_sum(spec.bx.points().map(|mut x| {
                        let a = big_f[i].get(&x);
                        x[i] += s;
                        (big_f[i].get(&x) - a).norm()
                    }))
                })
                .collect();
            pairwise(&per_r) / (nb * spec.big_m as f64)
        })
        .collect();
    let ratio = spec.big_m as f64 / l as f64;
    Ok(LinearizationReport {
        lambda,
        frozen,
        gap: (lambda - frozen).abs(),
        bound: spec.m.iter().map(|&k| 4.0 * ratio.powi(k as i32)).sum(),
        axis_errors,
        display_lower: mean_real(f).powi(n as i32 + 1) - delta / 2.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParams {
    pub q_max: u64,
    /// Gain threshold `τ`: an oracle step must raise the axis-`i` energy by `τ N_i`.
    pub tau: f64,
    /// Scale shrink factor `γ` with `L_{t+1} = ⌊γ L_t⌋`; `None` means `δ/(16n)`.
    pub gamma: Option<f64>,
    /// Difference range `M_t = ⌊δ L_t / divisor⌋`; `None` means `8n`.
    pub range_divisor: Option<f64>,
    /// Lower cap on iterations; the default cap is `n ⌈2/τ⌉`.
    pub iter_cap: Option<usize>,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            q_max: 6,
            tau: 0.05,
            gamma: None,
            range_divisor: None,
            iter_cap: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionStatus {
    Converged,
    IterationCap,
    ScaleExhausted,
    /// No admissible `(q′, i)` raised an energy by `τ N_i`, although the
    /// approximation still fails.
    NoGain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// 0-based axis whose energy was incremented.
    pub axis: usize,
    pub energy_before: f64,
    pub energy_after: f64,
    /// Modulus factor `q_{t+1}` chosen by the oracle.
    pub q_step: u64,
    /// Accumulated modulus and scale after this step.
    pub q: u64,
    pub l: u64,
    /// Approximation error that triggered the step.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionResult {
    pub q: u64,
    pub l: u64,
    /// `⌊δ L / divisor⌋` at the final stage.
    pub big_m: u64,
    pub status: DecompositionStatus,
    /// `|Λ(f_0, f_1, …) − Λ(f_0, F_1, …)|` at the final stage, when evaluated.
    pub gap: Option<f64>,
    pub lambda: Option<Complex64>,
    pub lambda_approx: Option<Complex64>,
    pub iterations: usize,
    pub cap: usize,
    pub trace: Vec<TraceEntry>,
    #[serde(skip)]
    pub approximants: Vec<GridFunction>,
}

fn check_family(fs: &[GridFunction], m: &[u32]) -> Result<BoxSpec> {
    let n = m.len();
    if fs.len() != n + 1 {
        return Err(HofaError::invalid(format!("expected {} functions", n + 1)));
    }
    let bx = fs[0].box_spec().clone();
    if fs.iter().any(|f| f.box_spec() != &bx) {
        return Err(HofaError::invalid("all functions must share one box"));
    }
    if fs.iter().any(|f| f.max_abs() > 1.0 + RANGE_TOL) {
        return Err(HofaError::invalid("functions must be 1-bounded"));
    }
    let report = validate_config(&ConfigSpec::new(m.to_vec(), bx.dims().to_vec(), 1, 1)?);
    if let Some(c) = report.failures().find(|c| c.name != "range condition") {
        return Err(HofaError::precondition(format!("{}: {}", c.name, c.detail)));
    }
    Ok(bx)
}

/// Runs the energy-increment process with an exhaustive increment oracle.
pub fn energy_increment(fs: &[GridFunction], m: &[u32], delta: f64, params: &EnergyParams) -> Result<DecompositionResult> {
    let bx = check_family(fs, m)?;
    let n = m.len();
    if !(delta > 0.0 && delta < 1.0) {
        return Err(HofaError::invalid("δ must lie in (0, 1)"));
    }
    if !(params.tau > 0.0) || params.q_max == 0 {
        return Err(HofaError::invalid("need τ > 0 and Q_max >= 1"));
    }
    let gamma = params.gamma.unwrap_or(delta / (16 * n) as f64);
    let divisor = params.range_divisor.unwrap_or((8 * n) as f64);
    if !(gamma > 0.0 && gamma < 1.0) || !(divisor > 0.0) {
        return Err(HofaError::invalid("need γ in (0, 1) and a positive range divisor"));
    }
    let default_cap = n * (2.0 / params.tau).ceil() as usize;
    let cap = params.iter_cap.map_or(default_cap, |c| c.min(default_cap));
    let dims = bx.dims().to_vec();
    let subs: Vec<&GridFunction> = fs[1..].iter().collect();

    let mut q = 1u64;
    let mut l = int_root(dims[n - 1], m[n - 1]);
    let mut parts: Vec<ApPartition> = dims.iter().map(|&d| ApPartition::intervals(d)).collect::<Result<_>>()?;
    let mut trace = Vec::new();
    let mut iterations = 0usize;
    loop {
        let big_m = (delta * l as f64 / divisor).floor() as u64;
        let mut result = DecompositionResult {
            q,
            l,
            big_m,
            status: DecompositionStatus::ScaleExhausted,
            gap: None,
            lambda: None,
            lambda_approx: None,
            iterations,
            cap,
            trace: trace.clone(),
            approximants: Vec::new(),
        };
        if big_m == 0 {
            return Ok(result);
        }
        let approx = approximants(&subs, &parts)?;
        let spec = ConfigSpec::new(m.to_vec(), dims.clone(), q, big_m)?;
        let full = lambda_general(fs, &spec)?;
        let mut with_f = vec![fs[0].clone()];
        with_f.extend(approx.iter().cloned());
        let lin = lambda_general(&with_f, &spec)?;
        let gap = (full - lin).norm();
        result.gap = Some(gap);
        result.lambda = Some(full);
        result.lambda_approx = Some(lin);
        result.approximants = approx;
        if gap <= delta {
            result.status = DecompositionStatus::Converged;
            return Ok(result);
        }
        if iterations >= cap {
            result.status = DecompositionStatus::IterationCap;
            return Ok(result);
        }
        let next_l = (gamma * l as f64).floor() as u64;
        if next_l == 0 || ((delta * next_l as f64 / divisor).floor() as u64) == 0 {
            return Ok(result);
        }
        let before: Vec<f64> = (0..n)
            .map(|i| axis_energy(subs[i], i, &parts[i]))
            .collect::<Result<_>>()?;
        let mut chosen = None;
        'search: for qs in 1..=params.q_max {
            let Some(qq) = q.checked_mul(qs) else { break };
            for i in 0..n {
                let p = power_partition(qq, next_l, m[i])?;
                let after = axis_energy(subs[i], i, &p)?;
                if after - before[i] >= params.tau * dims[i] as f64 {
                    chosen = Some((qs, i, after));
                    break 'search;
                }
            }
        }
        let Some((qs, axis, after)) = chosen else {
            result.status = DecompositionStatus::NoGain;
            return Ok(result);
        };
        q *= qs;
        l = next_l;
        parts = m.iter().map(|&k| power_partition(q, l, k)).collect::<Result<_>>()?;
        iterations += 1;
        trace.push(TraceEntry {
            iteration: iterations,
            axis,
            energy_before: before[axis],
            energy_after: after,
            q_step: qs,
            q,
            l,
            gap,
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineParams {
    pub energy: EnergyParams,
    /// Reporting divisor for the count threshold; `None` means `2^{n+1}`.
    pub divisor: Option<f64>,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            energy: EnergyParams::default(),
            divisor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub q: u64,
    pub l: u64,
    /// Range of multipliers searched: the difference is `q·r` with `r ≤ big_m`.
    pub big_m: u64,
    pub lambda: Option<f64>,
    /// `μ_A^{n+1}`.
    pub density_power: f64,
    pub vacuous: bool,
    pub fallback: bool,
    pub decomposition: Option<DecompositionStatus>,
    /// `(μ_A^{n+1} − δ) |box| / divisor`.
    pub threshold: f64,
    pub meets_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineResult {
    /// The difference: configurations are `x + r^{m_i} e_i`.
    pub r: u64,
    pub count: u64,
    pub certificate: Certificate,
}

/// Locates a popular difference in `A` through the energy-increment route,
/// falling back to a direct search over `r ≤ N_n^{1/m_n}` when the
/// decomposition does not converge.
pub fn popular_difference_pipeline(a: &SetIndicator, m: &[u32], delta: f64, params: &PipelineParams) -> Result<PipelineResult> {
    if a.is_empty() {
        return Err(HofaError::precondition("A is empty"));
    }
    let bx = a.box_spec().clone();
    if bx.n() != m.len() {
        return Err(HofaError::invalid("exponent tuple length must match the box dimension"));
    }
    let n = m.len();
    let density_power = a.density().powi(n as i32 + 1);
    let divisor = params.divisor.unwrap_or((1u64 << (n + 1)) as f64);
    let threshold = (density_power - delta) * bx.len() as f64 / divisor;
    let l0 = int_root(bx.dim(n - 1), m[n - 1]).max(1);
    let finish = |r: u64, count: u64, q: u64, l: u64, big_m: u64, lambda, vacuous, fallback, decomposition| PipelineResult {
        r,
        count,
        certificate: Certificate {
            q,
            l,
            big_m,
            lambda,
            density_power,
            vacuous,
            fallback,
            decomposition,
            threshold,
            meets_threshold: count as f64 >= threshold,
        },
    };
    if density_power <= delta {
        let best = best_popular_difference(a, m, l0)?;
        return Ok(finish(best.r, best.count, 1, l0, l0, None, true, false, None));
    }
    let chi = a.to_grid()?;
    let fs = vec![chi; n + 1];
    let dec = energy_increment(&fs, m, delta, &params.energy)?;
    if dec.status == DecompositionStatus::Converged {
        let best = best_popular_difference_q(a, m, dec.q, dec.big_m)?;
        let r = dec.q * best.r;
        debug_assert_eq!(popular_count_q(a, m, 1, r), best.count);
        return Ok(finish(r, best.count, dec.q, dec.l, dec.big_m, dec.lambda.map(|z| z.re), false, false, Some(dec.status)));
    }
    let best = best_popular_difference(a, m, l0)?;
    Ok(finish(best.r, best.count, 1, l0, l0, dec.lambda.map(|z| z.re), false, true, Some(dec.status)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lift {
    #[serde(skip)]
    pub set: SetIndicator,
    pub size: u64,
    /// `(|A| − (n−1) N^{m_{n−1}/m_n}) · N^{(m_1+…+m_{n−1})/m_n}`.
    pub lower_bound: i128,
}

impl Lift {
    pub fn holds(&self) -> bool {
        self.size as i128 >= self.lower_bound
    }
}

/// `A′ = {x ∈ Π[N^{m_i/m_n}] : x_1 + … + x_n ∈ A}` for `A ⊂ [N]`.
pub fn lift_1d(a: &SetIndicator, m: &[u32]) -> Result<Lift> {
    crate::config::check_exponents(m)?;
    if a.box_spec().n() != 1 {
        return Err(HofaError::invalid("A must be a subset of [N]"));
    }
    let big_n = a.box_spec().dim(0);
    let n = m.len();
    if !is_perfect_power(big_n, m[n - 1]) {
        return Err(HofaError::invalid(format!("N = {big_n} has no integral {}-th root", m[n - 1])));
    }
    let root = int_root(big_n, m[n - 1]);
    let dims = m
        .iter()
        .map(|&k| shift_of(root, 1, k).ok_or_else(|| HofaError::Overflow("lifted box".into())))
        .collect::<Result<Vec<_>>>()?;
    let bx = BoxSpec::new(dims.clone())?;
    let set = SetIndicator::from_predicate(bx, |x| a.contains(&[x.iter().sum::<i64>()]))?;
    let tail = if n >= 2 { (n as i128 - 1) * dims[n - 2] as i128 } else { 0 };
    let vol: i128 = dims[..n - 1].iter().map(|&d| d as i128).product();
    Ok(Lift {
        size: set.count(),
        lower_bound: (a.count() as i128 - tail) * vol,
        set,
    })
}
