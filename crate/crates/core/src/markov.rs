//! Absorbing-chain analysis of the slowest two-outlier configurations.
//!
//! The slowest starts for the ring process have every node on a common gap
//! `l` except one node a slot above and one a slot below. Until the two
//! outliers meet across the active edge and compress, which settles the
//! schedule in one stroke, every interaction is a null or a swap, so the
//! whole evolution lives on a finite chain over outlier/edge configurations.
//!
//! A configuration is `(offset, edge_label)`: the position of the high
//! outlier relative to the low one, and the label of the active edge counted
//! from the edge that enters the low outlier. That gives `N * (N - 1)`
//! transient states plus one absorbing state. Expected steps to absorption
//! are computed three independent ways and cross-checked:
//!
//! 1. [`OutlierChain::absorption_solve`]: build the transition structure
//!    mechanically from [`InteractionDistribution`] and solve the standard
//!    absorbing-chain linear system by dense Gaussian elimination.
//! 2. [`closed_form_absorption_time`]: evaluate the closed-form mean, which
//!    grows as `g(alpha) * N^3` with `g(alpha) = (1+alpha)/(24(1-alpha))`.
//! 3. [`recursion_check`]: evaluate the recurrence solution of the chain's
//!    per-state equations and confirm it reproduces the solver's values.
//!
//! The mean absorption time also feeds [`absorption_upper_bound`], the
//! global (and deliberately pessimistic) bound on settling time from any
//! start: the squared-deviation potential starts below `(L-N)^2 * N / 4` and
//! each compression costs at least 2 of it.

use crate::error::{Error, Result};
use crate::quantizer::InteractionDistribution;
use crate::ring::GapVector;

/// One transient configuration of the two-outlier chain.
///
/// `offset` is the high outlier's position relative to the low one
/// (`1..=n-1`); `edge_label` counts active-edge positions from the edge
/// entering the low outlier (`0..=n-1`), advancing by one each event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OutlierState {
    pub offset: usize,
    pub edge_label: usize,
}

/// Worst-case gap vector: `l + 1` at `hi`, `l - 1` at `lo`, `l` elsewhere
/// (positions 0-indexed). Needs `l >= 2` to keep every gap at least 1.
pub fn worst_case_gap_vector(n: usize, ell: u32, hi: usize, lo: usize) -> Result<GapVector> {
    if n < 3 {
        return Err(Error::InvalidConfig(format!(
            "two outliers need at least 3 nodes, got {n}"
        )));
    }
    if ell < 2 {
        return Err(Error::InvalidConfig(format!(
            "common gap must be at least 2 slots, got {ell}"
        )));
    }
    if hi >= n || lo >= n || hi == lo {
        return Err(Error::InvalidConfig(format!(
            "outlier positions must be distinct and inside 0..{n} (got {hi}, {lo})"
        )));
    }
    let mut gaps = vec![ell; n];
    gaps[hi] = ell + 1;
    gaps[lo] = ell - 1;
    GapVector::new(gaps)
}

/// Concrete ring realization of a chain state: the gap vector (low outlier
/// anchored at position 0) and the active edge index it designates.
pub fn realize_outlier_state(
    n: usize,
    ell: u32,
    state: OutlierState,
) -> Result<(GapVector, usize)> {
    if state.offset == 0 || state.offset >= n || state.edge_label >= n {
        return Err(Error::InvalidConfig(format!(
            "invalid outlier state ({}, {}) for {n} nodes",
            state.offset, state.edge_label
        )));
    }
    let gaps = worst_case_gap_vector(n, ell, state.offset, 0)?;
    let edge = (2 * n - 1 - state.edge_label) % n;
    Ok((gaps, edge))
}

/// Transition structure of the two-outlier chain. `None` targets absorb.
#[derive(Debug, Clone)]
pub struct OutlierChain {
    n: usize,
    alpha: f64,
    transitions: Vec<Vec<(Option<usize>, f64)>>,
}

/// Common gap used to realize states while building the chain; transition
/// probabilities only depend on gap differences, so any value >= 2 gives the
/// same chain.
const BUILD_ELL: u32 = 2;

impl OutlierChain {
    /// Build the chain for `n` nodes mechanically: realize each state as a
    /// concrete gap vector, apply the interaction law to its active pair and
    /// re-identify the successor configuration.
    pub fn build(n: usize, alpha: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidConfig(format!(
                "outlier chain needs at least 3 nodes, got {n}"
            )));
        }
        if !(alpha.is_finite() && 0.0 < alpha && alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        let mut transitions = Vec::with_capacity(n * (n - 1));
        for offset in 1..n {
            for edge_label in 0..n {
                let state = OutlierState { offset, edge_label };
                transitions.push(Self::successors_of(n, alpha, state)?);
            }
        }
        Ok(Self {
            n,
            alpha,
            transitions,
        })
    }

    fn successors_of(
        n: usize,
        alpha: f64,
        state: OutlierState,
    ) -> Result<Vec<(Option<usize>, f64)>> {
        let (gaps, edge) = realize_outlier_state(n, BUILD_ELL, state)?;
        let next_edge = (edge + n - 1) % n;
        let right = (edge + 1) % n;
        let diff = i64::from(gaps.get(edge)) - i64::from(gaps.get(right));
        let law = InteractionDistribution::new(diff, alpha)?;

        let mut successors: Vec<(Option<usize>, f64)> = Vec::with_capacity(2);
        for &(k, p) in law.outcomes() {
            let mut next = gaps.gaps().to_vec();
            next[edge] = (i64::from(gaps.get(right)) + k) as u32;
            next[right] = (i64::from(gaps.get(edge)) - k) as u32;

            let target = if next.iter().all(|&g| g == BUILD_ELL) {
                None
            } else {
                let hi: Vec<usize> = (0..n).filter(|&i| next[i] == BUILD_ELL + 1).collect();
                let lo: Vec<usize> = (0..n).filter(|&i| next[i] == BUILD_ELL - 1).collect();
                if hi.len() != 1 || lo.len() != 1 || next.iter().any(|&g| g.abs_diff(BUILD_ELL) > 1)
                {
                    return Err(Error::ContractViolation(format!(
                        "successor of ({}, {}) is not a two-outlier state: {next:?}",
                        state.offset, state.edge_label
                    )));
                }
                let offset = (hi[0] + n - lo[0]) % n;
                let edge_label = (lo[0] + 2 * n - 1 - next_edge) % n;
                Some((offset - 1) * n + edge_label)
            };

            match successors.iter_mut().find(|(t, _)| *t == target) {
                Some((_, q)) => *q += p,
                None => successors.push((target, p)),
            }
        }
        Ok(successors)
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of transient states, `n * (n - 1)`.
    pub fn num_transient(&self) -> usize {
        self.transitions.len()
    }

    pub fn state_index(&self, state: OutlierState) -> usize {
        assert!(
            state.offset >= 1 && state.offset < self.n && state.edge_label < self.n,
            "state ({}, {}) out of range for {} nodes",
            state.offset,
            state.edge_label,
            self.n
        );
        (state.offset - 1) * self.n + state.edge_label
    }

    pub fn state_at(&self, index: usize) -> OutlierState {
        OutlierState {
            offset: index / self.n + 1,
            edge_label: index % self.n,
        }
    }

    pub fn successors(&self, index: usize) -> &[(Option<usize>, f64)] {
        &self.transitions[index]
    }

    /// Expected steps to absorption from every transient state, by dense
    /// Gaussian elimination on `(I - P) t = 1`.
    pub fn absorption_solve(&self) -> Result<AbsorptionSolution> {
        let s = self.num_transient();
        let mut matrix = vec![0.0f64; s * s];
        let mut rhs = vec![1.0f64; s];
        for (row, succ) in self.transitions.iter().enumerate() {
            matrix[row * s + row] = 1.0;
            for &(target, p) in succ {
                if let Some(col) = target {
                    matrix[row * s + col] -= p;
                }
            }
        }
        solve_dense(&mut matrix, &mut rhs, s)?;

        let mean = rhs.iter().sum::<f64>() / s as f64;
        let max = rhs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(AbsorptionSolution {
            n: self.n,
            expected: rhs,
            mean,
            max,
        })
    }
}

/// Per-state expected steps to absorption, with the aggregates the analysis
/// reports: the uniform mean over all transient states and the maximum.
#[derive(Debug, Clone)]
pub struct AbsorptionSolution {
    n: usize,
    expected: Vec<f64>,
    mean: f64,
    max: f64,
}

impl AbsorptionSolution {
    pub fn expected_steps(&self) -> &[f64] {
        &self.expected
    }

    pub fn expected_from(&self, state: OutlierState) -> f64 {
        assert!(
            state.offset >= 1 && state.offset < self.n && state.edge_label < self.n,
            "state ({}, {}) out of range for {} nodes",
            state.offset,
            state.edge_label,
            self.n
        );
        self.expected[(state.offset - 1) * self.n + state.edge_label]
    }

    /// Uniform mean over the transient states.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn max(&self) -> f64 {
        self.max
    }
}

fn solve_dense(matrix: &mut [f64], rhs: &mut [f64], n: usize) -> Result<()> {
    debug_assert_eq!(matrix.len(), n * n);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&a, &b| {
                matrix[a * n + col]
                    .abs()
                    .total_cmp(&matrix[b * n + col].abs())
            })
            .expect("non-empty range");
        let pivot = matrix[pivot_row * n + col];
        if pivot.abs() < 1e-300 {
            return Err(Error::SingularSystem(format!("zero pivot in column {col}")));
        }
        if pivot_row != col {
            for k in 0..n {
                matrix.swap(col * n + k, pivot_row * n + k);
            }
            rhs.swap(col, pivot_row);
        }
        for row in (col + 1)..n {
            let factor = matrix[row * n + col] / matrix[col * n + col];
            if factor == 0.0 {
                continue;
            }
            matrix[row * n + col] = 0.0;
            for k in (col + 1)..n {
                matrix[row * n + k] -= factor * matrix[col * n + k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in (row + 1)..n {
            acc -= matrix[row * n + k] * rhs[k];
        }
        rhs[row] = acc / matrix[row * n + row];
    }
    Ok(())
}

fn check_chain_params(n: usize, alpha: f64) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidConfig(format!(
            "chain analysis needs at least 3 nodes, got {n}"
        )));
    }
    if !(alpha.is_finite() && 0.0 < alpha && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    Ok(())
}

/// Closed-form mean absorption time of the two-outlier chain (the uniform
/// average over its `n * (n - 1)` starting configurations):
///
/// ```text
///     n^4 (1+a)^2 + n^3 (1+a)^2 + 12 n^2 (1-a)^2
///         - 24 n (a-1)(2a-1) + 24 (1-a)^2
///     -------------------------------------------
///                24 n (1-a)(1+a)
/// ```
///
/// Strictly increasing in `alpha` and asymptotically
/// `g(alpha) * n^3` with `g(alpha) = (1+alpha) / (24 (1-alpha))`.
pub fn closed_form_absorption_time(n: usize, alpha: f64) -> Result<f64> {
    check_chain_params(n, alpha)?;
    let nf = n as f64;
    let up = 1.0 + alpha;
    let down = 1.0 - alpha;
    let numerator = nf.powi(4) * up * up + nf.powi(3) * up * up + 12.0 * nf * nf * down * down
        - 24.0 * nf * (alpha - 1.0) * (2.0 * alpha - 1.0)
        + 24.0 * down * down;
    Ok(numerator / (24.0 * nf * down * up))
}

/// The asymptotic constant `g(alpha)` in `closed_form_absorption_time ~
/// g(alpha) * n^3`.
pub fn absorption_growth_constant(alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && 0.0 < alpha && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    Ok((1.0 + alpha) / (24.0 * (1.0 - alpha)))
}

/// Global upper bound on the expected interactions to settle from any start
/// on `total` slots: mean compression wait times the worst potential budget,
/// `closed_form_absorption_time * (L - N)^2 * N / 8`.
pub fn absorption_upper_bound(n: usize, total: u32, alpha: f64) -> Result<f64> {
    if (total as u64) < n as u64 {
        return Err(Error::InvalidConfig(format!(
            "{n} nodes need at least {n} slots, got {total}"
        )));
    }
    let tbar = closed_form_absorption_time(n, alpha)?;
    let spread = f64::from(total) - n as f64;
    Ok(tbar * spread * spread * n as f64 / 8.0)
}

/// Residuals from evaluating the recurrence solution of the chain equations.
///
/// All residuals are relative to the magnitude of the terms involved.
#[derive(Debug, Clone, Copy)]
pub struct RecursionReport {
    /// Worst residual of the linear per-state equations at the recurrence
    /// values.
    pub system_residual: f64,
    /// Deviation of the recurrence seeds/anchor from their closed forms.
    pub closed_form_residual: f64,
    /// Worst relative mismatch between recurrence values and the per-state
    /// expectations from [`OutlierChain::absorption_solve`].
    pub solver_mismatch: f64,
    /// Maximum of the above.
    pub max_residual: f64,
}

fn rel_residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
}

/// Backward-error residual of one linear equation: the imbalance relative to
/// the magnitude of the terms feeding it, which is what f64 evaluation can
/// actually be held to when the terms cancel.
fn equation_residual(terms: &[f64], rhs: f64) -> f64 {
    let lhs: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum::<f64>() + rhs.abs();
    (lhs - rhs).abs() / scale.max(1.0)
}

/// Evaluate the closed recurrences for the chain's per-state expectations
/// and check them against both the defining linear system and the dense
/// solver.
///
/// The per-state expectations split into three families: `x` values (the
/// active edge just left the high outlier, or mirror-symmetrically is about
/// to enter the low one), `y` values (the edge just reached an outlier) and
/// `z` runs of deterministic null steps between them; every family member
/// covers a mirror-symmetric pair of states. With `rho = (1 - alpha) / 2`:
///
/// ```text
/// y_0 - alpha * y_{n-2} = 1
/// x_k - (1 - rho) y_k - rho x_{n-k-3} = 1 + k rho          (0 <= k <= n-3)
/// y_k - rho y_{k-1} - (1 - rho) x_{n-k-2} = k - (k-1) rho  (1 <= k <= n-2)
/// z_k^l = x_k + l                                          (1 <= l <= n-3-k)
/// ```
///
/// seeded by `y_0 = (alpha (n-2)(n+1) + 2) / (2 (1-alpha))` and
/// `y_{n-2} = n (n-1) / (2 (1-alpha))`.
#[allow(clippy::needless_range_loop)] // indices drive both tables and state labels
pub fn recursion_check(n: usize, alpha: f64) -> Result<RecursionReport> {
    check_chain_params(n, alpha)?;
    let nf = n as f64;
    let rho = (1.0 - alpha) / 2.0;

    let mut x = vec![f64::NAN; n - 2]; // x_0 .. x_{n-3}
    let mut y = vec![f64::NAN; n - 1]; // y_0 .. y_{n-2}
    y[0] = (alpha * (nf - 2.0) * (nf + 1.0) + 2.0) / (2.0 * (1.0 - alpha));
    y[n - 2] = nf * (nf - 1.0) / (2.0 * (1.0 - alpha));

    for k in 1..=(n / 2) {
        let kf = k as f64;
        let f = 1.0 + (kf - 1.0) * rho;
        let d = (nf - kf - 1.0) * (2.0 * rho - 1.0) + f;
        let g = (nf - kf - 1.0) - (nf - kf - 2.0) * rho;

        x[k - 1] = d / (2.0 * (1.0 - rho)) + (y[k - 1] + y[n - k - 1]) / 2.0;
        if n >= k + 2 && n - k - 2 < x.len() {
            x[n - k - 2] = (x[k - 1] - f - (1.0 - rho) * y[k - 1]) / rho;
        }
        if k <= n - 2 {
            y[k] = (kf - (kf - 1.0) * rho) + rho * y[k - 1] + (1.0 - rho) * x[n - k - 2];
        }
        if n >= k + 2 {
            y[n - k - 2] = (y[n - k - 1] - (1.0 - rho) * x[k - 1] - g) / rho;
        }
    }

    // Residuals of the defining equations at the recurrence values.
    let mut system_residual = equation_residual(&[y[0], -alpha * y[n - 2]], 1.0);
    for k in 0..=(n - 3) {
        let kf = k as f64;
        system_residual = system_residual.max(equation_residual(
            &[x[k], -(1.0 - rho) * y[k], -rho * x[n - k - 3]],
            1.0 + kf * rho,
        ));
    }
    for k in 1..=(n - 2) {
        let kf = k as f64;
        system_residual = system_residual.max(equation_residual(
            &[y[k], -rho * y[k - 1], -(1.0 - rho) * x[n - k - 2]],
            kf - (kf - 1.0) * rho,
        ));
    }

    // The independently stated closed form for the first x value.
    let x0_closed = (nf * nf * (alpha + 1.0) * (alpha + 1.0)
        + nf * (3.0 * alpha * alpha - 6.0 * alpha - 1.0)
        - 10.0 * alpha * alpha
        + 4.0 * alpha
        + 6.0)
        / (4.0 * (1.0 + alpha) * (1.0 - alpha));
    let closed_form_residual = rel_residual(x[0], x0_closed);

    // Compare against the dense solver, state by state: each variable covers
    // the mirror-symmetric pair of configurations listed below.
    let chain = OutlierChain::build(n, alpha)?;
    let solution = chain.absorption_solve()?;
    let mut solver_mismatch = 0.0f64;
    let mut check = |value: f64, state: OutlierState| {
        solver_mismatch = solver_mismatch.max(rel_residual(value, solution.expected_from(state)));
    };
    check(
        y[0],
        OutlierState {
            offset: n - 1,
            edge_label: 0,
        },
    );
    check(
        y[0],
        OutlierState {
            offset: 1,
            edge_label: n - 1,
        },
    );
    for k in 1..=(n - 2) {
        check(
            y[k],
            OutlierState {
                offset: k + 1,
                edge_label: n - k - 1,
            },
        );
        check(
            y[k],
            OutlierState {
                offset: n - k - 1,
                edge_label: 0,
            },
        );
    }
    for j in 0..=(n - 3) {
        check(
            x[j],
            OutlierState {
                offset: j + 1,
                edge_label: n - j - 2,
            },
        );
        check(
            x[j],
            OutlierState {
                offset: n - j - 1,
                edge_label: n - 1,
            },
        );
        for l in 1..=(n.saturating_sub(3 + j)) {
            check(
                x[j] + l as f64,
                OutlierState {
                    offset: j + 1,
                    edge_label: n - j - 2 - l,
                },
            );
            check(
                x[j] + l as f64,
                OutlierState {
                    offset: n - j - 1,
                    edge_label: n - 1 - l,
                },
            );
        }
    }

    Ok(RecursionReport {
        system_residual,
        closed_form_residual,
        solver_mismatch,
        max_residual: system_residual
            .max(closed_form_residual)
            .max(solver_mismatch),
    })
}
