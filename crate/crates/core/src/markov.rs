//! Finite Markov chains: validation, exact analysis and sampling.
//!
//! Everything here works on small dense kernels. Stationary distributions
//! and hitting times come from direct LU solves; eigenvalues come from a
//! real Schur decomposition.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ChainError;

/// Tolerance on row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

const STATIONARY_RESIDUAL_TOL: f64 = 1e-12;
const HITTING_RESIDUAL_TOL: f64 = 1e-10;

/// A row-stochastic transition kernel over `n` states.
///
/// Construction only checks shape. Call [`StochasticMatrix::validate`]
/// (or build a [`ChainAnalysis`]) to enforce the probabilistic and
/// ergodicity assumptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct StochasticMatrix {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl StochasticMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ChainError> {
        let n = rows.len();
        if n == 0 {
            return Err(ChainError::Empty);
        }
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(ChainError::NotSquare {
                row,
                len: r.len(),
                expected: n,
            });
        }
        Ok(Self { n, rows })
    }

    /// Convenience for the two-state kernels used throughout the presets:
    /// `p11` is the probability of staying in state 0, `p21` the
    /// probability of moving from state 1 to state 0.
    pub fn two_state(p11: f64, p21: f64) -> Self {
        Self {
            n: 2,
            rows: vec![vec![p11, 1.0 - p11], vec![p21, 1.0 - p21]],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |r, c| self.rows[r][c])
    }

    /// Checks that every row is a probability vector and that the chain is
    /// irreducible and aperiodic.
    pub fn validate(&self) -> Result<(), ChainError> {
        for (x, row) in self.rows.iter().enumerate() {
            for (y, &p) in row.iter().enumerate() {
                if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                    return Err(ChainError::InvalidEntry { row: x, col: y, value: p });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(ChainError::RowNotStochastic { row: x, sum });
            }
        }

        let forward = self.reachable_from(0, false);
        let backward = self.reachable_from(0, true);
        if let Some(state) = (0..self.n).find(|&s| !forward[s] || !backward[s]) {
            return Err(ChainError::Reducible { state });
        }

        let period = self.period();
        if period != 1 {
            return Err(ChainError::Periodic { period });
        }
        Ok(())
    }

    fn reachable_from(&self, start: usize, reverse: bool) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for v in 0..self.n {
                let p = if reverse { self.rows[v][u] } else { self.rows[u][v] };
                if p > 0.0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Period of an irreducible chain: gcd over edges `u -> v` of
    /// `level(u) + 1 - level(v)` for BFS levels from state 0.
    fn period(&self) -> usize {
        let mut level = vec![usize::MAX; self.n];
        let mut queue = std::collections::VecDeque::from([0]);
        level[0] = 0;
        while let Some(u) = queue.pop_front() {
            for v in 0..self.n {
                if self.rows[u][v] > 0.0 && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut g = 0usize;
        for u in 0..self.n {
            for v in 0..self.n {
                if self.rows[u][v] > 0.0 {
                    let d = (level[u] + 1).abs_diff(level[v]);
                    g = gcd(g, d);
                }
            }
        }
        g
    }

    /// Draws the successor of `x` with one uniform draw.
    pub fn sample_next<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        sample_index(&self.rows[x], rng.random::<f64>())
    }
}

impl TryFrom<Vec<Vec<f64>>> for StochasticMatrix {
    type Error = ChainError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Self::new(rows)
    }
}

impl From<StochasticMatrix> for Vec<Vec<f64>> {
    fn from(m: StochasticMatrix) -> Self {
        m.rows
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Inverse-CDF lookup over `probs` in index order for a uniform `u` in
/// `[0, 1)`. Rounding slack at the top end falls on the last state with
/// positive mass.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (y, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return y;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Unique `pi` with `pi P = pi` and `sum(pi) = 1`.
pub fn stationary_distribution(p: &StochasticMatrix) -> Result<Vec<f64>, ChainError> {
    p.validate()?;
    let n = p.len();
    let mut a = p.to_dmatrix().transpose() - DMatrix::<f64>::identity(n, n);
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let lu = a.clone().lu();
    let mut pi = lu.solve(&b).ok_or(ChainError::NumericalFailure("singular stationary system"))?;
    // one round of iterative refinement
    let r = &b - &a * &pi;
    if let Some(d) = lu.solve(&r) {
        pi += d;
    }
    let pi: Vec<f64> = pi.iter().copied().collect();

    let residual = stationary_residual(p, &pi);
    if residual > STATIONARY_RESIDUAL_TOL || pi.iter().any(|&v| v <= 0.0) {
        return Err(ChainError::NumericalFailure("stationary residual too large"));
    }
    Ok(pi)
}

/// `max_y |(pi P)_y - pi_y|`.
pub fn stationary_residual(p: &StochasticMatrix, pi: &[f64]) -> f64 {
    (0..p.len())
        .map(|y| {
            let flow: f64 = (0..p.len()).map(|x| pi[x] * p.get(x, y)).sum();
            (flow - pi[y]).abs()
        })
        .fold(0.0, f64::max)
}

/// Spectrum-derived mixing quantities of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Modulus of the second-largest-in-modulus eigenvalue of `P`.
    pub second_modulus: f64,
    /// That eigenvalue itself (real and imaginary part).
    pub second_re: f64,
    pub second_im: f64,
    /// `sqrt` of the second eigenvalue of the multiplicative
    /// reversibilization `P P*`. Equals `second_modulus` for reversible chains.
    pub reversibilized_second: f64,
    /// `1 - lambda_2(P P*)`.
    pub symmetrization_gap: f64,
}

/// Modulus of the second-largest-in-modulus eigenvalue of `P`.
pub fn second_eigenvalue_modulus(p: &StochasticMatrix) -> Result<f64, ChainError> {
    Ok(second_eigenvalue(p)?.norm())
}

fn second_eigenvalue(p: &StochasticMatrix) -> Result<Complex<f64>, ChainError> {
    p.validate()?;
    let n = p.len();
    if n == 1 {
        return Ok(Complex::new(0.0, 0.0));
    }
    let schur = p
        .to_dmatrix()
        .try_schur(1e-15, 10_000)
        .ok_or(ChainError::NumericalFailure("eigenvalue iteration did not converge"))?;
    let mut eig: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    // drop the Perron root
    let perron = eig
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 1.0).norm().total_cmp(&(b.1 - 1.0).norm()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    eig.swap_remove(perron);
    Ok(eig
        .into_iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(Complex::new(0.0, 0.0)))
}

fn spectrum(p: &StochasticMatrix, pi: &[f64]) -> Result<Spectrum, ChainError> {
    let second = second_eigenvalue(p)?;
    let n = p.len();
    let (rev, gap) = if n == 1 {
        (0.0, 1.0)
    } else {
        let s = DMatrix::from_fn(n, n, |x, y| (pi[x] / pi[y]).sqrt() * p.get(x, y));
        let sym = &s * s.transpose();
        let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        let l2 = ev[1].clamp(0.0, 1.0);
        (l2.sqrt(), 1.0 - l2)
    };
    Ok(Spectrum {
        second_modulus: second.norm(),
        second_re: second.re,
        second_im: second.im,
        reversibilized_second: rev,
        symmetrization_gap: gap,
    })
}

/// Mean hitting times: `M[x][y]` is the expected number of steps to reach
/// `y` from `x`, with `M[y][y] = 0`.
pub fn mean_hitting_times(p: &StochasticMatrix) -> Result<Vec<Vec<f64>>, ChainError> {
    p.validate()?;
    let n = p.len();
    let mut m = vec![vec![0.0; n]; n];
    if n == 1 {
        return Ok(m);
    }
    for target in 0..n {
        let others: Vec<usize> = (0..n).filter(|&z| z != target).collect();
        let k = others.len();
        let a = DMatrix::from_fn(k, k, |r, c| {
            let delta = if r == c { 1.0 } else { 0.0 };
            delta - p.get(others[r], others[c])
        });
        let ones = DVector::from_element(k, 1.0);
        let h = a
            .clone()
            .lu()
            .solve(&ones)
            .ok_or(ChainError::NumericalFailure("singular hitting-time system"))?;
        let residual = (&a * &h - &ones).amax();
        if residual > HITTING_RESIDUAL_TOL {
            return Err(ChainError::NumericalFailure("hitting-time residual too large"));
        }
        for (r, &x) in others.iter().enumerate() {
            m[x][target] = h[r];
        }
    }
    Ok(m)
}

/// Everything the rest of the crate needs to know about one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainAnalysis {
    pub stationary: Vec<f64>,
    pub second_eigenvalue_modulus: f64,
    pub spectrum: Spectrum,
    pub hitting: Vec<Vec<f64>>,
}

impl ChainAnalysis {
    pub fn of(p: &StochasticMatrix) -> Result<Self, ChainError> {
        let stationary = stationary_distribution(p)?;
        let spectrum = spectrum(p, &stationary)?;
        let hitting = mean_hitting_times(p)?;
        Ok(Self {
            stationary,
            second_eigenvalue_modulus: spectrum.second_modulus,
            spectrum,
            hitting,
        })
    }

    /// Largest off-diagonal mean hitting time.
    pub fn max_hitting_time(&self) -> f64 {
        self.hitting
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().enumerate().filter(move |(y, _)| *y != x))
            .map(|(_, &v)| v)
            .fold(0.0, f64::max)
    }
}
