use std::fmt;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 10_000;

/// Jacobian of the generating functions at a point, with its maximal real
/// eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanMatrix {
    d: usize,
    entries: Vec<f64>,
    rho: f64,
}

impl MeanMatrix {
    /// Row-major `d x d` entries. Off-diagonal entries must be nonnegative.
    pub fn new(d: usize, entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), d * d);
        let rho = perron_root(d, &entries);
        Self { d, entries, rho }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.d).map(<[f64]>::to_vec).collect()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn shift(&self) -> f64 {
        1.0 + (0..self.d)
            .map(|i| self.get(i, i).abs())
            .fold(0.0, f64::max)
    }

    /// Whether `(M + cI)^m` is entrywise positive for some `m <= d`, with
    /// `c = 1 + max |M_ii|`.
    pub(crate) fn shifted_is_primitive(&self) -> bool {
        let d = self.d;
        let c = self.shift();
        let pattern: Vec<bool> = (0..d * d)
            .map(|idx| {
                let v = self.entries[idx] + if idx / d == idx % d { c } else { 0.0 };
                v > 0.0
            })
            .collect();
        let mut power = pattern.clone();
        for _ in 0..d {
            if power.iter().all(|&b| b) {
                return true;
            }
            let mut next = vec![false; d * d];
            for i in 0..d {
                for j in 0..d {
                    next[i * d + j] = (0..d).any(|l| power[i * d + l] && pattern[l * d + j]);
                }
            }
            power = next;
        }
        false
    }
}

/// Maximal real eigenvalue of a `d x d` matrix with nonnegative off-diagonal
/// entries.
///
/// Closed form for `d <= 2`. Larger matrices use power iteration on the
/// shifted nonnegative matrix `M + cI`, `c = 1 + max |M_ii|`.
pub fn perron_root(d: usize, m: &[f64]) -> f64 {
    match d {
        0 => f64::NAN,
        1 => m[0],
        2 => {
            let (a, b, c, e) = (m[0], m[1], m[2], m[3]);
            // off-diagonals are nonnegative so the discriminant is too
            let disc = ((a - e) * (a - e) + 4.0 * b * c).max(0.0);
            0.5 * (a + e + disc.sqrt())
        }
        _ => {
            let c = 1.0 + (0..d).map(|i| m[i * d + i].abs()).fold(0.0, f64::max);
            let mut v = vec![1.0 / d as f64; d];
            let mut w = vec![0.0; d];
            let mut lambda = 0.0;
            for _ in 0..POWER_MAX_ITER {
                for i in 0..d {
                    w[i] = c * v[i] + (0..d).map(|j| m[i * d + j] * v[j]).sum::<f64>();
                }
                // v is l1-normalized and nonnegative, so ||w||_1 estimates the root
                let norm: f64 = w.iter().sum();
                if norm <= 0.0 {
                    return -c;
                }
                for (vi, wi) in v.iter_mut().zip(&w) {
                    *vi = wi / norm;
                }
                let done = (norm - lambda).abs() <= POWER_TOL * norm.max(1.0);
                lambda = norm;
                if done {
                    break;
                }
            }
            lambda - c
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriticalityClass {
    Subcritical,
    Critical,
    Supercritical,
}

impl CriticalityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Subcritical => "subcritical",
            Self::Critical => "critical",
            Self::Supercritical => "supercritical",
        }
    }
}

impl fmt::Display for CriticalityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criticality {
    pub class: CriticalityClass,
    pub rho_one: f64,
    pub tol: f64,
}

impl Criticality {
    pub fn from_rho(rho_one: f64, tol: f64) -> Self {
        let class = if rho_one > tol {
            CriticalityClass::Supercritical
        } else if rho_one.abs() <= tol {
            CriticalityClass::Critical
        } else {
            CriticalityClass::Subcritical
        };
        Self {
            class,
            rho_one,
            tol,
        }
    }

    pub fn is_supercritical(&self) -> bool {
        self.class == CriticalityClass::Supercritical
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn power_iteration_matches_known_roots() {
        // circulant with diagonal -2 and off-diagonal 1: eigenvalues 0, -3, -3
        let m = [-2.0, 1.0, 1.0, 1.0, -2.0, 1.0, 1.0, 1.0, -2.0];
        assert_abs_diff_eq!(perron_root(3, &m), 0.0, epsilon = 1e-10);

        // diagonal: the largest entry wins
        let diag = [-1.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, -3.0];
        assert_abs_diff_eq!(perron_root(3, &diag), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn two_by_two_matches_power_iteration_embedding() {
        // embed a 2x2 block plus a decoupled very negative third type
        let a = [-1.0, 0.6, 0.8, -0.5];
        let r2 = perron_root(2, &a);
        let m = [-1.0, 0.6, 0.0, 0.8, -0.5, 0.0, 0.0, 0.0, -5.0];
        assert_abs_diff_eq!(perron_root(3, &m), r2, epsilon = 1e-9);
    }

    #[test]
    fn criticality_bands() {
        assert_eq!(
            Criticality::from_rho(1e-11, 1e-10).class,
            CriticalityClass::Critical
        );
        assert_eq!(
            Criticality::from_rho(-1e-3, 1e-10).class,
            CriticalityClass::Subcritical
        );
        assert_eq!(
            Criticality::from_rho(2e-10, 1e-10).class,
            CriticalityClass::Supercritical
        );
    }
}
