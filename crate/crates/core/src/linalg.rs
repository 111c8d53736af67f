//! Small dense 4x4 helpers: eigenvalues, characteristic polynomial and the
//! Routh-Hurwitz test.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix4 = [[f64; 4]; 4];

/// Max absolute row sum.
pub fn norm_inf(m: &Matrix4) -> f64 {
    m.iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// All four eigenvalues, sorted by real part (descending), ties by imaginary
/// part (descending).
pub fn eigenvalues4(m: &Matrix4) -> Result<[Complex64; 4]> {
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    let mut out = [Complex64::new(0.0, 0.0); 4];
    let mut filled = 0;
    for block in diagonal_blocks(m) {
        for z in block_eigenvalues(m, &block) {
            out[filled] = z;
            filled += 1;
        }
    }
    out.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    Ok(out)
}

/// Index sets of the irreducible diagonal blocks: the strongly connected
/// components of the nonzero pattern. Their spectra make up the spectrum of
/// `m`, and a 1x1 block contributes its entry exactly.
fn diagonal_blocks(m: &Matrix4) -> Vec<Vec<usize>> {
    let mut reach = [[false; 4]; 4];
    for (i, row) in reach.iter_mut().enumerate() {
        for (j, r) in row.iter_mut().enumerate() {
            *r = i == j || m[i][j] != 0.0;
        }
    }
    for k in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                reach[i][j] |= reach[i][k] && reach[k][j];
            }
        }
    }
    let mut seen = [false; 4];
    let mut blocks = Vec::new();
    for i in 0..4 {
        if seen[i] {
            continue;
        }
        let block: Vec<usize> = (0..4).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &block {
            seen[j] = true;
        }
        blocks.push(block);
    }
    blocks
}

fn block_eigenvalues(m: &Matrix4, block: &[usize]) -> Vec<Complex64> {
    let n = block.len();
    if n == 1 {
        return vec![Complex64::new(m[block[0]][block[0]], 0.0)];
    }
    let scale = block
        .iter()
        .map(|&i| block.iter().map(|&j| m[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return vec![Complex64::new(0.0, 0.0); n];
    }
    let a = DMatrix::from_fn(n, n, |i, j| m[block[i]][block[j]] / scale);
    let ev = a.complex_eigenvalues();
    let mut out: Vec<Complex64> = ev.iter().map(|z| z * scale).collect();
    // The polynomial of the whole matrix is only a safe polish target when
    // the block is the whole matrix.
    if n == 4 {
        for z in &mut out {
            *z = polish(m, *z);
        }
    }
    out
}

/// One Newton step on the characteristic polynomial when it reduces the
/// residual; leaves clustered roots alone.
fn polish(m: &Matrix4, z: Complex64) -> Complex64 {
    let c = char_poly4(m);
    let eval = |x: Complex64| {
        let p = (((x + c[0]) * x + c[1]) * x + c[2]) * x + c[3];
        let dp = ((x * 4.0 + 3.0 * c[0]) * x + 2.0 * c[1]) * x + c[2];
        (p, dp)
    };
    let (p0, dp0) = eval(z);
    if dp0.norm() == 0.0 {
        return z;
    }
    let cand = z - p0 / dp0;
    let (p1, _) = eval(cand);
    if p1.norm() < p0.norm() && (cand - z).norm() <= 1e-6 * (1.0 + z.norm()) {
        cand
    } else {
        z
    }
}

/// Coefficients `[a1, a2, a3, a4]` of `det(mu I - M) = mu^4 + a1 mu^3 + a2 mu^2 + a3 mu + a4`
/// by the Faddeev-LeVerrier recursion.
pub fn char_poly4(m: &Matrix4) -> [f64; 4] {
    let mut coeffs = [0.0; 4];
    let mut mk = [[0.0; 4]; 4];
    let mut prev_c = 1.0;
    for k in 1..=4 {
        // mk = M * mk_prev + c_prev * I
        let mut next = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for l in 0..4 {
                    s += m[i][l] * mk[l][j];
                }
                next[i][j] = s + if i == j { prev_c } else { 0.0 };
            }
        }
        mk = next;
        let mut tr = 0.0;
        for i in 0..4 {
            for l in 0..4 {
                tr += m[i][l] * mk[l][i];
            }
        }
        let c = -tr / k as f64;
        coeffs[k - 1] = c;
        prev_c = c;
    }
    coeffs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl Verdict {
    /// Classifies by the largest real part with a marginal band of `tol`.
    pub fn from_max_real(max_re: f64, tol: f64) -> Verdict {
        if max_re > tol {
            Verdict::Unstable
        } else if max_re < -tol {
            Verdict::Stable
        } else {
            Verdict::Marginal
        }
    }

    /// True when one says stable and the other unstable.
    pub fn conflicts(self, other: Verdict) -> bool {
        matches!(
            (self, other),
            (Verdict::Stable, Verdict::Unstable) | (Verdict::Unstable, Verdict::Stable)
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        }
    }
}

/// Routh-Hurwitz verdict for a monic quartic. `scale` is a magnitude for the
/// roots (e.g. the matrix norm); coefficient `a_k` is compared against
/// `rel_tol * scale^k`.
pub fn routh_hurwitz4(c: [f64; 4], scale: f64, rel_tol: f64) -> Verdict {
    let s = scale.max(f64::MIN_POSITIVE);
    let [a1, a2, a3, a4] = [c[0] / s, c[1] / (s * s), c[2] / (s * s * s), c[3] / (s * s * s * s)];
    let delta = a1 * a2 * a3 - a3 * a3 - a1 * a1 * a4;
    let tests = [a1, a3, a4, delta];
    if tests.iter().all(|&t| t > rel_tol) {
        Verdict::Stable
    } else if tests.iter().any(|&t| t < -rel_tol) {
        Verdict::Unstable
    } else {
        Verdict::Marginal
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn triangular_eigenvalues_are_the_diagonal() {
        let m = [
            [3.0, 1.0, -2.0, 5.0],
            [0.0, -1.5, 4.0, 1.0],
            [0.0, 0.0, 0.25, -7.0],
            [0.0, 0.0, 0.0, -9.0],
        ];
        let ev = eigenvalues4(&m).unwrap();
        let want = [3.0, 0.25, -1.5, -9.0];
        for (z, w) in ev.iter().zip(want) {
            assert!(close(*z, Complex64::new(w, 0.0), 1e-12), "{ev:?}");
        }
    }

    #[test]
    fn reducible_matrix_keeps_close_eigenvalues_exact() {
        // Permuted triangular pattern with two nearly equal diagonal entries
        // coupled through an off-diagonal entry.
        let m = [
            [-1.0, 0.0, 0.7, 0.0],
            [0.0, -2.0, 0.0, 0.0],
            [0.0, 0.3, -1.0 - 1e-9, 0.0],
            [0.0, 5.0, 0.0, 0.5],
        ];
        let ev = eigenvalues4(&m).unwrap();
        let re: Vec<f64> = ev.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![0.5, -1.0, -1.0 - 1e-9, -2.0]);
        assert!(ev.iter().all(|z| z.im == 0.0));
        assert_eq!(diagonal_blocks(&m).len(), 4);
    }

    #[test]
    fn companion_matrix_roots() {
        // (mu^2 + 1)(mu - 2)(mu - 3) = mu^4 - 5 mu^3 + 7 mu^2 - 5 mu + 6
        let c = [-5.0, 7.0, -5.0, 6.0];
        let m = [
            [-c[0], -c[1], -c[2], -c[3]],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        let ev = eigenvalues4(&m).unwrap();
        let want = [
            Complex64::new(3.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
        ];
        for (z, w) in ev.iter().zip(want) {
            assert!(close(*z, w, 1e-9 * norm_inf(&m)), "{ev:?}");
        }
        let cp = char_poly4(&m);
        for (a, b) in cp.iter().zip(c) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = [[0.0; 4]; 4];
        m[2][1] = f64::NAN;
        assert_eq!(eigenvalues4(&m), Err(Error::NonFinite { row: 2, col: 1 }));
    }

    #[test]
    fn routh_hurwitz_matches_known_polynomials() {
        // (mu + 1)^4
        assert_eq!(routh_hurwitz4([4.0, 6.0, 4.0, 1.0], 1.0, 1e-9), Verdict::Stable);
        // (mu - 1)(mu + 1)^3
        assert_eq!(routh_hurwitz4([2.0, 0.0, -2.0, -1.0], 1.0, 1e-9), Verdict::Unstable);
        // (mu^2 + 1)(mu + 1)^2: purely imaginary pair
        assert_eq!(routh_hurwitz4([2.0, 2.0, 2.0, 1.0], 1.0, 1e-9), Verdict::Marginal);
        // (mu^2 - 0.2 mu + 1.01)(mu + 2)^2: unstable complex pair
        let c = char_poly4(&[
            [0.1, 1.0, 0.0, 0.0],
            [-1.0, 0.1, 0.0, 0.0],
            [0.0, 0.0, -2.0, 0.0],
            [0.0, 0.0, 0.0, -2.0],
        ]);
        assert_eq!(routh_hurwitz4(c, 2.0, 1e-9), Verdict::Unstable);
    }
}
