//! Brute-force enumeration oracle: every primitive polynomial of each size
//! class, roots from companion-matrix eigenvalues, floating dedup.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
type Complex64 = nalgebra::Complex<f64>;

pub struct OracleEntry {
    pub value: f64,
    /// Leading coefficient first.
    pub coeffs: Vec<i64>,
    pub class: i64,
}

fn zigzag(c: i64) -> u64 {
    if c > 0 {
        2 * c as u64 - 1
    } else {
        2 * c.unsigned_abs()
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn tuples(len: usize, budget: i64, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    if prefix.len() == len {
        out.push(prefix.clone());
        return;
    }
    for c in -budget..=budget {
        prefix.push(c);
        tuples(len, budget - c.abs(), prefix, out);
        prefix.pop();
    }
}

/// Class-`n` polynomials (degree + Σ|c| = n), leading-first, canonical order.
pub fn class_polys(n: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for deg in 1..n {
        let h = n - deg;
        let mut all = Vec::new();
        tuples(deg as usize + 1, h, &mut Vec::new(), &mut all);
        let mut keep: Vec<Vec<i64>> = all
            .into_iter()
            .filter(|t| t[0] > 0 && t.iter().map(|c| c.abs()).sum::<i64>() == h)
            .filter(|t| t.iter().fold(0, |g, &c| gcd(g, c)) == 1)
            .collect();
        keep.sort_by_key(|t| t.iter().map(|&c| zigzag(c)).collect::<Vec<_>>());
        out.extend(keep);
    }
    out
}

/// Distinct real roots, ascending. Multiple roots show up as eigenvalue
/// clusters whose mean is accurate.
pub fn real_roots(t: &[i64]) -> Vec<f64> {
    let zeros = t.iter().rev().take_while(|&&c| c == 0).count();
    if zeros > 0 {
        let mut roots = real_roots_nonzero(&t[..t.len() - zeros]);
        if !roots.iter().any(|r| r.abs() < 1e-9) {
            roots.push(0.0);
        }
        roots.sort_by(f64::total_cmp);
        return roots;
    }
    real_roots_nonzero(t)
}

fn real_roots_nonzero(t: &[i64]) -> Vec<f64> {
    let n = t.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![-(t[1] as f64) / t[0] as f64];
    }
    let lead = t[0] as f64;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        // coefficient of x^i is t[n - i]
        m[(i, n - 1)] = -(t[n - i] as f64) / lead;
    }
    // permutation-like companions (x^4 + 1) stall the QR iteration; a fixed
    // similarity breaks the symmetry without moving eigenvalues
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000).unwrap_or_else(|| {
        let r = DMatrix::<f64>::from_fn(n, n, |i, j| if i == j { 1.0 } else if i > j { 0.3 } else { 0.0 });
        let r_inv = r.clone().try_inverse().expect("unit triangular");
        Schur::try_new(&r * m * r_inv, f64::EPSILON, 10_000).expect("eigenvalue iteration converges")
    });
    let mut eig: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for z in eig {
        match clusters.iter_mut().find(|c| (c[0] - z).norm() < 1e-4) {
            Some(c) => c.push(z),
            None => clusters.push(vec![z]),
        }
    }
    let mut roots: Vec<f64> = clusters
        .iter()
        .map(|c| c.iter().sum::<Complex64>() / c.len() as f64)
        .filter(|z| z.im.abs() < 1e-7)
        .map(|z| z.re)
        .collect();
    roots.sort_by(f64::total_cmp);
    roots
}

pub fn oracle(lo: f64, hi: f64, max_class: i64) -> Vec<OracleEntry> {
    let mut out: Vec<OracleEntry> = Vec::new();
    for class in 2..=max_class {
        for t in class_polys(class) {
            for r in real_roots(&t) {
                if r <= lo + 1e-9 || r >= hi - 1e-9 {
                    continue;
                }
                if out.iter().any(|e| (e.value - r).abs() < 1e-9) {
                    continue;
                }
                out.push(OracleEntry { value: r, coeffs: t.clone(), class });
            }
        }
    }
    out
}
