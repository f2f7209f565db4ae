//! Reference computations for tests.
//!
//! Nothing here shares code with `scm-core`: Hamiltonians are assembled from
//! Kronecker products in the full `2^N` space, exponentials come from a
//! Taylor series, the collision channel is traced over an explicit ancilla.
//! Slow by construction; only meant for small systems.

use nalgebra::{Complex, DMatrix, DVector};

pub type C = Complex<f64>;
pub type CMatrix = DMatrix<C>;

pub fn c(re: f64, im: f64) -> C {
    Complex::new(re, im)
}

/// Matrix exponential by scaling and squaring with a Taylor series.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * n as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / c(2f64.powi(squarings as i32), 0.0);
    let mut term = CMatrix::identity(n, n);
    let mut sum = CMatrix::identity(n, n);
    for k in 1..40 {
        term = &term * &scaled / c(k as f64, 0.0);
        sum += &term;
        if term.norm() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn pauli(which: char) -> CMatrix {
    match which {
        'x' => CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        'y' => CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        'z' => CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        _ => CMatrix::identity(2, 2),
    }
}

/// Operator acting as `ops[i]` on site `i`, in the full space.
///
/// The full-space index of a configuration equals its bitmask (bit `i` set
/// ⇔ site `i` up); Pauli index 0 is up, so the local factor for site `i`
/// is read from bit `i` inverted.
fn site_product(n: usize, ops: &[(usize, char)]) -> CMatrix {
    let dim = 1usize << n;
    let mut out = CMatrix::zeros(dim, dim);
    let locals: Vec<CMatrix> = (0..n)
        .map(|i| {
            ops.iter()
                .find(|(s, _)| *s == i)
                .map(|(_, p)| pauli(*p))
                .unwrap_or_else(|| pauli('1'))
        })
        .collect();
    for row in 0..dim {
        for col in 0..dim {
            let mut v = c(1., 0.);
            for (i, m) in locals.iter().enumerate() {
                let r = 1 - (row >> i & 1);
                let cc = 1 - (col >> i & 1);
                v *= m[(r, cc)];
                if v == c(0., 0.) {
                    break;
                }
            }
            out[(row, col)] = v;
        }
    }
    out
}

/// Full-space XXZ Hamiltonian with open boundaries.
pub fn xxz_full(n: usize, j: f64, delta: f64, h: f64) -> CMatrix {
    let dim = 1usize << n;
    let mut out = CMatrix::zeros(dim, dim);
    for i in 0..n - 1 {
        out += site_product(n, &[(i, 'x'), (i + 1, 'x')]) * c(j, 0.);
        out += site_product(n, &[(i, 'y'), (i + 1, 'y')]) * c(j, 0.);
        out += site_product(n, &[(i, 'z'), (i + 1, 'z')]) * c(j * delta, 0.);
    }
    for i in 0..n {
        out += site_product(n, &[(i, 'z')]) * c(h, 0.);
    }
    out
}

/// Bitmasks with `q` set bits out of `n`, ascending, by exhaustive filter.
pub fn sector_masks(n: usize, q: usize) -> Vec<usize> {
    (0..1usize << n).filter(|m| m.count_ones() as usize == q).collect()
}

/// Rows/columns of a full-space operator restricted to the sector.
pub fn restrict(full: &CMatrix, masks: &[usize]) -> CMatrix {
    CMatrix::from_fn(masks.len(), masks.len(), |a, b| full[(masks[a], masks[b])])
}

/// `Tr_a[U (ρ_a ⊗ ρ) U†]` with `U = exp(-i(π/2) σˣ_a ⊗ σᶻ_site)`, built
/// explicitly on the doubled space (ancilla index is the slow one).
pub fn ancilla_collision(rho: &CMatrix, masks: &[usize], site: usize, ancilla: &CMatrix) -> CMatrix {
    let d = rho.nrows();
    let z = CMatrix::from_fn(d, d, |a, b| {
        if a != b {
            c(0., 0.)
        } else if masks[a] >> site & 1 == 1 {
            c(1., 0.)
        } else {
            c(-1., 0.)
        }
    });
    let generator = pauli('x').kronecker(&z) * c(0., -std::f64::consts::FRAC_PI_2);
    let u = expm(&generator);
    let joint = ancilla.kronecker(rho);
    let evolved = &u * joint * u.adjoint();
    CMatrix::from_fn(d, d, |a, b| evolved[(a, b)] + evolved[(d + a, d + b)])
}

/// `⟨σᶻ_j(t)⟩` for one excitation starting at `start` on an `n`-site XX
/// chain with hopping `2J`, from the closed-form sine eigenmodes.
pub fn xx_single_excitation_magnetization(n: usize, j: f64, start: usize, t: f64) -> Vec<f64> {
    let norm = (2.0 / (n + 1) as f64).sqrt();
    let modes: Vec<(f64, Vec<f64>)> = (1..=n)
        .map(|k| {
            let theta = std::f64::consts::PI * k as f64 / (n + 1) as f64;
            let energy = 4.0 * j * theta.cos();
            let shape = (1..=n).map(|site| norm * (theta * site as f64).sin()).collect();
            (energy, shape)
        })
        .collect();
    (0..n)
        .map(|site| {
            let amp: C = modes
                .iter()
                .map(|(e, phi)| c(0., -e * t).exp() * (phi[site] * phi[start]))
                .sum();
            2.0 * amp.norm_sqr() - 1.0
        })
        .collect()
}

/// Dephasing master equation `dρ/dt = -i[H, ρ] + r Σᵢ (Zᵢ ρ Zᵢ − ρ)`,
/// integrated with classical RK4.
pub fn lindblad_dephasing(
    h: &CMatrix,
    z_diagonals: &[Vec<f64>],
    rate: f64,
    rho0: &CMatrix,
    t: f64,
    steps: usize,
) -> CMatrix {
    let rhs = |rho: &CMatrix| -> CMatrix {
        let mut out = (h * rho - rho * h) * c(0., -1.);
        for z in z_diagonals {
            let zrz = CMatrix::from_fn(rho.nrows(), rho.ncols(), |a, b| rho[(a, b)] * (z[a] * z[b]));
            out += (zrz - rho) * c(rate, 0.);
        }
        out
    };
    let dt = t / steps as f64;
    let mut rho = rho0.clone();
    for _ in 0..steps {
        let k1 = rhs(&rho);
        let k2 = rhs(&(&rho + &k1 * c(dt / 2., 0.)));
        let k3 = rhs(&(&rho + &k2 * c(dt / 2., 0.)));
        let k4 = rhs(&(&rho + &k3 * c(dt, 0.)));
        rho += (k1 + k2 * c(2., 0.) + k3 * c(2., 0.) + k4) * c(dt / 6., 0.);
    }
    rho
}

/// One-sample Kolmogorov–Smirnov statistic against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// KS critical value at the 1% level (Stephens' finite-n correction).
pub fn ks_critical_1pct(n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    1.628 / (sn + 0.12 + 0.11 / sn)
}

/// Small deterministic generator (SplitMix64) so oracles need no RNG crate.
pub struct SplitMix(u64);

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `[-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }
}

/// Random full-rank density matrix `G G† / Tr(G G†)`.
pub fn random_density_matrix(d: usize, rng: &mut SplitMix) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| c(rng.symmetric(), rng.symmetric()));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

/// Random normalized state vector.
pub fn random_state(d: usize, rng: &mut SplitMix) -> DVector<C> {
    let v = DVector::from_fn(d, |_, _| c(rng.symmetric(), rng.symmetric()));
    let n = v.norm();
    v / c(n, 0.)
}

/// Lanczos approximation (g = 7, nine terms), about 15 significant digits
/// for positive arguments.
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Weibull scale giving mean interval `1/rate`.
pub fn weibull_scale_for_rate(shape: f64, rate: f64) -> f64 {
    1.0 / (rate * gamma(1.0 + 1.0 / shape))
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_known_values() {
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
        assert!((gamma(3.0) - 2.0).abs() < 1e-13);
        assert!((gamma(1.01) - 0.994_325_851_191_506).abs() < 1e-13);
    }

    #[test]
    fn expm_of_pauli_rotation() {
        // exp(-iθσˣ) = cosθ − i sinθ σˣ
        let theta = 0.7;
        let u = expm(&(pauli('x') * c(0., -theta)));
        assert!((u[(0, 0)] - c(theta.cos(), 0.)).norm() < 1e-14);
        assert!((u[(0, 1)] - c(0., -theta.sin())).norm() < 1e-14);
    }

    #[test]
    fn two_site_xx_full_space() {
        let h = xxz_full(2, 1.0, 0.0, 0.0);
        let s = restrict(&h, &sector_masks(2, 1));
        assert_eq!(s[(0, 1)], c(2., 0.));
        assert_eq!(s[(0, 0)], c(0., 0.));
    }

    #[test]
    fn closed_form_chain_conserves_excitation() {
        let m = xx_single_excitation_magnetization(9, 1.0, 4, 0.83);
        let occ: f64 = m.iter().map(|x| (x + 1.0) / 2.0).sum();
        assert!((occ - 1.0).abs() < 1e-12);
    }
}
