//! Entropy functionals and their dissipation: `Ent(f) = E[Phi(f)] -
//! Phi(E[f])`, the derivative identity `d/dt Ent(P_t f) = E[Phi'(P_t f)
//! L P_t f] <= 0`, decay curves, the Poincare constant for reversible pairs,
//! and the Bregman jump integrand of the trajectorial compensator.

mod phi;

pub use phi::Phi;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dynamics::RateFamily;
use crate::error::{Error, Result};
use crate::exact::{semigroup_apply, Generator, Measure};
use crate::model::{pattern_iter, StateSpace};

/// Validates that every value (and hence the mean) lies in the domain of Phi.
fn check_range(phi: &Phi, values: &[f64]) -> Result<()> {
    for &v in values {
        phi.check(v)?;
    }
    Ok(())
}

/// `Ent(f) = E_mu[Phi(f)] - Phi(E_mu[f])`; nonnegative for convex Phi.
pub fn phi_entropy(mu: &Measure, phi: &Phi, f: &[f64]) -> Result<f64> {
    check_range(phi, f)?;
    let mean = mu.mean(f);
    let mean_phi: f64 = mu
        .as_slice()
        .iter()
        .zip(f)
        .map(|(p, v)| p * phi.eval(*v))
        .sum();
    Ok(mean_phi - phi.eval(mean))
}

/// Dissipation functional `E_mu[Phi'(f) (Lf)]`; nonpositive whenever `mu` is
/// stationary for the generator.
pub fn dissipation(mu: &Measure, gen: &Generator, phi: &Phi, f: &[f64]) -> Result<f64> {
    check_range(phi, f)?;
    let lf = gen.apply_vec(f);
    Ok(mu
        .as_slice()
        .iter()
        .zip(f)
        .zip(&lf)
        .map(|((p, v), l)| p * phi.d1(*v) * l)
        .sum())
}

/// Entropy and dissipation along the semigroup on a time grid.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DecayCurve {
    pub t: Vec<f64>,
    pub entropy: Vec<f64>,
    pub dissipation: Vec<f64>,
    /// `e^{-2t/c*} Ent(f)` when a Poincare constant is available.
    pub bound: Option<Vec<f64>>,
}

impl DecayCurve {
    /// Entropy nonincreasing along the grid, up to `tol`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.entropy.windows(2).all(|w| w[1] <= w[0] + tol)
    }
}

pub fn decay_curve(
    mu: &Measure,
    gen: &Generator,
    phi: &Phi,
    f: &[f64],
    ts: &[f64],
    c_star: Option<f64>,
) -> Result<DecayCurve> {
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("time grid must be strictly increasing".into()));
    }
    let ent0 = phi_entropy(mu, phi, f)?;
    let mut entropy = Vec::with_capacity(ts.len());
    let mut diss = Vec::with_capacity(ts.len());
    for &t in ts {
        let ft = semigroup_apply(gen, f, t)?;
        entropy.push(phi_entropy(mu, phi, &ft)?);
        diss.push(dissipation(mu, gen, phi, &ft)?);
    }
    let bound = c_star.map(|c| ts.iter().map(|t| (-2.0 * t / c).exp() * ent0).collect());
    Ok(DecayCurve {
        t: ts.to_vec(),
        entropy,
        dissipation: diss,
        bound,
    })
}

/// Central finite difference of `t -> Ent(P_t f)`.
pub fn entropy_time_derivative(
    mu: &Measure,
    gen: &Generator,
    phi: &Phi,
    f: &[f64],
    t: f64,
    step: f64,
) -> Result<f64> {
    let at = |s: f64| -> Result<f64> {
        let fs = semigroup_apply(gen, f, s)?;
        phi_entropy(mu, phi, &fs)
    };
    let lo = (t - step).max(0.0);
    let hi = t + step;
    Ok((at(hi)? - at(lo)?) / (hi - lo))
}

/// Richardson refinement of the central difference: combines steps `h` and
/// `h/2` to cancel the leading error term. Fallback for grid points where
/// the plain difference misses its tolerance.
pub fn entropy_time_derivative_refined(
    mu: &Measure,
    gen: &Generator,
    phi: &Phi,
    f: &[f64],
    t: f64,
    step: f64,
) -> Result<f64> {
    let coarse = entropy_time_derivative(mu, gen, phi, f, t, step)?;
    let fine = entropy_time_derivative(mu, gen, phi, f, t, step / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Poincare constant of a reversible pair.
#[derive(Debug, Clone)]
pub struct PoincareReport {
    /// Second-smallest eigenvalue of `-L` in the mu-weighted inner product.
    pub gap: f64,
    /// Smallest admissible constant in `Var(f) <= -(c/2) <f, Lf>`.
    pub c_star: f64,
    /// Eigenfunction attaining the gap, mapped back to state space.
    pub gap_eigenfunction: Vec<f64>,
}

/// Spectral gap and Poincare constant `c* = 2/gap` for a reversible pair;
/// non-reversible input errors and points to the tail-fit estimator.
pub fn poincare_gap(gen: &Generator, mu: &Measure) -> Result<PoincareReport> {
    mu.check_strictly_positive()?;
    let n = gen.len();
    // detailed balance: mu(x) L(x,y) = mu(y) L(y,x)
    let mut scale = 0.0f64;
    for x in 0..n {
        for (_, v) in gen.row(x) {
            scale = scale.max((mu.get(x as u64) * v).abs());
        }
    }
    for x in 0..n {
        for (y, v) in gen.row(x) {
            let y = y as usize;
            let lhs = mu.get(x as u64) * v;
            let rhs = mu.get(y as u64) * gen.entry(y, x);
            if (lhs - rhs).abs() > 1e-9 * scale.max(1e-300) {
                return Err(Error::NotReversible {
                    residual: (lhs - rhs).abs() / scale.max(1e-300),
                    x: x as u64,
                    y: y as u64,
                });
            }
        }
    }
    // symmetrized negative generator A = D^{1/2} (-L) D^{-1/2}
    let mut a = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        a[(x, x)] = -gen.diag()[x];
        let sx = mu.get(x as u64).sqrt();
        for (y, v) in gen.row(x) {
            let y = y as usize;
            a[(x, y)] = -v * sx / mu.get(y as u64).sqrt();
        }
    }
    // enforce exact symmetry against roundoff before the eigensolve
    let sym = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap()
    });
    let gap = eig.eigenvalues[order[1]];
    if !(gap > 0.0) {
        return Err(Error::Reducible {
            inside: 0,
            outside: 0,
            class_size: n,
            class_head: vec![],
        });
    }
    let v = eig.eigenvectors.column(order[1]);
    let gap_eigenfunction: Vec<f64> = (0..n)
        .map(|x| v[x] / mu.get(x as u64).sqrt())
        .collect();
    Ok(PoincareReport {
        gap,
        c_star: 2.0 / gap,
        gap_eigenfunction,
    })
}

/// Log-linear decay-rate estimate over the tail third of a curve. This is a
/// fit, not a spectral quantity; it is the labeled fallback for
/// non-reversible dynamics.
pub fn decay_rate_estimate(ts: &[f64], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let tail = &pts[pts.len() - (pts.len() / 3).max(2)..];
    let n = tail.len() as f64;
    let sx: f64 = tail.iter().map(|p| p.0).sum();
    let sy: f64 = tail.iter().map(|p| p.1).sum();
    let sxx: f64 = tail.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = tail.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some(-(n * sxy - sx * sy) / denom)
}

/// Bregman jump integrand at one state:
/// `sum_regions sum_xi c*(eta, xi) div_Phi(values[xi eta] | values[eta])
/// lambda(xi)`. With `values = P_{T-s} f` this is the compensator integrand of
/// the trajectorial decomposition; with the raw observable and `Phi = u^2` it
/// is the plain squared-jump form.
pub fn bregman_jump_sum(
    rates_hat: &RateFamily,
    space: &StateSpace,
    phi: &Phi,
    values: &[f64],
    state: u64,
) -> Result<f64> {
    let eta = space.config_of(state);
    let here = values[state as usize];
    phi.check(here)?;
    let q = space.q();
    let mut total = 0.0;
    for (ri, region) in rates_hat.regions().iter().enumerate() {
        let w = rates_hat.lambda_weight(ri);
        let current = eta.restrict(&region.sites);
        for xi in pattern_iter(q, region.sites.len()) {
            if xi == current {
                continue;
            }
            let c = rates_hat.density(&eta, ri, &xi);
            if c == 0.0 {
                continue;
            }
            let target = space.with_patch(state, &region.sites, &xi);
            total += c * w * phi.bregman(values[target as usize], here)?;
        }
    }
    Ok(total)
}
