//! Slow, independent reference computations.
//!
//! Nothing in here is called by the production paths; the test suites use these
//! routines to cross-check the fast implementations through a different route
//! (projector algebra, dense 4x4 matrix action, numerical minimization, naive
//! rejection sampling).

use num_complex::Complex64;
use rand::Rng;

use crate::hilbert::{overlap, JointEigenbasis, Observable, Setting, StateVector};
use crate::ontic::OnticState;
use crate::{Error, Result};

/// Expected `|<phi_j|00>|^2` profile, sorted descending, from projector algebra.
///
/// For a product eigenvector with labels `(x, y)` the overlap with `|00>` is
/// `<00| P_x (x) P_y |00> = (1 + x a_z)/2 * (1 + y b_z)/2`, independently of how
/// the eigenvectors themselves are parameterized.
pub fn expected_reference_overlap_profile(a: Setting, b: Setting) -> [f64; 4] {
    let az = a.components()[2];
    let bz = b.components()[2];
    let mut o = [0.0; 4];
    let mut k = 0;
    for x in [1.0, -1.0] {
        for y in [1.0, -1.0] {
            o[k] = 0.5 * (1.0 + x * az) * 0.5 * (1.0 + y * bz);
            k += 1;
        }
    }
    o.sort_by(|p, q| q.total_cmp(p));
    o
}

/// Dense 4x4 product `(m_a (x) I) v` for a 2x2 matrix acting on the first factor.
fn apply_left(m: &[[Complex64; 2]; 2], v: &StateVector) -> [Complex64; 4] {
    let a = v.amps();
    [
        m[0][0] * a[0] + m[0][1] * a[2],
        m[0][0] * a[1] + m[0][1] * a[3],
        m[1][0] * a[0] + m[1][1] * a[2],
        m[1][0] * a[1] + m[1][1] * a[3],
    ]
}

/// Dense 4x4 product `(I (x) m_b) v` for a 2x2 matrix acting on the second factor.
fn apply_right(m: &[[Complex64; 2]; 2], v: &StateVector) -> [Complex64; 4] {
    let a = v.amps();
    [
        m[0][0] * a[0] + m[0][1] * a[1],
        m[1][0] * a[0] + m[1][1] * a[1],
        m[0][0] * a[2] + m[0][1] * a[3],
        m[1][0] * a[2] + m[1][1] * a[3],
    ]
}

/// Largest residual of the labeled eigenvalue relations over the basis:
/// `max_j max(|(A (x) I) phi_j - X_j phi_j|, |(I (x) B) phi_j - Y_j phi_j|)`.
pub fn eigen_residual(basis: &JointEigenbasis, a: Setting, b: Setting) -> f64 {
    let ma = *Observable::from_setting(a).matrix();
    let mb = *Observable::from_setting(b).matrix();
    let mut worst: f64 = 0.0;
    for j in 0..4 {
        let v = basis.vector(j);
        let (x, y) = basis.outcome(j);
        let left = apply_left(&ma, v);
        let right = apply_right(&mb, v);
        let mut res_a = 0.0;
        let mut res_b = 0.0;
        for k in 0..4 {
            res_a += (left[k] - v.amp(k) * (x as f64)).norm_sqr();
            res_b += (right[k] - v.amp(k) * (y as f64)).norm_sqr();
        }
        worst = worst.max(res_a.sqrt()).max(res_b.sqrt());
    }
    worst
}

/// How far a bipartite vector is from being a tensor product.
///
/// Reshaping the amplitudes into a 2x2 matrix, product states are exactly the
/// rank-one matrices, so `|det|` vanishes iff the state factorizes.
pub fn product_defect(v: &StateVector) -> f64 {
    let a = v.amps();
    (a[0] * a[3] - a[1] * a[2]).norm()
}

const MINIMIZER_STARTS: usize = 6;
const MINIMIZER_PROBES: usize = 128;
const MINIMIZER_MAX_ITERS: usize = 4000;

/// Constrained infimum of `|<v|phi>|^2` over normalized `v` with
/// `|<v|reference>|^2 >= 1/4`, found numerically.
///
/// Projected gradient descent on the unit sphere with feasibility restoration,
/// restarted from several random points plus a batch of pure random probes.
/// Used as the independent check of the closed-form infimum.
pub fn z_numeric<R: Rng + ?Sized>(
    phi: &StateVector,
    reference: &StateVector,
    rng: &mut R,
) -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..MINIMIZER_PROBES {
        let v = restore_feasibility(StateVector::haar_random(rng), reference);
        best = best.min(overlap(&v, phi));
    }
    for _ in 0..MINIMIZER_STARTS {
        let start = restore_feasibility(StateVector::haar_random(rng), reference);
        best = best.min(descend(start, phi, reference));
    }
    best
}

fn restore_feasibility(v: StateVector, reference: &StateVector) -> StateVector {
    let alpha = reference.inner(&v);
    if alpha.norm_sqr() >= 0.25 {
        return v;
    }
    // Rescale the parallel and orthogonal parts onto the constraint boundary.
    let r_amps: Vec<Complex64> = v
        .amps()
        .iter()
        .zip(reference.amps().iter())
        .map(|(vk, rk)| vk - alpha * rk)
        .collect();
    let r_norm: f64 = r_amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let par_phase = if alpha.norm() > 1e-14 {
        alpha / alpha.norm()
    } else {
        Complex64::ONE
    };
    let mut amps = [Complex64::ZERO; 4];
    let orth_scale = if r_norm > 1e-14 {
        (0.75f64).sqrt() / r_norm
    } else {
        0.0
    };
    let par_scale = if r_norm > 1e-14 { 0.5 } else { 1.0 };
    for k in 0..4 {
        amps[k] = par_phase * par_scale * reference.amp(k) + r_amps[k] * orth_scale;
    }
    StateVector::normalized(amps).expect("restored vector has unit norm")
}

fn descend(start: StateVector, phi: &StateVector, reference: &StateVector) -> f64 {
    let mut v = start;
    let mut f = overlap(&v, phi);
    let mut step = 0.5;
    let mut stall = 0;
    for _ in 0..MINIMIZER_MAX_ITERS {
        // Gradient of v^dag P v with P = |phi><phi| is 2 P v.
        let coeff = phi.inner(&v);
        let mut improved = false;
        for _ in 0..60 {
            let mut amps = [Complex64::ZERO; 4];
            for (k, amp) in amps.iter_mut().enumerate() {
                *amp = v.amp(k) - step * 2.0 * coeff * phi.amp(k);
            }
            if let Ok(cand) = StateVector::normalized(amps) {
                let cand = restore_feasibility(cand, reference);
                let fc = overlap(&cand, phi);
                if fc < f {
                    v = cand;
                    f = fc;
                    step = (step * 1.4).min(4.0);
                    improved = true;
                    break;
                }
            }
            step *= 0.35;
            if step < 1e-14 {
                break;
            }
        }
        if !improved {
            stall += 1;
            if stall >= 3 {
                break;
            }
            step = 0.5;
        } else {
            stall = 0;
        }
        if f < 1e-16 {
            break;
        }
    }
    f
}

/// Literal rejection sampler for the redistribution region: draw a Haar-random
/// state, require the reference overlap to clear the cap threshold, accept with
/// probability `z(phi) / (1/4)` and draw the hidden coordinate uniformly below
/// `z(phi)`.
///
/// Kept as the distributional reference for the factorized production sampler.
pub fn sample_e0_naive<R: Rng + ?Sized>(
    reference: &StateVector,
    rng: &mut R,
    cap: u64,
) -> Result<OnticState> {
    for _ in 0..cap {
        let phi = StateVector::haar_random(rng);
        let c2 = overlap(&phi, reference);
        if c2 <= 0.75 {
            continue;
        }
        let zv = crate::epistemic::z(&phi, reference);
        if rng.random::<f64>() * 0.25 >= zv {
            continue;
        }
        let tau = rng.random::<f64>() * zv;
        return OnticState::new(phi, tau);
    }
    Err(Error::RejectionCapExceeded { cap })
}
